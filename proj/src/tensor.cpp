#include "medfuse/tensor.hpp"

#include <cmath>

namespace medfuse {

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor transposed(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({c, r});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

}  // namespace medfuse
