#include "medfuse/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "medfuse/kernels.hpp"

namespace medfuse {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&)> backfn) {
    nodes_.push_back(Node{std::move(value), nullptr, Tensor(), std::move(backfn)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) {
    if (value.rank() != 2) throw ShapeError("tape values must be rank 2, got " + value.shape_str());
    return push(std::move(value), nullptr);
}

Var Tape::param(const Tensor& external) {
    if (external.rank() != 2) {
        throw ShapeError("tape values must be rank 2, got " + external.shape_str());
    }
    nodes_.push_back(Node{Tensor(), &external, Tensor(), nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
        n.grad = Tensor::zeros(node_value(id).shape());
    }
    return n.grad;
}

const Tensor& Tape::grad(Var v) {
    return grad_buf(check(v));
}

void Tape::backward(Var loss) {
    const int loss_id = check(loss);
    if (!node_value(loss_id).is_scalar()) {
        throw ContractError("backward: loss must be scalar, got shape " +
                            node_value(loss_id).shape_str());
    }
    for (Node& n : nodes_) n.grad = Tensor();
    grad_buf(loss_id).data()[0] = 1.0;
    for (int id = loss_id; id >= 0; --id) {
        if (nodes_[id].backfn && has_grad(id)) {
            nodes_[id].backfn(*this);
        }
    }
}

Var Tape::matmul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Tensor& va = node_value(ia);
    const Tensor& vb = node_value(ib);
    if (va.cols() != vb.rows()) {
        throw ShapeError("matmul: inner dimensions differ: " + va.shape_str() + " vs " +
                         vb.shape_str());
    }
    const std::size_t m = va.rows(), k = va.cols(), n = vb.cols();
    Tensor out = Tensor::zeros({m, n});
    kernels::ops().mm_acc(va.data(), vb.data(), out.data(), m, k, n);
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, ib, io, m, k, n](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        const Tensor bt = transposed(t.node_value(ib));
        kernels::ops().mm_acc(dc.data(), bt.data(), t.grad_buf(ia).data(), m, n, k);
        const Tensor at = transposed(t.node_value(ia));
        kernels::ops().mm_acc(at.data(), dc.data(), t.grad_buf(ib).data(), k, m, n);
    };
    return res;
}

Var Tape::matmul_nt(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Tensor& va = node_value(ia);
    const Tensor& vb = node_value(ib);
    if (va.cols() != vb.cols()) {
        throw ShapeError("matmul_nt: inner dimensions differ: " + va.shape_str() + " vs " +
                         vb.shape_str() + "^T");
    }
    const std::size_t m = va.rows(), k = va.cols(), n = vb.rows();
    Tensor bt = transposed(vb);  // [k x n]
    Tensor out = Tensor::zeros({m, n});
    kernels::ops().mm_acc(va.data(), bt.data(), out.data(), m, k, n);
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, ib, io, m, k, n](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;  // [m x n]
        kernels::ops().mm_acc(dc.data(), t.node_value(ib).data(), t.grad_buf(ia).data(), m, n, k);
        const Tensor dct = transposed(dc);  // [n x m]
        kernels::ops().mm_acc(dct.data(), t.node_value(ia).data(), t.grad_buf(ib).data(), n, m, k);
    };
    return res;
}

Var Tape::add(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Tensor& va = node_value(ia);
    const Tensor& vb = node_value(ib);
    if (!va.same_shape(vb)) {
        throw ShapeError("add: shape mismatch: " + va.shape_str() + " vs " + vb.shape_str());
    }
    Tensor out = Tensor::zeros(va.shape());
    kernels::ops().add(va.data(), vb.data(), out.data(), out.size());
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, ib, io](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        kernels::ops().axpy(1.0, dc.data(), t.grad_buf(ia).data(), dc.size());
        kernels::ops().axpy(1.0, dc.data(), t.grad_buf(ib).data(), dc.size());
    };
    return res;
}

Var Tape::add_rowvec(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Tensor& va = node_value(ia);
    const Tensor& vb = node_value(ib);
    if (vb.rows() != 1 || vb.cols() != va.cols()) {
        throw ShapeError("add_rowvec: " + va.shape_str() + " + " + vb.shape_str());
    }
    const std::size_t r = va.rows(), c = va.cols();
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        kernels::ops().add(va.data() + i * c, vb.data(), out.data() + i * c, c);
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, ib, io, r, c](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        kernels::ops().axpy(1.0, dc.data(), t.grad_buf(ia).data(), dc.size());
        double* db = t.grad_buf(ib).data();
        for (std::size_t i = 0; i < r; ++i) {
            kernels::ops().axpy(1.0, dc.data() + i * c, db, c);
        }
    };
    return res;
}

Var Tape::mul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Tensor& va = node_value(ia);
    const Tensor& vb = node_value(ib);
    if (!va.same_shape(vb)) {
        throw ShapeError("mul: shape mismatch: " + va.shape_str() + " vs " + vb.shape_str());
    }
    Tensor out = Tensor::zeros(va.shape());
    kernels::ops().mul(va.data(), vb.data(), out.data(), out.size());
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, ib, io](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        const std::size_t n = dc.size();
        std::vector<double> tmp(n);
        kernels::ops().mul(dc.data(), t.node_value(ib).data(), tmp.data(), n);
        kernels::ops().add(t.grad_buf(ia).data(), tmp.data(), t.grad_buf(ia).data(), n);
        kernels::ops().mul(dc.data(), t.node_value(ia).data(), tmp.data(), n);
        kernels::ops().add(t.grad_buf(ib).data(), tmp.data(), t.grad_buf(ib).data(), n);
    };
    return res;
}

Var Tape::scale(Var a, double alpha) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    Tensor out = Tensor::zeros(va.shape());
    kernels::ops().scale(alpha, va.data(), out.data(), out.size());
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, io, alpha](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        kernels::ops().axpy(alpha, dc.data(), t.grad_buf(ia).data(), dc.size());
    };
    return res;
}

Var Tape::relu(Var a) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    Tensor out = Tensor::zeros(va.shape());
    kernels::ops().relu(va.data(), out.data(), out.size());
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, io](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        kernels::ops().relu_grad_acc(t.node_value(ia).data(), dc.data(),
                                     t.grad_buf(ia).data(), dc.size());
    };
    return res;
}

Var Tape::gelu(Var a) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    Tensor out = Tensor::zeros(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = va.data()[i];
        out.data()[i] = x * 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, io](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        const double* x = t.node_value(ia).data();
        double* da = t.grad_buf(ia).data();
        for (std::size_t i = 0; i < dc.size(); ++i) {
            const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x[i] * x[i]);
            da[i] += dc.data()[i] * (cdf + x[i] * pdf);
        }
    };
    return res;
}

namespace {

void check_finite_for_softmax(const Tensor& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (std::isnan(v.data()[i])) throw NumericError("softmax: NaN in input");
    }
}

}  // namespace

Var Tape::softmax(Var a, int axis) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    if (axis != 0 && axis != 1) throw ConfigError("softmax: axis must be 0 or 1");
    check_finite_for_softmax(va);
    const std::size_t r = va.rows(), c = va.cols();
    Tensor out = Tensor::zeros({r, c});
    const std::size_t outer = axis == 1 ? r : c;
    const std::size_t inner = axis == 1 ? c : r;
    auto idx = [&](std::size_t o, std::size_t i) { return axis == 1 ? o * c + i : i * c + o; };
    for (std::size_t o = 0; o < outer; ++o) {
        double mx = va.data()[idx(o, 0)];
        for (std::size_t i = 1; i < inner; ++i) mx = std::max(mx, va.data()[idx(o, i)]);
        double sum = 0.0;
        for (std::size_t i = 0; i < inner; ++i) {
            const double e = std::exp(va.data()[idx(o, i)] - mx);
            out.data()[idx(o, i)] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t i = 0; i < inner; ++i) out.data()[idx(o, i)] *= inv;
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, io, axis, r, c](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        const Tensor& y = t.node_value(io);
        double* da = t.grad_buf(ia).data();
        const std::size_t outer = axis == 1 ? r : c;
        const std::size_t inner = axis == 1 ? c : r;
        auto idx = [&](std::size_t o, std::size_t i) { return axis == 1 ? o * c + i : i * c + o; };
        for (std::size_t o = 0; o < outer; ++o) {
            double s = 0.0;
            for (std::size_t i = 0; i < inner; ++i) {
                s += dc.data()[idx(o, i)] * y.data()[idx(o, i)];
            }
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t p = idx(o, i);
                da[p] += y.data()[p] * (dc.data()[p] - s);
            }
        }
    };
    return res;
}

Var Tape::masked_softmax_rows(Var a, const std::vector<std::uint8_t>& key_mask) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    const std::size_t r = va.rows(), c = va.cols();
    if (key_mask.size() != c) {
        throw ShapeError("masked_softmax_rows: mask length " + std::to_string(key_mask.size()) +
                         " vs " + std::to_string(c) + " columns");
    }
    std::size_t live = 0;
    for (auto m : key_mask) live += m ? 1 : 0;
    if (live == 0) throw DataError("masked_softmax_rows: all key positions masked");
    check_finite_for_softmax(va);
    Tensor out = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        double mx = -1e300;
        for (std::size_t j = 0; j < c; ++j) {
            if (key_mask[j] && va.at(i, j) > mx) mx = va.at(i, j);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (!key_mask[j]) continue;
            const double e = std::exp(va.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < c; ++j) {
            if (key_mask[j]) out.at(i, j) *= inv;  // masked entries stay exactly 0
        }
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    auto mask = key_mask;
    nodes_[io].backfn = [ia, io, r, c, mask = std::move(mask)](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        const Tensor& y = t.node_value(io);
        Tensor& da = t.grad_buf(ia);
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += dc.at(i, j) * y.at(i, j);
            for (std::size_t j = 0; j < c; ++j) {
                if (mask[j]) da.at(i, j) += y.at(i, j) * (dc.at(i, j) - s);
            }
        }
    };
    return res;
}

Var Tape::layer_norm(Var a, Var gamma, Var beta, double eps) {
    const int ia = check(a), ig = check(gamma), ib = check(beta);
    if (eps <= 0.0) throw ConfigError("layer_norm: eps must be positive");
    const Tensor& va = node_value(ia);
    const std::size_t r = va.rows(), c = va.cols();
    const Tensor& vg = node_value(ig);
    const Tensor& vb = node_value(ib);
    if (vg.rows() != 1 || vg.cols() != c || vb.rows() != 1 || vb.cols() != c) {
        throw ShapeError("layer_norm: gamma/beta must be [1 x " + std::to_string(c) + "]");
    }
    Tensor out = Tensor::zeros({r, c});
    auto xhat = std::make_shared<std::vector<double>>(r * c);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    for (std::size_t i = 0; i < r; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < c; ++j) mean += va.at(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = va.at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = inv;
        for (std::size_t j = 0; j < c; ++j) {
            const double xh = (va.at(i, j) - mean) * inv;
            (*xhat)[i * c + j] = xh;
            out.at(i, j) = vg.data()[j] * xh + vb.data()[j];
        }
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, ig, ib, io, r, c, xhat, inv_std](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        const Tensor& vg = t.node_value(ig);
        Tensor& da = t.grad_buf(ia);
        Tensor& dg = t.grad_buf(ig);
        Tensor& db = t.grad_buf(ib);
        for (std::size_t i = 0; i < r; ++i) {
            double m1 = 0.0, m2 = 0.0;  // mean(dxhat), mean(dxhat * xhat)
            for (std::size_t j = 0; j < c; ++j) {
                const double dxh = dc.at(i, j) * vg.data()[j];
                const double xh = (*xhat)[i * c + j];
                m1 += dxh;
                m2 += dxh * xh;
                dg.data()[j] += dc.at(i, j) * xh;
                db.data()[j] += dc.at(i, j);
            }
            m1 /= static_cast<double>(c);
            m2 /= static_cast<double>(c);
            const double inv = (*inv_std)[i];
            for (std::size_t j = 0; j < c; ++j) {
                const double dxh = dc.at(i, j) * vg.data()[j];
                const double xh = (*xhat)[i * c + j];
                da.at(i, j) += inv * (dxh - m1 - xh * m2);
            }
        }
    };
    return res;
}

Var Tape::embed(Var table, const std::vector<int>& ids) {
    const int it = check(table);
    const Tensor& vt = node_value(it);
    const std::size_t v = vt.rows(), d = vt.cols();
    if (ids.empty()) throw DataError("embed: empty id sequence");
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= v) {
            throw IndexError("embed: id " + std::to_string(id) + " outside vocabulary of size " +
                             std::to_string(v));
        }
    }
    Tensor out = Tensor::zeros({ids.size(), d});
    for (std::size_t p = 0; p < ids.size(); ++p) {
        const double* src = vt.data() + static_cast<std::size_t>(ids[p]) * d;
        std::copy(src, src + d, out.data() + p * d);
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    auto ids_copy = ids;
    nodes_[io].backfn = [it, io, d, ids = std::move(ids_copy)](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        double* dt = t.grad_buf(it).data();
        for (std::size_t p = 0; p < ids.size(); ++p) {
            kernels::ops().axpy(1.0, dc.data() + p * d,
                                dt + static_cast<std::size_t>(ids[p]) * d, d);
        }
    };
    return res;
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    const std::size_t r = va.rows(), c = va.cols();
    if (c0 >= c1 || c1 > c) throw ShapeError("slice_cols: bad range");
    const std::size_t w = c1 - c0;
    Tensor out = Tensor::zeros({r, w});
    for (std::size_t i = 0; i < r; ++i) {
        std::copy(va.data() + i * c + c0, va.data() + i * c + c1, out.data() + i * w);
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, io, c0, w, r, c](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        double* da = t.grad_buf(ia).data();
        for (std::size_t i = 0; i < r; ++i) {
            kernels::ops().axpy(1.0, dc.data() + i * w, da + i * c + c0, w);
        }
    };
    return res;
}

Var Tape::slice_rows(Var a, std::size_t r0, std::size_t r1) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    const std::size_t r = va.rows(), c = va.cols();
    if (r0 >= r1 || r1 > r) throw ShapeError("slice_rows: bad range");
    const std::size_t h = r1 - r0;
    Tensor out = Tensor::zeros({h, c});
    std::copy(va.data() + r0 * c, va.data() + r1 * c, out.data());
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ia, io, r0, h, c](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        kernels::ops().axpy(1.0, dc.data(), t.grad_buf(ia).data() + r0 * c, h * c);
    };
    return res;
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat_cols: no inputs");
    std::vector<int> ids;
    std::size_t r = node_value(check(xs[0])).rows();
    std::size_t total = 0;
    for (Var x : xs) {
        const int id = check(x);
        const Tensor& v = node_value(id);
        if (v.rows() != r) throw ShapeError("concat_cols: row count mismatch");
        total += v.cols();
        ids.push_back(id);
    }
    Tensor out = Tensor::zeros({r, total});
    std::size_t off = 0;
    for (int id : ids) {
        const Tensor& v = node_value(id);
        for (std::size_t i = 0; i < r; ++i) {
            std::copy(v.data() + i * v.cols(), v.data() + (i + 1) * v.cols(),
                      out.data() + i * total + off);
        }
        off += v.cols();
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ids, io, r, total](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        std::size_t off = 0;
        for (int id : ids) {
            Tensor& da = t.grad_buf(id);
            const std::size_t w = da.cols();
            for (std::size_t i = 0; i < r; ++i) {
                kernels::ops().axpy(1.0, dc.data() + i * total + off, da.data() + i * w, w);
            }
            off += w;
        }
    };
    return res;
}

Var Tape::concat_rows(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("concat_rows: no inputs");
    std::vector<int> ids;
    std::size_t c = node_value(check(xs[0])).cols();
    std::size_t total = 0;
    for (Var x : xs) {
        const int id = check(x);
        const Tensor& v = node_value(id);
        if (v.cols() != c) throw ShapeError("concat_rows: column count mismatch");
        total += v.rows();
        ids.push_back(id);
    }
    Tensor out = Tensor::zeros({total, c});
    std::size_t off = 0;
    for (int id : ids) {
        const Tensor& v = node_value(id);
        std::copy(v.data(), v.data() + v.size(), out.data() + off * c);
        off += v.rows();
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_[io].backfn = [ids, io, c](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        std::size_t off = 0;
        for (int id : ids) {
            Tensor& da = t.grad_buf(id);
            kernels::ops().axpy(1.0, dc.data() + off * c, da.data(), da.size());
            off += da.rows();
        }
    };
    return res;
}

Var Tape::masked_mean_rows(Var a, const std::vector<std::uint8_t>& row_mask) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    const std::size_t r = va.rows(), c = va.cols();
    if (row_mask.size() != r) {
        throw ShapeError("masked_mean_rows: mask length " + std::to_string(row_mask.size()) +
                         " vs " + std::to_string(r) + " rows");
    }
    std::size_t count = 0;
    for (auto m : row_mask) count += m ? 1 : 0;
    if (count == 0) throw DataError("masked_mean_rows: no unmasked rows");
    Tensor out = Tensor::zeros({1, c});
    for (std::size_t i = 0; i < r; ++i) {
        if (row_mask[i]) kernels::ops().axpy(1.0, va.data() + i * c, out.data(), c);
    }
    const double inv = 1.0 / static_cast<double>(count);
    kernels::ops().scale(inv, out.data(), out.data(), c);
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    auto mask = row_mask;
    nodes_[io].backfn = [ia, io, r, c, inv, mask = std::move(mask)](Tape& t) {
        const Tensor& dc = t.nodes_[io].grad;
        double* da = t.grad_buf(ia).data();
        for (std::size_t i = 0; i < r; ++i) {
            if (mask[i]) kernels::ops().axpy(inv, dc.data(), da + i * c, c);
        }
    };
    return res;
}

Var Tape::mean_rows(Var a) {
    const std::size_t r = node_value(check(a)).rows();
    return masked_mean_rows(a, std::vector<std::uint8_t>(r, 1));
}

Var Tape::pick(Var a, std::size_t r, std::size_t c) {
    const int ia = check(a);
    const Tensor& va = node_value(ia);
    if (r >= va.rows() || c >= va.cols()) {
        throw IndexError("pick: (" + std::to_string(r) + "," + std::to_string(c) +
                         ") outside " + va.shape_str());
    }
    Var res = push(Tensor::scalar(va.at(r, c)), nullptr);
    const int io = res.id;
    const std::size_t cols = va.cols();
    nodes_[io].backfn = [ia, io, r, c, cols](Tape& t) {
        t.grad_buf(ia).data()[r * cols + c] += t.nodes_[io].grad.data()[0];
    };
    return res;
}

Var Tape::cross_entropy(Var logits, const std::vector<int>& targets,
                        const std::vector<double>& class_weights) {
    const int il = check(logits);
    const Tensor& vl = node_value(il);
    const std::size_t b = vl.rows(), nc = vl.cols();
    if (targets.size() != b) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(b) + " rows");
    }
    if (!class_weights.empty() && class_weights.size() != nc) {
        throw ConfigError("cross_entropy: expected " + std::to_string(nc) + " class weights");
    }
    for (int tgt : targets) {
        if (tgt < 0 || static_cast<std::size_t>(tgt) >= nc) {
            throw IndexError("cross_entropy: target " + std::to_string(tgt) +
                             " outside [0, " + std::to_string(nc) + ")");
        }
    }
    auto probs = std::make_shared<Tensor>(Tensor::zeros({b, nc}));
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        double mx = vl.at(i, 0);
        for (std::size_t j = 1; j < nc; ++j) mx = std::max(mx, vl.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < nc; ++j) {
            const double e = std::exp(vl.at(i, j) - mx);
            probs->at(i, j) = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < nc; ++j) probs->at(i, j) *= inv;
        const double w = class_weights.empty() ? 1.0 : class_weights[targets[i]];
        const double logp = vl.at(i, targets[i]) - mx - std::log(sum);
        loss += w * (-logp);
    }
    loss /= static_cast<double>(b);
    Var res = push(Tensor::scalar(loss), nullptr);
    const int io = res.id;
    auto tgts = targets;
    auto wts = class_weights;
    nodes_[io].backfn = [il, io, b, nc, probs, tgts = std::move(tgts),
                         wts = std::move(wts)](Tape& t) {
        const double dloss = t.nodes_[io].grad.data()[0];
        Tensor& dl = t.grad_buf(il);
        const double invb = 1.0 / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i) {
            const double w = wts.empty() ? 1.0 : wts[tgts[i]];
            const double f = dloss * w * invb;
            for (std::size_t j = 0; j < nc; ++j) {
                const double onehot = (static_cast<std::size_t>(tgts[i]) == j) ? 1.0 : 0.0;
                dl.at(i, j) += f * (probs->at(i, j) - onehot);
            }
        }
    };
    return res;
}

}  // namespace medfuse
