#pragma once

#include <string>
#include <utility>
#include <vector>

#include "medfuse/error.hpp"
#include "medfuse/tape.hpp"
#include "medfuse/tensor.hpp"

namespace medfuse {

// Ordered named parameter tensors. Registration order is the canonical order
// for optimizer state, gradient merging and checkpoint layout.
class ParamStore {
public:
    std::size_t add(const std::string& name, Tensor t) {
        for (const auto& [n, _] : items_) {
            if (n == name) throw ConfigError("duplicate parameter name: " + name);
        }
        items_.emplace_back(name, std::move(t));
        return items_.size() - 1;
    }

    std::size_t size() const { return items_.size(); }
    const std::string& name(std::size_t i) const { return items_[i].first; }
    Tensor& tensor(std::size_t i) { return items_[i].second; }
    const Tensor& tensor(std::size_t i) const { return items_[i].second; }

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : items_) {
            if (n == name) return &t;
        }
        return nullptr;
    }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& [_, t] : items_) n += t.size();
        return n;
    }

    // One tape Var per parameter, in store order.
    std::vector<Var> tape_vars(Tape& tape) const {
        std::vector<Var> vars;
        vars.reserve(items_.size());
        for (const auto& [_, t] : items_) vars.push_back(tape.param(t));
        return vars;
    }

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

}  // namespace medfuse
