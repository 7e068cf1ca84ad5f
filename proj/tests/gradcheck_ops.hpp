#pragma once

// Randomized finite-difference gradient checks for every differentiable tape
// operation and for the end-to-end fusion forward pass. Shared between the
// unit suite (few instances) and the acceptance suite (100 instances per op).

#include <functional>
#include <string>
#include <vector>

#include "medfuse/cohort.hpp"
#include "medfuse/model.hpp"
#include "medfuse/rng.hpp"
#include "medfuse/tape.hpp"
#include "test_util.hpp"

namespace medfuse::testutil {

// Reduces any matrix to a scalar with nonuniform weights so gradients of
// every element are exercised.
inline Var weighted_sum(Tape& tape, Var x, Rng& rng) {
    const std::size_t r = tape.value(x).rows(), c = tape.value(x).cols();
    Tensor w = random_tensor(rng, c, 1, 0.3, 1.3);
    Tensor u = random_tensor(rng, 1, r, 0.3, 1.3);
    return tape.matmul(tape.leaf(std::move(u)), tape.matmul(x, tape.leaf(std::move(w))));
}

struct OpCheck {
    std::string name;
    std::function<void(Rng&)> run;  // one randomized instance
};

inline std::vector<OpCheck> op_gradchecks() {
    std::vector<OpCheck> checks;

    checks.push_back({"matmul", [](Rng& rng) {
        const std::size_t m = 1 + rng.below(4), k = 1 + rng.below(4), n = 1 + rng.below(4);
        grad_check({random_tensor(rng, m, k), random_tensor(rng, k, n)},
                   [&](Tape& t, const std::vector<Var>& v) {
                       Rng mix(7);
                       return weighted_sum(t, t.matmul(v[0], v[1]), mix);
                   });
    }});

    checks.push_back({"matmul_nt", [](Rng& rng) {
        const std::size_t m = 1 + rng.below(4), k = 1 + rng.below(4), n = 1 + rng.below(4);
        grad_check({random_tensor(rng, m, k), random_tensor(rng, n, k)},
                   [&](Tape& t, const std::vector<Var>& v) {
                       Rng mix(8);
                       return weighted_sum(t, t.matmul_nt(v[0], v[1]), mix);
                   });
    }});

    checks.push_back({"add", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(5);
        grad_check({random_tensor(rng, r, c), random_tensor(rng, r, c)},
                   [&](Tape& t, const std::vector<Var>& v) {
                       Rng mix(9);
                       return weighted_sum(t, t.add(v[0], v[1]), mix);
                   });
    }});

    checks.push_back({"add_rowvec", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(5);
        grad_check({random_tensor(rng, r, c), random_tensor(rng, 1, c)},
                   [&](Tape& t, const std::vector<Var>& v) {
                       Rng mix(10);
                       return weighted_sum(t, t.add_rowvec(v[0], v[1]), mix);
                   });
    }});

    checks.push_back({"mul", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(5);
        grad_check({random_tensor(rng, r, c), random_tensor(rng, r, c)},
                   [&](Tape& t, const std::vector<Var>& v) {
                       Rng mix(11);
                       return weighted_sum(t, t.mul(v[0], v[1]), mix);
                   });
    }});

    checks.push_back({"scale", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(5);
        const double alpha = rng.uniform(-1.5, 1.5);
        grad_check({random_tensor(rng, r, c)}, [&](Tape& t, const std::vector<Var>& v) {
            Rng mix(12);
            return weighted_sum(t, t.scale(v[0], alpha), mix);
        });
    }});

    checks.push_back({"relu", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(5);
        grad_check({random_tensor(rng, r, c)}, [&](Tape& t, const std::vector<Var>& v) {
            Rng mix(13);
            return weighted_sum(t, t.relu(v[0]), mix);
        });
    }});

    checks.push_back({"gelu", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(5);
        grad_check({random_tensor(rng, r, c)}, [&](Tape& t, const std::vector<Var>& v) {
            Rng mix(14);
            return weighted_sum(t, t.gelu(v[0]), mix);
        });
    }});

    checks.push_back({"softmax_rows", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(3), c = 2 + rng.below(4);
        grad_check({random_tensor(rng, r, c)}, [&](Tape& t, const std::vector<Var>& v) {
            Rng mix(15);
            return weighted_sum(t, t.softmax(v[0], 1), mix);
        });
    }});

    checks.push_back({"softmax_cols", [](Rng& rng) {
        const std::size_t r = 2 + rng.below(3), c = 1 + rng.below(4);
        grad_check({random_tensor(rng, r, c)}, [&](Tape& t, const std::vector<Var>& v) {
            Rng mix(16);
            return weighted_sum(t, t.softmax(v[0], 0), mix);
        });
    }});

    checks.push_back({"masked_softmax_rows", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(3), c = 2 + rng.below(5);
        std::vector<std::uint8_t> mask(c, 0);
        for (auto& m : mask) m = rng.bernoulli(0.7) ? 1 : 0;
        mask[rng.below(c)] = 1;  // at least one key
        grad_check({random_tensor(rng, r, c)}, [&, mask](Tape& t, const std::vector<Var>& v) {
            Rng mix(17);
            return weighted_sum(t, t.masked_softmax_rows(v[0], mask), mix);
        });
    }});

    checks.push_back({"layer_norm", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(3), c = 2 + rng.below(5);
        grad_check({random_tensor(rng, r, c), random_tensor(rng, 1, c), random_tensor(rng, 1, c)},
                   [&](Tape& t, const std::vector<Var>& v) {
                       Rng mix(18);
                       return weighted_sum(t, t.layer_norm(v[0], v[1], v[2], 1e-5), mix);
                   });
    }});

    checks.push_back({"embed", [](Rng& rng) {
        const std::size_t v_size = 3 + rng.below(4), d = 1 + rng.below(4);
        const std::size_t len = 1 + rng.below(5);
        std::vector<int> ids(len);
        for (auto& id : ids) id = static_cast<int>(rng.below(v_size));
        grad_check({random_tensor(rng, v_size, d)}, [&, ids](Tape& t, const std::vector<Var>& v) {
            Rng mix(19);
            return weighted_sum(t, t.embed(v[0], ids), mix);
        });
    }});

    checks.push_back({"slice_concat", [](Rng& rng) {
        const std::size_t r = 2 + rng.below(3), c = 3 + rng.below(4);
        grad_check({random_tensor(rng, r, c)}, [&](Tape& t, const std::vector<Var>& v) {
            Rng mix(20);
            Var left = t.slice_cols(v[0], 0, 2);
            Var rest = t.slice_cols(v[0], 1, t.value(v[0]).cols());
            Var rows = t.slice_rows(v[0], 0, 1);
            Var cat = t.concat_cols({left, rest});
            Var stacked = t.concat_rows({rows, t.slice_rows(v[0], r - 1, r)});
            return t.add(weighted_sum(t, cat, mix), weighted_sum(t, stacked, mix));
        });
    }});

    checks.push_back({"masked_mean_rows", [](Rng& rng) {
        const std::size_t r = 2 + rng.below(4), c = 1 + rng.below(4);
        std::vector<std::uint8_t> mask(r, 0);
        for (auto& m : mask) m = rng.bernoulli(0.6) ? 1 : 0;
        mask[rng.below(r)] = 1;
        grad_check({random_tensor(rng, r, c)}, [&, mask](Tape& t, const std::vector<Var>& v) {
            Rng mix(21);
            return weighted_sum(t, t.masked_mean_rows(v[0], mask), mix);
        });
    }});

    checks.push_back({"pick", [](Rng& rng) {
        const std::size_t r = 1 + rng.below(3), c = 1 + rng.below(4);
        const std::size_t pr = rng.below(r), pc = rng.below(c);
        grad_check({random_tensor(rng, r, c)}, [&](Tape& t, const std::vector<Var>& v) {
            return t.pick(v[0], pr, pc);
        });
    }});

    checks.push_back({"cross_entropy", [](Rng& rng) {
        const std::size_t b = 1 + rng.below(3), c = 2 + rng.below(4);
        std::vector<int> targets(b);
        for (auto& t : targets) t = static_cast<int>(rng.below(c));
        std::vector<double> weights(c);
        for (auto& w : weights) w = rng.uniform(0.5, 2.0);
        grad_check({random_tensor(rng, b, c)},
                   [&, targets, weights](Tape& t, const std::vector<Var>& v) {
                       return t.cross_entropy(v[0], targets, weights);
                   });
    }});

    return checks;
}

// Minimal fusion model on a 3-item catalog for end-to-end checks.
inline Model tiny_fusion_model(std::uint64_t seed, Task task = Task::binary) {
    ModelConfig cfg;
    cfg.mode = Mode::fusion;
    cfg.task = task;
    cfg.text.n_layers = 1;
    cfg.text.n_heads = 2;
    cfg.text.d_model = 4;
    cfg.text.ffn_mult = 2;
    cfg.text.max_len = 6;
    cfg.text.vocab_size = 32;
    cfg.fusion_heads = 2;
    cfg.head_hidden = 5;
    cfg.labs.hidden1 = 6;
    cfg.labs.hidden2 = 4;
    const std::vector<std::string> catalog{"Glucose AC", "HbA1c", "BUN"};
    Vocab vocab = Vocab::build({"glucose high thirst routine visit stable fatigue"}, 1, 32);
    NormStats stats;
    stats.mean.assign(catalog.size(), 0.0);
    stats.sd.assign(catalog.size(), 1.0);
    stats.count.assign(catalog.size(), 10);
    return init_model(cfg, std::move(vocab), std::move(stats), catalog, seed);
}

// Finite-difference check of d(loss)/d(params) through tokenized text, lab
// encoder, fusion attention and the classification head.
inline void fusion_e2e_gradcheck(std::uint64_t seed, double tol = 1e-4, double h = 1e-5) {
    Rng rng(Rng::mix(seed, "e2e"));
    Model model = tiny_fusion_model(rng.next_u64());

    TokenizedInput toks = tokenize("glucose high thirst fatigue", model.vocab, 6);
    LabVector lv;
    lv.values = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), 0.0};
    lv.mask = {1.0, 1.0, 0.0};
    const std::vector<int> targets{static_cast<int>(rng.below(2))};
    const std::vector<double> weights{1.0, 1.3};

    auto eval = [&]() {
        Tape tape;
        const std::vector<Var> vars = model.params.tape_vars(tape);
        const ForwardGraph g =
            model_forward_cached(tape, vars, model, std::nullopt, toks, std::nullopt, lv);
        return tape.value(tape.cross_entropy(g.logits, targets, weights)).item();
    };

    std::vector<Tensor> analytic;
    {
        Tape tape;
        const std::vector<Var> vars = model.params.tape_vars(tape);
        const ForwardGraph g =
            model_forward_cached(tape, vars, model, std::nullopt, toks, std::nullopt, lv);
        const Var loss = tape.cross_entropy(g.logits, targets, weights);
        tape.backward(loss);
        for (const Var v : vars) analytic.push_back(tape.grad(v));
    }

    for (std::size_t j = 0; j < model.params.size(); ++j) {
        Tensor& p = model.params.tensor(j);
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double saved = p.data()[k];
            p.data()[k] = saved + h;
            const double fp = eval();
            p.data()[k] = saved - h;
            const double fm = eval();
            p.data()[k] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double ad = analytic[j].data()[k];
            INFO("param ", model.params.name(j), " element ", k, ": analytic=", ad, " fd=", fd);
            CHECK(rel_err(ad, fd) < tol);
        }
    }
}

}  // namespace medfuse::testutil
