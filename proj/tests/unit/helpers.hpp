#pragma once

#include <functional>
#include <vector>

#include "sgcn/gradcheck.hpp"
#include "sgcn/tape.hpp"

namespace sgcn::test {

// Collapses x to a scalar via ones-vector products; keeps every entry on the
// gradient path with weight 1.
inline Tensor scalar_sum(Tape& t, const Tensor& x) {
    Tensor ones_left = t.leaf(Tensor::full(1, x.rows(), 1.0));
    Tensor ones_right = t.leaf(Tensor::full(x.cols(), 1, 1.0));
    return t.matmul(t.matmul(ones_left, x), ones_right);
}

// Weighted scalar reduction; distinct weights make gradient errors visible
// that a plain sum would cancel.
inline Tensor weighted_sum(Tape& t, const Tensor& x, const Tensor& w) {
    return scalar_sum(t, t.hadamard(x, t.leaf(w)));
}

// Runs the builder once for analytic gradients, then re-runs it inside the
// central-difference oracle. Returns the max relative error over all params.
inline double check_grad(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& build_loss,
    const std::vector<Tensor>& params, double eps = 1e-5) {
    Tape tape;
    std::vector<Tensor> bound;
    bound.reserve(params.size());
    for (const Tensor& p : params) bound.push_back(tape.leaf(p));
    Tensor loss = build_loss(tape, bound);
    tape.backward(loss);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const Tensor& b : bound) analytic.push_back(tape.grad(b));

    auto f = [&](const std::vector<Tensor>& p) {
        Tape t2;
        std::vector<Tensor> b2;
        b2.reserve(p.size());
        for (const Tensor& q : p) b2.push_back(t2.leaf(q));
        return build_loss(t2, b2).at(0);
    };
    return finite_diff_max_rel_error(f, params, analytic, eps);
}

} // namespace sgcn::test
