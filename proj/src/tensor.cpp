#include "sgcn/tensor.hpp"

#include <cmath>

namespace sgcn {

Tensor Tensor::glorot(int rows, int cols, Rng& rng) {
    double bound = std::sqrt(6.0 / (rows + cols));
    return uniform(rows, cols, -bound, bound, rng);
}

Tensor Tensor::uniform(int rows, int cols, double lo, double hi, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(rows) * cols);
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor(rows, cols, std::move(v));
}

} // namespace sgcn
