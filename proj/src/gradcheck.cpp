#include "sgcn/gradcheck.hpp"

#include <cmath>

namespace sgcn {

double finite_diff_max_rel_error(
    const std::function<double(const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& params,
    const std::vector<Tensor>& analytic,
    double eps) {
    if (eps <= 0.0) throw ContractError("finite_diff: eps must be positive");
    if (params.size() != analytic.size())
        throw ContractError("finite_diff: analytic gradient count mismatch");

    auto eval = [&](const std::vector<Tensor>& p) {
        double v = f(p);
        if (!std::isfinite(v))
            throw NumericError("finite_diff: objective evaluated to a non-finite value");
        return v;
    };

    double max_rel = 0.0;
    std::vector<Tensor> probe = params;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        if (!params[pi].same_shape(analytic[pi]))
            throw ShapeError("finite_diff: gradient shape " + analytic[pi].shape_str() +
                             " does not match parameter " + params[pi].shape_str());
        for (std::size_t i = 0; i < params[pi].size(); ++i) {
            double v = params[pi].at(i);
            probe[pi] = params[pi].with_value(i, v + eps);
            double up = eval(probe);
            probe[pi] = params[pi].with_value(i, v - eps);
            double down = eval(probe);
            probe[pi] = params[pi];
            double numeric = (up - down) / (2.0 * eps);
            double a = analytic[pi].at(i);
            double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

} // namespace sgcn
