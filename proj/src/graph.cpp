#include "sgcn/graph.hpp"

#include "sgcn/kernels.hpp"

namespace sgcn {

Tensor edge_weight(Tape& tape, const Tensor& u, const Tensor& v) {
    if (u.rows() != 1 || v.rows() != 1)
        throw ShapeError("edge_weight: expects row vectors, got " + u.shape_str() +
                         " and " + v.shape_str());
    return tape.cosine_rows(u, v);
}

InteractionGraph build_graph(Tape& tape, const Tensor& h1, const Tensor& h2) {
    if (h1.rows() < 1 || h2.rows() < 1)
        throw EmptyInputError("build_graph: empty argument " + h1.shape_str() + " / " +
                              h2.shape_str());
    InteractionGraph g;
    g.m = h1.rows();
    g.n = h2.rows();
    g.M = tape.cosine_rows(h1, h2);
    g.A_hat = tape.normalize_adjacency(g.M, &g.degree_floor_hits);

    int nn = g.m + g.n;
    std::vector<double> at(static_cast<std::size_t>(nn) * nn, 0.0);
    for (int p = 0; p < nn; ++p) at[static_cast<std::size_t>(p) * nn + p] = 1.0;
    for (int i = 0; i < g.m; ++i)
        for (int j = 0; j < g.n; ++j) {
            at[static_cast<std::size_t>(i) * nn + (g.m + j)] = g.M(i, j);
            at[static_cast<std::size_t>(g.m + j) * nn + i] = g.M(i, j);
        }
    g.A_tilde = Tensor(nn, nn, std::move(at));
    return g;
}

Tensor gcn_forward(Tape& tape, const InteractionGraph& g, const Tensor& x, const Tensor& w_g) {
    if (x.rows() != g.m + g.n)
        throw ShapeError("gcn_forward: node features " + x.shape_str() + " do not match " +
                         std::to_string(g.m + g.n) + " graph nodes");
    // A_hat (X W_g): projecting before the neighbor sum is the cheaper
    // association whenever d_g < d_h.
    return tape.relu(tape.matmul(g.A_hat, tape.matmul(x, w_g)));
}

Tensor interaction_matrix(const Tensor& h1, const Tensor& h2) {
    if (h1.cols() != h2.cols())
        throw ShapeError("interaction_matrix: width mismatch " + h1.shape_str() + " vs " +
                         h2.shape_str());
    if (h1.rows() < 1 || h2.rows() < 1)
        throw EmptyInputError("interaction_matrix: empty input");
    std::vector<double> out(static_cast<std::size_t>(h1.rows()) * h2.rows());
    kernels::cosine_matrix(h1.values().data(), h2.values().data(), out.data(),
                           h1.rows(), h2.rows(), h1.cols(), nullptr, nullptr, kNormFloor);
    return Tensor(h1.rows(), h2.rows(), std::move(out));
}

} // namespace sgcn
