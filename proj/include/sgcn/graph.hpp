#pragma once

#include "sgcn/tape.hpp"

namespace sgcn {

/// Semantic interaction graph over the positional representations of both
/// arguments. Nodes 0..m-1 are the argument-1 positions, m..m+n-1 the
/// argument-2 positions; only cross-argument edges exist, plus self loops.
struct InteractionGraph {
    int m = 0;
    int n = 0;
    Tensor M;       // m x n cross weights (cosine), on the tape
    Tensor A_tilde; // (m+n)^2 adjacency with self loops; free value, for inspection
    Tensor A_hat;   // (m+n)^2 normalized adjacency, on the tape
    int degree_floor_hits = 0;
};

struct GcnParams {
    Tensor W_g; // d_h x d_g

    static GcnParams init(int d_h, int d_g, Rng& rng) {
        return GcnParams{Tensor::glorot(d_h, d_g, rng)};
    }
};

/// Cosine similarity of two row vectors, on the tape. Zero-norm vectors give
/// weight 0 with zero gradient.
Tensor edge_weight(Tape& tape, const Tensor& u, const Tensor& v);

/// Builds the interaction graph: cross weights, adjacency with self loops and
/// its symmetric normalization, all differentiable through the edge weights.
InteractionGraph build_graph(Tape& tape, const Tensor& h1, const Tensor& h2);

/// One graph convolution: relu(A_hat X W_g).
Tensor gcn_forward(Tape& tape, const InteractionGraph& g, const Tensor& x, const Tensor& w_g);

/// Pairwise cosine matrix between the rows of h1 and h2. Pure diagnostic:
/// plain values, never on a tape. Works for pre-GCN rows (giving M) and for
/// post-GCN rows (giving M').
Tensor interaction_matrix(const Tensor& h1, const Tensor& h2);

} // namespace sgcn
