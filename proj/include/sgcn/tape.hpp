#pragma once

#include <cstdint>
#include <vector>

#include "sgcn/tensor.hpp"

namespace sgcn {

enum class PoolKind { Max, Mean };

// Row vectors with L2 norm below this are treated as having cosine 0 against
// everything, with zero gradient.
constexpr double kNormFloor = 1e-12;

// Degrees are clamped to at least this before the inverse square root; cosine
// edge weights can be negative, so raw degrees can reach zero or below. The
// floor also bounds the normalizer at 1/sqrt(floor) = 2 per endpoint: with a
// tiny floor the optimizer drives degrees into the clamp to amplify features
// by orders of magnitude, which destabilizes training past recovery.
constexpr double kDegreeFloor = 0.25;

/// Define-by-run reverse-mode tape. One tape records one forward pass; it is
/// rebuilt per example, which keeps variable-length sequences trivial. A tape
/// must only ever be driven from a single thread.
///
/// Operations auto-lift free tensors (no tape handle) onto the tape as leaves.
/// Gradients of a node used several times sum across uses.
class Tape {
public:
    Tape();

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a value as a leaf node (parameters, inputs).
    Tensor leaf(const Tensor& t);

    Tensor matmul(const Tensor& a, const Tensor& b);

    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor hadamard(const Tensor& a, const Tensor& b);

    Tensor sigmoid(const Tensor& x);
    Tensor tanh(const Tensor& x);
    Tensor relu(const Tensor& x);

    /// Columns of a followed by columns of b.
    Tensor concat_cols(const Tensor& a, const Tensor& b);

    /// All inputs stacked top to bottom; column counts must agree.
    Tensor stack_rows(const std::vector<Tensor>& parts);

    /// Rows [begin, end) of x.
    Tensor slice_rows(const Tensor& x, int begin, int end);

    /// Column-wise max or mean over rows, giving a 1 x cols tensor. Max ties
    /// break toward the first row; its backward routes the gradient there.
    Tensor pool_rows(PoolKind kind, const Tensor& x);

    /// Scalar loss log(sum exp(z)) - z_label, computed with max subtraction.
    Tensor softmax_cross_entropy(const Tensor& logits, int label);

    /// out(i,j) = cosine of row i of h1 and row j of h2. Zero-norm rows give
    /// entries of exactly 0 that pass no gradient.
    Tensor cosine_rows(const Tensor& h1, const Tensor& h2);

    /// Symmetric-normalized adjacency D^{-1/2} (A+I) D^{-1/2} of the two-block
    /// interaction graph whose cross block is m_block. floor_hits, when given,
    /// receives the number of degree clamps.
    Tensor normalize_adjacency(const Tensor& m_block, int* floor_hits = nullptr);

    /// Row lookup: out row r = table row indices[r]. Backward scatter-adds,
    /// so repeated indices accumulate.
    Tensor gather_rows(const Tensor& table, const std::vector<int>& indices);

    /// Marks a node as not needing a gradient; row lookups into it skip the
    /// backward scatter. Used for frozen embedding tables, whose full-size
    /// gradient buffer would dwarf everything else on the tape.
    void mark_no_grad(const Tensor& t);

    /// Reverse-topological gradient accumulation from a scalar loss node.
    void backward(const Tensor& loss);

    /// Gradient of the last backward() w.r.t. t; zeros if t was not reached.
    Tensor grad(const Tensor& t) const;

    int num_nodes() const { return static_cast<int>(nodes_.size()); }

private:
    enum class Op {
        Leaf, MatMul, Add, Sub, Hadamard, Sigmoid, Tanh, Relu,
        ConcatCols, StackRows, SliceRows, PoolMax, PoolMean,
        SoftmaxXent, CosineRows, NormalizeAdjacency, GatherRows
    };

    struct Node {
        Op op;
        std::vector<int> in;
        Tensor out;
        std::vector<int> ints;     // label / slice bounds / argmax rows / gather indices
        std::vector<double> saved; // norms, raw degrees, softmax probabilities
        bool no_grad = false;
    };

    int ensure_node(const Tensor& t);
    Tensor record(Op op, std::vector<int> in, Tensor out,
                  std::vector<int> ints = {}, std::vector<double> saved = {});
    std::vector<double>& grad_buf(int id);
    void backprop_node(int id);

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    bool has_grads_ = false;
    std::uint64_t id_;
};

} // namespace sgcn
