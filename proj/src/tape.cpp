#include "sgcn/tape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "sgcn/kernels.hpp"

namespace sgcn {

namespace {

std::atomic<std::uint64_t> g_tape_counter{1};

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
}

} // namespace

Tape::Tape() : id_(g_tape_counter.fetch_add(1)) {}

int Tape::ensure_node(const Tensor& t) {
    if (t.on_tape()) {
        if (t.tape_id_ != id_)
            throw ContractError("Tape: tensor belongs to a different tape");
        return t.node();
    }
    // Free value: lift it as an anonymous leaf.
    Node n{Op::Leaf, {}, t, {}, {}};
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::record(Op op, std::vector<int> in, Tensor out,
                    std::vector<int> ints, std::vector<double> saved) {
    Node n{op, std::move(in), std::move(out), std::move(ints), std::move(saved)};
    nodes_.push_back(std::move(n));
    int id = static_cast<int>(nodes_.size()) - 1;
    Tensor bound = nodes_.back().out;
    bound.node_ = id;
    bound.tape_id_ = id_;
    nodes_.back().out = bound;
    return bound;
}

Tensor Tape::leaf(const Tensor& t) {
    if (t.on_tape() && t.tape_id_ == id_) return t;
    Tensor free = t;
    free.node_ = -1;
    return record(Op::Leaf, {}, free);
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
    int ia = ensure_node(a), ib = ensure_node(b);
    std::vector<double> out(static_cast<std::size_t>(a.rows()) * b.cols());
    kernels::matmul(a.values().data(), b.values().data(), out.data(),
                    a.rows(), a.cols(), b.cols());
    return record(Op::MatMul, {ia, ib}, Tensor(a.rows(), b.cols(), std::move(out)));
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    int ia = ensure_node(a), ib = ensure_node(b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
    return record(Op::Add, {ia, ib}, Tensor(a.rows(), a.cols(), std::move(out)));
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    int ia = ensure_node(a), ib = ensure_node(b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
    return record(Op::Sub, {ia, ib}, Tensor(a.rows(), a.cols(), std::move(out)));
}

Tensor Tape::hadamard(const Tensor& a, const Tensor& b) {
    check_same_shape("hadamard", a, b);
    int ia = ensure_node(a), ib = ensure_node(b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
    return record(Op::Hadamard, {ia, ib}, Tensor(a.rows(), a.cols(), std::move(out)));
}

Tensor Tape::sigmoid(const Tensor& x) {
    int ix = ensure_node(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = x.at(i);
        // Evaluate through exp(-|v|) so neither branch can overflow.
        if (v >= 0.0) {
            double e = std::exp(-v);
            out[i] = 1.0 / (1.0 + e);
        } else {
            double e = std::exp(v);
            out[i] = e / (1.0 + e);
        }
    }
    return record(Op::Sigmoid, {ix}, Tensor(x.rows(), x.cols(), std::move(out)));
}

Tensor Tape::tanh(const Tensor& x) {
    int ix = ensure_node(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.at(i));
    return record(Op::Tanh, {ix}, Tensor(x.rows(), x.cols(), std::move(out)));
}

Tensor Tape::relu(const Tensor& x) {
    int ix = ensure_node(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) > 0.0 ? x.at(i) : 0.0;
    return record(Op::Relu, {ix}, Tensor(x.rows(), x.cols(), std::move(out)));
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows())
        throw ShapeError("concat_cols: row mismatch " + a.shape_str() + " vs " + b.shape_str());
    int ia = ensure_node(a), ib = ensure_node(b);
    int r = a.rows(), ca = a.cols(), cb = b.cols();
    std::vector<double> out(static_cast<std::size_t>(r) * (ca + cb));
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < ca; ++j) out[static_cast<std::size_t>(i) * (ca + cb) + j] = a(i, j);
        for (int j = 0; j < cb; ++j) out[static_cast<std::size_t>(i) * (ca + cb) + ca + j] = b(i, j);
    }
    return record(Op::ConcatCols, {ia, ib}, Tensor(r, ca + cb, std::move(out)));
}

Tensor Tape::stack_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw EmptyInputError("stack_rows: no inputs");
    int c = parts[0].cols();
    int total = 0;
    std::vector<int> in;
    in.reserve(parts.size());
    for (const Tensor& p : parts) {
        if (p.cols() != c)
            throw ShapeError("stack_rows: column mismatch " + p.shape_str() + " vs " +
                             parts[0].shape_str());
        total += p.rows();
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total) * c);
    for (const Tensor& p : parts) {
        in.push_back(ensure_node(p));
        out.insert(out.end(), p.values().begin(), p.values().end());
    }
    return record(Op::StackRows, std::move(in), Tensor(total, c, std::move(out)));
}

Tensor Tape::slice_rows(const Tensor& x, int begin, int end) {
    if (begin < 0 || end > x.rows() || begin >= end)
        throw IndexError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") out of " + x.shape_str());
    int ix = ensure_node(x);
    int c = x.cols();
    std::vector<double> out(x.values().begin() + static_cast<std::size_t>(begin) * c,
                            x.values().begin() + static_cast<std::size_t>(end) * c);
    return record(Op::SliceRows, {ix}, Tensor(end - begin, c, std::move(out)), {begin, end});
}

Tensor Tape::pool_rows(PoolKind kind, const Tensor& x) {
    if (x.rows() < 1) throw EmptyInputError("pool_rows: empty input " + x.shape_str());
    int ix = ensure_node(x);
    int r = x.rows(), c = x.cols();
    std::vector<double> out(c);
    if (kind == PoolKind::Max) {
        std::vector<int> argmax(c, 0);
        for (int j = 0; j < c; ++j) {
            double best = x(0, j);
            for (int i = 1; i < r; ++i)
                if (x(i, j) > best) { best = x(i, j); argmax[j] = i; }
            out[j] = best;
        }
        return record(Op::PoolMax, {ix}, Tensor(1, c, std::move(out)), std::move(argmax));
    }
    for (int j = 0; j < c; ++j) {
        double s = 0.0;
        for (int i = 0; i < r; ++i) s += x(i, j);
        out[j] = s / r;
    }
    return record(Op::PoolMean, {ix}, Tensor(1, c, std::move(out)));
}

Tensor Tape::softmax_cross_entropy(const Tensor& logits, int label) {
    if (logits.rows() != 1)
        throw ShapeError("softmax_cross_entropy: logits must be 1xC, got " + logits.shape_str());
    int c = logits.cols();
    if (label < 0 || label >= c)
        throw IndexError("softmax_cross_entropy: label " + std::to_string(label) +
                         " out of range [0, " + std::to_string(c) + ")");
    int il = ensure_node(logits);
    double zmax = logits.at(0);
    for (int j = 1; j < c; ++j) zmax = std::max(zmax, logits.at(j));
    double sum = 0.0;
    std::vector<double> probs(c);
    for (int j = 0; j < c; ++j) {
        probs[j] = std::exp(logits.at(j) - zmax);
        sum += probs[j];
    }
    for (int j = 0; j < c; ++j) probs[j] /= sum;
    double loss = std::log(sum) + zmax - logits.at(label);
    return record(Op::SoftmaxXent, {il}, Tensor::scalar(loss), {label}, std::move(probs));
}

Tensor Tape::cosine_rows(const Tensor& h1, const Tensor& h2) {
    if (h1.cols() != h2.cols())
        throw ShapeError("cosine_rows: width mismatch " + h1.shape_str() + " vs " + h2.shape_str());
    if (h1.rows() < 1 || h2.rows() < 1)
        throw EmptyInputError("cosine_rows: empty input " + h1.shape_str() + " / " + h2.shape_str());
    int i1 = ensure_node(h1), i2 = ensure_node(h2);
    int m = h1.rows(), n = h2.rows(), d = h1.cols();
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    std::vector<double> norms(static_cast<std::size_t>(m) + n);
    kernels::cosine_matrix(h1.values().data(), h2.values().data(), out.data(),
                           m, n, d, norms.data(), norms.data() + m, kNormFloor);
    return record(Op::CosineRows, {i1, i2}, Tensor(m, n, std::move(out)), {}, std::move(norms));
}

Tensor Tape::normalize_adjacency(const Tensor& m_block, int* floor_hits) {
    int m = m_block.rows(), n = m_block.cols();
    if (m < 1 || n < 1)
        throw EmptyInputError("normalize_adjacency: empty cross block " + m_block.shape_str());
    int im = ensure_node(m_block);
    int nn = m + n;

    // Raw degrees of A+I: 1 (self loop) plus the cross-block row/column sum.
    std::vector<double> raw(nn);
    std::vector<double> scale(nn);
    int hits = 0;
    for (int i = 0; i < m; ++i) {
        double s = 1.0;
        for (int j = 0; j < n; ++j) s += m_block(i, j);
        raw[i] = s;
    }
    for (int j = 0; j < n; ++j) {
        double s = 1.0;
        for (int i = 0; i < m; ++i) s += m_block(i, j);
        raw[m + j] = s;
    }
    for (int p = 0; p < nn; ++p) {
        double d = raw[p];
        if (d < kDegreeFloor) {
            d = kDegreeFloor;
            ++hits;
        }
        scale[p] = 1.0 / std::sqrt(d);
    }
    if (floor_hits) *floor_hits = hits;

    std::vector<double> out(static_cast<std::size_t>(nn) * nn, 0.0);
    for (int p = 0; p < nn; ++p) out[static_cast<std::size_t>(p) * nn + p] = scale[p] * scale[p];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double v = scale[i] * scale[m + j] * m_block(i, j);
            out[static_cast<std::size_t>(i) * nn + (m + j)] = v;
            out[static_cast<std::size_t>(m + j) * nn + i] = v;
        }
    return record(Op::NormalizeAdjacency, {im}, Tensor(nn, nn, std::move(out)),
                  {m, n, hits}, std::move(raw));
}

Tensor Tape::gather_rows(const Tensor& table, const std::vector<int>& indices) {
    if (indices.empty()) throw EmptyInputError("gather_rows: empty index list");
    int it = ensure_node(table);
    int d = table.cols();
    std::vector<double> out;
    out.reserve(indices.size() * static_cast<std::size_t>(d));
    for (int idx : indices) {
        if (idx < 0 || idx >= table.rows())
            throw IndexError("gather_rows: row " + std::to_string(idx) + " out of " +
                             table.shape_str());
        out.insert(out.end(),
                   table.values().begin() + static_cast<std::size_t>(idx) * d,
                   table.values().begin() + static_cast<std::size_t>(idx + 1) * d);
    }
    return record(Op::GatherRows, {it},
                  Tensor(static_cast<int>(indices.size()), d, std::move(out)), indices);
}

void Tape::mark_no_grad(const Tensor& t) {
    if (!t.on_tape() || t.tape_id_ != id_)
        throw ContractError("mark_no_grad: tensor is not on this tape");
    nodes_[t.node()].no_grad = true;
}

std::vector<double>& Tape::grad_buf(int id) {
    if (grads_[id].empty()) grads_[id].assign(nodes_[id].out.size(), 0.0);
    return grads_[id];
}

void Tape::backward(const Tensor& loss) {
    if (!loss.on_tape() || loss.tape_id_ != id_)
        throw ContractError("backward: loss is not on this tape");
    if (loss.rows() != 1 || loss.cols() != 1)
        throw ContractError("backward: loss must be scalar, got " + loss.shape_str());
    grads_.assign(nodes_.size(), {});
    has_grads_ = true;
    grad_buf(loss.node())[0] = 1.0;
    for (int id = loss.node(); id >= 0; --id) {
        if (grads_[id].empty()) continue; // not on a path to the loss
        backprop_node(id);
    }
}

void Tape::backprop_node(int id) {
    const Node& n = nodes_[id];
    const std::vector<double>& g = grads_[id];
    switch (n.op) {
    case Op::Leaf:
        break;
    case Op::MatMul: {
        const Tensor& a = nodes_[n.in[0]].out;
        const Tensor& b = nodes_[n.in[1]].out;
        kernels::matmul_grad_a(g.data(), b.values().data(), grad_buf(n.in[0]).data(),
                               a.rows(), a.cols(), b.cols());
        kernels::matmul_grad_b(a.values().data(), g.data(), grad_buf(n.in[1]).data(),
                               a.rows(), a.cols(), b.cols());
        break;
    }
    case Op::Add: {
        std::vector<double>& ga = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        std::vector<double>& gb = grad_buf(n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        break;
    }
    case Op::Sub: {
        std::vector<double>& ga = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        std::vector<double>& gb = grad_buf(n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        break;
    }
    case Op::Hadamard: {
        const Tensor& a = nodes_[n.in[0]].out;
        const Tensor& b = nodes_[n.in[1]].out;
        std::vector<double>& ga = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.at(i);
        std::vector<double>& gb = grad_buf(n.in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.at(i);
        break;
    }
    case Op::Sigmoid: {
        std::vector<double>& gx = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = n.out.at(i);
            gx[i] += g[i] * s * (1.0 - s);
        }
        break;
    }
    case Op::Tanh: {
        std::vector<double>& gx = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double t = n.out.at(i);
            gx[i] += g[i] * (1.0 - t * t);
        }
        break;
    }
    case Op::Relu: {
        const Tensor& x = nodes_[n.in[0]].out;
        std::vector<double>& gx = grad_buf(n.in[0]);
        // relu'(0) is defined as 0.
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x.at(i) > 0.0) gx[i] += g[i];
        break;
    }
    case Op::ConcatCols: {
        const Tensor& a = nodes_[n.in[0]].out;
        int r = a.rows(), ca = a.cols();
        int cb = n.out.cols() - ca;
        std::vector<double>& ga = grad_buf(n.in[0]);
        std::vector<double>& gb = grad_buf(n.in[1]);
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < ca; ++j)
                ga[static_cast<std::size_t>(i) * ca + j] += g[static_cast<std::size_t>(i) * (ca + cb) + j];
            for (int j = 0; j < cb; ++j)
                gb[static_cast<std::size_t>(i) * cb + j] += g[static_cast<std::size_t>(i) * (ca + cb) + ca + j];
        }
        break;
    }
    case Op::StackRows: {
        int c = n.out.cols();
        std::size_t offset = 0;
        for (int input : n.in) {
            const Tensor& p = nodes_[input].out;
            std::vector<double>& gp = grad_buf(input);
            std::size_t len = static_cast<std::size_t>(p.rows()) * c;
            for (std::size_t i = 0; i < len; ++i) gp[i] += g[offset + i];
            offset += len;
        }
        break;
    }
    case Op::SliceRows: {
        int c = n.out.cols();
        std::size_t begin = static_cast<std::size_t>(n.ints[0]) * c;
        std::vector<double>& gx = grad_buf(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[begin + i] += g[i];
        break;
    }
    case Op::PoolMax: {
        int c = n.out.cols();
        std::vector<double>& gx = grad_buf(n.in[0]);
        for (int j = 0; j < c; ++j)
            gx[static_cast<std::size_t>(n.ints[j]) * c + j] += g[j];
        break;
    }
    case Op::PoolMean: {
        const Tensor& x = nodes_[n.in[0]].out;
        int r = x.rows(), c = x.cols();
        std::vector<double>& gx = grad_buf(n.in[0]);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                gx[static_cast<std::size_t>(i) * c + j] += g[j] / r;
        break;
    }
    case Op::SoftmaxXent: {
        int c = nodes_[n.in[0]].out.cols();
        int label = n.ints[0];
        std::vector<double>& gz = grad_buf(n.in[0]);
        for (int j = 0; j < c; ++j)
            gz[j] += g[0] * (n.saved[j] - (j == label ? 1.0 : 0.0));
        break;
    }
    case Op::CosineRows: {
        const Tensor& h1 = nodes_[n.in[0]].out;
        const Tensor& h2 = nodes_[n.in[1]].out;
        int m = h1.rows(), nr = h2.rows(), d = h1.cols();
        kernels::cosine_matrix_backward(h1.values().data(), h2.values().data(),
                                        n.out.values().data(),
                                        n.saved.data(), n.saved.data() + m,
                                        g.data(),
                                        grad_buf(n.in[0]).data(), grad_buf(n.in[1]).data(),
                                        m, nr, d, kNormFloor);
        break;
    }
    case Op::NormalizeAdjacency: {
        const Tensor& mb = nodes_[n.in[0]].out;
        int m = n.ints[0], nc = n.ints[1];
        int nn = m + nc;
        const std::vector<double>& raw = n.saved;
        std::vector<double> scale(nn), dscale(nn, 0.0);
        for (int p = 0; p < nn; ++p)
            scale[p] = 1.0 / std::sqrt(std::max(raw[p], kDegreeFloor));
        // dL/ds_p = sum_q (G_pq + G_qp) s_q Atilde_pq; Atilde_pp = 1 and the
        // only other nonzeros are the cross block and its transpose.
        for (int p = 0; p < nn; ++p) {
            double acc = 2.0 * g[static_cast<std::size_t>(p) * nn + p] * scale[p];
            if (p < m) {
                for (int j = 0; j < nc; ++j) {
                    int q = m + j;
                    acc += (g[static_cast<std::size_t>(p) * nn + q] +
                            g[static_cast<std::size_t>(q) * nn + p]) * scale[q] * mb(p, j);
                }
            } else {
                int j = p - m;
                for (int i = 0; i < m; ++i) {
                    acc += (g[static_cast<std::size_t>(p) * nn + i] +
                            g[static_cast<std::size_t>(i) * nn + p]) * scale[i] * mb(i, j);
                }
            }
            // Through d_p = max(raw_p, floor): no gradient when the clamp is active.
            if (raw[p] > kDegreeFloor) {
                double d = raw[p];
                dscale[p] = acc * (-0.5) / (d * std::sqrt(d));
            }
        }
        std::vector<double>& gm = grad_buf(n.in[0]);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < nc; ++j) {
                int q = m + j;
                double direct = scale[i] * scale[q] *
                                (g[static_cast<std::size_t>(i) * nn + q] +
                                 g[static_cast<std::size_t>(q) * nn + i]);
                gm[static_cast<std::size_t>(i) * nc + j] += direct + dscale[i] + dscale[q];
            }
        break;
    }
    case Op::GatherRows: {
        if (nodes_[n.in[0]].no_grad) break;
        int d = n.out.cols();
        std::vector<double>& gt = grad_buf(n.in[0]);
        for (std::size_t r = 0; r < n.ints.size(); ++r) {
            std::size_t dst = static_cast<std::size_t>(n.ints[r]) * d;
            for (int j = 0; j < d; ++j) gt[dst + j] += g[r * d + j];
        }
        break;
    }
    }
}

Tensor Tape::grad(const Tensor& t) const {
    if (!t.on_tape() || t.tape_id_ != id_)
        throw ContractError("grad: tensor is not on this tape");
    if (!has_grads_)
        throw ContractError("grad: backward() has not run");
    // Nodes recorded after backward() have no buffer: zero gradient.
    if (static_cast<std::size_t>(t.node()) >= grads_.size())
        return Tensor::zeros(t.rows(), t.cols());
    const std::vector<double>& buf = grads_[t.node()];
    if (buf.empty()) return Tensor::zeros(t.rows(), t.cols());
    return Tensor(t.rows(), t.cols(), buf);
}

} // namespace sgcn
