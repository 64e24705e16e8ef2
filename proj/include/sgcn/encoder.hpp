#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgcn/tape.hpp"

namespace sgcn {

/// Vocabulary plus embedding matrix. Rows 0..V-1 hold real tokens in file
/// order; row V is the OOV row, row V+1 the PAD row.
struct EmbeddingTable {
    std::vector<std::string> tokens;            // row order
    std::unordered_map<std::string, int> vocab; // token -> row
    Tensor matrix;                              // (V+2) x d_e
    int d_e = 0;
    bool lowercase = true;

    int vocab_size() const { return static_cast<int>(tokens.size()); }
    int oov_index() const { return vocab_size(); }
    int pad_index() const { return vocab_size() + 1; }

    /// Row index for a token; unknown tokens map to the OOV row. Lookup
    /// lowercases first when the table was built that way.
    int lookup(const std::string& token) const;

    /// Row indices for a whole sequence; oov_count, when given, receives the
    /// number of tokens that fell back to OOV.
    std::vector<int> lookup_all(const std::vector<std::string>& tokens_in,
                                int* oov_count = nullptr) const;

    /// Builds a table directly from (token, row) pairs; used by the synthetic
    /// generator and tests. OOV/PAD rows are appended.
    static EmbeddingTable from_rows(std::vector<std::string> tokens,
                                    std::vector<std::vector<double>> rows,
                                    bool lowercase, Rng& oov_rng);
};

/// One LSTM direction. States are row vectors, so matrices multiply on the
/// right: gate preactivation = x_t U + h_prev W + b.
struct LstmDirParams {
    Tensor W_i, W_f, W_o, W_c; // H x H
    Tensor U_i, U_f, U_o, U_c; // d_e x H
    Tensor b_i, b_f, b_o, b_c; // 1 x H

    int hidden() const { return W_i.rows(); }
    int input_dim() const { return U_i.rows(); }

    /// Glorot-uniform weights, zero biases except the forget bias, which is
    /// 1.0 unless forget_bias_one is off.
    static LstmDirParams init(int d_e, int hidden, Rng& rng, bool forget_bias_one = true);

    /// Throws ShapeError unless all twelve tensors agree on H and d_e.
    void check_consistent() const;
};

struct BiLstmParams {
    LstmDirParams fwd, bwd;
};

/// Embedding lookup for a token sequence: row t is the embedding of token t.
/// table_matrix must already be a leaf on the tape when gradients into the
/// embeddings are wanted.
Tensor embed_sequence(Tape& tape, const Tensor& table_matrix, const std::vector<int>& indices);

/// Convenience overload that lifts the table itself (embeddings frozen).
Tensor embed_sequence(Tape& tape, const EmbeddingTable& table,
                      const std::vector<std::string>& tokens);

/// One LSTM step. Gates i, f, o are sigmoids of their preactivations;
/// c_t = f * c_prev + i * tanh(pre_c); h_t = o * tanh(c_t).
std::pair<Tensor, Tensor> lstm_step(Tape& tape, const LstmDirParams& p,
                                    const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev);

/// Bidirectional encoding of a T x d_e sequence: row t is the concatenation
/// of the forward state at t and the backward state at t. Initial states are
/// zero for both directions.
Tensor bilstm_encode(Tape& tape, const LstmDirParams& fwd, const LstmDirParams& bwd,
                     const Tensor& x);

/// Binds every tensor of the direction onto the tape once, so gradients for
/// repeated use across timesteps accumulate into a single buffer.
LstmDirParams bind(Tape& tape, const LstmDirParams& p);

} // namespace sgcn
