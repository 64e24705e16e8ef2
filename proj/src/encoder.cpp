#include "sgcn/encoder.hpp"

#include <algorithm>
#include <cctype>

namespace sgcn {

namespace {

std::string ascii_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return out;
}

} // namespace

int EmbeddingTable::lookup(const std::string& token) const {
    auto it = vocab.find(lowercase ? ascii_lower(token) : token);
    return it == vocab.end() ? oov_index() : it->second;
}

std::vector<int> EmbeddingTable::lookup_all(const std::vector<std::string>& tokens_in,
                                            int* oov_count) const {
    std::vector<int> out;
    out.reserve(tokens_in.size());
    int oov = 0;
    for (const std::string& t : tokens_in) {
        int idx = lookup(t);
        if (idx == oov_index()) ++oov;
        out.push_back(idx);
    }
    if (oov_count) *oov_count = oov;
    return out;
}

EmbeddingTable EmbeddingTable::from_rows(std::vector<std::string> tokens,
                                         std::vector<std::vector<double>> rows,
                                         bool lowercase, Rng& oov_rng) {
    if (tokens.size() != rows.size())
        throw ContractError("EmbeddingTable: token/row count mismatch");
    if (rows.empty()) throw EmptyInputError("EmbeddingTable: no embedding rows");
    int d_e = static_cast<int>(rows[0].size());

    EmbeddingTable table;
    table.d_e = d_e;
    table.lowercase = lowercase;
    table.tokens = std::move(tokens);
    std::vector<double> values;
    values.reserve((table.tokens.size() + 2) * static_cast<std::size_t>(d_e));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) != d_e)
            throw ShapeError("EmbeddingTable: row " + std::to_string(i) + " has width " +
                             std::to_string(rows[i].size()) + ", expected " + std::to_string(d_e));
        table.vocab.emplace(table.tokens[i], static_cast<int>(i));
        values.insert(values.end(), rows[i].begin(), rows[i].end());
    }
    for (int j = 0; j < d_e; ++j) values.push_back(oov_rng.uniform(-0.05, 0.05)); // OOV row
    for (int j = 0; j < d_e; ++j) values.push_back(0.0);                          // PAD row
    table.matrix = Tensor(static_cast<int>(table.tokens.size()) + 2, d_e, std::move(values));
    return table;
}

Tensor embed_sequence(Tape& tape, const Tensor& table_matrix, const std::vector<int>& indices) {
    if (indices.empty()) throw EmptyInputError("embed_sequence: empty token sequence");
    return tape.gather_rows(table_matrix, indices);
}

Tensor embed_sequence(Tape& tape, const EmbeddingTable& table,
                      const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw EmptyInputError("embed_sequence: empty token sequence");
    return embed_sequence(tape, tape.leaf(table.matrix), table.lookup_all(tokens));
}

LstmDirParams LstmDirParams::init(int d_e, int hidden, Rng& rng, bool forget_bias_one) {
    LstmDirParams p;
    p.W_i = Tensor::glorot(hidden, hidden, rng);
    p.W_f = Tensor::glorot(hidden, hidden, rng);
    p.W_o = Tensor::glorot(hidden, hidden, rng);
    p.W_c = Tensor::glorot(hidden, hidden, rng);
    p.U_i = Tensor::glorot(d_e, hidden, rng);
    p.U_f = Tensor::glorot(d_e, hidden, rng);
    p.U_o = Tensor::glorot(d_e, hidden, rng);
    p.U_c = Tensor::glorot(d_e, hidden, rng);
    p.b_i = Tensor::zeros(1, hidden);
    p.b_f = forget_bias_one ? Tensor::full(1, hidden, 1.0) : Tensor::zeros(1, hidden);
    p.b_o = Tensor::zeros(1, hidden);
    p.b_c = Tensor::zeros(1, hidden);
    return p;
}

void LstmDirParams::check_consistent() const {
    int h = hidden(), de = input_dim();
    auto square = [&](const Tensor& t, const char* n) {
        if (t.rows() != h || t.cols() != h)
            throw ShapeError(std::string("LstmDirParams: ") + n + " is " + t.shape_str() +
                             ", expected " + std::to_string(h) + "x" + std::to_string(h));
    };
    auto input = [&](const Tensor& t, const char* n) {
        if (t.rows() != de || t.cols() != h)
            throw ShapeError(std::string("LstmDirParams: ") + n + " is " + t.shape_str() +
                             ", expected " + std::to_string(de) + "x" + std::to_string(h));
    };
    auto bias = [&](const Tensor& t, const char* n) {
        if (t.rows() != 1 || t.cols() != h)
            throw ShapeError(std::string("LstmDirParams: ") + n + " is " + t.shape_str() +
                             ", expected 1x" + std::to_string(h));
    };
    square(W_i, "W_i"); square(W_f, "W_f"); square(W_o, "W_o"); square(W_c, "W_c");
    input(U_i, "U_i"); input(U_f, "U_f"); input(U_o, "U_o"); input(U_c, "U_c");
    bias(b_i, "b_i"); bias(b_f, "b_f"); bias(b_o, "b_o"); bias(b_c, "b_c");
}

std::pair<Tensor, Tensor> lstm_step(Tape& tape, const LstmDirParams& p,
                                    const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev) {
    auto gate_pre = [&](const Tensor& u, const Tensor& w, const Tensor& b) {
        return tape.add(tape.add(tape.matmul(x_t, u), tape.matmul(h_prev, w)), b);
    };
    Tensor i = tape.sigmoid(gate_pre(p.U_i, p.W_i, p.b_i));
    Tensor f = tape.sigmoid(gate_pre(p.U_f, p.W_f, p.b_f));
    Tensor o = tape.sigmoid(gate_pre(p.U_o, p.W_o, p.b_o));
    Tensor c_cand = tape.tanh(gate_pre(p.U_c, p.W_c, p.b_c));
    Tensor c = tape.add(tape.hadamard(f, c_prev), tape.hadamard(i, c_cand));
    Tensor h = tape.hadamard(o, tape.tanh(c));
    return {h, c};
}

LstmDirParams bind(Tape& tape, const LstmDirParams& p) {
    LstmDirParams b;
    b.W_i = tape.leaf(p.W_i); b.W_f = tape.leaf(p.W_f);
    b.W_o = tape.leaf(p.W_o); b.W_c = tape.leaf(p.W_c);
    b.U_i = tape.leaf(p.U_i); b.U_f = tape.leaf(p.U_f);
    b.U_o = tape.leaf(p.U_o); b.U_c = tape.leaf(p.U_c);
    b.b_i = tape.leaf(p.b_i); b.b_f = tape.leaf(p.b_f);
    b.b_o = tape.leaf(p.b_o); b.b_c = tape.leaf(p.b_c);
    return b;
}

Tensor bilstm_encode(Tape& tape, const LstmDirParams& fwd, const LstmDirParams& bwd,
                     const Tensor& x) {
    int t_len = x.rows();
    if (t_len < 1) throw EmptyInputError("bilstm_encode: empty sequence");
    int hidden = fwd.hidden();

    std::vector<Tensor> fwd_h(t_len), bwd_h(t_len);
    Tensor h = tape.leaf(Tensor::zeros(1, hidden));
    Tensor c = tape.leaf(Tensor::zeros(1, hidden));
    for (int t = 0; t < t_len; ++t) {
        std::tie(h, c) = lstm_step(tape, fwd, tape.slice_rows(x, t, t + 1), h, c);
        fwd_h[t] = h;
    }
    h = tape.leaf(Tensor::zeros(1, hidden));
    c = tape.leaf(Tensor::zeros(1, hidden));
    for (int t = t_len - 1; t >= 0; --t) {
        std::tie(h, c) = lstm_step(tape, bwd, tape.slice_rows(x, t, t + 1), h, c);
        bwd_h[t] = h;
    }

    std::vector<Tensor> rows(t_len);
    for (int t = 0; t < t_len; ++t) rows[t] = tape.concat_cols(fwd_h[t], bwd_h[t]);
    return tape.stack_rows(rows);
}

} // namespace sgcn
