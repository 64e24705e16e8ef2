#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "sgcn/encoder.hpp"

using namespace sgcn;
using sgcn::test::check_grad;
using sgcn::test::weighted_sum;

namespace {

EmbeddingTable tiny_table() {
    Rng rng(5);
    return EmbeddingTable::from_rows({"alpha", "beta", "gamma"},
                                     {{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}},
                                     /*lowercase=*/true, rng);
}

// Plain-loop LSTM scan, independent of the tape implementation.
std::vector<std::vector<double>> ref_scan(const LstmDirParams& p, const Tensor& x, bool reversed) {
    int t_len = x.rows(), d_e = x.cols(), hid = p.hidden();
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    auto gate = [&](const Tensor& u, const Tensor& w, const Tensor& b,
                    const std::vector<double>& h_prev, int t) {
        std::vector<double> pre(hid);
        for (int j = 0; j < hid; ++j) {
            double s = b(0, j);
            for (int k = 0; k < d_e; ++k) s += x(t, k) * u(k, j);
            for (int k = 0; k < hid; ++k) s += h_prev[k] * w(k, j);
            pre[j] = s;
        }
        return pre;
    };
    std::vector<std::vector<double>> states(t_len);
    std::vector<double> h(hid, 0.0), c(hid, 0.0);
    for (int step = 0; step < t_len; ++step) {
        int t = reversed ? t_len - 1 - step : step;
        auto pi = gate(p.U_i, p.W_i, p.b_i, h, t);
        auto pf = gate(p.U_f, p.W_f, p.b_f, h, t);
        auto po = gate(p.U_o, p.W_o, p.b_o, h, t);
        auto pc = gate(p.U_c, p.W_c, p.b_c, h, t);
        for (int j = 0; j < hid; ++j) {
            c[j] = sig(pf[j]) * c[j] + sig(pi[j]) * std::tanh(pc[j]);
            h[j] = sig(po[j]) * std::tanh(c[j]);
        }
        states[t] = h;
    }
    return states;
}

std::vector<Tensor> dir_tensors(const LstmDirParams& p) {
    return {p.W_i, p.W_f, p.W_o, p.W_c, p.U_i, p.U_f, p.U_o, p.U_c,
            p.b_i, p.b_f, p.b_o, p.b_c};
}

LstmDirParams dir_from(const std::vector<Tensor>& t, std::size_t at) {
    LstmDirParams p;
    p.W_i = t[at + 0]; p.W_f = t[at + 1]; p.W_o = t[at + 2]; p.W_c = t[at + 3];
    p.U_i = t[at + 4]; p.U_f = t[at + 5]; p.U_o = t[at + 6]; p.U_c = t[at + 7];
    p.b_i = t[at + 8]; p.b_f = t[at + 9]; p.b_o = t[at + 10]; p.b_c = t[at + 11];
    return p;
}

} // namespace

TEST_CASE("embedding lookup maps known, unknown and cased tokens") {
    EmbeddingTable table = tiny_table();
    CHECK(table.lookup("beta") == 1);
    CHECK(table.lookup("BETA") == 1); // lowercased lookup
    CHECK(table.lookup("delta") == table.oov_index());

    Tape t;
    Tensor seq = embed_sequence(t, table, {"alpha", "delta", "gamma"});
    CHECK(seq.rows() == 3);
    CHECK(seq.cols() == 2);
    CHECK(seq(0, 0) == 1.0);
    CHECK(seq(0, 1) == 2.0);
    CHECK(seq(2, 1) == 6.0);
    // OOV row comes from the seeded generator, bounded by construction.
    CHECK(std::abs(seq(1, 0)) <= 0.05);

    CHECK_THROWS_AS(embed_sequence(t, table, {}), EmptyInputError);
}

TEST_CASE("duplicate token gradient sums per occurrence") {
    EmbeddingTable table = tiny_table();
    Rng rng(9);
    Tensor w = Tensor::uniform(3, 2, -1.0, 1.0, rng);
    std::vector<int> idx = {0, 2, 0}; // "alpha" twice
    double err = check_grad(
        [&](Tape& t, const std::vector<Tensor>& p) {
            return weighted_sum(t, t.gather_rows(p[0], idx), w);
        },
        {table.matrix});
    CHECK(err < 1e-6);

    Tape t;
    Tensor table_leaf = t.leaf(table.matrix);
    Tensor loss = weighted_sum(t, t.gather_rows(table_leaf, idx), w);
    t.backward(loss);
    Tensor g = t.grad(table_leaf);
    CHECK(g(0, 0) == w(0, 0) + w(2, 0)); // both occurrences of row 0
    CHECK(g(1, 0) == 0.0);               // row 1 never looked up
}

TEST_CASE("lstm_step with all-zero parameters") {
    Rng rng(13);
    LstmDirParams p = LstmDirParams::init(2, 3, rng, false);
    for (Tensor* t : {&p.W_i, &p.W_f, &p.W_o, &p.W_c}) *t = Tensor::zeros(3, 3);
    for (Tensor* t : {&p.U_i, &p.U_f, &p.U_o, &p.U_c}) *t = Tensor::zeros(2, 3);

    Tape tape;
    LstmDirParams b = bind(tape, p);
    Tensor x = tape.leaf(Tensor::row({0.4, -1.2}));
    Tensor h0 = tape.leaf(Tensor::zeros(1, 3));
    Tensor c0 = tape.leaf(Tensor::zeros(1, 3));
    auto [h, c] = lstm_step(tape, b, x, h0, c0);
    for (int j = 0; j < 3; ++j) {
        CHECK(h(0, j) == 0.0); // o = 0.5 but tanh(c) = 0
        CHECK(c(0, j) == 0.0);
    }

    // With c_prev = 1 the cell state exposes the 0.5 forget gate.
    Tensor ones = tape.leaf(Tensor::full(1, 3, 1.0));
    auto [h2, c2] = lstm_step(tape, b, x, h0, ones);
    for (int j = 0; j < 3; ++j) CHECK(c2(0, j) == doctest::Approx(0.5).epsilon(1e-15));
    (void)h2;
}

TEST_CASE("lstm_step gradients for all parameter matrices and biases") {
    Rng rng(17);
    LstmDirParams p = LstmDirParams::init(2, 3, rng);
    Tensor x = Tensor::uniform(1, 2, -1.0, 1.0, rng);
    Tensor h0 = Tensor::uniform(1, 3, -0.5, 0.5, rng);
    Tensor c0 = Tensor::uniform(1, 3, -0.5, 0.5, rng);
    Tensor w = Tensor::uniform(1, 3, -1.0, 1.0, rng);

    std::vector<Tensor> params = dir_tensors(p);
    params.push_back(x);
    params.push_back(h0);
    params.push_back(c0);
    double err = check_grad(
        [&](Tape& t, const std::vector<Tensor>& q) {
            LstmDirParams bp = dir_from(q, 0);
            auto [h, c] = lstm_step(t, bp, q[12], q[13], q[14]);
            (void)c;
            return weighted_sum(t, h, w);
        },
        params);
    CHECK(err < 1e-5);
}

TEST_CASE("bilstm single step sees the same input from both directions") {
    Rng rng(19);
    LstmDirParams fwd = LstmDirParams::init(2, 3, rng);
    LstmDirParams bwd = LstmDirParams::init(2, 3, rng);
    Tensor x = Tensor::uniform(1, 2, -1.0, 1.0, rng);

    Tape t;
    Tensor out = bilstm_encode(t, bind(t, fwd), bind(t, bwd), t.leaf(x));
    CHECK(out.rows() == 1);
    CHECK(out.cols() == 6);

    auto fw = ref_scan(fwd, x, false);
    auto bw = ref_scan(bwd, x, true);
    for (int j = 0; j < 3; ++j) {
        CHECK(out(0, j) == doctest::Approx(fw[0][j]).epsilon(1e-12));
        CHECK(out(0, 3 + j) == doctest::Approx(bw[0][j]).epsilon(1e-12));
    }
}

TEST_CASE("bilstm matches the independent scan oracle") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng(seed * 113);
        int t_len = 1 + static_cast<int>(rng.next_below(4)); // T <= 4
        LstmDirParams fwd = LstmDirParams::init(3, 4, rng);
        LstmDirParams bwd = LstmDirParams::init(3, 4, rng);
        Tensor x = Tensor::uniform(t_len, 3, -1.5, 1.5, rng);

        Tape t;
        Tensor out = bilstm_encode(t, bind(t, fwd), bind(t, bwd), t.leaf(x));
        auto fw = ref_scan(fwd, x, false);
        auto bw = ref_scan(bwd, x, true);
        for (int i = 0; i < t_len; ++i)
            for (int j = 0; j < 4; ++j) {
                CHECK(std::abs(out(i, j) - fw[i][j]) < 1e-12);
                CHECK(std::abs(out(i, 4 + j) - bw[i][j]) < 1e-12);
            }
    }
}

TEST_CASE("bilstm reversal plus direction swap flips rows and halves") {
    Rng rng(29);
    int t_len = 4, hid = 3, d_e = 2;
    LstmDirParams fwd = LstmDirParams::init(d_e, hid, rng);
    LstmDirParams bwd = LstmDirParams::init(d_e, hid, rng);
    Tensor x = Tensor::uniform(t_len, d_e, -1.0, 1.0, rng);
    std::vector<double> rev_values(x.values().size());
    for (int i = 0; i < t_len; ++i)
        for (int j = 0; j < d_e; ++j)
            rev_values[static_cast<std::size_t>(i) * d_e + j] = x(t_len - 1 - i, j);
    Tensor x_rev(t_len, d_e, std::move(rev_values));

    Tape t1, t2;
    Tensor out = bilstm_encode(t1, bind(t1, fwd), bind(t1, bwd), t1.leaf(x));
    Tensor swapped = bilstm_encode(t2, bind(t2, bwd), bind(t2, fwd), t2.leaf(x_rev));
    for (int i = 0; i < t_len; ++i)
        for (int j = 0; j < hid; ++j) {
            CHECK(std::abs(swapped(t_len - 1 - i, j) - out(i, hid + j)) < 1e-12);
            CHECK(std::abs(swapped(t_len - 1 - i, hid + j) - out(i, j)) < 1e-12);
        }
}

TEST_CASE("bilstm outputs stay strictly inside (-1, 1)") {
    Rng rng(31);
    LstmDirParams fwd = LstmDirParams::init(2, 5, rng);
    LstmDirParams bwd = LstmDirParams::init(2, 5, rng);
    for (int t_len : {1, 3, 7}) {
        Tensor x = Tensor::uniform(t_len, 2, -3.0, 3.0, rng);
        Tape t;
        Tensor out = bilstm_encode(t, bind(t, fwd), bind(t, bwd), t.leaf(x));
        CHECK(out.rows() == t_len);
        CHECK(out.cols() == 10);
        for (double v : out.values()) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("bilstm gradient check over every parameter") {
    Rng rng(37);
    int t_len = 4, hid = 3, d_e = 2;
    LstmDirParams fwd = LstmDirParams::init(d_e, hid, rng);
    LstmDirParams bwd = LstmDirParams::init(d_e, hid, rng);
    Tensor x = Tensor::uniform(t_len, d_e, -1.0, 1.0, rng);
    Tensor w = Tensor::uniform(t_len, 2 * hid, -1.0, 1.0, rng);

    std::vector<Tensor> params = dir_tensors(fwd);
    std::vector<Tensor> bwd_t = dir_tensors(bwd);
    params.insert(params.end(), bwd_t.begin(), bwd_t.end());
    params.push_back(x);
    double err = check_grad(
        [&](Tape& t, const std::vector<Tensor>& q) {
            return weighted_sum(t, bilstm_encode(t, dir_from(q, 0), dir_from(q, 12), q[24]), w);
        },
        params);
    CHECK(err < 1e-5);
}

TEST_CASE("bilstm rejects empty input") {
    Rng rng(41);
    LstmDirParams fwd = LstmDirParams::init(2, 3, rng);
    LstmDirParams bwd = LstmDirParams::init(2, 3, rng);
    Tape t;
    CHECK_THROWS_AS(bilstm_encode(t, bind(t, fwd), bind(t, bwd), t.leaf(Tensor::zeros(0, 2))),
                    EmptyInputError);
}
