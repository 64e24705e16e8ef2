// Times the OpenMP kernels against the serial reference, plus a whole-model
// batch forward/backward at 1..N threads. Wall-clock numbers only; the unit
// suite checks that both paths agree bitwise.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sgcn/data.hpp"
#include "sgcn/kernels.hpp"
#include "sgcn/model.hpp"
#include "sgcn/rng.hpp"

using namespace sgcn;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e100;
    for (int r = 0; r < reps; ++r) {
        auto t0 = Clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

void bench_matmul(int r, int k, int c) {
    Rng rng(1);
    std::vector<double> a = random_vec(static_cast<std::size_t>(r) * k, rng);
    std::vector<double> b = random_vec(static_cast<std::size_t>(k) * c, rng);
    std::vector<double> out(static_cast<std::size_t>(r) * c);
    double t_ser = time_best_of(3, [&] { serial::matmul(a.data(), b.data(), out.data(), r, k, c); });
    double t_par = time_best_of(3, [&] { kernels::matmul(a.data(), b.data(), out.data(), r, k, c); });
    std::printf("matmul %4dx%-4dx%-4d  serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n",
                r, k, c, t_ser * 1e3, t_par * 1e3, t_ser / t_par);
}

void bench_cosine(int m, int n, int d) {
    Rng rng(2);
    std::vector<double> h1 = random_vec(static_cast<std::size_t>(m) * d, rng);
    std::vector<double> h2 = random_vec(static_cast<std::size_t>(n) * d, rng);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    double t_ser = time_best_of(3, [&] {
        serial::cosine_matrix(h1.data(), h2.data(), out.data(), m, n, d, nullptr, nullptr,
                              kNormFloor);
    });
    double t_par = time_best_of(3, [&] {
        kernels::cosine_matrix(h1.data(), h2.data(), out.data(), m, n, d, nullptr, nullptr,
                               kNormFloor);
    });
    std::printf("cosine %4dx%-4d d=%-4d  serial %8.3f ms  parallel %8.3f ms  speedup %.2fx\n",
                m, n, d, t_ser * 1e3, t_par * 1e3, t_ser / t_par);
}

void bench_batch() {
    SyntheticSpec spec;
    spec.pairs = 64;
    spec.vocab = 200;
    spec.classes = 4;
    spec.seed = 7;
    spec.d_e = 50;
    SyntheticCorpus corpus = gen_synthetic(spec);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> tokens;
    for (const std::string& line : corpus.embedding_lines) {
        std::size_t sp = line.find(' ');
        tokens.push_back(line.substr(0, sp));
        std::vector<double> row;
        const char* p = line.c_str() + sp;
        char* endp = nullptr;
        for (int j = 0; j < spec.d_e; ++j) {
            row.push_back(std::strtod(p, &endp));
            p = endp;
        }
        rows.push_back(std::move(row));
    }
    Rng table_rng(3);
    EmbeddingTable table = EmbeddingTable::from_rows(tokens, rows, true, table_rng);

    ModelDims dims;
    dims.d_e = spec.d_e;
    dims.hidden = 32;
    dims.d_g = 16;
    dims.h_mlp = 16;
    dims.classes = 4;
    Rng rng(4);
    SgcnModel model = SgcnModel::init(table, dims, rng);
    LabelSet labels = corpus.labels;

    auto run_batch = [&] {
        std::vector<double> losses(corpus.records.size());
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < static_cast<int>(corpus.records.size()); ++i) {
            const RelationRecord& rec = corpus.records[i];
            Tape tape;
            BoundModel bm(tape, model);
            ForwardPass fp = bm.forward(rec.arg1_tokens, rec.arg2_tokens);
            Tensor loss = bm.loss(fp, labels.index_of(rec.sense));
            tape.backward(loss);
            losses[i] = loss.at(0);
        }
    };

#ifdef _OPENMP
    int max_threads = omp_get_max_threads();
    for (int threads = 1; threads <= max_threads; threads *= 2) {
        omp_set_num_threads(threads);
        double t = time_best_of(3, run_batch);
        std::printf("batch of 64 forward+backward, %2d thread%s  %8.3f ms\n", threads,
                    threads == 1 ? " " : "s", t * 1e3);
    }
#else
    double t = time_best_of(3, run_batch);
    std::printf("batch of 64 forward+backward (no OpenMP)  %8.3f ms\n", t * 1e3);
#endif
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP\n");
#endif
    bench_matmul(256, 256, 256);
    bench_matmul(512, 512, 512);
    bench_cosine(256, 256, 256);
    bench_cosine(512, 384, 256);
    bench_batch();
    return 0;
}
