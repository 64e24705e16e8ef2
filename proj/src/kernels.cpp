#include "sgcn/kernels.hpp"

#include <cmath>
#include <cstring>
#include <vector>

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kParGrain = 1 << 14;

inline double dot(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int t = 0; t < d; ++t) s += a[t] * b[t];
    return s;
}

} // namespace

namespace sgcn::kernels {

void matmul(const double* a, const double* b, double* out, int r, int k, int c) {
    std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(r) * c);
    const long work = static_cast<long>(r) * k * c;
#pragma omp parallel for if (work > kParGrain) schedule(static)
    for (int i = 0; i < r; ++i) {
        double* out_row = out + static_cast<std::size_t>(i) * c;
        const double* a_row = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = a_row[p];
            const double* b_row = b + static_cast<std::size_t>(p) * c;
            for (int j = 0; j < c; ++j) out_row[j] += av * b_row[j];
        }
    }
}

void matmul_grad_a(const double* g, const double* b, double* ga, int r, int k, int c) {
    const long work = static_cast<long>(r) * k * c;
#pragma omp parallel for if (work > kParGrain) schedule(static)
    for (int i = 0; i < r; ++i) {
        const double* g_row = g + static_cast<std::size_t>(i) * c;
        double* ga_row = ga + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p)
            ga_row[p] += dot(g_row, b + static_cast<std::size_t>(p) * c, c);
    }
}

void matmul_grad_b(const double* a, const double* g, double* gb, int r, int k, int c) {
    const long work = static_cast<long>(r) * k * c;
#pragma omp parallel for if (work > kParGrain) schedule(static)
    for (int p = 0; p < k; ++p) {
        double* gb_row = gb + static_cast<std::size_t>(p) * c;
        for (int j = 0; j < c; ++j) {
            double s = 0.0;
            for (int i = 0; i < r; ++i)
                s += a[static_cast<std::size_t>(i) * k + p] * g[static_cast<std::size_t>(i) * c + j];
            gb_row[j] += s;
        }
    }
}

void cosine_matrix(const double* h1, const double* h2, double* out,
                   int m, int n, int d,
                   double* norms1, double* norms2, double norm_floor) {
    std::vector<double> na(m), nb(n);
    for (int i = 0; i < m; ++i)
        na[i] = std::sqrt(dot(h1 + static_cast<std::size_t>(i) * d,
                              h1 + static_cast<std::size_t>(i) * d, d));
    for (int j = 0; j < n; ++j)
        nb[j] = std::sqrt(dot(h2 + static_cast<std::size_t>(j) * d,
                              h2 + static_cast<std::size_t>(j) * d, d));

    const long work = static_cast<long>(m) * n * d;
#pragma omp parallel for if (work > kParGrain) schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* u = h1 + static_cast<std::size_t>(i) * d;
        double* out_row = out + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            if (na[i] < norm_floor || nb[j] < norm_floor) {
                out_row[j] = 0.0;
            } else {
                out_row[j] = dot(u, h2 + static_cast<std::size_t>(j) * d, d) / (na[i] * nb[j]);
            }
        }
    }

    if (norms1) std::memcpy(norms1, na.data(), sizeof(double) * m);
    if (norms2) std::memcpy(norms2, nb.data(), sizeof(double) * n);
}

void cosine_matrix_backward(const double* h1, const double* h2,
                            const double* m_vals,
                            const double* norms1, const double* norms2,
                            const double* grad_out,
                            double* g1, double* g2,
                            int m, int n, int d, double norm_floor) {
    const long work = static_cast<long>(m) * n * d;
    // dA_i = sum_j G_ij * (b_j/(na*nb) - w_ij * a_i/na^2)
#pragma omp parallel for if (work > kParGrain) schedule(static)
    for (int i = 0; i < m; ++i) {
        const double na = norms1[i];
        if (na < norm_floor) continue;
        const double* u = h1 + static_cast<std::size_t>(i) * d;
        double* gu = g1 + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < n; ++j) {
            const double nb = norms2[j];
            if (nb < norm_floor) continue;
            const double g = grad_out[static_cast<std::size_t>(i) * n + j];
            if (g == 0.0) continue;
            const double w = m_vals[static_cast<std::size_t>(i) * n + j];
            const double* v = h2 + static_cast<std::size_t>(j) * d;
            const double c1 = g / (na * nb);
            const double c2 = g * w / (na * na);
            for (int t = 0; t < d; ++t) gu[t] += c1 * v[t] - c2 * u[t];
        }
    }
    // dB_j = sum_i G_ij * (a_i/(na*nb) - w_ij * b_j/nb^2)
#pragma omp parallel for if (work > kParGrain) schedule(static)
    for (int j = 0; j < n; ++j) {
        const double nb = norms2[j];
        if (nb < norm_floor) continue;
        const double* v = h2 + static_cast<std::size_t>(j) * d;
        double* gv = g2 + static_cast<std::size_t>(j) * d;
        for (int i = 0; i < m; ++i) {
            const double na = norms1[i];
            if (na < norm_floor) continue;
            const double g = grad_out[static_cast<std::size_t>(i) * n + j];
            if (g == 0.0) continue;
            const double w = m_vals[static_cast<std::size_t>(i) * n + j];
            const double* u = h1 + static_cast<std::size_t>(i) * d;
            const double c1 = g / (na * nb);
            const double c2 = g * w / (nb * nb);
            for (int t = 0; t < d; ++t) gv[t] += c1 * u[t] - c2 * v[t];
        }
    }
}

} // namespace sgcn::kernels

namespace sgcn::serial {

void matmul(const double* a, const double* b, double* out, int r, int k, int c) {
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p)
                s += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * c + j];
            out[static_cast<std::size_t>(i) * c + j] = s;
        }
    }
}

void matmul_grad_a(const double* g, const double* b, double* ga, int r, int k, int c) {
    for (int i = 0; i < r; ++i)
        for (int p = 0; p < k; ++p) {
            double s = 0.0;
            for (int j = 0; j < c; ++j)
                s += g[static_cast<std::size_t>(i) * c + j] * b[static_cast<std::size_t>(p) * c + j];
            ga[static_cast<std::size_t>(i) * k + p] += s;
        }
}

void matmul_grad_b(const double* a, const double* g, double* gb, int r, int k, int c) {
    for (int p = 0; p < k; ++p)
        for (int j = 0; j < c; ++j) {
            double s = 0.0;
            for (int i = 0; i < r; ++i)
                s += a[static_cast<std::size_t>(i) * k + p] * g[static_cast<std::size_t>(i) * c + j];
            gb[static_cast<std::size_t>(p) * c + j] += s;
        }
}

void cosine_matrix(const double* h1, const double* h2, double* out,
                   int m, int n, int d,
                   double* norms1, double* norms2, double norm_floor) {
    for (int i = 0; i < m; ++i) {
        const double* u = h1 + static_cast<std::size_t>(i) * d;
        double na = std::sqrt(dot(u, u, d));
        if (norms1) norms1[i] = na;
        for (int j = 0; j < n; ++j) {
            const double* v = h2 + static_cast<std::size_t>(j) * d;
            double nb = std::sqrt(dot(v, v, d));
            if (norms2 && i == 0) norms2[j] = nb;
            double w = 0.0;
            if (na >= norm_floor && nb >= norm_floor) w = dot(u, v, d) / (na * nb);
            out[static_cast<std::size_t>(i) * n + j] = w;
        }
    }
    if (norms2 && m == 0)
        for (int j = 0; j < n; ++j) {
            const double* v = h2 + static_cast<std::size_t>(j) * d;
            norms2[j] = std::sqrt(dot(v, v, d));
        }
}

void cosine_matrix_backward(const double* h1, const double* h2,
                            const double* m_vals,
                            const double* norms1, const double* norms2,
                            const double* grad_out,
                            double* g1, double* g2,
                            int m, int n, int d, double norm_floor) {
    // Same per-row accumulation order and factoring as the parallel path.
    for (int i = 0; i < m; ++i) {
        const double na = norms1[i];
        if (na < norm_floor) continue;
        const double* u = h1 + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < n; ++j) {
            const double nb = norms2[j];
            if (nb < norm_floor) continue;
            const double g = grad_out[static_cast<std::size_t>(i) * n + j];
            if (g == 0.0) continue;
            const double w = m_vals[static_cast<std::size_t>(i) * n + j];
            const double* v = h2 + static_cast<std::size_t>(j) * d;
            const double c1 = g / (na * nb);
            const double c2 = g * w / (na * na);
            for (int t = 0; t < d; ++t) g1[static_cast<std::size_t>(i) * d + t] += c1 * v[t] - c2 * u[t];
        }
    }
    for (int j = 0; j < n; ++j) {
        const double nb = norms2[j];
        if (nb < norm_floor) continue;
        const double* v = h2 + static_cast<std::size_t>(j) * d;
        for (int i = 0; i < m; ++i) {
            const double na = norms1[i];
            if (na < norm_floor) continue;
            const double g = grad_out[static_cast<std::size_t>(i) * n + j];
            if (g == 0.0) continue;
            const double w = m_vals[static_cast<std::size_t>(i) * n + j];
            const double* u = h1 + static_cast<std::size_t>(i) * d;
            const double c1 = g / (na * nb);
            const double c2 = g * w / (nb * nb);
            for (int t = 0; t < d; ++t) g2[static_cast<std::size_t>(j) * d + t] += c1 * u[t] - c2 * v[t];
        }
    }
}

} // namespace sgcn::serial
