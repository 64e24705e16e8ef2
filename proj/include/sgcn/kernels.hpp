#pragma once

#include <cstddef>

// Dense kernels behind the tape operations. Everything is row-major.
//
// sgcn::kernels is the OpenMP path. Parallel loops are always over output
// elements and every element is produced by one serial inner loop, so results
// are bitwise identical to sgcn::serial for any thread count. sgcn::serial is
// the plain-loop reference; tests compare the two and the bench tool times
// them.
namespace sgcn::kernels {

// out[r x c] = a[r x k] * b[k x c]
void matmul(const double* a, const double* b, double* out, int r, int k, int c);

// ga[r x k] += g[r x c] * b^T   (gradient w.r.t. the left operand)
void matmul_grad_a(const double* g, const double* b, double* ga, int r, int k, int c);

// gb[k x c] += a^T * g[r x c]   (gradient w.r.t. the right operand)
void matmul_grad_b(const double* a, const double* g, double* gb, int r, int k, int c);

// out[m x n], entry (i,j) = cosine of h1 row i and h2 row j.
// Rows with L2 norm below norm_floor produce entries of exactly 0.
// norms1 (length m) and norms2 (length n) receive the row norms when non-null.
void cosine_matrix(const double* h1, const double* h2, double* out,
                   int m, int n, int d,
                   double* norms1, double* norms2, double norm_floor);

// Accumulates gradients of the cosine matrix into g1[m x d] and g2[n x d].
// m_vals/norms are the forward results; pairs guarded to 0 pass no gradient.
void cosine_matrix_backward(const double* h1, const double* h2,
                            const double* m_vals,
                            const double* norms1, const double* norms2,
                            const double* grad_out,
                            double* g1, double* g2,
                            int m, int n, int d, double norm_floor);

} // namespace sgcn::kernels

namespace sgcn::serial {

void matmul(const double* a, const double* b, double* out, int r, int k, int c);
void matmul_grad_a(const double* g, const double* b, double* ga, int r, int k, int c);
void matmul_grad_b(const double* a, const double* g, double* gb, int r, int k, int c);
void cosine_matrix(const double* h1, const double* h2, double* out,
                   int m, int n, int d,
                   double* norms1, double* norms2, double norm_floor);
void cosine_matrix_backward(const double* h1, const double* h2,
                            const double* m_vals,
                            const double* norms1, const double* norms2,
                            const double* grad_out,
                            double* g1, double* g2,
                            int m, int n, int d, double norm_floor);

} // namespace sgcn::serial
