// Compiled with -mavx2 -mfma. Only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>
#include <vector>

#include "dactor/kernels.hpp"

namespace dactor::kernels {
namespace {

// Indices k < depth with v[k] != 0, written without branches.
std::size_t nonzero_indices(const double* v, std::size_t depth, std::size_t stride,
                            std::vector<std::size_t>& idx) {
  idx.resize(depth);
  std::size_t count = 0;
  for (std::size_t k = 0; k < depth; ++k) {
    idx[count] = k;
    count += v[k * stride] != 0.0 ? 1 : 0;
  }
  return count;
}

template <int Lanes>
inline void combine_block(const double* m, const double* init, const double* vb,
                          const std::size_t* idx, std::size_t count, double* o, std::size_t width,
                          std::size_t j) {
  __m256d s[Lanes];
  for (int q = 0; q < Lanes; ++q) {
    s[q] = init != nullptr ? _mm256_loadu_pd(init + j + 4 * q) : _mm256_setzero_pd();
  }
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t k = idx[t];
    const __m256d c = _mm256_set1_pd(vb[k]);
    const double* mk = m + k * width + j;
    for (int q = 0; q < Lanes; ++q) s[q] = _mm256_fmadd_pd(c, _mm256_loadu_pd(mk + 4 * q), s[q]);
  }
  for (int q = 0; q < Lanes; ++q) _mm256_storeu_pd(o + j + 4 * q, s[q]);
}

// Output widths below one register: four samples advance together, each with its own chain.
void combine_rows_narrow(const double* m, const double* init, const double* v, double* out,
                         std::size_t n, std::size_t depth, std::size_t width) {
  std::size_t b = 0;
  for (; b + 4 <= n; b += 4) {
    const double* v0 = v + b * depth;
    const double* v1 = v0 + depth;
    const double* v2 = v1 + depth;
    const double* v3 = v2 + depth;
    for (std::size_t j = 0; j < width; ++j) {
      const double start = init != nullptr ? init[j] : 0.0;
      double s0 = start, s1 = start, s2 = start, s3 = start;
      for (std::size_t k = 0; k < depth; ++k) {
        const double mk = m[k * width + j];
        const double t0 = std::fma(v0[k], mk, s0);
        const double t1 = std::fma(v1[k], mk, s1);
        const double t2 = std::fma(v2[k], mk, s2);
        const double t3 = std::fma(v3[k], mk, s3);
        s0 = v0[k] != 0.0 ? t0 : s0;
        s1 = v1[k] != 0.0 ? t1 : s1;
        s2 = v2[k] != 0.0 ? t2 : s2;
        s3 = v3[k] != 0.0 ? t3 : s3;
      }
      out[b * width + j] = s0;
      out[(b + 1) * width + j] = s1;
      out[(b + 2) * width + j] = s2;
      out[(b + 3) * width + j] = s3;
    }
  }
  for (; b < n; ++b) {
    const double* vb = v + b * depth;
    for (std::size_t j = 0; j < width; ++j) {
      double s = init != nullptr ? init[j] : 0.0;
      for (std::size_t k = 0; k < depth; ++k) {
        if (vb[k] != 0.0) s = std::fma(vb[k], m[k * width + j], s);
      }
      out[b * width + j] = s;
    }
  }
}

void combine_rows_avx2(const double* m, const double* init, const double* v, double* out,
                       std::size_t n, std::size_t depth, std::size_t width) {
  if (width < 4) {
    combine_rows_narrow(m, init, v, out, n, depth, width);
    return;
  }
  thread_local std::vector<std::size_t> idx;
  for (std::size_t b = 0; b < n; ++b) {
    const double* vb = v + b * depth;
    double* o = out + b * width;
    const std::size_t count = nonzero_indices(vb, depth, 1, idx);
    std::size_t j = 0;
    for (; j + 32 <= width; j += 32) combine_block<8>(m, init, vb, idx.data(), count, o, width, j);
    for (; j + 16 <= width; j += 16) combine_block<4>(m, init, vb, idx.data(), count, o, width, j);
    for (; j + 4 <= width; j += 4) combine_block<1>(m, init, vb, idx.data(), count, o, width, j);
    for (; j < width; ++j) {
      double sj = init != nullptr ? init[j] : 0.0;
      for (std::size_t t = 0; t < count; ++t) sj = std::fma(vb[idx[t]], m[idx[t] * width + j], sj);
      o[j] = sj;
    }
  }
}

template <int Lanes>
inline void outer_block(double* ar, const double* g, const double* x, const std::size_t* idx,
                        std::size_t count, std::size_t rows, std::size_t cols, std::size_t j) {
  __m256d s[Lanes];
  for (int q = 0; q < Lanes; ++q) s[q] = _mm256_loadu_pd(ar + j + 4 * q);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t b = idx[t];
    const __m256d c = _mm256_set1_pd(g[b * rows]);
    const double* xb = x + b * cols + j;
    for (int q = 0; q < Lanes; ++q) s[q] = _mm256_fmadd_pd(c, _mm256_loadu_pd(xb + 4 * q), s[q]);
  }
  for (int q = 0; q < Lanes; ++q) _mm256_storeu_pd(ar + j + 4 * q, s[q]);
}

// Narrow inputs: four rows advance together over the samples.
void outer_acc_narrow(double* acc, const double* g, const double* x, std::size_t n,
                      std::size_t rows, std::size_t cols) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    for (std::size_t j = 0; j < cols; ++j) {
      double s0 = acc[r * cols + j], s1 = acc[(r + 1) * cols + j];
      double s2 = acc[(r + 2) * cols + j], s3 = acc[(r + 3) * cols + j];
      for (std::size_t b = 0; b < n; ++b) {
        const double xb = x[b * cols + j];
        const double* gb = g + b * rows + r;
        const double t0 = std::fma(gb[0], xb, s0);
        const double t1 = std::fma(gb[1], xb, s1);
        const double t2 = std::fma(gb[2], xb, s2);
        const double t3 = std::fma(gb[3], xb, s3);
        s0 = gb[0] != 0.0 ? t0 : s0;
        s1 = gb[1] != 0.0 ? t1 : s1;
        s2 = gb[2] != 0.0 ? t2 : s2;
        s3 = gb[3] != 0.0 ? t3 : s3;
      }
      acc[r * cols + j] = s0;
      acc[(r + 1) * cols + j] = s1;
      acc[(r + 2) * cols + j] = s2;
      acc[(r + 3) * cols + j] = s3;
    }
  }
  for (; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) {
      double s = acc[r * cols + j];
      for (std::size_t b = 0; b < n; ++b) {
        const double c = g[b * rows + r];
        if (c != 0.0) s = std::fma(c, x[b * cols + j], s);
      }
      acc[r * cols + j] = s;
    }
  }
}

void outer_acc_avx2(double* acc, const double* g, const double* x, std::size_t n, std::size_t rows,
                    std::size_t cols) {
  if (cols < 4) {
    outer_acc_narrow(acc, g, x, n, rows, cols);
    return;
  }
  thread_local std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < rows; ++r) {
    double* ar = acc + r * cols;
    const double* gr = g + r;
    const std::size_t count = nonzero_indices(gr, n, rows, idx);
    std::size_t j = 0;
    for (; j + 32 <= cols; j += 32) outer_block<8>(ar, gr, x, idx.data(), count, rows, cols, j);
    for (; j + 16 <= cols; j += 16) outer_block<4>(ar, gr, x, idx.data(), count, rows, cols, j);
    for (; j + 4 <= cols; j += 4) outer_block<1>(ar, gr, x, idx.data(), count, rows, cols, j);
    for (; j < cols; ++j) {
      double sj = ar[j];
      for (std::size_t t = 0; t < count; ++t) {
        const std::size_t b = idx[t];
        sj = std::fma(gr[b * rows], x[b * cols + j], sj);
      }
      ar[j] = sj;
    }
  }
}

void lerp_avx2(double* target, const double* online, double tau, std::size_t n) {
  const double keep = 1.0 - tau;
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d vk = _mm256_set1_pd(keep);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_mul_pd(vt, _mm256_loadu_pd(online + i));
    const __m256d b = _mm256_mul_pd(vk, _mm256_loadu_pd(target + i));
    _mm256_storeu_pd(target + i, _mm256_add_pd(a, b));
  }
  for (; i < n; ++i) target[i] = tau * online[i] + keep * target[i];
}

void adam_avx2(double* params, const double* grads, double* m, double* v, std::size_t n,
               const AdamCoefficients& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d omb1 = _mm256_set1_pd(one_minus_b1);
  const __m256d omb2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.learning_rate);
  const __m256d eps = _mm256_set1_pd(c.epsilon);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grads + i);
    const __m256d mi =
        _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(params + i, _mm256_sub_pd(_mm256_loadu_pd(params + i), step));
  }
  for (; i < n; ++i) {
    const double gi = grads[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * gi;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (gi * gi);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    params[i] = params[i] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", combine_rows_avx2, outer_acc_avx2, lerp_avx2, adam_avx2};
  return table;
}

}  // namespace dactor::kernels
