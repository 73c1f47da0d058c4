// AArch64 Advanced SIMD variant.
#include <arm_neon.h>

#include <cmath>

#include "dactor/kernels.hpp"

namespace dactor::kernels {
namespace {

void combine_rows_neon(const double* m, const double* init, const double* v, double* out,
                       std::size_t n, std::size_t depth, std::size_t width) {
  for (std::size_t b = 0; b < n; ++b) {
    double* o = out + b * width;
    const double* vb = v + b * depth;
    for (std::size_t j = 0; j < width; ++j) o[j] = init != nullptr ? init[j] : 0.0;
    for (std::size_t k = 0; k < depth; ++k) {
      const double c = vb[k];
      if (c == 0.0) continue;
      const double* mk = m + k * width;
      const float64x2_t vc = vdupq_n_f64(c);
      std::size_t j = 0;
      for (; j + 2 <= width; j += 2) vst1q_f64(o + j, vfmaq_f64(vld1q_f64(o + j), vc, vld1q_f64(mk + j)));
      for (; j < width; ++j) o[j] = std::fma(c, mk[j], o[j]);
    }
  }
}

void outer_acc_neon(double* acc, const double* g, const double* x, std::size_t n,
                    std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* ar = acc + r * cols;
    for (std::size_t b = 0; b < n; ++b) {
      const double c = g[b * rows + r];
      if (c == 0.0) continue;
      const double* xb = x + b * cols;
      const float64x2_t vc = vdupq_n_f64(c);
      std::size_t j = 0;
      for (; j + 2 <= cols; j += 2) vst1q_f64(ar + j, vfmaq_f64(vld1q_f64(ar + j), vc, vld1q_f64(xb + j)));
      for (; j < cols; ++j) ar[j] = std::fma(c, xb[j], ar[j]);
    }
  }
}

void lerp_neon(double* target, const double* online, double tau, std::size_t n) {
  const double keep = 1.0 - tau;
  const float64x2_t vt = vdupq_n_f64(tau), vk = vdupq_n_f64(keep);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(target + i,
              vaddq_f64(vmulq_f64(vt, vld1q_f64(online + i)), vmulq_f64(vk, vld1q_f64(target + i))));
  }
  for (; i < n; ++i) target[i] = tau * online[i] + keep * target[i];
}

void adam_neon(double* params, const double* grads, double* m, double* v, std::size_t n,
               const AdamCoefficients& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grads + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(vdupq_n_f64(c.beta1), vld1q_f64(m + i)),
                                     vmulq_f64(vdupq_n_f64(one_minus_b1), g));
    const float64x2_t vi = vaddq_f64(vmulq_f64(vdupq_n_f64(c.beta2), vld1q_f64(v + i)),
                                     vmulq_f64(vdupq_n_f64(one_minus_b2), vmulq_f64(g, g)));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, vdupq_n_f64(c.bias_correction1));
    const float64x2_t v_hat = vdivq_f64(vi, vdupq_n_f64(c.bias_correction2));
    const float64x2_t step = vdivq_f64(vmulq_f64(vdupq_n_f64(c.learning_rate), m_hat),
                                       vaddq_f64(vsqrtq_f64(v_hat), vdupq_n_f64(c.epsilon)));
    vst1q_f64(params + i, vsubq_f64(vld1q_f64(params + i), step));
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

const KernelTable& neon_table() {
  static const KernelTable table{"neon", combine_rows_neon, outer_acc_neon, lerp_neon, adam_neon};
  return table;
}

}  // namespace dactor::kernels
