#include <cmath>

#include "dactor/kernels.hpp"

namespace dactor::kernels {
namespace {

void combine_rows_scalar(const double* m, const double* init, const double* v, double* out,
                         std::size_t n, std::size_t depth, std::size_t width) {
  for (std::size_t b = 0; b < n; ++b) {
    double* o = out + b * width;
    const double* vb = v + b * depth;
    for (std::size_t j = 0; j < width; ++j) o[j] = init != nullptr ? init[j] : 0.0;
    for (std::size_t k = 0; k < depth; ++k) {
      const double c = vb[k];
      if (c == 0.0) continue;
      const double* mk = m + k * width;
      for (std::size_t j = 0; j < width; ++j) o[j] = std::fma(c, mk[j], o[j]);
    }
  }
}

void outer_acc_scalar(double* acc, const double* g, const double* x, std::size_t n,
                      std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* ar = acc + r * cols;
    for (std::size_t b = 0; b < n; ++b) {
      const double c = g[b * rows + r];
      if (c == 0.0) continue;
      const double* xb = x + b * cols;
      for (std::size_t j = 0; j < cols; ++j) ar[j] = std::fma(c, xb[j], ar[j]);
    }
  }
}

void lerp_scalar(double* target, const double* online, double tau, std::size_t n) {
  const double keep = 1.0 - tau;
  for (std::size_t i = 0; i < n; ++i) target[i] = tau * online[i] + keep * target[i];
}

void adam_scalar(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamCoefficients& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    params[i] = params[i] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", combine_rows_scalar, outer_acc_scalar, lerp_scalar,
                                 adam_scalar};
  return table;
}

}  // namespace dactor::kernels
