#pragma once

// Dense double-precision kernels behind the network numerics.
//
// Every variant (scalar reference, AVX2, NEON) evaluates the same sequence of
// IEEE operations, so results are bitwise identical whichever one is selected:
//  * combine_rows and outer_acc accumulate terms in ascending index order, each
//    as one fused multiply-add (std::fma in the scalar reference), and skip
//    terms whose coefficient is exactly zero;
//  * lerp and adam use plain multiplies and adds;
//  * the build uses -ffp-contract=off so the compiler never fuses anything else.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dactor::kernels {

struct AdamCoefficients {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  std::string_view name;

  // out[b, :] = init (zeros when init is null), then for k ascending with v[b, k] != 0:
  //   out[b, j] = fma(v[b, k], m[k, j], out[b, j])
  // m is (depth x width) row-major, v is (n x depth), out is (n x width).
  void (*combine_rows)(const double* m, const double* init, const double* v, double* out,
                       std::size_t n, std::size_t depth, std::size_t width);

  // For each r, for b ascending with g[b, r] != 0:
  //   acc[r, j] = fma(g[b, r], x[b, j], acc[r, j])
  // acc is (rows x cols), g is (n x rows), x is (n x cols).
  void (*outer_acc)(double* acc, const double* g, const double* x, std::size_t n,
                    std::size_t rows, std::size_t cols);

  // target[i] = tau * online[i] + (1 - tau) * target[i]
  void (*lerp)(double* target, const double* online, double tau, std::size_t n);

  // Bias-corrected Adam update of params in place.
  void (*adam)(double* params, const double* grads, double* m, double* v, std::size_t n,
               const AdamCoefficients& c);
};

const KernelTable& scalar_table();
#if defined(DACTOR_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(DACTOR_HAVE_NEON)
const KernelTable& neon_table();
#endif

/// Variants compiled in and supported by the running CPU, scalar first.
std::vector<const KernelTable*> available();

/// The table used by the library. Chosen on first use: the DACTOR_KERNELS
/// environment variable ("scalar", "avx2", "neon") if set, else the widest
/// supported variant.
const KernelTable& active();

/// Overrides the active table; returns false if the name is unknown or unsupported.
bool select(std::string_view name);

}  // namespace dactor::kernels
