#include <atomic>
#include <cstdlib>

#include "dactor/kernels.hpp"

namespace dactor::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(DACTOR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* find(std::string_view name) {
  for (const KernelTable* t : available()) {
    if (t->name == name) return t;
  }
  return nullptr;
}

const KernelTable* initial_choice() {
  if (const char* env = std::getenv("DACTOR_KERNELS"); env != nullptr) {
    if (const KernelTable* t = find(env)) return t;
  }
  return available().back();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{initial_choice()};
  return current;
}

}  // namespace

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar_table()};
#if defined(DACTOR_HAVE_AVX2)
  if (cpu_has_avx2()) out.push_back(&avx2_table());
#endif
#if defined(DACTOR_HAVE_NEON)
  out.push_back(&neon_table());
#endif
  return out;
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  const KernelTable* t = find(name);
  if (t == nullptr) return false;
  slot().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace dactor::kernels
