#include <cstdlib>
#include <stdexcept>
#include <string>

#include "coopred/kernels/kernels.hpp"

namespace coopred::kern {

#ifdef COOPRED_HAVE_AVX2
const Ops& avx2_ops_impl();
#endif

const char* to_string(Backend b) { return b == Backend::kAvx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#if defined(COOPRED_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& avx2_ops() {
#ifdef COOPRED_HAVE_AVX2
  if (avx2_available()) return avx2_ops_impl();
#endif
  throw std::runtime_error("avx2 kernels are not available on this CPU/build");
}

namespace {

Backend resolve_initial() {
  if (const char* env = std::getenv("COOPRED_BACKEND")) {
    const std::string v(env);
    if (v == "scalar") return Backend::kScalar;
    if (v == "avx2") {
      if (!avx2_available())
        throw std::runtime_error("COOPRED_BACKEND=avx2 but avx2 is not available");
      return Backend::kAvx2;
    }
    throw std::runtime_error("COOPRED_BACKEND must be 'scalar' or 'avx2', got '" + v + "'");
  }
  return avx2_available() ? Backend::kAvx2 : Backend::kScalar;
}

Backend& state() {
  static Backend b = resolve_initial();
  return b;
}

}  // namespace

Backend active_backend() { return state(); }

void set_backend(Backend b) {
  if (b == Backend::kAvx2) (void)avx2_ops();  // validates availability
  state() = b;
}

const Ops& ops() { return state() == Backend::kAvx2 ? avx2_ops() : scalar_ops(); }

}  // namespace coopred::kern
