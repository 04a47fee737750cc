#pragma once

namespace coopred::kern {

enum class Backend { kScalar = 0, kAvx2 = 1 };

const char* to_string(Backend b);

/// True when this binary runs on a CPU with AVX2 and FMA.
bool avx2_available();

/// Backend the dispatch table currently resolves to. On first use this is
/// taken from the COOPRED_BACKEND environment variable ("scalar" or "avx2")
/// if set, otherwise from CPU detection. Requesting avx2 on an unsupported
/// CPU throws std::runtime_error.
Backend active_backend();
void set_backend(Backend b);

/// Single-precision primitives. Matrices are row-major and dense.
/// gemm_nn: c[m,n] = a[m,k] * b[k,n]
/// gemm_nt: c[m,n] = a[m,k] * b[n,k]^T
/// gemm_tn: c[k,n] = a[m,k]^T * b[m,n]
/// With acc set the product is added to c instead of overwriting it.
struct Ops {
  void (*gemm_nn)(int m, int k, int n, const float* a, const float* b, float* c, bool acc);
  void (*gemm_nt)(int m, int k, int n, const float* a, const float* b, float* c, bool acc);
  void (*gemm_tn)(int m, int k, int n, const float* a, const float* b, float* c, bool acc);
  void (*axpy)(int n, float alpha, const float* x, float* y);  // y += alpha * x
  void (*scal)(int n, float alpha, float* x);                  // x *= alpha
  void (*vadd)(int n, const float* x, const float* y, float* out);
  void (*vmul)(int n, const float* x, const float* y, float* out);
  void (*vexp)(int n, const float* x, float* out);
  void (*vtanh)(int n, const float* x, float* out);
  void (*vsigmoid)(int n, const float* x, float* out);
  void (*gelu)(int n, const float* x, float* out);
  void (*gelu_grad)(int n, const float* x, const float* dy, float* dx);  // dx += dy * gelu'(x)
  float (*vsum)(int n, const float* x);
  float (*vdot)(int n, const float* x, const float* y);
  float (*vmax)(int n, const float* x);  // n >= 1
};

/// Dispatch table for the active backend.
const Ops& ops();

/// Fixed tables, independent of the active backend (used by equivalence
/// tests). avx2_ops() throws std::runtime_error when unsupported.
const Ops& scalar_ops();
const Ops& avx2_ops();

}  // namespace coopred::kern
