#pragma once

#include <algorithm>
#include <cmath>

#include "coopred/kernels/kernels.hpp"

namespace coopred::nn::detail {

/// Generic math entry points used by the autodiff ops. The float instantiation
/// routes through the runtime-dispatched kernel table; other types (double for
/// gradient checking) fall back to plain loops.

template <typename T>
void gemm_nn(int m, int k, int n, const T* a, const T* b, T* c, bool acc) {
  if (!acc) std::fill(c, c + static_cast<std::size_t>(m) * n, T(0));
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      for (int j = 0; j < n; ++j) c[i * n + j] += av * b[p * n + j];
    }
}

template <typename T>
void gemm_nt(int m, int k, int n, const T* a, const T* b, T* c, bool acc) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      T s = 0;
      for (int p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
      c[i * n + j] = acc ? c[i * n + j] + s : s;
    }
}

template <typename T>
void gemm_tn(int m, int k, int n, const T* a, const T* b, T* c, bool acc) {
  if (!acc) std::fill(c, c + static_cast<std::size_t>(k) * n, T(0));
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      for (int j = 0; j < n; ++j) c[p * n + j] += av * b[i * n + j];
    }
}

template <typename T>
void axpy(int n, T alpha, const T* x, T* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scal(int n, T alpha, T* x) {
  for (int i = 0; i < n; ++i) x[i] *= alpha;
}

template <typename T>
void vadd(int n, const T* x, const T* y, T* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

template <typename T>
void vmul(int n, const T* x, const T* y, T* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

template <typename T>
void vexp(int n, const T* x, T* out) {
  for (int i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

template <typename T>
void vtanh(int n, const T* x, T* out) {
  for (int i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

template <typename T>
void vsigmoid(int n, const T* x, T* out) {
  for (int i = 0; i < n; ++i) out[i] = T(1) / (T(1) + std::exp(-x[i]));
}

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluA = 0.044715;

template <typename T>
void gelu(int n, const T* x, T* out) {
  for (int i = 0; i < n; ++i) {
    const T v = x[i];
    const T u = T(kGeluC) * (v + T(kGeluA) * v * v * v);
    out[i] = T(0.5) * v * (T(1) + std::tanh(u));
  }
}

template <typename T>
void gelu_grad(int n, const T* x, const T* dy, T* dx) {
  for (int i = 0; i < n; ++i) {
    const T v = x[i];
    const T u = T(kGeluC) * (v + T(kGeluA) * v * v * v);
    const T t = std::tanh(u);
    const T du = T(kGeluC) * (T(1) + T(3) * T(kGeluA) * v * v);
    dx[i] += dy[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du);
  }
}

template <typename T>
T vsum(int n, const T* x) {
  T s = 0;
  for (int i = 0; i < n; ++i) s += x[i];
  return s;
}

template <typename T>
T vdot(int n, const T* x, const T* y) {
  T s = 0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
T vmax(int n, const T* x) {
  T s = x[0];
  for (int i = 1; i < n; ++i) s = x[i] > s ? x[i] : s;
  return s;
}

template <> inline void gemm_nn<float>(int m, int k, int n, const float* a, const float* b, float* c, bool acc) { kern::ops().gemm_nn(m, k, n, a, b, c, acc); }
template <> inline void gemm_nt<float>(int m, int k, int n, const float* a, const float* b, float* c, bool acc) { kern::ops().gemm_nt(m, k, n, a, b, c, acc); }
template <> inline void gemm_tn<float>(int m, int k, int n, const float* a, const float* b, float* c, bool acc) { kern::ops().gemm_tn(m, k, n, a, b, c, acc); }
template <> inline void axpy<float>(int n, float alpha, const float* x, float* y) { kern::ops().axpy(n, alpha, x, y); }
template <> inline void scal<float>(int n, float alpha, float* x) { kern::ops().scal(n, alpha, x); }
template <> inline void vadd<float>(int n, const float* x, const float* y, float* out) { kern::ops().vadd(n, x, y, out); }
template <> inline void vmul<float>(int n, const float* x, const float* y, float* out) { kern::ops().vmul(n, x, y, out); }
template <> inline void vexp<float>(int n, const float* x, float* out) { kern::ops().vexp(n, x, out); }
template <> inline void vtanh<float>(int n, const float* x, float* out) { kern::ops().vtanh(n, x, out); }
template <> inline void vsigmoid<float>(int n, const float* x, float* out) { kern::ops().vsigmoid(n, x, out); }
template <> inline void gelu<float>(int n, const float* x, float* out) { kern::ops().gelu(n, x, out); }
template <> inline void gelu_grad<float>(int n, const float* x, const float* dy, float* dx) { kern::ops().gelu_grad(n, x, dy, dx); }
template <> inline float vsum<float>(int n, const float* x) { return kern::ops().vsum(n, x); }
template <> inline float vdot<float>(int n, const float* x, const float* y) { return kern::ops().vdot(n, x, y); }
template <> inline float vmax<float>(int n, const float* x) { return kern::ops().vmax(n, x); }

}  // namespace coopred::nn::detail
