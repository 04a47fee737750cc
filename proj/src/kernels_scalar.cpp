#include <cmath>
#include <cstring>

#include "coopred/kernels/kernels.hpp"

namespace coopred::kern {
namespace {

void gemm_nn(int m, int k, int n, const float* a, const float* b, float* c, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(float) * static_cast<size_t>(m) * static_cast<size_t>(n));
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const float av = a[i * k + p];
      const float* brow = b + p * n;
      float* crow = c + i * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

void gemm_nt(int m, int k, int n, const float* a, const float* b, float* c, bool acc) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      float s = 0.0f;
      const float* arow = a + i * k;
      const float* brow = b + j * k;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] = acc ? c[i * n + j] + s : s;
    }
}

void gemm_tn(int m, int k, int n, const float* a, const float* b, float* c, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(float) * static_cast<size_t>(k) * static_cast<size_t>(n));
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const float av = a[i * k + p];
      const float* brow = b + i * n;
      float* crow = c + p * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
}

void axpy(int n, float alpha, const float* x, float* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal(int n, float alpha, float* x) {
  for (int i = 0; i < n; ++i) x[i] *= alpha;
}

void vadd(int n, const float* x, const float* y, float* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void vmul(int n, const float* x, const float* y, float* out) {
  for (int i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void vexp(int n, const float* x, float* out) {
  for (int i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void vtanh(int n, const float* x, float* out) {
  for (int i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}

void vsigmoid(int n, const float* x, float* out) {
  for (int i = 0; i < n; ++i) out[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluA = 0.044715f;

void gelu(int n, const float* x, float* out) {
  for (int i = 0; i < n; ++i) {
    const float v = x[i];
    const float u = kGeluC * (v + kGeluA * v * v * v);
    out[i] = 0.5f * v * (1.0f + std::tanh(u));
  }
}

void gelu_grad(int n, const float* x, const float* dy, float* dx) {
  for (int i = 0; i < n; ++i) {
    const float v = x[i];
    const float u = kGeluC * (v + kGeluA * v * v * v);
    const float t = std::tanh(u);
    const float du = kGeluC * (1.0f + 3.0f * kGeluA * v * v);
    dx[i] += dy[i] * (0.5f * (1.0f + t) + 0.5f * v * (1.0f - t * t) * du);
  }
}

float vsum(int n, const float* x) {
  float s = 0.0f;
  for (int i = 0; i < n; ++i) s += x[i];
  return s;
}

float vdot(int n, const float* x, const float* y) {
  float s = 0.0f;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

float vmax(int n, const float* x) {
  float s = x[0];
  for (int i = 1; i < n; ++i) s = x[i] > s ? x[i] : s;
  return s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table{gemm_nn, gemm_nt, gemm_tn, axpy,      scal, vadd, vmul, vexp,
                         vtanh,   vsigmoid, gelu,   gelu_grad, vsum, vdot, vmax};
  return table;
}

}  // namespace coopred::kern
