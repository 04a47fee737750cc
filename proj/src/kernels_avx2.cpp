#include <immintrin.h>

#include <cstring>

#include "coopred/kernels/kernels.hpp"

namespace coopred::kern {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

inline float hmax(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_max_ps(lo, hi);
  lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

/// exp on 8 lanes: range reduction x = n*ln2 + r, degree-5 polynomial on r,
/// scale by 2^n through the float exponent field.
inline __m256 exp256(__m256 x) {
  x = _mm256_min_ps(x, _mm256_set1_ps(88.3762626647950f));
  x = _mm256_max_ps(x, _mm256_set1_ps(-87.3365478515625f));
  __m256 fx = _mm256_fmadd_ps(x, _mm256_set1_ps(1.44269504088896341f), _mm256_set1_ps(0.5f));
  fx = _mm256_floor_ps(fx);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(0.693359375f), x);
  x = _mm256_fnmadd_ps(fx, _mm256_set1_ps(-2.12194440e-4f), x);
  __m256 y = _mm256_set1_ps(1.9875691500e-4f);
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
  y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
  y = _mm256_fmadd_ps(y, _mm256_mul_ps(x, x), x);
  y = _mm256_add_ps(y, _mm256_set1_ps(1.0f));
  __m256i n = _mm256_cvtps_epi32(fx);
  n = _mm256_slli_epi32(_mm256_add_epi32(n, _mm256_set1_epi32(127)), 23);
  return _mm256_mul_ps(y, _mm256_castsi256_ps(n));
}

/// tanh on 8 lanes: odd polynomial below |x| = 0.625, 1 - 2/(exp(2|x|)+1)
/// above, signs restored at the end.
inline __m256 tanh256(__m256 x) {
  const __m256 sign_mask = _mm256_set1_ps(-0.0f);
  const __m256 sign = _mm256_and_ps(x, sign_mask);
  const __m256 ax = _mm256_andnot_ps(sign_mask, x);

  const __m256 z = _mm256_mul_ps(x, x);
  __m256 p = _mm256_set1_ps(-5.70498872745e-3f);
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(2.06390887954e-2f));
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(-5.37397155531e-2f));
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(1.33314422036e-1f));
  p = _mm256_fmadd_ps(p, z, _mm256_set1_ps(-3.33332819422e-1f));
  const __m256 small = _mm256_fmadd_ps(_mm256_mul_ps(p, z), x, x);

  const __m256 e = exp256(_mm256_add_ps(ax, ax));
  __m256 big = _mm256_sub_ps(
      _mm256_set1_ps(1.0f),
      _mm256_div_ps(_mm256_set1_ps(2.0f), _mm256_add_ps(e, _mm256_set1_ps(1.0f))));
  big = _mm256_or_ps(big, sign);

  const __m256 use_small = _mm256_cmp_ps(ax, _mm256_set1_ps(0.625f), _CMP_LT_OQ);
  return _mm256_blendv_ps(big, small, use_small);
}

void gemm_nn(int m, int k, int n, const float* a, const float* b, float* c, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(float) * static_cast<size_t>(m) * static_cast<size_t>(n));
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    const float *a0 = a + (i + 0) * k, *a1 = a + (i + 1) * k, *a2 = a + (i + 2) * k,
                *a3 = a + (i + 3) * k;
    float *c0 = c + (i + 0) * n, *c1 = c + (i + 1) * n, *c2 = c + (i + 2) * n,
          *c3 = c + (i + 3) * n;
    int j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256 v00 = _mm256_loadu_ps(c0 + j), v01 = _mm256_loadu_ps(c0 + j + 8);
      __m256 v10 = _mm256_loadu_ps(c1 + j), v11 = _mm256_loadu_ps(c1 + j + 8);
      __m256 v20 = _mm256_loadu_ps(c2 + j), v21 = _mm256_loadu_ps(c2 + j + 8);
      __m256 v30 = _mm256_loadu_ps(c3 + j), v31 = _mm256_loadu_ps(c3 + j + 8);
      for (int p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + p * n + j);
        const __m256 b1 = _mm256_loadu_ps(b + p * n + j + 8);
        __m256 w = _mm256_set1_ps(a0[p]);
        v00 = _mm256_fmadd_ps(w, b0, v00);
        v01 = _mm256_fmadd_ps(w, b1, v01);
        w = _mm256_set1_ps(a1[p]);
        v10 = _mm256_fmadd_ps(w, b0, v10);
        v11 = _mm256_fmadd_ps(w, b1, v11);
        w = _mm256_set1_ps(a2[p]);
        v20 = _mm256_fmadd_ps(w, b0, v20);
        v21 = _mm256_fmadd_ps(w, b1, v21);
        w = _mm256_set1_ps(a3[p]);
        v30 = _mm256_fmadd_ps(w, b0, v30);
        v31 = _mm256_fmadd_ps(w, b1, v31);
      }
      _mm256_storeu_ps(c0 + j, v00);
      _mm256_storeu_ps(c0 + j + 8, v01);
      _mm256_storeu_ps(c1 + j, v10);
      _mm256_storeu_ps(c1 + j + 8, v11);
      _mm256_storeu_ps(c2 + j, v20);
      _mm256_storeu_ps(c2 + j + 8, v21);
      _mm256_storeu_ps(c3 + j, v30);
      _mm256_storeu_ps(c3 + j + 8, v31);
    }
    for (; j + 8 <= n; j += 8) {
      __m256 v0 = _mm256_loadu_ps(c0 + j), v1 = _mm256_loadu_ps(c1 + j),
             v2 = _mm256_loadu_ps(c2 + j), v3 = _mm256_loadu_ps(c3 + j);
      for (int p = 0; p < k; ++p) {
        const __m256 bv = _mm256_loadu_ps(b + p * n + j);
        v0 = _mm256_fmadd_ps(_mm256_set1_ps(a0[p]), bv, v0);
        v1 = _mm256_fmadd_ps(_mm256_set1_ps(a1[p]), bv, v1);
        v2 = _mm256_fmadd_ps(_mm256_set1_ps(a2[p]), bv, v2);
        v3 = _mm256_fmadd_ps(_mm256_set1_ps(a3[p]), bv, v3);
      }
      _mm256_storeu_ps(c0 + j, v0);
      _mm256_storeu_ps(c1 + j, v1);
      _mm256_storeu_ps(c2 + j, v2);
      _mm256_storeu_ps(c3 + j, v3);
    }
    for (; j < n; ++j)
      for (int r = 0; r < 4; ++r) {
        const float* ar = a + (i + r) * k;
        float s = c[(i + r) * n + j];
        for (int p = 0; p < k; ++p) s += ar[p] * b[p * n + j];
        c[(i + r) * n + j] = s;
      }
  }
  for (; i < m; ++i) {
    const float* ar = a + i * k;
    float* cr = c + i * n;
    int j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256 v = _mm256_loadu_ps(cr + j);
      for (int p = 0; p < k; ++p)
        v = _mm256_fmadd_ps(_mm256_set1_ps(ar[p]), _mm256_loadu_ps(b + p * n + j), v);
      _mm256_storeu_ps(cr + j, v);
    }
    for (; j < n; ++j) {
      float s = cr[j];
      for (int p = 0; p < k; ++p) s += ar[p] * b[p * n + j];
      cr[j] = s;
    }
  }
}

void gemm_nt(int m, int k, int n, const float* a, const float* b, float* c, bool acc) {
  for (int i = 0; i < m; ++i) {
    const float* ar = a + i * k;
    for (int j = 0; j < n; ++j) {
      const float* br = b + j * k;
      __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
      int p = 0;
      for (; p + 16 <= k; p += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(ar + p), _mm256_loadu_ps(br + p), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(ar + p + 8), _mm256_loadu_ps(br + p + 8), acc1);
      }
      for (; p + 8 <= k; p += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(ar + p), _mm256_loadu_ps(br + p), acc0);
      float s = hsum(_mm256_add_ps(acc0, acc1));
      for (; p < k; ++p) s += ar[p] * br[p];
      c[i * n + j] = acc ? c[i * n + j] + s : s;
    }
  }
}

void gemm_tn(int m, int k, int n, const float* a, const float* b, float* c, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(float) * static_cast<size_t>(k) * static_cast<size_t>(n));
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    const float *b0 = b + (i + 0) * n, *b1 = b + (i + 1) * n, *b2 = b + (i + 2) * n,
                *b3 = b + (i + 3) * n;
    for (int p = 0; p < k; ++p) {
      const __m256 w0 = _mm256_set1_ps(a[(i + 0) * k + p]);
      const __m256 w1 = _mm256_set1_ps(a[(i + 1) * k + p]);
      const __m256 w2 = _mm256_set1_ps(a[(i + 2) * k + p]);
      const __m256 w3 = _mm256_set1_ps(a[(i + 3) * k + p]);
      float* cr = c + p * n;
      int j = 0;
      for (; j + 8 <= n; j += 8) {
        __m256 v = _mm256_loadu_ps(cr + j);
        v = _mm256_fmadd_ps(w0, _mm256_loadu_ps(b0 + j), v);
        v = _mm256_fmadd_ps(w1, _mm256_loadu_ps(b1 + j), v);
        v = _mm256_fmadd_ps(w2, _mm256_loadu_ps(b2 + j), v);
        v = _mm256_fmadd_ps(w3, _mm256_loadu_ps(b3 + j), v);
        _mm256_storeu_ps(cr + j, v);
      }
      for (; j < n; ++j)
        cr[j] += a[(i + 0) * k + p] * b0[j] + a[(i + 1) * k + p] * b1[j] +
                 a[(i + 2) * k + p] * b2[j] + a[(i + 3) * k + p] * b3[j];
    }
  }
  for (; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const float av = a[i * k + p];
      const float* br = b + i * n;
      float* cr = c + p * n;
      int j = 0;
      const __m256 w = _mm256_set1_ps(av);
      for (; j + 8 <= n; j += 8)
        _mm256_storeu_ps(cr + j, _mm256_fmadd_ps(w, _mm256_loadu_ps(br + j), _mm256_loadu_ps(cr + j)));
      for (; j < n; ++j) cr[j] += av * br[j];
    }
}

void axpy(int n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  int i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal(int n, float alpha, float* x) {
  const __m256 av = _mm256_set1_ps(alpha);
  int i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void vadd(int n, const float* x, const float* y, float* out) {
  int i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void vmul(int n, const float* x, const float* y, float* out) {
  int i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void vexp(int n, const float* x, float* out) {
  int i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, exp256(_mm256_loadu_ps(x + i)));
  if (i < n) {
    float buf_in[8] = {}, buf_out[8];
    for (int r = i; r < n; ++r) buf_in[r - i] = x[r];
    _mm256_storeu_ps(buf_out, exp256(_mm256_loadu_ps(buf_in)));
    for (int r = i; r < n; ++r) out[r] = buf_out[r - i];
  }
}

void vtanh(int n, const float* x, float* out) {
  int i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, tanh256(_mm256_loadu_ps(x + i)));
  if (i < n) {
    float buf_in[8] = {}, buf_out[8];
    for (int r = i; r < n; ++r) buf_in[r - i] = x[r];
    _mm256_storeu_ps(buf_out, tanh256(_mm256_loadu_ps(buf_in)));
    for (int r = i; r < n; ++r) out[r] = buf_out[r - i];
  }
}

void vsigmoid(int n, const float* x, float* out) {
  const __m256 one = _mm256_set1_ps(1.0f);
  auto block = [&](__m256 v) {
    return _mm256_div_ps(one, _mm256_add_ps(one, exp256(_mm256_sub_ps(_mm256_setzero_ps(), v))));
  };
  int i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, block(_mm256_loadu_ps(x + i)));
  if (i < n) {
    float buf_in[8] = {}, buf_out[8];
    for (int r = i; r < n; ++r) buf_in[r - i] = x[r];
    _mm256_storeu_ps(buf_out, block(_mm256_loadu_ps(buf_in)));
    for (int r = i; r < n; ++r) out[r] = buf_out[r - i];
  }
}

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluA = 0.044715f;

inline __m256 gelu_block(__m256 v) {
  const __m256 v3 = _mm256_mul_ps(_mm256_mul_ps(v, v), v);
  const __m256 u =
      _mm256_mul_ps(_mm256_set1_ps(kGeluC), _mm256_fmadd_ps(_mm256_set1_ps(kGeluA), v3, v));
  const __m256 t = tanh256(u);
  return _mm256_mul_ps(_mm256_mul_ps(_mm256_set1_ps(0.5f), v),
                       _mm256_add_ps(_mm256_set1_ps(1.0f), t));
}

void gelu(int n, const float* x, float* out) {
  int i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(out + i, gelu_block(_mm256_loadu_ps(x + i)));
  if (i < n) {
    float buf_in[8] = {}, buf_out[8];
    for (int r = i; r < n; ++r) buf_in[r - i] = x[r];
    _mm256_storeu_ps(buf_out, gelu_block(_mm256_loadu_ps(buf_in)));
    for (int r = i; r < n; ++r) out[r] = buf_out[r - i];
  }
}

inline __m256 gelu_grad_block(__m256 v, __m256 dy) {
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 v2 = _mm256_mul_ps(v, v);
  const __m256 u = _mm256_mul_ps(_mm256_set1_ps(kGeluC),
                                 _mm256_fmadd_ps(_mm256_set1_ps(kGeluA), _mm256_mul_ps(v2, v), v));
  const __m256 t = tanh256(u);
  const __m256 du = _mm256_mul_ps(_mm256_set1_ps(kGeluC),
                                  _mm256_fmadd_ps(_mm256_set1_ps(3.0f * kGeluA), v2, one));
  const __m256 sech2 = _mm256_fnmadd_ps(t, t, one);
  const __m256 g = _mm256_fmadd_ps(_mm256_mul_ps(_mm256_mul_ps(half, v), sech2), du,
                                   _mm256_mul_ps(half, _mm256_add_ps(one, t)));
  return _mm256_mul_ps(dy, g);
}

void gelu_grad(int n, const float* x, const float* dy, float* dx) {
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = gelu_grad_block(_mm256_loadu_ps(x + i), _mm256_loadu_ps(dy + i));
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), g));
  }
  if (i < n) {
    float bx[8] = {}, bdy[8] = {}, bg[8];
    for (int r = i; r < n; ++r) {
      bx[r - i] = x[r];
      bdy[r - i] = dy[r];
    }
    _mm256_storeu_ps(bg, gelu_grad_block(_mm256_loadu_ps(bx), _mm256_loadu_ps(bdy)));
    for (int r = i; r < n; ++r) dx[r] += bg[r - i];
  }
}

float vsum(int n, const float* x) {
  __m256 acc = _mm256_setzero_ps();
  int i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

float vdot(int n, const float* x, const float* y) {
  __m256 acc = _mm256_setzero_ps();
  int i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc);
  float s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

float vmax(int n, const float* x) {
  if (n < 8) {
    float s = x[0];
    for (int i = 1; i < n; ++i) s = x[i] > s ? x[i] : s;
    return s;
  }
  __m256 acc = _mm256_loadu_ps(x);
  int i = 8;
  for (; i + 8 <= n; i += 8) acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
  float s = hmax(acc);
  for (; i < n; ++i) s = x[i] > s ? x[i] : s;
  return s;
}

}  // namespace

const Ops& avx2_ops_impl() {
  static const Ops table{gemm_nn, gemm_nt, gemm_tn, axpy,      scal, vadd, vmul, vexp,
                         vtanh,   vsigmoid, gelu,   gelu_grad, vsum, vdot, vmax};
  return table;
}

}  // namespace coopred::kern
