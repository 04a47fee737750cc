#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopred/nn/detail_math.hpp"
#include "coopred/nn/tensor.hpp"

namespace coopred::nn {

/// One destination row attending over a contiguous block of key/value rows.
struct AttentionSegment {
  int q_row = 0;
  int k_begin = 0;
  int k_end = 0;
};

/// Reverse-mode tape over 2-D tensors. Ops evaluate eagerly and record a
/// backward closure; backward(root) replays closures in reverse creation
/// order. Parameter leaves bind to external value/gradient storage so the
/// same weights can be reused across many graphs, with gradients
/// accumulating in place.
template <typename T>
class Graph {
 public:
  using Id = std::int32_t;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() { nodes_.clear(); }

  const Tensor<T>& val(Id id) const { return *nodes_[static_cast<std::size_t>(id)].value_ptr; }
  Tensor<T>& grad(Id id) { return *nodes_[static_cast<std::size_t>(id)].gradient_ptr; }

  /// Constant leaf; gradient is tracked but normally unread.
  Id leaf(Tensor<T> v) { return make(std::move(v)); }

  Id zeros(int rows, int cols) { return make(Tensor<T>(rows, cols)); }

  /// Leaf bound to external weight and gradient storage. Both must outlive
  /// the graph. Backward accumulates into `gradient` without zeroing it.
  Id param(const Tensor<T>& value, Tensor<T>& gradient) {
    if (!value.same_shape(gradient)) fail("param: value/gradient shape mismatch");
    Node n;
    n.value_ptr = &value;
    n.gradient_ptr = &gradient;
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
  }

  Id matmul(Id a, Id b) {
    const auto &A = val(a), &B = val(b);
    if (A.cols != B.rows) fail("matmul: inner dimensions differ");
    Tensor<T> out(A.rows, B.cols);
    detail::gemm_nn(A.rows, A.cols, B.cols, A.data.data(), B.data.data(), out.data.data(), false);
    const Id id = make(std::move(out));
    set_bwd(id, [a, b, id](Graph& g) {
      const auto& dC = g.grad(id);
      const auto &A2 = g.val(a), &B2 = g.val(b);
      detail::gemm_nt(A2.rows, B2.cols, A2.cols, dC.data.data(), B2.data.data(),
                      g.grad(a).data.data(), true);
      detail::gemm_tn(A2.rows, A2.cols, B2.cols, A2.data.data(), dC.data.data(),
                      g.grad(b).data.data(), true);
    });
    return id;
  }

  Id add(Id a, Id b) {
    const auto &A = val(a), &B = val(b);
    if (!A.same_shape(B)) fail("add: shape mismatch");
    Tensor<T> out(A.rows, A.cols);
    detail::vadd(static_cast<int>(A.size()), A.data.data(), B.data.data(), out.data.data());
    const Id id = make(std::move(out));
    set_bwd(id, [a, b, id](Graph& g) {
      const auto& dC = g.grad(id);
      const int n = static_cast<int>(dC.size());
      detail::axpy(n, T(1), dC.data.data(), g.grad(a).data.data());
      detail::axpy(n, T(1), dC.data.data(), g.grad(b).data.data());
    });
    return id;
  }

  /// Row-broadcast bias: out[i,:] = a[i,:] + bias[0,:].
  Id add_bias(Id a, Id bias) {
    const auto &A = val(a), &B = val(bias);
    if (B.rows != 1 || B.cols != A.cols) fail("add_bias: bias must be 1 x cols(a)");
    Tensor<T> out(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i)
      detail::vadd(A.cols, A.row(i), B.row(0), out.row(i));
    const Id id = make(std::move(out));
    set_bwd(id, [a, bias, id](Graph& g) {
      const auto& dC = g.grad(id);
      detail::axpy(static_cast<int>(dC.size()), T(1), dC.data.data(), g.grad(a).data.data());
      auto& dB = g.grad(bias);
      for (int i = 0; i < dC.rows; ++i) detail::axpy(dC.cols, T(1), dC.row(i), dB.row(0));
    });
    return id;
  }

  Id linear(Id x, Id w, Id b) { return add_bias(matmul(x, w), b); }

  Id mul(Id a, Id b) {
    const auto &A = val(a), &B = val(b);
    if (!A.same_shape(B)) fail("mul: shape mismatch");
    Tensor<T> out(A.rows, A.cols);
    detail::vmul(static_cast<int>(A.size()), A.data.data(), B.data.data(), out.data.data());
    const Id id = make(std::move(out));
    set_bwd(id, [a, b, id](Graph& g) {
      const auto& dC = g.grad(id);
      const int n = static_cast<int>(dC.size());
      Tensor<T> tmp(dC.rows, dC.cols);
      detail::vmul(n, dC.data.data(), g.val(b).data.data(), tmp.data.data());
      detail::axpy(n, T(1), tmp.data.data(), g.grad(a).data.data());
      detail::vmul(n, dC.data.data(), g.val(a).data.data(), tmp.data.data());
      detail::axpy(n, T(1), tmp.data.data(), g.grad(b).data.data());
    });
    return id;
  }

  /// out = alpha * a + beta (elementwise).
  Id affine(Id a, T alpha, T beta) {
    const auto& A = val(a);
    Tensor<T> out(A.rows, A.cols);
    for (std::size_t i = 0; i < A.size(); ++i) out.data[i] = alpha * A.data[i] + beta;
    const Id id = make(std::move(out));
    set_bwd(id, [a, alpha, id](Graph& g) {
      const auto& dC = g.grad(id);
      detail::axpy(static_cast<int>(dC.size()), alpha, dC.data.data(), g.grad(a).data.data());
    });
    return id;
  }

  Id scale(Id a, T alpha) { return affine(a, alpha, T(0)); }

  Id gelu(Id a) {
    const auto& A = val(a);
    Tensor<T> out(A.rows, A.cols);
    detail::gelu(static_cast<int>(A.size()), A.data.data(), out.data.data());
    const Id id = make(std::move(out));
    set_bwd(id, [a, id](Graph& g) {
      const auto& dC = g.grad(id);
      detail::gelu_grad(static_cast<int>(dC.size()), g.val(a).data.data(), dC.data.data(),
                        g.grad(a).data.data());
    });
    return id;
  }

  Id tanh_op(Id a) {
    const auto& A = val(a);
    Tensor<T> out(A.rows, A.cols);
    detail::vtanh(static_cast<int>(A.size()), A.data.data(), out.data.data());
    const Id id = make(std::move(out));
    set_bwd(id, [a, id](Graph& g) {
      const auto& dC = g.grad(id);
      const auto& Y = g.val(id);
      auto& dA = g.grad(a);
      for (std::size_t i = 0; i < dC.size(); ++i)
        dA.data[i] += dC.data[i] * (T(1) - Y.data[i] * Y.data[i]);
    });
    return id;
  }

  Id sigmoid_op(Id a) {
    const auto& A = val(a);
    Tensor<T> out(A.rows, A.cols);
    detail::vsigmoid(static_cast<int>(A.size()), A.data.data(), out.data.data());
    const Id id = make(std::move(out));
    set_bwd(id, [a, id](Graph& g) {
      const auto& dC = g.grad(id);
      const auto& Y = g.val(id);
      auto& dA = g.grad(a);
      for (std::size_t i = 0; i < dC.size(); ++i)
        dA.data[i] += dC.data[i] * Y.data[i] * (T(1) - Y.data[i]);
    });
    return id;
  }

  /// Per-row layer normalization with learned gain/shift (each 1 x cols).
  Id layer_norm(Id a, Id gamma, Id beta) {
    const auto &A = val(a), &G = val(gamma), &Bt = val(beta);
    if (G.rows != 1 || G.cols != A.cols || !G.same_shape(Bt))
      fail("layer_norm: gain/shift must be 1 x cols(a)");
    const int m = A.rows, n = A.cols;
    const T eps = T(1e-5);
    auto xhat = std::make_shared<Tensor<T>>(m, n);
    auto istd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(m));
    Tensor<T> out(m, n);
    for (int i = 0; i < m; ++i) {
      const T* x = A.row(i);
      T* xh = xhat->row(i);
      const T mu = detail::vsum(n, x) / T(n);
      for (int j = 0; j < n; ++j) xh[j] = x[j] - mu;
      const T var = detail::vdot(n, xh, xh) / T(n);
      const T is = T(1) / std::sqrt(var + eps);
      (*istd)[static_cast<std::size_t>(i)] = is;
      detail::scal(n, is, xh);
      T* o = out.row(i);
      for (int j = 0; j < n; ++j) o[j] = G.row(0)[j] * xh[j] + Bt.row(0)[j];
    }
    const Id id = make(std::move(out));
    set_bwd(id, [a, gamma, beta, id, xhat, istd](Graph& g) {
      const auto& dC = g.grad(id);
      const auto& G2 = g.val(gamma);
      auto& dA = g.grad(a);
      auto& dG = g.grad(gamma);
      auto& dB = g.grad(beta);
      const int m2 = dC.rows, n2 = dC.cols;
      std::vector<T> dxh(static_cast<std::size_t>(n2));
      for (int i = 0; i < m2; ++i) {
        const T* dy = dC.row(i);
        const T* xh = xhat->row(i);
        const T is = (*istd)[static_cast<std::size_t>(i)];
        for (int j = 0; j < n2; ++j) {
          dxh[static_cast<std::size_t>(j)] = dy[j] * G2.row(0)[j];
          dG.row(0)[j] += dy[j] * xh[j];
          dB.row(0)[j] += dy[j];
        }
        const T m1 = detail::vsum(n2, dxh.data()) / T(n2);
        const T m2v = detail::vdot(n2, dxh.data(), xh) / T(n2);
        T* da = dA.row(i);
        for (int j = 0; j < n2; ++j)
          da[j] += is * (dxh[static_cast<std::size_t>(j)] - m1 - xh[j] * m2v);
      }
    });
    return id;
  }

  Id concat_cols(const std::vector<Id>& parts) {
    if (parts.empty()) fail("concat_cols: empty");
    const int m = val(parts[0]).rows;
    int total = 0;
    for (Id p : parts) {
      if (val(p).rows != m) fail("concat_cols: row mismatch");
      total += val(p).cols;
    }
    Tensor<T> out(m, total);
    int off = 0;
    for (Id p : parts) {
      const auto& P = val(p);
      for (int i = 0; i < m; ++i)
        std::copy(P.row(i), P.row(i) + P.cols, out.row(i) + off);
      off += P.cols;
    }
    const Id id = make(std::move(out));
    set_bwd(id, [parts, id](Graph& g) {
      const auto& dC = g.grad(id);
      int off2 = 0;
      for (Id p : parts) {
        auto& dP = g.grad(p);
        for (int i = 0; i < dC.rows; ++i)
          detail::axpy(dP.cols, T(1), dC.row(i) + off2, dP.row(i));
        off2 += dP.cols;
      }
    });
    return id;
  }

  Id concat_rows(const std::vector<Id>& parts) {
    if (parts.empty()) fail("concat_rows: empty");
    const int n = val(parts[0]).cols;
    int total = 0;
    for (Id p : parts) {
      if (val(p).cols != n) fail("concat_rows: col mismatch");
      total += val(p).rows;
    }
    Tensor<T> out(total, n);
    int off = 0;
    for (Id p : parts) {
      const auto& P = val(p);
      std::copy(P.data.begin(), P.data.end(), out.data.begin() + static_cast<std::size_t>(off) * n);
      off += P.rows;
    }
    const Id id = make(std::move(out));
    set_bwd(id, [parts, id](Graph& g) {
      const auto& dC = g.grad(id);
      int off2 = 0;
      for (Id p : parts) {
        auto& dP = g.grad(p);
        detail::axpy(static_cast<int>(dP.size()), T(1),
                     dC.data.data() + static_cast<std::size_t>(off2) * dC.cols, dP.data.data());
        off2 += dP.rows;
      }
    });
    return id;
  }

  Id slice_cols(Id a, int c0, int c1) {
    const auto& A = val(a);
    if (c0 < 0 || c1 > A.cols || c0 >= c1) fail("slice_cols: bad range");
    Tensor<T> out(A.rows, c1 - c0);
    for (int i = 0; i < A.rows; ++i) std::copy(A.row(i) + c0, A.row(i) + c1, out.row(i));
    const Id id = make(std::move(out));
    set_bwd(id, [a, c0, id](Graph& g) {
      const auto& dC = g.grad(id);
      auto& dA = g.grad(a);
      for (int i = 0; i < dC.rows; ++i) detail::axpy(dC.cols, T(1), dC.row(i), dA.row(i) + c0);
    });
    return id;
  }

  Id slice_rows(Id a, int r0, int r1) {
    const auto& A = val(a);
    if (r0 < 0 || r1 > A.rows || r0 >= r1) fail("slice_rows: bad range");
    Tensor<T> out(r1 - r0, A.cols);
    std::copy(A.row(r0), A.row(r0) + static_cast<std::size_t>(r1 - r0) * A.cols, out.data.data());
    const Id id = make(std::move(out));
    set_bwd(id, [a, r0, id](Graph& g) {
      const auto& dC = g.grad(id);
      auto& dA = g.grad(a);
      detail::axpy(static_cast<int>(dC.size()), T(1), dC.data.data(), dA.row(r0));
    });
    return id;
  }

  Id gather_rows(Id a, std::vector<int> idx) {
    const auto& A = val(a);
    Tensor<T> out(static_cast<int>(idx.size()), A.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= A.rows) fail("gather_rows: index out of range");
      std::copy(A.row(idx[i]), A.row(idx[i]) + A.cols, out.row(static_cast<int>(i)));
    }
    const Id id = make(std::move(out));
    auto ix = std::make_shared<std::vector<int>>(std::move(idx));
    set_bwd(id, [a, id, ix](Graph& g) {
      const auto& dC = g.grad(id);
      auto& dA = g.grad(a);
      for (std::size_t i = 0; i < ix->size(); ++i)
        detail::axpy(dC.cols, T(1), dC.row(static_cast<int>(i)), dA.row((*ix)[i]));
    });
    return id;
  }

  /// Each row of `a` repeated `times` consecutive times.
  Id repeat_rows(Id a, int times) {
    const auto& A = val(a);
    if (times < 1) fail("repeat_rows: times < 1");
    Tensor<T> out(A.rows * times, A.cols);
    for (int i = 0; i < A.rows; ++i)
      for (int r = 0; r < times; ++r)
        std::copy(A.row(i), A.row(i) + A.cols, out.row(i * times + r));
    const Id id = make(std::move(out));
    set_bwd(id, [a, times, id](Graph& g) {
      const auto& dC = g.grad(id);
      auto& dA = g.grad(a);
      for (int i = 0; i < dA.rows; ++i)
        for (int r = 0; r < times; ++r)
          detail::axpy(dC.cols, T(1), dC.row(i * times + r), dA.row(i));
    });
    return id;
  }

  /// a has rows B * rows(tile); adds `tile` to every consecutive block.
  Id tile_add(Id a, Id tile) {
    const auto &A = val(a), &P = val(tile);
    if (P.rows == 0 || A.rows % P.rows != 0 || A.cols != P.cols)
      fail("tile_add: shape mismatch");
    const int blocks = A.rows / P.rows;
    Tensor<T> out(A.rows, A.cols);
    for (int b = 0; b < blocks; ++b)
      for (int t = 0; t < P.rows; ++t)
        detail::vadd(A.cols, A.row(b * P.rows + t), P.row(t), out.row(b * P.rows + t));
    const Id id = make(std::move(out));
    set_bwd(id, [a, tile, id, blocks](Graph& g) {
      const auto& dC = g.grad(id);
      detail::axpy(static_cast<int>(dC.size()), T(1), dC.data.data(), g.grad(a).data.data());
      auto& dP = g.grad(tile);
      for (int b = 0; b < blocks; ++b)
        for (int t = 0; t < dP.rows; ++t)
          detail::axpy(dP.cols, T(1), dC.row(b * dP.rows + t), dP.row(t));
    });
    return id;
  }

  /// Column-wise max over consecutive row groups, restricted to rows with
  /// valid[row] != 0. Every group must contain at least one valid row.
  Id row_group_max(Id a, int group, const std::vector<std::uint8_t>& valid) {
    const auto& A = val(a);
    if (group < 1 || A.rows % group != 0) fail("row_group_max: bad group size");
    if (static_cast<int>(valid.size()) != A.rows) fail("row_group_max: mask size mismatch");
    const int out_rows = A.rows / group;
    Tensor<T> out(out_rows, A.cols);
    auto amax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(out_rows) * A.cols);
    for (int gi = 0; gi < out_rows; ++gi) {
      int first = -1;
      for (int r = 0; r < group; ++r)
        if (valid[static_cast<std::size_t>(gi * group + r)]) {
          first = gi * group + r;
          break;
        }
      if (first < 0) fail("row_group_max: group with no valid rows");
      for (int j = 0; j < A.cols; ++j) {
        T best = A.at(first, j);
        int bi = first;
        for (int r = 0; r < group; ++r) {
          const int row = gi * group + r;
          if (!valid[static_cast<std::size_t>(row)]) continue;
          if (A.at(row, j) > best) {
            best = A.at(row, j);
            bi = row;
          }
        }
        out.at(gi, j) = best;
        (*amax)[static_cast<std::size_t>(gi) * A.cols + j] = bi;
      }
    }
    const Id id = make(std::move(out));
    set_bwd(id, [a, id, amax](Graph& g) {
      const auto& dC = g.grad(id);
      auto& dA = g.grad(a);
      for (int i = 0; i < dC.rows; ++i)
        for (int j = 0; j < dC.cols; ++j)
          dA.at((*amax)[static_cast<std::size_t>(i) * dC.cols + j], j) += dC.at(i, j);
    });
    return id;
  }

  /// Row-major reinterpretation to a new shape with the same element count.
  Id reshape(Id a, int rows2, int cols2) {
    const auto& A = val(a);
    if (static_cast<std::size_t>(rows2) * cols2 != A.size()) fail("reshape: size mismatch");
    Tensor<T> out(rows2, cols2);
    std::copy(A.data.begin(), A.data.end(), out.data.begin());
    const Id id = make(std::move(out));
    set_bwd(id, [a, id](Graph& g) {
      const auto& dC = g.grad(id);
      detail::axpy(static_cast<int>(dC.size()), T(1), dC.data.data(), g.grad(a).data.data());
    });
    return id;
  }

  /// Multi-head self-attention over `batch` packed sequences of equal length.
  /// q, k, v: (batch * len) x dim. Keys with mask 0 receive exactly zero
  /// attention weight; rows of the output whose query step is masked are
  /// exactly zero.
  Id masked_attention(Id q, Id k, Id v, int batch, int heads,
                      const std::vector<std::uint8_t>& mask) {
    const auto &Q = val(q), &K = val(k), &V = val(v);
    if (!Q.same_shape(K) || !Q.same_shape(V)) fail("masked_attention: q/k/v shape mismatch");
    if (batch < 1 || Q.rows % batch != 0) fail("masked_attention: rows not divisible by batch");
    if (heads < 1 || Q.cols % heads != 0) fail("masked_attention: cols not divisible by heads");
    if (static_cast<int>(mask.size()) != Q.rows) fail("masked_attention: mask size mismatch");
    const int len = Q.rows / batch;
    const int dh = Q.cols / heads;
    const T inv_sqrt = T(1) / std::sqrt(T(dh));
    Tensor<T> out(Q.rows, Q.cols);
    auto alpha = std::make_shared<std::vector<T>>(
        static_cast<std::size_t>(batch) * heads * len * len, T(0));
    auto msk = std::make_shared<std::vector<std::uint8_t>>(mask);
    std::vector<T> lg(static_cast<std::size_t>(len));
    for (int b = 0; b < batch; ++b) {
      const int base = b * len;
      for (int h = 0; h < heads; ++h) {
        const int off = h * dh;
        for (int t = 0; t < len; ++t) {
          if (!mask[static_cast<std::size_t>(base + t)]) continue;
          const T* qrow = Q.row(base + t) + off;
          T mx = T(0);
          bool any = false;
          for (int u = 0; u < len; ++u) {
            if (!mask[static_cast<std::size_t>(base + u)]) continue;
            lg[static_cast<std::size_t>(u)] =
                detail::vdot(dh, qrow, K.row(base + u) + off) * inv_sqrt;
            mx = any ? std::max(mx, lg[static_cast<std::size_t>(u)])
                     : lg[static_cast<std::size_t>(u)];
            any = true;
          }
          if (!any) continue;
          T sum = T(0);
          for (int u = 0; u < len; ++u) {
            if (!mask[static_cast<std::size_t>(base + u)]) continue;
            const T e = std::exp(lg[static_cast<std::size_t>(u)] - mx);
            lg[static_cast<std::size_t>(u)] = e;
            sum += e;
          }
          const T inv = T(1) / sum;
          T* orow = out.row(base + t) + off;
          for (int u = 0; u < len; ++u) {
            if (!mask[static_cast<std::size_t>(base + u)]) continue;
            const T w = lg[static_cast<std::size_t>(u)] * inv;
            (*alpha)[((static_cast<std::size_t>(b) * heads + h) * len + t) * len + u] = w;
            detail::axpy(dh, w, V.row(base + u) + off, orow);
          }
        }
      }
    }
    const Id id = make(std::move(out));
    set_bwd(id, [q, k, v, id, batch, heads, len, dh, inv_sqrt, alpha, msk](Graph& g) {
      const auto& dC = g.grad(id);
      const auto &Q2 = g.val(q), &K2 = g.val(k), &V2 = g.val(v);
      auto &dQ = g.grad(q), &dK = g.grad(k), &dV = g.grad(v);
      std::vector<T> da(static_cast<std::size_t>(len));
      for (int b = 0; b < batch; ++b) {
        const int base = b * len;
        for (int h = 0; h < heads; ++h) {
          const int off = h * dh;
          for (int t = 0; t < len; ++t) {
            if (!(*msk)[static_cast<std::size_t>(base + t)]) continue;
            const T* dout = dC.row(base + t) + off;
            const T* arow =
                alpha->data() + ((static_cast<std::size_t>(b) * heads + h) * len + t) * len;
            T gsum = T(0);
            for (int u = 0; u < len; ++u) {
              if (!(*msk)[static_cast<std::size_t>(base + u)]) continue;
              da[static_cast<std::size_t>(u)] = detail::vdot(dh, dout, V2.row(base + u) + off);
              gsum += arow[u] * da[static_cast<std::size_t>(u)];
            }
            for (int u = 0; u < len; ++u) {
              if (!(*msk)[static_cast<std::size_t>(base + u)]) continue;
              const T w = arow[u];
              const T dl = w * (da[static_cast<std::size_t>(u)] - gsum) * inv_sqrt;
              detail::axpy(dh, dl, K2.row(base + u) + off, dQ.row(base + t) + off);
              detail::axpy(dh, dl, Q2.row(base + t) + off, dK.row(base + u) + off);
              detail::axpy(dh, w, dout, dV.row(base + u) + off);
            }
          }
        }
      }
    });
    return id;
  }

  /// Multi-head attention where each segment's query row attends over a
  /// contiguous block of key/value rows. Output has the shape of q; rows not
  /// named by any segment are exactly zero.
  Id ragged_attention(Id q, Id k, Id v, int heads, std::vector<AttentionSegment> segments) {
    const auto &Q = val(q), &K = val(k), &V = val(v);
    if (K.cols != Q.cols || V.cols != Q.cols || K.rows != V.rows)
      fail("ragged_attention: shape mismatch");
    if (heads < 1 || Q.cols % heads != 0) fail("ragged_attention: cols not divisible by heads");
    const int dh = Q.cols / heads;
    const T inv_sqrt = T(1) / std::sqrt(T(dh));
    std::size_t total = 0;
    for (const auto& s : segments) {
      if (s.q_row < 0 || s.q_row >= Q.rows || s.k_begin < 0 || s.k_end > K.rows ||
          s.k_begin >= s.k_end)
        fail("ragged_attention: bad segment");
      total += static_cast<std::size_t>(s.k_end - s.k_begin);
    }
    Tensor<T> out(Q.rows, Q.cols);
    auto alpha = std::make_shared<std::vector<T>>(total * static_cast<std::size_t>(heads));
    auto segs = std::make_shared<std::vector<AttentionSegment>>(std::move(segments));
    std::vector<T> lg;
    std::size_t cursor = 0;
    for (const auto& s : *segs) {
      const int n = s.k_end - s.k_begin;
      lg.resize(static_cast<std::size_t>(n));
      for (int h = 0; h < heads; ++h) {
        const int off = h * dh;
        const T* qrow = Q.row(s.q_row) + off;
        T mx = T(0);
        for (int u = 0; u < n; ++u) {
          lg[static_cast<std::size_t>(u)] =
              detail::vdot(dh, qrow, K.row(s.k_begin + u) + off) * inv_sqrt;
          mx = u == 0 ? lg[0] : std::max(mx, lg[static_cast<std::size_t>(u)]);
        }
        T sum = T(0);
        for (int u = 0; u < n; ++u) {
          const T e = std::exp(lg[static_cast<std::size_t>(u)] - mx);
          lg[static_cast<std::size_t>(u)] = e;
          sum += e;
        }
        const T inv = T(1) / sum;
        T* orow = out.row(s.q_row) + off;
        for (int u = 0; u < n; ++u) {
          const T w = lg[static_cast<std::size_t>(u)] * inv;
          (*alpha)[(cursor + static_cast<std::size_t>(u)) * heads + h] = w;
          detail::axpy(dh, w, V.row(s.k_begin + u) + off, orow);
        }
      }
      cursor += static_cast<std::size_t>(n);
    }
    const Id id = make(std::move(out));
    set_bwd(id, [q, k, v, id, heads, dh, inv_sqrt, alpha, segs](Graph& g) {
      const auto& dC = g.grad(id);
      const auto &Q2 = g.val(q), &K2 = g.val(k), &V2 = g.val(v);
      auto &dQ = g.grad(q), &dK = g.grad(k), &dV = g.grad(v);
      std::vector<T> da;
      std::size_t cursor2 = 0;
      for (const auto& s : *segs) {
        const int n = s.k_end - s.k_begin;
        da.resize(static_cast<std::size_t>(n));
        for (int h = 0; h < heads; ++h) {
          const int off = h * dh;
          const T* dout = dC.row(s.q_row) + off;
          T gsum = T(0);
          for (int u = 0; u < n; ++u) {
            da[static_cast<std::size_t>(u)] = detail::vdot(dh, dout, V2.row(s.k_begin + u) + off);
            gsum += (*alpha)[(cursor2 + static_cast<std::size_t>(u)) * heads + h] *
                    da[static_cast<std::size_t>(u)];
          }
          for (int u = 0; u < n; ++u) {
            const T w = (*alpha)[(cursor2 + static_cast<std::size_t>(u)) * heads + h];
            const T dl = w * (da[static_cast<std::size_t>(u)] - gsum) * inv_sqrt;
            detail::axpy(dh, dl, K2.row(s.k_begin + u) + off, dQ.row(s.q_row) + off);
            detail::axpy(dh, dl, Q2.row(s.q_row) + off, dK.row(s.k_begin + u) + off);
            detail::axpy(dh, w, dout, dV.row(s.k_begin + u) + off);
          }
        }
        cursor2 += static_cast<std::size_t>(n);
      }
    });
    return id;
  }

  /// 1-D convolution, kernel size 3, same padding, applied independently to
  /// consecutive row groups of length seq_len. w rows are the three taps
  /// stacked: [w(-1); w(0); w(+1)], each c_in x c_out. b is 1 x c_out.
  Id conv1d3(Id x, Id w, Id b, int seq_len) {
    const auto &X = val(x), &W = val(w), &B = val(b);
    if (seq_len < 1 || X.rows % seq_len != 0) fail("conv1d3: rows not divisible by seq_len");
    if (W.rows % 3 != 0 || W.rows / 3 != X.cols) fail("conv1d3: kernel rows must be 3*c_in");
    if (B.rows != 1 || B.cols != W.cols) fail("conv1d3: bias shape");
    const int groups = X.rows / seq_len;
    const int cin = X.cols, cout = W.cols;
    Tensor<T> out(X.rows, cout);
    for (int i = 0; i < X.rows; ++i) std::copy(B.row(0), B.row(0) + cout, out.row(i));
    for (int g2 = 0; g2 < groups; ++g2)
      for (int delta = -1; delta <= 1; ++delta) {
        const int t0 = std::max(0, -delta);
        const int count = seq_len - (delta < 0 ? -delta : delta);
        detail::gemm_nn(count, cin, cout, X.row(g2 * seq_len + t0 + delta),
                        W.row((delta + 1) * cin), out.row(g2 * seq_len + t0), true);
      }
    const Id id = make(std::move(out));
    set_bwd(id, [x, w, b, id, seq_len, groups, cin, cout](Graph& g) {
      const auto& dC = g.grad(id);
      const auto &X2 = g.val(x), &W2 = g.val(w);
      auto &dX = g.grad(x), &dW = g.grad(w), &dB = g.grad(b);
      for (int i = 0; i < dC.rows; ++i) detail::axpy(cout, T(1), dC.row(i), dB.row(0));
      for (int g2 = 0; g2 < groups; ++g2)
        for (int delta = -1; delta <= 1; ++delta) {
          const int t0 = std::max(0, -delta);
          const int count = seq_len - (delta < 0 ? -delta : delta);
          detail::gemm_nt(count, cout, cin, dC.row(g2 * seq_len + t0), W2.row((delta + 1) * cin),
                          dX.row(g2 * seq_len + t0 + delta), true);
          detail::gemm_tn(count, cin, cout, X2.row(g2 * seq_len + t0 + delta),
                          dC.row(g2 * seq_len + t0), dW.row((delta + 1) * cin), true);
        }
    });
    return id;
  }

  /// Masked smooth-L1 sum against a constant target, scaled by `norm`:
  /// norm * sum over valid rows and both columns of l(pred - target), where
  /// l(d) = 0.5 d^2 for |d| < 1 and |d| - 0.5 otherwise. Output 1x1.
  Id smooth_l1(Id pred, const Tensor<T>& target, const std::vector<std::uint8_t>& valid, T norm) {
    const auto& P = val(pred);
    if (!P.same_shape(target)) fail("smooth_l1: shape mismatch");
    if (static_cast<int>(valid.size()) != P.rows) fail("smooth_l1: mask size mismatch");
    T s = T(0);
    for (int i = 0; i < P.rows; ++i) {
      if (!valid[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < P.cols; ++j) {
        const T d = P.at(i, j) - target.at(i, j);
        const T ad = d < T(0) ? -d : d;
        s += ad < T(1) ? T(0.5) * d * d : ad - T(0.5);
      }
    }
    Tensor<T> out(1, 1);
    out.at(0, 0) = norm * s;
    const Id id = make(std::move(out));
    auto tgt = std::make_shared<Tensor<T>>(target);
    auto vld = std::make_shared<std::vector<std::uint8_t>>(valid);
    set_bwd(id, [pred, id, tgt, vld, norm](Graph& g) {
      const T coef = g.grad(id).at(0, 0) * norm;
      if (coef == T(0)) return;
      const auto& P2 = g.val(pred);
      auto& dP = g.grad(pred);
      for (int i = 0; i < P2.rows; ++i) {
        if (!(*vld)[static_cast<std::size_t>(i)]) continue;
        for (int j = 0; j < P2.cols; ++j) {
          const T d = P2.at(i, j) - tgt->at(i, j);
          dP.at(i, j) += coef * (d > T(1) ? T(1) : (d < T(-1) ? T(-1) : d));
        }
      }
    });
    return id;
  }

  /// Mean softmax cross entropy of each logits row against its label. 1x1.
  Id cross_entropy_mean(Id logits, std::vector<int> labels) {
    const auto& L = val(logits);
    if (static_cast<int>(labels.size()) != L.rows) fail("cross_entropy_mean: label count");
    const int n = L.cols;
    auto probs = std::make_shared<Tensor<T>>(L.rows, n);
    T loss = T(0);
    for (int i = 0; i < L.rows; ++i) {
      if (labels[static_cast<std::size_t>(i)] < 0 || labels[static_cast<std::size_t>(i)] >= n)
        fail("cross_entropy_mean: label out of range");
      const T* x = L.row(i);
      const T mx = detail::vmax(n, x);
      T sum = T(0);
      for (int j = 0; j < n; ++j) sum += std::exp(x[j] - mx);
      const T lse = mx + std::log(sum);
      for (int j = 0; j < n; ++j) probs->at(i, j) = std::exp(x[j] - lse);
      loss += lse - x[labels[static_cast<std::size_t>(i)]];
    }
    Tensor<T> out(1, 1);
    out.at(0, 0) = loss / T(L.rows);
    const Id id = make(std::move(out));
    auto lab = std::make_shared<std::vector<int>>(std::move(labels));
    set_bwd(id, [logits, id, probs, lab](Graph& g) {
      const T coef = g.grad(id).at(0, 0) / T(probs->rows);
      auto& dL = g.grad(logits);
      for (int i = 0; i < probs->rows; ++i)
        for (int j = 0; j < probs->cols; ++j)
          dL.at(i, j) += coef * (probs->at(i, j) - (j == (*lab)[static_cast<std::size_t>(i)]
                                                       ? T(1)
                                                       : T(0)));
    });
    return id;
  }

  /// Sum of 1x1 nodes.
  Id add_scalars(const std::vector<Id>& parts) {
    if (parts.empty()) fail("add_scalars: empty");
    Tensor<T> out(1, 1);
    for (Id p : parts) {
      if (val(p).rows != 1 || val(p).cols != 1) fail("add_scalars: non-scalar input");
      out.at(0, 0) += val(p).at(0, 0);
    }
    const Id id = make(std::move(out));
    set_bwd(id, [parts, id](Graph& g) {
      const T d = g.grad(id).at(0, 0);
      for (Id p : parts) g.grad(p).at(0, 0) += d;
    });
    return id;
  }

  /// Seeds d(root)/d(root) = 1 and replays the tape in reverse.
  void backward(Id root) {
    if (val(root).rows != 1 || val(root).cols != 1) fail("backward: root must be 1x1");
    grad(root).at(0, 0) += T(1);
    for (Id i = root; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (n.bwd) n.bwd(*this);
    }
  }

 private:
  struct Node {
    Tensor<T> value_store;
    Tensor<T> gradient_store;
    const Tensor<T>* value_ptr = nullptr;
    Tensor<T>* gradient_ptr = nullptr;
    std::function<void(Graph&)> bwd;
  };

  [[noreturn]] static void fail(const char* msg) {
    throw std::invalid_argument(std::string("autodiff: ") + msg);
  }

  Id make(Tensor<T> v) {
    Node n;
    n.value_store = std::move(v);
    n.gradient_store = Tensor<T>(n.value_store.rows, n.value_store.cols);
    nodes_.push_back(std::move(n));
    Node& ref = nodes_.back();
    ref.value_ptr = &ref.value_store;
    ref.gradient_ptr = &ref.gradient_store;
    return static_cast<Id>(nodes_.size() - 1);
  }

  void set_bwd(Id id, std::function<void(Graph&)> f) {
    nodes_[static_cast<std::size_t>(id)].bwd = std::move(f);
  }

  std::deque<Node> nodes_;
};

/// In-place row-wise softmax (inference-side helper, not a tape op).
template <typename T>
void softmax_rows(Tensor<T>& t) {
  for (int i = 0; i < t.rows; ++i) {
    T* x = t.row(i);
    const T mx = detail::vmax(t.cols, x);
    T sum = T(0);
    for (int j = 0; j < t.cols; ++j) {
      x[j] = std::exp(x[j] - mx);
      sum += x[j];
    }
    detail::scal(t.cols, T(1) / sum, x);
  }
}

}  // namespace coopred::nn
