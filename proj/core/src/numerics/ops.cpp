#include "langadapt/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "langadapt/util/error.hpp"

namespace langadapt::numerics {

namespace {

template <typename T>
void require_matrix(const Tensor<T>& t, const char* op, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": " + what + " must be a matrix, got " +
                     shape_string(t.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// out[m x n] += a[m x k] . b[k x n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* out_row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        out_row[j] += av * b_row[j];
      }
    }
  }
}

// out[m x n] += a[m x k] . b[n x k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* a_row = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* b_row = b + j * k;
      T acc = T{0};
      for (std::size_t p = 0; p < k; ++p) {
        acc += a_row[p] * b_row[p];
      }
      out[i * n + j] += acc;
    }
  }
}

// out[k x n] += a[m x k]^T . b[m x n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* b_row = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      T* out_row = out + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        out_row[j] += av * b_row[j];
      }
    }
  }
}

}  // namespace

template <typename T>
Var matmul(Graph<T>& g, Var a, Var b) {
  const Tensor<T>& av = g.value(a);
  const Tensor<T>& bv = g.value(b);
  require_matrix(av, "matmul", "lhs");
  require_matrix(bv, "matmul", "rhs");
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree " + shape_string(av.shape()) + " . " +
                     shape_string(bv.shape()));
  }
  Tensor<T> out({m, n});
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return g.record(
      std::move(out), {a.id, b.id},
      [a, b, m, k, n](Graph<T>& g, std::size_t self) {
        const T* gout = g.grad_buffer(self).data().data();
        // dA = dC . B^T, dB = A^T . dC
        gemm_nt(gout, g.value(b).data().data(), g.grad_buffer(a.id).data().data(), m, n, k);
        gemm_tn(g.value(a).data().data(), gout, g.grad_buffer(b.id).data().data(), m, k, n);
      },
      "matmul");
}

template <typename T>
Var matmul_nt(Graph<T>& g, Var a, Var b) {
  const Tensor<T>& av = g.value(a);
  const Tensor<T>& bv = g.value(b);
  require_matrix(av, "matmul_nt", "lhs");
  require_matrix(bv, "matmul_nt", "rhs");
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
  if (bv.dim(1) != k) {
    throw ShapeError("matmul_nt: inner dimensions disagree " + shape_string(av.shape()) +
                     " . " + shape_string(bv.shape()) + "^T");
  }
  Tensor<T> out({m, n});
  gemm_nt(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return g.record(
      std::move(out), {a.id, b.id},
      [a, b, m, k, n](Graph<T>& g, std::size_t self) {
        const T* gout = g.grad_buffer(self).data().data();
        // C = A B^T: dA = dC . B, dB = dC^T . A
        gemm_nn(gout, g.value(b).data().data(), g.grad_buffer(a.id).data().data(), m, n, k);
        gemm_tn(gout, g.value(a).data().data(), g.grad_buffer(b.id).data().data(), m, n, k);
      },
      "matmul_nt");
}

template <typename T>
Var transpose(Graph<T>& g, Var a) {
  const Tensor<T>& av = g.value(a);
  require_matrix(av, "transpose", "input");
  const std::size_t r = av.dim(0), c = av.dim(1);
  Tensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out.at(j, i) = av.at(i, j);
    }
  }
  return g.record(
      std::move(out), {a.id},
      [a, r, c](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            ga.at(i, j) += gout.at(j, i);
          }
        }
      },
      "transpose");
}

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  const Tensor<T>& av = g.value(a);
  const Tensor<T>& bv = g.value(b);
  require_same_shape(av, bv, "add");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += bv[i];
  }
  return g.record(
      std::move(out), {a.id, b.id},
      [a, b](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i];
        Tensor<T>& gb = g.grad_buffer(b.id);
        for (std::size_t i = 0; i < gout.size(); ++i) gb[i] += gout[i];
      },
      "add");
}

template <typename T>
Var add_bias(Graph<T>& g, Var x, Var bias) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& bv = g.value(bias);
  if (bv.size() != xv.cols()) {
    throw ShapeError("add_bias: bias of " + std::to_string(bv.size()) + " for rows of " +
                     std::to_string(xv.cols()));
  }
  Tensor<T> out = xv;
  const std::size_t d = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] += bv[j];
  }
  return g.record(
      std::move(out), {x.id, bias.id},
      [x, bias, d](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& gx = g.grad_buffer(x.id);
        Tensor<T>& gb = g.grad_buffer(bias.id);
        for (std::size_t i = 0; i < gout.size(); ++i) {
          gx[i] += gout[i];
          gb[i % d] += gout[i];
        }
      },
      "add_bias");
}

template <typename T>
Var mul(Graph<T>& g, Var a, Var b) {
  const Tensor<T>& av = g.value(a);
  const Tensor<T>& bv = g.value(b);
  require_same_shape(av, bv, "mul");
  Tensor<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return g.record(
      std::move(out), {a.id, b.id},
      [a, b](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        const Tensor<T>& av = g.value(a);
        const Tensor<T>& bv = g.value(b);
        Tensor<T>& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i] * bv[i];
        Tensor<T>& gb = g.grad_buffer(b.id);
        for (std::size_t i = 0; i < gout.size(); ++i) gb[i] += gout[i] * av[i];
      },
      "mul");
}

template <typename T>
Var scale(Graph<T>& g, Var a, T factor) {
  Tensor<T> out = g.value(a);
  for (T& v : out.data()) v *= factor;
  return g.record(
      std::move(out), {a.id},
      [a, factor](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i] * factor;
      },
      "scale");
}

template <typename T>
Var add_scalar(Graph<T>& g, Var a, T offset) {
  Tensor<T> out = g.value(a);
  for (T& v : out.data()) v += offset;
  return g.record(
      std::move(out), {a.id},
      [a](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < gout.size(); ++i) ga[i] += gout[i];
      },
      "add_scalar");
}

template <typename T>
Var silu(Graph<T>& g, Var a) {
  Tensor<T> out = g.value(a);
  for (T& v : out.data()) v = v / (T{1} + std::exp(-v));
  return g.record(
      std::move(out), {a.id},
      [a](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        const Tensor<T>& av = g.value(a);
        Tensor<T>& ga = g.grad_buffer(a.id);
        for (std::size_t i = 0; i < gout.size(); ++i) {
          const T s = T{1} / (T{1} + std::exp(-av[i]));
          ga[i] += gout[i] * s * (T{1} + av[i] * (T{1} - s));
        }
      },
      "silu");
}

template <typename T>
Var sum(Graph<T>& g, Var a) {
  T total = T{0};
  for (const T v : g.value(a).data()) total += v;
  return g.record(
      Tensor<T>::scalar(total), {a.id},
      [a](Graph<T>& g, std::size_t self) {
        const T gout = g.grad_buffer(self)[0];
        for (T& v : g.grad_buffer(a.id).data()) v += gout;
      },
      "sum");
}

template <typename T>
Var rmsnorm(Graph<T>& g, Var x, Var gain) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& gv = g.value(gain);
  const std::size_t d = xv.cols();
  if (gv.size() != d) {
    throw ShapeError("rmsnorm: gain of " + std::to_string(gv.size()) + " for last dim " +
                     std::to_string(d));
  }
  const std::size_t n = xv.rows();
  Tensor<T> out(xv.shape());
  std::vector<T> inv_rms(n);
  for (std::size_t r = 0; r < n; ++r) {
    T ms = T{0};
    for (std::size_t j = 0; j < d; ++j) ms += xv[r * d + j] * xv[r * d + j];
    ms /= static_cast<T>(d);
    inv_rms[r] = T{1} / std::sqrt(ms + static_cast<T>(kRmsNormEpsilon));
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xv[r * d + j] * inv_rms[r] * gv[j];
  }
  return g.record(
      std::move(out), {x.id, gain.id},
      [x, gain, n, d, inv_rms = std::move(inv_rms)](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        const Tensor<T>& xv = g.value(x);
        const Tensor<T>& gv = g.value(gain);
        Tensor<T>& gx = g.grad_buffer(x.id);
        Tensor<T>& gg = g.grad_buffer(gain.id);
        for (std::size_t r = 0; r < n; ++r) {
          const T inv = inv_rms[r];
          T dot = T{0};
          for (std::size_t j = 0; j < d; ++j) {
            const std::size_t i = r * d + j;
            dot += gout[i] * gv[j] * xv[i];
            gg[j] += gout[i] * xv[i] * inv;
          }
          const T coeff = dot * inv * inv * inv / static_cast<T>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const std::size_t i = r * d + j;
            gx[i] += inv * gv[j] * gout[i] - xv[i] * coeff;
          }
        }
      },
      "rmsnorm");
}

template <typename T>
Var embedding(Graph<T>& g, Var table, std::span<const std::uint32_t> ids) {
  const Tensor<T>& tv = g.value(table);
  require_matrix(tv, "embedding", "table");
  const std::size_t vocab = tv.dim(0), d = tv.dim(1);
  Tensor<T> out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw ValidationError("embedding: id " + std::to_string(ids[i]) + " >= table rows " +
                            std::to_string(vocab));
    }
    std::copy_n(tv.data().begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  std::vector<std::uint32_t> saved(ids.begin(), ids.end());
  return g.record(
      std::move(out), {table.id},
      [table, d, saved = std::move(saved)](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& gt = g.grad_buffer(table.id);
        for (std::size_t i = 0; i < saved.size(); ++i) {
          for (std::size_t j = 0; j < d; ++j) gt[saved[i] * d + j] += gout[i * d + j];
        }
      },
      "embedding");
}

template <typename T>
Var slice_cols(Graph<T>& g, Var x, std::size_t begin, std::size_t width) {
  const Tensor<T>& xv = g.value(x);
  require_matrix(xv, "slice_cols", "input");
  const std::size_t n = xv.dim(0), d = xv.dim(1);
  if (begin + width > d) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + width) + ") outside width " + std::to_string(d));
  }
  Tensor<T> out({n, width});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < width; ++j) out.at(r, j) = xv.at(r, begin + j);
  }
  return g.record(
      std::move(out), {x.id},
      [x, begin, width, n](Graph<T>& g, std::size_t self) {
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& gx = g.grad_buffer(x.id);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < width; ++j) gx.at(r, begin + j) += gout.at(r, j);
        }
      },
      "slice_cols");
}

template <typename T>
Var concat_cols(Graph<T>& g, std::span<const Var> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_cols: no inputs");
  }
  const std::size_t n = g.value(parts[0]).dim(0);
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  std::vector<std::size_t> parent_ids;
  for (const Var p : parts) {
    const Tensor<T>& pv = g.value(p);
    require_matrix(pv, "concat_cols", "part");
    if (pv.dim(0) != n) {
      throw ShapeError("concat_cols: row counts differ");
    }
    widths.push_back(pv.dim(1));
    parent_ids.push_back(p.id);
    total += pv.dim(1);
  }
  Tensor<T> out({n, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor<T>& pv = g.value(parts[k]);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < widths[k]; ++j) out.at(r, offset + j) = pv.at(r, j);
    }
    offset += widths[k];
  }
  return g.record(
      std::move(out), parent_ids,
      [parent_ids, widths, n](Graph<T>& g, std::size_t self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < parent_ids.size(); ++k) {
          const Tensor<T>& gout = g.grad_buffer(self);
          Tensor<T>& gp = g.grad_buffer(parent_ids[k]);
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < widths[k]; ++j) gp.at(r, j) += gout.at(r, offset + j);
          }
          offset += widths[k];
        }
      },
      "concat_cols");
}

template <typename T>
Var concat_rows(Graph<T>& g, std::span<const Var> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_rows: no inputs");
  }
  const std::size_t d = g.value(parts[0]).cols();
  std::vector<T> data;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> parent_ids;
  std::size_t rows = 0;
  for (const Var p : parts) {
    const Tensor<T>& pv = g.value(p);
    require_matrix(pv, "concat_rows", "part");
    if (pv.cols() != d) {
      throw ShapeError("concat_rows: column counts differ");
    }
    data.insert(data.end(), pv.data().begin(), pv.data().end());
    sizes.push_back(pv.size());
    parent_ids.push_back(p.id);
    rows += pv.dim(0);
  }
  return g.record(
      Tensor<T>({rows, d}, std::move(data)), parent_ids,
      [parent_ids, sizes](Graph<T>& g, std::size_t self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < parent_ids.size(); ++k) {
          const Tensor<T>& gout = g.grad_buffer(self);
          Tensor<T>& gp = g.grad_buffer(parent_ids[k]);
          for (std::size_t i = 0; i < sizes[k]; ++i) gp[i] += gout[offset + i];
          offset += sizes[k];
        }
      },
      "concat_rows");
}

template <typename T>
Var causal_softmax(Graph<T>& g, Var scores) {
  const Tensor<T>& sv = g.value(scores);
  require_matrix(sv, "causal_softmax", "scores");
  const std::size_t n = sv.dim(0);
  if (sv.dim(1) != n) {
    throw ShapeError("causal_softmax: scores must be square, got " + shape_string(sv.shape()));
  }
  Tensor<T> out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    T m = sv.at(i, 0);
    for (std::size_t j = 1; j <= i; ++j) m = std::max(m, sv.at(i, j));
    T z = T{0};
    for (std::size_t j = 0; j <= i; ++j) {
      const T e = std::exp(sv.at(i, j) - m);
      out.at(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j <= i; ++j) out.at(i, j) /= z;
  }
  return g.record(
      std::move(out), {scores.id},
      [scores, n](Graph<T>& g, std::size_t self) {
        const Tensor<T>& p = g.value(self);
        const Tensor<T>& gout = g.grad_buffer(self);
        Tensor<T>& gs = g.grad_buffer(scores.id);
        for (std::size_t i = 0; i < n; ++i) {
          T dot = T{0};
          for (std::size_t j = 0; j <= i; ++j) dot += p.at(i, j) * gout.at(i, j);
          for (std::size_t j = 0; j <= i; ++j) gs.at(i, j) += p.at(i, j) * (gout.at(i, j) - dot);
        }
      },
      "causal_softmax");
}

template <typename T>
Var softmax_cross_entropy(Graph<T>& g, Var logits, std::span<const std::uint32_t> targets,
                          std::span<const std::uint8_t> mask) {
  const Tensor<T>& lv = g.value(logits);
  require_matrix(lv, "softmax_cross_entropy", "logits");
  const std::size_t n = lv.dim(0), vocab = lv.dim(1);
  if (targets.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(n) + " rows");
  }
  if (!mask.empty() && mask.size() != n) {
    throw ShapeError("softmax_cross_entropy: mask length " + std::to_string(mask.size()) +
                     " for " + std::to_string(n) + " rows");
  }
  std::vector<bool> scored(n, true);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty()) scored[i] = mask[i] != 0;
    if (!scored[i]) continue;
    if (targets[i] >= vocab) {
      throw ValidationError("softmax_cross_entropy: target " + std::to_string(targets[i]) +
                            " >= " + std::to_string(vocab));
    }
    ++count;
  }
  if (count == 0) {
    throw ValidationError("no scored positions");
  }
  // Per-row softmax is kept for backward.
  Tensor<T> probs({n, vocab});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!scored[i]) continue;
    const auto row = lv.row(i);
    const T m = *std::max_element(row.begin(), row.end());
    T z = T{0};
    for (std::size_t j = 0; j < vocab; ++j) {
      const T e = std::exp(row[j] - m);
      probs.at(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < vocab; ++j) probs.at(i, j) /= z;
    const T log_z = m + std::log(z);
    total += static_cast<double>(log_z - row[targets[i]]);
  }
  const T loss = static_cast<T>(total / static_cast<double>(count));
  std::vector<std::uint32_t> saved_targets(targets.begin(), targets.end());
  return g.record(
      Tensor<T>::scalar(loss), {logits.id},
      [logits, n, vocab, count, probs = std::move(probs), scored = std::move(scored),
       saved_targets = std::move(saved_targets)](Graph<T>& g, std::size_t self) {
        const T gout = g.grad_buffer(self)[0] / static_cast<T>(count);
        Tensor<T>& gl = g.grad_buffer(logits.id);
        for (std::size_t i = 0; i < n; ++i) {
          if (!scored[i]) continue;
          for (std::size_t j = 0; j < vocab; ++j) gl.at(i, j) += gout * probs.at(i, j);
          gl.at(i, saved_targets[i]) -= gout;
        }
      },
      "softmax_cross_entropy");
}

#define LANGADAPT_INSTANTIATE_OPS(T)                                                         \
  template Var matmul<T>(Graph<T>&, Var, Var);                                               \
  template Var matmul_nt<T>(Graph<T>&, Var, Var);                                            \
  template Var transpose<T>(Graph<T>&, Var);                                                 \
  template Var add<T>(Graph<T>&, Var, Var);                                                  \
  template Var add_bias<T>(Graph<T>&, Var, Var);                                             \
  template Var mul<T>(Graph<T>&, Var, Var);                                                  \
  template Var scale<T>(Graph<T>&, Var, T);                                                  \
  template Var add_scalar<T>(Graph<T>&, Var, T);                                             \
  template Var silu<T>(Graph<T>&, Var);                                                      \
  template Var sum<T>(Graph<T>&, Var);                                                       \
  template Var rmsnorm<T>(Graph<T>&, Var, Var);                                              \
  template Var embedding<T>(Graph<T>&, Var, std::span<const std::uint32_t>);                 \
  template Var slice_cols<T>(Graph<T>&, Var, std::size_t, std::size_t);                      \
  template Var concat_cols<T>(Graph<T>&, std::span<const Var>);                              \
  template Var concat_rows<T>(Graph<T>&, std::span<const Var>);                              \
  template Var causal_softmax<T>(Graph<T>&, Var);                                            \
  template Var softmax_cross_entropy<T>(Graph<T>&, Var, std::span<const std::uint32_t>,      \
                                        std::span<const std::uint8_t>);

LANGADAPT_INSTANTIATE_OPS(float)
LANGADAPT_INSTANTIATE_OPS(double)

#undef LANGADAPT_INSTANTIATE_OPS

}  // namespace langadapt::numerics
