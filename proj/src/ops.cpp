#include "odesyn/ops.hpp"

#include <cmath>
#include <cstring>

namespace odesyn {

namespace kernels {

void mm(const double* a, const double* b, double* c, int m, int k, int n) {
  std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void mm_abt_acc(const double* a, const double* b, double* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * n;
    double* crow = c + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double* brow = b + static_cast<std::size_t>(p) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[p] += acc;
    }
  }
}

void mm_atb_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    const double* brow = b + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace kernels

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!shape_equal(a.shape(), b.shape()))
    throw shape_error(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                      shape_str(b.shape()) + " differ");
}

bool any_grad(const Tensor& a) { return a.requires_grad(); }
bool any_grad(const Tensor& a, const Tensor& b) {
  return a.requires_grad() || b.requires_grad();
}

using Data = std::shared_ptr<TensorData>;

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    throw shape_error("matmul: operands must be 2-D");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw shape_error("matmul: inner dimensions " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  kernels::mm(a.value().data(), b.value().data(), out.data(), m, k, n);
  Tensor y = tape.make_output({m, n}, std::move(out), any_grad(a, b));
  tape.record(y, [ad = a.data(), bd = b.data(), yd = y.data(), m, k, n] {
    const double* g = yd->grad.data();
    if (ad->requires_grad) {
      ad->ensure_grad();
      kernels::mm_abt_acc(g, bd->value.data(), ad->grad.data(), m, n, k);
    }
    if (bd->requires_grad) {
      bd->ensure_grad();
      kernels::mm_atb_acc(ad->value.data(), g, bd->grad.data(), m, k, n);
    }
  });
  return y;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.shape().size() != 2 || w.shape().size() != 2)
    throw shape_error("linear: x and w must be 2-D");
  const int m = x.rows(), k = x.cols(), n = w.cols();
  if (w.rows() != k || b.numel() != n)
    throw shape_error("linear: incompatible " + shape_str(x.shape()) + ", " +
                      shape_str(w.shape()) + ", " + shape_str(b.shape()));
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  kernels::mm(x.value().data(), w.value().data(), out.data(), m, k, n);
  const double* bias = b.value().data();
  for (int i = 0; i < m; ++i) {
    double* row = out.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) row[j] += bias[j];
  }
  Tensor y = tape.make_output({m, n}, std::move(out),
                              x.requires_grad() || w.requires_grad() || b.requires_grad());
  tape.record(y, [xd = x.data(), wd = w.data(), bd = b.data(), yd = y.data(), m, k, n] {
    const double* g = yd->grad.data();
    if (xd->requires_grad) {
      xd->ensure_grad();
      kernels::mm_abt_acc(g, wd->value.data(), xd->grad.data(), m, n, k);
    }
    if (wd->requires_grad) {
      wd->ensure_grad();
      kernels::mm_atb_acc(xd->value.data(), g, wd->grad.data(), m, k, n);
    }
    if (bd->requires_grad) {
      bd->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) bd->grad[j] += g[static_cast<std::size_t>(i) * n + j];
    }
  });
  return y;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor binary_elementwise(Tape& tape, const Tensor& a, const Tensor& b, const char* name,
                          Fwd fwd, Bwd bwd) {
  check_same_shape(a, b, name);
  const std::size_t n = a.value().size();
  std::vector<double> out(n);
  const double* av = a.value().data();
  const double* bv = b.value().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i]);
  Tensor y = tape.make_output(a.shape(), std::move(out), any_grad(a, b));
  tape.record(y, [ad = a.data(), bd = b.data(), yd = y.data(), bwd] {
    const std::size_t n = yd->grad.size();
    if (ad->requires_grad) ad->ensure_grad();
    if (bd->requires_grad) bd->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      auto [da, db] = bwd(ad->value[i], bd->value[i]);
      if (ad->requires_grad) ad->grad[i] += yd->grad[i] * da;
      if (bd->requires_grad) bd->grad[i] += yd->grad[i] * db;
    }
  });
  return y;
}

struct GradPair {
  double da, db;
};

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return GradPair{1.0, 1.0}; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return GradPair{1.0, -1.0}; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y) { return GradPair{y, x}; });
}

Tensor add_scaled(Tape& tape, const Tensor& a, const Tensor& b, double alpha) {
  return binary_elementwise(
      tape, a, b, "add_scaled",
      [alpha](double x, double y) { return x + alpha * y; },
      [alpha](double, double) { return GradPair{1.0, alpha}; });
}

namespace {

template <typename Fwd>
Tensor unary_from_out(Tape& tape, const Tensor& x, Fwd fwd, double (*dydx_from_out)(double)) {
  const std::size_t n = x.value().size();
  std::vector<double> out(n);
  const double* xv = x.value().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xv[i]);
  Tensor y = tape.make_output(x.shape(), std::move(out), x.requires_grad());
  tape.record(y, [xd = x.data(), yd = y.data(), dydx_from_out] {
    xd->ensure_grad();
    const std::size_t n = yd->grad.size();
    for (std::size_t i = 0; i < n; ++i)
      xd->grad[i] += yd->grad[i] * dydx_from_out(yd->value[i]);
  });
  return y;
}

}  // namespace

Tensor affine(Tape& tape, const Tensor& x, double alpha, double beta) {
  const std::size_t n = x.value().size();
  std::vector<double> out(n);
  const double* xv = x.value().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * xv[i] + beta;
  Tensor y = tape.make_output(x.shape(), std::move(out), x.requires_grad());
  tape.record(y, [xd = x.data(), yd = y.data(), alpha] {
    xd->ensure_grad();
    const std::size_t n = yd->grad.size();
    for (std::size_t i = 0; i < n; ++i) xd->grad[i] += yd->grad[i] * alpha;
  });
  return y;
}

Tensor tanh(Tape& tape, const Tensor& x) {
  return unary_from_out(
      tape, x, [](double v) { return std::tanh(v); },
      +[](double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  auto sig = [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  return unary_from_out(tape, x, sig, +[](double y) { return y * (1.0 - y); });
}

Tensor leaky_relu(Tape& tape, const Tensor& x, double slope) {
  const std::size_t n = x.value().size();
  std::vector<double> out(n);
  const double* xv = x.value().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
  Tensor y = tape.make_output(x.shape(), std::move(out), x.requires_grad());
  tape.record(y, [xd = x.data(), yd = y.data(), slope] {
    xd->ensure_grad();
    const std::size_t n = yd->grad.size();
    for (std::size_t i = 0; i < n; ++i)
      xd->grad[i] += yd->grad[i] * (xd->value[i] > 0.0 ? 1.0 : slope);
  });
  return y;
}

namespace {

Tensor reduce(Tape& tape, const Tensor& x, double scale) {
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  Tensor y = tape.make_output({1}, {acc * scale}, x.requires_grad());
  tape.record(y, [xd = x.data(), yd = y.data(), scale] {
    xd->ensure_grad();
    const double g = yd->grad[0] * scale;
    for (double& gv : xd->grad) gv += g;
  });
  return y;
}

}  // namespace

Tensor sum(Tape& tape, const Tensor& x) { return reduce(tape, x, 1.0); }

Tensor mean(Tape& tape, const Tensor& x) {
  return reduce(tape, x, 1.0 / static_cast<double>(x.numel()));
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw shape_error("concat_cols: no parts");
  const int m = parts.front().rows();
  int total = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    if (p.shape().size() != 2 || p.rows() != m)
      throw shape_error("concat_cols: all parts must be 2-D with equal row count");
    total += p.cols();
    rg = rg || p.requires_grad();
  }
  std::vector<double> out(static_cast<std::size_t>(m) * total);
  int col = 0;
  for (const Tensor& p : parts) {
    const int w = p.cols();
    for (int i = 0; i < m; ++i)
      std::memcpy(out.data() + static_cast<std::size_t>(i) * total + col,
                  p.value().data() + static_cast<std::size_t>(i) * w, sizeof(double) * w);
    col += w;
  }
  Tensor y = tape.make_output({m, total}, std::move(out), rg);
  std::vector<Data> srcs;
  srcs.reserve(parts.size());
  for (const Tensor& p : parts) srcs.push_back(p.data());
  tape.record(y, [srcs = std::move(srcs), yd = y.data(), m, total] {
    int col = 0;
    for (const Data& s : srcs) {
      const int w = static_cast<int>(s->value.size()) / m;
      if (s->requires_grad) {
        s->ensure_grad();
        for (int i = 0; i < m; ++i) {
          const double* g = yd->grad.data() + static_cast<std::size_t>(i) * total + col;
          double* dst = s->grad.data() + static_cast<std::size_t>(i) * w;
          for (int j = 0; j < w; ++j) dst[j] += g[j];
        }
      }
      col += w;
    }
  });
  return y;
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    throw shape_error("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape) +
                      " changes element count");
  Tensor y = tape.make_output(std::move(shape), x.value(), x.requires_grad());
  tape.record(y, [xd = x.data(), yd = y.data()] {
    xd->ensure_grad();
    const std::size_t n = yd->grad.size();
    for (std::size_t i = 0; i < n; ++i) xd->grad[i] += yd->grad[i];
  });
  return y;
}

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::pair<int, int> stride, std::pair<int, int> padding) {
  if (x.shape().size() != 4 || kernel.shape().size() != 4)
    throw shape_error("conv2d: input and kernel must be 4-D");
  const int B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const int F = kernel.shape()[0], KC = kernel.shape()[1], kh = kernel.shape()[2],
            kw = kernel.shape()[3];
  const auto [sh, sw] = stride;
  const auto [ph, pw] = padding;
  if (KC != C) throw shape_error("conv2d: kernel channels != input channels");
  if (sh < 1 || sw < 1) throw shape_error("conv2d: stride must be >= 1");
  if (ph < 0 || pw < 0) throw shape_error("conv2d: padding must be >= 0");
  if (bias.numel() != F) throw shape_error("conv2d: bias length != kernel count");
  if (kh > H + 2 * ph || kw > W + 2 * pw)
    throw shape_error("conv2d: kernel larger than padded input");
  const int OH = (H + 2 * ph - kh) / sh + 1;
  const int OW = (W + 2 * pw - kw) / sw + 1;

  std::vector<double> out(static_cast<std::size_t>(B) * F * OH * OW);
  const double* xv = x.value().data();
  const double* kv = kernel.value().data();
  const double* bv = bias.value().data();
  auto xat = [&](int b, int c, int i, int j) {
    return xv[((static_cast<std::size_t>(b) * C + c) * H + i) * W + j];
  };
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f) {
      double* oplane = out.data() + (static_cast<std::size_t>(b) * F + f) * OH * OW;
      for (int i = 0; i < OH * OW; ++i) oplane[i] = bv[f];
      for (int c = 0; c < C; ++c)
        for (int i = 0; i < kh; ++i)
          for (int j = 0; j < kw; ++j) {
            const double wv = kv[((static_cast<std::size_t>(f) * C + c) * kh + i) * kw + j];
            if (wv == 0.0) continue;
            for (int oh = 0; oh < OH; ++oh) {
              const int ih = oh * sh - ph + i;
              if (ih < 0 || ih >= H) continue;
              double* orow = oplane + static_cast<std::size_t>(oh) * OW;
              for (int ow = 0; ow < OW; ++ow) {
                const int iw = ow * sw - pw + j;
                if (iw < 0 || iw >= W) continue;
                orow[ow] += wv * xat(b, c, ih, iw);
              }
            }
          }
    }

  Tensor y = tape.make_output({B, F, OH, OW}, std::move(out),
                              x.requires_grad() || kernel.requires_grad() || bias.requires_grad());
  tape.record(y, [xd = x.data(), kd = kernel.data(), bd = bias.data(), yd = y.data(), B, C, H,
                  W, F, kh, kw, sh, sw, ph, pw, OH, OW] {
    const double* g = yd->grad.data();
    const bool gx = xd->requires_grad, gk = kd->requires_grad, gb = bd->requires_grad;
    if (gx) xd->ensure_grad();
    if (gk) kd->ensure_grad();
    if (gb) bd->ensure_grad();
    for (int b = 0; b < B; ++b)
      for (int f = 0; f < F; ++f) {
        const double* gplane = g + (static_cast<std::size_t>(b) * F + f) * OH * OW;
        if (gb)
          for (int i = 0; i < OH * OW; ++i) bd->grad[f] += gplane[i];
        if (!gx && !gk) continue;
        for (int c = 0; c < C; ++c)
          for (int i = 0; i < kh; ++i)
            for (int j = 0; j < kw; ++j) {
              const std::size_t kidx = ((static_cast<std::size_t>(f) * C + c) * kh + i) * kw + j;
              const double wv = kd->value[kidx];
              double wacc = 0.0;
              for (int oh = 0; oh < OH; ++oh) {
                const int ih = oh * sh - ph + i;
                if (ih < 0 || ih >= H) continue;
                const double* grow = gplane + static_cast<std::size_t>(oh) * OW;
                for (int ow = 0; ow < OW; ++ow) {
                  const int iw = ow * sw - pw + j;
                  if (iw < 0 || iw >= W) continue;
                  const std::size_t xidx =
                      ((static_cast<std::size_t>(b) * C + c) * H + ih) * W + iw;
                  if (gk) wacc += grow[ow] * xd->value[xidx];
                  if (gx) xd->grad[xidx] += grow[ow] * wv;
                }
              }
              if (gk) kd->grad[kidx] += wacc;
            }
      }
  });
  return y;
}

Tensor maxpool2d(Tape& tape, const Tensor& x, std::pair<int, int> window,
                 std::pair<int, int> stride) {
  if (x.shape().size() != 4) throw shape_error("maxpool2d: input must be 4-D");
  const int B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const auto [wh, ww] = window;
  const auto [sh, sw] = stride;
  if (wh < 1 || ww < 1 || sh < 1 || sw < 1) throw shape_error("maxpool2d: bad window/stride");
  if (wh > H || ww > W) throw shape_error("maxpool2d: window larger than input");
  const int OH = (H - wh) / sh + 1;
  const int OW = (W - ww) / sw + 1;
  const std::size_t on = static_cast<std::size_t>(B) * C * OH * OW;
  std::vector<double> out(on);
  std::vector<int> argmax(on);
  const double* xv = x.value().data();
  std::size_t o = 0;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double* plane = xv + (static_cast<std::size_t>(b) * C + c) * H * W;
      const int base = (b * C + c) * H * W;
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow, ++o) {
          double best = plane[static_cast<std::size_t>(oh * sh) * W + ow * sw];
          int bestidx = base + (oh * sh) * W + ow * sw;
          for (int i = 0; i < wh; ++i)
            for (int j = 0; j < ww; ++j) {
              const double v = plane[static_cast<std::size_t>(oh * sh + i) * W + ow * sw + j];
              if (v > best) {  // strict: first maximum keeps the gradient on ties
                best = v;
                bestidx = base + (oh * sh + i) * W + ow * sw + j;
              }
            }
          out[o] = best;
          argmax[o] = bestidx;
        }
    }
  Tensor y = tape.make_output({B, C, OH, OW}, std::move(out), x.requires_grad());
  tape.record(y, [xd = x.data(), yd = y.data(), argmax = std::move(argmax)] {
    xd->ensure_grad();
    for (std::size_t i = 0; i < argmax.size(); ++i)
      xd->grad[static_cast<std::size_t>(argmax[i])] += yd->grad[i];
  });
  return y;
}

Tensor minibatch_discrimination(Tape& tape, const Tensor& features, const Tensor& proj,
                                int num_kernels, int kernel_dim) {
  if (features.shape().size() != 2 || proj.shape().size() != 2)
    throw shape_error("minibatch_discrimination: 2-D operands expected");
  const int B = features.rows(), A = features.cols();
  const int P = num_kernels, Q = kernel_dim;
  if (proj.rows() != A || proj.cols() != P * Q)
    throw shape_error("minibatch_discrimination: projection must be [A x P*Q]");
  std::vector<double> m(static_cast<std::size_t>(B) * P * Q);
  kernels::mm(features.value().data(), proj.value().data(), m.data(), B, A, P * Q);

  std::vector<double> out(static_cast<std::size_t>(B) * (A + P));
  for (int i = 0; i < B; ++i)
    std::memcpy(out.data() + static_cast<std::size_t>(i) * (A + P),
                features.value().data() + static_cast<std::size_t>(i) * A, sizeof(double) * A);
  for (int i = 0; i < B; ++i)
    for (int j = 0; j < B; ++j) {
      if (j == i) continue;
      for (int p = 0; p < P; ++p) {
        double l1 = 0.0;
        for (int q = 0; q < Q; ++q)
          l1 += std::abs(m[(static_cast<std::size_t>(i) * P + p) * Q + q] -
                         m[(static_cast<std::size_t>(j) * P + p) * Q + q]);
        out[static_cast<std::size_t>(i) * (A + P) + A + p] += std::exp(-l1);
      }
    }

  Tensor y = tape.make_output({B, A + P}, std::move(out), any_grad(features, proj));
  tape.record(y, [fd = features.data(), pd = proj.data(), yd = y.data(), m = std::move(m), B, A,
                  P, Q] {
    const double* g = yd->grad.data();
    std::vector<double> gm(static_cast<std::size_t>(B) * P * Q, 0.0);
    for (int i = 0; i < B; ++i)
      for (int j = i + 1; j < B; ++j)
        for (int p = 0; p < P; ++p) {
          double l1 = 0.0;
          for (int q = 0; q < Q; ++q)
            l1 += std::abs(m[(static_cast<std::size_t>(i) * P + p) * Q + q] -
                           m[(static_cast<std::size_t>(j) * P + p) * Q + q]);
          const double e = std::exp(-l1);
          const double go = g[static_cast<std::size_t>(i) * (A + P) + A + p] +
                            g[static_cast<std::size_t>(j) * (A + P) + A + p];
          if (go == 0.0) continue;
          for (int q = 0; q < Q; ++q) {
            const double d = m[(static_cast<std::size_t>(i) * P + p) * Q + q] -
                             m[(static_cast<std::size_t>(j) * P + p) * Q + q];
            const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            gm[(static_cast<std::size_t>(i) * P + p) * Q + q] -= go * e * s;
            gm[(static_cast<std::size_t>(j) * P + p) * Q + q] += go * e * s;
          }
        }
    if (fd->requires_grad) {
      fd->ensure_grad();
      for (int i = 0; i < B; ++i) {
        const double* grow = g + static_cast<std::size_t>(i) * (A + P);
        double* dst = fd->grad.data() + static_cast<std::size_t>(i) * A;
        for (int a = 0; a < A; ++a) dst[a] += grow[a];
      }
      kernels::mm_abt_acc(gm.data(), pd->value.data(), fd->grad.data(), B, P * Q, A);
    }
    if (pd->requires_grad) {
      pd->ensure_grad();
      kernels::mm_atb_acc(fd->value.data(), gm.data(), pd->grad.data(), B, A, P * Q);
    }
  });
  return y;
}

namespace {
constexpr double kEps = 1e-7;  // probability clamp before logs
}

Tensor bce_loss(Tape& tape, const Tensor& p, const Tensor& target) {
  check_same_shape(p, target, "bce_loss");
  const std::size_t n = p.value().size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::min(std::max(p.value()[i], kEps), 1.0 - kEps);
    const double t = target.value()[i];
    acc += -(t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
  }
  Tensor y = tape.make_output({1}, {acc / static_cast<double>(n)}, p.requires_grad());
  tape.record(y, [pd = p.data(), td = target.data(), yd = y.data(), n] {
    pd->ensure_grad();
    const double g = yd->grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double pv = pd->value[i];
      if (pv <= kEps || pv >= 1.0 - kEps) continue;  // clamp region: flat
      const double t = td->value[i];
      pd->grad[i] += g * (pv - t) / (pv * (1.0 - pv));
    }
  });
  return y;
}

Tensor mse_loss(Tape& tape, const Tensor& a, const Tensor& b) {
  Tensor d = sub(tape, a, b);
  return mean(tape, mul(tape, d, d));
}

Tensor row_matvec(Tape& tape, const Tensor& a, const Tensor& v, int r, int c) {
  if (a.shape().size() != 2 || v.shape().size() != 2)
    throw shape_error("row_matvec: 2-D operands expected");
  const int B = a.rows();
  if (a.cols() != r * c || v.rows() != B || v.cols() != c)
    throw shape_error("row_matvec: need a=[B x r*c], v=[B x c]");
  std::vector<double> out(static_cast<std::size_t>(B) * r, 0.0);
  const double* av = a.value().data();
  const double* vv = v.value().data();
  for (int b = 0; b < B; ++b) {
    const double* arow = av + static_cast<std::size_t>(b) * r * c;
    const double* vrow = vv + static_cast<std::size_t>(b) * c;
    double* orow = out.data() + static_cast<std::size_t>(b) * r;
    for (int i = 0; i < r; ++i) {
      double acc = 0.0;
      for (int j = 0; j < c; ++j) acc += arow[static_cast<std::size_t>(i) * c + j] * vrow[j];
      orow[i] = acc;
    }
  }
  Tensor y = tape.make_output({B, r}, std::move(out), any_grad(a, v));
  tape.record(y, [ad = a.data(), vd = v.data(), yd = y.data(), B, r, c] {
    const double* g = yd->grad.data();
    if (ad->requires_grad) ad->ensure_grad();
    if (vd->requires_grad) vd->ensure_grad();
    for (int b = 0; b < B; ++b) {
      const double* grow = g + static_cast<std::size_t>(b) * r;
      const double* vrow = vd->value.data() + static_cast<std::size_t>(b) * c;
      const double* arow = ad->value.data() + static_cast<std::size_t>(b) * r * c;
      for (int i = 0; i < r; ++i) {
        if (grow[i] == 0.0) continue;
        if (ad->requires_grad) {
          double* garow = ad->grad.data() + static_cast<std::size_t>(b) * r * c +
                          static_cast<std::size_t>(i) * c;
          for (int j = 0; j < c; ++j) garow[j] += grow[i] * vrow[j];
        }
        if (vd->requires_grad) {
          double* gvrow = vd->grad.data() + static_cast<std::size_t>(b) * c;
          for (int j = 0; j < c; ++j)
            gvrow[j] += grow[i] * arow[static_cast<std::size_t>(i) * c + j];
        }
      }
    }
  });
  return y;
}

}  // namespace odesyn
