#include "odesyn/interpolation.hpp"

#include <algorithm>
#include <cmath>

namespace odesyn {

namespace {

void check_knots(const std::vector<double>& ts) {
  if (ts.size() < 2) throw shape_error("spline: need at least 2 knots");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1]))
      throw shape_error("spline: knot times must be strictly increasing");
}

// Thomas solve of the natural-spline system for an arbitrary right-hand
// side. `rhs` holds the N-2 interior entries; the interior solution is
// written back into it.
void tridiag_solve(const std::vector<double>& ts, std::vector<double>& rhs) {
  const int n = static_cast<int>(ts.size());
  const int m = n - 2;
  if (m <= 0) return;
  std::vector<double> diag(m), upper(m);
  for (int i = 0; i < m; ++i)
    diag[i] = 2.0 * (ts[i + 2] - ts[i]);  // 2(h_{i-1} + h_i) at knot i+1
  for (int i = 0; i + 1 < m; ++i) upper[i] = ts[i + 2] - ts[i + 1];
  // forward sweep; the sub-diagonal equals the upper one shifted (symmetry)
  for (int i = 1; i < m; ++i) {
    const double lower = ts[i + 1] - ts[i];
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[static_cast<std::size_t>(i)] -= w * rhs[static_cast<std::size_t>(i - 1)];
  }
  rhs[static_cast<std::size_t>(m - 1)] /= diag[m - 1];
  for (int i = m - 2; i >= 0; --i)
    rhs[static_cast<std::size_t>(i)] =
        (rhs[static_cast<std::size_t>(i)] - upper[i] * rhs[static_cast<std::size_t>(i + 1)]) /
        diag[i];
}

}  // namespace

void natural_spline_solve(const std::vector<double>& ts, const double* y, double* m_out) {
  const int n = static_cast<int>(ts.size());
  std::vector<double> rhs(static_cast<std::size_t>(std::max(0, n - 2)));
  for (int i = 1; i + 1 < n; ++i) {
    const double h0 = ts[i] - ts[i - 1];
    const double h1 = ts[i + 1] - ts[i];
    rhs[static_cast<std::size_t>(i - 1)] =
        6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  tridiag_solve(ts, rhs);
  m_out[0] = 0.0;
  m_out[n - 1] = 0.0;
  for (int i = 1; i + 1 < n; ++i) m_out[i] = rhs[static_cast<std::size_t>(i - 1)];
}

CdePath::CdePath(std::vector<double> ts, std::vector<double> values, int channels)
    : ts_(std::move(ts)), values_(std::move(values)), channels_(channels) {
  check_knots(ts_);
  const int n = static_cast<int>(ts_.size());
  if (channels_ < 1 || values_.size() != static_cast<std::size_t>(n) * channels_)
    throw shape_error("CdePath: values must be [N x C]");
  m_.assign(values_.size(), 0.0);
  std::vector<double> col(static_cast<std::size_t>(n)), mcol(static_cast<std::size_t>(n));
  for (int c = 0; c < channels_; ++c) {
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = values_[static_cast<std::size_t>(i) * channels_ + c];
    natural_spline_solve(ts_, col.data(), mcol.data());
    for (int i = 0; i < n; ++i) m_[static_cast<std::size_t>(i) * channels_ + c] = mcol[static_cast<std::size_t>(i)];
  }
}

int CdePath::segment_of(double t) const {
  const double tol = 1e-9 * (ts_.back() - ts_.front());
  if (t < ts_.front() - tol || t > ts_.back() + tol)
    throw shape_error("path evaluation at t outside the knot range");
  const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  int i = static_cast<int>(it - ts_.begin()) - 1;
  if (i < 0) i = 0;
  if (i >= static_cast<int>(ts_.size()) - 1) i = static_cast<int>(ts_.size()) - 2;
  return i;
}

std::vector<double> CdePath::eval(double t) const {
  const int i = segment_of(t);
  const double h = ts_[i + 1] - ts_[i];
  const double a = (ts_[i + 1] - t) / h;
  const double b = (t - ts_[i]) / h;
  std::vector<double> out(static_cast<std::size_t>(channels_));
  for (int c = 0; c < channels_; ++c) {
    const double yi = values_[static_cast<std::size_t>(i) * channels_ + c];
    const double yj = values_[static_cast<std::size_t>(i + 1) * channels_ + c];
    const double mi = m_[static_cast<std::size_t>(i) * channels_ + c];
    const double mj = m_[static_cast<std::size_t>(i + 1) * channels_ + c];
    out[static_cast<std::size_t>(c)] =
        a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
  }
  return out;
}

std::vector<double> CdePath::derivative(double t) const {
  const int i = segment_of(t);
  const double h = ts_[i + 1] - ts_[i];
  const double a = (ts_[i + 1] - t) / h;
  const double b = (t - ts_[i]) / h;
  std::vector<double> out(static_cast<std::size_t>(channels_));
  for (int c = 0; c < channels_; ++c) {
    const double yi = values_[static_cast<std::size_t>(i) * channels_ + c];
    const double yj = values_[static_cast<std::size_t>(i + 1) * channels_ + c];
    const double mi = m_[static_cast<std::size_t>(i) * channels_ + c];
    const double mj = m_[static_cast<std::size_t>(i + 1) * channels_ + c];
    out[static_cast<std::size_t>(c)] = (yj - yi) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi +
                                       (3.0 * b * b - 1.0) / 6.0 * h * mj;
  }
  return out;
}

double CdePath::second_derivative(double t, int channel) const {
  const int i = segment_of(t);
  const double h = ts_[i + 1] - ts_[i];
  const double a = (ts_[i + 1] - t) / h;
  const double b = (t - ts_[i]) / h;
  return a * m_[static_cast<std::size_t>(i) * channels_ + channel] +
         b * m_[static_cast<std::size_t>(i + 1) * channels_ + channel];
}

CdePath fit_natural_cubic_spline(const std::vector<double>& ts, const Tensor& values) {
  check_knots(ts);
  if (values.shape().size() != 2 || values.rows() != static_cast<int>(ts.size()))
    throw shape_error("fit_natural_cubic_spline: values must be [N x C] with N knots");
  return CdePath(ts, values.value(), values.cols());
}

std::vector<double> path_eval(const CdePath& path, double t) { return path.eval(t); }

std::vector<double> path_derivative(const CdePath& path, double t) {
  return path.derivative(t);
}

Tensor spline_second_derivs(Tape& tape, const Tensor& y, const std::vector<double>& ts) {
  check_knots(ts);
  const int n = static_cast<int>(ts.size());
  if (y.shape().size() != 2 || y.cols() != n)
    throw shape_error("spline_second_derivs: y must be [B x N] over the knots");
  const int b = y.rows();
  if (n == 2) return Tensor::zeros({b, n});  // linear segments: M ≡ 0, no y dependence

  std::vector<double> m(static_cast<std::size_t>(b) * n);
  for (int r = 0; r < b; ++r)
    natural_spline_solve(ts, y.value().data() + static_cast<std::size_t>(r) * n,
                         m.data() + static_cast<std::size_t>(r) * n);
  Tensor out = tape.make_output({b, n}, std::move(m), y.requires_grad());
  tape.record(out, [yd = y.data(), od = out.data(), ts, b, n] {
    yd->ensure_grad();
    std::vector<double> lambda(static_cast<std::size_t>(n - 2));
    for (int r = 0; r < b; ++r) {
      const double* gm = od->grad.data() + static_cast<std::size_t>(r) * n;
      for (int i = 1; i + 1 < n; ++i) lambda[static_cast<std::size_t>(i - 1)] = gm[i];
      tridiag_solve(ts, lambda);  // system matrix is symmetric
      double* gy = yd->grad.data() + static_cast<std::size_t>(r) * n;
      for (int i = 1; i + 1 < n; ++i) {
        const double h0 = ts[i] - ts[i - 1];
        const double h1 = ts[i + 1] - ts[i];
        const double l = lambda[static_cast<std::size_t>(i - 1)];
        gy[i - 1] += l * 6.0 / h0;
        gy[i] += -l * (6.0 / h0 + 6.0 / h1);
        gy[i + 1] += l * 6.0 / h1;
      }
    }
  });
  return out;
}

Tensor spline_derivative_at(Tape& tape, const Tensor& y, const Tensor& m,
                            const std::vector<double>& ts, double t) {
  check_knots(ts);
  const int n = static_cast<int>(ts.size());
  const int b = y.rows();
  if (y.cols() != n || m.rows() != b || m.cols() != n)
    throw shape_error("spline_derivative_at: y and m must be [B x N]");
  const double tol = 1e-9 * (ts.back() - ts.front());
  if (t < ts.front() - tol || t > ts.back() + tol)
    throw shape_error("spline_derivative_at: t outside the knot range");
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  int i = static_cast<int>(it - ts.begin()) - 1;
  i = std::clamp(i, 0, n - 2);
  const double h = ts[static_cast<std::size_t>(i + 1)] - ts[static_cast<std::size_t>(i)];
  const double a = (ts[static_cast<std::size_t>(i + 1)] - t) / h;
  const double bb = (t - ts[static_cast<std::size_t>(i)]) / h;
  const double cy0 = -1.0 / h, cy1 = 1.0 / h;
  const double cm0 = -(3.0 * a * a - 1.0) / 6.0 * h;
  const double cm1 = (3.0 * bb * bb - 1.0) / 6.0 * h;

  std::vector<double> out(static_cast<std::size_t>(b));
  for (int r = 0; r < b; ++r) {
    const double* yr = y.value().data() + static_cast<std::size_t>(r) * n;
    const double* mr = m.value().data() + static_cast<std::size_t>(r) * n;
    out[static_cast<std::size_t>(r)] = cy0 * yr[i] + cy1 * yr[i + 1] + cm0 * mr[i] + cm1 * mr[i + 1];
  }
  Tensor res = tape.make_output({b, 1}, std::move(out),
                                y.requires_grad() || m.requires_grad());
  tape.record(res, [yd = y.data(), md = m.data(), rd = res.data(), i, n, b, cy0, cy1, cm0, cm1] {
    if (yd->requires_grad) yd->ensure_grad();
    if (md->requires_grad) md->ensure_grad();
    for (int r = 0; r < b; ++r) {
      const double g = rd->grad[static_cast<std::size_t>(r)];
      if (g == 0.0) continue;
      if (yd->requires_grad) {
        yd->grad[static_cast<std::size_t>(r) * n + i] += g * cy0;
        yd->grad[static_cast<std::size_t>(r) * n + i + 1] += g * cy1;
      }
      if (md->requires_grad) {
        md->grad[static_cast<std::size_t>(r) * n + i] += g * cm0;
        md->grad[static_cast<std::size_t>(r) * n + i + 1] += g * cm1;
      }
    }
  });
  return res;
}

BatchedChannel make_batched_channel(Tape& tape, const Tensor& y, const std::vector<double>& ts) {
  return BatchedChannel{y, spline_second_derivs(tape, y, ts)};
}

Tensor batched_path_derivative(Tape& tape, const BatchedCdePath& path, double t) {
  std::vector<Tensor> cols;
  cols.reserve(path.channels.size());
  for (const BatchedChannel& ch : path.channels)
    cols.push_back(spline_derivative_at(tape, ch.y, ch.m, path.ts, t));
  return concat_cols(tape, cols);
}

namespace {

Tensor cde_step_span(Tape& tape, const CdeFieldFunc& field, Tensor z, double t0, double t1,
                     const SolverConfig& config, const std::function<Tensor(Tape&, double)>& xdot) {
  const int d_h = z.cols();
  OdeFunc f = [&](Tape& tp, double t, const Tensor& y) {
    Tensor fy = field(tp, y);
    if (fy.rows() != y.rows() || fy.cols() % d_h != 0)
      throw shape_error("cde field: output must be [B x d_h*C]");
    const int c = fy.cols() / d_h;
    Tensor dx = xdot(tp, t);
    if (dx.cols() != c)
      throw shape_error("cde field: channel count does not match path");
    return row_matvec(tp, fy, dx, d_h, c);
  };
  auto traj = integrate(tape, f, z, t0, t1, config);
  return traj.back().y;
}

}  // namespace

Tensor cde_integrate(Tape& tape, const CdeFieldFunc& field, const Tensor& z0,
                     const CdePath& path, const SolverConfig& config) {
  Tensor z = z0.shape().size() == 1 ? reshape(tape, z0, {1, z0.numel()}) : z0;
  {
    Tape probe;
    probe.set_recording(false);
    Tensor fy = field(probe, detach(z));
    if (fy.cols() != z.cols() * path.channels())
      throw shape_error("cde_integrate: field width " + std::to_string(fy.cols()) +
                        " does not match d_h*C");
  }
  auto xdot = [&path](Tape& tp, double t) {
    std::vector<double> d = path.derivative(t);
    const int c = static_cast<int>(d.size());
    return Tensor::leaf({1, c}, std::move(d));
  };
  const auto& ts = path.knot_times();
  for (std::size_t i = 0; i + 1 < ts.size(); ++i)
    z = cde_step_span(tape, field, z, ts[i], ts[i + 1], config, xdot);
  return z0.shape().size() == 1 ? reshape(tape, z, {z.numel()}) : z;
}

Tensor cde_integrate_batched(Tape& tape, const CdeFieldFunc& field, const Tensor& z0,
                             const BatchedCdePath& path, const SolverConfig& config) {
  if (path.channels.empty()) throw shape_error("cde_integrate_batched: empty path");
  Tensor z = z0;
  auto xdot = [&path](Tape& tp, double t) { return batched_path_derivative(tp, path, t); };
  for (std::size_t i = 0; i + 1 < path.ts.size(); ++i)
    z = cde_step_span(tape, field, z, path.ts[i], path.ts[i + 1], config, xdot);
  return z;
}

}  // namespace odesyn
