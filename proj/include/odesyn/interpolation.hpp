#pragma once

#include <vector>

#include "odesyn/odesolve.hpp"

namespace odesyn {

// Natural cubic spline through N knots of a C-channel series. The stored
// second derivatives vanish at both endpoints; value and first/second
// derivative are continuous at interior knots.
class CdePath {
 public:
  CdePath() = default;
  CdePath(std::vector<double> ts, std::vector<double> values, int channels);

  int channels() const { return channels_; }
  int knots() const { return static_cast<int>(ts_.size()); }
  const std::vector<double>& knot_times() const { return ts_; }
  double t_begin() const { return ts_.front(); }
  double t_end() const { return ts_.back(); }

  // Piecewise-cubic value / analytic first derivative at t, one entry per
  // channel. t must lie inside [first knot, last knot].
  std::vector<double> eval(double t) const;
  std::vector<double> derivative(double t) const;
  double second_derivative(double t, int channel) const;

 private:
  int segment_of(double t) const;
  std::vector<double> ts_;
  std::vector<double> values_;  // N x C row-major
  std::vector<double> m_;       // N x C second derivatives at knots
  int channels_ = 0;
};

// Fits one natural cubic spline per channel via the standard tridiagonal
// system. `values` is [N×C].
CdePath fit_natural_cubic_spline(const std::vector<double>& ts, const Tensor& values);

std::vector<double> path_eval(const CdePath& path, double t);
std::vector<double> path_derivative(const CdePath& path, double t);

// Field contract of a controlled ODE: maps the hidden state z [B×d_h] to a
// stacked matrix [B×(d_h·C)] read row-wise as d_h×C.
using CdeFieldFunc = std::function<Tensor(Tape&, const Tensor& z)>;

// Integrates dz/dt = f(z) · dX/dt across the whole knot range, taking
// config's step count per knot interval. z0 is [B×d_h] (B=1 for a plain
// path); gradients flow into z0 and the field parameters.
Tensor cde_integrate(Tape& tape, const CdeFieldFunc& field, const Tensor& z0,
                     const CdePath& path, const SolverConfig& config);

// --- differentiable spline machinery -------------------------------------
//
// Batched single-channel splines whose knot values sit on the tape, so
// gradients reach the series being interpolated (the generated signal inside
// the CDE discriminator). Rows of y are independent series over shared knots.

// Natural-spline second derivatives per row; y and result are [B×N].
Tensor spline_second_derivs(Tape& tape, const Tensor& y, const std::vector<double>& ts);

// First derivative of each row's spline at time t -> [B×1]. `m` must come
// from spline_second_derivs over the same knots.
Tensor spline_derivative_at(Tape& tape, const Tensor& y, const Tensor& m,
                            const std::vector<double>& ts, double t);

// One channel of a batched path: knot values plus their second derivatives.
struct BatchedChannel {
  Tensor y;  // [B×N]
  Tensor m;  // [B×N]
};

struct BatchedCdePath {
  std::vector<double> ts;
  std::vector<BatchedChannel> channels;
  int batch() const { return channels.front().y.rows(); }
};

BatchedChannel make_batched_channel(Tape& tape, const Tensor& y, const std::vector<double>& ts);

// dX/dt of every channel at time t -> [B×C].
Tensor batched_path_derivative(Tape& tape, const BatchedCdePath& path, double t);

// Batched controlled-ODE solve along `path`.
Tensor cde_integrate_batched(Tape& tape, const CdeFieldFunc& field, const Tensor& z0,
                             const BatchedCdePath& path, const SolverConfig& config);

// Shared tridiagonal solve: natural-spline second derivatives for one row.
void natural_spline_solve(const std::vector<double>& ts, const double* y, double* m_out);

}  // namespace odesyn
