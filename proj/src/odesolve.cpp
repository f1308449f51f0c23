#include "odesyn/odesolve.hpp"

#include <cmath>
#include <string>

namespace odesyn {

SolverConfig SolverConfig::steps(int n, SolverMethod m) {
  if (n < 1) throw shape_error("SolverConfig: n_steps must be positive");
  SolverConfig c;
  c.method_ = m;
  c.n_steps_ = n;
  c.step_size_ = 0.0;
  return c;
}

SolverConfig SolverConfig::step_size(double dt, SolverMethod m) {
  if (!(dt > 0.0)) throw shape_error("SolverConfig: step size must be positive");
  SolverConfig c;
  c.method_ = m;
  c.n_steps_ = 0;
  c.step_size_ = dt;
  return c;
}

int SolverConfig::resolve_steps(double span) const {
  if (step_size_ > 0.0) {
    const int n = static_cast<int>(std::lround(span / step_size_));
    return n < 1 ? 1 : n;
  }
  return n_steps_;
}

namespace {

void check_finite(const Tensor& y, double t, const char* what) {
  for (double v : y.value())
    if (!std::isfinite(v))
      throw numeric_error(std::string(what) + " produced a non-finite value at t=" +
                          std::to_string(t));
}

}  // namespace

Tensor rk4_step(Tape& tape, const OdeFunc& f, const Tensor& y, double t, double h) {
  if (!(h > 0.0)) throw shape_error("rk4_step: h must be positive");
  Tensor k1 = f(tape, t, y);
  check_finite(k1, t, "rk4 stage 1");
  Tensor k2 = f(tape, t + 0.5 * h, add_scaled(tape, y, k1, 0.5 * h));
  check_finite(k2, t + 0.5 * h, "rk4 stage 2");
  Tensor k3 = f(tape, t + 0.5 * h, add_scaled(tape, y, k2, 0.5 * h));
  check_finite(k3, t + 0.5 * h, "rk4 stage 3");
  Tensor k4 = f(tape, t + h, add_scaled(tape, y, k3, h));
  check_finite(k4, t + h, "rk4 stage 4");
  // y + h/6 (k1 + 2 k2 + 2 k3 + k4)
  Tensor s = add_scaled(tape, k1, k2, 2.0);
  s = add_scaled(tape, s, k3, 2.0);
  s = add(tape, s, k4);
  return add_scaled(tape, y, s, h / 6.0);
}

Tensor euler_step(Tape& tape, const OdeFunc& f, const Tensor& y, double t, double h) {
  if (!(h > 0.0)) throw shape_error("euler_step: h must be positive");
  Tensor k = f(tape, t, y);
  check_finite(k, t, "euler stage");
  return add_scaled(tape, y, k, h);
}

std::vector<TimedState> integrate(Tape& tape, const OdeFunc& f, const Tensor& y0, double t0,
                                  double t1, const SolverConfig& config) {
  if (!(t1 > t0)) throw shape_error("integrate: t1 must exceed t0");
  const int n = config.resolve_steps(t1 - t0);
  std::vector<TimedState> trajectory;
  trajectory.reserve(static_cast<std::size_t>(n) + 1);
  trajectory.push_back({t0, y0});
  Tensor y = y0;
  for (int i = 0; i < n; ++i) {
    const double ta = t0 + static_cast<double>(i) * (t1 - t0) / n;
    const double tb = t0 + static_cast<double>(i + 1) * (t1 - t0) / n;
    y = config.method() == SolverMethod::rk4 ? rk4_step(tape, f, y, ta, tb - ta)
                                             : euler_step(tape, f, y, ta, tb - ta);
    check_finite(y, tb, "integration state");
    trajectory.push_back({tb, y});
  }
  return trajectory;
}

void rk4_step_plain(const PlainOdeFunc& f, std::vector<double>& y, double t, double h) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    y[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
}

}  // namespace odesyn
