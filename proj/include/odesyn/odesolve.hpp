#pragma once

#include <functional>
#include <span>
#include <vector>

#include "odesyn/ops.hpp"

namespace odesyn {

// Vector field contract: f(t, y) -> dy/dt with the output shaped like y.
// Parameters live in the closure. Evaluation must be side-effect free.
using OdeFunc = std::function<Tensor(Tape&, double t, const Tensor& y)>;

enum class SolverMethod { euler, rk4 };

// Fixed-step discretization of one span. Exactly one of n_steps / step_size
// drives the grid; a step size is rounded to the nearest uniform subdivision
// of the span so trajectory timestamps are exactly t0 + i*(t1-t0)/n.
class SolverConfig {
 public:
  SolverConfig() = default;  // rk4, 4 steps per span

  static SolverConfig steps(int n, SolverMethod m = SolverMethod::rk4);
  static SolverConfig step_size(double dt, SolverMethod m = SolverMethod::rk4);

  SolverMethod method() const { return method_; }
  int resolve_steps(double span) const;

 private:
  SolverMethod method_ = SolverMethod::rk4;
  int n_steps_ = 4;
  double step_size_ = 0.0;  // > 0 when driving
};

struct TimedState {
  double t;
  Tensor y;
};

// One classical 4-stage Runge-Kutta update, recorded on the tape.
Tensor rk4_step(Tape& tape, const OdeFunc& f, const Tensor& y, double t, double h);

// One forward Euler update.
Tensor euler_step(Tape& tape, const OdeFunc& f, const Tensor& y, double t, double h);

// Integrates y' = f(t, y) over [t0, t1] on a uniform grid; returns the
// n_steps+1 states including both endpoints. Throws numeric_error naming the
// time of the first non-finite state.
std::vector<TimedState> integrate(Tape& tape, const OdeFunc& f, const Tensor& y0, double t0,
                                  double t1, const SolverConfig& config);

// Plain-double counterpart for signal synthesis and oracles where no gradient
// is needed. Writes dy/dt into `dydt`.
using PlainOdeFunc = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

void rk4_step_plain(const PlainOdeFunc& f, std::vector<double>& y, double t, double h);

}  // namespace odesyn
