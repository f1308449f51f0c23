#include "odesyn/cells.hpp"

#include <cmath>

namespace odesyn {

std::string cell_kind_name(CellKind k) { return k == CellKind::gru ? "gru" : "lstm"; }

CellKind cell_kind_from_name(const std::string& name) {
  if (name == "gru") return CellKind::gru;
  if (name == "lstm") return CellKind::lstm;
  throw io_error("unknown cell kind '" + name + "'");
}

namespace {

// Uniform(-s, s) with s = 1/sqrt(fan_in), the usual recurrent-net default.
Tensor init_matrix(int rows, int cols, std::mt19937_64& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(rows > 0 ? rows : 1));
  std::uniform_real_distribution<double> dist(-s, s);
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (double& x : v) x = dist(rng);
  return Tensor::leaf({rows, cols}, std::move(v), true);
}

Tensor init_bias(int n) { return Tensor::zeros({n}, true); }

}  // namespace

GruOdeParams GruOdeParams::init(int d_in, int d_h, std::mt19937_64& rng) {
  GruOdeParams p;
  p.W_r = init_matrix(d_in, d_h, rng);
  p.U_r = init_matrix(d_h, d_h, rng);
  p.b_r = init_bias(d_h);
  p.W_u = init_matrix(d_in, d_h, rng);
  p.U_u = init_matrix(d_h, d_h, rng);
  p.b_u = init_bias(d_h);
  p.W_g = init_matrix(d_in, d_h, rng);
  p.U_g = init_matrix(d_h, d_h, rng);
  p.b_g = init_bias(d_h);
  return p;
}

GruOdeParams GruOdeParams::zeros(int d_in, int d_h) {
  GruOdeParams p;
  p.W_r = Tensor::zeros({d_in, d_h}, true);
  p.U_r = Tensor::zeros({d_h, d_h}, true);
  p.b_r = init_bias(d_h);
  p.W_u = Tensor::zeros({d_in, d_h}, true);
  p.U_u = Tensor::zeros({d_h, d_h}, true);
  p.b_u = init_bias(d_h);
  p.W_g = Tensor::zeros({d_in, d_h}, true);
  p.U_g = Tensor::zeros({d_h, d_h}, true);
  p.b_g = init_bias(d_h);
  return p;
}

std::vector<std::pair<std::string, Tensor>> GruOdeParams::named() const {
  return {{"W_r", W_r}, {"U_r", U_r}, {"b_r", b_r}, {"W_u", W_u}, {"U_u", U_u},
          {"b_u", b_u}, {"W_g", W_g}, {"U_g", U_g}, {"b_g", b_g}};
}

LstmOdeParams LstmOdeParams::init(int d_in, int d_h, std::mt19937_64& rng) {
  LstmOdeParams p;
  p.W_i = init_matrix(d_in, d_h, rng);
  p.U_i = init_matrix(d_h, d_h, rng);
  p.b_i = init_bias(d_h);
  p.W_f = init_matrix(d_in, d_h, rng);
  p.U_f = init_matrix(d_h, d_h, rng);
  p.b_f = init_bias(d_h);
  p.W_o = init_matrix(d_in, d_h, rng);
  p.U_o = init_matrix(d_h, d_h, rng);
  p.b_o = init_bias(d_h);
  p.W_g = init_matrix(d_in, d_h, rng);
  p.U_g = init_matrix(d_h, d_h, rng);
  p.b_g = init_bias(d_h);
  return p;
}

LstmOdeParams LstmOdeParams::zeros(int d_in, int d_h) {
  LstmOdeParams p;
  p.W_i = Tensor::zeros({d_in, d_h}, true);
  p.U_i = Tensor::zeros({d_h, d_h}, true);
  p.b_i = init_bias(d_h);
  p.W_f = Tensor::zeros({d_in, d_h}, true);
  p.U_f = Tensor::zeros({d_h, d_h}, true);
  p.b_f = init_bias(d_h);
  p.W_o = Tensor::zeros({d_in, d_h}, true);
  p.U_o = Tensor::zeros({d_h, d_h}, true);
  p.b_o = init_bias(d_h);
  p.W_g = Tensor::zeros({d_in, d_h}, true);
  p.U_g = Tensor::zeros({d_h, d_h}, true);
  p.b_g = init_bias(d_h);
  return p;
}

std::vector<std::pair<std::string, Tensor>> LstmOdeParams::named() const {
  return {{"W_i", W_i}, {"U_i", U_i}, {"b_i", b_i}, {"W_f", W_f}, {"U_f", U_f}, {"b_f", b_f},
          {"W_o", W_o}, {"U_o", U_o}, {"b_o", b_o}, {"W_g", W_g}, {"U_g", U_g}, {"b_g", b_g}};
}

namespace {

void check_cell_shapes(const Tensor& state, const Tensor& x, int d_in, int d_h,
                       const char* who) {
  if (state.shape().size() != 2 || state.cols() != d_h)
    throw shape_error(std::string(who) + ": state must be [B x " + std::to_string(d_h) + "]");
  if (x.shape().size() != 2 || x.cols() != d_in || x.rows() != state.rows())
    throw shape_error(std::string(who) + ": input must be [B x " + std::to_string(d_in) + "]");
}

// σ(W x + U s + b)
Tensor gate(Tape& tape, const Tensor& x, const Tensor& s, const Tensor& W, const Tensor& U,
            const Tensor& b, bool use_tanh = false) {
  Tensor pre = add(tape, linear(tape, x, W, b), matmul(tape, s, U));
  return use_tanh ? tanh(tape, pre) : sigmoid(tape, pre);
}

}  // namespace

Tensor gru_ode_derivative(Tape& tape, const Tensor& h, const Tensor& x, const GruOdeParams& p) {
  check_cell_shapes(h, x, p.input_dim(), p.hidden_dim(), "gru_ode_derivative");
  Tensor r = gate(tape, x, h, p.W_r, p.U_r, p.b_r);
  Tensor u = gate(tape, x, h, p.W_u, p.U_u, p.b_u);
  Tensor g = gate(tape, x, mul(tape, r, h), p.W_g, p.U_g, p.b_g, /*use_tanh=*/true);
  Tensor one_minus_u = affine(tape, u, -1.0, 1.0);
  return mul(tape, one_minus_u, sub(tape, g, h));
}

Tensor lstm_ode_derivative(Tape& tape, const Tensor& c, const Tensor& x,
                           const LstmOdeParams& p) {
  check_cell_shapes(c, x, p.input_dim(), p.hidden_dim(), "lstm_ode_derivative");
  Tensor h = lstm_readout(tape, c, x, p);
  Tensor i = gate(tape, x, h, p.W_i, p.U_i, p.b_i);
  Tensor f = gate(tape, x, h, p.W_f, p.U_f, p.b_f);
  Tensor g = gate(tape, x, h, p.W_g, p.U_g, p.b_g, /*use_tanh=*/true);
  Tensor one_minus_f = affine(tape, f, -1.0, 1.0);
  return sub(tape, mul(tape, i, g), mul(tape, one_minus_f, c));
}

Tensor lstm_readout(Tape& tape, const Tensor& c, const Tensor& x, const LstmOdeParams& p) {
  check_cell_shapes(c, x, p.input_dim(), p.hidden_dim(), "lstm_readout");
  Tensor tc = tanh(tape, c);
  Tensor o = gate(tape, x, tc, p.W_o, p.U_o, p.b_o);
  return mul(tape, o, tc);
}

OdeCell OdeCell::make(CellKind kind, int d_in, int d_h, std::mt19937_64& rng) {
  OdeCell c;
  c.kind_ = kind;
  if (kind == CellKind::gru)
    c.gru = GruOdeParams::init(d_in, d_h, rng);
  else
    c.lstm = LstmOdeParams::init(d_in, d_h, rng);
  return c;
}

OdeCell OdeCell::make_zero(CellKind kind, int d_in, int d_h) {
  OdeCell c;
  c.kind_ = kind;
  if (kind == CellKind::gru)
    c.gru = GruOdeParams::zeros(d_in, d_h);
  else
    c.lstm = LstmOdeParams::zeros(d_in, d_h);
  return c;
}

int OdeCell::input_dim() const {
  return kind_ == CellKind::gru ? gru.input_dim() : lstm.input_dim();
}

int OdeCell::hidden_dim() const {
  return kind_ == CellKind::gru ? gru.hidden_dim() : lstm.hidden_dim();
}

Tensor OdeCell::derivative(Tape& tape, const Tensor& state, const Tensor& x) const {
  return kind_ == CellKind::gru ? gru_ode_derivative(tape, state, x, gru)
                                : lstm_ode_derivative(tape, state, x, lstm);
}

Tensor OdeCell::hidden(Tape& tape, const Tensor& state, const Tensor& x) const {
  return kind_ == CellKind::gru ? state : lstm_readout(tape, state, x, lstm);
}

std::vector<std::pair<std::string, Tensor>> OdeCell::named_params() const {
  return kind_ == CellKind::gru ? gru.named() : lstm.named();
}

std::vector<Tensor> ode_rnn_forward(Tape& tape, const std::vector<Tensor>& xs,
                                    const std::vector<double>& ts, const OdeCell& cell,
                                    const Tensor& state0, const SolverConfig& config) {
  if (xs.empty() || xs.size() != ts.size())
    throw shape_error("ode_rnn_forward: need one input per time point");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1]))
      throw shape_error("ode_rnn_forward: times must be strictly increasing");

  std::vector<Tensor> hidden;
  hidden.reserve(ts.size());
  Tensor state = state0;
  hidden.push_back(cell.hidden(tape, state, xs[0]));
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const Tensor& x = xs[i];  // zero-order hold over [ts[i], ts[i+1]]
    OdeFunc f = [&cell, &x](Tape& tp, double, const Tensor& y) {
      return cell.derivative(tp, y, x);
    };
    auto traj = integrate(tape, f, state, ts[i], ts[i + 1], config);
    state = traj.back().y;
    hidden.push_back(cell.hidden(tape, state, xs[i + 1]));
  }
  return hidden;
}

}  // namespace odesyn
