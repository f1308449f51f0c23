#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "odesyn/odesolve.hpp"

namespace odesyn {

enum class CellKind { gru, lstm };

std::string cell_kind_name(CellKind k);
CellKind cell_kind_from_name(const std::string& name);

// Nine parameter tensors of the continuous GRU cell. W_* act on the input
// (d_in×d_h), U_* on the hidden state (d_h×d_h), b_* are biases (d_h).
struct GruOdeParams {
  Tensor W_r, U_r, b_r;
  Tensor W_u, U_u, b_u;
  Tensor W_g, U_g, b_g;

  static GruOdeParams init(int d_in, int d_h, std::mt19937_64& rng);
  static GruOdeParams zeros(int d_in, int d_h);
  std::vector<std::pair<std::string, Tensor>> named() const;
  int input_dim() const { return W_r.rows(); }
  int hidden_dim() const { return W_r.cols(); }
};

// Gate parameters of the continuous LSTM cell (input/forget/output/candidate).
struct LstmOdeParams {
  Tensor W_i, U_i, b_i;
  Tensor W_f, U_f, b_f;
  Tensor W_o, U_o, b_o;
  Tensor W_g, U_g, b_g;

  static LstmOdeParams init(int d_in, int d_h, std::mt19937_64& rng);
  static LstmOdeParams zeros(int d_in, int d_h);
  std::vector<std::pair<std::string, Tensor>> named() const;
  int input_dim() const { return W_i.rows(); }
  int hidden_dim() const { return W_i.cols(); }
};

// Continuous GRU dynamics:
//   r = σ(W_r x + U_r h + b_r)
//   u = σ(W_u x + U_u h + b_u)
//   g = tanh(W_g x + U_g (r⊙h) + b_g)
//   dh/dt = (1 − u) ⊙ (g − h)
// h is [B×d_h], x is [B×d_in].
Tensor gru_ode_derivative(Tape& tape, const Tensor& h, const Tensor& x, const GruOdeParams& p);

// Continuous LSTM dynamics on the cell state c. The output gate reads the
// pre-gate readout tanh(c); the remaining gates read h = o ⊙ tanh(c):
//   o = σ(W_o x + U_o tanh(c) + b_o),  h = o ⊙ tanh(c)
//   i = σ(W_i x + U_i h + b_i),  f = σ(W_f x + U_f h + b_f)
//   g = tanh(W_g x + U_g h + b_g)
//   dc/dt = i⊙g − (1 − f) ⊙ c
Tensor lstm_ode_derivative(Tape& tape, const Tensor& c, const Tensor& x, const LstmOdeParams& p);

// Exposed hidden state h = o ⊙ tanh(c) of the LSTM cell.
Tensor lstm_readout(Tape& tape, const Tensor& c, const Tensor& x, const LstmOdeParams& p);

// One cell of either kind behind a uniform surface. `state` is h for GRU and
// c for LSTM; `hidden` maps the state to the exposed hidden vector.
class OdeCell {
 public:
  OdeCell() = default;
  static OdeCell make(CellKind kind, int d_in, int d_h, std::mt19937_64& rng);
  static OdeCell make_zero(CellKind kind, int d_in, int d_h);

  CellKind kind() const { return kind_; }
  int input_dim() const;
  int hidden_dim() const;

  Tensor derivative(Tape& tape, const Tensor& state, const Tensor& x) const;
  Tensor hidden(Tape& tape, const Tensor& state, const Tensor& x) const;
  std::vector<std::pair<std::string, Tensor>> named_params() const;

  GruOdeParams gru;    // valid when kind == gru
  LstmOdeParams lstm;  // valid when kind == lstm

 private:
  CellKind kind_ = CellKind::gru;
};

// ODE-RNN sequence pass: the state evolves from `state0` by integrating the
// cell derivative over each [ts[i], ts[i+1]] with the input held at xs[i]
// (zero-order hold). Returns one exposed hidden state per time point; the
// first is the readout of state0 itself (no discrete update at observations).
std::vector<Tensor> ode_rnn_forward(Tape& tape, const std::vector<Tensor>& xs,
                                    const std::vector<double>& ts, const OdeCell& cell,
                                    const Tensor& state0, const SolverConfig& config);

}  // namespace odesyn
