#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "odesyn/cells.hpp"
#include "odesyn/interpolation.hpp"

namespace odesyn {

// Sequence generator contract shared by every model family. `ts` is the output
// grid, `y0` a [B×1] batch of initial signal values; the result is [B×|ts|].
class Generator {
 public:
  virtual ~Generator() = default;
  virtual Tensor sample(Tape& tape, const std::vector<double>& ts, const Tensor& y0,
                        std::mt19937_64& rng) const = 0;
  virtual std::vector<std::pair<std::string, Tensor>> named_params() const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json config_json() const = 0;
};

// Discriminator contract: per-sample probability that `candidate` is real.
// `reference` carries a batch of real windows for pairwise discriminators
// (the CDE path U); convolutional variants ignore it.
class Discriminator {
 public:
  virtual ~Discriminator() = default;
  virtual Tensor score(Tape& tape, const Tensor& candidate, const Tensor& reference,
                       const std::vector<double>& ts) const = 0;
  virtual std::vector<std::pair<std::string, Tensor>> named_params() const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json config_json() const = 0;
};

// --- continuous-time generators -------------------------------------------

// Recurrent-cell vector field with an affine readout. The hidden state is
// seeded from the (noised) initial value and evolved through the cell ODE;
// between grid points the cell input is held constant (zero-order hold).
struct SeqGenConfig {
  CellKind cell = CellKind::gru;
  int hidden_dim = 50;
  double noise_scale = 0.1;
  int ode_steps = 4;  // solver steps between adjacent grid points
};

class SeqGenCore {
 public:
  SeqGenCore() = default;
  SeqGenCore(SeqGenConfig cfg, std::uint64_t seed);

  // Free-running synthesis: each emitted sample feeds back as the cell input
  // for the next span. h0 = tile(y0) + z with z ~ N(0, noise_scale²).
  Tensor generate(Tape& tape, const Tensor& y0, const std::vector<double>& ts,
                  std::mt19937_64& rng) const;

  // Teacher-forced pass: the observed batch [B×L] drives the cell, the
  // readout reproduces it. Used by the regression objective.
  Tensor teacher_forward(Tape& tape, const Tensor& batch, const std::vector<double>& ts,
                         std::mt19937_64& rng) const;

  std::vector<std::pair<std::string, Tensor>> named_params() const;

  SeqGenConfig cfg;
  OdeCell cell;
  Tensor w_out, b_out;
};

// Learns signal dynamics by regression, generates by free-running rollout.
class OdeEcgGenerator final : public Generator {
 public:
  OdeEcgGenerator(SeqGenConfig cfg, std::uint64_t seed) : core_(cfg, seed) {}
  Tensor sample(Tape& tape, const std::vector<double>& ts, const Tensor& y0,
                std::mt19937_64& rng) const override {
    return core_.generate(tape, y0, ts, rng);
  }
  Tensor teacher_forward(Tape& tape, const Tensor& batch, const std::vector<double>& ts,
                         std::mt19937_64& rng) const {
    return core_.teacher_forward(tape, batch, ts, rng);
  }
  std::vector<std::pair<std::string, Tensor>> named_params() const override {
    return core_.named_params();
  }
  std::string kind() const override { return "ode-ecg-generator"; }
  nlohmann::json config_json() const override;
  static std::unique_ptr<OdeEcgGenerator> from_config_json(const nlohmann::json& j);
  SeqGenCore& core() { return core_; }
  const SeqGenCore& core() const { return core_; }

 private:
  SeqGenCore core_;
};

// GAN generator of the second model: same recurrent-cell field
// (GeneratorFunc) with unit-scale noise injected into the initial latent.
class OdeGenerator final : public Generator {
 public:
  OdeGenerator(SeqGenConfig cfg, std::uint64_t seed) : core_(cfg, seed) {}
  Tensor sample(Tape& tape, const std::vector<double>& ts, const Tensor& y0,
                std::mt19937_64& rng) const override {
    return core_.generate(tape, y0, ts, rng);
  }
  std::vector<std::pair<std::string, Tensor>> named_params() const override {
    return core_.named_params();
  }
  std::string kind() const override { return "ode-generator"; }
  nlohmann::json config_json() const override;
  static std::unique_ptr<OdeGenerator> from_config_json(const nlohmann::json& j);
  SeqGenCore& core() { return core_; }

 private:
  SeqGenCore core_;
};

// Baseline: two stacked discrete LSTM layers over per-step noise, plus a
// fully connected output layer.
struct BaselineLstmConfig {
  int hidden_dim = 50;
  int noise_dim = 5;
};

class BaselineLstmGenerator final : public Generator {
 public:
  BaselineLstmGenerator(BaselineLstmConfig cfg, std::uint64_t seed);
  Tensor sample(Tape& tape, const std::vector<double>& ts, const Tensor& y0,
                std::mt19937_64& rng) const override;
  std::vector<std::pair<std::string, Tensor>> named_params() const override;
  std::string kind() const override { return "baseline-lstm-generator"; }
  nlohmann::json config_json() const override;
  static std::unique_ptr<BaselineLstmGenerator> from_config_json(const nlohmann::json& j);

  BaselineLstmConfig cfg;
  LstmOdeParams layer1, layer2;  // gate parameters, used with discrete updates
  Tensor w_out, b_out;
};

// --- discriminators ---------------------------------------------------------

// Four-layer design: two 2-D convolutions (kernel height 1 over the
// 1×seq_length signal image), minibatch discrimination, affine + sigmoid.
struct ConvDiscConfig {
  int seq_length = 240;
  bool minibatch_normal_init = true;
  int num_cv = 2;
  int cv1_out = 32, cv1_k = 5, cv1_s = 1, p1_k = 2;
  int cv2_out = 64, cv2_k = 5, cv2_s = 1, p2_k = 2;
  int mb_kernels = 5, mb_dim = 3;
};

class ConvDiscriminator final : public Discriminator {
 public:
  ConvDiscriminator(ConvDiscConfig cfg, std::uint64_t seed);
  Tensor score(Tape& tape, const Tensor& candidate, const Tensor& reference,
               const std::vector<double>& ts) const override;
  std::vector<std::pair<std::string, Tensor>> named_params() const override;
  std::string kind() const override { return "conv-discriminator"; }
  nlohmann::json config_json() const override;
  static std::unique_ptr<ConvDiscriminator> from_config_json(const nlohmann::json& j);
  int flat_width() const;  // conv-stack output width feeding the head

  ConvDiscConfig cfg;
  Tensor conv1_w, conv1_b, conv2_w, conv2_b, mb_proj, head_w, head_b;
};

// Convolution + NODE layer variant: conv, a width-preserving convolutional
// vector field integrated over unit time, then two conv/max-pool pairs.
struct ConvNodeDiscConfig {
  int seq_length = 240;
  int cv1_out = 16, cv1_k = 5, cv1_s = 2, p1_k = 2;
  int node_k = 3, node_steps = 1;
  int cv2_out = 32, cv2_k = 5, cv2_s = 1, p2_k = 2, pool2 = 2;
  int cv3_out = 64, cv3_k = 5, cv3_s = 1, p3_k = 2, pool3 = 2;
};

class ConvNodeDiscriminator final : public Discriminator {
 public:
  ConvNodeDiscriminator(ConvNodeDiscConfig cfg, std::uint64_t seed);
  Tensor score(Tape& tape, const Tensor& candidate, const Tensor& reference,
               const std::vector<double>& ts) const override;
  std::vector<std::pair<std::string, Tensor>> named_params() const override;
  std::string kind() const override { return "conv-node-discriminator"; }
  nlohmann::json config_json() const override;
  static std::unique_ptr<ConvNodeDiscriminator> from_config_json(const nlohmann::json& j);

  // DiscriminatorFunc: tanh(conv(z)), same channel count and width as z.
  Tensor node_field(Tape& tape, const Tensor& z) const;

  ConvNodeDiscConfig cfg;
  Tensor conv1_w, conv1_b, df_w, df_b, conv2_w, conv2_b, conv3_w, conv3_b, head_w, head_b;
};

// Neural-CDE discriminator over the pairwise path U: channels are
// (time, reference signal, candidate signal) splined on the shared grid;
// the hidden state Z integrates dZ = f(Z)·dU from zero.
struct CdeDiscConfig {
  int seq_length = 240;
  int value_channels = 2;  // reference + candidate; time is appended
  int hidden_channels = 32;
  int field_hidden = 32;
  int output_channels = 1;
  int ode_steps = 1;        // solver steps per knot interval
  double value_gain = 4.0;  // fixed scaling of the signal channels
};

class CdeDiscriminator final : public Discriminator {
 public:
  CdeDiscriminator(CdeDiscConfig cfg, std::uint64_t seed);
  Tensor score(Tape& tape, const Tensor& candidate, const Tensor& reference,
               const std::vector<double>& ts) const override;
  std::vector<std::pair<std::string, Tensor>> named_params() const override;
  std::string kind() const override { return "cde-discriminator"; }
  nlohmann::json config_json() const override;
  static std::unique_ptr<CdeDiscriminator> from_config_json(const nlohmann::json& j);

  Tensor field(Tape& tape, const Tensor& z) const;  // [B×d_h] -> [B×d_h·C]

  CdeDiscConfig cfg;
  Tensor f_w1, f_b1, f_w2, f_b2, head_w, head_b;
};

// --- model registry and checkpoints ----------------------------------------

// CLI-facing model families.
enum class ModelKind { ode_rnn, ode_gan, ode_gan2_convnode, ode_gan2_cde, baseline_gan };

std::string model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);
bool model_is_gan(ModelKind k);

struct ModelHyper {
  int seq_length = 240;
  int hidden_dim = 50;
  int ode_steps = 4;
  double noise_scale = 0.1;
  CellKind cell = CellKind::gru;
};

struct ModelBundle {
  ModelKind kind;
  std::unique_ptr<Generator> gen;
  std::unique_ptr<Discriminator> disc;  // null for ode_rnn
  std::vector<std::pair<std::string, Tensor>> named_params() const;
};

ModelBundle make_models(ModelKind kind, const ModelHyper& hyper, std::uint64_t seed);

// Single JSON checkpoint: format marker, model kind, per-component configs,
// named parameter arrays and free-form run metadata. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle,
                     const nlohmann::json& meta = nlohmann::json::object());
ModelBundle load_checkpoint(const std::filesystem::path& path,
                            nlohmann::json* meta_out = nullptr);

}  // namespace odesyn
