#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "odesyn/data.hpp"
#include "odesyn/models.hpp"

namespace odesyn {

// Experiment parameters. Defaults follow the two training columns of the
// experiments table: regression (batch 50, datasize 100, lr 1e-4, 100
// epochs) and GAN (batch 64, datasize 1000, lr 5e-5, 30 x 1000).
struct TrainConfig {
  int batch_size = 50;
  int datasize = 100;
  int seq_length = 240;
  int hidden_dim = 50;
  double learning_rate = 1e-4;
  int epochs = 100;
  int iterations = 1000;  // GAN inner loop; unused by the regression model
  std::uint64_t seed = 42;
  double sigma_g = 0.01;  // discriminator gradient-noise scale
  double split_ratio = 0.8;
  int ode_steps = 4;
  double noise_scale = 0.1;
  CellKind cell = CellKind::gru;
};

TrainConfig default_train_config(ModelKind kind);

// --- optimizer ---------------------------------------------------------------

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
};

// Standard Adam update with bias correction on one parameter tensor; the
// consumed gradient buffer is zeroed.
void adam_step(Tensor& param, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step();  // applies adam_step to every tensor that has a gradient
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
  double lr_, beta1_, beta2_, eps_;
};

// Adds i.i.d. N(0, sigma^2) to every populated gradient entry.
void add_gradient_noise(const std::vector<Tensor>& params, double sigma, std::mt19937_64& rng);

// --- data split ----------------------------------------------------------------

// Seeded shuffle, then |train| = round(ratio*N) (kept inside [1, N-1] so both
// halves stay usable). Disjoint and exhaustive.
std::pair<std::vector<SignalWindow>, std::vector<SignalWindow>> split_dataset(
    const std::vector<SignalWindow>& windows, double ratio, std::uint64_t seed);

// --- histories -----------------------------------------------------------------

struct RegressionHistory {
  std::vector<double> epoch_loss;
};

struct GanHistory {
  struct Row {
    int epoch;
    int iteration;
    double g_loss;
    double d_loss;
  };
  std::vector<Row> rows;
};

// CSV exports: `epoch,loss` and `epoch,iteration,g_loss,d_loss`.
void write_regression_csv(const std::filesystem::path& path, const RegressionHistory& h);
void write_gan_csv(const std::filesystem::path& path, const GanHistory& h);

// --- training loops --------------------------------------------------------------

// Mean-squared-error regression of the ODE-RNN generator against the training
// windows (teacher-forced). Returns one mean loss per epoch. A non-finite
// loss aborts with a numeric_error naming epoch and batch.
RegressionHistory train_ode_ecg_generator(OdeEcgGenerator& model,
                                          const std::vector<SignalWindow>& train_windows,
                                          const TrainConfig& cfg);

struct GanStepResult {
  double g_loss;
  double d_loss;
};

// Alternating GAN optimization. One step runs the discriminator update on
// (real, detached fake) with gradient noise, then the generator update on the
// non-saturating loss -log D(G(z)).
class GanTrainer {
 public:
  GanTrainer(ModelBundle& bundle, const TrainConfig& cfg);

  GanStepResult step(const Tensor& real_batch, const std::vector<double>& ts,
                     std::uint64_t step_seed);

  // epochs x iterations loop over uniformly resampled batches; rolling
  // checkpoint per epoch when a directory is given.
  GanHistory run(const std::vector<SignalWindow>& train_windows,
                 const std::optional<std::filesystem::path>& checkpoint_dir);

 private:
  ModelBundle& bundle_;
  TrainConfig cfg_;
  Adam gen_adam_;
  Adam disc_adam_;
};

}  // namespace odesyn
