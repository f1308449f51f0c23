#include "odesyn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace odesyn {

TrainConfig default_train_config(ModelKind kind) {
  TrainConfig c;
  if (model_is_gan(kind)) {
    c.batch_size = 64;
    c.datasize = 1000;
    c.learning_rate = 5e-5;
    c.epochs = 30;
    c.iterations = 1000;
    // the GAN latent is driven by unit noise; the regression model only adds
    // small privacy noise to its seed state
    c.noise_scale = kind == ModelKind::ode_gan || kind == ModelKind::baseline_gan ? 1.0 : 0.1;
  } else {
    c.batch_size = 50;
    c.datasize = 100;
    c.learning_rate = 1e-4;
    c.epochs = 100;
    c.iterations = 1;
    c.noise_scale = 0.1;
  }
  return c;
}

void adam_step(Tensor& param, AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (!param.has_grad()) return;
  auto& value = param.mutable_value();
  auto& grad = param.mutable_grad();
  if (state.m.size() != value.size()) {
    state.m.assign(value.size(), 0.0);
    state.v.assign(value.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < value.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    grad[i] = 0.0;
  }
}

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)),
      states_(params_.size()),
      lr_(lr),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i)
    adam_step(params_[i], states_[i], lr_, beta1_, beta2_, eps_);
}

void add_gradient_noise(const std::vector<Tensor>& params, double sigma,
                        std::mt19937_64& rng) {
  if (sigma < 0.0) throw shape_error("add_gradient_noise: sigma must be >= 0");
  if (sigma == 0.0) return;
  std::normal_distribution<double> noise(0.0, sigma);
  for (const Tensor& p : params) {
    if (!p.has_grad()) continue;
    Tensor t = p;
    for (double& g : t.mutable_grad()) g += noise(rng);
  }
}

std::pair<std::vector<SignalWindow>, std::vector<SignalWindow>> split_dataset(
    const std::vector<SignalWindow>& windows, double ratio, std::uint64_t seed) {
  const int n = static_cast<int>(windows.size());
  if (n < 2) throw shape_error("split_dataset: need at least 2 windows");
  if (!(ratio > 0.0 && ratio < 1.0)) throw shape_error("split_dataset: ratio must be in (0,1)");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  int n_train = static_cast<int>(std::lround(ratio * n));
  n_train = std::clamp(n_train, 1, n - 1);
  std::pair<std::vector<SignalWindow>, std::vector<SignalWindow>> out;
  for (int i = 0; i < n; ++i) {
    const SignalWindow& w = windows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    (i < n_train ? out.first : out.second).push_back(w);
  }
  return out;
}

void write_regression_csv(const std::filesystem::path& path, const RegressionHistory& h) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < h.epoch_loss.size(); ++i)
    out << (i + 1) << "," << h.epoch_loss[i] << "\n";
}

void write_gan_csv(const std::filesystem::path& path, const GanHistory& h) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,iteration,g_loss,d_loss\n";
  for (const auto& r : h.rows)
    out << r.epoch << "," << r.iteration << "," << r.g_loss << "," << r.d_loss << "\n";
}

namespace {

std::vector<Tensor> param_tensors(const std::vector<std::pair<std::string, Tensor>>& named) {
  std::vector<Tensor> out;
  out.reserve(named.size());
  for (auto& [n, t] : named) out.push_back(t);
  return out;
}

void zero_all_grads(const std::vector<Tensor>& params) {
  for (const Tensor& p : params) {
    Tensor t = p;
    t.zero_grad();
  }
}

}  // namespace

RegressionHistory train_ode_ecg_generator(OdeEcgGenerator& model,
                                          const std::vector<SignalWindow>& train_windows,
                                          const TrainConfig& cfg) {
  if (train_windows.empty()) throw shape_error("train: no training windows");
  auto params = param_tensors(model.named_params());
  Adam adam(params, cfg.learning_rate);
  const std::vector<double> ts = window_times(train_windows.front());

  RegressionHistory history;
  history.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  std::vector<int> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 epoch_rng(mix_seed(cfg.seed, 0xe90c * static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), epoch_rng);
    double loss_acc = 0.0;
    int sample_count = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
      Tensor batch = make_batch(train_windows, idx);
      Tape tape;
      std::mt19937_64 noise_rng(mix_seed(cfg.seed, 0xb0b0 + 1000003ULL * static_cast<std::uint64_t>(epoch) + static_cast<std::uint64_t>(batch_index)));
      Tensor pred = model.teacher_forward(tape, batch, ts, noise_rng);
      Tensor loss = mse_loss(tape, pred, batch);
      const double loss_value = loss.scalar_value();
      if (!std::isfinite(loss_value))
        throw numeric_error("non-finite training loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
      zero_all_grads(params);
      tape.backward(loss, /*release_buffers=*/true);
      adam.step();
      loss_acc += loss_value * static_cast<double>(idx.size());
      sample_count += static_cast<int>(idx.size());
    }
    history.epoch_loss.push_back(loss_acc / static_cast<double>(sample_count));
    log_debug("epoch " + std::to_string(epoch) + " mse " +
              std::to_string(history.epoch_loss.back()));
  }
  return history;
}

GanTrainer::GanTrainer(ModelBundle& bundle, const TrainConfig& cfg)
    : bundle_(bundle),
      cfg_(cfg),
      gen_adam_(param_tensors(bundle.gen->named_params()), cfg.learning_rate),
      disc_adam_(bundle.disc ? param_tensors(bundle.disc->named_params()) : std::vector<Tensor>{},
                 cfg.learning_rate) {
  if (!bundle.disc) throw shape_error("GanTrainer: bundle has no discriminator");
}

namespace {

// Rotates the batch rows by one; pairs each candidate with a different real
// window for the pairwise (CDE) discriminator.
Tensor roll_rows(const Tensor& batch) {
  const int b = batch.rows(), n = batch.cols();
  std::vector<double> v(static_cast<std::size_t>(b) * n);
  for (int i = 0; i < b; ++i) {
    const int src = (i + 1) % b;
    for (int j = 0; j < n; ++j)
      v[static_cast<std::size_t>(i) * n + j] = batch.at(src, j);
  }
  return Tensor::leaf({b, n}, std::move(v));
}

}  // namespace

GanStepResult GanTrainer::step(const Tensor& real_batch, const std::vector<double>& ts,
                               std::uint64_t step_seed) {
  const int b = real_batch.rows();
  if (b != cfg_.batch_size)
    log_debug("gan step with batch " + std::to_string(b) + " != configured " +
              std::to_string(cfg_.batch_size));
  std::mt19937_64 rng(mix_seed(step_seed, 0x57e9));
  auto gen_params = gen_adam_.params();
  auto disc_params = disc_adam_.params();

  // generator forward once, recorded; its values serve the detached d-step
  std::vector<double> y0v(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) y0v[static_cast<std::size_t>(i)] = real_batch.at(i, 0);
  Tensor y0 = Tensor::leaf({b, 1}, std::move(y0v));
  Tape gen_tape;
  Tensor fake = bundle_.gen->sample(gen_tape, ts, y0, rng);
  Tensor fake_detached = detach(fake);
  Tensor reference = roll_rows(real_batch);

  // discriminator step: real -> 1, detached fake -> 0, gradient noise, Adam
  double d_loss_value;
  {
    Tape d_tape;
    Tensor d_real = bundle_.disc->score(d_tape, real_batch, reference, ts);
    Tensor d_fake = bundle_.disc->score(d_tape, fake_detached, reference, ts);
    Tensor d_loss = add(d_tape, bce_loss(d_tape, d_real, Tensor::full(d_real.shape(), 1.0)),
                        bce_loss(d_tape, d_fake, Tensor::zeros(d_fake.shape())));
    d_loss_value = d_loss.scalar_value();
    if (!std::isfinite(d_loss_value)) throw numeric_error("non-finite discriminator loss");
    zero_all_grads(gen_params);
    zero_all_grads(disc_params);
    d_tape.backward(d_loss, /*release_buffers=*/true);
    add_gradient_noise(disc_params, cfg_.sigma_g, rng);
    disc_adam_.step();
  }

  // generator step: non-saturating -log D(G(z))
  double g_loss_value;
  {
    zero_all_grads(gen_params);
    zero_all_grads(disc_params);
    Tensor probs = bundle_.disc->score(gen_tape, fake, reference, ts);
    Tensor g_loss = bce_loss(gen_tape, probs, Tensor::full(probs.shape(), 1.0));
    g_loss_value = g_loss.scalar_value();
    if (!std::isfinite(g_loss_value)) throw numeric_error("non-finite generator loss");
    gen_tape.backward(g_loss, /*release_buffers=*/true);
    gen_adam_.step();
  }
  return GanStepResult{g_loss_value, d_loss_value};
}

GanHistory GanTrainer::run(const std::vector<SignalWindow>& train_windows,
                           const std::optional<std::filesystem::path>& checkpoint_dir) {
  if (train_windows.empty()) throw shape_error("train: no training windows");
  const std::vector<double> ts = window_times(train_windows.front());
  GanHistory history;
  history.rows.reserve(static_cast<std::size_t>(cfg_.epochs) * static_cast<std::size_t>(cfg_.iterations));
  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    std::mt19937_64 batch_rng(mix_seed(cfg_.seed, 0xba7c * static_cast<std::uint64_t>(epoch)));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(train_windows.size()) - 1);
    for (int iter = 1; iter <= cfg_.iterations; ++iter) {
      std::vector<int> idx(static_cast<std::size_t>(cfg_.batch_size));
      for (int& i : idx) i = pick(batch_rng);
      Tensor batch = make_batch(train_windows, idx);
      GanStepResult r;
      try {
        r = step(batch, ts,
                 mix_seed(cfg_.seed, 1000003ULL * static_cast<std::uint64_t>(epoch) +
                                         static_cast<std::uint64_t>(iter)));
      } catch (const numeric_error& e) {
        throw numeric_error(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                            ", iteration " + std::to_string(iter));
      }
      history.rows.push_back({epoch, iter, r.g_loss, r.d_loss});
    }
    log_info("gan epoch " + std::to_string(epoch) + "/" + std::to_string(cfg_.epochs) +
             " g_loss " + std::to_string(history.rows.back().g_loss) + " d_loss " +
             std::to_string(history.rows.back().d_loss));
    if (checkpoint_dir) save_checkpoint(*checkpoint_dir / "checkpoint.json", bundle_);
  }
  return history;
}

}  // namespace odesyn
