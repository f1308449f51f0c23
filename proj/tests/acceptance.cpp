// Acceptance suite: one criterion per entry, each printed as a PASS/FAIL
// line with its runtime. Returns the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "odesyn/cli.hpp"
#include "odesyn/eval.hpp"
#include "odesyn/interpolation.hpp"
#include "odesyn/training.hpp"
#include "oracles.hpp"

using namespace odesyn;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string detail;
};

#define REQUIRE_OR_FAIL(cond, msg)                                  \
  do {                                                              \
    if (!(cond)) {                                                  \
      std::ostringstream os_;                                       \
      os_ << msg;                                                   \
      throw Failure{os_.str()};                                     \
    }                                                               \
  } while (0)

std::vector<double> grid(int n, double dt = 1.0 / 24.0) {
  std::vector<double> ts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ts[static_cast<std::size_t>(i)] = i * dt;
  return ts;
}

Tensor random_leaf(Shape shape, std::mt19937_64& rng, double scale = 1.0, bool rg = true) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (double& x : v) x = dist(rng);
  return Tensor::leaf(std::move(shape), std::move(v), rg);
}

// Checks >= n_params randomly selected parameter entries of `named` against
// central finite differences of `build` (rel err < 1e-4, h = 1e-5). Entries
// where the loss is locally non-smooth (h-refinement disagrees) are resampled;
// the analytic gradient there is a subgradient no difference quotient can
// certify.
void check_model_grads(const std::string& who,
                       const std::vector<std::pair<std::string, Tensor>>& named,
                       const std::function<Tensor(Tape&)>& build, std::mt19937_64& rng,
                       int n_params = 10) {
  Tape tape;
  Tensor loss = build(tape);
  for (auto& [n, p] : named) {
    Tensor t = p;
    t.zero_grad();
  }
  tape.backward(loss);
  auto eval = [&] {
    Tape t;
    return build(t).scalar_value();
  };
  int checked = 0, attempts = 0;
  while (checked < n_params && attempts < n_params * 20) {
    ++attempts;
    std::uniform_int_distribution<std::size_t> pick_tensor(0, named.size() - 1);
    auto& [name, p] = named[pick_tensor(rng)];
    std::uniform_int_distribution<int> pick(0, p.numel() - 1);
    const int idx = pick(rng);
    if (!oracle::finite_diff_stable(p, idx, eval)) continue;
    const double an = p.has_grad() ? p.grad()[static_cast<std::size_t>(idx)] : 0.0;
    const double fd = oracle::finite_diff(p, idx, eval);
    REQUIRE_OR_FAIL(oracle::grad_close(an, fd), who << " " << name << "[" << idx
                                                    << "]: analytic " << an << " vs fd " << fd);
    ++checked;
  }
  REQUIRE_OR_FAIL(checked >= n_params,
                  who << ": only " << checked << " smooth parameter entries found");
}

// --- criterion 1: gradient oracle ------------------------------------------

void criterion_gradients() {
  // primitives, composed so every one of them sits on the loss path
  for (int seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(4000 + static_cast<std::uint64_t>(seed));
    Tensor a = random_leaf({2, 3}, rng);
    Tensor b = random_leaf({2, 3}, rng);
    Tensor w = random_leaf({3, 2}, rng);
    Tensor bias = random_leaf({2}, rng);
    Tensor img = random_leaf({2, 2, 1, 6}, rng);
    Tensor ker = random_leaf({2, 2, 1, 3}, rng);
    Tensor kbias = random_leaf({2}, rng);
    Tensor proj = random_leaf({3, 4}, rng, 0.7);
    Tensor probs = random_leaf({4}, rng, 0.0);
    {
      std::uniform_real_distribution<double> u(0.1, 0.9);
      for (double& v : probs.mutable_value()) v = u(rng);
    }
    Tensor labels = Tensor::leaf({4}, {1, 0, 1, 1});
    Tensor sp = random_leaf({2, 7}, rng);
    const auto knots = grid(7, 0.3);

    auto build = [&](Tape& t) -> Tensor {
      Tensor lin = linear(t, a, w, bias);
      Tensor act = add(t, tanh(t, lin), sigmoid(t, lin));
      Tensor lr = leaky_relu(t, act, 0.2);
      Tensor ab = mul(t, sub(t, a, b), add_scaled(t, a, b, 0.5));
      Tensor conv = conv2d(t, img, ker, kbias, {1, 2}, {0, 1});
      Tensor pooled = maxpool2d(t, conv, {1, 2}, {1, 1});
      Tensor mb = minibatch_discrimination(t, ab, proj, 2, 2);
      Tensor m = spline_second_derivs(t, sp, knots);
      Tensor sd = spline_derivative_at(t, sp, m, knots, 0.47);
      Tensor rm = row_matvec(t, reshape(t, ab, {2, 3}), sd, 3, 1);
      Tensor cat = concat_cols(t, {reshape(t, pooled, {2, 4}), mb, affine(t, ab, -1.0, 1.0), rm});
      Tensor parts = concat_cols(t, {reshape(t, mean(t, cat), {1, 1}),
                                     reshape(t, sum(t, lr), {1, 1}),
                                     reshape(t, bce_loss(t, probs, labels), {1, 1})});
      return sum(t, parts);
    };
    std::vector<std::pair<std::string, Tensor>> named{
        {"a", a},   {"b", b},       {"w", w},       {"bias", bias}, {"img", img},
        {"ker", ker}, {"kbias", kbias}, {"proj", proj}, {"probs", probs}, {"spline", sp}};
    check_model_grads("primitives(seed " + std::to_string(seed) + ")", named, build, rng, 10);
  }

  // full models
  const int len = 24;
  const auto ts = grid(len);
  std::mt19937_64 rng(999);
  Tensor y0 = Tensor::leaf({2, 1}, {0.35, 0.75});
  Tensor real = random_leaf({2, len}, rng, 0.0, false);
  {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : real.mutable_value()) v = u(rng);
  }

  {
    SeqGenConfig cfg;
    cfg.hidden_dim = 6;
    cfg.noise_scale = 0.0;
    cfg.ode_steps = 1;
    OdeEcgGenerator gen(cfg, 51);
    auto build = [&](Tape& t) {
      std::mt19937_64 r(3);
      return sum(t, tanh(t, gen.teacher_forward(t, real, ts, r)));
    };
    check_model_grads("ode-ecg-generator", gen.named_params(), build, rng);

    OdeGenerator g2(cfg, 52);
    auto build2 = [&](Tape& t) {
      std::mt19937_64 r(4);
      return sum(t, tanh(t, g2.sample(t, ts, y0, r)));
    };
    check_model_grads("ode-generator", g2.named_params(), build2, rng);
  }
  {
    ConvDiscConfig cfg;
    cfg.seq_length = len;
    ConvDiscriminator disc(cfg, 53);
    auto build = [&](Tape& t) {
      Tensor probs = disc.score(t, real, real, ts);
      return bce_loss(t, probs, Tensor::full(probs.shape(), 1.0));
    };
    check_model_grads("conv-discriminator", disc.named_params(), build, rng);
  }
  {
    ConvNodeDiscConfig cfg;
    cfg.seq_length = len;
    ConvNodeDiscriminator disc(cfg, 54);
    auto build = [&](Tape& t) {
      Tensor probs = disc.score(t, real, real, ts);
      return bce_loss(t, probs, Tensor::full(probs.shape(), 1.0));
    };
    check_model_grads("conv-node-discriminator", disc.named_params(), build, rng);
  }
  {
    CdeDiscConfig cfg;
    cfg.seq_length = len;
    cfg.hidden_channels = 6;
    CdeDiscriminator disc(cfg, 55);
    Tensor cand = random_leaf({2, len}, rng, 0.0, false);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : cand.mutable_value()) v = u(rng);
    auto build = [&](Tape& t) {
      Tensor probs = disc.score(t, cand, real, ts);
      return bce_loss(t, probs, Tensor::full(probs.shape(), 1.0));
    };
    check_model_grads("cde-discriminator", disc.named_params(), build, rng);
  }
}

// --- criterion 2: solver convergence order ----------------------------------

void criterion_solver_order() {
  auto final_error = [](SolverMethod m, int n) {
    Tape tape;
    OdeFunc decay = [](Tape& t, double, const Tensor& y) { return affine(t, y, -1.0, 0.0); };
    auto traj = integrate(tape, decay, Tensor::scalar(1.0), 0.0, 1.0, SolverConfig::steps(n, m));
    return std::abs(traj.back().y.scalar_value() - std::exp(-1.0));
  };
  std::vector<double> ns{10, 20, 40, 80}, rk, eu;
  for (double n : ns) {
    rk.push_back(final_error(SolverMethod::rk4, static_cast<int>(n)));
    eu.push_back(final_error(SolverMethod::euler, static_cast<int>(n)));
  }
  const double rk_slope = -oracle::loglog_slope(ns, rk);
  const double eu_slope = -oracle::loglog_slope(ns, eu);
  REQUIRE_OR_FAIL(std::abs(rk_slope - 4.0) < 0.2, "rk4 slope " << rk_slope << " not 4.0+-0.2");
  REQUIRE_OR_FAIL(std::abs(eu_slope - 1.0) < 0.2, "euler slope " << eu_slope << " not 1.0+-0.2");
}

// --- criterion 3: spline and CDE correctness ---------------------------------

void criterion_spline_cde() {
  std::mt19937_64 rng(31415);
  const int n = 15, c = 2, d_h = 3;
  auto ts = grid(n, 0.2);
  std::vector<double> vals(static_cast<std::size_t>(n) * c);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : vals) v = dist(rng);
  CdePath path(ts, vals, c);

  for (int i = 0; i < n; ++i) {
    auto v = path.eval(ts[static_cast<std::size_t>(i)]);
    for (int ch = 0; ch < c; ++ch)
      REQUIRE_OR_FAIL(std::abs(v[static_cast<std::size_t>(ch)] -
                               vals[static_cast<std::size_t>(i) * c + ch]) < 1e-12,
                      "knot interpolation residual at knot " << i);
  }
  for (int ch = 0; ch < c; ++ch) {
    REQUIRE_OR_FAIL(std::abs(path.second_derivative(ts.front(), ch)) < 1e-9,
                    "natural boundary at start");
    REQUIRE_OR_FAIL(std::abs(path.second_derivative(ts.back(), ch)) < 1e-9,
                    "natural boundary at end");
  }
  // C1/C2 residuals from the left/right segment polynomials at each knot
  for (int ch = 0; ch < c; ++ch)
    for (int i = 1; i + 1 < n; ++i) {
      const double h0 = ts[static_cast<std::size_t>(i)] - ts[static_cast<std::size_t>(i - 1)];
      const double h1 = ts[static_cast<std::size_t>(i + 1)] - ts[static_cast<std::size_t>(i)];
      const double mi = path.second_derivative(ts[static_cast<std::size_t>(i)], ch);
      const double mim = path.second_derivative(ts[static_cast<std::size_t>(i - 1)], ch);
      const double mip = path.second_derivative(ts[static_cast<std::size_t>(i + 1)], ch);
      const double yv = vals[static_cast<std::size_t>(i) * c + ch];
      const double ym = vals[static_cast<std::size_t>(i - 1) * c + ch];
      const double yp = vals[static_cast<std::size_t>(i + 1) * c + ch];
      const double d_left = (yv - ym) / h0 + (2.0 * mi + mim) * h0 / 6.0;
      const double d_right = (yp - yv) / h1 - (2.0 * mi + mip) * h1 / 6.0;
      REQUIRE_OR_FAIL(std::abs(d_left - d_right) < 1e-9, "C1 residual at knot " << i);
    }

  // cde_integrate against the expanded-vector-field rk4 oracle
  Tensor field_w = random_leaf({d_h, d_h * c}, rng, 0.6);
  CdeFieldFunc field = [&](Tape& t, const Tensor& z) { return tanh(t, matmul(t, z, field_w)); };
  Tape tape;
  Tensor z0 = random_leaf({1, d_h}, rng, 1.0, false);
  Tensor via_cde = cde_integrate(tape, field, z0, path, SolverConfig::steps(3));
  OdeFunc expanded = [&](Tape& t, double time, const Tensor& z) {
    Tensor fz = field(t, z);
    auto d = path.derivative(time);
    const int ch = static_cast<int>(d.size());
    Tensor dx = Tensor::leaf({1, ch}, std::move(d));
    return row_matvec(t, fz, dx, d_h, ch);
  };
  Tensor z = z0;
  for (int i = 0; i + 1 < n; ++i)
    z = integrate(tape, expanded, z, ts[static_cast<std::size_t>(i)],
                  ts[static_cast<std::size_t>(i + 1)], SolverConfig::steps(3))
            .back()
            .y;
  for (int k = 0; k < d_h; ++k)
    REQUIRE_OR_FAIL(std::abs(via_cde.at(0, k) - z.at(0, k)) < 1e-9,
                    "cde vs expanded-field oracle, coordinate " << k);
}

// --- criterion 4: ODE-RNN smoke training --------------------------------------

void criterion_ode_rnn_smoke() {
  TrainConfig cfg = default_train_config(ModelKind::ode_rnn);
  // seq 240, hidden 50, lr 1e-4, 100 epochs, datasize 100 as stated; the
  // batch size and solver sub-steps are unpinned and chosen for one core
  cfg.batch_size = 5;
  cfg.ode_steps = 1;
  cfg.seed = 42;
  auto windows = synth_sine(cfg.datasize, cfg.seq_length, {0.1, 0.3}, {0.5, 1.0},
                            mix_seed(cfg.seed, 0xda7a));
  auto [train_set, test_set] = split_dataset(windows, cfg.split_ratio, cfg.seed);

  SeqGenConfig gcfg;
  gcfg.hidden_dim = cfg.hidden_dim;
  gcfg.noise_scale = cfg.noise_scale;
  gcfg.ode_steps = cfg.ode_steps;
  OdeEcgGenerator gen(gcfg, mix_seed(cfg.seed, 0xa11ce));
  RegressionHistory hist = train_ode_ecg_generator(gen, train_set, cfg);

  REQUIRE_OR_FAIL(hist.epoch_loss.size() == 100, "history length " << hist.epoch_loss.size());
  const double first = hist.epoch_loss.front();
  const double at20 = hist.epoch_loss[19];
  const double last = hist.epoch_loss.back();
  for (double l : hist.epoch_loss) REQUIRE_OR_FAIL(std::isfinite(l), "non-finite loss");
  REQUIRE_OR_FAIL(last < 0.2 * first,
                  "final mse " << last << " not below 20% of epoch-1 mse " << first);
  REQUIRE_OR_FAIL(at20 < 2.0 * last,
                  "epoch-20 mse " << at20 << " not below 2x final mse " << last);
  std::printf("    criterion 4 detail: epoch1 %.5f epoch20 %.5f final %.5f\n", first, at20,
              last);
}

// --- criterion 5: GAN smoke training -------------------------------------------

void criterion_gan_smoke(ModelKind kind) {
  TrainConfig cfg = default_train_config(kind);
  cfg.epochs = 3;
  cfg.iterations = 50;
  cfg.datasize = 200;  // unpinned; 64-window batches resample the train split
  cfg.ode_steps = 1;
  cfg.seed = 42;
  // the CDE discriminator's head is narrow (one weight per hidden channel),
  // so 150 smoke iterations need a larger step than the full-scale default
  // to move the adversarial pair at all
  if (kind == ModelKind::ode_gan2_cde) cfg.learning_rate = 2e-4;
  auto windows = synth_sine(cfg.datasize, cfg.seq_length, {0.1, 0.3}, {0.5, 1.0},
                            mix_seed(cfg.seed, 0xda7a));
  auto [train_set, test_set] = split_dataset(windows, cfg.split_ratio, cfg.seed);

  ModelHyper hyper;
  hyper.seq_length = cfg.seq_length;
  hyper.hidden_dim = cfg.hidden_dim;
  hyper.ode_steps = cfg.ode_steps;
  hyper.noise_scale = cfg.noise_scale;
  ModelBundle bundle = make_models(kind, hyper, cfg.seed);
  GanTrainer trainer(bundle, cfg);
  GanHistory hist = trainer.run(train_set, std::nullopt);

  REQUIRE_OR_FAIL(hist.rows.size() == 150, "history length " << hist.rows.size());
  for (const auto& r : hist.rows) {
    REQUIRE_OR_FAIL(std::isfinite(r.g_loss) && std::isfinite(r.d_loss),
                    "non-finite loss at epoch " << r.epoch << " iter " << r.iteration);
  }

  // (b) generated windows must sit closer to the real distribution than
  // i.i.d. Gaussian noise windows, both under median-heuristic bandwidths
  const int n_gen = 64;
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x9e4));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> y0v(static_cast<std::size_t>(n_gen));
  for (double& v : y0v) v = u01(rng);
  Tape tape;
  tape.set_recording(false);
  const auto ts = window_times(test_set.front());
  Tensor samples = bundle.gen->sample(tape, ts, Tensor::leaf({n_gen, 1}, std::move(y0v)), rng);
  std::vector<SignalWindow> generated(static_cast<std::size_t>(n_gen));
  for (int i = 0; i < n_gen; ++i) {
    generated[static_cast<std::size_t>(i)].values.assign(
        samples.value().begin() + static_cast<std::ptrdiff_t>(i) * cfg.seq_length,
        samples.value().begin() + static_cast<std::ptrdiff_t>(i + 1) * cfg.seq_length);
    generated[static_cast<std::size_t>(i)].dt = test_set.front().dt;
  }
  std::vector<SignalWindow> noise_windows(static_cast<std::size_t>(n_gen));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& w : noise_windows) {
    w.dt = test_set.front().dt;
    w.values.resize(static_cast<std::size_t>(cfg.seq_length));
    for (double& v : w.values) v = gauss(rng);
  }
  const double bw_gen = median_heuristic_bandwidth(generated, test_set);
  const double bw_noise = median_heuristic_bandwidth(noise_windows, test_set);
  const double mmd_gen = mmd_rbf(generated, test_set, bw_gen);
  const double mmd_noise = mmd_rbf(noise_windows, test_set, bw_noise);
  std::printf("    criterion 5 detail (%s): mmd generated %.4f vs noise %.4f\n",
              model_kind_name(kind).c_str(), mmd_gen, mmd_noise);
  REQUIRE_OR_FAIL(mmd_gen < mmd_noise,
                  "MMD(generated, real) " << mmd_gen << " !< MMD(noise, real) " << mmd_noise);
}

// --- criterion 6: initial-loss sanity -------------------------------------------

void criterion_initial_losses() {
  TrainConfig cfg = default_train_config(ModelKind::ode_gan);
  cfg.ode_steps = 1;
  cfg.seed = 7;
  ModelHyper hyper;
  hyper.seq_length = cfg.seq_length;
  hyper.hidden_dim = cfg.hidden_dim;
  hyper.ode_steps = cfg.ode_steps;
  hyper.noise_scale = cfg.noise_scale;
  ModelBundle bundle = make_models(ModelKind::ode_gan, hyper, cfg.seed);
  GanTrainer trainer(bundle, cfg);
  auto windows = synth_sine(cfg.batch_size, cfg.seq_length, {0.1, 0.3}, {0.5, 1.0}, 99);
  std::vector<int> idx(static_cast<std::size_t>(cfg.batch_size));
  for (int i = 0; i < cfg.batch_size; ++i) idx[static_cast<std::size_t>(i)] = i;
  auto r = trainer.step(make_batch(windows, idx), window_times(windows[0]), 1);
  std::printf("    criterion 6 detail: d_loss %.4f g_loss %.4f\n", r.d_loss, r.g_loss);
  REQUIRE_OR_FAIL(std::abs(r.d_loss - 2.0 * std::log(2.0)) < 0.3,
                  "untrained d_loss " << r.d_loss << " outside 1.386+-0.3");
  REQUIRE_OR_FAIL(std::abs(r.g_loss - std::log(2.0)) < 0.15,
                  "untrained g_loss " << r.g_loss << " outside 0.693+-0.15");
}

// --- criterion 7: CLI determinism ------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Failure{"missing file " + p.string()};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "odesyn_acceptance_det";
  fs::remove_all(base);
  auto run = [&](const std::vector<std::string>& args) {
    REQUIRE_OR_FAIL(cli_main(args) == 0, "train command failed");
  };
  for (const char* model : {"ode-rnn", "ode-gan2-cde"}) {
    const fs::path o1 = base / (std::string(model) + "_1");
    const fs::path o2 = base / (std::string(model) + "_2");
    const fs::path o3 = base / (std::string(model) + "_replay");
    std::vector<std::string> args{"train",   "--model",      model,      "--data",
                                  "sine",    "--datasize",   "10",       "--seq-length",
                                  "32",      "--hidden-dim", "6",        "--epochs",
                                  "2",       "--iterations", "3",        "--batch-size",
                                  "4",       "--ode-steps",  "1",        "--seed",
                                  "1234"};
    auto with_out = [&](const fs::path& o) {
      auto v = args;
      v.push_back("--out");
      v.push_back(o.string());
      return v;
    };
    run(with_out(o1));
    run(with_out(o2));
    REQUIRE_OR_FAIL(slurp(o1 / "loss.csv") == slurp(o2 / "loss.csv"),
                    model << ": rerun loss.csv differs");
    REQUIRE_OR_FAIL(slurp(o1 / "checkpoint.json") == slurp(o2 / "checkpoint.json"),
                    model << ": rerun checkpoint differs");
    // replay purely from the resolved config file
    run({"train", "--config", (o1 / "resolved.config").string(), "--out", o3.string()});
    REQUIRE_OR_FAIL(slurp(o1 / "loss.csv") == slurp(o3 / "loss.csv"),
                    model << ": config replay loss.csv differs");
  }
}

// --- criterion 8: data oracles ----------------------------------------------------

void criterion_data_oracles() {
  EcgRecord rec = synth_dynamical_ecg(10.0, 60.0, 0.0, 11);
  const double fs = rec.sampling_rate;
  double peak = 0.0;
  for (double v : rec.channels[0]) peak = std::max(peak, v);
  auto peaks = oracle::find_peaks(rec.channels[0], 0.5 * peak, static_cast<int>(0.4 * fs));
  REQUIRE_OR_FAIL(peaks.size() >= 5, "too few peaks: " << peaks.size());
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    const double gap = (peaks[i] - peaks[i - 1]) / fs;
    REQUIRE_OR_FAIL(std::abs(gap - 1.0) < 0.05, "inter-peak interval " << gap << " s");
  }

  // the (x, y) rotation is autonomous; its radius must hug the unit cycle
  const double omega = 2.0 * M_PI;
  std::vector<double> state{-1.0, 0.0};
  PlainOdeFunc rot = [&](double, std::span<const double> s, std::span<double> d) {
    const double alpha = 1.0 - std::hypot(s[0], s[1]);
    d[0] = alpha * s[0] - omega * s[1];
    d[1] = alpha * s[1] + omega * s[0];
  };
  for (int i = 0; i < static_cast<int>(10 * fs); ++i) {
    rk4_step_plain(rot, state, i / fs, 1.0 / fs);
    const double r = std::hypot(state[0], state[1]);
    REQUIRE_OR_FAIL(std::abs(r - 1.0) < 0.05, "limit-cycle radius " << r << " at step " << i);
  }

  // windowing counts across a 30-case grid
  EcgRecord wrec;
  wrec.sampling_rate = 100.0;
  wrec.channels.assign(2, {});
  int cases = 0;
  for (int n : {50, 100, 241, 480, 999}) {
    wrec.channels[0].assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      wrec.channels[0][static_cast<std::size_t>(i)] = std::sin(0.05 * i);
    wrec.channels[1] = wrec.channels[0];
    for (int seq : {10, 50, 240}) {
      for (int stride : {1, 7}) {
        const std::size_t got = window(wrec, 0, seq, stride).size();
        const std::size_t expect = n < seq ? 0 : static_cast<std::size_t>((n - seq) / stride + 1);
        REQUIRE_OR_FAIL(got == expect, "windowing N=" << n << " seq=" << seq << " stride="
                                                      << stride << ": " << got << " != "
                                                      << expect);
        ++cases;
      }
    }
  }
  REQUIRE_OR_FAIL(cases == 30, "grid size " << cases);
}

// --- criterion 9: config fidelity ---------------------------------------------------

void criterion_config_fidelity() {
  TrainConfig ode = default_train_config(ModelKind::ode_rnn);
  REQUIRE_OR_FAIL(ode.batch_size == 50 && ode.datasize == 100 && ode.seq_length == 240 &&
                      ode.hidden_dim == 50 && ode.learning_rate == 1e-4 && ode.epochs == 100,
                  "ode-rnn defaults do not match the experiment table");
  for (ModelKind kind : {ModelKind::ode_gan, ModelKind::ode_gan2_convnode,
                         ModelKind::ode_gan2_cde, ModelKind::baseline_gan}) {
    TrainConfig gan = default_train_config(kind);
    REQUIRE_OR_FAIL(gan.batch_size == 64 && gan.datasize == 1000 && gan.seq_length == 240 &&
                        gan.hidden_dim == 50 && gan.learning_rate == 5e-5 && gan.epochs == 30 &&
                        gan.iterations == 1000,
                    model_kind_name(kind) << " defaults do not match the experiment table");
  }

  // the CLI's resolved config echoes the same values
  const fs::path base = fs::temp_directory_path() / "odesyn_acceptance_cfg";
  fs::remove_all(base);
  auto has = [](const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
  };
  REQUIRE_OR_FAIL(cli_main({"train", "--model", "ode-rnn", "--dry-run", "--out",
                            (base / "ode").string()}) == 0,
                  "dry-run failed");
  std::string cfg = slurp(base / "ode" / "resolved.config");
  REQUIRE_OR_FAIL(has(cfg, "batch_size=50") && has(cfg, "datasize=100") &&
                      has(cfg, "seq_length=240") && has(cfg, "hidden_dim=50") &&
                      has(cfg, "learning_rate=0.0001") && has(cfg, "epochs=100"),
                  "ode-rnn resolved config missing a table value");
  REQUIRE_OR_FAIL(cli_main({"train", "--model", "ode-gan", "--dry-run", "--out",
                            (base / "gan").string()}) == 0,
                  "dry-run failed");
  std::string gcfg = slurp(base / "gan" / "resolved.config");
  REQUIRE_OR_FAIL(has(gcfg, "batch_size=64") && has(gcfg, "datasize=1000") &&
                      has(gcfg, "seq_length=240") && has(gcfg, "hidden_dim=50") &&
                      has(gcfg, "learning_rate=5.0000000000000002e-05") &&
                      has(gcfg, "epochs=30") && has(gcfg, "iterations=1000"),
                  "ode-gan resolved config missing a table value");
}

struct Criterion {
  int id;  // criterion number from the acceptance list
  std::string label;
  double budget_s;
  std::function<void()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria{
      {1, "gradient oracle: primitives and all five models vs finite differences", 120,
       criterion_gradients},
      {2, "solver convergence order: rk4 4.0+-0.2, euler 1.0+-0.2", 5, criterion_solver_order},
      {3, "spline interpolation/continuity and CDE oracle equivalence", 10,
       criterion_spline_cde},
      {4, "ODE-RNN smoke training: 5x loss drop, stable by epoch 20", 600,
       criterion_ode_rnn_smoke},
      {5, "GAN smoke training (conv discriminator): finite losses, MMD beats noise", 900,
       [] { criterion_gan_smoke(ModelKind::ode_gan); }},
      {5, "GAN smoke training (conv+NODE discriminator): finite losses, MMD beats noise", 900,
       [] { criterion_gan_smoke(ModelKind::ode_gan2_convnode); }},
      {5, "GAN smoke training (CDE discriminator): finite losses, MMD beats noise", 900,
       [] { criterion_gan_smoke(ModelKind::ode_gan2_cde); }},
      {6, "initial-loss sanity: d 1.386+-0.3, g 0.693+-0.15", 120, criterion_initial_losses},
      {7, "determinism: train reruns and config replays are bit-exact", 300,
       criterion_determinism},
      {8, "data oracles: ECG peaks/radius, windowing count grid", 60, criterion_data_oracles},
      {9, "config fidelity: experiment-table defaults", 30, criterion_config_fidelity},
  };

  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (auto& c : criteria) {
    const int display_id = c.id;
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), display_id) == wanted.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      c.run();
    } catch (const Failure& f) {
      ok = false;
      detail = f.detail;
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (ok && secs > c.budget_s) {
      ok = false;
      detail = "runtime " + std::to_string(secs) + " s exceeds budget " +
               std::to_string(c.budget_s) + " s";
    }
    std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", ok ? "PASS" : "FAIL", display_id,
                c.label.c_str(), secs, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    failures += !ok;
  }
  return failures;
}
