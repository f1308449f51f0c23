#include "odesyn/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "odesyn/eval.hpp"
#include "odesyn/training.hpp"

namespace odesyn {

namespace {

// Everything a run needs to replay bit-exactly. Serialized as key=value
// lines; defaults come from the model family, then the config file, then
// command-line flags, in that precedence order.
struct RunConfig {
  std::string model = "ode-rnn";
  std::string data = "sine";
  std::string out = "run";
  TrainConfig train;
  std::string cell = "gru";
  double sine_freq_min = 0.1, sine_freq_max = 0.3;
  double sine_amp_min = 0.5, sine_amp_max = 1.0;
  double sine_dt = 1.0 / 24.0;
  double ecg_bpm = 60.0, ecg_noise = 0.02, ecg_rate = 240.0;
  int stride = 0;  // 0 means seq_length (non-overlapping windows)
  int csv_channel = 0;
  double csv_rate = 360.0;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::pair<std::string, std::string>> config_key_values(const RunConfig& c) {
  return {{"model", c.model},
          {"data", c.data},
          {"out", c.out},
          {"seed", std::to_string(c.train.seed)},
          {"seq_length", std::to_string(c.train.seq_length)},
          {"batch_size", std::to_string(c.train.batch_size)},
          {"datasize", std::to_string(c.train.datasize)},
          {"hidden_dim", std::to_string(c.train.hidden_dim)},
          {"learning_rate", fmt_double(c.train.learning_rate)},
          {"epochs", std::to_string(c.train.epochs)},
          {"iterations", std::to_string(c.train.iterations)},
          {"sigma_g", fmt_double(c.train.sigma_g)},
          {"split_ratio", fmt_double(c.train.split_ratio)},
          {"ode_steps", std::to_string(c.train.ode_steps)},
          {"noise_scale", fmt_double(c.train.noise_scale)},
          {"cell", c.cell},
          {"sine_freq_min", fmt_double(c.sine_freq_min)},
          {"sine_freq_max", fmt_double(c.sine_freq_max)},
          {"sine_amp_min", fmt_double(c.sine_amp_min)},
          {"sine_amp_max", fmt_double(c.sine_amp_max)},
          {"sine_dt", fmt_double(c.sine_dt)},
          {"ecg_bpm", fmt_double(c.ecg_bpm)},
          {"ecg_noise", fmt_double(c.ecg_noise)},
          {"ecg_rate", fmt_double(c.ecg_rate)},
          {"stride", std::to_string(c.stride)},
          {"csv_channel", std::to_string(c.csv_channel)},
          {"csv_rate", fmt_double(c.csv_rate)}};
}

void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "model") c.model = value;
    else if (key == "data") c.data = value;
    else if (key == "out") c.out = value;
    else if (key == "seed") c.train.seed = std::stoull(value);
    else if (key == "seq_length") c.train.seq_length = std::stoi(value);
    else if (key == "batch_size") c.train.batch_size = std::stoi(value);
    else if (key == "datasize") c.train.datasize = std::stoi(value);
    else if (key == "hidden_dim") c.train.hidden_dim = std::stoi(value);
    else if (key == "learning_rate") c.train.learning_rate = std::stod(value);
    else if (key == "epochs") c.train.epochs = std::stoi(value);
    else if (key == "iterations") c.train.iterations = std::stoi(value);
    else if (key == "sigma_g") c.train.sigma_g = std::stod(value);
    else if (key == "split_ratio") c.train.split_ratio = std::stod(value);
    else if (key == "ode_steps") c.train.ode_steps = std::stoi(value);
    else if (key == "noise_scale") c.train.noise_scale = std::stod(value);
    else if (key == "cell") c.cell = value;
    else if (key == "sine_freq_min") c.sine_freq_min = std::stod(value);
    else if (key == "sine_freq_max") c.sine_freq_max = std::stod(value);
    else if (key == "sine_amp_min") c.sine_amp_min = std::stod(value);
    else if (key == "sine_amp_max") c.sine_amp_max = std::stod(value);
    else if (key == "sine_dt") c.sine_dt = std::stod(value);
    else if (key == "ecg_bpm") c.ecg_bpm = std::stod(value);
    else if (key == "ecg_noise") c.ecg_noise = std::stod(value);
    else if (key == "ecg_rate") c.ecg_rate = std::stod(value);
    else if (key == "stride") c.stride = std::stoi(value);
    else if (key == "csv_channel") c.csv_channel = std::stoi(value);
    else if (key == "csv_rate") c.csv_rate = std::stod(value);
    else throw io_error("unknown config key '" + key + "'");
  } catch (const io_error&) {
    throw;
  } catch (const std::exception&) {
    throw io_error("bad value '" + value + "' for config key '" + key + "'");
  }
}

void load_config_file(RunConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io_error(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    apply_key(c, line.substr(0, eq), line.substr(eq + 1));
  }
}

void write_config_file(const RunConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  for (const auto& [k, v] : config_key_values(c)) out << k << "=" << v << "\n";
}

int effective_stride(const RunConfig& c) {
  return c.stride > 0 ? c.stride : c.train.seq_length;
}

std::vector<SignalWindow> resolve_dataset(const RunConfig& c) {
  if (c.data == "sine") {
    return synth_sine(c.train.datasize, c.train.seq_length, {c.sine_freq_min, c.sine_freq_max},
                      {c.sine_amp_min, c.sine_amp_max}, mix_seed(c.train.seed, 0xda7a),
                      c.sine_dt);
  }
  if (c.data == "dyn-ecg") {
    const int stride = effective_stride(c);
    const long samples = static_cast<long>(c.train.seq_length) +
                         static_cast<long>(c.train.datasize - 1) * stride + 1;
    const double duration = static_cast<double>(samples) / c.ecg_rate;
    EcgRecord rec = synth_dynamical_ecg(duration, c.ecg_bpm, c.ecg_noise,
                                        mix_seed(c.train.seed, 0xecb), c.ecg_rate);
    auto windows = window(rec, 0, c.train.seq_length, stride);
    if (static_cast<int>(windows.size()) > c.train.datasize)
      windows.resize(static_cast<std::size_t>(c.train.datasize));
    return windows;
  }
  const std::filesystem::path path(c.data);
  if (std::filesystem::is_directory(path)) return load_dataset(path);
  EcgRecord rec = load_ecg_csv(path, c.csv_rate);
  return window(rec, c.csv_channel, c.train.seq_length, effective_stride(c));
}

ModelHyper hyper_from(const RunConfig& c) {
  ModelHyper h;
  h.seq_length = c.train.seq_length;
  h.hidden_dim = c.train.hidden_dim;
  h.ode_steps = c.train.ode_steps;
  h.noise_scale = c.train.noise_scale;
  h.cell = cell_kind_from_name(c.cell);
  return h;
}

// Holders for flags so the file/flag precedence can be applied after parsing.
struct TrainFlags {
  std::optional<std::string> model, data, out, cell, config;
  std::optional<std::uint64_t> seed;
  std::optional<int> seq_length, batch_size, datasize, hidden_dim, epochs, iterations,
      ode_steps, stride, csv_channel;
  std::optional<double> lr, sigma_g, split_ratio, noise_scale, sine_freq_min, sine_freq_max,
      sine_amp_min, sine_amp_max, sine_dt, ecg_bpm, ecg_noise, ecg_rate, csv_rate;
  bool dry_run = false;
};

void add_train_options(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--model", f.model, "ode-rnn | ode-gan | ode-gan2-convnode | ode-gan2-cde | baseline-gan");
  cmd->add_option("--data", f.data, "sine | dyn-ecg | CSV file | dataset directory");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--config", f.config, "key=value config file (flags override it)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--seq-length", f.seq_length, "window length");
  cmd->add_option("--batch-size", f.batch_size, "training batch size");
  cmd->add_option("--datasize", f.datasize, "number of windows to synthesize");
  cmd->add_option("--hidden-dim", f.hidden_dim, "hidden state width");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--iterations", f.iterations, "GAN iterations per epoch");
  cmd->add_option("--sigma-g", f.sigma_g, "discriminator gradient-noise scale");
  cmd->add_option("--split-ratio", f.split_ratio, "train fraction of the dataset");
  cmd->add_option("--ode-steps", f.ode_steps, "solver steps between observations");
  cmd->add_option("--noise-scale", f.noise_scale, "generator state-noise scale");
  cmd->add_option("--cell", f.cell, "gru | lstm");
  cmd->add_option("--stride", f.stride, "window stride (default: seq-length)");
  cmd->add_option("--csv-channel", f.csv_channel, "channel of a CSV record");
  cmd->add_option("--csv-rate", f.csv_rate, "sampling rate for CSVs without a time column");
  cmd->add_option("--sine-freq-min", f.sine_freq_min, "sine frequency range low (Hz)");
  cmd->add_option("--sine-freq-max", f.sine_freq_max, "sine frequency range high (Hz)");
  cmd->add_option("--sine-amp-min", f.sine_amp_min, "sine amplitude range low");
  cmd->add_option("--sine-amp-max", f.sine_amp_max, "sine amplitude range high");
  cmd->add_option("--sine-dt", f.sine_dt, "sine sample spacing in seconds");
  cmd->add_option("--ecg-bpm", f.ecg_bpm, "synthetic ECG heart rate");
  cmd->add_option("--ecg-noise", f.ecg_noise, "synthetic ECG noise scale");
  cmd->add_option("--ecg-rate", f.ecg_rate, "synthetic ECG sampling rate (Hz)");
}

RunConfig resolve_run_config(const TrainFlags& f) {
  // the model kind decides the defaults, so settle it first
  std::string model = f.model.value_or("");
  if (model.empty() && f.config) {
    RunConfig probe;
    load_config_file(probe, *f.config);
    model = probe.model;
  }
  if (model.empty()) model = "ode-rnn";
  const ModelKind kind = model_kind_from_name(model);

  RunConfig c;
  c.model = model;
  c.train = default_train_config(kind);
  if (f.config) load_config_file(c, *f.config);
  c.model = model;

  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(c.data, f.data);
  set(c.out, f.out);
  set(c.train.seed, f.seed);
  set(c.train.seq_length, f.seq_length);
  set(c.train.batch_size, f.batch_size);
  set(c.train.datasize, f.datasize);
  set(c.train.hidden_dim, f.hidden_dim);
  set(c.train.learning_rate, f.lr);
  set(c.train.epochs, f.epochs);
  set(c.train.iterations, f.iterations);
  set(c.train.sigma_g, f.sigma_g);
  set(c.train.split_ratio, f.split_ratio);
  set(c.train.ode_steps, f.ode_steps);
  set(c.train.noise_scale, f.noise_scale);
  set(c.cell, f.cell);
  set(c.stride, f.stride);
  set(c.csv_channel, f.csv_channel);
  set(c.csv_rate, f.csv_rate);
  set(c.sine_freq_min, f.sine_freq_min);
  set(c.sine_freq_max, f.sine_freq_max);
  set(c.sine_amp_min, f.sine_amp_min);
  set(c.sine_amp_max, f.sine_amp_max);
  set(c.sine_dt, f.sine_dt);
  set(c.ecg_bpm, f.ecg_bpm);
  set(c.ecg_noise, f.ecg_noise);
  set(c.ecg_rate, f.ecg_rate);
  c.train.cell = cell_kind_from_name(c.cell);
  return c;
}

int run_train(const TrainFlags& f) {
  RunConfig cfg = resolve_run_config(f);
  const ModelKind kind = model_kind_from_name(cfg.model);
  const std::filesystem::path out(cfg.out);
  std::filesystem::create_directories(out);
  write_config_file(cfg, out / "resolved.config");
  if (f.dry_run) {
    std::cout << "resolved config written to " << (out / "resolved.config").string() << "\n";
    return 0;
  }

  auto windows = resolve_dataset(cfg);
  if (windows.size() < 2) throw io_error("dataset resolved to fewer than 2 windows");
  auto [train_set, test_set] = split_dataset(windows, cfg.train.split_ratio, cfg.train.seed);
  log_info("dataset: " + std::to_string(train_set.size()) + " train / " +
           std::to_string(test_set.size()) + " test windows");

  ModelBundle bundle = make_models(kind, hyper_from(cfg), cfg.train.seed);
  nlohmann::json meta = {{"dt", train_set.front().dt},
                         {"seq_length", cfg.train.seq_length},
                         {"model", cfg.model}};

  if (kind == ModelKind::ode_rnn) {
    auto* gen = dynamic_cast<OdeEcgGenerator*>(bundle.gen.get());
    RegressionHistory hist = train_ode_ecg_generator(*gen, train_set, cfg.train);
    write_regression_csv(out / "loss.csv", hist);
    save_checkpoint(out / "checkpoint.json", bundle, meta);
    std::cout << "trained " << cfg.model << " for " << cfg.train.epochs << " epochs; final mse "
              << hist.epoch_loss.back() << "\n";
  } else {
    GanTrainer trainer(bundle, cfg.train);
    GanHistory hist = trainer.run(train_set, out);
    write_gan_csv(out / "loss.csv", hist);
    save_checkpoint(out / "checkpoint.json", bundle, meta);
    std::cout << "trained " << cfg.model << " for " << cfg.train.epochs << "x"
              << cfg.train.iterations << " steps; final g_loss " << hist.rows.back().g_loss
              << " d_loss " << hist.rows.back().d_loss << "\n";
  }
  std::cout << "outputs in " << out.string() << "\n";
  return 0;
}

int run_make_data(const std::string& kind, int count, int seq_length, std::uint64_t seed,
                  const std::string& out, const TrainFlags& f) {
  if (count < 1) throw io_error("make-data: --count must be >= 1");
  RunConfig cfg = resolve_run_config(f);
  cfg.train.datasize = count;
  cfg.train.seq_length = seq_length;
  cfg.train.seed = seed;
  cfg.data = kind;
  if (kind != "sine" && kind != "dyn-ecg")
    throw io_error("make-data: --kind must be sine or dyn-ecg");
  auto windows = resolve_dataset(cfg);
  write_dataset(out, windows, seed, kind);
  std::cout << "wrote " << windows.size() << " windows to " << out << "\n";
  return 0;
}

int run_generate(const std::string& checkpoint, int count, std::uint64_t seed,
                 const std::string& out, std::optional<int> seq_length,
                 std::optional<double> dt_opt, const std::optional<std::string>& reference) {
  nlohmann::json meta;
  ModelBundle bundle = load_checkpoint(checkpoint, &meta);
  const int length = seq_length.value_or(meta.value("seq_length", 240));
  const double dt = dt_opt.value_or(meta.value("dt", 1.0 / 24.0));
  if (count < 1) throw io_error("generate: --count must be >= 1");

  std::vector<double> ts(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) ts[static_cast<std::size_t>(i)] = i * dt;

  std::mt19937_64 rng(mix_seed(seed, 0x9e4));
  std::uniform_real_distribution<double> y0_dist(0.0, 1.0);
  std::vector<double> y0v(static_cast<std::size_t>(count));
  for (double& v : y0v) v = y0_dist(rng);
  Tensor y0 = Tensor::leaf({count, 1}, std::move(y0v));

  Tape tape;
  tape.set_recording(false);
  Tensor samples = bundle.gen->sample(tape, ts, y0, rng);

  std::vector<SignalWindow> windows(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    windows[static_cast<std::size_t>(i)].values.assign(
        samples.value().begin() + static_cast<std::ptrdiff_t>(i) * length,
        samples.value().begin() + static_cast<std::ptrdiff_t>(i + 1) * length);
    windows[static_cast<std::size_t>(i)].dt = dt;
  }
  write_dataset(out, windows, seed, "generated");
  if (reference) {
    std::vector<SignalWindow> ref = load_dataset(*reference);
    if (!ref.empty())
      write_svg_lines(std::filesystem::path(out) / "overlay.svg",
                      {{"real", ref.front().values}, {"generated", windows.front().values}});
  }
  std::cout << "wrote " << count << " generated windows to " << out << "\n";
  return 0;
}

int run_evaluate(const std::string& real_dir, const std::string& gen_dir,
                 const std::string& out) {
  std::vector<SignalWindow> real = load_dataset(real_dir);
  std::vector<SignalWindow> gen = load_dataset(gen_dir);
  if (real.empty() || gen.empty()) throw io_error("evaluate: empty dataset");
  MetricReport report;
  report.bandwidth = median_heuristic_bandwidth(gen, real);
  report.mmd_rbf = mmd_rbf(gen, real, report.bandwidth);
  report.rmse_to_nearest = rmse_to_nearest(gen, real);
  export_report(out, report, nullptr, nullptr, gen, &real);
  std::cout << "mmd_rbf=" << report.mmd_rbf << " rmse_to_nearest=" << report.rmse_to_nearest
            << " bandwidth=" << report.bandwidth << "\n";
  std::cout << "report in " << out << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Neural-ODE generative models for continuous signals (sine, ECG)"};
  app.require_subcommand(1);

  // make-data
  auto* make_cmd = app.add_subcommand("make-data", "synthesize a dataset directory");
  std::string md_kind = "sine", md_out = "dataset";
  int md_count = 100, md_seq = 240;
  std::uint64_t md_seed = 42;
  TrainFlags md_flags;
  make_cmd->add_option("--kind", md_kind, "sine | dyn-ecg");
  make_cmd->add_option("--count", md_count, "number of windows");
  make_cmd->add_option("--seq-length", md_seq, "window length");
  make_cmd->add_option("--seed", md_seed, "seed");
  make_cmd->add_option("--out", md_out, "output directory");
  make_cmd->add_option("--stride", md_flags.stride, "window stride");
  make_cmd->add_option("--sine-freq-min", md_flags.sine_freq_min, "sine frequency low (Hz)");
  make_cmd->add_option("--sine-freq-max", md_flags.sine_freq_max, "sine frequency high (Hz)");
  make_cmd->add_option("--sine-amp-min", md_flags.sine_amp_min, "sine amplitude low");
  make_cmd->add_option("--sine-amp-max", md_flags.sine_amp_max, "sine amplitude high");
  make_cmd->add_option("--sine-dt", md_flags.sine_dt, "sine sample spacing (s)");
  make_cmd->add_option("--ecg-bpm", md_flags.ecg_bpm, "ECG heart rate");
  make_cmd->add_option("--ecg-noise", md_flags.ecg_noise, "ECG noise scale");
  make_cmd->add_option("--ecg-rate", md_flags.ecg_rate, "ECG sampling rate (Hz)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model and write loss history + checkpoint");
  TrainFlags tf;
  add_train_options(train_cmd, tf);
  train_cmd->add_flag("--dry-run", tf.dry_run, "resolve and write the config, then stop");

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "sample windows from a trained checkpoint");
  std::string g_checkpoint, g_out = "generated";
  int g_count = 5;
  std::uint64_t g_seed = 42;
  std::optional<int> g_seq;
  std::optional<double> g_dt;
  std::optional<std::string> g_ref;
  gen_cmd->add_option("--checkpoint", g_checkpoint, "checkpoint.json path")->required();
  gen_cmd->add_option("--count", g_count, "number of windows");
  gen_cmd->add_option("--seed", g_seed, "seed");
  gen_cmd->add_option("--out", g_out, "output directory");
  gen_cmd->add_option("--seq-length", g_seq, "override the window length");
  gen_cmd->add_option("--dt", g_dt, "override the sample spacing");
  gen_cmd->add_option("--reference", g_ref, "dataset directory to overlay against");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "compare generated windows against real ones");
  std::string e_real, e_gen, e_out = "report";
  eval_cmd->add_option("--real", e_real, "real dataset directory")->required();
  eval_cmd->add_option("--generated", e_gen, "generated dataset directory")->required();
  eval_cmd->add_option("--out", e_out, "report directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*make_cmd) return run_make_data(md_kind, md_count, md_seq, md_seed, md_out, md_flags);
    if (*train_cmd) return run_train(tf);
    if (*gen_cmd)
      return run_generate(g_checkpoint, g_count, g_seed, g_out, g_seq, g_dt, g_ref);
    if (*eval_cmd) return run_evaluate(e_real, e_gen, e_out);
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace odesyn
