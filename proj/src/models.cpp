#include "odesyn/models.hpp"

#include <cmath>
#include <fstream>

namespace odesyn {

namespace {

Tensor uniform_init(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (double& x : v) x = dist(rng);
  return Tensor::leaf(std::move(shape), std::move(v), true);
}

Tensor normal_init(Shape shape, double std_dev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std_dev);
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (double& x : v) x = dist(rng);
  return Tensor::leaf(std::move(shape), std::move(v), true);
}

// Heads start near zero so an untrained discriminator answers ~0.5.
constexpr double kHeadStd = 1e-3;

Tensor batch_column(const Tensor& batch, int col) {
  const int b = batch.rows();
  std::vector<double> v(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) v[static_cast<std::size_t>(i)] = batch.at(i, col);
  return Tensor::leaf({b, 1}, std::move(v));
}

void check_grid(const std::vector<double>& ts) {
  if (ts.empty()) throw shape_error("generator: empty time grid");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1])) throw shape_error("generator: time grid must increase");
}

}  // namespace

SeqGenCore::SeqGenCore(SeqGenConfig config, std::uint64_t seed) : cfg(config) {
  std::mt19937_64 rng(seed);
  cell = OdeCell::make(cfg.cell, 1, cfg.hidden_dim, rng);
  // the readout starts as the mean over hidden units, the adjoint of the
  // tile() encoding of the initial value, plus symmetry-breaking jitter
  const int d_h = cfg.hidden_dim;
  std::uniform_real_distribution<double> jitter(-0.5 / std::sqrt(static_cast<double>(d_h)),
                                                0.5 / std::sqrt(static_cast<double>(d_h)));
  std::vector<double> w(static_cast<std::size_t>(d_h));
  for (double& v : w) v = 1.0 / static_cast<double>(d_h) + jitter(rng);
  w_out = Tensor::leaf({d_h, 1}, std::move(w), true);
  b_out = Tensor::zeros({1}, true);
}

namespace {

// h0 = tile(y0) + z, one noise draw per hidden coordinate.
Tensor seed_state(const Tensor& y0, int d_h, double noise_scale, std::mt19937_64& rng) {
  const int b = y0.rows();
  std::vector<double> v(static_cast<std::size_t>(b) * d_h);
  std::normal_distribution<double> noise(0.0, noise_scale);
  for (int i = 0; i < b; ++i) {
    const double base = y0.at(i, 0);
    for (int k = 0; k < d_h; ++k)
      v[static_cast<std::size_t>(i) * d_h + k] = base + (noise_scale > 0.0 ? noise(rng) : 0.0);
  }
  return Tensor::leaf({b, d_h}, std::move(v));
}

}  // namespace

Tensor SeqGenCore::generate(Tape& tape, const Tensor& y0, const std::vector<double>& ts,
                            std::mt19937_64& rng) const {
  check_grid(ts);
  if (y0.shape().size() != 2 || y0.cols() != 1)
    throw shape_error("generate: y0 must be [B x 1]");
  const SolverConfig solver = SolverConfig::steps(cfg.ode_steps);
  Tensor state = seed_state(y0, cfg.hidden_dim, cfg.noise_scale, rng);
  Tensor x = y0;
  std::vector<Tensor> outputs;
  outputs.reserve(ts.size());
  outputs.push_back(linear(tape, cell.hidden(tape, state, x), w_out, b_out));
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    x = outputs.back();  // emitted sample feeds back as the held input
    OdeFunc f = [this, &x](Tape& tp, double, const Tensor& y) {
      return cell.derivative(tp, y, x);
    };
    state = integrate(tape, f, state, ts[i], ts[i + 1], solver).back().y;
    outputs.push_back(linear(tape, cell.hidden(tape, state, x), w_out, b_out));
  }
  return concat_cols(tape, outputs);
}

Tensor SeqGenCore::teacher_forward(Tape& tape, const Tensor& batch,
                                   const std::vector<double>& ts,
                                   std::mt19937_64& rng) const {
  check_grid(ts);
  if (batch.shape().size() != 2 || batch.cols() != static_cast<int>(ts.size()))
    throw shape_error("teacher_forward: batch must be [B x |ts|]");
  const SolverConfig solver = SolverConfig::steps(cfg.ode_steps);
  // one-step-ahead teacher forcing: each observed sample is re-encoded into
  // the state, evolved over one interval with the sample held as input, and
  // decoded as the prediction for the next grid point. The cell learns the
  // local signal dynamics.
  std::vector<Tensor> outputs;
  outputs.reserve(ts.size());
  {
    Tensor x0 = batch_column(batch, 0);
    Tensor s0 = seed_state(x0, cfg.hidden_dim, cfg.noise_scale, rng);
    outputs.push_back(linear(tape, cell.hidden(tape, s0, x0), w_out, b_out));
  }
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    Tensor x = batch_column(batch, static_cast<int>(i));
    Tensor state = seed_state(x, cfg.hidden_dim, cfg.noise_scale, rng);
    OdeFunc f = [this, &x](Tape& tp, double, const Tensor& y) {
      return cell.derivative(tp, y, x);
    };
    state = integrate(tape, f, state, ts[i], ts[i + 1], solver).back().y;
    outputs.push_back(linear(tape, cell.hidden(tape, state, x), w_out, b_out));
  }
  return concat_cols(tape, outputs);
}

std::vector<std::pair<std::string, Tensor>> SeqGenCore::named_params() const {
  auto out = cell.named_params();
  out.emplace_back("w_out", w_out);
  out.emplace_back("b_out", b_out);
  return out;
}

namespace {

nlohmann::json seqgen_config_json(const SeqGenConfig& c) {
  return {{"cell", cell_kind_name(c.cell)},
          {"hidden_dim", c.hidden_dim},
          {"noise_scale", c.noise_scale},
          {"ode_steps", c.ode_steps}};
}

SeqGenConfig seqgen_config_from_json(const nlohmann::json& j) {
  SeqGenConfig c;
  c.cell = cell_kind_from_name(j.at("cell").get<std::string>());
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.noise_scale = j.at("noise_scale").get<double>();
  c.ode_steps = j.at("ode_steps").get<int>();
  return c;
}

}  // namespace

nlohmann::json OdeEcgGenerator::config_json() const { return seqgen_config_json(core_.cfg); }

std::unique_ptr<OdeEcgGenerator> OdeEcgGenerator::from_config_json(const nlohmann::json& j) {
  return std::make_unique<OdeEcgGenerator>(seqgen_config_from_json(j), 0);
}

nlohmann::json OdeGenerator::config_json() const { return seqgen_config_json(core_.cfg); }

std::unique_ptr<OdeGenerator> OdeGenerator::from_config_json(const nlohmann::json& j) {
  return std::make_unique<OdeGenerator>(seqgen_config_from_json(j), 0);
}

BaselineLstmGenerator::BaselineLstmGenerator(BaselineLstmConfig config, std::uint64_t seed)
    : cfg(config) {
  std::mt19937_64 rng(seed);
  layer1 = LstmOdeParams::init(cfg.noise_dim, cfg.hidden_dim, rng);
  layer2 = LstmOdeParams::init(cfg.hidden_dim, cfg.hidden_dim, rng);
  w_out = uniform_init({cfg.hidden_dim, 1}, 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim)), rng);
  b_out = Tensor::zeros({1}, true);
}

namespace {

// Discrete LSTM update.
std::pair<Tensor, Tensor> lstm_step(Tape& tape, const Tensor& x, const Tensor& h,
                                    const Tensor& c, const LstmOdeParams& p) {
  auto gate = [&](const Tensor& W, const Tensor& U, const Tensor& b, bool use_tanh) {
    Tensor pre = add(tape, linear(tape, x, W, b), matmul(tape, h, U));
    return use_tanh ? tanh(tape, pre) : sigmoid(tape, pre);
  };
  Tensor i = gate(p.W_i, p.U_i, p.b_i, false);
  Tensor f = gate(p.W_f, p.U_f, p.b_f, false);
  Tensor o = gate(p.W_o, p.U_o, p.b_o, false);
  Tensor g = gate(p.W_g, p.U_g, p.b_g, true);
  Tensor c_next = add(tape, mul(tape, f, c), mul(tape, i, g));
  Tensor h_next = mul(tape, o, tanh(tape, c_next));
  return {h_next, c_next};
}

}  // namespace

Tensor BaselineLstmGenerator::sample(Tape& tape, const std::vector<double>& ts, const Tensor& y0,
                                     std::mt19937_64& rng) const {
  check_grid(ts);
  const int b = y0.rows();
  std::normal_distribution<double> noise(0.0, 1.0);
  Tensor h1 = Tensor::zeros({b, cfg.hidden_dim});
  Tensor c1 = h1, h2 = h1, c2 = h1;
  std::vector<Tensor> outputs;
  outputs.reserve(ts.size());
  for (std::size_t step = 0; step < ts.size(); ++step) {
    std::vector<double> zv(static_cast<std::size_t>(b) * cfg.noise_dim);
    for (double& z : zv) z = noise(rng);
    Tensor x = Tensor::leaf({b, cfg.noise_dim}, std::move(zv));
    std::tie(h1, c1) = lstm_step(tape, x, h1, c1, layer1);
    std::tie(h2, c2) = lstm_step(tape, h1, h2, c2, layer2);
    outputs.push_back(linear(tape, h2, w_out, b_out));
  }
  return concat_cols(tape, outputs);
}

std::vector<std::pair<std::string, Tensor>> BaselineLstmGenerator::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (auto& [n, t] : layer1.named()) out.emplace_back("l1." + n, t);
  for (auto& [n, t] : layer2.named()) out.emplace_back("l2." + n, t);
  out.emplace_back("w_out", w_out);
  out.emplace_back("b_out", b_out);
  return out;
}

nlohmann::json BaselineLstmGenerator::config_json() const {
  return {{"hidden_dim", cfg.hidden_dim}, {"noise_dim", cfg.noise_dim}};
}

std::unique_ptr<BaselineLstmGenerator> BaselineLstmGenerator::from_config_json(
    const nlohmann::json& j) {
  BaselineLstmConfig c;
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.noise_dim = j.at("noise_dim").get<int>();
  return std::make_unique<BaselineLstmGenerator>(c, 0);
}

// --- ConvDiscriminator ------------------------------------------------------

ConvDiscriminator::ConvDiscriminator(ConvDiscConfig config, std::uint64_t seed) : cfg(config) {
  std::mt19937_64 rng(seed);
  conv1_w = uniform_init({cfg.cv1_out, 1, 1, cfg.cv1_k},
                         1.0 / std::sqrt(static_cast<double>(cfg.cv1_k)), rng);
  conv1_b = Tensor::zeros({cfg.cv1_out}, true);
  conv2_w = uniform_init({cfg.cv2_out, cfg.cv1_out, 1, cfg.cv2_k},
                         1.0 / std::sqrt(static_cast<double>(cfg.cv1_out * cfg.cv2_k)), rng);
  conv2_b = Tensor::zeros({cfg.cv2_out}, true);
  const int a = flat_width();
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(a));
  mb_proj = cfg.minibatch_normal_init
                ? normal_init({a, cfg.mb_kernels * cfg.mb_dim}, proj_scale, rng)
                : uniform_init({a, cfg.mb_kernels * cfg.mb_dim}, proj_scale, rng);
  head_w = normal_init({a + cfg.mb_kernels, 1}, kHeadStd, rng);
  head_b = Tensor::zeros({1}, true);
}

int ConvDiscriminator::flat_width() const {
  const int w1 = (cfg.seq_length + 2 * cfg.p1_k - cfg.cv1_k) / cfg.cv1_s + 1;
  const int w2 = (w1 + 2 * cfg.p2_k - cfg.cv2_k) / cfg.cv2_s + 1;
  return cfg.cv2_out * w2;
}

Tensor ConvDiscriminator::score(Tape& tape, const Tensor& candidate, const Tensor&,
                                const std::vector<double>&) const {
  if (candidate.shape().size() != 2 || candidate.cols() != cfg.seq_length)
    throw shape_error("conv discriminator: batch must be [B x seq_length]");
  const int b = candidate.rows();
  Tensor img = reshape(tape, candidate, {b, 1, 1, cfg.seq_length});
  Tensor h = leaky_relu(tape, conv2d(tape, img, conv1_w, conv1_b, {1, cfg.cv1_s}, {0, cfg.p1_k}));
  h = leaky_relu(tape, conv2d(tape, h, conv2_w, conv2_b, {1, cfg.cv2_s}, {0, cfg.p2_k}));
  Tensor flat = reshape(tape, h, {b, flat_width()});
  Tensor mb = minibatch_discrimination(tape, flat, mb_proj, cfg.mb_kernels, cfg.mb_dim);
  return sigmoid(tape, linear(tape, mb, head_w, head_b));
}

std::vector<std::pair<std::string, Tensor>> ConvDiscriminator::named_params() const {
  return {{"conv1_w", conv1_w}, {"conv1_b", conv1_b}, {"conv2_w", conv2_w},
          {"conv2_b", conv2_b}, {"mb_proj", mb_proj}, {"head_w", head_w},
          {"head_b", head_b}};
}

nlohmann::json ConvDiscriminator::config_json() const {
  return {{"seq_length", cfg.seq_length},
          {"minibatch_normal_init", cfg.minibatch_normal_init},
          {"num_cv", cfg.num_cv},
          {"cv1_out", cfg.cv1_out},
          {"cv1_k", cfg.cv1_k},
          {"cv1_s", cfg.cv1_s},
          {"p1_k", cfg.p1_k},
          {"cv2_out", cfg.cv2_out},
          {"cv2_k", cfg.cv2_k},
          {"cv2_s", cfg.cv2_s},
          {"p2_k", cfg.p2_k},
          {"mb_kernels", cfg.mb_kernels},
          {"mb_dim", cfg.mb_dim}};
}

std::unique_ptr<ConvDiscriminator> ConvDiscriminator::from_config_json(const nlohmann::json& j) {
  ConvDiscConfig c;
  c.seq_length = j.at("seq_length").get<int>();
  c.minibatch_normal_init = j.at("minibatch_normal_init").get<bool>();
  c.num_cv = j.at("num_cv").get<int>();
  c.cv1_out = j.at("cv1_out").get<int>();
  c.cv1_k = j.at("cv1_k").get<int>();
  c.cv1_s = j.at("cv1_s").get<int>();
  c.p1_k = j.at("p1_k").get<int>();
  c.cv2_out = j.at("cv2_out").get<int>();
  c.cv2_k = j.at("cv2_k").get<int>();
  c.cv2_s = j.at("cv2_s").get<int>();
  c.p2_k = j.at("p2_k").get<int>();
  c.mb_kernels = j.at("mb_kernels").get<int>();
  c.mb_dim = j.at("mb_dim").get<int>();
  return std::make_unique<ConvDiscriminator>(c, 0);
}

// --- ConvNodeDiscriminator --------------------------------------------------

ConvNodeDiscriminator::ConvNodeDiscriminator(ConvNodeDiscConfig config, std::uint64_t seed)
    : cfg(config) {
  if (cfg.node_k % 2 == 0)
    throw shape_error("conv-node discriminator: NODE kernel must be odd for same padding");
  std::mt19937_64 rng(seed);
  conv1_w = uniform_init({cfg.cv1_out, 1, 1, cfg.cv1_k},
                         1.0 / std::sqrt(static_cast<double>(cfg.cv1_k)), rng);
  conv1_b = Tensor::zeros({cfg.cv1_out}, true);
  df_w = uniform_init({cfg.cv1_out, cfg.cv1_out, 1, cfg.node_k},
                      1.0 / std::sqrt(static_cast<double>(cfg.cv1_out * cfg.node_k)), rng);
  df_b = Tensor::zeros({cfg.cv1_out}, true);
  conv2_w = uniform_init({cfg.cv2_out, cfg.cv1_out, 1, cfg.cv2_k},
                         1.0 / std::sqrt(static_cast<double>(cfg.cv1_out * cfg.cv2_k)), rng);
  conv2_b = Tensor::zeros({cfg.cv2_out}, true);
  conv3_w = uniform_init({cfg.cv3_out, cfg.cv2_out, 1, cfg.cv3_k},
                         1.0 / std::sqrt(static_cast<double>(cfg.cv2_out * cfg.cv3_k)), rng);
  conv3_b = Tensor::zeros({cfg.cv3_out}, true);

  const int w1 = (cfg.seq_length + 2 * cfg.p1_k - cfg.cv1_k) / cfg.cv1_s + 1;
  const int w2 = ((w1 + 2 * cfg.p2_k - cfg.cv2_k) / cfg.cv2_s + 1) / cfg.pool2;
  const int w3 = ((w2 + 2 * cfg.p3_k - cfg.cv3_k) / cfg.cv3_s + 1) / cfg.pool3;
  head_w = normal_init({cfg.cv3_out * w3, 1}, kHeadStd, rng);
  head_b = Tensor::zeros({1}, true);
}

Tensor ConvNodeDiscriminator::node_field(Tape& tape, const Tensor& z) const {
  const int pad = (cfg.node_k - 1) / 2;
  return tanh(tape, conv2d(tape, z, df_w, df_b, {1, 1}, {0, pad}));
}

Tensor ConvNodeDiscriminator::score(Tape& tape, const Tensor& candidate, const Tensor&,
                                    const std::vector<double>&) const {
  if (candidate.shape().size() != 2 || candidate.cols() != cfg.seq_length)
    throw shape_error("conv-node discriminator: batch must be [B x seq_length]");
  const int b = candidate.rows();
  Tensor img = reshape(tape, candidate, {b, 1, 1, cfg.seq_length});
  Tensor h = leaky_relu(tape, conv2d(tape, img, conv1_w, conv1_b, {1, cfg.cv1_s}, {0, cfg.p1_k}));
  // NODE layer over unit time; the field preserves the feature width.
  OdeFunc f = [this](Tape& tp, double, const Tensor& z) { return node_field(tp, z); };
  h = integrate(tape, f, h, 0.0, 1.0, SolverConfig::steps(cfg.node_steps)).back().y;
  h = leaky_relu(tape, conv2d(tape, h, conv2_w, conv2_b, {1, cfg.cv2_s}, {0, cfg.p2_k}));
  h = maxpool2d(tape, h, {1, cfg.pool2}, {1, cfg.pool2});
  h = leaky_relu(tape, conv2d(tape, h, conv3_w, conv3_b, {1, cfg.cv3_s}, {0, cfg.p3_k}));
  h = maxpool2d(tape, h, {1, cfg.pool3}, {1, cfg.pool3});
  const int flat = h.shape()[1] * h.shape()[2] * h.shape()[3];
  Tensor out = linear(tape, reshape(tape, h, {b, flat}), head_w, head_b);
  return sigmoid(tape, out);
}

std::vector<std::pair<std::string, Tensor>> ConvNodeDiscriminator::named_params() const {
  return {{"conv1_w", conv1_w}, {"conv1_b", conv1_b}, {"df_w", df_w},       {"df_b", df_b},
          {"conv2_w", conv2_w}, {"conv2_b", conv2_b}, {"conv3_w", conv3_w}, {"conv3_b", conv3_b},
          {"head_w", head_w},   {"head_b", head_b}};
}

nlohmann::json ConvNodeDiscriminator::config_json() const {
  return {{"seq_length", cfg.seq_length}, {"cv1_out", cfg.cv1_out}, {"cv1_k", cfg.cv1_k},
          {"cv1_s", cfg.cv1_s},           {"p1_k", cfg.p1_k},       {"node_k", cfg.node_k},
          {"node_steps", cfg.node_steps}, {"cv2_out", cfg.cv2_out}, {"cv2_k", cfg.cv2_k},
          {"cv2_s", cfg.cv2_s},           {"p2_k", cfg.p2_k},       {"pool2", cfg.pool2},
          {"cv3_out", cfg.cv3_out},       {"cv3_k", cfg.cv3_k},     {"cv3_s", cfg.cv3_s},
          {"p3_k", cfg.p3_k},             {"pool3", cfg.pool3}};
}

std::unique_ptr<ConvNodeDiscriminator> ConvNodeDiscriminator::from_config_json(
    const nlohmann::json& j) {
  ConvNodeDiscConfig c;
  c.seq_length = j.at("seq_length").get<int>();
  c.cv1_out = j.at("cv1_out").get<int>();
  c.cv1_k = j.at("cv1_k").get<int>();
  c.cv1_s = j.at("cv1_s").get<int>();
  c.p1_k = j.at("p1_k").get<int>();
  c.node_k = j.at("node_k").get<int>();
  c.node_steps = j.at("node_steps").get<int>();
  c.cv2_out = j.at("cv2_out").get<int>();
  c.cv2_k = j.at("cv2_k").get<int>();
  c.cv2_s = j.at("cv2_s").get<int>();
  c.p2_k = j.at("p2_k").get<int>();
  c.pool2 = j.at("pool2").get<int>();
  c.cv3_out = j.at("cv3_out").get<int>();
  c.cv3_k = j.at("cv3_k").get<int>();
  c.cv3_s = j.at("cv3_s").get<int>();
  c.p3_k = j.at("p3_k").get<int>();
  c.pool3 = j.at("pool3").get<int>();
  return std::make_unique<ConvNodeDiscriminator>(c, 0);
}

// --- CdeDiscriminator -------------------------------------------------------

CdeDiscriminator::CdeDiscriminator(CdeDiscConfig config, std::uint64_t seed) : cfg(config) {
  std::mt19937_64 rng(seed);
  const int c = cfg.value_channels + 1;  // plus the time channel
  // nonzero field biases keep f(0) away from zero; with z0 = 0 a zero-bias
  // field would freeze the hidden state at the origin. The doubled scale
  // makes the hidden dynamics respond to path differences strongly enough
  // for the head to separate real from generated within a short run.
  const double s1 = 2.0 / std::sqrt(static_cast<double>(cfg.hidden_channels));
  const double s2 = 2.0 / std::sqrt(static_cast<double>(cfg.field_hidden));
  f_w1 = uniform_init({cfg.hidden_channels, cfg.field_hidden}, s1, rng);
  f_b1 = uniform_init({cfg.field_hidden}, s1, rng);
  f_w2 = uniform_init({cfg.field_hidden, cfg.hidden_channels * c}, s2, rng);
  f_b2 = uniform_init({cfg.hidden_channels * c}, s2, rng);
  head_w = normal_init({cfg.hidden_channels, cfg.output_channels}, 0.02, rng);
  head_b = Tensor::zeros({cfg.output_channels}, true);
}

Tensor CdeDiscriminator::field(Tape& tape, const Tensor& z) const {
  Tensor h = tanh(tape, linear(tape, z, f_w1, f_b1));
  return tanh(tape, linear(tape, h, f_w2, f_b2));
}

Tensor CdeDiscriminator::score(Tape& tape, const Tensor& candidate, const Tensor& reference,
                               const std::vector<double>& ts) const {
  if (!reference.defined()) throw shape_error("cde discriminator: needs a reference batch");
  if (candidate.shape().size() != 2 || reference.shape().size() != 2 ||
      candidate.cols() != static_cast<int>(ts.size()) ||
      reference.cols() != candidate.cols() || reference.rows() != candidate.rows())
    throw shape_error("cde discriminator: candidate/reference grids differ");
  const int b = candidate.rows();
  const int n = candidate.cols();

  // time channel normalized to [0,1] so its drift does not drown the value
  // channels in the controlled dynamics
  const double t0 = ts.front(), span = ts.back() - ts.front();
  std::vector<double> time_values(static_cast<std::size_t>(b) * n);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < n; ++j)
      time_values[static_cast<std::size_t>(i) * n + j] = (ts[static_cast<std::size_t>(j)] - t0) / span;
  Tensor time_channel = Tensor::leaf({b, n}, std::move(time_values));

  BatchedCdePath path;
  path.ts = ts;
  path.channels.push_back(make_batched_channel(tape, time_channel, ts));
  path.channels.push_back(
      make_batched_channel(tape, affine(tape, reference, cfg.value_gain, 0.0), ts));
  path.channels.push_back(
      make_batched_channel(tape, affine(tape, candidate, cfg.value_gain, 0.0), ts));

  Tensor z0 = Tensor::zeros({b, cfg.hidden_channels});
  CdeFieldFunc f = [this](Tape& tp, const Tensor& z) { return field(tp, z); };
  Tensor zt = cde_integrate_batched(tape, f, z0, path, SolverConfig::steps(cfg.ode_steps));
  return sigmoid(tape, linear(tape, zt, head_w, head_b));
}

std::vector<std::pair<std::string, Tensor>> CdeDiscriminator::named_params() const {
  return {{"f_w1", f_w1},     {"f_b1", f_b1},     {"f_w2", f_w2},
          {"f_b2", f_b2},     {"head_w", head_w}, {"head_b", head_b}};
}

nlohmann::json CdeDiscriminator::config_json() const {
  return {{"seq_length", cfg.seq_length},
          {"value_channels", cfg.value_channels},
          {"hidden_channels", cfg.hidden_channels},
          {"field_hidden", cfg.field_hidden},
          {"output_channels", cfg.output_channels},
          {"ode_steps", cfg.ode_steps},
          {"value_gain", cfg.value_gain}};
}

std::unique_ptr<CdeDiscriminator> CdeDiscriminator::from_config_json(const nlohmann::json& j) {
  CdeDiscConfig c;
  c.seq_length = j.at("seq_length").get<int>();
  c.value_channels = j.at("value_channels").get<int>();
  c.hidden_channels = j.at("hidden_channels").get<int>();
  c.field_hidden = j.at("field_hidden").get<int>();
  c.output_channels = j.at("output_channels").get<int>();
  c.ode_steps = j.at("ode_steps").get<int>();
  c.value_gain = j.at("value_gain").get<double>();
  return std::make_unique<CdeDiscriminator>(c, 0);
}

// --- registry / checkpoints -------------------------------------------------

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::ode_rnn: return "ode-rnn";
    case ModelKind::ode_gan: return "ode-gan";
    case ModelKind::ode_gan2_convnode: return "ode-gan2-convnode";
    case ModelKind::ode_gan2_cde: return "ode-gan2-cde";
    case ModelKind::baseline_gan: return "baseline-gan";
  }
  throw io_error("bad model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "ode-rnn") return ModelKind::ode_rnn;
  if (name == "ode-gan") return ModelKind::ode_gan;
  if (name == "ode-gan2-convnode") return ModelKind::ode_gan2_convnode;
  if (name == "ode-gan2-cde") return ModelKind::ode_gan2_cde;
  if (name == "baseline-gan") return ModelKind::baseline_gan;
  throw io_error("unknown model '" + name +
                 "' (expected ode-rnn, ode-gan, ode-gan2-convnode, ode-gan2-cde, baseline-gan)");
}

bool model_is_gan(ModelKind k) { return k != ModelKind::ode_rnn; }

std::vector<std::pair<std::string, Tensor>> ModelBundle::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (auto& [n, t] : gen->named_params()) out.emplace_back("gen." + n, t);
  if (disc)
    for (auto& [n, t] : disc->named_params()) out.emplace_back("disc." + n, t);
  return out;
}

ModelBundle make_models(ModelKind kind, const ModelHyper& hyper, std::uint64_t seed) {
  ModelBundle b;
  b.kind = kind;
  SeqGenConfig gen_cfg;
  gen_cfg.cell = hyper.cell;
  gen_cfg.hidden_dim = hyper.hidden_dim;
  gen_cfg.noise_scale = hyper.noise_scale;
  gen_cfg.ode_steps = hyper.ode_steps;
  const std::uint64_t gseed = mix_seed(seed, 0xa11ce);
  const std::uint64_t dseed = mix_seed(seed, 0xd15c);
  switch (kind) {
    case ModelKind::ode_rnn:
      b.gen = std::make_unique<OdeEcgGenerator>(gen_cfg, gseed);
      break;
    case ModelKind::ode_gan: {
      b.gen = std::make_unique<OdeGenerator>(gen_cfg, gseed);
      ConvDiscConfig dc;
      dc.seq_length = hyper.seq_length;
      b.disc = std::make_unique<ConvDiscriminator>(dc, dseed);
      break;
    }
    case ModelKind::ode_gan2_convnode: {
      b.gen = std::make_unique<OdeEcgGenerator>(gen_cfg, gseed);
      ConvNodeDiscConfig dc;
      dc.seq_length = hyper.seq_length;
      b.disc = std::make_unique<ConvNodeDiscriminator>(dc, dseed);
      break;
    }
    case ModelKind::ode_gan2_cde: {
      b.gen = std::make_unique<OdeEcgGenerator>(gen_cfg, gseed);
      CdeDiscConfig dc;
      dc.seq_length = hyper.seq_length;
      b.disc = std::make_unique<CdeDiscriminator>(dc, dseed);
      break;
    }
    case ModelKind::baseline_gan: {
      BaselineLstmConfig gc;
      gc.hidden_dim = hyper.hidden_dim;
      b.gen = std::make_unique<BaselineLstmGenerator>(gc, gseed);
      ConvDiscConfig dc;
      dc.seq_length = hyper.seq_length;
      b.disc = std::make_unique<ConvDiscriminator>(dc, dseed);
      break;
    }
  }
  return b;
}

namespace {

constexpr const char* kCheckpointFormat = "odesyn-checkpoint";
constexpr int kCheckpointVersion = 1;

std::unique_ptr<Generator> generator_from_json(const std::string& kind,
                                               const nlohmann::json& config) {
  if (kind == "ode-ecg-generator") return OdeEcgGenerator::from_config_json(config);
  if (kind == "ode-generator") return OdeGenerator::from_config_json(config);
  if (kind == "baseline-lstm-generator") return BaselineLstmGenerator::from_config_json(config);
  throw io_error("checkpoint: unknown generator kind '" + kind + "'");
}

std::unique_ptr<Discriminator> discriminator_from_json(const std::string& kind,
                                                       const nlohmann::json& config) {
  if (kind == "conv-discriminator") return ConvDiscriminator::from_config_json(config);
  if (kind == "conv-node-discriminator") return ConvNodeDiscriminator::from_config_json(config);
  if (kind == "cde-discriminator") return CdeDiscriminator::from_config_json(config);
  throw io_error("checkpoint: unknown discriminator kind '" + kind + "'");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle,
                     const nlohmann::json& meta) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["model"] = model_kind_name(bundle.kind);
  j["meta"] = meta;
  j["generator"] = {{"kind", bundle.gen->kind()}, {"config", bundle.gen->config_json()}};
  if (bundle.disc)
    j["discriminator"] = {{"kind", bundle.disc->kind()}, {"config", bundle.disc->config_json()}};
  nlohmann::json params = nlohmann::json::object();
  for (auto& [name, t] : bundle.named_params()) {
    params[name] = {{"shape", t.shape()}, {"data", t.value()}};
  }
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw io_error("cannot write checkpoint " + path.string());
  out << j.dump();
  out << "\n";
}

ModelBundle load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta_out) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw io_error("corrupted checkpoint " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
    throw io_error("not an odesyn checkpoint: " + path.string());
  if (j.value("version", -1) != kCheckpointVersion)
    throw io_error("unsupported checkpoint version in " + path.string());
  if (meta_out) *meta_out = j.value("meta", nlohmann::json::object());
  ModelBundle b;
  try {
    b.kind = model_kind_from_name(j.at("model").get<std::string>());
    const auto& gj = j.at("generator");
    b.gen = generator_from_json(gj.at("kind").get<std::string>(), gj.at("config"));
    if (j.contains("discriminator")) {
      const auto& dj = j.at("discriminator");
      b.disc = discriminator_from_json(dj.at("kind").get<std::string>(), dj.at("config"));
    }
    auto named = b.named_params();
    const auto& params = j.at("params");
    for (auto& [name, t] : named) {
      const auto& pj = params.at(name);
      const Shape shape = pj.at("shape").get<Shape>();
      std::vector<double> data = pj.at("data").get<std::vector<double>>();
      if (!shape_equal(shape, t.shape()) || data.size() != t.value().size())
        throw io_error("checkpoint parameter '" + name + "' has wrong shape");
      t.mutable_value() = std::move(data);
    }
  } catch (const nlohmann::json::exception& e) {
    throw io_error("corrupted checkpoint " + path.string() + ": " + e.what());
  }
  return b;
}

}  // namespace odesyn
