#include "odesyn/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "odesyn/odesolve.hpp"

namespace odesyn {

namespace {

bool parse_fields(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &pos);
    } catch (...) {
      return false;
    }
    while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
    if (pos != field.size()) return false;
    out.push_back(v);
  }
  return !out.empty();
}

std::string trim_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

}  // namespace

EcgRecord load_ecg_csv(const std::filesystem::path& path, double fallback_rate) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  EcgRecord rec;
  rec.channels.assign(2, {});
  std::vector<double> times;
  std::vector<double> fields;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    if (!parse_fields(line, fields)) {
      if (lineno == 1) continue;  // non-numeric header
      throw io_error(path.string() + ":" + std::to_string(lineno) + ": unparsable row '" +
                     line + "'");
    }
    if (fields.size() != 2 && fields.size() != 3)
      throw io_error(path.string() + ":" + std::to_string(lineno) +
                     ": expected 2 or 3 columns, got " + std::to_string(fields.size()));
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw io_error(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    if (width == 3) {
      times.push_back(fields[0]);
      rec.channels[0].push_back(fields[1]);
      rec.channels[1].push_back(fields[2]);
    } else {
      rec.channels[0].push_back(fields[0]);
      rec.channels[1].push_back(fields[1]);
    }
  }
  if (rec.channels[0].empty()) throw io_error(path.string() + ": no samples");
  if (times.size() >= 2 && times[1] > times[0])
    rec.sampling_rate = 1.0 / (times[1] - times[0]);
  else
    rec.sampling_rate = fallback_rate;
  return rec;
}

std::pair<std::vector<double>, NormRecord> normalize(const std::vector<double>& values) {
  if (values.empty()) throw shape_error("normalize: empty window");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw numeric_error("normalize: non-finite input");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out(values.size());
  if (hi > lo) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  } else {
    std::fill(out.begin(), out.end(), 0.5);  // declared rule for constant windows
  }
  return {std::move(out), NormRecord{lo, hi}};
}

std::vector<double> denormalize(const std::vector<double>& values, const NormRecord& rec) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = rec.hi > rec.lo ? values[i] * (rec.hi - rec.lo) + rec.lo : rec.lo;
  return out;
}

std::vector<SignalWindow> window(const EcgRecord& record, int channel, int seq_length,
                                 int stride) {
  if (channel < 0 || channel >= static_cast<int>(record.channels.size()))
    throw shape_error("window: no such channel");
  if (seq_length < 1 || stride < 1) throw shape_error("window: seq_length and stride must be >= 1");
  const auto& src = record.channels[static_cast<std::size_t>(channel)];
  const int n = static_cast<int>(src.size());
  std::vector<SignalWindow> out;
  if (n < seq_length) {
    log_info("window: record of " + std::to_string(n) + " samples is shorter than seq_length " +
             std::to_string(seq_length) + "; no windows produced");
    return out;
  }
  const int count = (n - seq_length) / stride + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) {
    std::vector<double> slice(src.begin() + w * stride, src.begin() + w * stride + seq_length);
    auto [values, norm] = normalize(slice);
    out.push_back(SignalWindow{std::move(values), 1.0 / record.sampling_rate, norm});
  }
  return out;
}

std::vector<SignalWindow> synth_sine(int count, int length, std::pair<double, double> freq_range,
                                     std::pair<double, double> amp_range, std::uint64_t seed,
                                     double dt) {
  if (count < 1 || length < 1) throw shape_error("synth_sine: count and length must be >= 1");
  if (freq_range.first <= 0.0 || freq_range.second < freq_range.first ||
      amp_range.first <= 0.0 || amp_range.second < amp_range.first || dt <= 0.0)
    throw shape_error("synth_sine: ranges must be positive and ordered");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(freq_range.first, freq_range.second);
  std::uniform_real_distribution<double> amp(amp_range.first, amp_range.second);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::vector<SignalWindow> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) {
    const double f = freq(rng), a = amp(rng), p = phase(rng);
    std::vector<double> raw(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) raw[static_cast<std::size_t>(i)] = a * std::sin(2.0 * M_PI * f * i * dt + p);
    auto [values, norm] = normalize(raw);
    out.push_back(SignalWindow{std::move(values), dt, norm});
  }
  return out;
}

DynEcgParams DynEcgParams::canonical() {
  // P, Q, R, S, T in order around the cycle.
  DynEcgParams p;
  p.lead1 = {{-M_PI / 3.0, 1.2, 0.25},
             {-M_PI / 12.0, -5.0, 0.1},
             {0.0, 30.0, 0.1},
             {M_PI / 12.0, -7.5, 0.1},
             {M_PI / 2.0, 0.75, 0.4}};
  // second lead: same angles, rescaled amplitudes
  p.lead2 = {{-M_PI / 3.0, 0.9, 0.25},
             {-M_PI / 12.0, -3.0, 0.1},
             {0.0, 24.0, 0.1},
             {M_PI / 12.0, -5.2, 0.1},
             {M_PI / 2.0, 1.2, 0.4}};
  return p;
}

namespace {

double wrap_angle(double a) {
  while (a <= -M_PI) a += 2.0 * M_PI;
  while (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

double bump_drive(double theta, const std::vector<EcgWave>& waves) {
  double acc = 0.0;
  for (const EcgWave& w : waves) {
    const double d = wrap_angle(theta - w.theta);
    acc -= w.a * d * std::exp(-d * d / (2.0 * w.b * w.b));
  }
  return acc;
}

}  // namespace

EcgRecord synth_dynamical_ecg(double duration_s, double heart_rate_bpm, double noise_scale,
                              std::uint64_t seed, double sampling_rate,
                              const DynEcgParams& params) {
  if (duration_s <= 0.0) throw shape_error("synth_dynamical_ecg: duration must be positive");
  if (heart_rate_bpm < 30.0 || heart_rate_bpm > 200.0)
    throw shape_error("synth_dynamical_ecg: heart rate outside [30, 200] bpm");
  if (noise_scale < 0.0 || sampling_rate <= 0.0)
    throw shape_error("synth_dynamical_ecg: bad noise scale or sampling rate");

  const double omega = 2.0 * M_PI * heart_rate_bpm / 60.0;
  const int n = static_cast<int>(std::llround(duration_s * sampling_rate));
  const double h = 1.0 / sampling_rate;

  PlainOdeFunc field = [&](double, std::span<const double> s, std::span<double> d) {
    const double x = s[0], y = s[1];
    const double alpha = 1.0 - std::sqrt(x * x + y * y);
    const double theta = std::atan2(y, x);
    d[0] = alpha * x - omega * y;
    d[1] = alpha * y + omega * x;
    d[2] = bump_drive(theta, params.lead1) - s[2];
    d[3] = bump_drive(theta, params.lead2) - s[3];
  };

  // start on the limit cycle, half a rotation before the first R peak
  std::vector<double> state{-1.0, 0.0, 0.0, 0.0};
  EcgRecord rec;
  rec.sampling_rate = sampling_rate;
  rec.label = "synthetic";
  rec.channels.assign(2, std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    rec.channels[0][static_cast<std::size_t>(i)] = state[2];
    rec.channels[1][static_cast<std::size_t>(i)] = state[3];
    rk4_step_plain(field, state, i * h, h);
  }
  if (noise_scale > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_scale);
    for (auto& ch : rec.channels)
      for (double& v : ch) v += noise(rng);
  }
  return rec;
}

namespace {

std::string window_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "window_%04d.csv", index);
  return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<SignalWindow>& windows,
                   std::uint64_t seed, const std::string& kind) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest) throw io_error("cannot write " + (dir / "manifest.csv").string());
  manifest << "file,kind,seed,dt,norm_lo,norm_hi\n";
  manifest.precision(17);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const std::string name = window_filename(static_cast<int>(i));
    const SignalWindow& w = windows[i];
    manifest << name << "," << kind << "," << seed << "," << w.dt << "," << w.norm.lo << ","
             << w.norm.hi << "\n";
    std::ofstream f(dir / name);
    if (!f) throw io_error("cannot write " + (dir / name).string());
    f << "index,value\n";
    f.precision(17);
    for (std::size_t j = 0; j < w.values.size(); ++j) f << j << "," << w.values[j] << "\n";
  }
}

std::vector<SignalWindow> load_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.csv");
  if (!manifest) throw io_error("cannot open " + (dir / "manifest.csv").string());
  std::vector<SignalWindow> out;
  std::string line;
  std::getline(manifest, line);  // header
  int lineno = 1;
  while (std::getline(manifest, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string file, kind, seed, dt, lo, hi;
    if (!std::getline(ss, file, ',') || !std::getline(ss, kind, ',') ||
        !std::getline(ss, seed, ',') || !std::getline(ss, dt, ',') ||
        !std::getline(ss, lo, ',') || !std::getline(ss, hi, ','))
      throw io_error((dir / "manifest.csv").string() + ":" + std::to_string(lineno) +
                     ": malformed manifest row");
    SignalWindow w;
    w.dt = std::stod(dt);
    w.norm = NormRecord{std::stod(lo), std::stod(hi)};
    std::ifstream f(dir / file);
    if (!f) throw io_error("cannot open " + (dir / file).string());
    std::string row;
    std::getline(f, row);  // header
    std::vector<double> fields;
    while (std::getline(f, row)) {
      row = trim_cr(row);
      if (row.empty()) continue;
      if (!parse_fields(row, fields) || fields.size() != 2)
        throw io_error((dir / file).string() + ": malformed row '" + row + "'");
      w.values.push_back(fields[1]);
    }
    if (w.values.empty()) throw io_error((dir / file).string() + ": empty window");
    out.push_back(std::move(w));
  }
  return out;
}

Tensor make_batch(const std::vector<SignalWindow>& windows, const std::vector<int>& indices) {
  if (indices.empty()) throw shape_error("make_batch: empty batch");
  const int len = static_cast<int>(windows[static_cast<std::size_t>(indices[0])].values.size());
  const double dt = windows[static_cast<std::size_t>(indices[0])].dt;
  std::vector<double> buf;
  buf.reserve(indices.size() * static_cast<std::size_t>(len));
  for (int idx : indices) {
    const SignalWindow& w = windows[static_cast<std::size_t>(idx)];
    if (static_cast<int>(w.values.size()) != len || w.dt != dt)
      throw shape_error("make_batch: windows must share length and dt");
    buf.insert(buf.end(), w.values.begin(), w.values.end());
  }
  return Tensor::leaf({static_cast<int>(indices.size()), len}, std::move(buf));
}

std::vector<double> window_times(const SignalWindow& w) {
  std::vector<double> ts(w.values.size());
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<double>(i) * w.dt;
  return ts;
}

}  // namespace odesyn
