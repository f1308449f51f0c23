#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "odesyn/tensor.hpp"

namespace odesyn {

// Per-window min-max record; inverse-transforms a normalized window back to
// raw units. A constant window keeps lo == hi and maps to all 0.5.
struct NormRecord {
  double lo = 0.0;
  double hi = 1.0;
};

struct EcgRecord {
  double sampling_rate = 0.0;  // Hz
  std::vector<std::vector<double>> channels;
  std::string label = "synthetic";  // normal_sinus | arrhythmia | synthetic
};

// Fixed-length normalized slice of one channel. Sample i sits at time i*dt.
struct SignalWindow {
  std::vector<double> values;  // normalized to [0,1]
  double dt = 0.0;
  NormRecord norm;
};

// Rows are `t,ch1,ch2` or `ch1,ch2`, optionally with one non-numeric header
// line. With a time column the sampling rate comes from the first spacing;
// otherwise `fallback_rate` is used.
EcgRecord load_ecg_csv(const std::filesystem::path& path, double fallback_rate = 360.0);

std::pair<std::vector<double>, NormRecord> normalize(const std::vector<double>& values);
std::vector<double> denormalize(const std::vector<double>& values, const NormRecord& rec);

// Slides a window of seq_length over the chosen channel. Yields
// floor((N-seq)/stride)+1 normalized windows; an undersized record yields
// none and logs a warning.
std::vector<SignalWindow> window(const EcgRecord& record, int channel, int seq_length,
                                 int stride);

// Seeded sinusoids with uniform random frequency, phase and amplitude.
// Frequencies are in Hz against the sample spacing dt.
std::vector<SignalWindow> synth_sine(int count, int length, std::pair<double, double> freq_range,
                                     std::pair<double, double> amp_range, std::uint64_t seed,
                                     double dt = 1.0 / 24.0);

// One PQRST event: angle on the unit cycle, amplitude, angular width.
struct EcgWave {
  double theta;
  double a;
  double b;
};

// Frozen parameters of the dynamical ECG model: five Gaussian bumps per
// channel driving dz/dt on top of the circular (x, y) limit cycle.
struct DynEcgParams {
  std::vector<EcgWave> lead1;
  std::vector<EcgWave> lead2;
  static DynEcgParams canonical();
};

// Integrates the three-variable dynamical ECG system (two z readouts share
// one rotation) with fixed-step RK4 and adds seeded Gaussian measurement
// noise of `noise_scale`. Heart rate must lie in [30, 200] bpm.
EcgRecord synth_dynamical_ecg(double duration_s, double heart_rate_bpm, double noise_scale,
                              std::uint64_t seed, double sampling_rate = 240.0,
                              const DynEcgParams& params = DynEcgParams::canonical());

// Dataset directory layout: window_%04d.csv files (`index,value` rows) plus
// manifest.csv recording file, seed, dt and the normalization record.
void write_dataset(const std::filesystem::path& dir, const std::vector<SignalWindow>& windows,
                   std::uint64_t seed, const std::string& kind);
std::vector<SignalWindow> load_dataset(const std::filesystem::path& dir);

// Stacks windows (must share length and dt) into a [B x L] leaf tensor.
Tensor make_batch(const std::vector<SignalWindow>& windows, const std::vector<int>& indices);

// Uniform time grid of a window: {0, dt, 2*dt, ...}.
std::vector<double> window_times(const SignalWindow& w);

}  // namespace odesyn
