#include "odesyn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace odesyn {

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw shape_error("rmse: shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

double median_heuristic_bandwidth(const std::vector<SignalWindow>& x,
                                  const std::vector<SignalWindow>& y) {
  std::vector<const std::vector<double>*> pool;
  for (const auto& w : x) pool.push_back(&w.values);
  for (const auto& w : y) pool.push_back(&w.values);
  std::vector<double> dists;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j)
      dists.push_back(std::sqrt(sq_dist(*pool[i], *pool[j])));
  if (dists.empty()) return 1.0;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2),
                   dists.end());
  const double med = dists[dists.size() / 2];
  return med > 0.0 ? med : 1.0;
}

double mmd_rbf(const std::vector<SignalWindow>& x, const std::vector<SignalWindow>& y,
               double bandwidth) {
  if (x.empty() || y.empty()) throw shape_error("mmd_rbf: empty sample set");
  if (!(bandwidth > 0.0)) throw shape_error("mmd_rbf: bandwidth must be positive");
  const double gamma = 1.0 / (2.0 * bandwidth * bandwidth);
  auto kmean = [&](const std::vector<SignalWindow>& a, const std::vector<SignalWindow>& b) {
    double acc = 0.0;
    for (const auto& wa : a)
      for (const auto& wb : b) acc += std::exp(-gamma * sq_dist(wa.values, wb.values));
    return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };
  return kmean(x, x) + kmean(y, y) - 2.0 * kmean(x, y);
}

double rmse_to_nearest(const std::vector<SignalWindow>& generated,
                       const std::vector<SignalWindow>& real) {
  if (generated.empty() || real.empty()) throw shape_error("rmse_to_nearest: empty set");
  double acc = 0.0;
  for (const auto& g : generated) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : real) best = std::min(best, rmse(g.values, r.values));
    acc += best;
  }
  return acc / static_cast<double>(generated.size());
}

void write_svg_lines(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series,
                     int width, int height) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  double lo = 0.0, hi = 1.0;
  std::size_t max_len = 1;
  bool first = true;
  for (const auto& [name, ys] : series)
    for (double v : ys) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  for (const auto& [name, ys] : series) max_len = std::max(max_len, ys.size());
  if (hi <= lo) hi = lo + 1.0;

  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  out << "  <rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\" stroke=\"#cccccc\"/>\n";
  int color = 0;
  for (const auto& [name, ys] : series) {
    out << "  <polyline fill=\"none\" stroke=\"" << kColors[color % 5]
        << "\" stroke-width=\"1\" data-series=\"" << name << "\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double px = max_len > 1 ? static_cast<double>(i) / static_cast<double>(max_len - 1) *
                                          (width - 20) + 10
                                    : width / 2.0;
      const double py = height - 10 - (ys[i] - lo) / (hi - lo) * (height - 20);
      out << px << "," << py << (i + 1 < ys.size() ? " " : "");
    }
    out << "\"/>\n";
    ++color;
  }
  out << "</svg>\n";
}

void export_report(const std::filesystem::path& out_dir, const MetricReport& report,
                   const GanHistory* gan_losses, const RegressionHistory* reg_losses,
                   const std::vector<SignalWindow>& signals,
                   const std::vector<SignalWindow>* reference) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream metrics(out_dir / "metrics.csv");
    if (!metrics) throw io_error("cannot write " + (out_dir / "metrics.csv").string());
    metrics.precision(17);
    metrics << "metric,value\n";
    metrics << "rmse_to_nearest," << report.rmse_to_nearest << "\n";
    metrics << "mmd_rbf," << report.mmd_rbf << "\n";
    metrics << "mmd_bandwidth," << report.bandwidth << "\n";
    for (const auto& [k, v] : report.loss_summary) metrics << k << "," << v << "\n";
  }

  if (gan_losses) {
    write_gan_csv(out_dir / "losses.csv", *gan_losses);
    std::vector<double> g, d;
    for (const auto& r : gan_losses->rows) {
      g.push_back(r.g_loss);
      d.push_back(r.d_loss);
    }
    write_svg_lines(out_dir / "loss_curves.svg", {{"g_loss", g}, {"d_loss", d}});
  } else if (reg_losses) {
    write_regression_csv(out_dir / "losses.csv", *reg_losses);
    write_svg_lines(out_dir / "loss_curves.svg", {{"loss", reg_losses->epoch_loss}});
  } else {
    write_regression_csv(out_dir / "losses.csv", RegressionHistory{});
    write_svg_lines(out_dir / "loss_curves.svg", {});
  }

  write_dataset(out_dir / "signals", signals, 0, "generated");

  if (reference && !reference->empty() && !signals.empty()) {
    write_svg_lines(out_dir / "overlay.svg", {{"real", reference->front().values},
                                              {"generated", signals.front().values}});
  }
}

}  // namespace odesyn
