#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "odesyn/data.hpp"
#include "odesyn/training.hpp"

namespace odesyn {

double rmse(const std::vector<double>& a, const std::vector<double>& b);

// Median of pairwise Euclidean distances over the pooled sample set; falls
// back to 1 when every point coincides.
double median_heuristic_bandwidth(const std::vector<SignalWindow>& x,
                                  const std::vector<SignalWindow>& y);

// Biased-estimator squared maximum mean discrepancy with the RBF kernel
// k(a,b) = exp(-|a-b|^2 / (2 sigma^2)). Non-negative by construction.
double mmd_rbf(const std::vector<SignalWindow>& x, const std::vector<SignalWindow>& y,
               double bandwidth);

// Mean over generated windows of the distance to their closest real window.
double rmse_to_nearest(const std::vector<SignalWindow>& generated,
                       const std::vector<SignalWindow>& real);

struct MetricReport {
  double rmse_to_nearest = 0.0;
  double mmd_rbf = 0.0;
  double bandwidth = 0.0;
  std::map<std::string, double> loss_summary;  // e.g. final g/d losses
};

// Minimal line plot: one polyline per named series inside a single <svg>.
void write_svg_lines(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series,
                     int width = 800, int height = 300);

// Writes metrics.csv, losses.csv (header only when no history is given), the
// generated-signal CSVs + manifest under signals/, and the SVG plots (loss
// curves, plus a real-vs-generated overlay when a reference is available).
void export_report(const std::filesystem::path& out_dir, const MetricReport& report,
                   const GanHistory* gan_losses, const RegressionHistory* reg_losses,
                   const std::vector<SignalWindow>& signals,
                   const std::vector<SignalWindow>* reference = nullptr);

}  // namespace odesyn
