#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace steerbeam {

inline constexpr double kMetricCapDb = 100.0;

// 10 log10(||y_ref||^2 / ||t_hat||^2); positive means suppression.
// Throws on unequal lengths or a silent reference; a silent estimate gives +100 dB.
double power_reduction(std::span<const double> y_ref, std::span<const double> t_hat);

// Scale-invariant SDR with alpha = <est, ref> / ||ref||^2, clamped to +/-100 dB.
// A silent estimate scores -100 dB.
double si_sdr(std::span<const double> estimate, std::span<const double> reference);

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};
Summary summarize(std::span<const double> values);

// Aggregated evaluation results. Improvement fields are processed minus unprocessed.
struct MetricsReport {
  std::optional<double> pr_db;
  std::optional<double> delta_pr_db;
  std::optional<double> si_sdr_db;
  std::optional<double> si_sdr_input_db;
  std::optional<double> si_sdr_improvement_db;
  std::optional<Summary> rtf;
  // Reserved for externally computed perceptual scores.
  std::optional<double> dnsmos_sig, dnsmos_bak, dnsmos_ovrl;

  nlohmann::json to_json() const;
};

}  // namespace steerbeam
