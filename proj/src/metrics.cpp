#include "steerbeam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace steerbeam {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double ratio_db(double num, double den) {
  if (num <= 0.0) return -kMetricCapDb;
  if (den <= 0.0) return kMetricCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

}  // namespace

double power_reduction(std::span<const double> y_ref, std::span<const double> t_hat) {
  if (y_ref.size() != t_hat.size()) throw std::invalid_argument("power_reduction: length mismatch");
  const double e_ref = dot(y_ref, y_ref);
  if (e_ref <= 0.0) throw std::invalid_argument("power_reduction: reference has zero energy");
  return ratio_db(e_ref, dot(t_hat, t_hat));
}

double si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw std::invalid_argument("si_sdr: length mismatch");
  const double e_ref = dot(reference, reference);
  if (e_ref <= 0.0) throw std::invalid_argument("si_sdr: reference has zero energy");
  const double alpha = dot(estimate, reference) / e_ref;
  double e_target = 0.0, e_error = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double e = t - estimate[i];
    e_target += t * t;
    e_error += e * e;
  }
  return ratio_db(e_target, e_error);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(acc / static_cast<double>(values.size()));
  return s;
}

nlohmann::json MetricsReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j{{"pr_db", opt(pr_db)},
                   {"delta_pr_db", opt(delta_pr_db)},
                   {"si_sdr_db", opt(si_sdr_db)},
                   {"si_sdr_input_db", opt(si_sdr_input_db)},
                   {"si_sdr_improvement_db", opt(si_sdr_improvement_db)},
                   {"dnsmos", {{"sig", opt(dnsmos_sig)}, {"bak", opt(dnsmos_bak)}, {"ovrl", opt(dnsmos_ovrl)}}}};
  if (rtf) {
    j["rtf"] = {{"mean", rtf->mean}, {"std", rtf->std}, {"count", rtf->count}};
  } else {
    j["rtf"] = nullptr;
  }
  return j;
}

}  // namespace steerbeam
