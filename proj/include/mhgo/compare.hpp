#pragma once

// Side-by-side metrics for scenarios that share a plant and horizon.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "mhgo/csv.hpp"
#include "mhgo/error.hpp"
#include "mhgo/scenario.hpp"
#include "mhgo/simulation.hpp"

namespace mhgo {

inline const std::vector<std::string>& default_metric_keys() {
  static const std::vector<std::string> keys{"time_to_band", "rms_tracking", "peak_estimate", "steady_error_sup"};
  return keys;
}

inline double metric_value(const MetricsSummary& m, const std::string& key) {
  if (key == "time_to_band") return m.time_to_band;
  if (key == "rms_tracking") return m.rms_tracking;
  if (key == "peak_estimate") return m.peak_estimate;
  if (key == "steady_error_sup") return m.steady_error_sup;
  throw Error(ErrorKind::invalid_parameter, "unknown metric key: " + key);
}

struct ComparisonRow {
  std::string name;
  std::string estimator;
  MetricsSummary metrics;
};

struct ComparisonTable {
  std::vector<std::string> keys;
  std::vector<ComparisonRow> rows;
  std::vector<std::string> winners;  // per key; empty when no row qualifies
};

inline void check_comparable(const std::vector<Scenario>& scenarios) {
  if (scenarios.empty()) throw Error(ErrorKind::invalid_comparison, "nothing to compare");
  const Scenario& ref = scenarios.front();
  for (const Scenario& sc : scenarios) {
    const PlantConfig& a = ref.plant;
    const PlantConfig& b = sc.plant;
    bool same = a.kind == b.kind && a.x0 == b.x0 && sc.horizon == ref.horizon;
    if (same && a.kind == PlantKind::underwater_vehicle) same = a.a == b.a;
    if (same && a.kind == PlantKind::integrator_chain) same = a.n == b.n;
    if (same && a.kind == PlantKind::coupled_pendulums) {
      const PendulumParams& p = a.pendulum;
      const PendulumParams& q = b.pendulum;
      same = p.m == q.m && p.M == q.M && p.a == q.a && p.l == q.l && p.k == q.k && p.g == q.g;
    }
    if (!same)
      throw Error(ErrorKind::invalid_comparison,
                  "scenario '" + sc.name + "' does not share the plant and horizon of '" + ref.name + "'");
  }
}

inline ComparisonTable tabulate(std::vector<ComparisonRow> rows, std::vector<std::string> keys) {
  ComparisonTable t;
  t.keys = std::move(keys);
  t.rows = std::move(rows);
  for (const auto& key : t.keys) {
    std::string best;
    double best_v = 0.0;
    for (const auto& r : t.rows) {
      if (r.metrics.diverged) continue;
      const double v = metric_value(r.metrics, key);
      if (!std::isfinite(v)) continue;
      if (best.empty() || v < best_v) {
        best = r.name;
        best_v = v;
      }
    }
    t.winners.push_back(best);
  }
  return t;
}

// Runs each scenario as an independent job; rows keep the input order.
inline ComparisonTable compare(const std::vector<Scenario>& scenarios,
                               std::vector<std::string> keys = default_metric_keys(),
                               const std::function<void(const Scenario&, const RunResult&)>& on_done = {}) {
  check_comparable(scenarios);
  for (const auto& k : keys) (void)metric_value(MetricsSummary{}, k);
  std::vector<std::future<RunResult>> jobs;
  for (const Scenario& sc : scenarios) jobs.push_back(std::async(std::launch::async, [&sc] { return run(sc); }));
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    RunResult r = jobs[i].get();
    if (on_done) on_done(scenarios[i], r);
    rows.push_back({scenarios[i].name, std::string(to_string(scenarios[i].estimator.kind)), r.metrics});
  }
  return tabulate(std::move(rows), std::move(keys));
}

inline std::string comparison_csv(const ComparisonTable& t) {
  std::ostringstream os;
  os << "scenario,estimator,diverged";
  for (const auto& k : t.keys) os << "," << k;
  os << "\n";
  for (const auto& r : t.rows) {
    os << r.name << "," << r.estimator << "," << (r.metrics.diverged ? 1 : 0);
    for (const auto& k : t.keys) os << "," << format_number(metric_value(r.metrics, k));
    os << "\n";
  }
  os << "winner,,";
  for (const auto& w : t.winners) os << "," << w;
  os << "\n";
  return os.str();
}

inline std::string comparison_text(const ComparisonTable& t) {
  std::ostringstream os;
  std::size_t width = 10;
  for (const auto& r : t.rows) width = std::max(width, r.name.size() + 2);
  for (const auto& k : t.keys) width = std::max(width, k.size() + 2);
  auto pad = [width](const std::string& s) { return s + std::string(width > s.size() ? width - s.size() : 1, ' '); };
  os << pad("scenario");
  for (const auto& k : t.keys) os << pad(k);
  os << "\n";
  for (const auto& r : t.rows) {
    os << pad(r.name);
    for (const auto& k : t.keys) os << pad(r.metrics.diverged ? "diverged" : format_number(metric_value(r.metrics, k)));
    os << "\n";
  }
  os << "\nwinners (smaller is better):\n";
  for (std::size_t i = 0; i < t.keys.size(); ++i)
    os << "  " << t.keys[i] << ": " << (t.winners[i].empty() ? "none" : t.winners[i]) << "\n";
  return os.str();
}

}  // namespace mhgo
