// mhgo: run observer/controller experiments described by TOML scenarios.
//
//   mhgo simulate --scenario <file> --out <dir> [--seed <u64>] [--stride <k>]
//   mhgo compare --scenarios <files...> --out <dir>
//   mhgo analyze bounds --scenario <file>
//   mhgo list-scenarios
//
// Exit codes: 0 success, 2 validation, 3 divergence, 4 I/O.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mhgo/mhgo.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kDivergence = 3;
constexpr int kIo = 4;

int exit_code(mhgo::ErrorKind k) {
  using mhgo::ErrorKind;
  switch (k) {
    case ErrorKind::io: return kIo;
    case ErrorKind::divergence:
    case ErrorKind::numerical:
    case ErrorKind::conditioning:
    case ErrorKind::no_solution: return kDivergence;
    default: return kValidation;
  }
}

fs::path scenario_dir() {
  if (const char* env = std::getenv("MHGO_SCENARIO_DIR")) return env;
#ifdef MHGO_SCENARIO_DIR
  return MHGO_SCENARIO_DIR;
#else
  return "scenarios";
#endif
}

// A bare name resolves to a bundled scenario.
fs::path resolve_scenario(const std::string& arg) {
  fs::path p(arg);
  std::error_code ec;
  if (fs::exists(p, ec)) return p;
  fs::path bundled = scenario_dir() / (arg + ".toml");
  if (p.extension().empty() && fs::exists(bundled, ec)) return bundled;
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw mhgo::Error(mhgo::ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) throw mhgo::Error(mhgo::ErrorKind::io, "write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw mhgo::Error(mhgo::ErrorKind::io, "cannot create output directory " + dir.string());
}

int cmd_simulate(const std::string& scenario_arg, const fs::path& out_dir, const std::optional<std::uint64_t>& seed,
                 const std::optional<std::size_t>& stride) {
  mhgo::Scenario sc = mhgo::load_scenario(resolve_scenario(scenario_arg));
  if (seed) sc.noise.seed = *seed;
  if (stride) {
    if (*stride < 1) throw mhgo::Error(mhgo::ErrorKind::validation, "--stride: must be at least 1");
    sc.output.stride = *stride;
  }
  ensure_dir(out_dir);
  write_text(out_dir / (sc.name + "_resolved.toml"), mhgo::resolved_toml(sc));

  const mhgo::ClosedLoop layout_probe = mhgo::build_closed_loop(sc);
  mhgo::CsvWriter csv(out_dir / (sc.name + ".csv"), mhgo::csv_columns(layout_probe));
  mhgo::RunOptions opt;
  opt.keep_records = false;
  opt.sink = [&csv](const mhgo::TrajectoryRecord& r) { csv.write(r); };

  const auto t0 = std::chrono::steady_clock::now();
  const mhgo::RunResult res = mhgo::run(sc, opt);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  csv.finish(res.metrics);

  const std::string summary = mhgo::summary_text(sc, res.metrics);
  write_text(out_dir / (sc.name + "_summary.txt"), summary);
  std::cout << summary << "wall time: " << mhgo::format_number(std::round(wall * 1000.0) / 1000.0) << " s\n";
  return res.metrics.diverged ? kDivergence : kOk;
}

int cmd_compare(const std::vector<std::string>& files, const fs::path& out_dir) {
  std::vector<mhgo::Scenario> scenarios;
  for (const auto& f : files) scenarios.push_back(mhgo::load_scenario(resolve_scenario(f)));
  mhgo::check_comparable(scenarios);
  ensure_dir(out_dir);
  bool diverged = false;
  const mhgo::ComparisonTable t =
      mhgo::compare(scenarios, mhgo::default_metric_keys(), [&](const mhgo::Scenario& sc, const mhgo::RunResult& r) {
        diverged = diverged || r.metrics.diverged;
        const mhgo::ClosedLoop probe = mhgo::build_closed_loop(sc);
        mhgo::emit_csv(r.records, mhgo::csv_columns(probe), r.metrics, out_dir / (sc.name + ".csv"));
        write_text(out_dir / (sc.name + "_summary.txt"), mhgo::summary_text(sc, r.metrics));
      });
  write_text(out_dir / "comparison.csv", mhgo::comparison_csv(t));
  const std::string text = mhgo::comparison_text(t);
  write_text(out_dir / "comparison.txt", text);
  std::cout << text;
  return diverged ? kDivergence : kOk;
}

int cmd_analyze(const std::string& scenario_arg) {
  const mhgo::Scenario sc = mhgo::load_scenario(resolve_scenario(scenario_arg));
  std::cout << mhgo::bounds_text(sc, mhgo::bounds_report(sc));
  return kOk;
}

int cmd_list() {
  const fs::path dir = scenario_dir();
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw mhgo::Error(mhgo::ErrorKind::io, "scenario directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".toml") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const mhgo::Scenario sc = mhgo::load_scenario(f);
    std::cout << sc.name << "  " << sc.description << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple high-gain observer experiments"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> stride;
  auto* sim = app.add_subcommand("simulate", "Run one scenario and write CSV + summary");
  sim->add_option("--scenario", scenario, "Scenario TOML file or bundled name")->required();
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--seed", seed, "Noise seed override");
  sim->add_option("--stride", stride, "Record every k-th macro step");

  std::vector<std::string> files;
  auto* cmp = app.add_subcommand("compare", "Run several scenarios and tabulate metrics");
  cmp->add_option("--scenarios", files, "Scenario files")->required();
  cmp->add_option("--out", out_dir, "Output directory")->required();

  auto* ana = app.add_subcommand("analyze", "Closed-form quantities");
  ana->require_subcommand(1);
  auto* bnd = ana->add_subcommand("bounds", "Trade-off function, minimiser, noise level and ultimate bounds");
  bnd->add_option("--scenario", scenario, "Scenario TOML file or bundled name")->required();

  auto* lst = app.add_subcommand("list-scenarios", "List bundled scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*sim) return cmd_simulate(scenario, out_dir, seed, stride);
    if (*cmp) return cmd_compare(files, out_dir);
    if (*bnd) return cmd_analyze(scenario);
    if (*lst) return cmd_list();
  } catch (const mhgo::DivergenceError& e) {
    std::cerr << "error: diverged at t=" << mhgo::format_number(e.time()) << "\n";
    return kDivergence;
  } catch (const mhgo::Error& e) {
    std::cerr << "error (" << mhgo::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kValidation;
}
