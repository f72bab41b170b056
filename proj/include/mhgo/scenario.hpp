#pragma once

// Declarative experiment description loaded from TOML.
//
//   name = "example1_mhgo"
//   horizon = 20.0
//   dt = 1e-4
//   [plant]      kind, x0, model parameters
//   [controller] kind, saturation, literal_signs
//   [noise]      bound, sample_period, seed
//   [estimator]  kind and its parameters
//   [output]     stride, band, window_start
//   [analysis]   h_bar, l3
//
// Unknown keys, and keys that the selected kind does not use, are errors.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <toml.hpp>

#include "mhgo/closed_loop.hpp"
#include "mhgo/control.hpp"
#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"
#include "mhgo/observers.hpp"
#include "mhgo/plant.hpp"

namespace mhgo {

enum class PlantKind { underwater_vehicle, coupled_pendulums, integrator_chain };
enum class EstimatorKind { state_feedback, hgo, switching_hgo, multi_observer, mhgo };
enum class ControllerKind { tracking, zero };

inline std::string_view to_string(PlantKind k) {
  switch (k) {
    case PlantKind::underwater_vehicle: return "underwater_vehicle";
    case PlantKind::coupled_pendulums: return "coupled_pendulums";
    case PlantKind::integrator_chain: return "integrator_chain";
  }
  return "?";
}

inline std::string_view to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::state_feedback: return "state-feedback";
    case EstimatorKind::hgo: return "hgo";
    case EstimatorKind::switching_hgo: return "switching-hgo";
    case EstimatorKind::multi_observer: return "multi-observer";
    case EstimatorKind::mhgo: return "mhgo";
  }
  return "?";
}

inline std::string_view to_string(ControllerKind k) { return k == ControllerKind::tracking ? "tracking" : "zero"; }

struct PlantConfig {
  PlantKind kind = PlantKind::underwater_vehicle;
  double a = 1.0;       // underwater drag coefficient
  std::size_t n = 2;    // integrator chain order
  PendulumParams pendulum;
  Vec x0;

  std::size_t channels() const { return kind == PlantKind::coupled_pendulums ? 2 : 1; }
  std::size_t channel_dim() const { return kind == PlantKind::integrator_chain ? n : 2; }
};

struct ControllerConfig {
  ControllerKind kind = ControllerKind::tracking;
  double saturation = 500.0;
  bool literal_signs = false;
};

struct InitsGrid {
  Vec lower;
  Vec upper;
  std::size_t points = 0;  // per axis
};

// First axis ascending in the outer loop, later axes descending in inner
// loops, so the last point is (upper_1, lower_2, ..., lower_n).
inline std::vector<Vec> grid_points(const InitsGrid& g) {
  const std::size_t n = g.lower.size();
  if (n == 0 || g.upper.size() != n) throw Error(ErrorKind::invalid_dimension, "grid bounds dimension");
  if (g.points < 2) throw Error(ErrorKind::invalid_parameter, "grid needs at least 2 points per axis");
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= g.points;
  std::vector<Vec> out;
  out.reserve(total);
  std::vector<std::size_t> idx(n, 0);
  const double m = static_cast<double>(g.points - 1);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    for (std::size_t i = n; i-- > 0;) {
      idx[i] = rem % g.points;
      rem /= g.points;
    }
    Vec p(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = static_cast<double>(i == 0 ? idx[i] : g.points - 1 - idx[i]) / m;
      p[i] = g.lower[i] + s * (g.upper[i] - g.lower[i]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::hgo;
  ObserverGainProfile profile{{2.0, 1.0}, 0.15};
  Vec init;                         // hgo, switching-hgo
  std::vector<Vec> inits;           // multi-observer, mhgo
  std::optional<InitsGrid> grid;    // source of `inits` when given as a grid
  ObserverGainProfile fast{{71.0, 70.0}, 1e-3};
  double t_switch = 0.1;
  double gamma = 1e3;
  std::string beta0_mode = "equal";  // equal | last | explicit
  Vec beta0;
  std::string weights_mode = "rls";  // rls | convex | explicit
  Vec frozen_weights;
  double alpha = 0.1;
  std::size_t sigma0 = 0;            // 1-based in files, 0-based here
  bool nominal_model = false;
};

struct NoiseConfig {
  double bound = 0.0;
  double sample_period = 1e-4;
  std::uint64_t seed = 1;
};

struct OutputConfig {
  std::size_t stride = 10;
  double band = 0.2;
  double window_start = 10.0;
};

struct AnalysisConfig {
  std::optional<double> h_bar;
  std::optional<double> l3;
};

struct Scenario {
  std::string name;
  std::string description;
  double horizon = 20.0;
  double dt = 1e-4;
  PlantConfig plant;
  ControllerConfig controller;
  NoiseConfig noise;
  EstimatorConfig estimator;
  OutputConfig output;
  AnalysisConfig analysis;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string where(const toml::node& n) {
  const auto& src = n.source();
  std::ostringstream os;
  if (src.path) os << *src.path << ":";
  os << src.begin.line << ":" << src.begin.column;
  return os.str();
}

[[noreturn]] inline void field_error(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::validation, field + ": " + msg);
}

class TableReader {
 public:
  TableReader(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

  std::string field(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
  bool has(std::string_view key) const { return t_.contains(key); }

  const toml::node* node(std::string_view key) {
    used_.insert(std::string(key));
    return t_.get(key);
  }

  double number(std::string_view key, std::optional<double> def = std::nullopt) {
    const toml::node* n = node(key);
    if (!n) {
      if (def) return *def;
      field_error(field(key), "required");
    }
    return as_number(*n, field(key));
  }

  std::optional<double> opt_number(std::string_view key) {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    return as_number(*n, field(key));
  }

  std::int64_t integer(std::string_view key, std::int64_t def) {
    const toml::node* n = node(key);
    if (!n) return def;
    if (!n->is_integer()) field_error(field(key), "expected an integer (" + where(*n) + ")");
    return n->as_integer()->get();
  }

  bool boolean(std::string_view key, bool def) {
    const toml::node* n = node(key);
    if (!n) return def;
    if (!n->is_boolean()) field_error(field(key), "expected true or false (" + where(*n) + ")");
    return n->as_boolean()->get();
  }

  std::string string(std::string_view key, std::optional<std::string> def = std::nullopt) {
    const toml::node* n = node(key);
    if (!n) {
      if (def) return *def;
      field_error(field(key), "required");
    }
    if (!n->is_string()) field_error(field(key), "expected a string (" + where(*n) + ")");
    return n->as_string()->get();
  }

  Vec vector(std::string_view key) {
    const toml::node* n = node(key);
    if (!n) field_error(field(key), "required");
    return as_vector(*n, field(key));
  }

  std::vector<Vec> matrix(std::string_view key) {
    const toml::node* n = node(key);
    if (!n) field_error(field(key), "required");
    const toml::array* arr = n->as_array();
    if (!arr) field_error(field(key), "expected an array of arrays (" + where(*n) + ")");
    std::vector<Vec> out;
    for (std::size_t i = 0; i < arr->size(); ++i)
      out.push_back(as_vector(*arr->get(i), field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  const toml::table* table(std::string_view key) {
    const toml::node* n = node(key);
    if (!n) return nullptr;
    if (!n->is_table()) field_error(field(key), "expected a table (" + where(*n) + ")");
    return n->as_table();
  }

  void finish() const {
    for (const auto& [k, v] : t_) {
      if (!used_.count(std::string(k.str())))
        field_error(field(k.str()), "unknown key, or not used by the selected kind (" + where(v) + ")");
    }
  }

  static double as_number(const toml::node& n, const std::string& field) {
    if (n.is_floating_point()) return n.as_floating_point()->get();
    if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
    field_error(field, "expected a number (" + where(n) + ")");
  }

  static Vec as_vector(const toml::node& n, const std::string& field) {
    const toml::array* arr = n.as_array();
    if (!arr) field_error(field, "expected an array of numbers (" + where(n) + ")");
    Vec v;
    for (std::size_t i = 0; i < arr->size(); ++i) v.push_back(as_number(*arr->get(i), field + "[" + std::to_string(i) + "]"));
    return v;
  }

 private:
  const toml::table& t_;
  std::string path_;
  std::set<std::string> used_;
};

inline void require_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) field_error(field, "must be positive");
}

inline void require_finite(const Vec& v, const std::string& field) {
  if (!all_finite(v)) field_error(field, "entries must be finite");
}

inline void parse_plant(TableReader& r, Scenario& sc) {
  PlantConfig& p = sc.plant;
  const std::string kind = r.string("kind");
  if (kind == "underwater_vehicle") {
    p.kind = PlantKind::underwater_vehicle;
    p.a = r.number("a", 1.0);
    require_positive(p.a, r.field("a"));
  } else if (kind == "coupled_pendulums") {
    p.kind = PlantKind::coupled_pendulums;
    PendulumParams& q = p.pendulum;
    q.m = r.number("m", q.m);
    q.M = r.number("M", q.M);
    q.a = r.number("a", q.a);
    q.l = r.number("l", q.l);
    q.k = r.number("k", q.k);
    q.g = r.number("g", q.g);
    const std::pair<const char*, double> fields[] = {{"m", q.m}, {"M", q.M}, {"a", q.a}, {"l", q.l}, {"k", q.k}, {"g", q.g}};
    for (const auto& [f, v] : fields) require_positive(v, r.field(f));
  } else if (kind == "integrator_chain") {
    p.kind = PlantKind::integrator_chain;
    const std::int64_t n = r.integer("n", 2);
    if (n < 1) field_error(r.field("n"), "must be at least 1");
    p.n = static_cast<std::size_t>(n);
  } else {
    field_error(r.field("kind"), "expected underwater_vehicle, coupled_pendulums or integrator_chain");
  }
  p.x0 = r.vector("x0");
  require_finite(p.x0, r.field("x0"));
  if (p.x0.size() != p.channels() * p.channel_dim())
    field_error(r.field("x0"), "expected " + std::to_string(p.channels() * p.channel_dim()) + " entries");
  r.finish();
}

inline void parse_controller(TableReader* r, Scenario& sc) {
  ControllerConfig& c = sc.controller;
  const bool chain = sc.plant.kind == PlantKind::integrator_chain;
  c.kind = chain ? ControllerKind::zero : ControllerKind::tracking;
  c.saturation = sc.plant.kind == PlantKind::coupled_pendulums ? 50.0 : 500.0;
  if (!r) return;
  const std::string kind = r->string("kind", std::string(to_string(c.kind)));
  if (kind == "zero") {
    c.kind = ControllerKind::zero;
  } else if (kind == "tracking") {
    if (chain) field_error(r->field("kind"), "integrator_chain has no tracking law");
    c.kind = ControllerKind::tracking;
  } else {
    field_error(r->field("kind"), "expected tracking or zero");
  }
  c.saturation = r->number("saturation", c.saturation);
  require_positive(c.saturation, r->field("saturation"));
  if (sc.plant.kind == PlantKind::underwater_vehicle) c.literal_signs = r->boolean("literal_signs", false);
  r->finish();
}

inline ObserverGainProfile parse_profile(TableReader& r, std::string_view kappa_key, std::string_view eps_key,
                                         ObserverGainProfile def) {
  ObserverGainProfile p = def;
  if (r.has(kappa_key)) p.kappa = r.vector(kappa_key);
  p.eps = r.number(eps_key, def.eps);
  try {
    p.validate();
  } catch (const Error& e) {
    field_error(r.field(kappa_key) + "/" + std::string(eps_key), e.what());
  }
  return p;
}

inline void check_inits(const std::vector<Vec>& inits, std::size_t n, const std::string& field) {
  for (std::size_t i = 0; i < inits.size(); ++i) {
    if (inits[i].size() != n)
      field_error(field + "[" + std::to_string(i) + "]", "expected " + std::to_string(n) + " entries");
    require_finite(inits[i], field);
  }
}

inline void parse_estimator(TableReader& r, Scenario& sc) {
  EstimatorConfig& e = sc.estimator;
  const std::size_t n = sc.plant.channel_dim();
  const std::string kind = r.string("kind");
  if (kind == "state-feedback") e.kind = EstimatorKind::state_feedback;
  else if (kind == "hgo") e.kind = EstimatorKind::hgo;
  else if (kind == "switching-hgo") e.kind = EstimatorKind::switching_hgo;
  else if (kind == "multi-observer") e.kind = EstimatorKind::multi_observer;
  else if (kind == "mhgo") e.kind = EstimatorKind::mhgo;
  else field_error(r.field("kind"), "expected state-feedback, hgo, switching-hgo, multi-observer or mhgo");

  if (e.kind == EstimatorKind::state_feedback) {
    r.finish();
    return;
  }

  const ObserverGainProfile def{Vec(n, 0.0), 0.15};
  if (e.kind == EstimatorKind::switching_hgo) {
    e.fast = parse_profile(r, "fast_kappa", "fast_eps", n == 2 ? e.fast : def);
    e.profile = parse_profile(r, "kappa", "eps", ObserverGainProfile{n == 2 ? Vec{2.0, 1.0} : Vec(n, 0.0), 0.15});
    e.t_switch = r.number("t_switch", 0.1);
    if (!(e.t_switch >= 0.0)) field_error(r.field("t_switch"), "must be non-negative");
    if (e.fast.n() != n) field_error(r.field("fast_kappa"), "expected " + std::to_string(n) + " entries");
  } else {
    e.profile = parse_profile(r, "kappa", "eps", ObserverGainProfile{n == 2 ? Vec{2.0, 1.0} : Vec(n, 0.0), 0.15});
  }
  if (e.profile.n() != n) field_error(r.field("kappa"), "expected " + std::to_string(n) + " entries");

  if (e.kind == EstimatorKind::hgo || e.kind == EstimatorKind::switching_hgo) {
    e.init = r.vector("init");
    check_inits({e.init}, n, r.field("init"));
    if (e.kind == EstimatorKind::hgo && sc.plant.channels() == 1) e.nominal_model = r.boolean("nominal_model", false);
    r.finish();
    return;
  }

  // Banks
  if (r.has("inits") && r.has("inits_grid")) field_error(r.field("inits"), "give either inits or inits_grid");
  if (r.has("inits_grid")) {
    const toml::table* gt = r.table("inits_grid");
    TableReader g(*gt, r.field("inits_grid"));
    InitsGrid grid;
    grid.lower = g.vector("lower");
    grid.upper = g.vector("upper");
    const std::int64_t pts = g.integer("points", 0);
    if (pts < 2) field_error(g.field("points"), "must be at least 2");
    grid.points = static_cast<std::size_t>(pts);
    g.finish();
    if (grid.lower.size() != n || grid.upper.size() != n)
      field_error(r.field("inits_grid"), "bounds must have " + std::to_string(n) + " entries");
    e.grid = grid;
    e.inits = grid_points(grid);
  } else {
    e.inits = r.matrix("inits");
  }
  check_inits(e.inits, n, r.field("inits"));
  const std::size_t N = e.inits.size();

  if (e.kind == EstimatorKind::multi_observer) {
    if (N < 1) field_error(r.field("inits"), "at least one observer required");
    e.alpha = r.number("alpha", 0.1);
    require_positive(e.alpha, r.field("alpha"));
    const std::int64_t s0 = r.integer("sigma0", static_cast<std::int64_t>(N));
    if (s0 < 1 || static_cast<std::size_t>(s0) > N) field_error(r.field("sigma0"), "must lie in 1..N");
    e.sigma0 = static_cast<std::size_t>(s0 - 1);
    r.finish();
    return;
  }

  // MHGO
  if (N < n + 1) field_error(r.field("inits"), "N \xE2\x89\xA5 n+1 required");
  if (sc.plant.channels() == 1) e.nominal_model = r.boolean("nominal_model", false);

  const toml::node* fw = r.node("frozen_weights");
  if (fw) {
    if (fw->is_string()) {
      if (fw->as_string()->get() != "convex") field_error(r.field("frozen_weights"), "expected \"convex\" or an array");
      e.weights_mode = "convex";
    } else {
      e.weights_mode = "explicit";
      e.frozen_weights = TableReader::as_vector(*fw, r.field("frozen_weights"));
      if (e.frozen_weights.size() != N) field_error(r.field("frozen_weights"), "expected N entries");
      require_finite(e.frozen_weights, r.field("frozen_weights"));
    }
    r.finish();
    return;
  }

  e.weights_mode = "rls";
  e.gamma = r.number("gamma", 1e3);
  require_positive(e.gamma, r.field("gamma"));
  const toml::node* b = r.node("beta0");
  if (!b) {
    e.beta0_mode = "equal";
  } else if (b->is_string()) {
    const std::string m = b->as_string()->get();
    if (m != "equal" && m != "last") field_error(r.field("beta0"), "expected \"equal\", \"last\" or an array");
    e.beta0_mode = m;
  } else {
    e.beta0_mode = "explicit";
    e.beta0 = TableReader::as_vector(*b, r.field("beta0"));
    if (e.beta0.size() != N - 1) field_error(r.field("beta0"), "expected N-1 entries");
    require_finite(e.beta0, r.field("beta0"));
  }
  if (e.beta0_mode == "equal") e.beta0.assign(N - 1, 1.0 / static_cast<double>(N));
  if (e.beta0_mode == "last") e.beta0.assign(N - 1, 0.0);
  r.finish();
}

}  // namespace detail

inline Scenario parse_scenario(const toml::table& root) {
  using detail::field_error;
  Scenario sc;
  detail::TableReader r(root, "");
  sc.name = r.string("name");
  if (sc.name.empty()) field_error("name", "must not be empty");
  sc.description = r.string("description", "");
  sc.horizon = r.number("horizon", 20.0);
  detail::require_positive(sc.horizon, "horizon");
  sc.dt = r.number("dt", 1e-4);
  detail::require_positive(sc.dt, "dt");
  if (sc.dt > sc.horizon) field_error("dt", "must not exceed the horizon");

  const toml::table* pt = r.table("plant");
  if (!pt) field_error("plant", "required");
  {
    detail::TableReader pr(*pt, "plant");
    detail::parse_plant(pr, sc);
  }
  {
    const toml::table* ct = r.table("controller");
    if (ct) {
      detail::TableReader cr(*ct, "controller");
      detail::parse_controller(&cr, sc);
    } else {
      detail::parse_controller(nullptr, sc);
    }
  }
  if (const toml::table* nt = r.table("noise")) {
    detail::TableReader nr(*nt, "noise");
    sc.noise.bound = nr.number("bound", 0.0);
    if (!(sc.noise.bound >= 0.0) || !std::isfinite(sc.noise.bound)) field_error("noise.bound", "must be non-negative");
    sc.noise.sample_period = nr.number("sample_period", 1e-4);
    detail::require_positive(sc.noise.sample_period, "noise.sample_period");
    const std::int64_t seed = nr.integer("seed", 1);
    if (seed < 0) field_error("noise.seed", "must be non-negative");
    sc.noise.seed = static_cast<std::uint64_t>(seed);
    nr.finish();
  }
  const toml::table* et = r.table("estimator");
  if (!et) field_error("estimator", "required");
  {
    detail::TableReader er(*et, "estimator");
    detail::parse_estimator(er, sc);
  }
  sc.output.window_start = 0.5 * sc.horizon;
  if (const toml::table* ot = r.table("output")) {
    detail::TableReader orr(*ot, "output");
    const std::int64_t stride = orr.integer("stride", 10);
    if (stride < 1) field_error("output.stride", "must be at least 1");
    sc.output.stride = static_cast<std::size_t>(stride);
    sc.output.band = orr.number("band", 0.2);
    detail::require_positive(sc.output.band, "output.band");
    sc.output.window_start = orr.number("window_start", sc.output.window_start);
    if (!(sc.output.window_start >= 0.0 && sc.output.window_start < sc.horizon))
      field_error("output.window_start", "must lie in [0, horizon)");
    orr.finish();
  }
  if (const toml::table* at = r.table("analysis")) {
    detail::TableReader ar(*at, "analysis");
    sc.analysis.h_bar = ar.opt_number("h_bar");
    if (sc.analysis.h_bar) detail::require_positive(*sc.analysis.h_bar, "analysis.h_bar");
    sc.analysis.l3 = ar.opt_number("l3");
    if (sc.analysis.l3 && !(*sc.analysis.l3 >= 1.0)) field_error("analysis.l3", "must be at least 1");
    ar.finish();
  }
  r.finish();
  return sc;
}

inline Scenario parse_scenario_string(std::string_view text, std::string_view source = "<string>") {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw Error(ErrorKind::parse, os.str());
  }
  return parse_scenario(root);
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorKind::io, "cannot open scenario file: " + path.string());
  toml::table root;
  try {
    root = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << path.string() << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw Error(ErrorKind::parse, os.str());
  }
  return parse_scenario(root);
}

// ---------------------------------------------------------------------------
// Echo with every default filled in.

inline toml::array to_toml_array(const Vec& v) {
  toml::array a;
  for (double x : v) a.push_back(x);
  return a;
}

inline std::string resolved_toml(const Scenario& sc) {
  toml::table root;
  root.insert("name", sc.name);
  if (!sc.description.empty()) root.insert("description", sc.description);
  root.insert("horizon", sc.horizon);
  root.insert("dt", sc.dt);

  toml::table plant;
  plant.insert("kind", std::string(to_string(sc.plant.kind)));
  switch (sc.plant.kind) {
    case PlantKind::underwater_vehicle: plant.insert("a", sc.plant.a); break;
    case PlantKind::coupled_pendulums: {
      const PendulumParams& q = sc.plant.pendulum;
      plant.insert("m", q.m);
      plant.insert("M", q.M);
      plant.insert("a", q.a);
      plant.insert("l", q.l);
      plant.insert("k", q.k);
      plant.insert("g", q.g);
      break;
    }
    case PlantKind::integrator_chain: plant.insert("n", static_cast<std::int64_t>(sc.plant.n)); break;
  }
  plant.insert("x0", to_toml_array(sc.plant.x0));
  root.insert("plant", plant);

  toml::table ctrl;
  ctrl.insert("kind", std::string(to_string(sc.controller.kind)));
  ctrl.insert("saturation", sc.controller.saturation);
  if (sc.plant.kind == PlantKind::underwater_vehicle) ctrl.insert("literal_signs", sc.controller.literal_signs);
  root.insert("controller", ctrl);

  toml::table noise;
  noise.insert("bound", sc.noise.bound);
  noise.insert("sample_period", sc.noise.sample_period);
  noise.insert("seed", static_cast<std::int64_t>(sc.noise.seed));
  root.insert("noise", noise);

  const EstimatorConfig& e = sc.estimator;
  toml::table est;
  est.insert("kind", std::string(to_string(e.kind)));
  if (e.kind != EstimatorKind::state_feedback) {
    est.insert("kappa", to_toml_array(e.profile.kappa));
    est.insert("eps", e.profile.eps);
  }
  switch (e.kind) {
    case EstimatorKind::state_feedback: break;
    case EstimatorKind::hgo:
      est.insert("init", to_toml_array(e.init));
      if (sc.plant.channels() == 1) est.insert("nominal_model", e.nominal_model);
      break;
    case EstimatorKind::switching_hgo:
      est.insert("fast_kappa", to_toml_array(e.fast.kappa));
      est.insert("fast_eps", e.fast.eps);
      est.insert("t_switch", e.t_switch);
      est.insert("init", to_toml_array(e.init));
      break;
    case EstimatorKind::multi_observer:
    case EstimatorKind::mhgo: {
      if (e.grid) {
        toml::table g;
        g.insert("lower", to_toml_array(e.grid->lower));
        g.insert("upper", to_toml_array(e.grid->upper));
        g.insert("points", static_cast<std::int64_t>(e.grid->points));
        est.insert("inits_grid", g);
      } else {
        toml::array a;
        for (const Vec& v : e.inits) a.push_back(to_toml_array(v));
        est.insert("inits", a);
      }
      if (e.kind == EstimatorKind::multi_observer) {
        est.insert("alpha", e.alpha);
        est.insert("sigma0", static_cast<std::int64_t>(e.sigma0 + 1));
      } else {
        if (sc.plant.channels() == 1) est.insert("nominal_model", e.nominal_model);
        if (e.weights_mode == "rls") {
          est.insert("gamma", e.gamma);
          est.insert("beta0", to_toml_array(e.beta0));
        } else if (e.weights_mode == "convex") {
          est.insert("frozen_weights", "convex");
        } else {
          est.insert("frozen_weights", to_toml_array(e.frozen_weights));
        }
      }
      break;
    }
  }
  root.insert("estimator", est);

  toml::table out;
  out.insert("stride", static_cast<std::int64_t>(sc.output.stride));
  out.insert("band", sc.output.band);
  out.insert("window_start", sc.output.window_start);
  root.insert("output", out);

  if (sc.analysis.h_bar || sc.analysis.l3) {
    toml::table an;
    if (sc.analysis.h_bar) an.insert("h_bar", *sc.analysis.h_bar);
    if (sc.analysis.l3) an.insert("l3", *sc.analysis.l3);
    root.insert("analysis", an);
  }
  std::ostringstream os;
  os << root << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Assembly

inline Plant build_plant(const Scenario& sc) {
  switch (sc.plant.kind) {
    case PlantKind::underwater_vehicle:
      return Plant::single(underwater_vehicle(sc.plant.a, 5.0, sc.controller.saturation));
    case PlantKind::coupled_pendulums: return coupled_pendulums(sc.plant.pendulum, sc.controller.saturation);
    case PlantKind::integrator_chain: return Plant::single(integrator_chain(sc.plant.n));
  }
  throw Error(ErrorKind::invalid_input, "unknown plant kind");
}

inline ControllerSpec build_controller(const Scenario& sc) {
  if (sc.controller.kind == ControllerKind::zero) {
    ControllerSpec c = zero_controller(sc.plant.channels());
    c.saturation = sc.controller.saturation;
    return c;
  }
  if (sc.plant.kind == PlantKind::underwater_vehicle) {
    UnderwaterControllerOptions opt;
    opt.a = sc.plant.a;
    opt.saturation = sc.controller.saturation;
    opt.literal_signs = sc.controller.literal_signs;
    return underwater_tracking(opt);
  }
  if (sc.plant.kind == PlantKind::coupled_pendulums) return pendulum_tracking(sc.plant.pendulum, sc.controller.saturation);
  throw Error(ErrorKind::validation, "controller.kind: no tracking law for this plant");
}

// Frozen weights for channel k, solving for the convex combination of the
// bank inits that reproduces x(0) when requested.
inline Vec resolved_frozen_weights(const Scenario& sc, std::size_t k) {
  const EstimatorConfig& e = sc.estimator;
  if (e.weights_mode == "explicit") return e.frozen_weights;
  const std::size_t n = sc.plant.channel_dim();
  const std::span<const double> x0 = std::span<const double>(sc.plant.x0).subspan(k * n, n);
  const std::optional<Vec> w = convex_weights(e.inits, x0);
  if (!w) throw Error(ErrorKind::validation, "estimator.frozen_weights: x0 is outside the convex hull of the inits");
  return *w;
}

inline std::unique_ptr<Estimator> build_estimator(const Scenario& sc, std::size_t k, const Plant& plant) {
  const EstimatorConfig& e = sc.estimator;
  const std::size_t n = sc.plant.channel_dim();
  NominalModel f_o;
  if (e.nominal_model) {
    f_o = [f = plant.f](std::span<const double> xhat, double u) { return f(0, xhat, u); };
  }
  switch (e.kind) {
    case EstimatorKind::state_feedback: return std::make_unique<StateFeedbackBypass>(n);
    case EstimatorKind::hgo: return std::make_unique<HighGainObserver>(e.profile, e.init, f_o);
    case EstimatorKind::switching_hgo: return std::make_unique<SwitchingHgo>(e.fast, e.profile, e.t_switch, e.init);
    case EstimatorKind::multi_observer: return std::make_unique<MultiObserver>(e.profile, e.inits, e.alpha, e.sigma0);
    case EstimatorKind::mhgo: {
      MhgoOptions opt;
      opt.gamma = e.gamma;
      opt.beta0 = e.beta0;
      opt.nominal_model = f_o;
      if (e.weights_mode != "rls") opt.frozen_weights = resolved_frozen_weights(sc, k);
      return std::make_unique<Mhgo>(e.profile, e.inits, opt);
    }
  }
  throw Error(ErrorKind::invalid_input, "unknown estimator kind");
}

inline ClosedLoop build_closed_loop(const Scenario& sc) {
  Plant plant = build_plant(sc);
  std::vector<std::unique_ptr<Estimator>> est;
  for (std::size_t k = 0; k < plant.channels(); ++k) est.push_back(build_estimator(sc, k, plant));
  NoiseModel noise{sc.noise.bound, sc.noise.sample_period, sc.noise.seed};
  return ClosedLoop(std::move(plant), std::move(est), build_controller(sc), noise);
}

}  // namespace mhgo
