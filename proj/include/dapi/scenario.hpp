#pragma once

// Network and scenario files, experiment orchestration and CSV traces.
//
// Network file (schema 1):
//
//   schema = 1
//   frequency_hz = 50
//   [defaults]
//   inertia = 1e5        # kg m^2
//   damping = 1          # 1/s
//   voltage_kv = 132
//   load_kw = 0
//   [buses]
//   1
//   2 inertia=2e5 load_kw=150
//   [lines]
//   1 2 0.133            # from to susceptance [S]
//
// Scenario file (schema 1):
//
//   schema = 1
//   network = ieee30.net # relative to the scenario file
//   horizon_s = 200
//   step_s = 0.001
//   settle_tol_hz = 0.001
//   output_interval_s = 0.1
//   csv = out.csv        # optional, relative to the working directory
//   [controller]
//   kind = distpi        # p | decpi | distpi
//   kp = 80000           # one value for all buses, or one per bus
//   ki = 40000           # or: cost = C_1 ... C_n  (ki = 1 / cost)
//   gamma = auto         # auto = gamma_bar / 2, or a number
//   comm = same-as-grid  # or: explicit, with a [comm_edges] section
//   [comm_edges]
//   1 2 1.0              # from to weight
//   [disturbances]
//   1.0 2 200e3          # time [s], bus id, load increase [W]
//   [noise]
//   2 0.25               # bus id, constant measurement error [Hz]

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "dapi/analysis.hpp"
#include "dapi/control.hpp"
#include "dapi/errors.hpp"
#include "dapi/graph.hpp"
#include "dapi/sysmodel.hpp"
#include "dapi/textfile.hpp"
#include "dapi/types.hpp"

namespace dapi {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double hz_to_rad(double hz) { return kTwoPi * hz; }
inline double rad_to_hz(double rad) { return rad / kTwoPi; }

/// Index of the bus labelled `id`, if any.
inline std::optional<std::size_t> bus_index(const PowerNetwork& net, int id) {
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    if (net.buses[i].id == id) return i;
  }
  return std::nullopt;
}

namespace detail {

inline void require_schema(const text::Document& doc) {
  const text::Settings top(doc, doc.settings, "");
  const auto& s = top.require("schema", 1);
  if (s.value != "1") doc.fail(s.line, "unsupported schema '" + s.value + "', expected 1");
}

inline int parse_bus_id(const text::Document& doc, const std::string& token, int line) {
  long long v = 0;
  if (!text::to_int(token, v) || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    doc.fail(line, "expected an integer bus id, got '" + token + "'");
  }
  return static_cast<int>(v);
}

inline double parse_number(const text::Document& doc, const std::string& token, int line, const char* what) {
  double v = 0.0;
  if (!text::to_double(token, v)) doc.fail(line, std::string(what) + ": expected a number, got '" + token + "'");
  return v;
}

}  // namespace detail

/// Parses a network document. Defaults apply to every bus field a row does
/// not set. Throws ParseError for syntax problems and ValidationError when
/// the result violates a model invariant.
inline PowerNetwork parse_network(const text::Document& doc) {
  detail::require_schema(doc);
  const text::Settings top(doc, doc.settings, "");
  top.only({"schema", "frequency_hz", "name"});
  const double freq = top.number_or("frequency_hz", 50.0);
  if (!(freq > 0.0) || !std::isfinite(freq)) doc.fail(top.require("frequency_hz").line, "frequency_hz must be positive");

  double inertia = std::numeric_limits<double>::quiet_NaN();
  double damping = std::numeric_limits<double>::quiet_NaN();
  double voltage_kv = std::numeric_limits<double>::quiet_NaN();
  double load_kw = 0.0;
  for (const auto& sec : doc.sections) {
    if (sec.name != "defaults" && sec.name != "buses" && sec.name != "lines") {
      doc.fail(sec.line, "unknown section [" + sec.name + "]");
    }
  }
  if (const auto* d = doc.section("defaults")) {
    const text::Settings s(doc, d->settings, " in [defaults]");
    s.only({"inertia", "damping", "voltage_kv", "load_kw"});
    inertia = s.number_or("inertia", inertia);
    damping = s.number_or("damping", damping);
    voltage_kv = s.number_or("voltage_kv", voltage_kv);
    load_kw = s.number_or("load_kw", load_kw);
    if (!d->rows.empty()) doc.fail(d->rows.front().line, "[defaults] takes only 'key = value' lines");
  }

  const auto* buses = doc.section("buses");
  if (buses == nullptr) doc.fail(0, "missing [buses] section");
  if (!buses->settings.empty()) doc.fail(buses->settings.front().line, "[buses] takes rows 'id key=value ...'");

  PowerNetwork net;
  net.omega_ref = hz_to_rad(freq);
  std::map<int, std::size_t> index;
  for (const auto& row : buses->rows) {
    Bus b;
    b.id = detail::parse_bus_id(doc, row.tokens.front(), row.line);
    if (index.count(b.id) != 0) doc.fail(row.line, "duplicate bus id " + std::to_string(b.id));
    double m = inertia, d = damping, v = voltage_kv, p = load_kw;
    for (std::size_t k = 1; k < row.tokens.size(); ++k) {
      const std::string& tok = row.tokens[k];
      const auto eq = tok.find('=');
      if (eq == std::string::npos) doc.fail(row.line, "expected key=value, got '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const double value = detail::parse_number(doc, tok.substr(eq + 1), row.line, key.c_str());
      if (key == "inertia") m = value;
      else if (key == "damping") d = value;
      else if (key == "voltage_kv") v = value;
      else if (key == "load_kw") p = value;
      else doc.fail(row.line, "unknown bus field '" + key + "'");
    }
    const std::string who = "bus " + std::to_string(b.id);
    if (std::isnan(m)) doc.fail(row.line, who + ": no inertia given and no default");
    if (std::isnan(d)) doc.fail(row.line, who + ": no damping given and no default");
    if (std::isnan(v)) doc.fail(row.line, who + ": no voltage_kv given and no default");
    b.inertia = m;
    b.damping = d;
    b.voltage = v * 1e3;
    b.load = p * 1e3;
    index[b.id] = net.buses.size();
    net.buses.push_back(b);
  }

  if (const auto* lines = doc.section("lines")) {
    if (!lines->settings.empty()) doc.fail(lines->settings.front().line, "[lines] takes rows 'from to susceptance'");
    for (const auto& row : lines->rows) {
      if (row.tokens.size() != 3) doc.fail(row.line, "expected 'from to susceptance'");
      const int from = detail::parse_bus_id(doc, row.tokens[0], row.line);
      const int to = detail::parse_bus_id(doc, row.tokens[1], row.line);
      const double b = detail::parse_number(doc, row.tokens[2], row.line, "susceptance");
      const auto fi = index.find(from);
      const auto ti = index.find(to);
      if (fi == index.end() || ti == index.end()) {
        throw ValidationError(doc.file + ":" + std::to_string(row.line) + ": line " + std::to_string(from) + "-" +
                              std::to_string(to) + " references an unknown bus");
      }
      net.lines.push_back({fi->second, ti->second, b});
    }
  }
  try {
    net.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(doc.file + ": " + e.what());
  }
  return net;
}

inline PowerNetwork load_network(const std::string& path) { return parse_network(text::parse_file(path)); }

struct LoadStep {
  double time = 0.0;       ///< [s]
  std::size_t bus = 0;     ///< bus index
  double delta_w = 0.0;    ///< load increase [W]
};

struct ControllerConfig {
  ControllerKind kind = ControllerKind::DistributedPI;
  Vector kp;
  std::optional<Vector> ki;
  std::optional<Vector> cost;
  std::optional<double> gamma;  ///< nullopt = auto (gamma_bar / 2)
  std::optional<WeightedGraph> comm;  ///< nullopt = same as grid
};

struct Scenario {
  std::string path;
  std::string network_path;
  PowerNetwork network;
  ControllerConfig controller;
  std::vector<LoadStep> schedule;
  Vector eta_hz;  ///< per bus
  double horizon_s = 200.0;
  double step_s = 1e-3;
  double settle_tol_hz = 1e-3;
  double output_interval_s = 0.0;  ///< 0 = every step
  std::optional<std::string> csv;
};

namespace detail {

inline Vector per_bus(const text::Document& doc, const text::Settings& s, const text::Setting& item, Index n) {
  const auto values = s.numbers(item);
  if (values.size() == 1) return Vector::Constant(n, values.front());
  if (static_cast<Index>(values.size()) != n) {
    doc.fail(item.line, "'" + item.key + "' needs 1 or " + std::to_string(n) + " values, got " +
                            std::to_string(values.size()));
  }
  return Eigen::Map<const Vector>(values.data(), n);
}

}  // namespace detail

/// Parses a scenario document; relative network paths resolve against `base_dir`.
inline Scenario parse_scenario(const text::Document& doc, const std::filesystem::path& base_dir) {
  detail::require_schema(doc);
  const text::Settings top(doc, doc.settings, "");
  top.only({"schema", "network", "horizon_s", "step_s", "settle_tol_hz", "output_interval_s", "csv", "name",
            "description"});
  for (const auto& sec : doc.sections) {
    if (sec.name != "controller" && sec.name != "comm_edges" && sec.name != "disturbances" && sec.name != "noise") {
      doc.fail(sec.line, "unknown section [" + sec.name + "]");
    }
  }

  Scenario sc;
  sc.path = doc.file;
  const auto& net_item = top.require("network", 1);
  std::filesystem::path net_path(net_item.value);
  if (net_path.is_relative()) net_path = base_dir / net_path;
  sc.network_path = net_path.string();
  sc.network = load_network(sc.network_path);
  const Index n = sc.network.size();

  sc.horizon_s = top.number_or("horizon_s", sc.horizon_s);
  sc.step_s = top.number_or("step_s", sc.step_s);
  sc.settle_tol_hz = top.number_or("settle_tol_hz", sc.settle_tol_hz);
  sc.output_interval_s = top.number_or("output_interval_s", sc.output_interval_s);
  if (const auto* c = top.find("csv")) sc.csv = c->value;
  if (!(sc.horizon_s > 0.0) || !std::isfinite(sc.horizon_s)) doc.fail(top.require("horizon_s").line, "horizon_s must be positive");
  if (!(sc.step_s > 0.0) || !std::isfinite(sc.step_s)) doc.fail(top.require("step_s").line, "step_s must be positive");
  if (!(sc.settle_tol_hz > 0.0)) doc.fail(top.require("settle_tol_hz").line, "settle_tol_hz must be positive");
  if (!(sc.output_interval_s >= 0.0)) doc.fail(top.require("output_interval_s").line, "output_interval_s must be >= 0");

  const auto* ctrl_sec = doc.section("controller");
  if (ctrl_sec == nullptr) doc.fail(0, "missing [controller] section");
  if (!ctrl_sec->rows.empty()) doc.fail(ctrl_sec->rows.front().line, "[controller] takes only 'key = value' lines");
  const text::Settings cs(doc, ctrl_sec->settings, " in [controller]");
  cs.only({"kind", "kp", "ki", "cost", "gamma", "comm"});
  auto& cc = sc.controller;
  const auto& kind = cs.require("kind", ctrl_sec->line);
  if (kind.value == "p") cc.kind = ControllerKind::Proportional;
  else if (kind.value == "decpi") cc.kind = ControllerKind::DecentralizedPI;
  else if (kind.value == "distpi") cc.kind = ControllerKind::DistributedPI;
  else doc.fail(kind.line, "kind must be p, decpi or distpi, got '" + kind.value + "'");

  cc.kp = detail::per_bus(doc, cs, cs.require("kp", ctrl_sec->line), n);
  if (const auto* ki = cs.find("ki")) cc.ki = detail::per_bus(doc, cs, *ki, n);
  if (const auto* cost = cs.find("cost")) {
    if (cc.kind != ControllerKind::DistributedPI) doc.fail(cost->line, "cost is only meaningful for distpi");
    if (cc.ki) doc.fail(cost->line, "give either ki or cost, not both");
    cc.cost = detail::per_bus(doc, cs, *cost, n);
  }
  if (cc.kind != ControllerKind::Proportional && !cc.ki && !cc.cost) {
    doc.fail(ctrl_sec->line, "PI controllers need 'ki' (or 'cost' for distpi)");
  }
  if (cc.kind == ControllerKind::Proportional && cc.ki) doc.fail(cs.find("ki")->line, "ki is not used by kind = p");

  const auto* comm_edges = doc.section("comm_edges");
  if (cc.kind == ControllerKind::DistributedPI) {
    const auto* g = cs.find("gamma");
    if (g == nullptr || g->value == "auto") {
      cc.gamma = std::nullopt;
    } else {
      cc.gamma = cs.number(*g);
    }
    const auto* comm = cs.find("comm");
    const std::string mode = comm ? comm->value : "same-as-grid";
    if (mode == "explicit") {
      if (comm_edges == nullptr) doc.fail(comm->line, "comm = explicit needs a [comm_edges] section");
      WeightedGraph graph(static_cast<std::size_t>(n));
      for (const auto& row : comm_edges->rows) {
        if (row.tokens.size() != 3) doc.fail(row.line, "expected 'from to weight'");
        const auto i = bus_index(sc.network, detail::parse_bus_id(doc, row.tokens[0], row.line));
        const auto j = bus_index(sc.network, detail::parse_bus_id(doc, row.tokens[1], row.line));
        if (!i || !j) doc.fail(row.line, "communication edge references an unknown bus");
        try {
          graph.add_edge(*i, *j, detail::parse_number(doc, row.tokens[2], row.line, "weight"));
        } catch (const InvalidArgument& e) {
          doc.fail(row.line, e.what());
        }
      }
      cc.comm = std::move(graph);
    } else if (mode != "same-as-grid") {
      doc.fail(comm->line, "comm must be same-as-grid or explicit");
    } else if (comm_edges != nullptr) {
      doc.fail(comm_edges->line, "[comm_edges] given but comm is not explicit");
    }
  } else {
    for (const char* key : {"gamma", "comm"}) {
      if (const auto* s = cs.find(key)) doc.fail(s->line, std::string(key) + " is only used by kind = distpi");
    }
    if (comm_edges != nullptr) doc.fail(comm_edges->line, "[comm_edges] is only used by kind = distpi");
  }

  if (const auto* dist = doc.section("disturbances")) {
    if (!dist->settings.empty()) doc.fail(dist->settings.front().line, "[disturbances] takes rows 'time bus delta_w'");
    double last = 0.0;
    for (const auto& row : dist->rows) {
      if (row.tokens.size() != 3) doc.fail(row.line, "expected 'time_s bus delta_w'");
      LoadStep step;
      step.time = detail::parse_number(doc, row.tokens[0], row.line, "time");
      const auto bus = bus_index(sc.network, detail::parse_bus_id(doc, row.tokens[1], row.line));
      if (!bus) doc.fail(row.line, "disturbance at unknown bus " + row.tokens[1]);
      step.bus = *bus;
      step.delta_w = detail::parse_number(doc, row.tokens[2], row.line, "delta_w");
      if (!(step.time >= 0.0) || !std::isfinite(step.time)) doc.fail(row.line, "time must be non-negative");
      if (step.time < last) doc.fail(row.line, "disturbance times must be non-decreasing");
      if (!std::isfinite(step.delta_w)) doc.fail(row.line, "delta_w must be finite");
      last = step.time;
      sc.schedule.push_back(step);
    }
  }

  sc.eta_hz = Vector::Zero(n);
  if (const auto* noise = doc.section("noise")) {
    if (!noise->settings.empty()) doc.fail(noise->settings.front().line, "[noise] takes rows 'bus eta_hz'");
    for (const auto& row : noise->rows) {
      if (row.tokens.size() != 2) doc.fail(row.line, "expected 'bus eta_hz'");
      const auto bus = bus_index(sc.network, detail::parse_bus_id(doc, row.tokens[0], row.line));
      if (!bus) doc.fail(row.line, "noise at unknown bus " + row.tokens[0]);
      const double eta = detail::parse_number(doc, row.tokens[1], row.line, "eta_hz");
      if (!std::isfinite(eta)) doc.fail(row.line, "eta_hz must be finite");
      sc.eta_hz(static_cast<Index>(*bus)) = eta;
    }
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  const text::Document doc = text::parse_file(path);
  return parse_scenario(doc, std::filesystem::path(path).parent_path());
}

/// Concrete controller for a scenario. gamma = auto resolves to gamma_bar / 2
/// and throws PreconditionError when the bound is unavailable.
inline ControllerSpec build_controller(const Scenario& sc) {
  const auto& cc = sc.controller;
  switch (cc.kind) {
    case ControllerKind::Proportional: return ControllerSpec::proportional(cc.kp);
    case ControllerKind::DecentralizedPI: return ControllerSpec::decentralized_pi(cc.kp, *cc.ki);
    case ControllerKind::DistributedPI: break;
  }
  const WeightedGraph comm = cc.comm ? *cc.comm : sc.network.coupling_graph();
  const double provisional = cc.gamma.value_or(1.0);
  ControllerSpec spec = cc.cost ? ControllerSpec::distributed_pi_with_costs(cc.kp, *cc.cost, provisional, comm)
                                : ControllerSpec::distributed_pi(cc.kp, *cc.ki, provisional, comm);
  if (!cc.gamma) {
    const GammaBound gb = gamma_bar(sc.network, spec);
    if (!std::isfinite(gb.gamma_bar)) {
      throw PreconditionError("gamma = auto: the bound is unbounded for this network; give gamma explicitly");
    }
    spec = spec.with_gamma(0.5 * gb.gamma_bar);
  }
  return spec;
}

/// Load profile [W] in effect after all steps up to and including time t.
inline Vector loads_at(const Scenario& sc, double t) {
  Vector loads = sc.network.loads();
  for (const auto& step : sc.schedule) {
    if (step.time <= t) loads(static_cast<Index>(step.bus)) += step.delta_w;
  }
  return loads;
}

struct ScenarioResult {
  ClosedLoop closed_loop;
  StabilityReport report;
  std::optional<XiRankResult> rank;           ///< DecPI
  std::optional<GammaBound> gamma_bound;      ///< DistPI, when the precondition holds
  std::optional<std::string> gamma_bound_error;
  std::optional<SteadyStatePrediction> prediction;  ///< DistPI, final load profile
  std::optional<SimulationTrace> trace;
  double omega_target = 0.0;  ///< omega_ref - mean(eta) [rad/s]
  double final_deviation_hz = std::numeric_limits<double>::quiet_NaN();
  bool settled = false;
  bool diverged = false;

  /// Analysis verdict: output stable and, for DecPI, a full-rank Xi.
  bool analysis_ok() const { return report.output_stable && (!rank || rank->full_rank); }
};

struct RunOptions {
  bool simulate = true;
};

/// Assembles the closed loop, runs the analyses and (optionally) simulates
/// the load schedule from the noise-free pre-step equilibrium.
inline ScenarioResult run_scenario(const Scenario& sc, const RunOptions& options = {}) {
  const ControllerSpec ctrl = build_controller(sc);
  const Vector eta = sc.eta_hz * kTwoPi;

  LtiSystem sys = swing_to_lti(sc.network);
  const ClosedLoop quiet = close_loop(sys, ctrl);
  sys.eta = eta;
  ClosedLoop cl = close_loop(sys, ctrl);
  StabilityReport report = output_stability_check(cl);
  ScenarioResult result{.closed_loop = std::move(cl), .report = std::move(report)};
  result.omega_target = sc.network.omega_ref - eta.mean();

  if (ctrl.kind() == ControllerKind::DecentralizedPI) result.rank = xi_rank_test(sys, ctrl.ki());
  if (ctrl.kind() == ControllerKind::DistributedPI) {
    try {
      result.gamma_bound = gamma_bar(sc.network, ctrl);
    } catch (const PreconditionError& e) {
      result.gamma_bound_error = e.what();
    }
    PowerNetwork final_net = sc.network;
    const Vector final_loads = loads_at(sc, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < final_net.buses.size(); ++i) final_net.buses[i].load = final_loads(static_cast<Index>(i));
    try {
      result.prediction = predict_steady_state(final_net, ctrl, eta);
    } catch (const PreconditionError&) {
      result.prediction = std::nullopt;
    }
  }
  if (!options.simulate) return result;

  const ClosedLoop& loop = result.closed_loop;
  SimulationOptions sim;
  sim.stride = sc.output_interval_s > 0.0
                   ? static_cast<std::size_t>(std::max(1.0, std::round(sc.output_interval_s / sc.step_s)))
                   : 1;
  const auto x0 = equilibrium(quiet);
  sim.initial_state = x0.value_or(Vector::Zero(loop.dim()));
  for (const auto& step : sc.schedule) {
    sim.schedule.push_back({step.time, swing_disturbance(sc.network, loads_at(sc, step.time))});
  }
  SimulationTrace trace = simulate(loop, sc.horizon_s, sc.step_s, sim);
  result.diverged = trace.diverged;
  const Vector y_end = trace.outputs.row(trace.outputs.rows() - 1).transpose();
  result.final_deviation_hz = rad_to_hz((y_end.array() - result.omega_target).abs().maxCoeff());
  const bool reached_end = !trace.times.empty() && trace.times.back() >= sc.horizon_s;
  result.settled = !trace.diverged && reached_end && result.final_deviation_hz < sc.settle_tol_hz;
  result.trace = std::move(trace);
  return result;
}

// ---------------------------------------------------------------------------
// CSV traces
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Column names: time_s, omega_<id>_hz..., u_<id>_w..., z_<id>...
inline std::vector<std::string> trace_columns(const PowerNetwork& net, bool with_integrator) {
  std::vector<std::string> cols{"time_s"};
  for (const auto& b : net.buses) cols.push_back("omega_" + std::to_string(b.id) + "_hz");
  for (const auto& b : net.buses) cols.push_back("u_" + std::to_string(b.id) + "_w");
  if (with_integrator) {
    for (const auto& b : net.buses) cols.push_back("z_" + std::to_string(b.id));
  }
  return cols;
}

/// Tabulates a swing-network trace in reporting units (frequencies in Hz).
inline Matrix trace_table(const ClosedLoop& cl, const SimulationTrace& trace) {
  const Index rows = static_cast<Index>(trace.samples());
  const Index m = cl.plant.io_dim();
  const Index q = cl.integrator_dim();
  Matrix table(rows, 1 + 2 * m + q);
  for (Index k = 0; k < rows; ++k) {
    table(k, 0) = trace.times[static_cast<std::size_t>(k)];
    table.block(k, 1, 1, m) = trace.outputs.row(k) / kTwoPi;
    table.block(k, 1 + m, 1, m) = trace.controls.row(k);
    if (q > 0) table.block(k, 1 + 2 * m, 1, q) = trace.states.row(k).tail(q);
  }
  return table;
}

/// Writes header and rows to `path` via a temporary file and rename.
inline void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& rows) {
  if (static_cast<Index>(header.size()) != rows.cols()) throw InvalidArgument("write_csv: header/column mismatch");
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Index i = 0; i < rows.rows(); ++i) {
      for (Index j = 0; j < rows.cols(); ++j) out << (j ? "," : "") << format_number(rows(i, j));
      out << '\n';
    }
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

struct CsvTable {
  std::vector<std::string> header;
  Matrix rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  CsvTable table;
  std::string line;
  std::vector<std::vector<double>> data;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      out.push_back(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) throw ParseError(path, line_no, "wrong number of columns");
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0.0;
      if (!text::to_double(c, v)) throw ParseError(path, line_no, "not a number: '" + c + "'");
      row.push_back(v);
    }
    data.push_back(std::move(row));
  }
  if (table.header.empty()) throw ParseError(path, 0, "empty file");
  table.rows.resize(static_cast<Index>(data.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data[i].size(); ++j) table.rows(static_cast<Index>(i), static_cast<Index>(j)) = data[i][j];
  }
  return table;
}

inline void write_trace_csv(const std::string& path, const PowerNetwork& net, const ClosedLoop& cl,
                            const SimulationTrace& trace) {
  write_csv(path, trace_columns(net, cl.integrator_dim() > 0), trace_table(cl, trace));
}

}  // namespace dapi
