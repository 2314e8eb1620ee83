#pragma once

// Project configuration, data ingestion and the command workflows behind the
// `impa` executable. Each command reads a validated ProjectConfig, writes its
// outputs atomically under the configured output directory and returns a JSON
// report.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "impa/calibrate.hpp"
#include "impa/constants.hpp"
#include "impa/error.hpp"
#include "impa/io.hpp"
#include "impa/network.hpp"
#include "impa/noise.hpp"
#include "impa/paramp.hpp"
#include "impa/taper.hpp"

namespace impa::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration document

/// Every accepted key with its default. A null default marks an optional number.
inline const json& config_defaults() {
  static const json defaults = json::parse(R"({
    "taper": {
      "z_source": 50.0,
      "z_load": 18.0,
      "gamma_max": 0.31622776601683794,
      "f_cutoff": 2.0e9,
      "eps_eff": null,
      "gap": 3.0e-6,
      "substrate_eps_r": 11.9
    },
    "profile": {"n_samples": 401},
    "network": {"n_segments": 400, "port_refs": "mixed", "touchstone_reference": 50.0},
    "grid": {"f_start_hz": 1.0e8, "f_stop_hz": 1.2e10, "points": 2001},
    "resonator": {
      "capacitance": 4.0e-12,
      "josephson_inductance": 69.0e-12,
      "geometric_inductance": 0.0,
      "asymmetry": 0.0,
      "flux_bias": 0.3,
      "pump_frequency_hz": null,
      "pump_amplitude": 0.0
    },
    "environment": {"kind": "taper", "impedance": 18.0, "source_impedance": 50.0, "n_segments": 400},
    "gain": {
      "target_peak_db": 20.0,
      "span_hz": 4.0e9,
      "points": 801,
      "bandwidth_thresholds_db": [15.0, 20.0]
    },
    "flux_sweep": {"flux_start": 0.0, "flux_stop": 0.45, "points": 91},
    "fit": {
      "anchor": "capacitance",
      "anchor_value": 4.0e-12,
      "anchor_impedance": 50.0,
      "fit_asymmetry": true,
      "fit_geometric_inductance": true,
      "f_max_hz": null,
      "flux_per_bias": null,
      "flux_offset": null,
      "readout_frequency_hz": 6.633e9,
      "readout_linewidth_hz": 309.0e3
    },
    "noise": {
      "frequency_hz": 6.633e9,
      "gain_db": 20.0,
      "t_first_stage_k": null,
      "snr_improvement_db": null,
      "t_second_stage_min_k": 2.3,
      "t_second_stage_max_k": 2.9,
      "readout_frequency_hz": 6.633e9,
      "readout_linewidth_hz": 309.0e3,
      "n_bar": 1.0,
      "noise_table": null,
      "max_ratio_to_quantum": null
    },
    "output_dir": "out"
  })");
  return defaults;
}

namespace detail_config {

inline std::string type_name(const json& v) {
  if (v.is_null()) return "null";
  if (v.is_boolean()) return "boolean";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "object";
}

inline bool compatible(const json& schema, const json& value) {
  if (schema.is_null()) return value.is_null() || value.is_number() || value.is_string();
  if (schema.is_number()) return value.is_number() || value.is_null();
  if (schema.is_boolean()) return value.is_boolean();
  if (schema.is_string()) return value.is_string();
  if (schema.is_array())
    return value.is_array() &&
           std::all_of(value.begin(), value.end(), [](const json& x) { return x.is_number(); });
  return value.is_object();
}

inline void check(const json& schema, const json& doc, const std::string& path) {
  if (!doc.is_object())
    throw Error(ErrorKind::ConfigError, (path.empty() ? "config" : path) + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) throw Error(ErrorKind::ConfigError, "unknown key '" + where + "'");
    const json& expected = schema.at(key);
    if (!compatible(expected, value))
      throw Error(ErrorKind::ConfigError, "'" + where + "' has type " + type_name(value) +
                                              ", expected " + type_name(expected));
    if (expected.is_object()) check(expected, value, where);
  }
}

inline json merged(const json& defaults, const json& doc) {
  json out = defaults;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object() && out.at(key).is_object())
      out[key] = merged(out.at(key), value);
    else
      out[key] = value;
  }
  return out;
}

}  // namespace detail_config

/// A schema-checked configuration document with every default filled in.
class ProjectConfig {
 public:
  ProjectConfig() : doc_(config_defaults()) {}

  static ProjectConfig from_json(const json& doc) {
    detail_config::check(config_defaults(), doc, "");
    ProjectConfig config;
    config.doc_ = detail_config::merged(config_defaults(), doc);
    return config;
  }

  static ProjectConfig parse(const std::string& text) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::ConfigError, std::string("malformed JSON: ") + e.what());
    }
    return from_json(doc);
  }

  static ProjectConfig load(const fs::path& path) { return parse(io::read_file(path)); }

  /// Applies `dotted.key=value`. The value is read as JSON when it parses, otherwise as a string.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ErrorKind::ConfigError, "override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json patch = value;
    std::vector<std::string> parts;
    for (std::size_t start = 0;;) {
      const auto dot = key.find('.', start);
      parts.push_back(key.substr(start, dot == std::string::npos ? dot : dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    detail_config::check(config_defaults(), patch, "");
    doc_ = detail_config::merged(doc_, patch);
  }

  const json& document() const { return doc_; }

  double number(const std::string& section, const std::string& key) const {
    const json& v = doc_.at(section).at(key);
    if (!v.is_number())
      throw Error(ErrorKind::ConfigError, "'" + section + "." + key + "' must be a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(const std::string& section, const std::string& key) const {
    const json& v = doc_.at(section).at(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number())
      throw Error(ErrorKind::ConfigError, "'" + section + "." + key + "' must be a number or null");
    return v.get<double>();
  }

  std::size_t count(const std::string& section, const std::string& key) const {
    const double v = number(section, key);
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e8)
      throw Error(ErrorKind::ConfigError, "'" + section + "." + key + "' must be a positive integer");
    return static_cast<std::size_t>(v);
  }

  std::string text(const std::string& section, const std::string& key) const {
    const json& v = doc_.at(section).at(key);
    if (!v.is_string())
      throw Error(ErrorKind::ConfigError, "'" + section + "." + key + "' must be a string");
    return v.get<std::string>();
  }

  bool flag(const std::string& section, const std::string& key) const {
    return doc_.at(section).at(key).get<bool>();
  }

  fs::path output_dir() const { return fs::path(doc_.at("output_dir").get<std::string>()); }

  taper::TaperDesignSpec taper_spec() const {
    taper::TaperDesignSpec spec;
    spec.z_source = number("taper", "z_source");
    spec.z_load = number("taper", "z_load");
    spec.gamma_max = number("taper", "gamma_max");
    spec.f_cutoff = number("taper", "f_cutoff");
    spec.gap = number("taper", "gap");
    spec.substrate_eps_r = number("taper", "substrate_eps_r");
    spec.eps_eff = optional_number("taper", "eps_eff")
                       .value_or(taper::default_eps_eff(spec.substrate_eps_r));
    return spec;
  }

  network::FrequencyGrid grid() const {
    return network::FrequencyGrid::linspace(number("grid", "f_start_hz"), number("grid", "f_stop_hz"),
                                            count("grid", "points"));
  }

  /// Pump frequency stored in rad/s; a null pump frequency means twice the resonance.
  paramp::PumpedResonator resonator() const {
    paramp::PumpedResonator r;
    r.capacitance = number("resonator", "capacitance");
    r.josephson_inductance = number("resonator", "josephson_inductance");
    r.geometric_inductance = number("resonator", "geometric_inductance");
    r.asymmetry = number("resonator", "asymmetry");
    r.flux_bias = number("resonator", "flux_bias");
    r.pump_amplitude = number("resonator", "pump_amplitude");
    const auto fp = optional_number("resonator", "pump_frequency_hz");
    r.pump_frequency = fp ? 2.0 * constants::pi * *fp : 2.0 * paramp::resonant_frequency(r);
    return r;
  }

 private:
  json doc_;
};

// ---------------------------------------------------------------------------
// JSON rendering

/// Rounds to the 12 significant digits used by every text output.
inline json number_json(double value) {
  if (!std::isfinite(value)) return nullptr;
  return std::stod(io::format_number(value));
}

inline json optional_json(const std::optional<double>& value) {
  return value ? number_json(*value) : json(nullptr);
}

inline std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

inline json fit_result_json(const calibrate::FitResult& result) {
  json params = json::object();
  for (const auto& p : result.params)
    params[p.name] = {{"value", number_json(p.value)},
                      {"unit", p.unit},
                      {"stderr", optional_json(p.std_error)}};
  json out = {{"params", params},
              {"residual_norm", number_json(result.residual_norm)},
              {"converged", result.converged},
              {"iterations", result.iterations}};
  if (!result.warnings.empty()) out["warnings"] = result.warnings;
  return out;
}

inline json error_json(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

/// Exit status for a library error: 3 for I/O, 2 for everything else.
inline int exit_code(ErrorKind kind) { return kind == ErrorKind::IoError ? 3 : 2; }

// ---------------------------------------------------------------------------
// Data ingestion

inline calibrate::FluxSweepData load_flux_sweep(const fs::path& path) {
  const auto table = io::read_csv(path);
  const auto bias = table.column("bias");
  const auto freq = table.column("freq_hz");
  std::optional<std::size_t> sigma;
  for (const char* name : {"sigma_hz", "freq_err_hz"})
    if (std::find(table.header.begin(), table.header.end(), name) != table.header.end())
      sigma = table.column(name);
  calibrate::FluxSweepData data;
  for (const auto& row : table.rows)
    data.rows.push_back({row[bias], row[freq],
                         sigma ? std::optional<double>(row[*sigma]) : std::nullopt});
  return data;
}

inline calibrate::ReflectionTrace load_reflection_trace(const fs::path& path) {
  const auto table = io::read_csv(path);
  const auto f = table.column("freq_hz");
  const auto re = table.column("re_s11");
  const auto im = table.column("im_s11");
  calibrate::ReflectionTrace trace;
  for (const auto& row : table.rows) {
    trace.frequency.push_back(row[f]);
    trace.s11.emplace_back(row[re], row[im]);
  }
  return trace;
}

/// Stark shifts arrive in Hz and are converted to rad/s; dephasing rates are already 1/s.
inline std::vector<calibrate::StarkRow> load_stark_table(const fs::path& path) {
  const auto table = io::read_csv(path);
  const auto p = table.column("power_dbm");
  const auto d = table.column("delta_ac_hz");
  const auto g = table.column("gamma_phi_hz");
  std::vector<calibrate::StarkRow> rows;
  for (const auto& row : table.rows) {
    detail::require(row[d] >= 0.0 && row[g] >= 0.0, ErrorKind::DomainError,
                    "Stark shift and dephasing rate must be nonnegative");
    rows.push_back({row[p], 2.0 * constants::pi * row[d], row[g]});
  }
  return rows;
}

inline std::vector<calibrate::PowerPair> load_power_pairs(const fs::path& path) {
  const auto table = io::read_csv(path);
  const auto s = table.column("p_source_dbm");
  const auto d = table.column("p_device_dbm");
  std::vector<calibrate::PowerPair> pairs;
  for (const auto& row : table.rows) pairs.push_back({row[s], row[d]});
  return pairs;
}

inline std::vector<calibrate::GainPowerPoint> load_gain_power(const fs::path& path) {
  const auto table = io::read_csv(path);
  const auto p = table.column("p_in_dbm");
  const auto g = table.column("gain_db");
  std::vector<calibrate::GainPowerPoint> points;
  for (const auto& row : table.rows) points.push_back({row[p], row[g]});
  return points;
}

// ---------------------------------------------------------------------------
// Commands

inline json cmd_design_taper(const ProjectConfig& config) {
  const auto spec = config.taper_spec();
  taper::validate(spec);
  const auto profile = taper::impedance_profile(spec, config.count("profile", "n_samples"));
  const fs::path dir = config.output_dir();
  taper::write_profile_csv(profile, dir / "taper_profile.csv");
  json summary = {
      {"ripple_parameter", number_json(profile.ripple)},
      {"length_m", number_json(profile.length)},
      {"gamma0", number_json(profile.gamma0)},
      {"eps_eff", number_json(spec.eps_eff)},
      {"z_source_end_ohm", number_json(profile.samples.front().impedance)},
      {"z_load_end_ohm", number_json(profile.samples.back().impedance)},
      {"width_source_end_m", number_json(profile.samples.front().width)},
      {"width_load_end_m", number_json(profile.samples.back().width)},
      {"width_for_z_source_m",
       number_json(taper::cpw_width_for_impedance(spec.z_source, spec.gap, spec.eps_eff))},
      {"width_for_z_load_m",
       number_json(taper::cpw_width_for_impedance(spec.z_load, spec.gap, spec.eps_eff))},
      {"n_samples", profile.samples.size()}};
  io::write_file_atomic(dir / "taper_summary.json", dump(summary));
  return summary;
}

inline json cmd_simulate_sparams(const ProjectConfig& config) {
  const auto spec = config.taper_spec();
  taper::validate(spec);
  const auto profile = taper::impedance_profile(spec, config.count("profile", "n_samples"));
  const auto grid = config.grid();
  const std::string refs = config.text("network", "port_refs");
  double z_ref2 = spec.z_load;
  if (refs == "uniform")
    z_ref2 = spec.z_source;
  else if (refs != "mixed")
    throw Error(ErrorKind::ConfigError, "network.port_refs must be 'mixed' or 'uniform'");
  const auto data = network::taper_sparams(profile, grid, config.count("network", "n_segments"),
                                           spec.eps_eff, spec.z_source, z_ref2);
  const fs::path dir = config.output_dir();
  const double touchstone_ref = config.number("network", "touchstone_reference");
  network::write_touchstone(data, dir / "taper.s2p", touchstone_ref);
  io::write_file_atomic(dir / "sparams_db.csv", network::sparams_db_csv(data));

  double worst_s11 = -INFINITY;
  double worst_il = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.points[i] < spec.f_cutoff) continue;
    worst_s11 = std::max(worst_s11, network::to_db(data.s[i].s11));
    worst_il = std::max(worst_il, -network::to_db(data.s[i].s21));
  }
  return {{"port_refs_ohm", {number_json(spec.z_source), number_json(z_ref2)}},
          {"max_s11_db_above_cutoff", number_json(worst_s11)},
          {"max_insertion_loss_db_above_cutoff", number_json(worst_il)},
          {"points", grid.size()}};
}

namespace detail_gain {

/// Sorted union of the signal grid and its idler images, so every lookup hits a table point.
inline network::FrequencyGrid environment_grid(const network::FrequencyGrid& signal,
                                               double pump_hz) {
  std::vector<double> f = signal.points;
  for (double fs : signal.points)
    if (pump_hz - fs > 0.0) f.push_back(pump_hz - fs);
  std::sort(f.begin(), f.end());
  network::FrequencyGrid grid;
  for (double x : f)
    if (grid.points.empty() || x > grid.points.back() * (1.0 + 1e-14)) grid.points.push_back(x);
  return grid;
}

inline json bandwidths(const paramp::GainProfile& profile, const std::vector<double>& thresholds) {
  json out = json::object();
  for (double t : thresholds) {
    json value = nullptr;
    try {
      value = number_json(paramp::gain_bandwidth(profile, t));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BelowThreshold) throw;
    }
    out[io::format_number(t)] = value;
  }
  return out;
}

inline std::string profile_csv(const paramp::GainProfile& p) {
  std::vector<double> g, gi;
  for (std::size_t i = 0; i < p.gain.size(); ++i) {
    g.push_back(paramp::to_db(p.gain[i]));
    gi.push_back(p.idler_gain[i] > 0.0 ? paramp::to_db(p.idler_gain[i]) : -400.0);
  }
  return io::to_csv({"freq_hz", "gain_db", "idler_gain_db"}, {p.frequency, g, gi});
}

inline json summary(const paramp::GainProfile& p, const std::vector<double>& thresholds) {
  return {{"peak_gain_db", number_json(paramp::to_db(p.peak_gain))},
          {"peak_frequency_hz", number_json(p.peak_frequency)},
          {"bandwidth_hz", bandwidths(p, thresholds)}};
}

}  // namespace detail_gain

/// Lumped rotating-wave and embedded nodal gain profiles around the flux-tuned resonance.
inline json cmd_gain(const ProjectConfig& config) {
  auto r = config.resonator();
  const double omega0 = paramp::resonant_frequency(r);
  const double f0 = omega0 / (2.0 * constants::pi);
  const double fp = r.pump_frequency / (2.0 * constants::pi);
  const double span = config.number("gain", "span_hz");
  detail::require(span > 0.0 && span < 2.0 * f0, ErrorKind::ConfigError,
                  "gain.span_hz must be positive and smaller than twice the resonance");
  const auto grid = network::FrequencyGrid::linspace(f0 - span / 2.0, f0 + span / 2.0,
                                                     config.count("gain", "points"));
  std::vector<double> thresholds;
  for (const auto& t : config.document().at("gain").at("bandwidth_thresholds_db"))
    thresholds.push_back(t.get<double>());
  const auto target_db = config.optional_number("gain", "target_peak_db");

  const std::string kind = config.text("environment", "kind");
  const double z_lumped = kind == "constant" ? config.number("environment", "impedance")
                                             : config.taper_spec().z_load;
  paramp::EnvironmentModel env = paramp::ConstantImpedance{z_lumped};
  if (kind == "taper") {
    const auto spec = config.taper_spec();
    taper::validate(spec);
    const auto profile = taper::impedance_profile(spec, config.count("profile", "n_samples"));
    env = paramp::make_taper_environment(profile, detail_gain::environment_grid(grid, fp),
                                         spec.eps_eff, config.count("environment", "n_segments"),
                                         config.number("environment", "source_impedance"));
  } else if (kind != "constant") {
    throw Error(ErrorKind::ConfigError, "environment.kind must be 'constant' or 'taper'");
  }

  const double kappa = paramp::kappa_from_environment(r, paramp::ConstantImpedance{z_lumped});
  if (target_db) r.pump_amplitude = paramp::tune_pump_amplitude(r, env, grid, *target_db);
  const double lambda = target_db
                            ? paramp::pump_strength_for_gain(paramp::from_db(*target_db), kappa)
                            : paramp::lambda_from_pump_amplitude(r.pump_amplitude, omega0);
  const double delta = omega0 - r.pump_frequency / 2.0;

  const auto rwa = paramp::rwa_sweep(grid, fp / 2.0, kappa, lambda, delta);
  const auto embedded = paramp::embedded_sweep(r, env, grid);
  const fs::path dir = config.output_dir();
  io::write_file_atomic(dir / "gain_rwa.csv", detail_gain::profile_csv(rwa));
  io::write_file_atomic(dir / "gain_embedded.csv", detail_gain::profile_csv(embedded));

  json report = {{"resonance_frequency_hz", number_json(f0)},
                 {"pump_frequency_hz", number_json(fp)},
                 {"environment", kind},
                 {"lumped_impedance_ohm", number_json(z_lumped)},
                 {"kappa_hz", number_json(kappa / (2.0 * constants::pi))},
                 {"lambda_hz", number_json(lambda / (2.0 * constants::pi))},
                 {"pump_amplitude", number_json(r.pump_amplitude)},
                 {"rwa", detail_gain::summary(rwa, thresholds)},
                 {"embedded", detail_gain::summary(embedded, thresholds)}};
  if (kind == "taper") {
    const paramp::EnvironmentModel lumped = paramp::ConstantImpedance{z_lumped};
    auto rc = r;
    if (target_db) rc.pump_amplitude = paramp::tune_pump_amplitude(rc, lumped, grid, *target_db);
    const auto reference = paramp::embedded_sweep(rc, lumped, grid);
    report["embedded_constant_impedance"] = detail_gain::summary(reference, thresholds);
    report["embedded_constant_impedance"]["pump_amplitude"] = number_json(rc.pump_amplitude);
  }
  io::write_file_atomic(dir / "gain_report.json", dump(report));
  return report;
}

inline json cmd_tune_curve(const ProjectConfig& config) {
  auto r = config.resonator();
  const auto n = config.count("flux_sweep", "points");
  const double start = config.number("flux_sweep", "flux_start");
  const double stop = config.number("flux_sweep", "flux_stop");
  std::vector<double> flux(n), freq(n);
  for (std::size_t i = 0; i < n; ++i) {
    flux[i] = n == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1);
    r.flux_bias = flux[i];
    freq[i] = paramp::resonant_frequency(r) / (2.0 * constants::pi);
  }
  io::write_file_atomic(config.output_dir() / "tuning_curve.csv",
                        io::to_csv({"flux_phi0", "freq_hz"}, {flux, freq}));
  const auto [lo, hi] = std::minmax_element(freq.begin(), freq.end());
  return {{"points", n}, {"min_freq_hz", number_json(*lo)}, {"max_freq_hz", number_json(*hi)}};
}

inline calibrate::TuningAnchor tuning_anchor(const ProjectConfig& config) {
  const std::string kind = config.text("fit", "anchor");
  const double value = config.number("fit", "anchor_value");
  if (kind == "capacitance") return calibrate::TuningAnchor::capacitance(value);
  if (kind == "josephson_inductance") return calibrate::TuningAnchor::josephson_inductance(value);
  if (kind == "linewidth")
    return calibrate::TuningAnchor::linewidth(2.0 * constants::pi * value,
                                              config.number("fit", "anchor_impedance"));
  throw Error(ErrorKind::ConfigError,
              "fit.anchor must be 'capacitance', 'josephson_inductance' or 'linewidth'");
}

/// Runs one calibration fit on a CSV file and writes fit_<kind>.json.
inline json cmd_fit(const ProjectConfig& config, const std::string& kind, const fs::path& data) {
  json result;
  if (kind == "tuning") {
    const auto sweep = load_flux_sweep(data);
    auto guess = calibrate::guess_tuning_curve(sweep);
    if (auto v = config.optional_number("fit", "f_max_hz")) guess.f_max = *v;
    if (auto v = config.optional_number("fit", "flux_per_bias")) guess.flux_per_bias = *v;
    if (auto v = config.optional_number("fit", "flux_offset")) guess.flux_offset = *v;
    calibrate::TuningOptions options;
    options.fit_asymmetry = config.flag("fit", "fit_asymmetry");
    options.fit_geometric_inductance = config.flag("fit", "fit_geometric_inductance");
    result = fit_result_json(calibrate::fit_tuning_curve(sweep, tuning_anchor(config), guess, options));
  } else if (kind == "resonance") {
    result = fit_result_json(calibrate::fit_reflection_resonance(load_reflection_trace(data)));
  } else if (kind == "stark") {
    const double omega_r = 2.0 * constants::pi * config.number("fit", "readout_frequency_hz");
    const double kappa_r = 2.0 * constants::pi * config.number("fit", "readout_linewidth_hz");
    const auto rows = load_stark_table(data);
    const auto cal = calibrate::calibrate_stark(rows, omega_r, kappa_r);
    result = fit_result_json(cal.attenuation);
    result["params"]["chi"] = {{"value", number_json(cal.chi)}, {"unit", "rad/s"}, {"stderr", nullptr}};
    json table = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i)
      table.push_back({{"power_dbm", number_json(rows[i].power_dbm)},
                       {"n_bar", number_json(cal.n_bar[i])},
                       {"device_power_dbm", number_json(cal.device_power_dbm[i])}});
    result["rows"] = table;
  } else if (kind == "attenuation") {
    result = fit_result_json(calibrate::fit_attenuation(load_power_pairs(data)));
  } else if (kind == "compression") {
    const auto c = calibrate::compression_point(load_gain_power(data));
    calibrate::FitResult fr;
    fr.converged = true;
    fr.params.push_back({"p1db", "dBm", c.p1db_dbm, {}});
    fr.params.push_back({"small_signal_gain", "dB", c.small_signal_gain_db, {}});
    fr.warnings = c.warnings;
    result = fit_result_json(fr);
  } else {
    throw Error(ErrorKind::ConfigError,
                "unknown fit '" + kind + "'; expected tuning|resonance|stark|attenuation|compression");
  }
  io::write_file_atomic(config.output_dir() / ("fit_" + kind + ".json"), dump(result));
  return result;
}

inline json cmd_noise(const ProjectConfig& config) {
  const double f = config.number("noise", "frequency_hz");
  const double gain = paramp::from_db(config.number("noise", "gain_db"));
  const double t_min = config.number("noise", "t_second_stage_min_k");
  const double t_max = config.number("noise", "t_second_stage_max_k");
  const double omega_r = 2.0 * constants::pi * config.number("noise", "readout_frequency_hz");
  const double kappa_r = 2.0 * constants::pi * config.number("noise", "readout_linewidth_hz");
  const double power = noise::photon_flux_power(omega_r, kappa_r, config.number("noise", "n_bar"));

  json report = {{"quantum_limit_k", number_json(noise::quantum_limit_temperature(f))},
                 {"photon_flux_power_w", number_json(power)},
                 {"photon_flux_power_dbm", number_json(noise::watts_to_dbm(power))}};
  if (auto t1 = config.optional_number("noise", "t_first_stage_k")) {
    const double lo = noise::snr_improvement({*t1, t_min, gain});
    const double hi = noise::snr_improvement({*t1, t_max, gain});
    report["snr_improvement_db"] = {number_json(10.0 * std::log10(lo)),
                                    number_json(10.0 * std::log10(hi))};
  }
  if (auto snr_db = config.optional_number("noise", "snr_improvement_db")) {
    const auto interval =
        noise::noise_temperature_interval(paramp::from_db(*snr_db), t_min, t_max, gain);
    report["noise_temperature_k"] = {number_json(interval.low), number_json(interval.high)};
  }
  const json& table = config.document().at("noise").at("noise_table");
  if (!table.is_null()) {
    detail::require(table.is_string(), ErrorKind::ConfigError, "noise.noise_table must be a path");
    const auto ratio = config.optional_number("noise", "max_ratio_to_quantum");
    if (!ratio)
      throw Error(ErrorKind::ConfigError,
                  "noise.max_ratio_to_quantum is required with a noise table");
    const auto csv = io::read_csv(table.get<std::string>());
    std::vector<double> freq, temp;
    for (const auto& row : csv.rows) {
      freq.push_back(row[csv.column("freq_hz")]);
      temp.push_back(row[csv.column("t_noise_k")]);
    }
    report["noise_bandwidth_hz"] = optional_json(noise::noise_bandwidth(freq, temp, *ratio));
  }
  io::write_file_atomic(config.output_dir() / "noise_report.json", dump(report));
  return report;
}

}  // namespace impa::cli
