#pragma once

// Parameter extraction: flux tuning curves, resonator reflection, Stark-shift
// photon-number calibration, line attenuation and 1-dB compression.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "impa/constants.hpp"
#include "impa/error.hpp"
#include "impa/io.hpp"
#include "impa/levenberg_marquardt.hpp"
#include "impa/noise.hpp"

namespace impa::calibrate {

using complex = std::complex<double>;
using fit::LmOptions;

struct FitParameter {
  std::string name;
  std::string unit;
  double value = 0.0;
  std::optional<double> std_error;
};

struct FitResult {
  std::vector<FitParameter> params;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<std::string> warnings;

  const FitParameter& at(const std::string& name) const {
    for (const auto& p : params)
      if (p.name == name) return p;
    throw Error(ErrorKind::DomainError, "no fitted parameter named " + name);
  }
  double value(const std::string& name) const { return at(name).value; }
};

namespace detail_fit {

inline Eigen::VectorXd standard_errors(const fit::LmResult& lm) {
  const auto n = lm.residuals.size();
  const auto k = lm.params.size();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  if (n <= k) return out;
  const double variance = lm.residual_norm * lm.residual_norm / static_cast<double>(n - k);
  const Eigen::MatrixXd normal = lm.jacobian.transpose() * lm.jacobian;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  if (!lu.isInvertible()) return out;
  const Eigen::MatrixXd cov = lu.inverse() * variance;
  for (Eigen::Index i = 0; i < k; ++i) out[i] = std::sqrt(std::max(cov(i, i), 0.0));
  return out;
}

inline std::optional<double> finite(double x) {
  return std::isfinite(x) ? std::optional<double>(x) : std::nullopt;
}

}  // namespace detail_fit

// ---------------------------------------------------------------------------
// Flux tuning curve

struct FluxSweepRow {
  double bias;
  double frequency;  // Hz
  std::optional<double> sigma;  // Hz
};

struct FluxSweepData {
  std::vector<FluxSweepRow> rows;
};

/// Starting point in the identifiable parameterization.
struct TuningGuess {
  double f_max;                    // Hz, 1 / (2 pi sqrt(C L_J,eff))
  double flux_per_bias;            // a in Phi_e/Phi_0 = a * bias + b
  double flux_offset;              // b
  double asymmetry = 0.0;          // d
  double inductance_ratio = 0.0;   // L_geo / L_J,eff
};

/// Eq. 4 determines C and L_J,eff only through their product; an anchor splits them.
struct TuningAnchor {
  enum class Kind { Capacitance, JosephsonInductance, Linewidth };
  Kind kind;
  double value;                    // F, H, or kappa in rad/s
  double environment_impedance = 0.0;  // ohm, Linewidth only

  static TuningAnchor capacitance(double c) { return {Kind::Capacitance, c}; }
  static TuningAnchor josephson_inductance(double l) { return {Kind::JosephsonInductance, l}; }
  /// kappa = 1 / (C Z0) measured at any flux point.
  static TuningAnchor linewidth(double kappa, double z0) { return {Kind::Linewidth, kappa, z0}; }
};

struct TuningOptions {
  bool fit_asymmetry = true;
  bool fit_geometric_inductance = true;
  LmOptions lm{};
};

/// Resonance frequency (Hz) for the identifiable tuning parameters.
inline double tuning_model(double bias, double f_max, double flux_per_bias, double flux_offset,
                           double asymmetry_sq, double inductance_ratio) {
  const double f = constants::pi * (flux_per_bias * bias + flux_offset);
  const double c = std::cos(f);
  const double s = std::sin(f);
  const double g = std::sqrt(c * c + asymmetry_sq * s * s);
  return f_max / std::sqrt(1.0 / g + inductance_ratio);
}

/// Guess assuming the sweep starts inside the period containing the frequency maximum.
inline TuningGuess guess_tuning_curve(const FluxSweepData& data) {
  detail::require(data.rows.size() >= 3, ErrorKind::DegenerateData, "too few sweep rows");
  const auto top = std::max_element(data.rows.begin(), data.rows.end(),
                                    [](const auto& x, const auto& y) { return x.frequency < y.frequency; });
  const double f_max = top->frequency;
  const double bias0 = top->bias;
  std::vector<double> slopes;
  for (const auto& row : data.rows) {
    const double ratio = std::clamp(row.frequency / f_max, 0.0, 1.0);
    const double flux = std::acos(ratio * ratio) / constants::pi;
    if (row.bias != bias0 && flux > 1e-3) slopes.push_back(flux / std::abs(row.bias - bias0));
  }
  double a = 1.0;
  if (!slopes.empty()) {
    std::nth_element(slopes.begin(), slopes.begin() + static_cast<long>(slopes.size() / 2), slopes.end());
    a = slopes[slopes.size() / 2];
  }
  return {f_max, a, -a * bias0};
}

namespace detail_tuning {

struct Layout {
  bool asymmetry;
  bool ratio;
  Eigen::Index size() const { return 3 + (asymmetry ? 1 : 0) + (ratio ? 1 : 0); }
};

struct Unpacked {
  double f_max_ghz, a, b, asym_sq, ratio;
};

inline Unpacked unpack(const Eigen::VectorXd& p, const Layout& layout) {
  Eigen::Index k = 3;
  Unpacked u{p[0], p[1], p[2], 0.0, 0.0};
  if (layout.asymmetry) u.asym_sq = p[k++];
  if (layout.ratio) u.ratio = p[k++];
  return u;
}

inline fit::ResidualFn residuals(const FluxSweepData& data, const Layout& layout) {
  return [&data, layout](const Eigen::VectorXd& p) {
    const auto u = unpack(p, layout);
    Eigen::VectorXd r(static_cast<Eigen::Index>(data.rows.size()));
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      const auto& row = data.rows[i];
      const double sigma = row.sigma.value_or(1e9) * 1e-9;
      r[static_cast<Eigen::Index>(i)] =
          (tuning_model(row.bias, u.f_max_ghz, u.a, u.b, u.asym_sq, u.ratio) -
           row.frequency * 1e-9) / sigma;
    }
    return r;
  };
}

}  // namespace detail_tuning

/// Reciprocal condition of the column-normalized normal matrix at the guess.
inline double tuning_identifiability(const FluxSweepData& data, const TuningGuess& at,
                                     const TuningOptions& options = {}) {
  const detail_tuning::Layout layout{options.fit_asymmetry, options.fit_geometric_inductance};
  Eigen::VectorXd p(layout.size());
  p[0] = at.f_max * 1e-9;
  p[1] = at.flux_per_bias;
  p[2] = at.flux_offset;
  Eigen::Index k = 3;
  if (layout.asymmetry) p[k++] = at.asymmetry * at.asymmetry;
  if (layout.ratio) p[k++] = at.inductance_ratio;
  Eigen::VectorXd typical = Eigen::VectorXd::Ones(layout.size());
  typical[0] = std::abs(p[0]);
  typical[1] = std::abs(p[1]);
  const auto jac = fit::numeric_jacobian(detail_tuning::residuals(data, layout), p, typical,
                                         options.lm.relative_step,
                                         static_cast<Eigen::Index>(data.rows.size()));
  return fit::normal_matrix_rcond(jac);
}

/// Nonlinear least squares on the (asymmetric-SQUID) flux tuning relation with
/// affine bias-to-flux mapping. Reports L_J,eff, C, L_geo, a, b and d.
inline FitResult fit_tuning_curve(const FluxSweepData& data, const TuningAnchor& anchor,
                                  const TuningGuess& guess, const TuningOptions& options = {}) {
  detail::require(data.rows.size() >= 6, ErrorKind::DegenerateData,
                  "tuning fit needs at least 6 rows");
  for (const auto& row : data.rows)
    detail::require(row.frequency > 0.0 && (!row.sigma || *row.sigma > 0.0),
                    ErrorKind::DegenerateData, "frequencies and uncertainties must be positive");
  detail::require(anchor.value > 0.0, ErrorKind::DomainError, "anchor value must be positive");
  if (anchor.kind == TuningAnchor::Kind::Linewidth)
    detail::require(anchor.environment_impedance > 0.0, ErrorKind::DomainError,
                    "linewidth anchor needs a positive environment impedance");

  const detail_tuning::Layout layout{options.fit_asymmetry, options.fit_geometric_inductance};
  Eigen::VectorXd p0(layout.size());
  p0[0] = guess.f_max * 1e-9;
  p0[1] = guess.flux_per_bias;
  p0[2] = guess.flux_offset;
  Eigen::Index k = 3;
  const Eigen::Index asym_index = layout.asymmetry ? k : -1;
  if (layout.asymmetry) p0[k++] = guess.asymmetry * guess.asymmetry;
  const Eigen::Index ratio_index = layout.ratio ? k : -1;
  if (layout.ratio) p0[k++] = guess.inductance_ratio;

  Eigen::VectorXd typical(layout.size());
  typical[0] = std::abs(p0[0]);
  typical[1] = std::abs(p0[1]);
  for (Eigen::Index i = 2; i < layout.size(); ++i) typical[i] = 1.0;

  double data_norm = 0.0;
  for (const auto& row : data.rows) {
    const double s = row.sigma.value_or(1e9);
    data_norm += (row.frequency / s) * (row.frequency / s);
  }
  data_norm = std::sqrt(data_norm);

  fit::Bounds bounds;
  bounds.lower = Eigen::VectorXd::Constant(layout.size(), -INFINITY);
  bounds.upper = Eigen::VectorXd::Constant(layout.size(), INFINITY);
  bounds.lower[0] = 0.0;
  if (asym_index >= 0) {
    bounds.lower[asym_index] = 0.0;
    bounds.upper[asym_index] = 0.999;
  }
  if (ratio_index >= 0) bounds.lower[ratio_index] = 0.0;
  const auto lm = fit::levenberg_marquardt(detail_tuning::residuals(data, layout), p0, typical,
                                           data_norm, options.lm, bounds);

  const auto u = detail_tuning::unpack(lm.params, layout);
  const auto [bias_lo, bias_hi] = std::minmax_element(
      data.rows.begin(), data.rows.end(), [](const auto& x, const auto& y) { return x.bias < y.bias; });
  const double flux_span = std::abs(u.a) * (bias_hi->bias - bias_lo->bias);
  if (flux_span < 0.5)
    throw Error(ErrorKind::DegenerateData, "sweep spans only " + io::format_number(flux_span) +
                                               " flux quanta; need more than half a period");
  const double rcond = fit::normal_matrix_rcond(lm.jacobian);
  if (rcond < 1e-12)
    throw Error(ErrorKind::DegenerateData,
                "normal matrix is near singular (rcond " + io::format_number(rcond) + ")");
  if (!lm.converged)
    throw Error(ErrorKind::NonConvergence,
                "tuning fit stopped after " + std::to_string(lm.iterations) + " iterations");

  const auto se = detail_fit::standard_errors(lm);
  const double f_max = u.f_max_ghz * 1e9;
  const double rel_f = se[0] / u.f_max_ghz;
  const double omega_sq = std::pow(2.0 * constants::pi * f_max, 2);
  double capacitance = 0.0;
  double lj = 0.0;
  std::optional<double> se_c, se_lj;
  switch (anchor.kind) {
    case TuningAnchor::Kind::Capacitance:
      capacitance = anchor.value;
      lj = 1.0 / (omega_sq * capacitance);
      se_lj = detail_fit::finite(2.0 * rel_f * lj);
      break;
    case TuningAnchor::Kind::JosephsonInductance:
      lj = anchor.value;
      capacitance = 1.0 / (omega_sq * lj);
      se_c = detail_fit::finite(2.0 * rel_f * capacitance);
      break;
    case TuningAnchor::Kind::Linewidth:
      capacitance = 1.0 / (anchor.value * anchor.environment_impedance);
      lj = 1.0 / (omega_sq * capacitance);
      se_lj = detail_fit::finite(2.0 * rel_f * lj);
      break;
  }

  // Canonical branch: positive flux scale, offset reduced into (-1/2, 1/2].
  double a = u.a;
  double b = u.b;
  if (a < 0.0) {
    a = -a;
    b = -b;
  }
  b -= std::ceil(b - 0.5);

  FitResult out;
  out.residual_norm = lm.residual_norm;
  out.converged = lm.converged;
  out.iterations = lm.iterations;
  out.gradient_norm = lm.gradient_norm;
  out.params.push_back({"josephson_inductance", "H", lj, se_lj});
  out.params.push_back({"capacitance", "F", capacitance, se_c});
  const double ratio_se = ratio_index >= 0 ? se[ratio_index] : std::nan("");
  out.params.push_back({"geometric_inductance", "H", u.ratio * lj, detail_fit::finite(ratio_se * lj)});
  out.params.push_back({"flux_per_bias", "Phi0/bias", a, detail_fit::finite(se[1])});
  out.params.push_back({"flux_offset", "Phi0", b, detail_fit::finite(se[2])});
  const double d = std::sqrt(u.asym_sq);
  const double asym_se = asym_index >= 0 ? se[asym_index] : std::nan("");
  out.params.push_back({"asymmetry", "", d,
                        d > 0.0 ? detail_fit::finite(asym_se / (2.0 * d)) : std::nullopt});
  if (asym_index >= 0 && std::isfinite(asym_se))
    out.params.push_back(
        {"asymmetry_upper_95", "", std::sqrt(std::max(0.0, u.asym_sq + 1.96 * asym_se)), {}});
  out.params.push_back({"f_max", "Hz", f_max, detail_fit::finite(se[0] * 1e9)});
  return out;
}

// ---------------------------------------------------------------------------
// Reflection resonance

struct ReflectionTrace {
  std::vector<double> frequency;  // Hz
  std::vector<complex> s11;
};

/// S11(f) = 1 - kappa_ext / (i (f - f_r) + (kappa_ext + kappa_int) / 2), linewidths as kappa/2pi.
inline complex reflection_model(double f, double f_r, double kappa_ext, double kappa_int) {
  return 1.0 - kappa_ext / (complex(0.0, f - f_r) + 0.5 * (kappa_ext + kappa_int));
}

inline FitResult fit_reflection_resonance(const ReflectionTrace& trace, const LmOptions& options = {}) {
  const std::size_t n = trace.frequency.size();
  detail::require(n == trace.s11.size(), ErrorKind::PoorFit, "trace columns differ in length");
  detail::require(n >= 5, ErrorKind::PoorFit, "trace needs at least 5 points");
  const auto [lo_it, hi_it] = std::minmax_element(trace.frequency.begin(), trace.frequency.end());
  const double span = *hi_it - *lo_it;
  if (!(span > 0.0)) throw Error(ErrorKind::PoorFit, "trace has zero frequency span");

  // Fastest motion in the complex plane marks the resonance.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](auto x, auto y) { return trace.frequency[x] < trace.frequency[y]; });
  std::size_t best = 1;
  double best_speed = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double df = trace.frequency[order[i]] - trace.frequency[order[i - 1]];
    if (df <= 0.0) continue;
    const double speed = std::abs(trace.s11[order[i]] - trace.s11[order[i - 1]]) / df;
    if (speed > best_speed) {
      best_speed = speed;
      best = i;
    }
  }
  const double f0 =
      0.5 * (trace.frequency[order[best]] + trace.frequency[order[best - 1]]);
  const complex at_res = 0.5 * (trace.s11[order[best]] + trace.s11[order[best - 1]]);
  const double ext_fraction = std::clamp(0.5 * (1.0 - at_res.real()), 0.05, 1.0);
  const double kappa0 = best_speed > 0.0 ? 4.0 * ext_fraction / best_speed : span / 10.0;

  // Frequencies enter as GHz offsets from the initial resonance estimate so the
  // finite-difference steps resolve the linewidth.
  constexpr double ghz = 1e-9;
  std::vector<double> offset(n);
  for (std::size_t i = 0; i < n; ++i) offset[i] = (trace.frequency[i] - f0) * ghz;
  const auto residual = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(2 * static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const complex d = reflection_model(offset[i], p[0], p[1], p[2]) - trace.s11[i];
      r[2 * static_cast<Eigen::Index>(i)] = d.real();
      r[2 * static_cast<Eigen::Index>(i) + 1] = d.imag();
    }
    return r;
  };
  Eigen::VectorXd p0(3);
  p0 << 0.0, ext_fraction * kappa0 * ghz, (1.0 - ext_fraction) * kappa0 * ghz;
  Eigen::VectorXd typical = Eigen::VectorXd::Constant(3, kappa0 * ghz);

  double deviation = 0.0;
  double data_norm = 0.0;
  for (const auto& s : trace.s11) {
    deviation += std::norm(s - 1.0);
    data_norm += std::norm(s);
  }
  fit::Bounds bounds;
  bounds.lower = Eigen::Vector3d(-INFINITY, 0.0, 0.0);
  const auto lm = fit::levenberg_marquardt(residual, p0, typical, std::sqrt(data_norm), options,
                                           bounds);
  if (!lm.converged)
    throw Error(ErrorKind::NonConvergence,
                "reflection fit stopped after " + std::to_string(lm.iterations) + " iterations");
  const double relative = deviation > 0.0 ? lm.residual_norm / std::sqrt(deviation) : INFINITY;
  if (relative > 0.1)
    throw Error(ErrorKind::PoorFit, "relative residual " + io::format_number(relative));
  const double kappa_total = (lm.params[1] + lm.params[2]) / ghz;
  if (span < 5.0 * kappa_total)
    throw Error(ErrorKind::PoorFit, "trace spans fewer than 5 linewidths");

  const auto se = detail_fit::standard_errors(lm);
  FitResult out;
  out.residual_norm = lm.residual_norm;
  out.converged = lm.converged;
  out.iterations = lm.iterations;
  out.gradient_norm = lm.gradient_norm;
  out.params.push_back(
      {"resonance_frequency", "Hz", f0 + lm.params[0] / ghz, detail_fit::finite(se[0] / ghz)});
  out.params.push_back({"kappa_ext", "Hz", lm.params[1] / ghz, detail_fit::finite(se[1] / ghz)});
  out.params.push_back({"kappa_int", "Hz", lm.params[2] / ghz, detail_fit::finite(se[2] / ghz)});
  out.params.push_back({"kappa_total", "Hz", kappa_total, {}});
  return out;
}

// ---------------------------------------------------------------------------
// Photon-number calibration

struct ChiNbar {
  double chi;    // rad/s
  double n_bar;
};

/// Inverts Delta_ac = 2 chi n and Gamma_phi = 8 chi^2 n / kappa_r.
inline ChiNbar chi_nbar_from_stark_dephasing(double delta_ac, double gamma_phi, double kappa_r) {
  detail::require(delta_ac > 0.0 && gamma_phi > 0.0 && kappa_r > 0.0, ErrorKind::DomainError,
                  "Stark shift, dephasing rate and linewidth must all be positive");
  const double chi = gamma_phi * kappa_r / (4.0 * delta_ac);
  return {chi, delta_ac / (2.0 * chi)};
}

struct StarkRow {
  double power_dbm;  // source setting
  double delta_ac;   // rad/s
  double gamma_phi;  // 1/s
};

struct PowerPair {
  double source_dbm;
  double device_dbm;
};

/// P_device = P_source - A with a single attenuation A (dB).
inline FitResult fit_attenuation(const std::vector<PowerPair>& pairs) {
  detail::require(pairs.size() >= 2, ErrorKind::DegenerateData,
                  "attenuation fit needs at least two pairs");
  double mean = 0.0;
  for (const auto& p : pairs) mean += p.source_dbm - p.device_dbm;
  mean /= static_cast<double>(pairs.size());
  double ss = 0.0;
  for (const auto& p : pairs) ss += std::pow(p.source_dbm - p.device_dbm - mean, 2);
  const double n = static_cast<double>(pairs.size());
  FitResult out;
  out.residual_norm = std::sqrt(ss);
  out.converged = true;
  out.params.push_back({"attenuation", "dB", mean, std::sqrt(ss / (n - 1.0) / n)});
  return out;
}

struct StarkCalibration {
  double chi;                           // rad/s, mean over rows
  std::vector<double> n_bar;
  std::vector<double> device_power_dbm;
  FitResult attenuation;
};

/// Per-row photon numbers, the implied power at the amplifier input, and the line attenuation.
inline StarkCalibration calibrate_stark(const std::vector<StarkRow>& rows, double omega_r,
                                        double kappa_r) {
  detail::require(rows.size() >= 3, ErrorKind::DegenerateData, "Stark table needs >= 3 rows");
  StarkCalibration out{};
  std::vector<PowerPair> pairs;
  double chi_sum = 0.0;
  for (const auto& row : rows) {
    const auto cn = chi_nbar_from_stark_dephasing(row.delta_ac, row.gamma_phi, kappa_r);
    chi_sum += cn.chi;
    out.n_bar.push_back(cn.n_bar);
    const double dbm = noise::watts_to_dbm(noise::photon_flux_power(omega_r, kappa_r, cn.n_bar));
    out.device_power_dbm.push_back(dbm);
    pairs.push_back({row.power_dbm, dbm});
  }
  out.chi = chi_sum / static_cast<double>(rows.size());
  out.attenuation = fit_attenuation(pairs);
  return out;
}

// ---------------------------------------------------------------------------
// Compression

struct GainPowerPoint {
  double p_in_dbm;
  double gain_db;
};

struct CompressionResult {
  double p1db_dbm;
  double small_signal_gain_db;
  std::vector<std::string> warnings;
};

/// Input power where the gain falls 1 dB below its small-signal plateau. The
/// plateau is the leading run of points within 0.1 dB of the lowest-power gain.
inline CompressionResult compression_point(std::vector<GainPowerPoint> points) {
  detail::require(points.size() >= 4, ErrorKind::DegenerateData,
                  "compression extraction needs at least 4 points");
  std::sort(points.begin(), points.end(),
            [](const auto& x, const auto& y) { return x.p_in_dbm < y.p_in_dbm; });
  const double first = points.front().gain_db;
  std::size_t plateau = 0;
  double sum = 0.0;
  while (plateau < points.size() && std::abs(points[plateau].gain_db - first) <= 0.1) {
    sum += points[plateau].gain_db;
    ++plateau;
  }
  CompressionResult out{};
  out.small_signal_gain_db = sum / static_cast<double>(plateau);
  const double target = out.small_signal_gain_db - 1.0;
  bool warned = false;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!warned && points[i].gain_db > out.small_signal_gain_db + 0.25) {
      out.warnings.push_back("NonMonotonic: gain rises more than 0.25 dB above the plateau near " +
                             io::format_number(points[i].p_in_dbm) + " dBm");
      warned = true;
    }
    if (points[i].gain_db <= target) {
      const auto& lo = points[i - 1];
      const auto& hi = points[i];
      if (hi.gain_db == target) {
        out.p1db_dbm = hi.p_in_dbm;
      } else {
        const double t = (lo.gain_db - target) / (lo.gain_db - hi.gain_db);
        out.p1db_dbm = lo.p_in_dbm + t * (hi.p_in_dbm - lo.p_in_dbm);
      }
      return out;
    }
  }
  throw Error(ErrorKind::NoCompression, "gain never drops 1 dB below the small-signal value");
}

}  // namespace impa::calibrate
