#pragma once

// Flux-pumped nonlinear resonator: flux tuning, pump coupling, and parametric
// gain in the lumped rotating-wave model and in the embedded nodal model that
// sees a frequency-dependent environment through the taper.

#include <algorithm>
#include <cmath>
#include <complex>
#include <variant>
#include <vector>

#include "impa/constants.hpp"
#include "impa/error.hpp"
#include "impa/network.hpp"
#include "impa/parallel.hpp"
#include "impa/taper.hpp"

namespace impa::paramp {

using complex = std::complex<double>;
using network::Abcd;
using network::FrequencyGrid;

inline constexpr complex j{0.0, 1.0};

struct PumpedResonator {
  double capacitance = 4e-12;            // F
  double josephson_inductance = 69e-12;  // H, SQUID inductance at zero flux
  double geometric_inductance = 0.0;     // H
  double asymmetry = 0.0;                // junction asymmetry d in [0, 1)
  double flux_bias = 0.0;                // Phi_e / Phi_0
  double pump_frequency = 0.0;           // rad/s
  double pump_amplitude = 0.0;           // fractional modulation of 1/L_J

  double josephson_energy() const {
    const double phi = constants::flux_quantum / (2.0 * constants::pi);
    return phi * phi / josephson_inductance;
  }
  double charging_energy() const {
    return constants::elementary_charge * constants::elementary_charge / (2.0 * capacitance);
  }
};

inline void validate(const PumpedResonator& r) {
  using detail::require;
  require(r.capacitance > 0.0, ErrorKind::InvalidGeometry, "capacitance must be positive");
  require(r.josephson_inductance > 0.0, ErrorKind::InvalidGeometry,
          "Josephson inductance must be positive");
  require(r.geometric_inductance >= 0.0, ErrorKind::InvalidGeometry,
          "geometric inductance must be nonnegative");
  require(r.asymmetry >= 0.0 && r.asymmetry < 1.0, ErrorKind::DomainError,
          "asymmetry must lie in [0, 1)");
  require(r.pump_amplitude >= 0.0 && r.pump_amplitude < 1.0, ErrorKind::DomainError,
          "pump amplitude must lie in [0, 1)");
}

/// L_J(Phi) = L_J,eff / sqrt(cos^2(pi Phi/Phi0) + d^2 sin^2(pi Phi/Phi0)).
inline double squid_inductance(const PumpedResonator& r) {
  validate(r);
  const double f = constants::pi * r.flux_bias;
  const double c = std::cos(f);
  const double s = std::sin(f);
  const double g = std::sqrt(c * c + r.asymmetry * r.asymmetry * s * s);
  if (!(g > 1e-15))
    throw Error(ErrorKind::DivergentInductance, "symmetric SQUID at half-integer flux");
  return r.josephson_inductance / g;
}

/// omega_0 = [C (L_J(Phi) + L_geo)]^(-1/2), rad/s.
inline double resonant_frequency(const PumpedResonator& r) {
  return 1.0 / std::sqrt(r.capacitance * (squid_inductance(r) + r.geometric_inductance));
}

/// Three-wave-mixing rate for a flux modulation depth delta_f (radians of F = pi Phi/Phi0):
/// lambda = delta_f E_J sqrt(sin F tan F E_c / (8 E_J)) / hbar.
inline double pump_coupling_lambda(const PumpedResonator& r, double flux_modulation) {
  validate(r);
  const double f = constants::pi * r.flux_bias;
  if (f == 0.0) return 0.0;
  detail::require(f > 0.0 && f < constants::pi / 2.0, ErrorKind::DomainError,
                  "flux bias must satisfy 0 < pi Phi/Phi0 < pi/2");
  detail::require(flux_modulation >= 0.0, ErrorKind::DomainError,
                  "flux modulation must be nonnegative");
  const double ej = r.josephson_energy();
  const double ec = r.charging_energy();
  return flux_modulation * ej * std::sqrt(std::sin(f) * std::tan(f) * ec / (8.0 * ej)) /
         constants::hbar;
}

// Modulating 1/L by (1 + eps cos(omega_p t)) gives lambda = eps omega_0 / 8 after the RWA.
inline double lambda_from_pump_amplitude(double pump_amplitude, double omega0) {
  return pump_amplitude * omega0 / 8.0;
}

inline double pump_amplitude_from_lambda(double lambda, double omega0) {
  return 8.0 * lambda / omega0;
}

/// A flux modulation delta_f around F modulates |cos F| by the fraction delta_f tan F.
inline double pump_amplitude_from_flux_modulation(double flux_modulation, double flux_bias) {
  return flux_modulation * std::tan(constants::pi * flux_bias);
}

// ---------------------------------------------------------------------------
// Environment

struct ConstantImpedance {
  double impedance = 50.0;  // ohm
};

/// Environment seen through a lossless two-port from a real source impedance.
/// Values between grid points are linearly interpolated; grid points are exact.
struct TabulatedImpedance {
  FrequencyGrid grid;
  std::vector<Abcd> chain;         // source side is port 1, resonator side port 2
  std::vector<complex> impedance;  // looking from the resonator into the chain
  double source_impedance = 50.0;

  struct Sample {
    Abcd chain;
    complex impedance;
  };

  Sample at(double frequency) const {
    const auto& f = grid.points;
    if (f.empty() || frequency < f.front() || frequency > f.back())
      throw Error(ErrorKind::IdlerOutOfRange,
                  "frequency " + io::format_number(frequency) + " Hz outside tabulated range");
    const auto upper = std::lower_bound(f.begin(), f.end(), frequency);
    const auto hi = static_cast<std::size_t>(upper - f.begin());
    if (f[hi] == frequency) return {chain[hi], impedance[hi]};
    const std::size_t lo = hi - 1;
    const double t = (frequency - f[lo]) / (f[hi] - f[lo]);
    auto mix = [t](complex a, complex b) { return a + t * (b - a); };
    const Abcd& a = chain[lo];
    const Abcd& b = chain[hi];
    return {{mix(a.a, b.a), mix(a.b, b.b), mix(a.c, b.c), mix(a.d, b.d)},
            mix(impedance[lo], impedance[hi])};
  }
};

using EnvironmentModel = std::variant<ConstantImpedance, TabulatedImpedance>;

inline TabulatedImpedance make_taper_environment(const taper::TaperProfile& profile,
                                                 const FrequencyGrid& grid, double eps_eff,
                                                 std::size_t n_segments = 400,
                                                 double source_impedance = 50.0) {
  auto chain = network::taper_chain(profile, grid, n_segments, eps_eff);
  auto z = network::environment_impedance(chain, source_impedance);
  return {grid, std::move(chain.matrices), std::move(z), source_impedance};
}

/// kappa = 1 / (C Z0), rad/s.
inline double kappa_from_environment(const PumpedResonator& r, const ConstantImpedance& env) {
  detail::require(r.capacitance > 0.0, ErrorKind::InvalidGeometry, "capacitance must be positive");
  detail::require(env.impedance > 0.0, ErrorKind::InvalidGeometry,
                  "environment impedance must be positive");
  return 1.0 / (r.capacitance * env.impedance);
}

// ---------------------------------------------------------------------------
// Rotating-wave gain

struct RwaGain {
  double signal;
  double idler;
  bool near_instability;
};

/// Input-output solution of H = Delta a^dag a + lambda (a^dag^2 + a^2) with damping kappa.
/// omega is the signal offset from half the pump frequency.
inline RwaGain rwa_gain(double omega, double kappa, double lambda, double delta = 0.0) {
  detail::require(kappa > 0.0, ErrorKind::DomainError, "kappa must be positive");
  const complex half = kappa / 2.0;
  const complex den = (half - j * (omega - delta)) * (half - j * (omega + delta)) -
                      4.0 * lambda * lambda;
  const complex g_signal = kappa * (half - j * (omega + delta)) / den - 1.0;
  const complex g_idler = -2.0 * j * kappa * lambda / den;
  return {std::norm(g_signal), std::norm(g_idler), std::abs(den) < 1e-9 * kappa * kappa};
}

/// lambda giving rwa_gain(0, kappa, lambda, 0) = target.
inline double pump_strength_for_gain(double target_gain, double kappa) {
  detail::require(target_gain >= 1.0, ErrorKind::InvalidTarget, "gain target must be >= 1");
  detail::require(kappa > 0.0, ErrorKind::DomainError, "kappa must be positive");
  const double root = std::sqrt(target_gain);
  return 0.25 * kappa * std::sqrt((root - 1.0) / (root + 1.0));
}

// ---------------------------------------------------------------------------
// Profiles

struct GainProfile {
  std::vector<double> frequency;   // Hz
  std::vector<double> gain;        // power ratio
  std::vector<double> idler_gain;  // photon-number ratio
  double peak_gain = 0.0;
  double peak_frequency = 0.0;

  void update_peak() {
    const auto it = std::max_element(gain.begin(), gain.end());
    if (it == gain.end()) return;
    peak_gain = *it;
    peak_frequency = frequency[static_cast<std::size_t>(it - gain.begin())];
  }
};

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// Width of the contiguous band around the peak where gain >= threshold,
/// with crossings interpolated linearly in dB.
inline double gain_bandwidth(const GainProfile& profile, double threshold_db) {
  const auto& g = profile.gain;
  const auto& f = profile.frequency;
  detail::require(!g.empty() && g.size() == f.size(), ErrorKind::InvalidSpec,
                  "gain profile is empty");
  const auto peak = static_cast<std::size_t>(std::max_element(g.begin(), g.end()) - g.begin());
  if (to_db(g[peak]) < threshold_db)
    throw Error(ErrorKind::BelowThreshold, "peak gain " + io::format_number(to_db(g[peak])) +
                                               " dB below threshold");
  auto crossing = [&](std::size_t inside, std::size_t outside) {
    const double gi = to_db(g[inside]);
    const double go = to_db(g[outside]);
    const double t = (gi - threshold_db) / (gi - go);
    return f[inside] + t * (f[outside] - f[inside]);
  };
  std::size_t left = peak;
  while (left > 0 && to_db(g[left - 1]) >= threshold_db) --left;
  std::size_t right = peak;
  while (right + 1 < g.size() && to_db(g[right + 1]) >= threshold_db) ++right;
  const double f_left = left == 0 ? f.front() : crossing(left, left - 1);
  const double f_right = right + 1 == g.size() ? f.back() : crossing(right, right + 1);
  return f_right - f_left;
}

/// Lumped rotating-wave profile; frequencies are offsets from center_frequency (Hz).
inline GainProfile rwa_sweep(const FrequencyGrid& grid, double center_frequency, double kappa,
                             double lambda, double delta = 0.0) {
  GainProfile p;
  p.frequency = grid.points;
  p.gain.resize(grid.size());
  p.idler_gain.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto g =
        rwa_gain(2.0 * constants::pi * (grid.points[i] - center_frequency), kappa, lambda, delta);
    p.gain[i] = g.signal;
    p.idler_gain[i] = g.idler;
  });
  p.update_peak();
  return p;
}

// ---------------------------------------------------------------------------
// Embedded two-tone model

struct EmbeddedGain {
  double signal;  // |Gamma|^2 at the source plane
  double idler;   // idler photons out per signal photon in
};

namespace detail_embedded {

struct Lookup {
  Abcd chain;             // source -> resonator
  complex y_env;          // environment admittance at the resonator node
  double source_impedance;
};

inline Lookup lookup(const EnvironmentModel& env, double frequency) {
  if (const auto* constant = std::get_if<ConstantImpedance>(&env)) {
    detail::require(constant->impedance > 0.0, ErrorKind::InvalidGeometry,
                    "environment impedance must be positive");
    return {Abcd{}, complex(1.0 / constant->impedance, 0.0), constant->impedance};
  }
  const auto& table = std::get<TabulatedImpedance>(env);
  const auto sample = table.at(frequency);
  return {sample.chain, 1.0 / sample.impedance, table.source_impedance};
}

}  // namespace detail_embedded

/// Pumped nodal model. Signal voltage V_s and conjugate idler voltage V_i* at
/// the resonator node are coupled through the modulated inverse inductance:
///   Y(w) = Y_env(w) + j w C + 1/(j w L),   c(w) = eps / (2 j w L_J),
///   Y_eff(w_s) = j w_s C + 1/(j w_s L) - c(w_s) c*(w_i) / Y*(w_i).
/// The gain is the power reflection of Y_eff seen through the chain from the source.
inline EmbeddedGain embedded_gain(const PumpedResonator& r, const EnvironmentModel& env,
                                  double signal_frequency) {
  const double lj = squid_inductance(r);
  const double inductance = lj + r.geometric_inductance;
  const double ws = 2.0 * constants::pi * signal_frequency;
  const double wi = r.pump_frequency - ws;
  if (!(ws > 0.0) || !(wi > 0.0))
    throw Error(ErrorKind::IdlerOutOfRange, "idler frequency must be positive");

  const auto signal = detail_embedded::lookup(env, signal_frequency);
  const auto idler = detail_embedded::lookup(env, wi / (2.0 * constants::pi));

  const complex y_idler = idler.y_env + j * wi * r.capacitance + 1.0 / (j * wi * inductance);
  const double coupling = r.pump_amplitude / (2.0 * lj);
  const complex y_eff = j * ws * r.capacitance + 1.0 / (j * ws * inductance) -
                        coupling * coupling / (ws * wi * std::conj(y_idler));

  // Z_in = (A Z_t + B) / (C Z_t + D) with Z_t = 1 / Y_eff.
  const Abcd& m = signal.chain;
  const double zs = signal.source_impedance;
  const complex num = m.a + m.b * y_eff;
  const complex den = m.c + m.d * y_eff;
  const complex gamma = (num - zs * den) / (num + zs * den);

  // Node voltage for a 1 V incident wave, then the idler it drives.
  const complex v1 = 1.0 + gamma;
  const complex i1 = (1.0 - gamma) / zs;
  const complex v2 = (m.d * v1 - m.b * i1) / m.determinant();
  const complex v_idler_conj = -coupling * v2 / (j * ws * std::conj(y_idler));
  const double p_idler = 0.5 * idler.y_env.real() * std::norm(v_idler_conj);
  const double p_signal = 0.5 / zs;
  return {std::norm(gamma), (p_idler / wi) / (p_signal / ws)};
}

inline GainProfile embedded_sweep(const PumpedResonator& r, const EnvironmentModel& env,
                                  const FrequencyGrid& grid) {
  GainProfile p;
  p.frequency = grid.points;
  p.gain.resize(grid.size());
  p.idler_gain.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto g = embedded_gain(r, env, grid.points[i]);
    p.gain[i] = g.signal;
    p.idler_gain[i] = g.idler;
  });
  p.update_peak();
  return p;
}

/// Smallest pump amplitude whose embedded profile peaks at target_db over the grid.
inline double tune_pump_amplitude(PumpedResonator r, const EnvironmentModel& env,
                                  const FrequencyGrid& grid, double target_db) {
  detail::require(target_db >= 0.0, ErrorKind::InvalidTarget, "gain target must be >= 0 dB");
  auto peak_db = [&](double eps) {
    r.pump_amplitude = eps;
    return to_db(embedded_sweep(r, env, grid).peak_gain);
  };
  double lo = 0.0;
  double hi = -1.0;
  for (double eps = 0.005; eps < 0.995; eps += 0.005) {
    if (peak_db(eps) >= target_db) {
      hi = eps;
      break;
    }
    lo = eps;
  }
  if (hi < 0.0)
    throw Error(ErrorKind::InvalidTarget, "target gain not reachable with pump amplitude < 1");
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (peak_db(mid) >= target_db ? hi : lo) = mid;
  }
  return hi;
}

/// Relative saturation-power change (dB) between two designs, P_sat ~ C / Z0.
inline double saturation_scaling(double c1, double z1, double c2, double z2) {
  detail::require(c1 > 0.0 && z1 > 0.0 && c2 > 0.0 && z2 > 0.0, ErrorKind::InvalidGeometry,
                  "capacitances and impedances must be positive");
  return 10.0 * std::log10((c2 / z2) / (c1 / z1));
}

}  // namespace impa::paramp
