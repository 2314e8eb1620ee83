#pragma once

// Two-stage amplification chain noise arithmetic.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "impa/constants.hpp"
#include "impa/error.hpp"

namespace impa::noise {

struct NoiseChain {
  double t_first_stage;   // K, parametric amplifier
  double t_second_stage;  // K, HEMT
  double gain;            // power ratio of the first stage
};

/// SNR improvement from inserting the first stage: (T_1/T_2 + 1/G)^-1.
inline double snr_improvement(const NoiseChain& chain) {
  detail::require(chain.t_second_stage > 0.0, ErrorKind::DomainError,
                  "second-stage temperature must be positive");
  detail::require(chain.t_first_stage >= 0.0, ErrorKind::DomainError,
                  "first-stage temperature must be nonnegative");
  detail::require(chain.gain >= 1.0, ErrorKind::DomainError, "gain must be >= 1");
  const double inverse_gain = std::isinf(chain.gain) ? 0.0 : 1.0 / chain.gain;
  const double denominator = chain.t_first_stage / chain.t_second_stage + inverse_gain;
  if (denominator == 0.0)
    throw Error(ErrorKind::DivisionDomain, "noiseless first stage with infinite gain");
  return 1.0 / denominator;
}

/// T_1 = T_2 (1/snr - 1/G).
inline double noise_temperature_from_snr(double snr, double t_second, double gain) {
  detail::require(snr > 0.0, ErrorKind::DomainError, "SNR improvement must be positive");
  detail::require(t_second > 0.0, ErrorKind::DomainError,
                  "second-stage temperature must be positive");
  detail::require(gain >= 1.0, ErrorKind::DomainError, "gain must be >= 1");
  const double excess = 1.0 / snr - 1.0 / gain;
  if (!(excess > 0.0))
    throw Error(ErrorKind::Unphysical, "SNR improvement exceeds the gain; implies T < 0");
  return t_second * excess;
}

struct TemperatureInterval {
  double low;   // K
  double high;  // K
};

/// Noise temperature over an uncertain second-stage temperature range.
inline TemperatureInterval noise_temperature_interval(double snr, double t_second_min,
                                                      double t_second_max, double gain) {
  detail::require(t_second_min <= t_second_max, ErrorKind::DomainError,
                  "second-stage range is reversed");
  return {noise_temperature_from_snr(snr, t_second_min, gain),
          noise_temperature_from_snr(snr, t_second_max, gain)};
}

/// Half-photon added noise, h f / (2 k_B).
inline double quantum_limit_temperature(double frequency) {
  detail::require(frequency > 0.0, ErrorKind::DomainError, "frequency must be positive");
  return constants::planck * frequency / (2.0 * constants::boltzmann);
}

/// P = hbar omega_r kappa_r n.
inline double photon_flux_power(double omega_r, double kappa_r, double n_bar) {
  detail::require(omega_r > 0.0 && kappa_r > 0.0, ErrorKind::DomainError,
                  "resonator frequency and linewidth must be positive");
  detail::require(n_bar >= 0.0, ErrorKind::DomainError, "photon number must be nonnegative");
  return constants::hbar * omega_r * kappa_r * n_bar;
}

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }
inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

/// Contiguous band around the quietest point where T_noise <= max_ratio * T_quantum.
/// The ratio has no canonical value and must be chosen by the caller.
inline std::optional<double> noise_bandwidth(const std::vector<double>& frequency,
                                             const std::vector<double>& t_noise,
                                             double max_ratio) {
  detail::require(frequency.size() == t_noise.size() && !frequency.empty(),
                  ErrorKind::DomainError, "frequency and temperature tables must match");
  detail::require(max_ratio >= 1.0, ErrorKind::DomainError, "ratio to the quantum limit must be >= 1");
  std::vector<double> ratio(frequency.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < frequency.size(); ++i) {
    ratio[i] = t_noise[i] / quantum_limit_temperature(frequency[i]);
    if (ratio[i] < ratio[best]) best = i;
  }
  if (ratio[best] > max_ratio) return std::nullopt;
  std::size_t left = best;
  while (left > 0 && ratio[left - 1] <= max_ratio) --left;
  std::size_t right = best;
  while (right + 1 < ratio.size() && ratio[right + 1] <= max_ratio) ++right;
  return frequency[right] - frequency[left];
}

}  // namespace impa::noise
