#pragma once

// Klopfenstein impedance taper synthesis and its coplanar-waveguide realization.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "impa/constants.hpp"
#include "impa/error.hpp"
#include "impa/io.hpp"
#include "impa/parallel.hpp"
#include "impa/special.hpp"

namespace impa::taper {

inline double default_eps_eff(double substrate_eps_r) { return 0.5 * (substrate_eps_r + 1.0); }

struct TaperDesignSpec {
  double z_source = 50.0;                   // ohm
  double z_load = 18.0;                     // ohm
  double gamma_max = 0.31622776601683794;   // -10 dB
  double f_cutoff = 2e9;                    // Hz
  double eps_eff = default_eps_eff(11.9);
  double gap = 3e-6;                        // m
  double substrate_eps_r = 11.9;

  /// Log-ratio reflection coefficient, 0.5 ln(z_load / z_source).
  double gamma0() const { return 0.5 * std::log(z_load / z_source); }
};

inline void validate(const TaperDesignSpec& spec) {
  using detail::require;
  require(spec.z_source > 0.0 && spec.z_load > 0.0, ErrorKind::InvalidSpec,
          "impedances must be positive");
  require(spec.z_source != spec.z_load, ErrorKind::InvalidSpec,
          "source and load impedance are equal; nothing to transform");
  require(spec.gamma_max > 0.0, ErrorKind::InvalidSpec, "gamma_max must be positive");
  require(spec.f_cutoff > 0.0, ErrorKind::InvalidSpec, "f_cutoff must be positive");
  require(spec.eps_eff > 1.0, ErrorKind::InvalidSpec, "eps_eff must exceed 1");
  require(spec.gap > 0.0, ErrorKind::InvalidSpec, "gap must be positive");
  require(spec.gamma_max < std::abs(spec.gamma0()), ErrorKind::DesignInfeasible,
          "gamma_max >= |gamma0|: a direct connection already meets the reflection bound");
}

/// A = acosh(|gamma0| / gamma_max).
inline double ripple_parameter(const TaperDesignSpec& spec) {
  validate(spec);
  return std::acosh(std::abs(spec.gamma0()) / spec.gamma_max);
}

/// phi(x, A) = int_0^x I1(A sqrt(1-y^2)) / (A sqrt(1-y^2)) dy.
///
/// Evaluated with y = sin(t), which turns the square-root endpoint behaviour
/// into a smooth integrand cos(t) * I1(A cos t) / (A cos t).
inline double klopfenstein_phi(double x, double ripple) {
  detail::require(std::abs(x) <= 1.0, ErrorKind::DomainError, "phi argument must lie in [-1, 1]");
  detail::require(ripple >= 0.0, ErrorKind::DomainError, "ripple parameter must be nonnegative");
  if (x == 0.0) return 0.0;
  const double upper = std::asin(std::abs(x));
  const special::GaussKronrod quad(1e-13);
  const double value = quad.integrate(
      [ripple](double t) {
        const double c = std::cos(t);
        return c * special::bessel_i1_over_x(ripple * c);
      },
      0.0, upper);
  return x < 0.0 ? -value : value;
}

/// Physical length giving beta * L = A at the cutoff frequency.
inline double taper_length(const TaperDesignSpec& spec) {
  const double ripple = ripple_parameter(spec);
  return ripple * constants::speed_of_light /
         (2.0 * constants::pi * spec.f_cutoff * std::sqrt(spec.eps_eff));
}

// ---------------------------------------------------------------------------
// Coplanar waveguide geometry

/// Quasi-static CPW impedance (zero metal thickness, thick substrate):
/// Z0 = 30 pi / sqrt(eps_eff) * K(k') / K(k),  k = w / (w + 2 s).
inline double cpw_impedance(double width, double gap, double eps_eff) {
  detail::require(width > 0.0 && gap > 0.0, ErrorKind::InvalidGeometry,
                  "CPW width and gap must be positive");
  detail::require(eps_eff >= 1.0, ErrorKind::InvalidGeometry, "eps_eff must be >= 1");
  const double total = width + 2.0 * gap;
  const double k = width / total;
  // k' = sqrt((1 - k)(1 + k)) with 1 - k = 2s / (w + 2s) formed exactly.
  const double kc = std::sqrt((2.0 * gap / total) * ((2.0 * width + 2.0 * gap) / total));
  const double ratio = special::elliptic_k(kc, k) / special::elliptic_k(k, kc);
  return 30.0 * constants::pi / std::sqrt(eps_eff) * ratio;
}

struct WidthBracket {
  double narrow;  // m
  double wide;    // m
};

inline WidthBracket default_width_bracket(double gap) { return {1e-4 * gap, 1e5 * gap}; }

/// Inverts cpw_impedance by bisection on log(width); impedance falls monotonically with width.
inline double cpw_width_for_impedance(double target_z, double gap, double eps_eff,
                                      WidthBracket bracket) {
  detail::require(target_z > 0.0, ErrorKind::InvalidGeometry, "target impedance must be positive");
  detail::require(bracket.narrow > 0.0 && bracket.wide > bracket.narrow, ErrorKind::BracketError,
                  "bracket must satisfy 0 < narrow < wide");
  const double z_high = cpw_impedance(bracket.narrow, gap, eps_eff);
  const double z_low = cpw_impedance(bracket.wide, gap, eps_eff);
  if (target_z > z_high || target_z < z_low)
    throw Error(ErrorKind::BracketError, "target " + io::format_number(target_z) +
                                             " ohm outside bracket range [" +
                                             io::format_number(z_low) + ", " +
                                             io::format_number(z_high) + "] ohm");
  double lo = std::log(bracket.narrow);
  double hi = std::log(bracket.wide);
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    mid = 0.5 * (lo + hi);
    const double z = cpw_impedance(std::exp(mid), gap, eps_eff);
    if (std::abs(z - target_z) <= 1e-13 * target_z) break;
    if (z > target_z)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return std::exp(mid);
}

inline double cpw_width_for_impedance(double target_z, double gap, double eps_eff) {
  return cpw_width_for_impedance(target_z, gap, eps_eff, default_width_bracket(gap));
}

// ---------------------------------------------------------------------------
// Profile

struct ProfileSample {
  double position;   // m
  double impedance;  // ohm
  double width;      // m
};

struct TaperProfile {
  std::vector<ProfileSample> samples;
  double length = 0.0;  // m
  double ripple = 0.0;  // A
  double gamma0 = 0.0;
  double z_source = 0.0;
  double z_load = 0.0;

  /// Continuous Klopfenstein impedance at position z in [0, length].
  double impedance_at(double z) const {
    const double mean_log = 0.5 * std::log(z_source * z_load);
    if (length <= 0.0) return std::exp(mean_log);
    detail::require(z >= 0.0 && z <= length, ErrorKind::DomainError,
                    "position outside the taper");
    const double x = std::clamp(2.0 * z / length - 1.0, -1.0, 1.0);
    return std::exp(mean_log +
                    gamma0 / std::cosh(ripple) * ripple * ripple * klopfenstein_phi(x, ripple));
  }
};

inline TaperProfile impedance_profile(const TaperDesignSpec& spec, std::size_t n_samples = 401) {
  detail::require(n_samples >= 2, ErrorKind::InvalidSpec, "need at least two profile samples");
  TaperProfile profile;
  profile.ripple = ripple_parameter(spec);
  profile.gamma0 = spec.gamma0();
  profile.z_source = spec.z_source;
  profile.z_load = spec.z_load;
  profile.length = taper_length(spec);
  profile.samples.resize(n_samples);
  const auto bracket = default_width_bracket(spec.gap);
  parallel_for(n_samples, [&](std::size_t i) {
    const double z = profile.length * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    const double impedance = profile.impedance_at(z);
    double width = 0.0;
    try {
      width = cpw_width_for_impedance(impedance, spec.gap, spec.eps_eff, bracket);
    } catch (const Error& e) {
      throw Error(ErrorKind::WidthSolveFailure,
                  "sample " + std::to_string(i) + ": " + std::string(e.what()));
    }
    profile.samples[i] = {z, impedance, width};
  });
  return profile;
}

/// Small-reflection Klopfenstein response:
/// |Gamma| = |gamma0| |cos(sqrt((beta L)^2 - A^2))| / cosh A, with cos -> cosh below cutoff.
inline double analytic_input_reflection(const TaperDesignSpec& spec, double frequency) {
  detail::require(frequency >= 0.0, ErrorKind::DomainError, "frequency must be nonnegative");
  const double ripple = ripple_parameter(spec);
  const double beta_l = 2.0 * constants::pi * frequency * std::sqrt(spec.eps_eff) /
                        constants::speed_of_light * taper_length(spec);
  const double arg = beta_l * beta_l - ripple * ripple;
  const double shape = arg >= 0.0 ? std::cos(std::sqrt(arg)) : std::cosh(std::sqrt(-arg));
  return std::abs(spec.gamma0()) * std::abs(shape) / std::cosh(ripple);
}

inline std::string profile_to_csv(const TaperProfile& profile) {
  std::vector<double> z, imp, w;
  for (const auto& s : profile.samples) {
    z.push_back(s.position);
    imp.push_back(s.impedance);
    w.push_back(s.width);
  }
  return io::to_csv({"z_m", "impedance_ohm", "width_m"}, {z, imp, w});
}

inline void write_profile_csv(const TaperProfile& profile, const std::filesystem::path& path) {
  io::write_file_atomic(path, profile_to_csv(profile));
}

}  // namespace impa::taper
