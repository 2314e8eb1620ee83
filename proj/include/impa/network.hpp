#pragma once

// Two-port algebra for the segmented taper: ABCD cascade, S-parameters with
// per-port real reference impedances, environment impedance, Touchstone I/O.

#include <cmath>
#include <complex>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "impa/constants.hpp"
#include "impa/error.hpp"
#include "impa/io.hpp"
#include "impa/parallel.hpp"
#include "impa/taper.hpp"

namespace impa::network {

using complex = std::complex<double>;

struct FrequencyGrid {
  std::vector<double> points;  // Hz

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  static FrequencyGrid linspace(double start, double stop, std::size_t count) {
    detail::require(count >= 1, ErrorKind::InvalidSpec, "grid needs at least one point");
    FrequencyGrid grid;
    grid.points.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      grid.points[i] = count == 1 ? start
                                  : start + (stop - start) * static_cast<double>(i) /
                                                static_cast<double>(count - 1);
    grid.validate();
    return grid;
  }

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      detail::require(points[i] > 0.0, ErrorKind::InvalidSpec, "grid frequencies must be positive");
      if (i > 0)
        detail::require(points[i] > points[i - 1], ErrorKind::InvalidSpec,
                        "grid frequencies must be strictly increasing");
    }
  }

  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;
};

/// Single-frequency ABCD matrix: [V1; I1] = [A B; C D] [V2; I2], I2 leaving port 2.
struct Abcd {
  complex a{1.0}, b{0.0}, c{0.0}, d{1.0};

  complex determinant() const { return a * d - b * c; }

  /// Same network seen from port 2 (valid for reciprocal networks).
  Abcd reversed() const { return {d, b, c, a}; }

  friend Abcd operator*(const Abcd& x, const Abcd& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d};
  }
};

struct TwoPortABCD {
  FrequencyGrid grid;
  std::vector<Abcd> matrices;
};

struct SMatrix {
  complex s11, s12, s21, s22;
};

struct ScatteringData {
  FrequencyGrid grid;
  std::vector<SMatrix> s;
  double z_ref1 = 50.0;
  double z_ref2 = 50.0;
};

/// Uniform lossless line section of impedance z0 and electrical length beta_l.
inline Abcd segment_abcd(double z0, double beta_l) {
  detail::require(z0 > 0.0, ErrorKind::InvalidGeometry, "line impedance must be positive");
  const double c = std::cos(beta_l);
  const double s = std::sin(beta_l);
  return {complex(c, 0.0), complex(0.0, z0 * s), complex(0.0, s / z0), complex(c, 0.0)};
}

/// Matrix product in port order: chain[0] sits at port 1.
inline TwoPortABCD cascade(std::span<const TwoPortABCD> chain) {
  detail::require(!chain.empty(), ErrorKind::GridMismatch, "cannot cascade an empty chain");
  TwoPortABCD result = chain.front();
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const auto& next = chain[k];
    if (!(next.grid == result.grid) || next.matrices.size() != result.matrices.size())
      throw Error(ErrorKind::GridMismatch, "cascade elements use different frequency grids");
    for (std::size_t i = 0; i < result.matrices.size(); ++i)
      result.matrices[i] = result.matrices[i] * next.matrices[i];
  }
  return result;
}

inline SMatrix abcd_to_s(const Abcd& m, double z_ref1, double z_ref2) {
  detail::require(z_ref1 > 0.0 && z_ref2 > 0.0, ErrorKind::InvalidGeometry,
                  "reference impedances must be positive");
  const complex den = m.a * z_ref2 + m.b + m.c * z_ref1 * z_ref2 + m.d * z_ref1;
  if (!(std::abs(den) > 1e-300) || !std::isfinite(std::abs(den)))
    throw Error(ErrorKind::SingularConversion, "ABCD to S denominator vanishes");
  const double root = std::sqrt(z_ref1 * z_ref2);
  return {(m.a * z_ref2 + m.b - m.c * z_ref1 * z_ref2 - m.d * z_ref1) / den,
          2.0 * root * m.determinant() / den, 2.0 * root / den,
          (-m.a * z_ref2 + m.b - m.c * z_ref1 * z_ref2 + m.d * z_ref1) / den};
}

inline Abcd s_to_abcd(const SMatrix& s, double z_ref1, double z_ref2) {
  detail::require(z_ref1 > 0.0 && z_ref2 > 0.0, ErrorKind::InvalidGeometry,
                  "reference impedances must be positive");
  if (std::abs(s.s21) == 0.0)
    throw Error(ErrorKind::SingularConversion, "S21 = 0 has no ABCD representation");
  const double root = std::sqrt(z_ref1 * z_ref2);
  const complex twice = 2.0 * s.s21;
  const complex cross = s.s12 * s.s21;
  return {std::sqrt(z_ref1 / z_ref2) * ((1.0 + s.s11) * (1.0 - s.s22) + cross) / twice,
          root * ((1.0 + s.s11) * (1.0 + s.s22) - cross) / twice,
          ((1.0 - s.s11) * (1.0 - s.s22) - cross) / (twice * root),
          std::sqrt(z_ref2 / z_ref1) * ((1.0 - s.s11) * (1.0 + s.s22) + cross) / twice};
}

inline ScatteringData abcd_to_s(const TwoPortABCD& m, double z_ref1, double z_ref2) {
  ScatteringData out{m.grid, {}, z_ref1, z_ref2};
  out.s.reserve(m.matrices.size());
  for (const auto& x : m.matrices) out.s.push_back(abcd_to_s(x, z_ref1, z_ref2));
  return out;
}

inline ScatteringData renormalize(const ScatteringData& data, double z_ref) {
  if (data.z_ref1 == z_ref && data.z_ref2 == z_ref) return data;
  ScatteringData out{data.grid, {}, z_ref, z_ref};
  out.s.reserve(data.s.size());
  for (const auto& s : data.s)
    out.s.push_back(abcd_to_s(s_to_abcd(s, data.z_ref1, data.z_ref2), z_ref, z_ref));
  return out;
}

/// Impedance looking into port 1 with port 2 terminated in z_term.
inline complex input_impedance(const Abcd& m, complex z_term) {
  return (m.a * z_term + m.b) / (m.c * z_term + m.d);
}

inline double propagation_constant(double frequency, double eps_eff) {
  return 2.0 * constants::pi * frequency * std::sqrt(eps_eff) / constants::speed_of_light;
}

/// Chain of n_segments uniform sections, each carrying the profile impedance at its midpoint.
inline std::vector<double> segment_impedances(const taper::TaperProfile& profile,
                                              std::size_t n_segments) {
  std::vector<double> z(n_segments);
  parallel_for(n_segments, [&](std::size_t i) {
    z[i] = profile.impedance_at(profile.length * (static_cast<double>(i) + 0.5) /
                                static_cast<double>(n_segments));
  });
  return z;
}

inline Abcd segmented_line(std::span<const double> impedances, double segment_beta_l) {
  Abcd m;
  for (double z0 : impedances) m = m * segment_abcd(z0, segment_beta_l);
  return m;
}

inline TwoPortABCD taper_chain(const taper::TaperProfile& profile, const FrequencyGrid& grid,
                               std::size_t n_segments, double eps_eff) {
  detail::require(n_segments >= 1, ErrorKind::InvalidGeometry, "need at least one segment");
  grid.validate();
  TwoPortABCD out{grid, std::vector<Abcd>(grid.size())};
  if (profile.length <= 0.0) return out;
  const auto impedances = segment_impedances(profile, n_segments);
  const double segment_length = profile.length / static_cast<double>(n_segments);
  parallel_for(grid.size(), [&](std::size_t i) {
    out.matrices[i] =
        segmented_line(impedances, propagation_constant(grid.points[i], eps_eff) * segment_length);
  });
  return out;
}

/// Mixed-reference S-parameters of the segmented taper. Port 1 is the z = 0 end.
inline ScatteringData taper_sparams(const taper::TaperProfile& profile, const FrequencyGrid& grid,
                                    std::size_t n_segments, double eps_eff, double z_ref1,
                                    double z_ref2) {
  detail::require(n_segments >= 10, ErrorKind::InvalidGeometry, "need at least 10 segments");
  return abcd_to_s(taper_chain(profile, grid, n_segments, eps_eff), z_ref1, z_ref2);
}

/// Impedance seen from port 2 looking back through the chain into a port-1 termination.
inline std::vector<complex> environment_impedance(const TwoPortABCD& chain, double termination) {
  detail::require(termination > 0.0, ErrorKind::InvalidGeometry, "termination must be positive");
  std::vector<complex> z;
  z.reserve(chain.matrices.size());
  for (const auto& m : chain.matrices) z.push_back(input_impedance(m.reversed(), termination));
  return z;
}

inline std::vector<complex> environment_impedance(const taper::TaperProfile& profile,
                                                  const FrequencyGrid& grid, double termination,
                                                  double eps_eff, std::size_t n_segments = 400) {
  return environment_impedance(taper_chain(profile, grid, n_segments, eps_eff), termination);
}

// ---------------------------------------------------------------------------
// File formats

inline double to_db(complex s) { return 20.0 * std::log10(std::max(std::abs(s), 1e-20)); }

/// Touchstone v1 two-port text, renormalized to a single real reference.
inline std::string to_touchstone(const ScatteringData& data, double z_ref = 50.0) {
  if (data.grid.empty() || data.s.empty())
    throw Error(ErrorKind::IoError, "refusing to write a Touchstone file with no frequency points");
  const auto s = renormalize(data, z_ref);
  std::string out = "! two-port S-parameters, real/imaginary, reference " +
                    io::format_number(z_ref) + " ohm\n";
  out += "# GHz S RI R " + io::format_number(z_ref) + "\n";
  for (std::size_t i = 0; i < s.s.size(); ++i) {
    const auto& m = s.s[i];
    out += io::format_number(s.grid.points[i] * 1e-9);
    for (complex v : {m.s11, m.s21, m.s12, m.s22}) {
      out += ' ';
      out += io::format_number(v.real());
      out += ' ';
      out += io::format_number(v.imag());
    }
    out += '\n';
  }
  return out;
}

inline void write_touchstone(const ScatteringData& data, const std::filesystem::path& path,
                             double z_ref = 50.0) {
  io::write_file_atomic(path, to_touchstone(data, z_ref));
}

/// Reads two-port Touchstone v1 (Hz/kHz/MHz/GHz; RI, MA or DB).
inline ScatteringData parse_touchstone(const std::string& text) {
  double unit = 1e9;
  enum class Format { RI, MA, DB } format = Format::MA;
  double z_ref = 50.0;
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  bool saw_option = false;
  while (std::getline(in, line)) {
    if (const auto bang = line.find('!'); bang != std::string::npos) line.erase(bang);
    std::istringstream tokens(line);
    std::string token;
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos &&
        line[line.find_first_not_of(" \t\r")] == '#') {
      saw_option = true;
      tokens >> token;  // '#'
      while (tokens >> token) {
        for (auto& ch : token) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (token == "HZ") unit = 1.0;
        else if (token == "KHZ") unit = 1e3;
        else if (token == "MHZ") unit = 1e6;
        else if (token == "GHZ") unit = 1e9;
        else if (token == "RI") format = Format::RI;
        else if (token == "MA") format = Format::MA;
        else if (token == "DB") format = Format::DB;
        else if (token == "S") continue;
        else if (token == "R") {
          if (!(tokens >> z_ref)) throw Error(ErrorKind::IoError, "missing reference impedance");
        } else {
          throw Error(ErrorKind::IoError, "unsupported Touchstone option '" + token + "'");
        }
      }
      continue;
    }
    while (tokens >> token) {
      try {
        values.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw Error(ErrorKind::IoError, "bad Touchstone token '" + token + "'");
      }
    }
  }
  if (!saw_option) throw Error(ErrorKind::IoError, "Touchstone option line missing");
  if (values.empty() || values.size() % 9 != 0)
    throw Error(ErrorKind::IoError, "Touchstone data is not a multiple of 9 values");
  ScatteringData data{{}, {}, z_ref, z_ref};
  auto pair = [format](double x, double y) {
    switch (format) {
      case Format::RI: return complex(x, y);
      case Format::MA: return std::polar(x, y * constants::pi / 180.0);
      case Format::DB: return std::polar(std::pow(10.0, x / 20.0), y * constants::pi / 180.0);
    }
    return complex{};
  };
  for (std::size_t k = 0; k < values.size(); k += 9) {
    data.grid.points.push_back(values[k] * unit);
    data.s.push_back({pair(values[k + 1], values[k + 2]), pair(values[k + 5], values[k + 6]),
                      pair(values[k + 3], values[k + 4]), pair(values[k + 7], values[k + 8])});
  }
  data.grid.validate();
  return data;
}

inline ScatteringData read_touchstone(const std::filesystem::path& path) {
  return parse_touchstone(io::read_file(path));
}

/// |S11| and |S21| in dB; magnitudes are floored at -400 dB.
inline std::string sparams_db_csv(const ScatteringData& data) {
  std::vector<double> s11, s21;
  for (const auto& m : data.s) {
    s11.push_back(to_db(m.s11));
    s21.push_back(to_db(m.s21));
  }
  return io::to_csv({"freq_hz", "s11_db", "s21_db"}, {data.grid.points, s11, s21});
}

}  // namespace impa::network
