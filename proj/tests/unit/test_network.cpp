#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <random>

#include "impa/network.hpp"

using Catch::Approx;
using namespace impa;
using namespace impa::network;

namespace {

constexpr double kPi = 3.14159265358979323846;

bool has_kind(const std::function<void()>& fn, ErrorKind kind) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

TwoPortABCD single(const Abcd& m, double f = 1e9) {
  return {FrequencyGrid{{f}}, {m}};
}

}  // namespace

TEST_CASE("Segment ABCD special lengths", "[network]") {
  const auto zero = segment_abcd(50.0, 0.0);
  CHECK(zero.a == complex(1.0));
  CHECK(zero.b == complex(0.0));
  const auto quarter = segment_abcd(50.0, kPi / 2);
  CHECK(std::abs(quarter.a) < 1e-15);
  CHECK(quarter.b.imag() == Approx(50.0));
  CHECK(quarter.c.imag() == Approx(1.0 / 50.0));
  const auto half = segment_abcd(50.0, kPi);
  CHECK(half.a.real() == Approx(-1.0));
  CHECK(std::abs(half.b) < 1e-13);
  CHECK(std::abs(segment_abcd(37.0, 0.7).determinant() - 1.0) < 1e-15);
  CHECK(has_kind([] { segment_abcd(0.0, 1.0); }, ErrorKind::InvalidGeometry));
}

TEST_CASE("Cascade composes in port order and checks grids", "[network]") {
  const auto q = single(segment_abcd(50.0, kPi / 2));
  const std::array<TwoPortABCD, 2> two{q, q};
  const auto h = cascade(two).matrices[0];
  const auto ref = segment_abcd(50.0, kPi);
  CHECK(std::abs(h.a - ref.a) < 1e-14);
  CHECK(std::abs(h.b - ref.b) < 1e-12);
  const std::array<TwoPortABCD, 1> one{q};
  CHECK(cascade(one).matrices[0].b == q.matrices[0].b);
  const std::array<TwoPortABCD, 2> mismatched{q, single(Abcd{}, 2e9)};
  CHECK(has_kind([&] { cascade(mismatched); }, ErrorKind::GridMismatch));
}

TEST_CASE("ABCD to S with equal and mixed references", "[network]") {
  const auto s = abcd_to_s(Abcd{}, 50.0, 50.0);
  CHECK(std::abs(s.s11) < 1e-15);
  CHECK(std::abs(s.s21 - 1.0) < 1e-15);
  const auto step = abcd_to_s(Abcd{}, 50.0, 18.0);
  CHECK(std::abs(step.s11) == Approx(32.0 / 68.0).epsilon(1e-14));
  const auto qw = abcd_to_s(segment_abcd(std::sqrt(50.0 * 18.0), kPi / 2), 50.0, 18.0);
  CHECK(std::abs(qw.s11) < 1e-12);
  CHECK(std::abs(qw.s21) == Approx(1.0).epsilon(1e-12));
  CHECK(has_kind([] { abcd_to_s(Abcd{0.0, 0.0, 0.0, 0.0}, 50.0, 50.0); },
                 ErrorKind::SingularConversion));
}

TEST_CASE("S to ABCD inverts the conversion", "[network][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> zdist(5.0, 120.0), ldist(0.0, 6.0);
  for (int i = 0; i < 100; ++i) {
    const double z1 = zdist(rng), z2 = zdist(rng);
    const auto m = segment_abcd(zdist(rng), ldist(rng)) * segment_abcd(zdist(rng), ldist(rng));
    const auto back = s_to_abcd(abcd_to_s(m, z1, z2), z1, z2);
    CHECK(std::abs(back.a - m.a) < 1e-10);
    CHECK(std::abs(back.b - m.b) < 1e-8);
    CHECK(std::abs(back.c - m.c) < 1e-12);
    CHECK(std::abs(back.d - m.d) < 1e-10);
  }
}

TEST_CASE("Quarter-wave input impedance", "[network]") {
  const auto m = segment_abcd(30.0, kPi / 2);
  const complex z = input_impedance(m, 50.0);
  CHECK(std::abs(z - complex(18.0)) < 1e-12);
  const TwoPortABCD chain = single(m);
  CHECK(std::abs(environment_impedance(chain, 50.0)[0] - complex(18.0)) < 1e-12);
}

TEST_CASE("Taper cascade is lossless, reciprocal and unimodular", "[network][property]") {
  const taper::TaperDesignSpec spec;
  const auto profile = taper::impedance_profile(spec);
  const auto grid = FrequencyGrid::linspace(1e8, 12e9, 601);
  const auto chain = taper_chain(profile, grid, 400, spec.eps_eff);
  for (const auto& m : chain.matrices) CHECK(std::abs(m.determinant() - 1.0) < 1e-8);
  const std::size_t n = GENERATE(10, 57, 400);
  const auto data = taper_sparams(profile, grid, n, spec.eps_eff, 50.0, 18.0);
  for (const auto& s : data.s) {
    CHECK(std::abs(std::norm(s.s11) + std::norm(s.s21) - 1.0) < 1e-9);
    CHECK(std::abs(s.s21 - s.s12) < 1e-12);
  }
}

TEST_CASE("Taper meets the reflection design above cutoff", "[network]") {
  const taper::TaperDesignSpec spec;
  const auto profile = taper::impedance_profile(spec);
  const auto grid = FrequencyGrid::linspace(2e9, 12e9, 1001);
  const auto data = taper_sparams(profile, grid, 400, spec.eps_eff, 50.0, 18.0);
  const double lossless_il = -10.0 * std::log10(1.0 - spec.gamma_max * spec.gamma_max);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(to_db(data.s[i].s11) <= -9.5);
    CHECK(-to_db(data.s[i].s21) <= lossless_il + 1e-3);
    if (to_db(data.s[i].s11) <= -11.8) CHECK(-to_db(data.s[i].s21) <= 0.3);
    if (grid.points[i] >= 2.5e9)
      CHECK(std::abs(std::abs(data.s[i].s11) -
                     taper::analytic_input_reflection(spec, grid.points[i])) <= 0.03);
  }
}

TEST_CASE("Segment count has converged at 400", "[network]") {
  const taper::TaperDesignSpec spec;
  const auto profile = taper::impedance_profile(spec);
  const auto grid = FrequencyGrid::linspace(1e9, 12e9, 45);
  const auto a = taper_sparams(profile, grid, 400, spec.eps_eff, 50.0, 18.0);
  const auto b = taper_sparams(profile, grid, 800, spec.eps_eff, 50.0, 18.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(std::abs(a.s[i].s11) - std::abs(b.s[i].s11)) <= 1e-3);
}

TEST_CASE("Too few segments are rejected", "[network]") {
  const auto profile = taper::impedance_profile(taper::TaperDesignSpec{}, 11);
  CHECK(has_kind([&] { taper_sparams(profile, FrequencyGrid{{1e9}}, 9, 6.45, 50.0, 18.0); },
                 ErrorKind::InvalidGeometry));
}

TEST_CASE("Environment impedance is passive and approaches the load end", "[network]") {
  const taper::TaperDesignSpec spec;
  const auto profile = taper::impedance_profile(spec);
  const auto grid = FrequencyGrid::linspace(1e8, 20e9, 400);
  const auto z = environment_impedance(profile, grid, 50.0, spec.eps_eff);
  for (const auto& v : z) CHECK(v.real() > 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.points[i] < 4e9) continue;
    const complex gamma = (z[i] - 18.0) / (z[i] + 18.0);
    CHECK(std::abs(gamma) <= spec.gamma_max + 1e-3);
  }
  taper::TaperProfile empty;
  empty.z_source = 50.0;
  empty.z_load = 50.0;
  const auto flat = environment_impedance(empty, grid, 50.0, spec.eps_eff);
  for (const auto& v : flat) CHECK(std::abs(v - complex(50.0)) < 1e-12);
}

TEST_CASE("Touchstone round trip and format", "[network][io]") {
  const taper::TaperDesignSpec spec;
  const auto profile = taper::impedance_profile(spec);
  const auto grid = FrequencyGrid::linspace(1e9, 12e9, 23);
  const auto data = taper_sparams(profile, grid, 400, spec.eps_eff, 50.0, 18.0);
  const auto text = to_touchstone(data);
  CHECK(text.find("# GHz S RI R 50\n") != std::string::npos);
  const auto back = parse_touchstone(text);
  const auto ref = renormalize(data, 50.0);
  REQUIRE(back.s.size() == ref.s.size());
  for (std::size_t i = 0; i < ref.s.size(); ++i) {
    CHECK(back.grid.points[i] == Approx(grid.points[i]).epsilon(1e-11));
    CHECK(std::abs(back.s[i].s11 - ref.s[i].s11) < 1e-9);
    CHECK(std::abs(back.s[i].s21 - ref.s[i].s21) < 1e-9);
    CHECK(std::abs(back.s[i].s12 - ref.s[i].s12) < 1e-9);
    CHECK(std::abs(back.s[i].s22 - ref.s[i].s22) < 1e-9);
  }
  const auto dir = std::filesystem::temp_directory_path() / "impa_network_test";
  write_touchstone(data, dir / "t.s2p");
  CHECK(read_touchstone(dir / "t.s2p").s.size() == 23);
  std::filesystem::remove_all(dir);
}

TEST_CASE("Touchstone of the identity network has zero reflection", "[network][io]") {
  const ScatteringData data = abcd_to_s(TwoPortABCD{FrequencyGrid{{1e9, 2e9}}, {Abcd{}, Abcd{}}}, 50.0, 50.0);
  const auto back = parse_touchstone(to_touchstone(data));
  for (const auto& s : back.s) {
    CHECK(s.s11 == complex(0.0));
    CHECK(s.s21 == complex(1.0));
  }
}

TEST_CASE("Touchstone reader accepts other units and formats", "[network][io]") {
  const auto data = parse_touchstone(
      "! comment\n# MHz S MA R 50\n1000 0.5 90 1 0 1 0 0.5 -90\n2000 0 0 1 180 1 180 0 0\n");
  CHECK(data.grid.points[0] == Approx(1e9));
  CHECK(data.s[0].s11.imag() == Approx(0.5));
  CHECK(data.s[1].s21.real() == Approx(-1.0));
  const auto db = parse_touchstone("# Hz S DB R 50\n5 -20 0 0 0 0 0 -20 0\n");
  CHECK(std::abs(db.s[0].s11) == Approx(0.1));
}

TEST_CASE("Empty grids and malformed files raise IoError", "[network][io]") {
  CHECK(has_kind([] { to_touchstone(ScatteringData{}); }, ErrorKind::IoError));
  CHECK(has_kind([] { parse_touchstone("1 2 3\n"); }, ErrorKind::IoError));
  CHECK(has_kind([] { parse_touchstone("# GHz S RI R 50\n1 2 3\n"); }, ErrorKind::IoError));
}

TEST_CASE("dB CSV export header", "[network][io]") {
  const ScatteringData data = abcd_to_s(TwoPortABCD{FrequencyGrid{{1e9}}, {Abcd{}}}, 50.0, 18.0);
  const auto csv = sparams_db_csv(data);
  CHECK(csv.rfind("freq_hz,s11_db,s21_db\n", 0) == 0);
  const auto table = io::parse_csv(csv);
  CHECK(table.rows[0][1] == Approx(20.0 * std::log10(32.0 / 68.0)).epsilon(1e-10));
}
