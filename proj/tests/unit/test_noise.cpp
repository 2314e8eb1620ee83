#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "impa/noise.hpp"

using Catch::Approx;
using namespace impa;
using namespace impa::noise;

namespace {

bool has_kind(const std::function<void()>& fn, ErrorKind kind) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("SNR improvement reference values and limits", "[noise]") {
  CHECK(snr_improvement({0.3, 2.6, 100.0}) == Approx(7.975460122699387).epsilon(1e-14));
  CHECK(snr_improvement({0.3, 2.6, std::numeric_limits<double>::infinity()}) ==
        Approx(2.6 / 0.3).epsilon(1e-14));
  CHECK(snr_improvement({0.0, 2.6, 100.0}) == Approx(100.0).epsilon(1e-14));
  CHECK(has_kind([] { snr_improvement({0.0, 2.6, std::numeric_limits<double>::infinity()}); },
                 ErrorKind::DivisionDomain));
  CHECK(has_kind([] { snr_improvement({0.3, 0.0, 100.0}); }, ErrorKind::DomainError));
}

TEST_CASE("Noise temperature inverts the SNR improvement", "[noise][property]") {
  CHECK(noise_temperature_from_snr(7.975460122699387, 2.6, 100.0) == Approx(0.3).epsilon(1e-12));
  CHECK(has_kind([] { noise_temperature_from_snr(101.0, 2.6, 100.0); }, ErrorKind::Unphysical));
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double t1 = 0.01 + 2.0 * u(rng);
    const double t2 = 0.5 + 10.0 * u(rng);
    const double g = 1.0 + std::pow(10.0, 4.0 * u(rng));
    const double snr = snr_improvement({t1, t2, g});
    CHECK(std::abs(noise_temperature_from_snr(snr, t2, g) - t1) / t1 <= 1e-12);
  }
}

TEST_CASE("SNR improvement is monotone", "[noise][property]") {
  double prev = 0.0;
  for (double g = 1.0; g < 1e5; g *= 1.7) {
    const double s = snr_improvement({0.3, 2.6, g});
    CHECK(s > prev);
    prev = s;
  }
  prev = std::numeric_limits<double>::infinity();
  for (double t = 0.01; t < 5.0; t *= 1.5) {
    const double s = snr_improvement({t, 2.6, 100.0});
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("Noise temperature interval follows the second-stage range", "[noise]") {
  const auto interval = noise_temperature_interval(7.975460122699387, 2.3, 2.9, 100.0);
  CHECK(interval.low == Approx(2.3 * (1.0 / 7.975460122699387 - 0.01)));
  CHECK(interval.high == Approx(2.9 * (1.0 / 7.975460122699387 - 0.01)));
  CHECK(has_kind([] { noise_temperature_interval(8.0, 2.9, 2.3, 100.0); }, ErrorKind::DomainError));
}

TEST_CASE("Quantum-limit temperature", "[noise]") {
  CHECK(quantum_limit_temperature(6.633e9) == Approx(0.15916689652819073).epsilon(1e-12));
  CHECK(quantum_limit_temperature(4.166e9) == Approx(0.09996823321821839).epsilon(1e-12));
  CHECK(quantum_limit_temperature(2.0 * 5e9) == Approx(2.0 * quantum_limit_temperature(5e9)));
  CHECK(has_kind([] { quantum_limit_temperature(0.0); }, ErrorKind::DomainError));
}

TEST_CASE("Photon flux power", "[noise]") {
  const double two_pi = 2.0 * 3.14159265358979323846;
  const double p1 = photon_flux_power(two_pi * 6.633e9, two_pi * 309e3, 1.0);
  CHECK(p1 == Approx(8.533051652305938e-18).epsilon(1e-12));
  CHECK(watts_to_dbm(p1) == Approx(-140.6889562548613).epsilon(1e-12));
  CHECK(photon_flux_power(two_pi * 6.633e9, two_pi * 309e3, 0.0) == 0.0);
  CHECK(photon_flux_power(two_pi * 6.633e9, two_pi * 309e3, 10.0) == Approx(10.0 * p1));
  CHECK(has_kind([&] { photon_flux_power(0.0, 1.0, 1.0); }, ErrorKind::DomainError));
  CHECK(has_kind([&] { photon_flux_power(1.0, 1.0, -1.0); }, ErrorKind::DomainError));
}

TEST_CASE("dBm conversions round trip", "[noise][property]") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dbm(-200.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = dbm(rng);
    CHECK(std::abs(watts_to_dbm(dbm_to_watts(p)) - p) <= 1e-12 * std::abs(p));
  }
  CHECK(watts_to_dbm(1e-3) == 0.0);
}

TEST_CASE("Noise bandwidth around the quietest point", "[noise]") {
  const std::vector<double> f = {6.0e9, 6.1e9, 6.2e9, 6.3e9, 6.4e9, 6.5e9};
  std::vector<double> t;
  for (double x : f) t.push_back(quantum_limit_temperature(x));
  t[0] *= 5.0;
  t[5] *= 5.0;
  t[4] *= 1.8;
  const auto bw = noise_bandwidth(f, t, 2.0);
  REQUIRE(bw.has_value());
  CHECK(*bw == Approx(0.3e9));
  CHECK_FALSE(noise_bandwidth(f, std::vector<double>(6, 10.0), 2.0).has_value());
  CHECK(has_kind([&] { noise_bandwidth(f, t, 0.5); }, ErrorKind::DomainError));
}
