#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pkslab/profiles.hpp"

using namespace pkslab;

namespace {

const SelfSimilarProfile& profile(double alpha) { return *ProfileCache::global().get(alpha); }

double l1_against_gaussian(const SelfSimilarProfile& p, double scale) {
  std::vector<double> d(p.r.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(p.G[i] - scale * standard_gaussian(p.r[i]));
  return radial_mass({p.r, d});
}

}  // namespace

TEST_CASE("mass range is enforced") {
  CHECK_THROWS_AS(solve_profile(0.0), OutOfRange);
  CHECK_THROWS_AS(solve_profile(-1.0), OutOfRange);
  CHECK_THROWS_AS(solve_profile(8.0 * kPi), OutOfRange);
  CHECK_THROWS_AS(solve_profile(4.0 * kPi, {20.0, 4096, 1e-12, 3, 0.5}), NonConvergence);
  CHECK_THROWS_AS(solve_profile(4.0 * kPi, {3.0, 512, 1e-10, 2000, 0.5}), TailTruncation);
}

TEST_CASE("mass, virial identity and monotone shape") {
  for (double k : {1.0, 4.0, 7.0}) {
    const double alpha = k * kPi;
    const auto& p = profile(alpha);
    CAPTURE(alpha);
    CHECK(std::abs(radial_mass(p.G_field()) - alpha) / alpha <= 1e-8);
    CHECK(p.virial_error() <= 1e-5);
    CHECK(p.residual < 1e-12);
    for (std::size_t i = 1; i < p.r.size(); ++i) REQUIRE(p.G[i] < p.G[i - 1]);
  }
  CHECK(profile(4.0 * kPi).second_moment() == doctest::Approx(8.0 * kPi).epsilon(1e-5));
}

TEST_CASE("peak height increases with mass") {
  double prev = 0.0;
  for (int k = 1; k <= 7; ++k) {
    const double g0 = profile(k * kPi).G.front();
    CHECK(g0 > prev);
    prev = g0;
  }
}

TEST_CASE("Gaussian tail exponent") {
  const auto& p = profile(4.0 * kPi);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    if (p.r[i] < 8.0 || p.r[i] > 12.0) continue;
    const double x = std::log(p.r[i]);
    const double y = std::log(p.G[i]) + p.r[i] * p.r[i] / 4.0;
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++m;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  CHECK(std::abs(slope + 2.0) <= 0.05);
}

TEST_CASE("small mass profiles are close to the Gaussian") {
  std::vector<double> ratios;
  for (double a : {0.2, 0.1, 0.05}) ratios.push_back(l1_against_gaussian(profile(a), a) / (a * a));
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo < 1.25);
}

TEST_CASE("Lipschitz dependence on the mass") {
  const double a = 4.0 * kPi;
  CHECK(profile_lipschitz(a, a) == 0.0);
  const double r1 = profile_lipschitz(a, a + 0.1) / 0.1;
  const double r2 = profile_lipschitz(a, a + 0.01) / 0.01;
  CHECK(std::max(r1, r2) / std::min(r1, r2) < 1.5);

  // Difference quotients converge to ||E^0||_1 at first order in h.
  const RadialField e = zero_mode(a, 1e-3);
  std::vector<double> abs_e(e.values.size());
  for (std::size_t i = 0; i < abs_e.size(); ++i) abs_e[i] = std::abs(e.values[i]);
  const double target = radial_mass({e.nodes, abs_e});
  const double q1 = profile_lipschitz(a, a + 0.02) / 0.02;
  const double q2 = profile_lipschitz(a, a + 0.01) / 0.01;
  CHECK(std::abs(2.0 * q2 - q1 - target) / target < 1e-3);
}

TEST_CASE("zero mode") {
  const RadialField e = zero_mode(4.0 * kPi, 1e-3);
  CHECK(std::abs(radial_mass(e) - 1.0) <= 1e-4);

  // alpha -> 0: E^0 -> G in L1
  double prev = 1.0;
  for (double a : {0.4, 0.1, 0.025}) {
    const RadialField s = zero_mode(a, a / 10.0);
    std::vector<double> d(s.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(s.values[i] - standard_gaussian(s.nodes[i]));
    const double err = radial_mass({s.nodes, d});
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.01);
}

TEST_CASE("log-gradient identity and potential asymptotics") {
  const auto& p = profile(4.0 * kPi);
  const double h = p.r[1];
  const std::size_t inner = static_cast<std::size_t>(0.8 * p.r.size());
  double worst = 0.0;
  for (std::size_t i = 2; i < inner; ++i) {
    const double d = (-std::log(p.G[i + 2]) + 8 * std::log(p.G[i + 1]) - 8 * std::log(p.G[i - 1]) +
                      std::log(p.G[i - 2])) / (12 * h);
    const double expected = p.vG[i] - 0.5 * p.r[i];
    worst = std::max(worst, std::abs(d - expected) / std::max(1.0, std::abs(expected)));
  }
  CHECK(worst < 1e-6);

  double C = 0.0;
  for (std::size_t i = p.r.size() / 2; i < p.r.size(); ++i) {
    const double r = p.r[i];
    C = std::max(C, std::abs(p.vG[i] + p.alpha / (2 * kPi * r)) * r * r);
  }
  CHECK(std::isfinite(C));
  CHECK(C < 1.0);
}

TEST_CASE("solution is insensitive to the iteration parameters") {
  const auto& p = profile(2.0 * kPi);
  ProfileOptions o;
  o.theta = 0.25;
  o.max_iter = 40000;
  const SelfSimilarProfile q = solve_profile(2.0 * kPi, o);
  double d = 0.0;
  for (std::size_t i = 0; i < p.G.size(); ++i) d = std::max(d, std::abs(p.G[i] - q.G[i]));
  CHECK(d / p.G.front() < 1e-11);
}

TEST_CASE("sampling in physical variables") {
  const auto& p = profile(4.0 * kPi);
  const Grid2D g{256, 4.0, {}};
  const double t = 0.05;
  const Field2D u = sample_profile(p, t, {0.0, 0.0}, g);
  CHECK(u.max() == doctest::Approx(p.G.front() / t).epsilon(1e-14));
  CHECK(u.mass() == doctest::Approx(p.alpha).epsilon(1e-10));
  const Field2D v = sample_profile(p, t, {0.3, -0.2}, g);
  CHECK(v.mass() == doctest::Approx(p.alpha).epsilon(1e-8));
  CHECK_THROWS_AS(sample_profile(p, 1.0, {0.0, 0.0}, g), SupportOverflow);

  ProfileOptions fine;
  fine.points = 2 * 4096 - 1;
  const SelfSimilarProfile q = solve_profile(4.0 * kPi, fine);
  const Field2D w = sample_profile(q, t, {0.3, -0.2}, g);
  CHECK((w - v).max_abs() / v.max_abs() <= 1e-6);
}

TEST_CASE("profile export") {
  const auto& p = profile(kPi);
  std::stringstream ss;
  write_profile_csv(p, ss);
  std::string header, columns, first;
  std::getline(ss, header);
  std::getline(ss, columns);
  std::getline(ss, first);
  const auto h = nlohmann::json::parse(header);
  CHECK(h.at("alpha").get<double>() == p.alpha);
  CHECK(h.contains("Z"));
  CHECK(h.contains("virial_error"));
  CHECK(columns == "r,G,c,vG");
  CHECK(first.rfind("0,", 0) == 0);
}
