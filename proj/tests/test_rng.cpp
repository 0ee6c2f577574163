#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "kmpath/rng.hpp"

using namespace kmpath;

namespace {

struct Moments {
  double mean = 0.0, var = 0.0, skew = 0.0, ex_kurt = 0.0;
};

Moments sample_moments(const std::vector<double>& v) {
  double n = static_cast<double>(v.size());
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    double d = x - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.var = m2;
  m.skew = m3 / std::pow(m2, 1.5);
  m.ex_kurt = m4 / (m2 * m2) - 3.0;
  return m;
}

}  // namespace

TEST_SUITE("rng") {

TEST_CASE("philox4x32 reproduces the reference known-answer vectors") {
  // Vectors from the Random123 distribution of Philox-4x32 with 10 rounds.
  auto r0 = philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(r0[0] == 0x6627e8d5u);
  CHECK(r0[1] == 0xe169c58du);
  CHECK(r0[2] == 0xbc57ac4cu);
  CHECK(r0[3] == 0x9b00dbd8u);

  auto r1 = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                       {0xffffffffu, 0xffffffffu});
  CHECK(r1[0] == 0x408f276du);
  CHECK(r1[1] == 0x41c83b0eu);
  CHECK(r1[2] == 0xa20bc7c6u);
  CHECK(r1[3] == 0x6d5451fdu);

  auto r2 = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                       {0xa4093822u, 0x299f31d0u});
  CHECK(r2[0] == 0xd16cfe09u);
  CHECK(r2[1] == 0x94fdccebu);
  CHECK(r2[2] == 0x5001e420u);
  CHECK(r2[3] == 0x24126ea1u);
}

TEST_CASE("splitmix64 reproduces the reference sequence from seed 0") {
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafull);
  CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ull);
  CHECK(splitmix64(s) == 0x06c45d188009454full);
}

TEST_CASE("draws are pure functions of (seed, path, step)") {
  CHECK(normal_draw(42, 7, 3) == normal_draw(42, 7, 3));
  CHECK(uniform_draw(42, 7, 3) == uniform_draw(42, 7, 3));
  CHECK(normal_draw(42, 7, 3) != normal_draw(43, 7, 3));
  CHECK(normal_draw(42, 7, 3) != normal_draw(42, 8, 3));
  CHECK(normal_draw(42, 7, 3) != normal_draw(42, 7, 4));
  // The init-step stream must not collide with integration steps.
  CHECK(normal_draw(42, 7, kInitStep) != normal_draw(42, 7, 0));
}

TEST_CASE("normal_draw moments match a standard normal") {
  const int n = 200000;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = normal_draw(2024, i % 500, i / 500);
  Moments m = sample_moments(v);
  // Bounds are ~4.5 standard errors of each estimator at this n.
  CHECK(std::abs(m.mean) < 0.010);
  CHECK(std::abs(m.var - 1.0) < 0.016);
  CHECK(std::abs(m.skew) < 0.025);
  CHECK(std::abs(m.ex_kurt) < 0.050);
  for (double x : v) REQUIRE(std::isfinite(x));
}

TEST_CASE("uniform_draw lies in [0,1) with uniform moments") {
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = uniform_draw(99, i % 100, i / 100);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.004);        // sd 6.5e-4
  CHECK(std::abs(var - 1.0 / 12.0) < 0.003);  // sd 6e-4
}

TEST_CASE("path streams are uncorrelated") {
  const int n = 20000;
  double sxy = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    double a = normal_draw(7, 11, i);
    double b = normal_draw(7, 12, i);
    sx += a;
    sy += b;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  double cov = sxy / n - (sx / n) * (sy / n);
  double r = cov / std::sqrt((sxx / n - sx / n * (sx / n)) * (syy / n - sy / n * (sy / n)));
  CHECK(std::abs(r) < 0.03);  // sd 1/sqrt(n) ~ 0.007
}

}  // TEST_SUITE
