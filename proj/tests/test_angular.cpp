#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "chiralwp/angular.hpp"
#include "oracles.hpp"

using namespace chiralwp;
using namespace oracle;

TEST(Wigner3j, MatchesLoweringOperatorOracle) {
  for (int j1 = 0; j1 <= 3; ++j1)
    for (int j2 = 0; j2 <= 3; ++j2) {
      LoweringOracle oracle(j1, j2);
      for (int j3 = 0; j3 <= 6; ++j3)
        for (int m1 = -j1; m1 <= j1; ++m1)
          for (int m2 = -j2; m2 <= j2; ++m2)
            for (int m3 = -j3; m3 <= j3; ++m3) {
              double expected = 0.0;
              if (m1 + m2 + m3 == 0 && j3 >= std::abs(j1 - j2) && j3 <= j1 + j2) {
                const double sign = ((j1 - j2 - m3) % 2 == 0) ? 1.0 : -1.0;
                expected = sign / std::sqrt(2.0 * j3 + 1.0) * oracle.cg(m1, m2, j3, -m3);
              }
              EXPECT_NEAR(wigner3j(j1, j2, j3, m1, m2, m3), expected, 1e-12)
                  << j1 << ' ' << j2 << ' ' << j3 << ' ' << m1 << ' ' << m2 << ' ' << m3;
            }
    }
}

TEST(Wigner3j, ColumnSymmetriesAtLargerJ) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> jd(0, 12);
    const int j1 = jd(rng), j2 = jd(rng);
    std::uniform_int_distribution<int> j3d(std::abs(j1 - j2), j1 + j2);
    const int j3 = j3d(rng);
    const int m1 = std::uniform_int_distribution<int>(-j1, j1)(rng);
    const int m2 = std::uniform_int_distribution<int>(-j2, j2)(rng);
    const int m3 = -m1 - m2;
    if (std::abs(m3) > j3) continue;
    const double v = wigner3j(j1, j2, j3, m1, m2, m3);
    const double odd = ((j1 + j2 + j3) % 2 == 0) ? 1.0 : -1.0;
    EXPECT_NEAR(wigner3j(j2, j3, j1, m2, m3, m1), v, 1e-13);
    EXPECT_NEAR(wigner3j(j2, j1, j3, m2, m1, m3), odd * v, 1e-13);
    EXPECT_NEAR(wigner3j(j1, j2, j3, -m1, -m2, -m3), odd * v, 1e-13);
  }
}

TEST(Wigner3j, OutOfDomainIsZero) {
  EXPECT_EQ(wigner3j(1, 1, 3, 0, 0, 0), 0.0);
  EXPECT_EQ(wigner3j(1, 1, 1, 1, 1, -1), 0.0);
  EXPECT_EQ(wigner3j(1, 1, 1, 2, -2, 0), 0.0);
  EXPECT_EQ(wigner3j(-1, 1, 1, 0, 0, 0), 0.0);
  EXPECT_NEAR(wigner3j(1, 1, 2, 0, 0, 0), std::sqrt(2.0 / 15.0), 1e-15);
}

TEST(D1Element, MatchesEulerQuadratureOn200RandomCases) {
  std::mt19937 rng(2024);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int nonzero = 0;
  for (int trial = 0; trial < 200; ++trial) {
    SymTopKet ket{pick(0, 4), 0, 0};
    ket.K = pick(-ket.J, ket.J);
    ket.M = pick(-ket.J, ket.J);
    const int p = pick(-1, 1), q = pick(-1, 1);
    SymTopKet bra{std::max(0, ket.J + pick(-1, 1)), 0, 0};
    if (trial % 5 == 0) {
      bra.K = pick(-bra.J, bra.J);
      bra.M = pick(-bra.J, bra.J);
    } else {
      bra.K = std::clamp(ket.K + q, -bra.J, bra.J);
      bra.M = std::clamp(ket.M + p, -bra.J, bra.J);
    }
    const double lib = d1_element(bra, p, q, ket);
    const auto quad = quadrature_element(bra, p, q, ket);
    EXPECT_LT(std::abs(quad.imag()), 1e-10);
    const double ref = quad.real();
    if (std::abs(ref) > 1e-6) ++nonzero;
    EXPECT_NEAR(lib, ref, 1e-8) << "J'=" << bra.J << " K'=" << bra.K << " M'=" << bra.M << " p=" << p << " q=" << q
                                << " J=" << ket.J << " K=" << ket.K << " M=" << ket.M;
  }
  EXPECT_GT(nonzero, 60);
}

TEST(LabProjection, CircularTermsCarryOneSignOfP) {
  const DipoleVector mu{-1.1, 0.8, 0.1};
  for (const auto& t : lab_projection(mu, Polarization::sigma_plus)) EXPECT_EQ(t.p, 1);
  for (const auto& t : lab_projection(mu, Polarization::sigma_minus)) EXPECT_EQ(t.p, -1);
  for (const auto& t : lab_projection(mu, Polarization::z)) EXPECT_EQ(t.p, 0);
  EXPECT_TRUE(lab_projection(DipoleVector{}, Polarization::x).empty());
}

TEST(LabProjection, PolarizationNamesRoundTrip) {
  for (auto p : {Polarization::x, Polarization::y, Polarization::z, Polarization::sigma_plus, Polarization::sigma_minus})
    EXPECT_EQ(parse_polarization(to_string(p)), p);
  EXPECT_THROW(parse_polarization("w"), std::invalid_argument);
}
