#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "chiralwp/rotor.hpp"
#include "oracles.hpp"

using namespace chiralwp;

namespace {

const RotationalConstants kCOFCl{11781.84, 5246.37, 3627.49};

std::vector<AsymTopState> levels(const RotationalConstants& rc, int J) {
  std::vector<AsymTopState> out;
  for (const auto& s : diagonalize_and_label(rc, J))
    if (s.J == J && s.M == 0) out.push_back(s);
  return out;
}

Irrep parity_irrep(int Ka, int Kc) {
  const bool ka_odd = Ka % 2, kc_odd = Kc % 2;
  if (!ka_odd && !kc_odd) return Irrep::A;
  if (!ka_odd && kc_odd) return Irrep::Ba;
  if (ka_odd && kc_odd) return Irrep::Bb;
  return Irrep::Bc;
}

}  // namespace

TEST(Rotor, JOneLevelsAreSumsOfConstantPairs) {
  const double A = kCOFCl.a(), B = kCOFCl.b(), C = kCOFCl.c();
  const auto lv = levels(kCOFCl, 1);
  ASSERT_EQ(lv.size(), 3u);
  for (const auto& s : lv) {
    double expected = 0.0;
    if (s.Ka == 0 && s.Kc == 1) expected = B + C;
    else if (s.Ka == 1 && s.Kc == 1) expected = A + C;
    else if (s.Ka == 1 && s.Kc == 0) expected = A + B;
    else FAIL() << "unexpected label " << s.label();
    EXPECT_NEAR(s.energy, expected, 1e-10 * expected);
  }
}

TEST(Rotor, SpectrumMatchesCartesianAngularMomentumOracle) {
  for (const auto& rc : {kCOFCl, RotationalConstants{9000.0, 4000.0, 1000.0}, RotationalConstants{5000, 4999, 10}}) {
    for (int J = 0; J <= 6; ++J) {
      std::vector<double> mine;
      for (const auto& s : levels(rc, J)) mine.push_back(s.energy);
      std::sort(mine.begin(), mine.end());
      const Eigen::VectorXd ref = oracle::cartesian_rotor_levels(J, rc.a(), rc.b(), rc.c());
      ASSERT_EQ(static_cast<int>(mine.size()), ref.size());
      for (int i = 0; i < ref.size(); ++i) EXPECT_NEAR(mine[i], ref[i], 1e-10 * std::max(1.0, std::abs(ref[i])));
    }
  }
}

TEST(Rotor, LabelsAreUniqueAndWellFormed) {
  for (int J = 0; J <= 6; ++J) {
    std::set<std::pair<int, int>> seen;
    for (const auto& s : levels(kCOFCl, J)) {
      EXPECT_TRUE(s.Ka + s.Kc == J || s.Ka + s.Kc == J + 1) << s.label();
      EXPECT_TRUE(seen.insert({s.Ka, s.Kc}).second) << "duplicate " << s.label();
    }
    EXPECT_EQ(static_cast<int>(seen.size()), 2 * J + 1);
  }
}

TEST(Rotor, IrrepFollowsKaKcParity) {
  for (const auto& s : diagonalize_and_label(kCOFCl, 6)) EXPECT_EQ(s.irrep, parity_irrep(s.Ka, s.Kc)) << s.label();
}

TEST(Rotor, EigenvectorsSolveTheBlockAndFollowThePhaseRule) {
  for (int J = 0; J <= 5; ++J) {
    const Eigen::MatrixXd H = build_rigid_rotor_block(J, kCOFCl);
    for (const auto& s : levels(kCOFCl, J)) {
      const Eigen::VectorXd v = s.coeffs.real();
      EXPECT_NEAR(s.coeffs.imag().norm(), 0.0, 1e-15);
      EXPECT_NEAR(v.norm(), 1.0, 1e-12);
      EXPECT_LT((H * v - s.energy * v).norm(), 1e-10);
      for (int i = v.size() - 1; i >= 0; --i)
        if (std::abs(v[i]) > 1e-10) {
          EXPECT_GT(v[i], 0.0) << s.label();
          break;
        }
    }
  }
}

TEST(Rotor, ProlateSymmetricLimitGivesKaEqualsAbsK) {
  const RotationalConstants rc{10000.0, 3000.0, 3000.0};
  for (int J = 0; J <= 4; ++J)
    for (const auto& s : levels(rc, J)) {
      const double expected = rc.b() * J * (J + 1) + (rc.a() - rc.b()) * s.Ka * s.Ka;
      EXPECT_NEAR(s.energy, expected, 1e-10 * std::max(1.0, expected)) << s.label();
    }
}

TEST(Rotor, RejectsUnorderedConstants) {
  EXPECT_THROW(RotationalConstants({1000.0, 2000.0, 500.0}).validate(), std::invalid_argument);
  EXPECT_THROW(RotationalConstants({3000.0, 2000.0, 0.0}).validate(), std::invalid_argument);
  EXPECT_THROW(diagonalize_and_label(kCOFCl, -1), std::invalid_argument);
}

TEST(Rotor, SingleLevelForJZero) {
  const auto lv = diagonalize_and_label(kCOFCl, 0);
  ASSERT_EQ(lv.size(), 1u);
  EXPECT_EQ(lv[0].label(), "0_00");
  EXPECT_NEAR(lv[0].energy, 0.0, 1e-15);
  EXPECT_EQ(lv[0].irrep, Irrep::A);
}
