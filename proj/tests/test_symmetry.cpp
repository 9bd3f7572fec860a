#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chiralwp/symmetry.hpp"

using namespace chiralwp;

namespace {

DipoleSet out_of_plane() {
  DipoleSet d;
  d.mu_a = -1.1;
  d.mu_b = 0.8;
  d.transition = {0.0, 0.0, 0.1};
  d.kind = ModeKind::out_of_plane;
  return d;
}

DipoleSet in_plane() {
  DipoleSet d = out_of_plane();
  d.transition = {0.1, 0.05, 0.0};
  d.kind = ModeKind::in_plane;
  return d;
}

const InitialState kGround{0, Irrep::A, 0};

FieldSpec mw(Polarization p) { return {FieldKind::mw, p}; }
FieldSpec ir(Polarization p) { return {FieldKind::ir, p}; }
FieldSpec stat() { return {FieldKind::static_field, Polarization::z}; }

Outcome verdict(const DipoleSet& d, const std::vector<FieldSpec>& f) {
  const auto v = check_feasibility(d, f, kGround, 4);
  if (v.outcome != Outcome::forbidden) EXPECT_TRUE(validate_witness(v, kGround));
  return v.outcome;
}

Polarization swap_xy(Polarization p) {
  if (p == Polarization::x) return Polarization::y;
  if (p == Polarization::y) return Polarization::x;
  return p;
}

}  // namespace

TEST(Symmetry, SingleIrPulseIsForbidden) {
  for (auto p : {Polarization::x, Polarization::y, Polarization::z}) {
    EXPECT_EQ(verdict(out_of_plane(), {ir(p)}), Outcome::forbidden);
    EXPECT_EQ(verdict(in_plane(), {ir(p)}), Outcome::forbidden);
  }
}

TEST(Symmetry, InPlaneModeWithParallelMwAndIrIsAchiral) {
  EXPECT_EQ(verdict(in_plane(), {mw(Polarization::z), ir(Polarization::z)}), Outcome::achiral_allowed);
}

TEST(Symmetry, OutOfPlaneModeNeedsThreeOrthogonalFields) {
  EXPECT_EQ(verdict(out_of_plane(), {mw(Polarization::x), mw(Polarization::y), ir(Polarization::z)}),
            Outcome::chiral_allowed);
  EXPECT_EQ(verdict(out_of_plane(), {mw(Polarization::z), ir(Polarization::z)}), Outcome::forbidden);
  EXPECT_EQ(verdict(out_of_plane(), {mw(Polarization::x), ir(Polarization::z)}), Outcome::forbidden);
}

TEST(Symmetry, StaticFieldWithThreeIrPulsesIsChiral) {
  EXPECT_EQ(verdict(out_of_plane(), {stat(), ir(Polarization::x), ir(Polarization::y), ir(Polarization::z)}),
            Outcome::chiral_allowed);
  EXPECT_EQ(verdict(out_of_plane(), {ir(Polarization::x), ir(Polarization::y), ir(Polarization::z)}),
            Outcome::forbidden);
}

TEST(Symmetry, EmptyFieldListIsForbidden) {
  EXPECT_EQ(verdict(out_of_plane(), {}), Outcome::forbidden);
}

TEST(Symmetry, OrthogonalityCheck) {
  EXPECT_TRUE(orthogonality_check({mw(Polarization::x), mw(Polarization::y), ir(Polarization::z)}));
  EXPECT_FALSE(orthogonality_check({mw(Polarization::x), ir(Polarization::x)}));
}

TEST(Symmetry, ChiralVerdictsOnTheGridUseThreeAxesAndIgnoreAxisLabels) {
  const std::vector<Polarization> pols{Polarization::x, Polarization::y, Polarization::z};
  std::mt19937 rng(11);
  int chiral = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<FieldSpec> fields;
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < n; ++i)
      fields.push_back({std::uniform_int_distribution<int>(0, 1)(rng) ? FieldKind::mw : FieldKind::ir,
                        pols[std::uniform_int_distribution<int>(0, 2)(rng)]});
    const auto o = verdict(out_of_plane(), fields);
    if (o == Outcome::chiral_allowed) {
      ++chiral;
      EXPECT_TRUE(orthogonality_check(fields));
    }
    auto swapped = fields;
    for (auto& f : swapped) f.polarization = swap_xy(f.polarization);
    EXPECT_EQ(verdict(out_of_plane(), swapped), o);
  }
  EXPECT_GT(chiral, 0);
}

TEST(Symmetry, VerdictReportNamesTheOutcome) {
  const auto v = check_feasibility(out_of_plane(), {mw(Polarization::x), mw(Polarization::y), ir(Polarization::z)},
                                   kGround, 4);
  EXPECT_NE(format_verdict(v).find("chiral_allowed"), std::string::npos);
  EXPECT_THROW(check_feasibility(out_of_plane(), {}, kGround, 5), std::invalid_argument);
}
