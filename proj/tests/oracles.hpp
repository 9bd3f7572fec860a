#pragma once

// Independent reference implementations used by the tests: Clebsch-Gordan
// coefficients from spin matrices, Wigner D by the explicit sum with Euler-angle
// quadrature, and the rigid rotor from Cartesian angular momentum matrices.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <Eigen/Dense>

#include "chiralwp/angular.hpp"

namespace oracle {

// Clebsch-Gordan coefficients built from spin matrices: |J J> is the J^2
// eigenvector in the M = J subspace (phase: <j1 j1; j2 J-j1|J J> > 0), and the
// rest of the multiplet follows from the lowering operator.
class LoweringOracle {
 public:
  LoweringOracle(int j1, int j2) : j1_(j1), j2_(j2) {
    const int n1 = 2 * j1 + 1, n2 = 2 * j2 + 1, n = n1 * n2;
    Eigen::MatrixXd Jz = Eigen::MatrixXd::Zero(n, n), Jm = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n1; ++a)
      for (int b = 0; b < n2; ++b) {
        const int m1 = a - j1, m2 = b - j2, i = idx(m1, m2);
        Jz(i, i) = m1 + m2;
        if (m1 > -j1) Jm(idx(m1 - 1, m2), i) += std::sqrt(double(j1 * (j1 + 1) - m1 * (m1 - 1)));
        if (m2 > -j2) Jm(idx(m1, m2 - 1), i) += std::sqrt(double(j2 * (j2 + 1) - m2 * (m2 - 1)));
      }
    const Eigen::MatrixXd Jp = Jm.transpose();
    const Eigen::MatrixXd J2 = Jz * Jz + 0.5 * (Jp * Jm + Jm * Jp);
    for (int J = std::abs(j1 - j2); J <= j1 + j2; ++J) {
      std::vector<int> sub;
      for (int i = 0; i < n; ++i)
        if (std::lround(Jz(i, i)) == J) sub.push_back(i);
      Eigen::MatrixXd S(sub.size(), sub.size());
      for (std::size_t r = 0; r < sub.size(); ++r)
        for (std::size_t c = 0; c < sub.size(); ++c) S(r, c) = J2(sub[r], sub[c]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
      int pick = -1;
      for (int k = 0; k < es.eigenvalues().size(); ++k)
        if (std::abs(es.eigenvalues()[k] - J * (J + 1.0)) < 1e-9) pick = k;
      Eigen::VectorXd top = Eigen::VectorXd::Zero(n);
      for (std::size_t r = 0; r < sub.size(); ++r) top[sub[r]] = es.eigenvectors()(r, pick);
      if (top[idx(j1, J - j1)] < 0.0) top = -top;
      Eigen::VectorXd v = top;
      for (int M = J; M >= -J; --M) {
        states_[{J, M}] = v;
        if (M > -J) v = Jm * v / std::sqrt(double(J * (J + 1) - M * (M - 1)));
      }
    }
  }

  double cg(int m1, int m2, int J, int M) const {
    auto it = states_.find({J, M});
    if (it == states_.end() || std::abs(m1) > j1_ || std::abs(m2) > j2_) return 0.0;
    return it->second[idx(m1, m2)];
  }

 private:
  int idx(int m1, int m2) const { return (m1 + j1_) * (2 * j2_ + 1) + (m2 + j2_); }
  int j1_, j2_;
  std::map<std::pair<int, int>, Eigen::VectorXd> states_;
};

inline double factorial(int n) { return std::tgamma(n + 1.0); }

// Wigner small-d by the explicit sum over k.
inline double small_d(int j, int mp, int m, double beta) {
  double s = 0.0;
  const double c = std::cos(0.5 * beta), sn = std::sin(0.5 * beta);
  for (int k = 0; k <= 2 * j; ++k) {
    if (j + m - k < 0 || j - k - mp < 0 || k - m + mp < 0) continue;
    const double num = std::sqrt(factorial(j + m) * factorial(j - m) * factorial(j + mp) * factorial(j - mp));
    const double den = factorial(j + m - k) * factorial(k) * factorial(j - k - mp) * factorial(k - m + mp);
    const double sign = ((k - m + mp) % 2 == 0) ? 1.0 : -1.0;
    s += sign * num / den * std::pow(c, 2 * j - 2 * k + m - mp) * std::pow(sn, 2 * k - m + mp);
  }
  return s;
}

inline std::complex<double> big_D(int j, int mp, int m, double a, double b, double g) {
  return std::polar(1.0, -mp * a) * small_d(j, mp, m, b) * std::polar(1.0, -m * g);
}

// <J'K'M'| D^1_pq |JKM> with psi_JKM = sqrt((2J+1)/8pi^2) D^J_MK, integrated
// over the Euler angles: trapezoid in alpha and gamma (exact for the
// trigonometric polynomials involved), Gauss-Legendre in beta.
inline std::complex<double> quadrature_element(const chiralwp::SymTopKet& bra, int p, int q, const chiralwp::SymTopKet& ket) {
  constexpr int kN = 8;
  const double two_pi = 2.0 * std::numbers::pi;
  std::complex<double> sum = 0.0;
  for (int ia = 0; ia < kN; ++ia)
    for (int ig = 0; ig < kN; ++ig) {
      const double a = two_pi * ia / kN, g = two_pi * ig / kN;
      auto f = [&](double b) {
        return (std::conj(big_D(bra.J, bra.M, bra.K, a, b, g)) * big_D(1, p, q, a, b, g) *
                big_D(ket.J, ket.M, ket.K, a, b, g))
                   .real() *
               std::sin(b);
      };
      auto fi = [&](double b) {
        return (std::conj(big_D(bra.J, bra.M, bra.K, a, b, g)) * big_D(1, p, q, a, b, g) *
                big_D(ket.J, ket.M, ket.K, a, b, g))
                   .imag() *
               std::sin(b);
      };
      sum += std::complex<double>(boost::math::quadrature::gauss<double, 30>::integrate(f, 0.0, std::numbers::pi),
                                  boost::math::quadrature::gauss<double, 30>::integrate(fi, 0.0, std::numbers::pi));
    }
  sum *= (two_pi / kN) * (two_pi / kN);
  return sum * std::sqrt((2.0 * bra.J + 1.0) * (2.0 * ket.J + 1.0)) / (8.0 * std::numbers::pi * std::numbers::pi);
}


// Eigenvalues of A Ja^2 + B Jb^2 + C Jc^2 for one J, built from Cartesian
// spin-J matrices in the |J, k> basis quantized along c.
inline Eigen::VectorXd cartesian_rotor_levels(int J, double A, double B, double C) {
  const int n = 2 * J + 1;
  Eigen::MatrixXcd Jz = Eigen::MatrixXcd::Zero(n, n), Jp = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double m = i - J;
    Jz(i, i) = m;
    if (i + 1 < n) Jp(i + 1, i) = std::sqrt(J * (J + 1.0) - m * (m + 1.0));
  }
  const Eigen::MatrixXcd Jm = Jp.adjoint();
  const Eigen::MatrixXcd Jx = 0.5 * (Jp + Jm);
  const Eigen::MatrixXcd Jy = std::complex<double>(0.0, -0.5) * (Jp - Jm);
  const Eigen::MatrixXcd H = A * Jx * Jx + B * Jy * Jy + C * Jz * Jz;
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(H).eigenvalues();
}

}  // namespace oracle
