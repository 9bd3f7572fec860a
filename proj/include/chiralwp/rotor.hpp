#pragma once

// Rigid asymmetric-top eigenstates in the symmetric-top basis.
//
// Body axes: z = a, x = b, y = c, so H = A J_a^2 + B J_b^2 + C J_c^2 with the
// a axis as the K quantization axis. Each J block is diagonalized inside the
// four Wang classes (K parity, sign of |K> +/- |-K>), which keeps every
// eigenvector a pure D2 irrep even at exact degeneracies.
//
// Eigenvector phase: scanning K from +J down to -J, the first coefficient with
// magnitude above 1e-10 is real and positive.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "chiralwp/angular.hpp"

namespace chiralwp {

struct RotationalConstants {
  double A_MHz = 0.0;
  double B_MHz = 0.0;
  double C_MHz = 0.0;

  void validate() const {
    if (!(C_MHz > 0.0) || B_MHz < C_MHz || A_MHz < B_MHz)
      throw std::invalid_argument("rotational constants must satisfy A >= B >= C > 0");
  }
  // In units of B.
  double a() const { return A_MHz / B_MHz; }
  double b() const { return 1.0; }
  double c() const { return C_MHz / B_MHz; }
};

enum class Irrep { A = 0, Ba = 1, Bb = 2, Bc = 3 };

inline std::string_view to_string(Irrep g) {
  switch (g) {
    case Irrep::A: return "A";
    case Irrep::Ba: return "Ba";
    case Irrep::Bb: return "Bb";
    case Irrep::Bc: return "Bc";
  }
  return "?";
}

inline Irrep parse_irrep(std::string_view s) {
  if (s == "A") return Irrep::A;
  if (s == "Ba") return Irrep::Ba;
  if (s == "Bb") return Irrep::Bb;
  if (s == "Bc") return Irrep::Bc;
  throw std::invalid_argument("unknown irrep '" + std::string(s) + "'");
}

/// D2 multiplication. Encoding the irreps as 2-bit vectors (Ba=01, Bb=10,
/// Bc=11) turns the product into XOR.
constexpr Irrep irrep_product(Irrep g1, Irrep g2) {
  return static_cast<Irrep>(static_cast<int>(g1) ^ static_cast<int>(g2));
}

/// Irrep from the parities of Ka and Kc (true = odd).
constexpr Irrep d2_irrep(bool ka_odd, bool kc_odd) {
  if (!ka_odd && !kc_odd) return Irrep::A;
  if (!ka_odd && kc_odd) return Irrep::Ba;
  if (ka_odd && kc_odd) return Irrep::Bb;
  return Irrep::Bc;
}

/// Characters under the C2 rotations about a and b. The c character is their product.
constexpr std::pair<int, int> irrep_characters(Irrep g) {
  switch (g) {
    case Irrep::A: return {1, 1};
    case Irrep::Ba: return {1, -1};
    case Irrep::Bb: return {-1, 1};
    case Irrep::Bc: return {-1, -1};
  }
  return {1, 1};
}

constexpr Irrep irrep_from_characters(int chi_a, int chi_b) {
  if (chi_a > 0) return chi_b > 0 ? Irrep::A : Irrep::Ba;
  return chi_b > 0 ? Irrep::Bb : Irrep::Bc;
}

struct AsymTopState {
  int J = 0;
  int Ka = 0;
  int Kc = 0;
  int M = 0;
  int rank = 0;          // energy rank inside the J block, 0 = lowest
  double energy = 0.0;   // units of B
  Eigen::VectorXcd coeffs;  // over K = -J..J, index K + J (real by construction)
  Irrep irrep = Irrep::A;

  std::string label() const {
    return std::to_string(J) + "_" + std::to_string(Ka) + std::to_string(Kc);
  }
  cplx coeff(int K) const { return coeffs[K + J]; }
};

/// Rigid-rotor matrix for one J over K = -J..J (row index K + J), units of B.
inline Eigen::MatrixXd build_rigid_rotor_block(int J, const RotationalConstants& rc) {
  if (J < 0) throw std::invalid_argument("build_rigid_rotor_block: negative J");
  rc.validate();
  const double A = rc.a(), B = rc.b(), C = rc.c();
  const int n = 2 * J + 1;
  const double jj = double(J) * (J + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int K = -J; K <= J; ++K) {
    H(K + J, K + J) = 0.5 * (B + C) * (jj - double(K) * K) + A * double(K) * K;
    if (K + 2 <= J) {
      const double v = 0.25 * (B - C) * std::sqrt(jj - double(K) * (K + 1)) *
                       std::sqrt(jj - double(K + 1) * (K + 2));
      H(K + 2 + J, K + J) = v;
      H(K + J, K + 2 + J) = v;
    }
  }
  return H;
}

namespace detail {

struct WangEigen {
  double energy;
  Eigen::VectorXd vec;  // over K = -J..J
  Irrep irrep;
};

inline void fix_phase(Eigen::VectorXd& v) {
  for (Eigen::Index i = v.size() - 1; i >= 0; --i) {
    if (std::abs(v[i]) > 1e-10) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

inline std::vector<WangEigen> wang_diagonalize(int J, const Eigen::MatrixXd& H) {
  std::vector<WangEigen> out;
  const int n = 2 * J + 1;
  const double r2 = 1.0 / std::sqrt(2.0);
  for (int parity = 0; parity < 2; ++parity) {
    for (int s : {+1, -1}) {
      // Columns of W are the Wang functions of this class.
      std::vector<Eigen::VectorXd> cols;
      for (int K = parity; K <= J; K += 2) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        if (K == 0) {
          if (s < 0) continue;
          w[J] = 1.0;
        } else {
          w[K + J] = r2;
          w[-K + J] = s * r2;
        }
        cols.push_back(std::move(w));
      }
      if (cols.empty()) continue;
      Eigen::MatrixXd W(n, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t i = 0; i < cols.size(); ++i) W.col(static_cast<Eigen::Index>(i)) = cols[i];
      const Eigen::MatrixXd Hs = W.transpose() * H * W;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
      const int chi_a = parity == 0 ? 1 : -1;
      const int chi_b = (J % 2 == 0 ? 1 : -1) * s;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        Eigen::VectorXd v = W * es.eigenvectors().col(i);
        v.normalize();
        fix_phase(v);
        out.push_back({es.eigenvalues()[i], std::move(v), irrep_from_characters(chi_a, chi_b)});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const WangEigen& x, const WangEigen& y) { return x.energy < y.energy; });
  return out;
}

}  // namespace detail

/// Energy-ordered, labeled eigenstates of one J block, M = 0 copies.
inline std::vector<AsymTopState> label_block(int J, const RotationalConstants& rc) {
  auto eig = detail::wang_diagonalize(J, build_rigid_rotor_block(J, rc));
  const int n = 2 * J + 1;
  const double tol = 1e-9 * std::max(1.0, std::abs(eig.back().energy));

  std::vector<AsymTopState> out(n);
  std::vector<bool> used(n, false);
  int r = 0;
  while (r < n) {
    int end = r + 1;
    while (end < n && eig[end].energy - eig[r].energy < tol) ++end;
    // Inside a degenerate group, pair each label with an eigenvector of the
    // matching irrep. Labels are visited from smaller Ka upward.
    for (int rank = r; rank < end; ++rank) {
      const int Ka = (rank + 1) / 2;
      const int Kc = J - rank / 2;
      const Irrep want = d2_irrep(Ka % 2 != 0, Kc % 2 != 0);
      int pick = -1;
      for (int k = r; k < end; ++k) {
        if (!used[k] && eig[k].irrep == want) {
          pick = k;
          break;
        }
      }
      if (pick < 0)
        throw std::logic_error("label_block: irrep of J=" + std::to_string(J) +
                               " eigenvector does not follow the prolate-oblate correlation");
      used[pick] = true;
      AsymTopState& st = out[rank];
      st.J = J;
      st.Ka = Ka;
      st.Kc = Kc;
      st.M = 0;
      st.rank = rank;
      st.energy = eig[pick].energy;
      st.coeffs = eig[pick].vec.cast<cplx>();
      st.irrep = want;
    }
    r = end;
  }
  return out;
}

/// All states with J <= Jmax ordered by (J, energy rank, M ascending).
inline std::vector<AsymTopState> diagonalize_and_label(const RotationalConstants& rc, int Jmax) {
  if (Jmax < 0) throw std::invalid_argument("diagonalize_and_label: Jmax must be >= 0");
  rc.validate();
  std::vector<AsymTopState> out;
  for (int J = 0; J <= Jmax; ++J) {
    for (const auto& level : label_block(J, rc)) {
      for (int M = -J; M <= J; ++M) {
        AsymTopState st = level;
        st.M = M;
        out.push_back(std::move(st));
      }
    }
  }
  return out;
}

}  // namespace chiralwp
