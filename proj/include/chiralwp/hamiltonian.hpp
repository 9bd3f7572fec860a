#pragma once

// Ro-vibrational product basis |nu> (x) |J_{KaKc}, M> with nu in {0, 1}, and
// the dipole control matrices acting on it.
//
// Control matrices hold mu.R(gamma).e in Debye. A field of strength E (V/m)
// with envelope u(t) contributes -u(t) * E * coupling_scale * dipole to the
// Hamiltonian in units of B.

#include <cmath>
#include <complex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chiralwp/angular.hpp"
#include "chiralwp/rotor.hpp"
#include "chiralwp/units.hpp"

namespace chiralwp {

enum class ModeKind { in_plane, out_of_plane };

inline std::string_view to_string(ModeKind k) {
  return k == ModeKind::in_plane ? "in_plane" : "out_of_plane";
}

struct DipoleSet {
  double mu_a = 0.0;  // permanent, Debye
  double mu_b = 0.0;
  DipoleVector transition;  // <0|mu|1>, Debye
  ModeKind kind = ModeKind::out_of_plane;

  DipoleVector permanent() const { return {mu_a, mu_b, 0.0}; }

  void validate() const {
    if (kind == ModeKind::out_of_plane && (transition.a != 0.0 || transition.b != 0.0))
      throw std::invalid_argument("out-of-plane mode must have a transition dipole along c only");
    if (kind == ModeKind::in_plane && transition.c != 0.0)
      throw std::invalid_argument("in-plane mode must have zero c transition dipole");
  }
};

struct RoVibState {
  int nu = 0;
  AsymTopState rot;
};

struct RoVibBasis {
  RotationalConstants constants;
  int Jmax = 0;
  double omega = 0.0;  // vibrational gap, units of B
  std::vector<RoVibState> states;
  Eigen::VectorXd energies;  // H0 diagonal, units of B

  int size() const { return static_cast<int>(states.size()); }

  /// Index of |nu>|J_{KaKc}, M>, or -1.
  int find(int nu, int J, int Ka, int Kc, int M) const {
    for (int i = 0; i < size(); ++i) {
      const auto& s = states[i];
      if (s.nu == nu && s.rot.J == J && s.rot.Ka == Ka && s.rot.Kc == Kc && s.rot.M == M) return i;
    }
    return -1;
  }

  int index(int nu, int J, int Ka, int Kc, int M) const {
    const int i = find(nu, J, Ka, Kc, M);
    if (i < 0)
      throw std::out_of_range("state nu=" + std::to_string(nu) + " " + std::to_string(J) + "_" +
                              std::to_string(Ka) + std::to_string(Kc) + " M=" + std::to_string(M) +
                              " is not in the basis");
    return i;
  }

  std::string describe(int i) const {
    const auto& s = states.at(i);
    return "|" + std::to_string(s.nu) + ">|" + s.rot.label() + "," + std::to_string(s.rot.M) + ">";
  }
};

/// Rotational level label J_{KaKc} parsed from "J_KaKc" (e.g. "1_10").
struct LevelLabel {
  int J = 0;
  int Ka = 0;
  int Kc = 0;

  static LevelLabel parse(const std::string& s) {
    const auto us = s.find('_');
    if (us == std::string::npos || us + 3 != s.size())
      throw std::invalid_argument("level label must look like J_KaKc, got '" + s + "'");
    LevelLabel l;
    try {
      l.J = std::stoi(s.substr(0, us));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad J in level label '" + s + "'");
    }
    const char ka = s[us + 1], kc = s[us + 2];
    if (ka < '0' || ka > '9' || kc < '0' || kc > '9')
      throw std::invalid_argument("bad Ka/Kc in level label '" + s + "'");
    l.Ka = ka - '0';
    l.Kc = kc - '0';
    if (l.Ka > l.J || l.Kc > l.J || (l.Ka + l.Kc != l.J && l.Ka + l.Kc != l.J + 1))
      throw std::invalid_argument("inconsistent level label '" + s + "'");
    return l;
  }
  std::string str() const { return std::to_string(J) + "_" + std::to_string(Ka) + std::to_string(Kc); }
};

inline RoVibBasis build_basis(const RotationalConstants& rc, int Jmax, double omega) {
  if (Jmax < 0) throw std::invalid_argument("build_basis: Jmax must be >= 0");
  if (!(omega > 0.0)) throw std::invalid_argument("build_basis: vibrational frequency must be > 0");
  RoVibBasis b;
  b.constants = rc;
  b.Jmax = Jmax;
  b.omega = omega;
  const auto rot = diagonalize_and_label(rc, Jmax);
  for (int nu = 0; nu < 2; ++nu)
    for (const auto& s : rot) b.states.push_back({nu, s});
  b.energies.resize(b.size());
  for (int i = 0; i < b.size(); ++i) b.energies[i] = b.states[i].rot.energy + b.states[i].nu * omega;
  return b;
}

/// Energy of the rotational level in units of B.
inline double level_energy(const RoVibBasis& b, const LevelLabel& l) {
  for (const auto& s : b.states)
    if (s.rot.J == l.J && s.rot.Ka == l.Ka && s.rot.Kc == l.Kc) return s.rot.energy;
  throw std::out_of_range("level " + l.str() + " is not in the basis");
}

/// <bra| sum_t c_t D^1_{p_t q_t} |ket> between asymmetric-top states.
inline cplx projection_element(const AsymTopState& bra, const std::vector<DMatrixTerm>& terms,
                               const AsymTopState& ket) {
  if (std::abs(bra.J - ket.J) > 1) return 0.0;
  cplx sum = 0.0;
  for (const auto& t : terms) {
    if (bra.M != ket.M + t.p) continue;
    cplx inner = 0.0;
    for (int K = -ket.J; K <= ket.J; ++K) {
      const int Kp = K + t.q;
      if (std::abs(Kp) > bra.J) continue;
      const cplx a = ket.coeff(K), b = bra.coeff(Kp);
      if (a == 0.0 || b == 0.0) continue;
      inner += std::conj(b) * a * d1_element({bra.J, Kp, bra.M}, t.p, t.q, {ket.J, K, ket.M});
    }
    sum += t.coefficient * inner;
  }
  return sum;
}

enum class Block { rotational, vibrational, static_field };

inline std::string_view to_string(Block b) {
  switch (b) {
    case Block::rotational: return "rotational";
    case Block::vibrational: return "vibrational";
    case Block::static_field: return "static";
  }
  return "?";
}

/// Raw projection matrix <r| mu.R.e |c> over the basis.
/// rotational: nu-diagonal elements from `mu` (the same in both nu blocks).
/// vibrational: absorption elements <1,phi'|..|0,phi> from `mu`; nothing else.
inline Eigen::MatrixXcd projection_matrix(const RoVibBasis& basis, const DipoleVector& mu,
                                          Polarization pol, Block block) {
  const int n = basis.size();
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(n, n);
  const auto terms = lab_projection(mu, pol);
  if (terms.empty()) return X;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto& sr = basis.states[r];
      const auto& sc = basis.states[c];
      if (block == Block::vibrational) {
        if (!(sr.nu == 1 && sc.nu == 0)) continue;
      } else if (sr.nu != sc.nu) {
        continue;
      }
      X(r, c) = projection_element(sr.rot, terms, sc.rot);
    }
  }
  return X;
}

struct ControlHamiltonian {
  std::string name;
  Polarization polarization = Polarization::z;
  Block block = Block::rotational;
  double carrier = 0.0;                // units of B
  std::optional<double> target_gap;    // resonance filter, units of B
  std::string filter_description;      // "broadband" or the target transition
  Eigen::MatrixXcd dipole;             // Debye
  double coupling_scale = 0.0;         // B per (Debye * V/m)
  std::string diagnostic;              // non-empty if the matrix came out empty

  bool empty() const { return dipole.size() == 0 || dipole.cwiseAbs().maxCoeff() == 0.0; }

  /// Matrix of the term -E * mu.R.e in units of B for peak field E (V/m).
  Eigen::MatrixXcd hamiltonian(double field_V_per_m) const {
    return -field_V_per_m * coupling_scale * dipole;
  }
};

inline constexpr double kResonanceTolerance = 1e-6;  // units of B

namespace detail {

inline void apply_filter(const RoVibBasis& basis, Eigen::MatrixXcd& X, double gap) {
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < X.cols(); ++c)
      if (X(r, c) != 0.0 &&
          std::abs(std::abs(basis.energies[r] - basis.energies[c]) - gap) > kResonanceTolerance)
        X(r, c) = 0.0;
}

inline void chop(Eigen::MatrixXcd& X) {
  const double scale = X.size() ? X.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < X.size(); ++i)
    if (std::abs(X.data()[i]) < 1e-14 * std::max(scale, 1.0)) X.data()[i] = 0.0;
}

inline bool is_circular(Polarization p) {
  return p == Polarization::sigma_plus || p == Polarization::sigma_minus;
}

}  // namespace detail

/// Microwave control from the permanent dipole. With a target, only elements
/// whose gap matches E(to) - E(from) are kept; without one all rotational
/// elements are kept and `carrier` must be given.
inline ControlHamiltonian build_mw_hamiltonian(const RoVibBasis& basis, const DipoleSet& dipoles,
                                               Polarization pol,
                                               std::optional<std::pair<LevelLabel, LevelLabel>> target,
                                               std::optional<double> carrier = std::nullopt) {
  ControlHamiltonian h;
  h.polarization = pol;
  h.block = Block::rotational;
  h.coupling_scale = units::coupling_scale(basis.constants.B_MHz);
  h.name = "mw_" + std::string(to_string(pol));
  Eigen::MatrixXcd Y = projection_matrix(basis, dipoles.permanent(), pol, Block::rotational);
  if (target) {
    const double gap =
        std::abs(level_energy(basis, target->second) - level_energy(basis, target->first));
    if (gap <= kResonanceTolerance)
      throw std::invalid_argument("microwave target " + target->first.str() + " -> " +
                                  target->second.str() + " has zero gap");
    h.target_gap = gap;
    h.carrier = carrier.value_or(gap);
    h.filter_description = target->first.str() + "->" + target->second.str();
    detail::apply_filter(basis, Y, gap);
  } else {
    if (!carrier) throw std::invalid_argument("broadband microwave control needs a carrier");
    h.carrier = *carrier;
    h.filter_description = "broadband";
  }
  detail::chop(Y);
  h.dipole = detail::is_circular(pol) ? Eigen::MatrixXcd(Y + Y.adjoint())
                                      : Eigen::MatrixXcd(0.5 * (Y + Y.adjoint()));
  if (h.empty())
    h.diagnostic = "microwave control " + h.name + " (" + h.filter_description +
                   ") has no dipole-allowed elements";
  return h;
}

struct IrTarget {
  LevelLabel from;  // in nu = 0
  LevelLabel to;    // in nu = 1
};

/// IR control from the transition dipole. Narrowband keeps pairs whose gap
/// equals omega + E(to) - E(from); broadband keeps every nu-changing element.
inline ControlHamiltonian build_ir_hamiltonian(const RoVibBasis& basis, const DipoleSet& dipoles,
                                               Polarization pol, std::optional<IrTarget> target,
                                               std::optional<double> carrier = std::nullopt) {
  ControlHamiltonian h;
  h.polarization = pol;
  h.block = Block::vibrational;
  h.coupling_scale = units::coupling_scale(basis.constants.B_MHz);
  h.name = "ir_" + std::string(to_string(pol));
  Eigen::MatrixXcd X = projection_matrix(basis, dipoles.transition, pol, Block::vibrational);
  if (target) {
    const double gap =
        basis.omega + level_energy(basis, target->to) - level_energy(basis, target->from);
    h.target_gap = gap;
    h.carrier = carrier.value_or(gap);
    h.filter_description = "0:" + target->from.str() + "->1:" + target->to.str();
    detail::apply_filter(basis, X, gap);
  } else {
    h.carrier = carrier.value_or(basis.omega);
    h.filter_description = "broadband";
  }
  detail::chop(X);
  h.dipole = X + X.adjoint();
  if (h.empty())
    h.diagnostic = "IR control " + h.name + " (" + h.filter_description +
                   ") has no dipole-allowed elements";
  return h;
}

/// H_stat = -E0 mu00.R.e_z in units of B (real, nu-diagonal, Delta M = 0).
inline Eigen::MatrixXd static_unit_hamiltonian(const RoVibBasis& basis, const DipoleVector& mu,
                                               double E0_V_per_m) {
  Eigen::MatrixXcd Z = projection_matrix(basis, mu, Polarization::z, Block::rotational);
  Eigen::MatrixXd H = -E0_V_per_m * units::coupling_scale(basis.constants.B_MHz) *
                      (0.5 * (Z + Z.adjoint())).real();
  for (Eigen::Index i = 0; i < H.size(); ++i)
    if (std::abs(H.data()[i]) < 1e-14) H.data()[i] = 0.0;
  return H;
}

/// epsilon * H_stat for the permanent dipole.
inline Eigen::MatrixXd build_static_hamiltonian(const RoVibBasis& basis, const DipoleSet& dipoles,
                                                double epsilon, double E0_V_per_m) {
  if (epsilon < 0.0) throw std::invalid_argument("static field scale epsilon must be >= 0");
  return epsilon * static_unit_hamiltonian(basis, dipoles.permanent(), E0_V_per_m);
}

/// A static field epsilon * H_stat. Graph building uses it for the order-1
/// edges and propagation for the dressed drift.
struct DressingSpec {
  Eigen::MatrixXd H_stat;  // unit static Hamiltonian, units of B
  double epsilon = 0.0;
};

/// Dressed states: columns of `vectors` are eigenvectors of H0 + eps*H_stat
/// in the bare basis, column i adiabatically connected to bare state i.
struct DressedStates {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;
};

/// Diagonalizes H0 + eps*H_stat per (nu, M) block. Labels follow the states
/// continuously from eps = 0 in `steps` increments; column signs make the
/// overlap with the previous step positive.
inline DressedStates field_dressed_states(const RoVibBasis& basis, const Eigen::MatrixXd& H_stat,
                                          double epsilon, int steps = 32) {
  const int n = basis.size();
  DressedStates out;
  out.energies = basis.energies;
  out.vectors = Eigen::MatrixXd::Identity(n, n);
  if (epsilon == 0.0) return out;
  for (int nu = 0; nu < 2; ++nu) {
    for (int M = -basis.Jmax; M <= basis.Jmax; ++M) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (basis.states[i].nu == nu && basis.states[i].rot.M == M) idx.push_back(i);
      const int m = static_cast<int>(idx.size());
      if (m == 0) continue;
      Eigen::MatrixXd H0(m, m), Hs(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          H0(a, b) = a == b ? basis.energies[idx[a]] : 0.0;
          Hs(a, b) = H_stat(idx[a], idx[b]);
        }
      Eigen::MatrixXd prev = Eigen::MatrixXd::Identity(m, m);
      Eigen::VectorXd prev_e = H0.diagonal();
      for (int s = 1; s <= steps; ++s) {
        const double e = epsilon * double(s) / steps;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H0 + e * Hs);
        const Eigen::MatrixXd ov = prev.transpose() * es.eigenvectors();
        Eigen::MatrixXd next(m, m);
        Eigen::VectorXd next_e(m);
        std::vector<bool> taken_row(m, false), taken_col(m, false);
        for (int k = 0; k < m; ++k) {
          // Greedy assignment on the largest remaining overlap.
          int br = -1, bc = -1;
          double best = -1.0;
          for (int r = 0; r < m; ++r) {
            if (taken_row[r]) continue;
            for (int c = 0; c < m; ++c) {
              if (taken_col[c]) continue;
              if (std::abs(ov(r, c)) > best) {
                best = std::abs(ov(r, c));
                br = r;
                bc = c;
              }
            }
          }
          taken_row[br] = taken_col[bc] = true;
          next.col(br) = ov(br, bc) < 0.0 ? Eigen::VectorXd(-es.eigenvectors().col(bc))
                                         : Eigen::VectorXd(es.eigenvectors().col(bc));
          next_e[br] = es.eigenvalues()[bc];
        }
        prev = next;
        prev_e = next_e;
      }
      for (int a = 0; a < m; ++a) {
        out.energies[idx[a]] = prev_e[a];
        for (int b = 0; b < m; ++b) out.vectors(idx[b], idx[a]) = prev(b, a);
      }
    }
  }
  return out;
}

/// First-order correction sum_{k: E_k != E_j} <k|H_stat|j>/(E_j - E_k) |k>.
inline Eigen::VectorXd perturbative_correction(const RoVibBasis& basis, const Eigen::MatrixXd& H_stat,
                                               int j) {
  if (j < 0 || j >= basis.size()) throw std::out_of_range("perturbative_correction: bad index");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.size());
  for (int k = 0; k < basis.size(); ++k) {
    const double dE = basis.energies[j] - basis.energies[k];
    if (std::abs(dE) < 1e-12) continue;
    v[k] = H_stat(k, j) / dE;
  }
  return v;
}

struct DressedCoupling {
  cplx zero_order;
  cplx first_order;  // coefficient of epsilon
  cplx a_route;      // part of first_order routed through the mu_a static coupling
  cplx b_route;
  double epsilon = 0.0;

  cplx value() const { return zero_order + epsilon * first_order; }
};

/// <k_fd| X |j_fd> to first order in epsilon. X is any matrix over the basis
/// (typically a vibrational control dipole); the unit static Hamiltonians for
/// the a- and b-components enter through the corrections of both states.
inline DressedCoupling field_dressed_coupling(const RoVibBasis& basis, const DipoleSet& dipoles,
                                              double E0_V_per_m, int k, int j,
                                              const Eigen::MatrixXcd& X, double epsilon) {
  const Eigen::MatrixXd Ha = static_unit_hamiltonian(basis, {dipoles.mu_a, 0.0, 0.0}, E0_V_per_m);
  const Eigen::MatrixXd Hb = static_unit_hamiltonian(basis, {0.0, dipoles.mu_b, 0.0}, E0_V_per_m);
  auto route = [&](const Eigen::MatrixXd& H) {
    const Eigen::VectorXcd dk = perturbative_correction(basis, H, k).cast<cplx>();
    const Eigen::VectorXcd dj = perturbative_correction(basis, H, j).cast<cplx>();
    return cplx(dk.dot(X.col(j))) + cplx((X.row(k).transpose().cwiseProduct(dj)).sum());
  };
  DressedCoupling d;
  d.epsilon = epsilon;
  d.zero_order = X(k, j);
  d.a_route = route(Ha);
  d.b_route = route(Hb);
  d.first_order = d.a_route + d.b_route;
  return d;
}

/// Coefficient of epsilon in <k_fd|X|j_fd> for all (k, j) at once:
/// Phi^T X + X Phi with column j of Phi the correction of state j.
inline Eigen::MatrixXcd first_order_matrix(const RoVibBasis& basis, const Eigen::MatrixXd& H_stat,
                                           const Eigen::MatrixXcd& X) {
  const int n = basis.size();
  Eigen::MatrixXd Phi(n, n);
  for (int j = 0; j < n; ++j) Phi.col(j) = perturbative_correction(basis, H_stat, j);
  const Eigen::MatrixXcd P = Phi.cast<cplx>();
  return P.transpose() * X + X * P;
}

/// Exact <k_fd| X |j_fd> from the dressed eigenvectors.
inline cplx exact_dressed_element(const DressedStates& fd, const Eigen::MatrixXcd& X, int k, int j) {
  const Eigen::VectorXcd vk = fd.vectors.col(k).cast<cplx>();
  const Eigen::VectorXcd vj = fd.vectors.col(j).cast<cplx>();
  return vk.dot(X * vj);
}

/// CSV dump of the nonzero elements of a matrix: row, col, re, im, gap.
inline void write_matrix_csv(std::ostream& os, const RoVibBasis& basis, const Eigen::MatrixXcd& X,
                             double tolerance = 1e-12) {
  os << "row,col,re,im,gap\n";
  os.precision(12);
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < X.cols(); ++c)
      if (std::abs(X(r, c)) > tolerance)
        os << r + 1 << ',' << c + 1 << ',' << X(r, c).real() << ',' << X(r, c).imag() << ','
           << std::abs(basis.energies[r] - basis.energies[c]) << '\n';
}

}  // namespace chiralwp
