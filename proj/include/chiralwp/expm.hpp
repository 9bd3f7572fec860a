#pragma once

// Action of exp(-i tau H) on a vector for sparse Hermitian H, by Lanczos with
// full reorthogonalization. The Krylov basis is orthonormal and the projected
// tridiagonal exponential is unitary, so the result keeps the input norm to
// rounding.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace chiralwp {

using cplx = std::complex<double>;

/// Compressed-row pattern shared by several Hermitian matrices; each matrix
/// supplies one value array on that pattern.
struct SharedPattern {
  int n = 0;
  std::vector<int> row_start;  // size n + 1
  std::vector<int> col;

  static SharedPattern from_union(const std::vector<const Eigen::MatrixXcd*>& mats, double tol = 0.0) {
    SharedPattern p;
    if (mats.empty()) return p;
    p.n = static_cast<int>(mats.front()->rows());
    p.row_start.assign(p.n + 1, 0);
    for (int r = 0; r < p.n; ++r) {
      for (int c = 0; c < p.n; ++c) {
        bool nz = false;
        for (const auto* m : mats) nz = nz || std::abs((*m)(r, c)) > tol;
        if (nz) p.col.push_back(c);
      }
      p.row_start[r + 1] = static_cast<int>(p.col.size());
    }
    return p;
  }

  std::vector<cplx> values(const Eigen::MatrixXcd& m) const {
    std::vector<cplx> v(col.size());
    for (int r = 0; r < n; ++r)
      for (int k = row_start[r]; k < row_start[r + 1]; ++k) v[k] = m(r, col[k]);
    return v;
  }

  void multiply(const std::vector<cplx>& vals, const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    y.setZero(n);
    for (int r = 0; r < n; ++r) {
      cplx s = 0.0;
      for (int k = row_start[r]; k < row_start[r + 1]; ++k) s += vals[k] * x[col[k]];
      y[r] = s;
    }
  }
};

struct LanczosStats {
  int dimension = 0;
  double error_estimate = 0.0;
};

/// Returns exp(-i tau H) v. `apply(x, y)` must set y = H x.
template <class Apply>
Eigen::VectorXcd lanczos_expm(Apply&& apply, const Eigen::VectorXcd& v, double tau, double tol = 1e-14,
                              int max_dim = 40, LanczosStats* stats = nullptr) {
  const double beta0 = v.norm();
  const Eigen::Index n = v.size();
  if (beta0 == 0.0 || tau == 0.0) return v;
  const int mmax = static_cast<int>(std::min<Eigen::Index>(max_dim, n));
  std::vector<Eigen::VectorXcd> Q;
  Q.reserve(mmax + 1);
  Q.push_back(v / beta0);
  std::vector<double> alpha, beta;
  Eigen::VectorXcd w(n);
  Eigen::VectorXcd result;

  auto project = [&](int m, double& err) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    Eigen::VectorXcd phase(m);
    for (int i = 0; i < m; ++i) phase[i] = std::exp(cplx(0.0, -tau * es.eigenvalues()[i]));
    const Eigen::MatrixXcd S = es.eigenvectors().cast<cplx>();
    const Eigen::VectorXcd y = S * phase.asDiagonal() * S.row(0).transpose();
    // Magnitude of the last component times the next off-diagonal bounds the
    // Krylov residual.
    err = static_cast<int>(beta.size()) >= m ? std::abs(y[m - 1]) * beta[m - 1] : 0.0;
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < m; ++i) out += y[i] * Q[i];
    return Eigen::VectorXcd(beta0 * out);
  };

  for (int j = 0; j < mmax; ++j) {
    apply(Q[j], w);
    const double a = std::real(Q[j].dot(w));
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= Q[i].dot(w) * Q[i];
    const double b = w.norm();
    beta.push_back(b);
    const int m = j + 1;
    // Invariant subspace: the projection is exact.
    if (b < 1e-14 * (std::abs(a) + 1.0)) {
      double err = 0.0;
      beta.pop_back();
      result = project(m, err);
      if (stats) *stats = {m, 0.0};
      return result;
    }
    if (m >= 2) {
      double err = 0.0;
      result = project(m, err);
      if (err < tol) {
        if (stats) *stats = {m, err};
        return result;
      }
    }
    Q.push_back(w / b);
  }
  double err = 0.0;
  result = project(mmax, err);
  if (stats) *stats = {mmax, err};
  return result;
}

/// Dense reference: exp(-i tau H) for Hermitian H via eigendecomposition.
inline Eigen::MatrixXcd expm_hermitian(const Eigen::MatrixXcd& H, double tau) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  Eigen::VectorXcd ph(H.rows());
  for (Eigen::Index i = 0; i < H.rows(); ++i) ph[i] = std::exp(cplx(0.0, -tau * es.eigenvalues()[i]));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace chiralwp
