#pragma once

// Wigner 3-j symbols, rank-1 Wigner D-matrix elements between symmetric-top
// kets, and laboratory-frame projections of molecule-fixed dipole vectors.
//
// Conventions: Condon-Shortley phases. A symmetric-top ket |J K M> carries M
// as the space-fixed projection and K as the projection on the body a axis;
// D^1_{pq} has p as the lab index and q as the body index, so that
// <J'K'M'|D^1_{pq}|JKM> vanishes unless M' = M + p and K' = K + q.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace chiralwp {

using cplx = std::complex<double>;

struct SymTopKet {
  int J = 0;
  int K = 0;
  int M = 0;

  bool valid() const { return J >= 0 && std::abs(K) <= J && std::abs(M) <= J; }
};

/// Laboratory polarization of a field. sigma_plus / sigma_minus raise / lower M.
enum class Polarization { x, y, z, sigma_plus, sigma_minus };

inline std::string_view to_string(Polarization p) {
  switch (p) {
    case Polarization::x: return "x";
    case Polarization::y: return "y";
    case Polarization::z: return "z";
    case Polarization::sigma_plus: return "sigma+";
    case Polarization::sigma_minus: return "sigma-";
  }
  return "?";
}

inline Polarization parse_polarization(std::string_view s) {
  if (s == "x") return Polarization::x;
  if (s == "y") return Polarization::y;
  if (s == "z") return Polarization::z;
  if (s == "sigma+" || s == "sigma_plus" || s == "s+") return Polarization::sigma_plus;
  if (s == "sigma-" || s == "sigma_minus" || s == "s-") return Polarization::sigma_minus;
  throw std::invalid_argument("unknown polarization '" + std::string(s) + "'");
}

/// One term coefficient * D^1_{pq} of a lab-frame projection.
struct DMatrixTerm {
  int p = 0;
  int q = 0;
  cplx coefficient{0.0, 0.0};
};

/// Molecule-fixed dipole vector in Debye.
struct DipoleVector {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  bool is_zero() const { return a == 0.0 && b == 0.0 && c == 0.0; }
};

namespace detail {

// Factorials n! for n <= 121 as prime exponent vectors; enough for j <= 40.
inline constexpr int kMaxFactorial = 121;

inline const std::vector<int>& primes() {
  static const std::vector<int> ps = [] {
    std::vector<int> out;
    for (int n = 2; n <= kMaxFactorial; ++n) {
      bool prime = true;
      for (int d : out) {
        if (d * d > n) break;
        if (n % d == 0) {
          prime = false;
          break;
        }
      }
      if (prime) out.push_back(n);
    }
    return out;
  }();
  return ps;
}

using Exponents = std::vector<int>;

inline const std::vector<Exponents>& factorial_exponents() {
  static const std::vector<Exponents> table = [] {
    const auto& ps = primes();
    std::vector<Exponents> t(kMaxFactorial + 1, Exponents(ps.size(), 0));
    for (int n = 2; n <= kMaxFactorial; ++n) {
      t[n] = t[n - 1];
      int m = n;
      for (std::size_t i = 0; i < ps.size() && m > 1; ++i) {
        while (m % ps[i] == 0) {
          ++t[n][i];
          m /= ps[i];
        }
      }
    }
    return t;
  }();
  return table;
}

inline boost::multiprecision::cpp_int product_of_powers(const Exponents& e) {
  boost::multiprecision::cpp_int r = 1;
  const auto& ps = primes();
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int k = 0; k < e[i]; ++k) r *= ps[i];
  return r;
}

inline double wigner3j_uncached(int j1, int j2, int j3, int m1, int m2, int m3) {
  using boost::multiprecision::cpp_int;
  if (m1 + m2 + m3 != 0) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;
  if (j1 + j2 + j3 + 1 > kMaxFactorial)
    throw std::out_of_range("wigner3j: angular momenta beyond supported range");

  const auto& fact = factorial_exponents();
  const std::size_t np = primes().size();

  // Squared prefactor: triangle coefficient times the six m-dependent factorials.
  Exponents pre(np, 0);
  auto add = [&](Exponents& e, int n, int sign) {
    for (std::size_t i = 0; i < np; ++i) e[i] += sign * fact[n][i];
  };
  add(pre, j1 + j2 - j3, +1);
  add(pre, j1 - j2 + j3, +1);
  add(pre, -j1 + j2 + j3, +1);
  add(pre, j1 + j2 + j3 + 1, -1);
  add(pre, j1 + m1, +1);
  add(pre, j1 - m1, +1);
  add(pre, j2 + m2, +1);
  add(pre, j2 - m2, +1);
  add(pre, j3 + m3, +1);
  add(pre, j3 - m3, +1);

  const int kmin = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int kmax = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  if (kmin > kmax) return 0.0;

  // Each Racah term is (-1)^k / den_k; bring them onto the common denominator.
  std::vector<Exponents> dens;
  for (int k = kmin; k <= kmax; ++k) {
    Exponents d(np, 0);
    add(d, k, +1);
    add(d, j1 + j2 - j3 - k, +1);
    add(d, j1 - m1 - k, +1);
    add(d, j2 + m2 - k, +1);
    add(d, j3 - j2 + m1 + k, +1);
    add(d, j3 - j1 - m2 + k, +1);
    dens.push_back(std::move(d));
  }
  Exponents common(np, 0);
  for (const auto& d : dens)
    for (std::size_t i = 0; i < np; ++i) common[i] = std::max(common[i], d[i]);

  cpp_int numerator = 0;
  for (std::size_t idx = 0; idx < dens.size(); ++idx) {
    Exponents ratio(np, 0);
    for (std::size_t i = 0; i < np; ++i) ratio[i] = common[i] - dens[idx][i];
    cpp_int term = product_of_powers(ratio);
    if ((kmin + static_cast<int>(idx)) % 2 == 0)
      numerator += term;
    else
      numerator -= term;
  }
  if (numerator == 0) return 0.0;

  // value^2 = numerator^2 * pre / common^2, split into integer num/den.
  Exponents num_e(np, 0), den_e(np, 0);
  for (std::size_t i = 0; i < np; ++i) {
    const int e = pre[i] - 2 * common[i];
    if (e > 0)
      num_e[i] = e;
    else
      den_e[i] = -e;
  }
  const bool negative_sum = numerator < 0;
  cpp_int abs_num = negative_sum ? cpp_int(-numerator) : numerator;
  cpp_int sq_num = abs_num * abs_num * product_of_powers(num_e);
  cpp_int sq_den = product_of_powers(den_e);
  // Keep ~30 significant digits through the division before going to double.
  const unsigned shift = 200;
  cpp_int scaled = (sq_num << (2 * shift)) / sq_den;
  cpp_int root = boost::multiprecision::sqrt(scaled);
  double magnitude = std::ldexp(root.convert_to<double>(), -static_cast<int>(shift));

  const int phase_exp = j1 - j2 - m3;
  const bool negative_phase = ((phase_exp % 2) + 2) % 2 == 1;
  return (negative_sum != negative_phase) ? -magnitude : magnitude;
}

}  // namespace detail

/// Wigner 3-j symbol for integer angular momenta. Out-of-domain arguments give 0.
/// Thread-safe; results are memoized.
inline double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (j1 < 0 || j2 < 0 || j3 < 0) return 0.0;
  static std::mutex mutex;
  static std::map<std::array<int, 6>, double> cache;
  const std::array<int, 6> key{j1, j2, j3, m1, m2, m3};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double v = detail::wigner3j_uncached(j1, j2, j3, m1, m2, m3);
  std::lock_guard lock(mutex);
  cache.emplace(key, v);
  return v;
}

/// <J'K'M'| D^1_{pq} |J K M> with wavefunctions sqrt((2J+1)/8pi^2) D^J_{MK}.
inline double d1_element(const SymTopKet& bra, int p, int q, const SymTopKet& ket) {
  if (std::abs(p) > 1 || std::abs(q) > 1) return 0.0;
  if (bra.M != ket.M + p || bra.K != ket.K + q) return 0.0;
  if (std::abs(bra.J - ket.J) > 1) return 0.0;
  const double phase = ((bra.M - bra.K) % 2 == 0) ? 1.0 : -1.0;
  return phase * std::sqrt(double((2 * ket.J + 1) * (2 * bra.J + 1))) *
         wigner3j(bra.J, 1, ket.J, -bra.M, p, ket.M) *
         wigner3j(bra.J, 1, ket.J, -bra.K, q, ket.K);
}

namespace detail {

inline void push_term(std::vector<DMatrixTerm>& out, int p, int q, cplx c) {
  if (c == cplx{0.0, 0.0}) return;
  for (auto& t : out) {
    if (t.p == p && t.q == q) {
      t.coefficient += c;
      return;
    }
  }
  out.push_back({p, q, c});
}

inline std::vector<DMatrixTerm> linear_projection(const DipoleVector& mu, Polarization pol) {
  std::vector<DMatrixTerm> out;
  const double r2 = std::sqrt(2.0);
  const cplx i{0.0, 1.0};
  switch (pol) {
    case Polarization::z:
      push_term(out, 0, 0, mu.a);
      push_term(out, 0, 1, -mu.b / r2);
      push_term(out, 0, -1, mu.b / r2);
      push_term(out, 0, 1, i * mu.c / r2);
      push_term(out, 0, -1, i * mu.c / r2);
      break;
    case Polarization::x:
      push_term(out, -1, 0, mu.a / r2);
      push_term(out, 1, 0, -mu.a / r2);
      push_term(out, 1, 1, mu.b / 2.0);
      push_term(out, 1, -1, -mu.b / 2.0);
      push_term(out, -1, 1, -mu.b / 2.0);
      push_term(out, -1, -1, mu.b / 2.0);
      push_term(out, 1, 1, -i * mu.c / 2.0);
      push_term(out, 1, -1, -i * mu.c / 2.0);
      push_term(out, -1, 1, i * mu.c / 2.0);
      push_term(out, -1, -1, i * mu.c / 2.0);
      break;
    case Polarization::y:
      push_term(out, -1, 0, -i * mu.a / r2);
      push_term(out, 1, 0, -i * mu.a / r2);
      push_term(out, 1, 1, i * mu.b / 2.0);
      push_term(out, 1, -1, -i * mu.b / 2.0);
      push_term(out, -1, 1, i * mu.b / 2.0);
      push_term(out, -1, -1, -i * mu.b / 2.0);
      push_term(out, 1, 1, mu.c / 2.0);
      push_term(out, 1, -1, mu.c / 2.0);
      push_term(out, -1, 1, mu.c / 2.0);
      push_term(out, -1, -1, mu.c / 2.0);
      break;
    default:
      break;
  }
  return out;
}

}  // namespace detail

/// Lab-frame projection mu . R . e as a sum of D^1_{pq} terms.
///
/// The y set carries the opposite handedness to the spherical basis used for
/// D^1_{pq}, so sigma+ = x - i*y(set) collects the p = +1 terms and raises M;
/// sigma- = x + i*y(set) collects p = -1. No 1/sqrt(2) normalization.
inline std::vector<DMatrixTerm> lab_projection(const DipoleVector& mu, Polarization pol) {
  if (mu.is_zero()) return {};
  if (pol != Polarization::sigma_plus && pol != Polarization::sigma_minus) {
    auto terms = detail::linear_projection(mu, pol);
    std::erase_if(terms, [](const DMatrixTerm& t) { return std::abs(t.coefficient) == 0.0; });
    return terms;
  }
  const double sign = pol == Polarization::sigma_plus ? -1.0 : 1.0;
  std::vector<DMatrixTerm> out;
  for (const auto& t : detail::linear_projection(mu, Polarization::x))
    detail::push_term(out, t.p, t.q, t.coefficient);
  for (const auto& t : detail::linear_projection(mu, Polarization::y))
    detail::push_term(out, t.p, t.q, sign * cplx{0.0, 1.0} * t.coefficient);
  std::erase_if(out, [](const DMatrixTerm& t) { return std::abs(t.coefficient) < 1e-15; });
  return out;
}

}  // namespace chiralwp
