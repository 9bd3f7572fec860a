#pragma once

// Driven Schrodinger propagation over a RoVibBasis.
//
// The state is carried as Schrodinger-picture amplitudes over the eigenbasis
// of the drift H0 (+ eps H_stat), which is diagonal there. A full step is the
// symmetric split
//   a <- exp(-i E h/2) exp(-i V(t + h/2) h) exp(-i E h/2) a,
// identical to the exponential midpoint rule in the interaction picture, so it
// is unitary and second order. The optional RWA mode keeps only the
// co-rotating half of each carrier and steps the slowly varying
// interaction-picture Hamiltonian instead.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chiralwp/expm.hpp"
#include "chiralwp/hamiltonian.hpp"

namespace chiralwp {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvelopeShape { gaussian, flat_top };

inline constexpr double kGaussianCutoff = 5.0;  // widths on each side of the center

/// Dimensionless envelope s(t) in [0, 1]. Gaussian: exp(-(t-tc)^2 / (2 w^2))
/// cut at tc +- 5 w. Flat top: sin^2 rise, hold at 1, cos^2 fall.
struct Envelope {
  EnvelopeShape shape = EnvelopeShape::gaussian;
  double center = 0.0;  // gaussian, t0
  double width = 1.0;   // gaussian standard deviation, t0
  double start = 0.0;   // flat top switch-on, t0
  double rise = 0.0;
  double hold = 0.0;
  double fall = 0.0;

  void validate() const {
    if (shape == EnvelopeShape::gaussian) {
      if (!(width > 0.0)) throw std::invalid_argument("gaussian envelope width must be > 0");
    } else {
      if (rise < 0.0 || hold < 0.0 || fall < 0.0 || !(rise + hold + fall > 0.0))
        throw std::invalid_argument("flat-top envelope needs non-negative rise/hold/fall with positive total");
    }
  }

  double begin() const {
    return shape == EnvelopeShape::gaussian ? center - kGaussianCutoff * width : start;
  }
  double end() const {
    return shape == EnvelopeShape::gaussian ? center + kGaussianCutoff * width : start + rise + hold + fall;
  }

  double value(double t) const {
    if (t < begin() || t > end()) return 0.0;
    if (shape == EnvelopeShape::gaussian) {
      const double x = (t - center) / width;
      return std::exp(-0.5 * x * x);
    }
    const double x = t - start;
    if (x < rise) {
      const double s = std::sin(0.5 * std::numbers::pi * x / rise);
      return s * s;
    }
    if (x <= rise + hold) return 1.0;
    const double s = std::cos(0.5 * std::numbers::pi * (x - rise - hold) / fall);
    return s * s;
  }

  /// Shortest time scale of the envelope, used to bound the step.
  double resolution() const {
    if (shape == EnvelopeShape::gaussian) return width;
    double r = rise + hold + fall;
    if (rise > 0.0) r = std::min(r, rise);
    if (fall > 0.0) r = std::min(r, fall);
    return r;
  }
};

/// u(t) = s(t) cos(carrier t + phase) driving control `control` at peak field
/// `field_V_per_m`.
struct PulseSpec {
  std::string name;
  Envelope envelope;
  double carrier = 0.0;  // units of B
  double phase = 0.0;    // rad
  double field_V_per_m = 0.0;
  int control = 0;

  double u(double t) const { return envelope.value(t) * std::cos(carrier * t + phase); }
};

struct PropagationOptions {
  double t_start = 0.0;
  double t_final = 0.0;
  double dt = 0.05;         // step cap, t0
  double dt_scale = 1.0;    // multiplies every step size (convergence studies)
  double rwa_dt = 0.5;      // step cap in RWA mode
  double sample_dt = 0.5;   // <= 0: only start and end
  std::vector<double> extra_samples;
  bool rwa = false;
  double norm_tolerance = 1e-8;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;  // Schrodinger amplitudes over the propagation basis
  Eigen::VectorXd energies;              // drift eigenvalues of the propagation basis
  Eigen::MatrixXd to_bare;               // column i: propagation state i in the bare basis
  bool dressed = false;
  double max_norm_error = 0.0;
  long steps = 0;

  std::size_t size() const { return times.size(); }
  Eigen::VectorXcd bare_state(std::size_t i) const {
    return dressed ? Eigen::VectorXcd(to_bare.cast<cplx>() * states[i]) : states[i];
  }
  /// Index of the sample closest to t.
  std::size_t sample_at(double t) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
      if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
    return best;
  }
};

class Propagator {
 public:
  Propagator(const RoVibBasis& basis, std::vector<ControlHamiltonian> controls,
             std::optional<DressingSpec> static_field = std::nullopt)
      : basis_(basis), controls_(std::move(controls)) {
    const int n = basis.size();
    for (const auto& c : controls_)
      if (c.dipole.rows() != n || c.dipole.cols() != n)
        throw std::invalid_argument("control '" + c.name + "' was built on a different basis");
    energies_ = basis.energies;
    to_bare_ = Eigen::MatrixXd::Identity(n, n);
    if (static_field && static_field->epsilon != 0.0) {
      if (static_field->H_stat.rows() != n)
        throw std::invalid_argument("static Hamiltonian was built on a different basis");
      const auto fd = field_dressed_states(basis, static_field->H_stat, static_field->epsilon);
      energies_ = fd.energies;
      to_bare_ = fd.vectors;
      dressed_ = true;
    }
    std::vector<Eigen::MatrixXcd> coupling;
    const Eigen::MatrixXcd U = to_bare_.cast<cplx>();
    for (const auto& c : controls_) {
      Eigen::MatrixXcd m = -c.coupling_scale * (dressed_ ? Eigen::MatrixXcd(U.adjoint() * c.dipole * U)
                                                         : c.dipole);
      const double scale = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
      for (Eigen::Index i = 0; i < m.size(); ++i)
        if (std::abs(m.data()[i]) <= 1e-13 * scale) m.data()[i] = 0.0;
      coupling.push_back(std::move(m));
    }
    std::vector<const Eigen::MatrixXcd*> ptrs;
    for (const auto& m : coupling) ptrs.push_back(&m);
    pattern_ = SharedPattern::from_union(ptrs);
    for (const auto& m : coupling) values_.push_back(pattern_.values(m));
    rows_.resize(pattern_.col.size());
    for (int r = 0; r < pattern_.n; ++r)
      for (int k = pattern_.row_start[r]; k < pattern_.row_start[r + 1]; ++k) rows_[k] = r;
    for (const auto& m : coupling) blocks_.push_back(eigen_blocks(m));
  }

  const RoVibBasis& basis() const { return basis_; }
  const std::vector<ControlHamiltonian>& controls() const { return controls_; }
  const Eigen::VectorXd& energies() const { return energies_; }
  const Eigen::MatrixXd& to_bare() const { return to_bare_; }
  bool dressed() const { return dressed_; }

  /// Bare-basis state -> propagation-basis amplitudes.
  Eigen::VectorXcd from_bare(const Eigen::VectorXcd& c) const {
    return dressed_ ? Eigen::VectorXcd(to_bare_.transpose().cast<cplx>() * c) : c;
  }

  Trajectory run(const std::vector<PulseSpec>& pulses, const Eigen::VectorXcd& psi0_bare,
                 const PropagationOptions& opt) const {
    check_inputs(pulses, psi0_bare, opt);
    Trajectory tr;
    tr.energies = energies_;
    tr.to_bare = to_bare_;
    tr.dressed = dressed_;
    const auto samples = sample_times(opt);
    auto grid = samples;
    for (const auto& p : pulses) {
      for (double t : {p.envelope.begin(), p.envelope.end()})
        if (t > opt.t_start && t < opt.t_final) grid.push_back(t);
    }
    grid = unique_sorted(std::move(grid));

    Eigen::VectorXcd a = from_bare(psi0_bare);
    std::size_t next_sample = 0;
    auto record = [&](double t) {
      while (next_sample < samples.size() && samples[next_sample] <= t + 1e-12) {
        const double err = std::abs(a.norm() - 1.0);
        tr.max_norm_error = std::max(tr.max_norm_error, err);
        if (err > opt.norm_tolerance) {
          std::ostringstream os;
          os << "norm drift " << err << " at t = " << t << " t0 exceeds " << opt.norm_tolerance;
          throw NumericalError(os.str());
        }
        tr.times.push_back(samples[next_sample]);
        tr.states.push_back(a);
        ++next_sample;
      }
    };
    record(grid.front());
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      tr.steps += advance(a, grid[i], grid[i + 1], pulses, opt);
      record(grid[i + 1]);
    }
    return tr;
  }

  /// Runs the same step sequence backwards from t_final to t_start starting
  /// from propagation-basis amplitudes; returns propagation-basis amplitudes.
  Eigen::VectorXcd run_backward(const std::vector<PulseSpec>& pulses, const Eigen::VectorXcd& a_final,
                                const PropagationOptions& opt) const {
    check_inputs(pulses, a_final, opt);
    std::vector<double> grid = sample_times(opt);
    for (const auto& p : pulses)
      for (double t : {p.envelope.begin(), p.envelope.end()})
        if (t > opt.t_start && t < opt.t_final) grid.push_back(t);
    grid = unique_sorted(std::move(grid));
    Eigen::VectorXcd a = a_final;
    for (std::size_t i = grid.size() - 1; i > 0; --i) advance(a, grid[i], grid[i - 1], pulses, opt);
    return a;
  }

 private:
  void check_inputs(const std::vector<PulseSpec>& pulses, const Eigen::VectorXcd& psi,
                    const PropagationOptions& opt) const {
    if (psi.size() != basis_.size()) throw std::invalid_argument("initial state does not match the basis size");
    if (std::abs(psi.norm() - 1.0) > 1e-10) throw std::invalid_argument("initial state is not normalized");
    if (!(opt.t_final > opt.t_start)) throw std::invalid_argument("t_final must be after t_start");
    if (!(opt.dt > 0.0) || !(opt.dt_scale > 0.0) || !(opt.rwa_dt > 0.0))
      throw std::invalid_argument("time steps must be > 0");
    for (const auto& p : pulses) {
      p.envelope.validate();
      if (p.control < 0 || p.control >= static_cast<int>(controls_.size()))
        throw std::invalid_argument("pulse '" + p.name + "' references a missing control");
      if (p.carrier < 0.0) throw std::invalid_argument("pulse '" + p.name + "' has a negative carrier");
    }
  }

  static std::vector<double> unique_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double t : v)
      if (out.empty() || t - out.back() > 1e-9) out.push_back(t);
    return out;
  }

  static std::vector<double> sample_times(const PropagationOptions& opt) {
    std::vector<double> s{opt.t_start, opt.t_final};
    if (opt.sample_dt > 0.0) {
      const long n = static_cast<long>(std::floor((opt.t_final - opt.t_start) / opt.sample_dt + 1e-9));
      for (long k = 1; k <= n; ++k) s.push_back(opt.t_start + double(k) * opt.sample_dt);
    }
    for (double t : opt.extra_samples)
      if (t >= opt.t_start && t <= opt.t_final) s.push_back(t);
    s = unique_sorted(std::move(s));
    while (s.size() > 1 && s.back() > opt.t_final + 1e-9) s.pop_back();
    return s;
  }

  std::vector<int> active_pulses(const std::vector<PulseSpec>& pulses, double ta, double tb) const {
    const double mid = 0.5 * (ta + tb);
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(pulses.size()); ++i) {
      const auto& p = pulses[i];
      if (p.field_V_per_m != 0.0 && mid > p.envelope.begin() && mid < p.envelope.end() &&
          !values_[p.control].empty())
        out.push_back(i);
    }
    return out;
  }

  // Advances a from ta to tb (tb < ta runs backwards); returns the step count.
  long advance(Eigen::VectorXcd& a, double ta, double tb, const std::vector<PulseSpec>& pulses,
               const PropagationOptions& opt) const {
    const auto active = active_pulses(pulses, ta, tb);
    const double len = std::abs(tb - ta);
    if (active.empty()) {
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] *= std::exp(cplx(0.0, -energies_[i] * (tb - ta)));
      return 0;
    }
    return opt.rwa ? advance_rwa(a, ta, tb, len, active, pulses, opt)
                   : advance_full(a, ta, tb, len, active, pulses, opt);
  }

  long advance_full(Eigen::VectorXcd& a, double ta, double tb, double len, const std::vector<int>& active,
                    const std::vector<PulseSpec>& pulses, const PropagationOptions& opt) const {
    double hmax = opt.dt;
    for (int i : active) {
      const auto& p = pulses[i];
      if (p.carrier > 0.0) hmax = std::min(hmax, 2.0 * std::numbers::pi / (20.0 * p.carrier));
      hmax = std::min(hmax, p.envelope.resolution() / 20.0);
    }
    hmax *= opt.dt_scale;
    const long nsteps = std::max(1L, static_cast<long>(std::ceil(len / hmax - 1e-9)));
    const double h = (tb - ta) / double(nsteps);
    // The loop carries b = exp(i E (t - ta)) a, so step k is
    //   b <- exp(i E tau) exp(-i V h) exp(-i E tau) b,  tau = (k + 1/2) h,
    // the split step written in the interaction picture. The phases are formed
    // afresh each step, which keeps their rounding from compounding.
    std::vector<cplx> vals(pattern_.col.size());
    auto apply = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { pattern_.multiply(vals, x, y); };
    Eigen::VectorXcd ph(a.size());
    for (long k = 0; k < nsteps; ++k) {
      const double tau = (double(k) + 0.5) * h;
      const double tm = ta + tau;
      if (active.size() == 1) {
        const auto& p = pulses[active.front()];
        const double f = p.field_V_per_m * p.u(tm);
        if (f != 0.0) apply_blocks(a, blocks_[p.control], f * h, tau);
      } else {
        std::fill(vals.begin(), vals.end(), cplx(0.0));
        for (int i : active) {
          const auto& p = pulses[i];
          const double f = p.field_V_per_m * p.u(tm);
          if (f == 0.0) continue;
          const auto& v = values_[p.control];
          for (std::size_t e = 0; e < vals.size(); ++e) vals[e] += f * v[e];
        }
        for (Eigen::Index i = 0; i < a.size(); ++i) ph[i] = std::polar(1.0, -energies_[i] * tau);
        Eigen::VectorXcd x = lanczos_expm(apply, Eigen::VectorXcd(ph.cwiseProduct(a)), h);
        a = ph.conjugate().cwiseProduct(x);
      }
    }
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] *= std::polar(1.0, -energies_[i] * (tb - ta));
    return nsteps;
  }

  long advance_rwa(Eigen::VectorXcd& a, double ta, double tb, double len, const std::vector<int>& active,
                   const std::vector<PulseSpec>& pulses, const PropagationOptions& opt) const {
    double hmax = opt.rwa_dt;
    for (int i : active) {
      const auto& p = pulses[i];
      const auto& v = values_[p.control];
      double det = 0.0;
      for (std::size_t e = 0; e < v.size(); ++e) {
        if (v[e] == 0.0) continue;
        const double gap = std::abs(energies_[rows_[e]] - energies_[pattern_.col[e]]);
        det = std::max(det, std::abs(gap - p.carrier));
      }
      if (det > 0.0) hmax = std::min(hmax, 2.0 * std::numbers::pi / (20.0 * det));
      hmax = std::min(hmax, p.envelope.resolution() / 20.0);
    }
    hmax *= opt.dt_scale;
    const long nsteps = std::max(1L, static_cast<long>(std::ceil(len / hmax - 1e-9)));
    const double h = (tb - ta) / double(nsteps);
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] *= std::exp(cplx(0.0, energies_[i] * ta));
    // Per active pulse, the co-rotating entries and their phase factors at the
    // first midpoint; the factors advance by a fixed rotation per step and are
    // re-formed exactly every kResync steps.
    struct Term {
      int pulse;
      std::size_t entry;
      double freq, offset;
      cplx phase, step;
    };
    constexpr long kResync = 256;
    std::vector<Term> terms;
    for (int i : active) {
      const auto& p = pulses[i];
      const auto& v = values_[p.control];
      for (std::size_t e = 0; e < v.size(); ++e) {
        if (v[e] == 0.0) continue;
        const double gap = energies_[rows_[e]] - energies_[pattern_.col[e]];
        if (gap == 0.0) continue;
        const double freq = gap > 0.0 ? gap - p.carrier : gap + p.carrier;
        const double offset = gap > 0.0 ? -p.phase : p.phase;
        terms.push_back({i, e, freq, offset, cplx(0.0), std::polar(1.0, freq * h)});
      }
    }
    std::vector<cplx> vals(pattern_.col.size());
    auto apply = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { pattern_.multiply(vals, x, y); };
    std::vector<double> amp(pulses.size(), 0.0);
    for (long k = 0; k < nsteps; ++k) {
      const double tm = ta + (double(k) + 0.5) * h;
      for (int i : active) amp[i] = 0.5 * pulses[i].field_V_per_m * pulses[i].envelope.value(tm);
      std::fill(vals.begin(), vals.end(), cplx(0.0));
      for (auto& term : terms) {
        if (k % kResync == 0) term.phase = std::polar(1.0, term.freq * tm + term.offset);
        else term.phase *= term.step;
        vals[term.entry] += amp[term.pulse] * values_[pulses[term.pulse].control][term.entry] * term.phase;
      }
      a = lanczos_expm(apply, a, h);
    }
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] *= std::exp(cplx(0.0, -energies_[i] * tb));
    return nsteps;
  }

  // Eigendecomposition of one coupling matrix on each connected block of its
  // nonzero pattern; exp(-i f h M) then costs two small products per block.
  struct EigenBlock {
    std::vector<int> idx;
    Eigen::MatrixXcd W;
    Eigen::VectorXd lambda;
  };

  static std::vector<EigenBlock> eigen_blocks(const Eigen::MatrixXcd& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<int> comp(n, -1);
    std::vector<EigenBlock> out;
    for (int s = 0; s < n; ++s) {
      if (comp[s] >= 0) continue;
      std::vector<int> members{s};
      comp[s] = s;
      for (std::size_t q = 0; q < members.size(); ++q)
        for (int c = 0; c < n; ++c)
          if (comp[c] < 0 && (m(members[q], c) != 0.0 || m(c, members[q]) != 0.0)) {
            comp[c] = s;
            members.push_back(c);
          }
      std::sort(members.begin(), members.end());
      const int k = static_cast<int>(members.size());
      Eigen::MatrixXcd sub(k, k);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) sub(a, b) = m(members[a], members[b]);
      if (k == 1 && sub(0, 0) == 0.0) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub);
      out.push_back({std::move(members), es.eigenvectors(), es.eigenvalues()});
    }
    return out;
  }

  static long double wide_norm2(const Eigen::VectorXcd& x) {
    long double s = 0.0L;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const long double re = x[i].real(), im = x[i].imag();
      s += re * re + im * im;
    }
    return s;
  }

  // Interaction-picture block step: b_S <- P* exp(-i theta M) P b_S with
  // P = exp(-i E tau) on the block members.
  void apply_blocks(Eigen::VectorXcd& b, const std::vector<EigenBlock>& blocks, double theta, double tau) const {
    for (const auto& blk : blocks) {
      const int k = static_cast<int>(blk.idx.size());
      Eigen::VectorXcd p(k), x(k);
      for (int i = 0; i < k; ++i) {
        p[i] = std::polar(1.0, -energies_[blk.idx[i]] * tau);
        x[i] = p[i] * b[blk.idx[i]];
      }
      const long double before = wide_norm2(x);
      Eigen::VectorXcd y = blk.W.adjoint() * x;
      for (int i = 0; i < k; ++i) y[i] *= std::polar(1.0, -theta * blk.lambda[i]);
      x.noalias() = blk.W * y;
      // W is unitary only to rounding, a bias that repeats every step and adds
      // up over millions of steps. The block exponential keeps the block norm
      // exactly, so a rounding-sized deviation is removed in extended
      // precision; anything larger is left for the norm check.
      const long double after = wide_norm2(x);
      if (after > 0.0L && std::abs(after - before) < 1e-12L * before) {
        const long double f = std::sqrt(before / after);
        for (int i = 0; i < k; ++i)
          x[i] = cplx(static_cast<double>(f * x[i].real()), static_cast<double>(f * x[i].imag()));
      }
      for (int i = 0; i < k; ++i) b[blk.idx[i]] = std::conj(p[i]) * x[i];
    }
  }

  RoVibBasis basis_;
  std::vector<ControlHamiltonian> controls_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXd to_bare_;
  bool dressed_ = false;
  SharedPattern pattern_;
  std::vector<std::vector<cplx>> values_;  // per control, on pattern_
  std::vector<int> rows_;                  // row of each pattern entry
  std::vector<std::vector<EigenBlock>> blocks_;  // per control
};

/// Elongation <chi>/xi0 = sum_j Re[b0j b1j* e^{i omega t}] = Re sum_j c0j c1j*
/// with its envelope |sum_j c0j c1j*| and the bound sum_j |c0j||c1j|.
struct ElongationSeries {
  std::vector<double> times;
  std::vector<double> signal;
  std::vector<double> envelope;
  std::vector<double> bound;

  double max_abs_signal() const {
    double m = 0.0;
    for (double s : signal) m = std::max(m, std::abs(s));
    return m;
  }
  double max_envelope() const {
    double m = 0.0;
    for (double s : envelope) m = std::max(m, s);
    return m;
  }
};

inline cplx elongation_coherence(const Eigen::VectorXcd& c_bare) {
  const Eigen::Index half = c_bare.size() / 2;
  cplx z = 0.0;
  for (Eigen::Index j = 0; j < half; ++j) z += c_bare[j] * std::conj(c_bare[j + half]);
  return z;
}

inline ElongationSeries elongation(const Trajectory& tr) {
  ElongationSeries out;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const Eigen::VectorXcd c = tr.bare_state(i);
    const Eigen::Index half = c.size() / 2;
    double bound = 0.0;
    for (Eigen::Index j = 0; j < half; ++j) bound += std::abs(c[j]) * std::abs(c[j + half]);
    const cplx z = elongation_coherence(c);
    out.times.push_back(tr.times[i]);
    out.signal.push_back(z.real());
    out.envelope.push_back(std::abs(z));
    out.bound.push_back(bound);
  }
  return out;
}

/// Selects basis states by "nu:J_KaKc:M"; any field may be "*".
struct StateSelector {
  std::string text;
  int nu = -1;
  std::optional<LevelLabel> level;
  std::optional<int> M;

  static StateSelector parse(const std::string& s) {
    StateSelector sel;
    sel.text = s;
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
      if (ch == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    parts.push_back(cur);
    if (parts.size() != 3) throw std::invalid_argument("state selector must look like nu:J_KaKc:M, got '" + s + "'");
    if (parts[0] != "*") {
      if (parts[0] != "0" && parts[0] != "1") throw std::invalid_argument("selector nu must be 0, 1 or *: '" + s + "'");
      sel.nu = parts[0][0] - '0';
    }
    if (parts[1] != "*") sel.level = LevelLabel::parse(parts[1]);
    if (parts[2] != "*") {
      try {
        std::size_t used = 0;
        sel.M = std::stoi(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw std::invalid_argument("selector M must be an integer or *: '" + s + "'");
      }
    }
    return sel;
  }

  bool matches(const RoVibState& st) const {
    if (nu >= 0 && st.nu != nu) return false;
    if (level && (st.rot.J != level->J || st.rot.Ka != level->Ka || st.rot.Kc != level->Kc)) return false;
    if (M && st.rot.M != *M) return false;
    return true;
  }
};

enum class PopulationBasis { propagation, bare };

/// Population of the selected states at every sample. In the propagation
/// basis a dressed state carries the label of the bare state it connects to.
inline std::vector<double> populations(const Trajectory& tr, const RoVibBasis& basis, const StateSelector& sel,
                                       PopulationBasis which = PopulationBasis::propagation) {
  std::vector<int> idx;
  for (int i = 0; i < basis.size(); ++i)
    if (sel.matches(basis.states[i])) idx.push_back(i);
  std::vector<double> out;
  for (std::size_t s = 0; s < tr.size(); ++s) {
    const Eigen::VectorXcd c = which == PopulationBasis::bare ? tr.bare_state(s) : tr.states[s];
    double p = 0.0;
    for (int i : idx) p += std::norm(c[i]);
    out.push_back(p);
  }
  return out;
}

/// Observed convergence order from three runs at steps h, h/2, h/4:
/// |f(h) - f(h/2)| / |f(h/2) - f(h/4)|, about 4 for a second-order scheme.
inline double convergence_ratio(const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2, const Eigen::VectorXcd& f4) {
  const double d2 = (f2 - f4).norm();
  if (d2 == 0.0) return 0.0;
  return (f1 - f2).norm() / d2;
}

}  // namespace chiralwp
