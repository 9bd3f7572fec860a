#pragma once

// Spectral graph of ro-vibrational eigenstates and control-tagged transitions,
// with graphical commutator closure for the connectivity controllability test.
//
// Operators in the closure are sets of edges. Each control contributes one
// operator per energy-gap class of its edges. The commutator of two operators
// joins the outer nodes of every pair of edges sharing exactly one node; the
// result is split again by gap. A single-edge operator is a decoupled
// transition. The system is reported controllable when decoupled edges of the
// original graph connect every node.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chiralwp/hamiltonian.hpp"

namespace chiralwp {

inline constexpr double kGapTolerance = 1e-9;
inline constexpr double kAmplitudeTolerance = 1e-12;

struct TransitionEdge {
  int m = 0;  // m < k
  int k = 0;
  int control = 0;
  double gap = 0.0;
  int order = 0;
  cplx amplitude{0.0, 0.0};  // <k|X|m>; epsilon times the first-order coefficient if order = 1
};

struct SpectralGraph {
  int nodes = 0;
  Eigen::VectorXd energies;
  std::vector<std::string> node_labels;
  std::vector<std::string> control_names;
  std::vector<TransitionEdge> edges;
};

inline SpectralGraph build_graph(const RoVibBasis& basis, const std::vector<ControlHamiltonian>& controls,
                                 double amplitude_tolerance = kAmplitudeTolerance,
                                 const std::optional<DressingSpec>& dressing = std::nullopt) {
  if (controls.empty()) throw std::invalid_argument("build_graph: no controls");
  SpectralGraph g;
  g.nodes = basis.size();
  g.energies = basis.energies;
  for (int i = 0; i < basis.size(); ++i) g.node_labels.push_back(basis.describe(i));
  for (int c = 0; c < static_cast<int>(controls.size()); ++c) {
    const auto& ctl = controls[c];
    g.control_names.push_back(ctl.name);
    Eigen::MatrixXcd first;
    if (dressing && dressing->epsilon != 0.0) first = first_order_matrix(basis, dressing->H_stat, ctl.dipole);
    for (int k = 0; k < g.nodes; ++k) {
      for (int m = 0; m < k; ++m) {
        // Use whichever triangle carries the element (circular controls are
        // Hermitian sums, so both do).
        const cplx z0 = std::abs(ctl.dipole(k, m)) >= std::abs(ctl.dipole(m, k)) ? ctl.dipole(k, m)
                                                                                 : ctl.dipole(m, k);
        const double gap = std::abs(g.energies[k] - g.energies[m]);
        if (std::abs(z0) > amplitude_tolerance) {
          g.edges.push_back({m, k, c, gap, 0, z0});
        } else if (first.size() != 0) {
          const cplx z1 = std::abs(first(k, m)) >= std::abs(first(m, k)) ? first(k, m) : first(m, k);
          if (std::abs(z1) > amplitude_tolerance)
            g.edges.push_back({m, k, c, gap, 1, dressing->epsilon * z1});
        }
      }
    }
  }
  return g;
}

/// Edges are unordered node pairs.
using EdgeKey = std::pair<int, int>;

inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// (m,k) from (n,m) and (n,k): the edges must share exactly one node.
inline std::optional<EdgeKey> graphical_commutator(const EdgeKey& e1, const EdgeKey& e2) {
  int shared = -1, o1 = -1, o2 = -1;
  if (e1.first == e2.first) {
    shared = e1.first;
    o1 = e1.second;
    o2 = e2.second;
  } else if (e1.first == e2.second) {
    shared = e1.first;
    o1 = e1.second;
    o2 = e2.first;
  } else if (e1.second == e2.first) {
    shared = e1.second;
    o1 = e1.first;
    o2 = e2.second;
  } else if (e1.second == e2.second) {
    shared = e1.second;
    o1 = e1.first;
    o2 = e2.first;
  }
  if (shared < 0 || o1 == o2 || o1 == shared || o2 == shared) return std::nullopt;
  return edge_key(o1, o2);
}

/// Groups of edges of one control with equal gaps (within kGapTolerance).
/// Returns index lists into g.edges, ordered by control then gap.
inline std::vector<std::vector<int>> gap_classes(const SpectralGraph& g) {
  std::vector<int> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (g.edges[a].control != g.edges[b].control) return g.edges[a].control < g.edges[b].control;
    return g.edges[a].gap < g.edges[b].gap;
  });
  std::vector<std::vector<int>> out;
  for (int idx : order) {
    const auto& e = g.edges[idx];
    if (!out.empty()) {
      const auto& head = g.edges[out.back().front()];
      if (head.control == e.control && std::abs(head.gap - e.gap) < kGapTolerance) {
        out.back().push_back(idx);
        continue;
      }
    }
    out.push_back({idx});
  }
  return out;
}

/// Pairs of edges coupled by a shared control and equal gap.
inline std::vector<std::pair<int, int>> find_coupled_pairs(const SpectralGraph& g) {
  std::vector<std::pair<int, int>> out;
  for (const auto& cls : gap_classes(g))
    for (std::size_t i = 0; i < cls.size(); ++i)
      for (std::size_t j = i + 1; j < cls.size(); ++j) out.emplace_back(cls[i], cls[j]);
  return out;
}

/// One operator of the closure.
struct ClosureOperator {
  std::vector<EdgeKey> edges;  // sorted
  double gap = 0.0;
  int control = -1;  // >= 0: a gap class of this control
  int left = -1;     // otherwise the commutator [left, right] filtered at `gap`
  int right = -1;

  bool decoupled() const { return edges.size() == 1; }
};

enum class EdgeStatus { coupled, uncoupled, decoupled };

inline std::string_view to_string(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::coupled: return "coupled";
    case EdgeStatus::uncoupled: return "uncoupled";
    case EdgeStatus::decoupled: return "decoupled";
  }
  return "?";
}

/// Element of the amplitude-weighted closure: a Hermitian operator supported
/// on the node pairs of one frequency class, orthonormalized against the
/// earlier elements of that class.
struct WeightedOperator {
  int cls = -1;
  double gap = 0.0;
  std::vector<std::pair<EdgeKey, cplx>> entries;  // upper triangle incl. diagonal
  int control = -1;         // >= 0: component of this control
  int left = -1;            // commutator i[left, right], or the source of a quadrature
  int right = -1;
  bool quadrature = false;  // i[H0, left] / gap
};

struct ControllabilityCertificate {
  bool controllable = false;
  std::string reason;
  std::vector<ClosureOperator> operators;       // derivation log in creation order
  std::vector<WeightedOperator> weighted;       // second stage, empty if not needed
  std::vector<EdgeKey> spanning;                // spanning tree of decoupled graph edges
  std::map<EdgeKey, int> witness;               // decoupled edge -> operator that isolates it
  std::map<EdgeKey, int> weighted_witness;      // decoupled edge -> last weighted operator needed
  std::vector<EdgeStatus> edge_status;          // parallel to graph edges
  int components = 0;                           // of the decoupled subgraph
  bool truncated = false;                       // closure stopped at an operator cap
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

/// Commutator of two edge sets split into gap classes (ascending gap).
inline std::vector<std::pair<double, std::vector<EdgeKey>>> commutator_classes(
    const std::vector<EdgeKey>& A, const std::vector<EdgeKey>& B, const Eigen::VectorXd& energies) {
  std::set<EdgeKey> res;
  for (const auto& e1 : A)
    for (const auto& e2 : B)
      if (auto r = graphical_commutator(e1, e2)) res.insert(*r);
  std::vector<std::pair<double, EdgeKey>> tagged;
  for (const auto& e : res) tagged.push_back({std::abs(energies[e.first] - energies[e.second]), e});
  std::stable_sort(tagged.begin(), tagged.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<std::pair<double, std::vector<EdgeKey>>> out;
  for (const auto& [gap, e] : tagged) {
    if (!out.empty() && std::abs(out.back().first - gap) < kGapTolerance)
      out.back().second.push_back(e);
    else
      out.push_back({gap, {e}});
  }
  for (auto& o : out) std::sort(o.second.begin(), o.second.end());
  return out;
}

inline std::vector<EdgeKey> class_edges(const SpectralGraph& g, const std::vector<int>& cls) {
  std::set<EdgeKey> s;
  for (int i : cls) s.insert(edge_key(g.edges[i].m, g.edges[i].k));
  return {s.begin(), s.end()};
}

}  // namespace detail

namespace detail {

/// Frequency classes of node pairs: every unordered pair (m <= k) belongs to
/// the class of |E_m - E_k|; class 0 holds the zero gap (diagonal and
/// degenerate pairs).
struct FrequencyClasses {
  std::vector<double> gaps;
  std::vector<std::vector<EdgeKey>> pairs;   // per class
  std::vector<int> class_of;                 // n*n, symmetric
  std::vector<int> slot;                     // n*n, index of the pair inside its class
  int n = 0;

  explicit FrequencyClasses(const Eigen::VectorXd& E) : n(static_cast<int>(E.size())) {
    std::vector<std::pair<double, EdgeKey>> all;
    for (int m = 0; m < n; ++m)
      for (int k = m; k < n; ++k) all.push_back({std::abs(E[m] - E[k]), {m, k}});
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    class_of.assign(n * n, -1);
    slot.assign(n * n, -1);
    for (const auto& [gap, e] : all) {
      if (gaps.empty() || gap - gaps.back() >= kGapTolerance) {
        gaps.push_back(gaps.empty() && gap < kGapTolerance ? 0.0 : gap);
        pairs.emplace_back();
      }
      const int c = static_cast<int>(gaps.size()) - 1;
      slot[e.first * n + e.second] = slot[e.second * n + e.first] = static_cast<int>(pairs[c].size());
      class_of[e.first * n + e.second] = class_of[e.second * n + e.first] = c;
      pairs[c].push_back(e);
    }
  }
};

/// Incremental real span of Hermitian operators per frequency class.
class WeightedClosure {
 public:
  WeightedClosure(const SpectralGraph& g, ControllabilityCertificate& cert)
      : g_(g), cert_(cert), fc_(g.energies), basis_(fc_.gaps.size()) {
    for (const auto& e : g.edges) {
      const auto key = edge_key(e.m, e.k);
      if (!cert.witness.count(key) && !proj_.count(key)) proj_[key] = 0.0;
    }
  }

  /// Adds the class components of a dense Hermitian matrix.
  void add_matrix(const Eigen::MatrixXcd& H, int control, int left, int right) {
    std::map<int, std::vector<std::pair<EdgeKey, cplx>>> parts;
    for (int m = 0; m < fc_.n; ++m)
      for (int k = m; k < fc_.n; ++k)
        if (std::abs(H(m, k)) > 1e-13) parts[fc_.class_of[m * fc_.n + k]].push_back({{m, k}, H(m, k)});
    for (auto& [c, entries] : parts) add_component(c, entries, control, left, right, false);
  }

  Eigen::MatrixXcd dense(int id) const {
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(fc_.n, fc_.n);
    for (const auto& [e, v] : cert_.weighted[id].entries) {
      H(e.first, e.second) = v;
      H(e.second, e.first) = std::conj(v);
    }
    return H;
  }

  /// i[A, B] for two stored operators.
  Eigen::MatrixXcd commutator(int a, int b) const {
    const Eigen::MatrixXcd A = dense(a), B = dense(b);
    return cplx(0.0, 1.0) * (A * B - B * A);
  }

  bool run(std::size_t max_operators, const std::function<bool()>& done) {
    for (std::size_t i = 0; i < cert_.weighted.size(); ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        if (done()) return true;
        add_matrix(commutator(static_cast<int>(i), static_cast<int>(j)), -1, static_cast<int>(i),
                   static_cast<int>(j));
        if (cert_.weighted.size() >= max_operators) return done();
      }
    }
    return done();
  }

  const FrequencyClasses& classes() const { return fc_; }

  /// Real coordinates (Re, Im per pair) of an entry list in its class.
  Eigen::VectorXd coords(int c, const std::vector<std::pair<EdgeKey, cplx>>& entries) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(fc_.pairs[c].size()));
    for (const auto& [e, z] : entries) {
      const int s = fc_.slot[e.first * fc_.n + e.second];
      v[2 * s] = z.real();
      v[2 * s + 1] = e.first == e.second ? 0.0 : z.imag();
    }
    return v;
  }

  /// Orthogonal remainder of v against the current basis of class c.
  Eigen::VectorXd remainder(int c, Eigen::VectorXd v) const {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis_[c]) v -= b.dot(v) * b;
    return v;
  }

  void add_component(int c, const std::vector<std::pair<EdgeKey, cplx>>& entries, int control, int left,
                     int right, bool quadrature) {
    const Eigen::VectorXd v = coords(c, entries);
    const double norm = v.norm();
    if (norm < 1e-12) return;
    Eigen::VectorXd r = remainder(c, v);
    if (r.norm() < 1e-9 * norm) return;
    r.normalize();
    basis_[c].push_back(r);

    WeightedOperator op;
    op.cls = c;
    op.gap = fc_.gaps[c];
    op.control = control;
    op.left = left;
    op.right = right;
    op.quadrature = quadrature;
    for (std::size_t s = 0; s < fc_.pairs[c].size(); ++s) {
      const cplx z(r[2 * s], r[2 * s + 1]);
      if (std::abs(z) > 0.0) op.entries.push_back({fc_.pairs[c][s], z});
    }
    const int id = static_cast<int>(cert_.weighted.size());
    cert_.weighted.push_back(op);

    for (auto& [key, p] : proj_) {
      if (cert_.weighted_witness.count(key) || fc_.class_of[key.first * fc_.n + key.second] != c) continue;
      const int s = fc_.slot[key.first * fc_.n + key.second];
      p += r[2 * s] * r[2 * s];
      if (p > 1.0 - 1e-8) cert_.weighted_witness.emplace(key, id);
    }

    // The drift turns a nonzero-frequency component into its quadrature.
    if (c != 0 && !quadrature) {
      std::vector<std::pair<EdgeKey, cplx>> q;
      for (const auto& [e, z] : cert_.weighted[id].entries) {
        const double sign = g_.energies[e.first] > g_.energies[e.second] ? 1.0 : -1.0;
        q.push_back({e, cplx(0.0, sign) * z});
      }
      add_component(c, q, -1, id, -1, true);
    }
  }

 private:
  const SpectralGraph& g_;
  ControllabilityCertificate& cert_;
  FrequencyClasses fc_;
  std::vector<std::vector<Eigen::VectorXd>> basis_;
  std::map<EdgeKey, double> proj_;
};

inline Eigen::MatrixXcd control_matrix(const SpectralGraph& g, int control) {
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(g.nodes, g.nodes);
  for (const auto& e : g.edges) {
    if (e.control != control) continue;
    H(e.k, e.m) = e.amplitude;
    H(e.m, e.k) = std::conj(e.amplitude);
  }
  return H;
}

inline int count_components(int n, const std::vector<const std::map<EdgeKey, int>*>& maps) {
  UnionFind uf(n);
  int comps = n;
  for (const auto* m : maps)
    for (const auto& [e, id] : *m)
      if (uf.unite(e.first, e.second)) --comps;
  return comps;
}

}  // namespace detail

/// Two-stage closure. The first stage works on edge sets only (graphical
/// commutators split by gap). Transitions related by a symmetry of the
/// labeled graph, such as M -> -M partners, cannot be told apart there; if
/// the first stage does not connect all nodes, a second stage repeats the
/// closure on the amplitude-weighted operators and tracks, per frequency
/// class, the span they generate. An edge is decoupled once its transition
/// operator lies in that span.
inline ControllabilityCertificate decide_controllability(const SpectralGraph& g,
                                                         std::size_t max_operators = 20000,
                                                         std::size_t max_weighted = 4000) {
  ControllabilityCertificate cert;
  std::set<EdgeKey> graph_edges;
  for (const auto& e : g.edges) graph_edges.insert(edge_key(e.m, e.k));

  std::map<std::vector<EdgeKey>, int> seen;
  auto add = [&](ClosureOperator op) {
    if (seen.count(op.edges)) return;
    seen.emplace(op.edges, static_cast<int>(cert.operators.size()));
    if (op.decoupled() && graph_edges.count(op.edges.front()) && !cert.witness.count(op.edges.front()))
      cert.witness.emplace(op.edges.front(), static_cast<int>(cert.operators.size()));
    cert.operators.push_back(std::move(op));
  };

  for (const auto& cls : gap_classes(g)) {
    ClosureOperator op;
    op.edges = detail::class_edges(g, cls);
    op.gap = g.edges[cls.front()].gap;
    op.control = g.edges[cls.front()].control;
    add(std::move(op));
  }

  auto components = [&]() { return detail::count_components(g.nodes, {&cert.witness, &cert.weighted_witness}); };
  int graph_components = 0;
  {
    detail::UnionFind all(g.nodes);
    graph_components = g.nodes;
    for (const auto& e : graph_edges)
      if (all.unite(e.first, e.second)) --graph_components;
  }

  cert.components = components();
  // Operator i is paired with every j <= i once, as soon as i is processed.
  for (std::size_t i = 0; i < cert.operators.size() && cert.components > 1; ++i) {
    for (std::size_t j = 0; j <= i && cert.components > 1; ++j) {
      const auto classes =
          detail::commutator_classes(cert.operators[i].edges, cert.operators[j].edges, g.energies);
      for (const auto& [gap, edges] : classes) {
        ClosureOperator op;
        op.edges = edges;
        op.gap = gap;
        op.left = static_cast<int>(i);
        op.right = static_cast<int>(j);
        const bool was_new_witness = edges.size() == 1 && graph_edges.count(edges.front()) &&
                                     !cert.witness.count(edges.front());
        add(std::move(op));
        if (was_new_witness) cert.components = components();
      }
      if (cert.operators.size() >= max_operators) {
        cert.truncated = true;
        break;
      }
    }
    if (cert.truncated) break;
  }

  // The weighted stage cannot connect a disconnected graph, so skip it then.
  if (cert.components > 1 && graph_components == 1) {
    detail::WeightedClosure wc(g, cert);
    for (int c = 0; c < static_cast<int>(g.control_names.size()); ++c)
      wc.add_matrix(detail::control_matrix(g, c), c, -1, -1);
    const bool ok = wc.run(max_weighted, [&] {
      cert.components = components();
      return cert.components == 1;
    });
    if (!ok && cert.weighted.size() >= max_weighted) cert.truncated = true;
    cert.components = components();
  }

  // Spanning tree over decoupled graph edges, first-stage witnesses first.
  detail::UnionFind uf(g.nodes);
  for (const auto& [e, id] : cert.witness)
    if (uf.unite(e.first, e.second)) cert.spanning.push_back(e);
  for (const auto& [e, id] : cert.weighted_witness)
    if (uf.unite(e.first, e.second)) cert.spanning.push_back(e);

  cert.edge_status.resize(g.edges.size(), EdgeStatus::coupled);
  for (std::size_t idx = 0; idx < g.edges.size(); ++idx) {
    const auto key = edge_key(g.edges[idx].m, g.edges[idx].k);
    if (auto it = cert.witness.find(key); it != cert.witness.end())
      cert.edge_status[idx] =
          cert.operators[it->second].control >= 0 ? EdgeStatus::uncoupled : EdgeStatus::decoupled;
    else if (cert.weighted_witness.count(key))
      cert.edge_status[idx] = EdgeStatus::decoupled;
  }

  cert.controllable = cert.components == 1;
  if (cert.controllable) {
    cert.reason = "decoupled transitions connect all " + std::to_string(g.nodes) + " nodes";
  } else {
    std::ostringstream os;
    os << "decoupled transitions leave " << cert.components << " components";
    if (graph_components > 1) os << " (the graph itself is disconnected: " << graph_components << " components)";
    if (cert.truncated) os << "; closure stopped at its operator cap";
    cert.reason = os.str();
  }
  return cert;
}

/// Replays every operator of the certificate against the graph and checks the
/// spanning set. Returns an empty string on success, else the first problem.
inline std::string validate_certificate(const SpectralGraph& g, const ControllabilityCertificate& cert) {
  const auto classes = gap_classes(g);
  for (std::size_t i = 0; i < cert.operators.size(); ++i) {
    const auto& op = cert.operators[i];
    if (op.control >= 0) {
      bool found = false;
      for (const auto& cls : classes) {
        if (g.edges[cls.front()].control != op.control) continue;
        if (std::abs(g.edges[cls.front()].gap - op.gap) >= kGapTolerance) continue;
        found = detail::class_edges(g, cls) == op.edges;
        break;
      }
      if (!found) return "operator " + std::to_string(i) + " is not a gap class of its control";
    } else {
      if (op.left < 0 || op.right < 0 || op.left >= static_cast<int>(i) ||
          op.right >= static_cast<int>(i))
        return "operator " + std::to_string(i) + " refers to a later operator";
      const auto res = detail::commutator_classes(cert.operators[op.left].edges,
                                                  cert.operators[op.right].edges, g.energies);
      bool found = false;
      for (const auto& [gap, edges] : res)
        if (std::abs(gap - op.gap) < kGapTolerance && edges == op.edges) found = true;
      if (!found) return "operator " + std::to_string(i) + " does not replay";
    }
  }

  // Weighted stage: rebuild each element from its recorded source and compare.
  if (!cert.weighted.empty()) {
    ControllabilityCertificate replay;
    detail::WeightedClosure wc(g, replay);
    const auto& fc = wc.classes();
    for (std::size_t i = 0; i < cert.weighted.size(); ++i) {
      const auto& op = cert.weighted[i];
      Eigen::MatrixXcd src;
      if (op.control >= 0) {
        src = detail::control_matrix(g, op.control);
      } else if (op.quadrature) {
        if (op.left < 0 || op.left >= static_cast<int>(i)) return "weighted quadrature refers to a later operator";
        src = Eigen::MatrixXcd::Zero(g.nodes, g.nodes);
        for (const auto& [e, z] : replay.weighted.at(op.left).entries) {
          const double sign = g.energies[e.first] > g.energies[e.second] ? 1.0 : -1.0;
          src(e.first, e.second) = cplx(0.0, sign) * z;
          src(e.second, e.first) = std::conj(src(e.first, e.second));
        }
      } else {
        if (op.left < 0 || op.right < 0 || op.left >= static_cast<int>(i) || op.right >= static_cast<int>(i))
          return "weighted operator " + std::to_string(i) + " refers to a later operator";
        src = wc.commutator(op.left, op.right);
      }
      std::vector<std::pair<EdgeKey, cplx>> entries;
      for (const auto& e : fc.pairs.at(op.cls))
        if (std::abs(src(e.first, e.second)) > 1e-13) entries.push_back({e, src(e.first, e.second)});
      const std::size_t before = replay.weighted.size();
      wc.add_component(op.cls, entries, op.control, op.left, op.right, op.quadrature);
      if (replay.weighted.size() <= i) return "weighted operator " + std::to_string(i) + " adds nothing on replay";
      // add_component may append the quadrature as well; compare element i only.
      const auto& got = replay.weighted[i];
      if (got.entries.size() != op.entries.size()) return "weighted operator " + std::to_string(i) + " does not replay";
      for (std::size_t k = 0; k < got.entries.size(); ++k)
        if (got.entries[k].first != op.entries[k].first ||
            std::abs(got.entries[k].second - op.entries[k].second) > 1e-8)
          return "weighted operator " + std::to_string(i) + " does not replay";
      // Drop an automatically appended quadrature; the recorded log carries it explicitly.
      if (replay.weighted.size() > before + 1) {
        if (i + 1 >= cert.weighted.size()) {
          replay.weighted.resize(before + 1);
        } else {
          const auto& next = cert.weighted[i + 1];
          if (!next.quadrature || next.left != static_cast<int>(i))
            return "weighted log is missing a quadrature";
          const auto& q = replay.weighted[before + 1];
          for (std::size_t k = 0; k < q.entries.size() && k < next.entries.size(); ++k)
            if (std::abs(q.entries[k].second - next.entries[k].second) > 1e-8)
              return "weighted quadrature " + std::to_string(i + 1) + " does not replay";
          ++i;
        }
      }
    }
    for (const auto& [e, id] : cert.weighted_witness) {
      auto it = replay.weighted_witness.find(e);
      if (it == replay.weighted_witness.end() || it->second > id)
        return "weighted witness does not replay";
    }
  }

  std::set<EdgeKey> graph_edges;
  for (const auto& e : g.edges) graph_edges.insert(edge_key(e.m, e.k));
  for (const auto& [e, id] : cert.witness) {
    if (!graph_edges.count(e)) return "witness edge is not a graph edge";
    if (id < 0 || id >= static_cast<int>(cert.operators.size()) || !cert.operators[id].decoupled() ||
        cert.operators[id].edges.front() != e)
      return "witness operator does not isolate its edge";
  }
  for (const auto& [e, id] : cert.weighted_witness)
    if (!graph_edges.count(e)) return "weighted witness edge is not a graph edge";
  detail::UnionFind uf(g.nodes);
  int comps = g.nodes;
  for (const auto& e : cert.spanning) {
    if (!cert.witness.count(e) && !cert.weighted_witness.count(e)) return "spanning edge without a witness";
    if (uf.unite(e.first, e.second)) --comps;
  }
  if (cert.controllable && comps != 1) return "spanning set does not connect all nodes";
  return {};
}

/// Derivation of an operator as nested commutators, e.g.
/// "[ir_z@607.1, mw_x@2.9]@604.2". Control gap classes print as name@gap.
inline std::string derivation(const SpectralGraph& g, const ControllabilityCertificate& cert, int id) {
  const auto& op = cert.operators.at(id);
  std::ostringstream os;
  os.precision(6);
  if (op.control >= 0) {
    os << g.control_names.at(op.control) << '@' << op.gap;
    return os.str();
  }
  os << '[' << derivation(g, cert, op.left) << ", " << derivation(g, cert, op.right) << "]@" << op.gap;
  return os.str();
}

/// Node mapping that exchanges the roles of the two vibrational halves:
/// node 0 -> half, node n >= half -> n - half (0-based), others unchanged.
inline std::vector<EdgeKey> mirror_edges(const std::vector<EdgeKey>& edges, int half) {
  auto map = [half](int n) { return n == 0 ? half : (n >= half ? n - half : n); };
  std::vector<EdgeKey> out;
  for (const auto& e : edges) out.push_back(edge_key(map(e.first), map(e.second)));
  std::sort(out.begin(), out.end());
  return out;
}

/// Edge CSV: node_from, node_to (1-based), control, gap, order, status.
inline void write_edges_csv(std::ostream& os, const SpectralGraph& g, const ControllabilityCertificate& cert) {
  os << "node_from,node_to,control,gap,order,status\n";
  os.precision(12);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    os << e.m + 1 << ',' << e.k + 1 << ',' << g.control_names[e.control] << ',' << e.gap << ','
       << e.order << ',' << to_string(cert.edge_status.at(i)) << '\n';
  }
}

inline std::string format_certificate(const SpectralGraph& g, const ControllabilityCertificate& cert) {
  std::ostringstream os;
  os << "verdict: " << (cert.controllable ? "controllable" : "not_proven") << '\n';
  os << "reason: " << cert.reason << '\n';
  os << "nodes: " << g.nodes << ", edges: " << g.edges.size()
     << ", closure operators: " << cert.operators.size() << '\n';
  os << "spanning decoupled transitions:\n";
  if (!cert.weighted.empty())
    os << "weighted closure operators: " << cert.weighted.size() << '\n';
  for (const auto& e : cert.spanning) {
    os << "  " << e.first + 1 << " <-> " << e.second + 1 << "  " << g.node_labels[e.first] << " - "
       << g.node_labels[e.second] << "  via ";
    if (auto it = cert.witness.find(e); it != cert.witness.end())
      os << derivation(g, cert, it->second) << '\n';
    else
      os << "weighted span at gap " << cert.weighted.at(cert.weighted_witness.at(e)).gap << " (after "
         << cert.weighted_witness.at(e) + 1 << " weighted operators)\n";
  }
  return os.str();
}

}  // namespace chiralwp
