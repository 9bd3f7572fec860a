#pragma once

// Symbolic selection rules for coherent nu = 0 / nu = 1 superpositions.
//
// A population amplitude b_{nu,j} can be nonzero only if some sequence of
// field interactions connects the initial state to |nu>|j>. A net rotationally
// averaged elongation needs a final state j reached both by a nu-preserving
// sequence and by a nu-changing one. Each step carries the D2 irrep of the
// molecule-fixed dipole component it uses and a Delta M fixed by its lab
// polarization. On top of that, a lab C2 rotation that leaves the initial state
// and every field axis invariant up to sign must leave the product of the two
// amplitudes invariant; this gives the parity rules in `lab_parity_ok`.

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chiralwp/angular.hpp"
#include "chiralwp/hamiltonian.hpp"
#include "chiralwp/rotor.hpp"

namespace chiralwp {

enum class FieldKind { mw, ir, static_field };

inline std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::mw: return "mw";
    case FieldKind::ir: return "ir";
    case FieldKind::static_field: return "static";
  }
  return "?";
}

inline FieldKind parse_field_kind(std::string_view s) {
  if (s == "mw") return FieldKind::mw;
  if (s == "ir") return FieldKind::ir;
  if (s == "static") return FieldKind::static_field;
  throw std::invalid_argument("unknown field kind '" + std::string(s) + "'");
}

struct FieldSpec {
  FieldKind kind = FieldKind::mw;
  Polarization polarization = Polarization::z;  // static fields are always z
};

enum class Component { a, b, c };

inline std::string_view to_string(Component c) {
  switch (c) {
    case Component::a: return "a";
    case Component::b: return "b";
    case Component::c: return "c";
  }
  return "?";
}

inline Irrep step_irrep(Component c) {
  switch (c) {
    case Component::a: return Irrep::Ba;
    case Component::b: return Irrep::Bb;
    case Component::c: return Irrep::Bc;
  }
  return Irrep::A;
}

struct InteractionStep {
  int field = 0;  // index into the field list
  FieldKind kind = FieldKind::mw;
  Polarization polarization = Polarization::z;
  Component component = Component::a;
  int delta_M = 0;

  Block block() const { return kind == FieldKind::ir ? Block::vibrational : Block::rotational; }
  Irrep irrep() const { return step_irrep(component); }
};

struct Pathway {
  std::vector<InteractionStep> steps;
  Irrep product = Irrep::A;
  int final_M = 0;
  int final_nu = 0;

  int order() const { return static_cast<int>(steps.size()); }
};

enum class Outcome { forbidden, achiral_allowed, chiral_allowed };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::forbidden: return "forbidden";
    case Outcome::achiral_allowed: return "achiral_allowed";
    case Outcome::chiral_allowed: return "chiral_allowed";
  }
  return "?";
}

struct FeasibilityVerdict {
  Outcome outcome = Outcome::forbidden;
  bool has_witness = false;
  Pathway preserving;  // order l, nu0 -> nu0
  Pathway changing;    // order l', nu0 -> 1 - nu0
  Irrep initial_irrep = Irrep::A;
  Irrep target_irrep = Irrep::A;  // irrep of the shared final rotational state
  int initial_M = 0;
};

struct InitialState {
  int nu = 0;
  Irrep irrep = Irrep::A;
  int M = 0;
};

namespace detail {

inline std::vector<Component> components_for(const FieldSpec& f, const DipoleSet& d) {
  std::vector<Component> out;
  if (f.kind == FieldKind::ir) {
    if (d.transition.a != 0.0) out.push_back(Component::a);
    if (d.transition.b != 0.0) out.push_back(Component::b);
    if (d.transition.c != 0.0) out.push_back(Component::c);
  } else {
    if (d.mu_a != 0.0) out.push_back(Component::a);
    if (d.mu_b != 0.0) out.push_back(Component::b);
  }
  return out;
}

inline std::vector<int> delta_m_for(Polarization p) {
  switch (p) {
    case Polarization::z: return {0};
    case Polarization::x:
    case Polarization::y: return {-1, +1};
    case Polarization::sigma_plus: return {+1};
    case Polarization::sigma_minus: return {-1};
  }
  return {};
}

struct AxisCounts {
  int x = 0, y = 0, z = 0, circular = 0;
};

inline AxisCounts count_axes(const Pathway& p) {
  AxisCounts c;
  for (const auto& s : p.steps) {
    switch (s.polarization) {
      case Polarization::x: ++c.x; break;
      case Polarization::y: ++c.y; break;
      case Polarization::z: ++c.z; break;
      default: ++c.circular; break;
    }
  }
  return c;
}

// Signature used to deduplicate pathways: (irrep, M, nu, parities of x/y/z, circular used).
using Signature = std::array<int, 7>;

inline Signature signature(const Pathway& p) {
  const auto c = count_axes(p);
  return {static_cast<int>(p.product), p.final_M, p.final_nu, c.x % 2, c.y % 2, c.z % 2,
          c.circular > 0 ? 1 : 0};
}

/// Shortest pathway for each signature, breadth first over step sequences.
inline std::map<Signature, Pathway> enumerate_pathways(const std::vector<FieldSpec>& fields,
                                                       const DipoleSet& dipoles,
                                                       const InitialState& init, int max_order) {
  std::map<Signature, Pathway> best;
  Pathway start;
  start.product = Irrep::A;
  start.final_M = init.M;
  start.final_nu = init.nu;
  best.emplace(signature(start), start);
  std::vector<Pathway> frontier{start};
  for (int order = 1; order <= max_order; ++order) {
    std::vector<Pathway> next;
    for (const auto& p : frontier) {
      for (int fi = 0; fi < static_cast<int>(fields.size()); ++fi) {
        const auto& f = fields[fi];
        const Polarization pol = f.kind == FieldKind::static_field ? Polarization::z : f.polarization;
        for (Component comp : components_for(f, dipoles)) {
          for (int dm : delta_m_for(pol)) {
            Pathway q = p;
            InteractionStep s{fi, f.kind, pol, comp, dm};
            q.steps.push_back(s);
            q.product = irrep_product(q.product, s.irrep());
            q.final_M += dm;
            if (f.kind == FieldKind::ir) q.final_nu = 1 - q.final_nu;
            // Every step sequence is kept in the frontier; memoization only
            // decides which representative is reported per signature.
            best.emplace(signature(q), q);
            next.push_back(std::move(q));
          }
        }
      }
    }
    frontier = std::move(next);
  }
  return best;
}

inline bool lab_parity_ok(const Pathway& l, const Pathway& lp, const InitialState& init) {
  const auto a = count_axes(l), b = count_axes(lp);
  const int nx = a.x + b.x, ny = a.y + b.y, nz = a.z + b.z, nc = a.circular + b.circular;
  // C2 about z: fields along x, y change sign, circular ones pick up -1 per step.
  if ((nx + ny + nc) % 2 != 0) return false;
  // C2 about x and y apply when the initial state has M = 0 and no circular field is used.
  if (init.M == 0 && nc == 0) {
    if ((ny + nz) % 2 != 0) return false;
    if ((nx + nz) % 2 != 0) return false;
  }
  return true;
}

}  // namespace detail

/// Searches ordered interaction sequences up to `max_order` (<= 4) for a
/// nu-preserving / nu-changing pair that ends in the same rotational irrep and M.
inline FeasibilityVerdict check_feasibility(const DipoleSet& dipoles,
                                            const std::vector<FieldSpec>& fields,
                                            const InitialState& init, int max_order = 4) {
  if (max_order > 4) throw std::invalid_argument("check_feasibility: search order above 4 is not supported");
  if (max_order < 0) throw std::invalid_argument("check_feasibility: negative search order");
  FeasibilityVerdict v;
  v.initial_irrep = init.irrep;
  v.initial_M = init.M;
  if (fields.empty()) return v;

  const auto all = detail::enumerate_pathways(fields, dipoles, init, max_order);
  std::vector<const Pathway*> keep, change;
  for (const auto& [sig, p] : all) (p.final_nu == init.nu ? keep : change).push_back(&p);

  const Pathway* bl = nullptr;
  const Pathway* blp = nullptr;
  for (const Pathway* l : keep) {
    for (const Pathway* lp : change) {
      if (l->product != lp->product || l->final_M != lp->final_M) continue;
      if (!detail::lab_parity_ok(*l, *lp, init)) continue;
      const int tot = l->order() + lp->order();
      if (!bl || tot < bl->order() + blp->order() ||
          (tot == bl->order() + blp->order() && l->order() < bl->order())) {
        bl = l;
        blp = lp;
      }
    }
  }
  if (!bl) return v;
  v.has_witness = true;
  v.preserving = *bl;
  v.changing = *blp;
  v.target_irrep = irrep_product(init.irrep, bl->product);
  v.outcome = dipoles.kind == ModeKind::out_of_plane ? Outcome::chiral_allowed : Outcome::achiral_allowed;
  return v;
}

/// Re-derives the witness bookkeeping: irrep products, Delta M sums and nu.
inline bool validate_witness(const FeasibilityVerdict& v, const InitialState& init) {
  if (!v.has_witness) return v.outcome == Outcome::forbidden;
  auto replay = [&](const Pathway& p, int expect_nu) {
    Irrep g = Irrep::A;
    int M = init.M, nu = init.nu;
    for (const auto& s : p.steps) {
      g = irrep_product(g, s.irrep());
      M += s.delta_M;
      if (s.kind == FieldKind::ir) nu = 1 - nu;
    }
    return g == p.product && M == p.final_M && nu == expect_nu;
  };
  return replay(v.preserving, init.nu) && replay(v.changing, 1 - init.nu) &&
         v.preserving.product == v.changing.product &&
         v.preserving.final_M == v.changing.final_M &&
         irrep_product(init.irrep, v.preserving.product) == v.target_irrep;
}

/// True iff the fields cover three mutually orthogonal lab axes.
inline bool orthogonality_check(const std::vector<FieldSpec>& fields) {
  bool x = false, y = false, z = false;
  for (const auto& f : fields) {
    if (f.kind == FieldKind::static_field) {
      z = true;
      continue;
    }
    switch (f.polarization) {
      case Polarization::x: x = true; break;
      case Polarization::y: y = true; break;
      case Polarization::z: z = true; break;
      default: x = y = true; break;
    }
  }
  return x && y && z;
}

inline std::string describe_step(const InteractionStep& s) {
  std::ostringstream os;
  os << to_string(s.kind) << '-' << to_string(s.polarization) << " component " << to_string(s.component)
     << " irrep " << to_string(s.irrep()) << " dM " << (s.delta_M > 0 ? "+" : "") << s.delta_M;
  return os.str();
}

/// Witness table: path, step, field, component, irrep, dM.
inline std::string format_verdict(const FeasibilityVerdict& v) {
  std::ostringstream os;
  os << "verdict: " << to_string(v.outcome) << '\n';
  if (!v.has_witness) return os.str();
  os << "initial irrep " << to_string(v.initial_irrep) << ", M " << v.initial_M << '\n';
  os << "shared final irrep " << to_string(v.target_irrep) << ", M " << v.preserving.final_M << '\n';
  os << "path,step,field,polarization,component,irrep,dM\n";
  auto rows = [&](const char* name, const Pathway& p) {
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
      const auto& s = p.steps[i];
      os << name << ',' << i + 1 << ',' << to_string(s.kind) << ',' << to_string(s.polarization) << ','
         << to_string(s.component) << ',' << to_string(s.irrep()) << ',' << s.delta_M << '\n';
    }
  };
  rows("l", v.preserving);
  rows("l'", v.changing);
  os << "orders: l=" << v.preserving.order() << " l'=" << v.changing.order() << '\n';
  return os.str();
}

}  // namespace chiralwp
