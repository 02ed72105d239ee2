#pragma once

#include <cmath>
#include <complex>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qdark/fock.hpp"

namespace qdark {

using Cplx = std::complex<double>;

inline constexpr double kCoeffDropTol = 1e-15;

enum class Ladder { Create, Annihilate };

struct OpFactor {
  int mode = 0;
  Ladder kind = Ladder::Create;
  bool operator==(const OpFactor&) const = default;
};

/// coeff * ordered product of creation/annihilation factors. Factors are
/// applied right to left, as written.
struct Monomial {
  Cplx coeff{0.0, 0.0};
  std::vector<OpFactor> factors;
};

/// A sum of monomials over a fixed mode set.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(ModeSetPtr ms) : ms_(std::move(ms)) {}

  const ModeSetPtr& mode_set() const { return ms_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  Polynomial& add_term(Cplx coeff, std::vector<OpFactor> factors) {
    if (std::abs(coeff) > 0.0) terms_.push_back({coeff, std::move(factors)});
    return *this;
  }

  Polynomial& operator+=(const Polynomial& o) {
    require_compatible(o);
    if (!ms_) ms_ = o.ms_;
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }

  Polynomial& operator*=(Cplx z) {
    for (auto& t : terms_) t.coeff *= z;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }

  friend Polynomial operator-(Polynomial a, const Polynomial& b) {
    Polynomial nb = b;
    nb *= Cplx(-1.0, 0.0);
    return a += nb;
  }

  friend Polynomial operator*(Cplx z, Polynomial p) { return p *= z; }

  /// Raw operator product: concatenated factor strings, no reordering.
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.require_compatible(b);
    Polynomial out(a.ms_ ? a.ms_ : b.ms_);
    for (const auto& ta : a.terms_) {
      for (const auto& tb : b.terms_) {
        Monomial m;
        m.coeff = ta.coeff * tb.coeff;
        m.factors = ta.factors;
        m.factors.insert(m.factors.end(), tb.factors.begin(), tb.factors.end());
        out.terms_.push_back(std::move(m));
      }
    }
    return out;
  }

  /// Hermitian adjoint: reversed factors, flipped ladders, conjugated coeffs.
  Polynomial adjoint() const {
    Polynomial out(ms_);
    for (const auto& t : terms_) {
      Monomial m;
      m.coeff = std::conj(t.coeff);
      m.factors.assign(t.factors.rbegin(), t.factors.rend());
      for (auto& f : m.factors)
        f.kind = f.kind == Ladder::Create ? Ladder::Annihilate : Ladder::Create;
      out.terms_.push_back(std::move(m));
    }
    return out;
  }

  void require_compatible(const Polynomial& o) const {
    if (ms_ && o.ms_ && !ms_->compatible(*o.ms_))
      throw SectorMismatchError("polynomials built over different mode sets");
  }

  std::vector<Monomial>& mutable_terms() { return terms_; }

 private:
  ModeSetPtr ms_;
  std::vector<Monomial> terms_;
};

namespace detail {

inline int factor_rank(const OpFactor& f) {
  // Creations first, each group sorted by mode ascending.
  return (f.kind == Ladder::Annihilate ? 1 << 20 : 0) + f.mode;
}

inline void combine_like_terms(Polynomial& p) {
  std::map<std::vector<std::pair<int, int>>, Cplx> acc;
  for (const auto& t : p.mutable_terms()) {
    std::vector<std::pair<int, int>> key;
    key.reserve(t.factors.size());
    for (const auto& f : t.factors)
      key.emplace_back(static_cast<int>(f.kind), f.mode);
    acc[key] += t.coeff;
  }
  std::vector<Monomial> out;
  for (const auto& [key, coeff] : acc) {
    if (std::abs(coeff) < kCoeffDropTol) continue;
    Monomial m;
    m.coeff = coeff;
    for (const auto& [kind, mode] : key)
      m.factors.push_back({mode, static_cast<Ladder>(kind)});
    out.push_back(std::move(m));
  }
  p.mutable_terms() = std::move(out);
}

}  // namespace detail

/// Rewrites every monomial into canonical normal order: all creations to the
/// left of all annihilations, modes ascending within each group. Same-mode
/// (annihilate, create) pairs contract via the canonical (anti)commutator, so
/// the result is operator-identical to the input. Idempotent; like terms are
/// combined and coefficients below 1e-15 dropped.
inline Polynomial normal_order(const Polynomial& p) {
  const ModeSetPtr& ms = p.mode_set();
  if (!ms) return p;
  Polynomial out(ms);
  std::deque<Monomial> work(p.terms().begin(), p.terms().end());

  while (!work.empty()) {
    Monomial m = std::move(work.front());
    work.pop_front();
    if (std::abs(m.coeff) < kCoeffDropTol) continue;

    bool rewritten = false;
    bool killed = false;
    bool swapped = true;
    while (swapped && !rewritten && !killed) {
      swapped = false;
      for (std::size_t i = 0; i + 1 < m.factors.size(); ++i) {
        OpFactor& a = m.factors[i];
        OpFactor& b = m.factors[i + 1];
        if (a == b && ms->is_fermionic(a.mode)) {
          killed = true;  // (b^dag)^2 = b^2 = 0
          break;
        }
        if (detail::factor_rank(a) <= detail::factor_rank(b)) continue;
        if (a.mode != b.mode || a.kind == b.kind) {
          const bool both_fermi =
              ms->is_fermionic(a.mode) && ms->is_fermionic(b.mode);
          std::swap(a, b);
          if (both_fermi) m.coeff = -m.coeff;
          swapped = true;
          continue;
        }
        // a annihilates, b creates, same mode:
        //   bose:  a b^dag = b^dag a + 1
        //   fermi: a b^dag = 1 - b^dag a
        Monomial contracted;
        contracted.coeff = m.coeff;
        contracted.factors.assign(m.factors.begin(), m.factors.begin() + i);
        contracted.factors.insert(contracted.factors.end(),
                                  m.factors.begin() + i + 2, m.factors.end());
        Monomial exchanged = m;
        std::swap(exchanged.factors[i], exchanged.factors[i + 1]);
        if (ms->is_fermionic(a.mode)) exchanged.coeff = -exchanged.coeff;
        work.push_back(std::move(contracted));
        work.push_back(std::move(exchanged));
        rewritten = true;
        break;
      }
    }
    if (!rewritten && !killed) out.mutable_terms().push_back(std::move(m));
  }
  detail::combine_like_terms(out);
  return out;
}

/// True when the two polynomials are the same operator (compared in normal
/// order, coefficientwise within tol).
inline bool same_operator(const Polynomial& a, const Polynomial& b,
                          double tol = 1e-12) {
  Polynomial diff = normal_order(a - b);
  for (const auto& t : diff.terms())
    if (std::abs(t.coeff) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Application to states
// ---------------------------------------------------------------------------

/// Sparse amplitude dictionary; the workhorse for constructions that wander
/// across sectors before being projected onto an enumerated basis.
using MapState = std::unordered_map<FockState, Cplx, FockStateHash>;

namespace detail {

/// (-1)^(number of fermions in modes strictly before idx).
inline int parity_sign(const ModeSet& ms, const FockState& st, int idx) {
  int n = 0;
  for (int i = 0; i < idx; ++i)
    if (ms.is_fermionic(i)) n += st.occ[i];
  return n % 2 == 0 ? 1 : -1;
}

inline std::optional<std::pair<FockState, Cplx>> apply_monomial(
    const ModeSet& ms, const Monomial& mono, const FockState& input) {
  FockState st = input;
  Cplx amp = mono.coeff;
  for (auto it = mono.factors.rbegin(); it != mono.factors.rend(); ++it) {
    const int idx = it->mode;
    const bool fermi = ms.is_fermionic(idx);
    int n = st.occ[idx];
    if (it->kind == Ladder::Annihilate) {
      if (n == 0) return std::nullopt;
      amp *= fermi ? static_cast<double>(parity_sign(ms, st, idx))
                   : std::sqrt(static_cast<double>(n));
      st.occ[idx] = static_cast<std::uint8_t>(n - 1);
    } else {
      if (fermi && n == 1) return std::nullopt;
      if (n == 255) throw CapacityError("occupation overflow");
      amp *= fermi ? static_cast<double>(parity_sign(ms, st, idx))
                   : std::sqrt(static_cast<double>(n + 1));
      st.occ[idx] = static_cast<std::uint8_t>(n + 1);
    }
  }
  return std::make_pair(std::move(st), amp);
}

}  // namespace detail

inline MapState apply_polynomial(const Polynomial& p, const MapState& in) {
  const ModeSet& ms = *p.mode_set();
  MapState out;
  for (const auto& [st, amp] : in) {
    for (const auto& mono : p.terms()) {
      auto r = detail::apply_monomial(ms, mono, st);
      if (!r) continue;
      out[r->first] += amp * r->second;
    }
  }
  // Prune exact and near-exact cancellations.
  for (auto it = out.begin(); it != out.end();)
    it = std::abs(it->second) == 0.0 ? out.erase(it) : std::next(it);
  return out;
}

inline double map_norm(const MapState& st) {
  double n2 = 0;
  for (const auto& [k, v] : st) n2 += std::norm(v);
  return std::sqrt(n2);
}

inline MapState map_axpy(Cplx a, const MapState& x, const MapState& y) {
  MapState out = y;
  for (const auto& [k, v] : x) out[k] += a * v;
  return out;
}

// ---------------------------------------------------------------------------
// SparseOperator
// ---------------------------------------------------------------------------

struct SparseEntry {
  int row = 0, col = 0;
  Cplx value{0.0, 0.0};
};

/// COO complex sparse matrix over enumerated bases. Canonical form is sorted
/// by (row, col) with duplicates merged and entries below 1e-15 dropped.
struct SparseOperator {
  int dim_row = 0;
  int dim_col = 0;
  std::vector<SparseEntry> entries;

  void canonicalize() {
    std::sort(entries.begin(), entries.end(),
              [](const SparseEntry& a, const SparseEntry& b) {
                return std::pair(a.row, a.col) < std::pair(b.row, b.col);
              });
    std::vector<SparseEntry> out;
    for (const auto& e : entries) {
      if (!out.empty() && out.back().row == e.row && out.back().col == e.col)
        out.back().value += e.value;
      else
        out.push_back(e);
    }
    std::erase_if(out, [](const SparseEntry& e) {
      return std::abs(e.value) < kCoeffDropTol;
    });
    entries = std::move(out);
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim_row);
    for (const auto& e : entries) out[e.row] += e.value * v[e.col];
    return out;
  }

  Eigen::MatrixXcd dense() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_row, dim_col);
    for (const auto& e : entries) m(e.row, e.col) += e.value;
    return m;
  }
};

/// Matrix of P restricted to domain -> codomain. Any reached state missing
/// from the codomain is a sector mismatch.
inline SparseOperator materialize(const Polynomial& p, const Basis& domain,
                                  const Basis& codomain) {
  if (!p.mode_set() || !p.mode_set()->compatible(domain.modes()) ||
      !domain.modes().compatible(codomain.modes()))
    throw SectorMismatchError("materialize: mode sets differ");
  SparseOperator op;
  op.dim_row = static_cast<int>(codomain.size());
  op.dim_col = static_cast<int>(domain.size());
  for (std::size_t j = 0; j < domain.size(); ++j) {
    for (const auto& mono : p.terms()) {
      auto r = detail::apply_monomial(domain.modes(), mono, domain.state(j));
      if (!r) continue;
      const int i = codomain.index_of(r->first);
      if (i < 0) {
        if (std::abs(r->second) < kCoeffDropTol) continue;
        throw SectorMismatchError("materialize: image leaves codomain at state " +
                                  r->first.signature(domain.modes()));
      }
      op.entries.push_back({i, static_cast<int>(j), r->second});
    }
  }
  op.canonicalize();
  return op;
}

/// Matrix of P from the domain onto the exact image support, which is
/// returned as a basis of its own (deterministic lexicographic order).
inline std::pair<SparseOperator, BasisPtr> materialize_onto_image(
    const Polynomial& p, const Basis& domain) {
  std::vector<FockState> reached;
  for (std::size_t j = 0; j < domain.size(); ++j)
    for (const auto& mono : p.terms())
      if (auto r = detail::apply_monomial(domain.modes(), mono, domain.state(j)))
        reached.push_back(r->first);
  BasisPtr image = basis_from_states(domain.mode_set(), std::move(reached));
  return {materialize(p, domain, *image), image};
}

// ---------------------------------------------------------------------------
// StateVector
// ---------------------------------------------------------------------------

/// Dense complex amplitudes over an enumerated basis.
struct StateVector {
  BasisPtr basis;
  Eigen::VectorXcd amps;

  static StateVector zero(BasisPtr b) {
    StateVector v;
    v.amps = Eigen::VectorXcd::Zero(static_cast<int>(b->size()));
    v.basis = std::move(b);
    return v;
  }

  static StateVector from_map(const ModeSetPtr& ms, const MapState& map) {
    std::vector<FockState> support;
    support.reserve(map.size());
    for (const auto& [st, amp] : map) support.push_back(st);
    BasisPtr b = basis_from_states(ms, std::move(support));
    StateVector v = zero(b);
    for (const auto& [st, amp] : map) v.amps[b->index_of(st)] = amp;
    return v;
  }

  /// Projection onto an enumerated target basis; amplitudes that fall
  /// outside raise OutOfSectorError.
  static StateVector from_map(const BasisPtr& target, const MapState& map,
                              double drop_tol = kCoeffDropTol) {
    StateVector v = zero(target);
    for (const auto& [st, amp] : map) {
      const int i = target->index_of(st);
      if (i < 0) {
        if (std::abs(amp) < drop_tol) continue;
        throw OutOfSectorError("state component outside target basis: " +
                               st.signature(target->modes()));
      }
      v.amps[i] = amp;
    }
    return v;
  }

  MapState to_map() const {
    MapState m;
    for (int i = 0; i < amps.size(); ++i)
      if (std::abs(amps[i]) != 0.0) m[basis->state(i)] = amps[i];
    return m;
  }

  double norm() const { return amps.norm(); }

  StateVector normalized() const {
    StateVector v = *this;
    const double n = norm();
    if (n == 0.0) throw ZeroVectorError("cannot normalize the zero vector");
    v.amps /= n;
    return v;
  }

  /// <v|this> resolved through Fock states, so bases may differ as long as
  /// the mode sets match.
  Cplx dot(const StateVector& other) const {
    if (!basis->modes().compatible(other.basis->modes()))
      throw SectorMismatchError("dot: mode sets differ");
    Cplx acc{0.0, 0.0};
    for (int i = 0; i < other.amps.size(); ++i) {
      if (std::abs(other.amps[i]) == 0.0) continue;
      const int j = basis->index_of(other.basis->state(i));
      if (j >= 0) acc += std::conj(amps[j]) * other.amps[i];
    }
    return acc;
  }

  double excited_occupancy() const {
    double acc = 0;
    const ModeSet& ms = basis->modes();
    for (int i = 0; i < amps.size(); ++i)
      acc += std::norm(amps[i]) * basis->state(i).excited_count(ms);
    return acc;
  }

  double photon_expectation(int s) const {
    double acc = 0;
    const ModeSet& ms = basis->modes();
    for (int i = 0; i < amps.size(); ++i)
      acc += std::norm(amps[i]) * basis->state(i).photons(ms, s);
    return acc;
  }
};

/// Applies P and projects the result onto the given codomain basis.
inline StateVector apply_polynomial(const Polynomial& p, const StateVector& v,
                         const BasisPtr& codomain) {
  return StateVector::from_map(codomain, apply_polynomial(p, v.to_map()));
}

}  // namespace qdark
