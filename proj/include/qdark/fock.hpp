#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdark/angular.hpp"
#include "qdark/errors.hpp"

namespace qdark {

enum class Statistics { Bose, Fermi };

inline const char* statistics_name(Statistics s) {
  return s == Statistics::Bose ? "bose" : "fermi";
}

/// Default rule: half-integer ground momentum means fermionic atoms.
inline Statistics default_statistics(HalfInt f_g) {
  return f_g.is_integer() ? Statistics::Bose : Statistics::Fermi;
}

enum class ModeKind { Ground, Excited, Photon };

/// One second-quantized mode: a ground Zeeman substate of a momentum class,
/// an excited Zeeman substate, or one of the two circular photon modes.
struct ModeId {
  ModeKind kind = ModeKind::Ground;
  HalfInt mu{};    // atomic kinds
  int p = 0;       // momentum class, ground kind only
  int s = 0;       // photon spin, +1 or -1, photon kind only

  bool operator==(const ModeId&) const = default;

  std::string str() const {
    switch (kind) {
      case ModeKind::Ground:
        return "b[p" + std::to_string(p) + ",m" + mu.str() + "]";
      case ModeKind::Excited:
        return "c[m" + mu.str() + "]";
      case ModeKind::Photon:
        return s > 0 ? "a[+1]" : "a[-1]";
    }
    return "?";
  }
};

/// The fixed, documented total order over modes for a given transition:
/// ground modes ascending by (p, mu), then excited modes ascending by mu,
/// then photon s=+1, then s=-1. Fermionic exchange signs are defined
/// relative to this order.
class ModeSet {
 public:
  ModeSet(HalfInt f_g, HalfInt f_e, Statistics stats, int momentum_classes = 1)
      : f_g_(f_g), f_e_(f_e), stats_(stats), classes_(momentum_classes) {
    if ((f_g.twice + f_e.twice) % 2 != 0 || std::abs(f_g.twice - f_e.twice) > 2)
      throw InvalidAngularMomentum("invalid transition for mode set");
    if (momentum_classes < 1) throw Error("momentum_classes must be >= 1");
    for (int p = 0; p < classes_; ++p)
      for (int t = -f_g.twice; t <= f_g.twice; t += 2)
        modes_.push_back({ModeKind::Ground, HalfInt::from_twice(t), p, 0});
    n_ground_ = modes_.size();
    for (int t = -f_e.twice; t <= f_e.twice; t += 2)
      modes_.push_back({ModeKind::Excited, HalfInt::from_twice(t), 0, 0});
    n_excited_ = modes_.size() - n_ground_;
    modes_.push_back({ModeKind::Photon, HalfInt{}, 0, +1});
    modes_.push_back({ModeKind::Photon, HalfInt{}, 0, -1});
  }

  HalfInt f_g() const { return f_g_; }
  HalfInt f_e() const { return f_e_; }
  Statistics statistics() const { return stats_; }
  int momentum_classes() const { return classes_; }

  std::size_t size() const { return modes_.size(); }
  std::size_t atomic_count() const { return n_ground_ + n_excited_; }
  const ModeId& mode(std::size_t i) const { return modes_[i]; }

  int ground_index(int p, HalfInt mu) const {
    if (p < 0 || p >= classes_ || std::abs(mu.twice) > f_g_.twice ||
        (mu.twice + f_g_.twice) % 2 != 0)
      throw Error("no such ground mode");
    return p * (f_g_.twice + 1) + (mu.twice + f_g_.twice) / 2;
  }

  int excited_index(HalfInt mu) const {
    if (std::abs(mu.twice) > f_e_.twice || (mu.twice + f_e_.twice) % 2 != 0)
      throw Error("no such excited mode");
    return static_cast<int>(n_ground_) + (mu.twice + f_e_.twice) / 2;
  }

  int photon_index(int s) const {
    return static_cast<int>(modes_.size()) - (s > 0 ? 2 : 1);
  }

  bool is_atomic(std::size_t i) const { return i < atomic_count(); }
  bool is_ground(std::size_t i) const { return i < n_ground_; }
  bool is_excited(std::size_t i) const {
    return i >= n_ground_ && i < atomic_count();
  }
  bool is_photon(std::size_t i) const { return i >= atomic_count(); }
  bool is_fermionic(std::size_t i) const {
    return is_atomic(i) && stats_ == Statistics::Fermi;
  }

  int find(const ModeId& m) const {
    switch (m.kind) {
      case ModeKind::Ground: return ground_index(m.p, m.mu);
      case ModeKind::Excited: return excited_index(m.mu);
      case ModeKind::Photon: return photon_index(m.s);
    }
    return -1;
  }

  bool compatible(const ModeSet& o) const {
    return f_g_ == o.f_g_ && f_e_ == o.f_e_ && stats_ == o.stats_ &&
           classes_ == o.classes_;
  }

 private:
  HalfInt f_g_, f_e_;
  Statistics stats_;
  int classes_;
  std::size_t n_ground_ = 0, n_excited_ = 0;
  std::vector<ModeId> modes_;
};

using ModeSetPtr = std::shared_ptr<const ModeSet>;

inline ModeSetPtr make_mode_set(HalfInt f_g, HalfInt f_e, Statistics stats,
                                int momentum_classes = 1) {
  return std::make_shared<const ModeSet>(f_g, f_e, stats, momentum_classes);
}

// ---------------------------------------------------------------------------
// FockState
// ---------------------------------------------------------------------------

/// Occupation numbers indexed by the ModeSet order.
struct FockState {
  std::vector<std::uint8_t> occ;

  bool operator==(const FockState&) const = default;

  static FockState vacuum(const ModeSet& ms) {
    FockState st;
    st.occ.assign(ms.size(), 0);
    return st;
  }

  int total_atoms(const ModeSet& ms) const {
    int n = 0;
    for (std::size_t i = 0; i < ms.atomic_count(); ++i) n += occ[i];
    return n;
  }

  int excited_count(const ModeSet& ms) const {
    int n = 0;
    for (std::size_t i = 0; i < ms.size(); ++i)
      if (ms.is_excited(i)) n += occ[i];
    return n;
  }

  int photons(const ModeSet& ms, int s) const { return occ[ms.photon_index(s)]; }

  int total_photons(const ModeSet& ms) const {
    return photons(ms, +1) + photons(ms, -1);
  }

  /// Conserved N_exc = N_excited + n_+ + n_-.
  int excitation_number(const ModeSet& ms) const {
    return excited_count(ms) + total_photons(ms);
  }

  /// Doubled helicity invariant: 2*sum(mu n_mu) + 2(n_+ - n_-).
  int helicity2(const ModeSet& ms) const {
    int h = 0;
    for (std::size_t i = 0; i < ms.atomic_count(); ++i)
      h += ms.mode(i).mu.twice * occ[i];
    h += 2 * (photons(ms, +1) - photons(ms, -1));
    return h;
  }

  /// Human-readable, parseable occupation signature: "b[p0,m-1]:1 a[+1]:2",
  /// with "vac" for the vacuum.
  std::string signature(const ModeSet& ms) const {
    std::string out;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (occ[i] == 0) continue;
      if (!out.empty()) out += ' ';
      out += ms.mode(i).str() + ":" + std::to_string(occ[i]);
    }
    return out.empty() ? "vac" : out;
  }
};

struct FockStateHash {
  std::size_t operator()(const FockState& st) const {
    std::size_t h = 1469598103934665603ull;
    for (auto v : st.occ) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return h;
  }
};

/// Parses a signature produced by FockState::signature.
inline FockState parse_signature(const ModeSet& ms, const std::string& sig) {
  FockState st = FockState::vacuum(ms);
  if (sig == "vac" || sig.empty()) return st;
  std::size_t pos = 0;
  while (pos < sig.size()) {
    std::size_t sp = sig.find(' ', pos);
    if (sp == std::string::npos) sp = sig.size();
    std::string tok = sig.substr(pos, sp - pos);
    pos = sp + 1;
    if (tok.empty()) continue;
    std::size_t colon = tok.rfind(':');
    if (colon == std::string::npos) throw ParseError("bad signature token: " + tok);
    std::string mode_s = tok.substr(0, colon);
    int count = 0;
    try {
      count = std::stoi(tok.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw ParseError("bad occupation in token: " + tok);
    }
    int idx = -1;
    for (std::size_t i = 0; i < ms.size(); ++i)
      if (ms.mode(i).str() == mode_s) idx = static_cast<int>(i);
    if (idx < 0) throw ParseError("unknown mode in signature: " + mode_s);
    if (count < 0 || count > 255) throw ParseError("occupation out of range: " + tok);
    st.occ[idx] = static_cast<std::uint8_t>(count);
  }
  return st;
}

// ---------------------------------------------------------------------------
// SectorSpec and Basis
// ---------------------------------------------------------------------------

/// Constraints selecting a conserved-quantity sector to enumerate. All
/// optional filters further restrict the (n_atoms, photon caps) box.
struct SectorSpec {
  int n_atoms = 0;
  int cap_plus = 0;
  int cap_minus = 0;
  bool zero_excited = false;
  int momentum_classes = 1;
  std::optional<int> helicity2;       // doubled units
  std::optional<int> total_photons;   // n_+ + n_- fixed
  std::optional<int> fixed_plus;      // n_+ fixed
  std::optional<int> fixed_minus;     // n_- fixed
  std::optional<std::vector<int>> atomic_modes;  // allowed atomic mode indices
  std::size_t max_states = 200000;

  SectorSpec& with_helicity2(int h) { helicity2 = h; return *this; }
  SectorSpec& with_total_photons(int t) { total_photons = t; return *this; }
};

/// An enumerated, deterministically ordered list of Fock states.
class Basis {
 public:
  Basis(ModeSetPtr ms, SectorSpec spec, std::vector<FockState> states)
      : ms_(std::move(ms)), spec_(std::move(spec)), states_(std::move(states)) {
    for (std::size_t i = 0; i < states_.size(); ++i)
      index_.emplace(states_[i], static_cast<int>(i));
  }

  const ModeSet& modes() const { return *ms_; }
  const ModeSetPtr& mode_set() const { return ms_; }
  const SectorSpec& spec() const { return spec_; }
  std::size_t size() const { return states_.size(); }
  const FockState& state(std::size_t i) const { return states_[i]; }
  const std::vector<FockState>& states() const { return states_; }

  int index_of(const FockState& st) const {
    auto it = index_.find(st);
    return it == index_.end() ? -1 : it->second;
  }

 private:
  ModeSetPtr ms_;
  SectorSpec spec_;
  std::vector<FockState> states_;
  std::unordered_map<FockState, int, FockStateHash> index_;
};

using BasisPtr = std::shared_ptr<const Basis>;

/// Enumerates every state satisfying the spec, in ascending lexicographic
/// order of the occupation vector (mode order as documented in ModeSet).
inline BasisPtr enumerate_basis(const ModeSetPtr& ms, const SectorSpec& spec) {
  if (spec.n_atoms < 0 || spec.cap_plus < 0 || spec.cap_minus < 0)
    throw Error("sector spec has negative counts");
  if (spec.momentum_classes != ms->momentum_classes())
    throw SectorMismatchError("sector and mode set disagree on momentum classes");

  const Statistics stats = ms->statistics();
  const std::size_t n_modes = ms->size();
  std::vector<bool> atomic_allowed(ms->atomic_count(), true);
  if (spec.atomic_modes) {
    atomic_allowed.assign(ms->atomic_count(), false);
    for (int i : *spec.atomic_modes) {
      if (i < 0 || static_cast<std::size_t>(i) >= ms->atomic_count())
        throw Error("atomic mode filter index out of range");
      atomic_allowed[i] = true;
    }
  }

  std::vector<FockState> out;
  FockState current = FockState::vacuum(*ms);

  auto photon_bounds = [&](int idx) {
    const int s = ms->mode(idx).s;
    int lo = 0, hi = s > 0 ? spec.cap_plus : spec.cap_minus;
    const auto& fixed = s > 0 ? spec.fixed_plus : spec.fixed_minus;
    if (fixed) lo = hi = *fixed;
    return std::pair<int, int>{lo, hi};
  };

  std::function<void(std::size_t, int)> recurse = [&](std::size_t idx,
                                                      int atoms_left) {
    if (idx == n_modes) {
      if (atoms_left != 0) return;
      if (spec.helicity2 && current.helicity2(*ms) != *spec.helicity2) return;
      if (spec.total_photons && current.total_photons(*ms) != *spec.total_photons)
        return;
      if (out.size() >= spec.max_states)
        throw CapacityError("basis exceeds max_states = " +
                            std::to_string(spec.max_states));
      out.push_back(current);
      return;
    }
    if (ms->is_atomic(idx)) {
      int max_occ = atoms_left;
      if (stats == Statistics::Fermi) max_occ = std::min(max_occ, 1);
      if (!atomic_allowed[idx]) max_occ = 0;
      if (spec.zero_excited && ms->is_excited(idx)) max_occ = 0;
      for (int n = 0; n <= max_occ; ++n) {
        current.occ[idx] = static_cast<std::uint8_t>(n);
        recurse(idx + 1, atoms_left - n);
      }
      current.occ[idx] = 0;
      return;
    }
    auto [lo, hi] = photon_bounds(static_cast<int>(idx));
    if (spec.total_photons) hi = std::min(hi, *spec.total_photons);
    for (int n = lo; n <= hi; ++n) {
      current.occ[idx] = static_cast<std::uint8_t>(n);
      recurse(idx + 1, atoms_left);
    }
    current.occ[idx] = 0;
  };
  recurse(0, spec.n_atoms);

  return std::make_shared<const Basis>(ms, spec, std::move(out));
}

/// Basis over an explicit state list (sorted lexicographically, deduplicated).
inline BasisPtr basis_from_states(const ModeSetPtr& ms,
                                  std::vector<FockState> states,
                                  SectorSpec spec = {}) {
  std::sort(states.begin(), states.end(),
            [](const FockState& a, const FockState& b) { return a.occ < b.occ; });
  states.erase(std::unique(states.begin(), states.end()), states.end());
  spec.momentum_classes = ms->momentum_classes();
  return std::make_shared<const Basis>(ms, spec, std::move(states));
}

/// Indices of all atomic modes belonging to a chain (all momentum classes).
inline std::vector<int> chain_atomic_modes(const ModeSet& ms, const Chain& chain) {
  std::vector<int> out;
  for (std::size_t i = 0; i < ms.atomic_count(); ++i) {
    const ModeId& m = ms.mode(i);
    const SiteRole role =
        m.kind == ModeKind::Ground ? SiteRole::Ground : SiteRole::Excited;
    if (chain.has_site(role, m.mu)) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace qdark
