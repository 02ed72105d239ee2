#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qdark/angular.hpp"
#include "qdark/fock.hpp"
#include "qdark/model.hpp"
#include "qdark/ops.hpp"

namespace qdark {

inline constexpr double kZeroStateTol = 1e-12;
inline constexpr double kCoherentTailBudget = 1e-10;

// ---------------------------------------------------------------------------
// Photon functionals
// ---------------------------------------------------------------------------

/// The photon-only creation functional applied to the vacuum before the
/// atomic construction.
struct PhiSpec {
  enum class Variant { Fock, CoherentTimesFock };
  Variant variant = Variant::Fock;

  // Fock: (a+^dag)^m_plus (a-^dag)^m_minus
  int m_plus = 0;
  int m_minus = 0;

  // CoherentTimesFock: N0 (a_weak^dag)^m_weak exp(z a_strong^dag), truncated.
  Cplx z{0.0, 0.0};
  int m_weak = 0;
  int weak_polarization = -1;
  int truncation = 0;

  static PhiSpec fock(int mp, int mm) {
    PhiSpec s;
    s.variant = Variant::Fock;
    s.m_plus = mp;
    s.m_minus = mm;
    return s;
  }

  static PhiSpec coherent_times_fock(Cplx z, int m_weak, int weak_polarization,
                                     int truncation) {
    PhiSpec s;
    s.variant = Variant::CoherentTimesFock;
    s.z = z;
    s.m_weak = m_weak;
    s.weak_polarization = weak_polarization;
    s.truncation = truncation;
    return s;
  }

  int max_photons(int s) const {
    if (variant == Variant::Fock) return s > 0 ? m_plus : m_minus;
    if (s == weak_polarization) return m_weak;
    return truncation;
  }
};

struct PhiPolynomial {
  Polynomial poly;
  /// Probability mass of the discarded coherent tail (0 for Fock).
  double tail_mass = 0.0;
  /// Unnormalized amplitude of the first discarded term, |z|^{T+1}/sqrt((T+1)!).
  double tail_amplitude = 0.0;
};

inline PhiPolynomial phi_polynomial(const PhiSpec& spec, const ModeSetPtr& ms) {
  PhiPolynomial out;
  out.poly = Polynomial(ms);
  const int ip = ms->photon_index(+1);
  const int im = ms->photon_index(-1);
  if (spec.variant == PhiSpec::Variant::Fock) {
    if (spec.m_plus < 0 || spec.m_minus < 0)
      throw ConstraintViolation("negative photon number in Fock functional");
    std::vector<OpFactor> f;
    for (int k = 0; k < spec.m_plus; ++k) f.push_back({ip, Ladder::Create});
    for (int k = 0; k < spec.m_minus; ++k) f.push_back({im, Ladder::Create});
    out.poly.add_term(1.0, std::move(f));
    return out;
  }

  if (spec.truncation < 0 || spec.m_weak < 0)
    throw ConstraintViolation("bad coherent-times-Fock parameters");
  const int strong = ms->photon_index(-spec.weak_polarization);
  const int weak = ms->photon_index(spec.weak_polarization);
  double fact = 1.0;
  for (int k = 0; k <= spec.truncation; ++k) {
    if (k > 0) fact *= k;
    std::vector<OpFactor> f;
    for (int q = 0; q < k; ++q) f.push_back({strong, Ladder::Create});
    for (int q = 0; q < spec.m_weak; ++q) f.push_back({weak, Ladder::Create});
    out.poly.add_term(std::pow(spec.z, k) / fact, std::move(f));
  }
  // Normalized coherent-state mass beyond the cutoff.
  const double z2 = std::norm(spec.z);
  double kept = 0.0, term = 1.0;
  for (int k = 0; k <= spec.truncation; ++k) {
    if (k > 0) term *= z2 / k;
    kept += term;
  }
  out.tail_mass = std::max(0.0, 1.0 - std::exp(-z2) * kept);
  double tail_fact = fact * (spec.truncation + 1);
  out.tail_amplitude =
      std::pow(std::abs(spec.z), spec.truncation + 1) / std::sqrt(tail_fact);
  return out;
}

// ---------------------------------------------------------------------------
// The non-coupled construction Psi_NC
// ---------------------------------------------------------------------------

/// One term of Psi_NC: scalar * (a_+)^plus_power (a_-)^minus_power b^dag at
/// the chain's ground site 2j+1, with the scalar kept exact.
struct PsiTerm {
  int j = 0;
  ExactCG scalar;
  int plus_power = 0;
  int minus_power = 0;
};

/// Exact coefficients of Psi_NC over the chain's maximal lambda sub-chain:
///   A_{2j+1} = (-1)^j (a_+)^j (a_-)^{L-j}
///              [prod_{q=1..j} G^{2q}_{2q-1}] [prod_{q=j+1..L} G^{2q}_{2q+1}].
inline std::vector<PsiTerm> psi_nc_coefficients(const Chain& chain) {
  if (chain.kind == ChainKind::IsolatedExcited)
    throw ConstraintViolation("chain has no ground substates");
  const int L = chain.links;
  std::vector<PsiTerm> out;
  out.reserve(L + 1);
  for (int j = 0; j <= L; ++j) {
    ExactCG scalar = ExactCG::one();
    for (int q = 1; q <= j; ++q) scalar = scalar * chain.lambda_plus(q);
    for (int q = j + 1; q <= L; ++q) scalar = scalar * chain.lambda_minus(q);
    if (j % 2 != 0) scalar = -scalar;
    out.push_back({j, scalar, j, L - j});
  }
  return out;
}

/// Psi_NC as an operator polynomial, with ground creation operators taken
/// from the given momentum class.
inline Polynomial psi_nc(const Chain& chain, const ModeSetPtr& ms,
                         int momentum_class = 0) {
  Polynomial p(ms);
  const int ip = ms->photon_index(+1);
  const int im = ms->photon_index(-1);
  for (const auto& term : psi_nc_coefficients(chain)) {
    std::vector<OpFactor> f;
    f.push_back({ms->ground_index(momentum_class, chain.ground_mu(2 * term.j + 1)),
                 Ladder::Create});
    for (int q = 0; q < term.plus_power; ++q) f.push_back({ip, Ladder::Annihilate});
    for (int q = 0; q < term.minus_power; ++q) f.push_back({im, Ladder::Annihilate});
    p.add_term(term.scalar.to_double(), std::move(f));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Fundamental exchange relation
// ---------------------------------------------------------------------------

struct FundRelationResiduals {
  double commutator = 0.0;      // || V_L Psi - Psi V_L ||_F on the domain
  double anticommutator = 0.0;  // || V_L Psi + Psi V_L ||_F on the domain
};

/// Frobenius norms of V_L Psi -+ Psi V_L as maps from the given domain.
inline FundRelationResiduals fund_relation_residuals(const Polynomial& v_lambda,
                                                     const Polynomial& psi,
                                                     const Basis& domain) {
  double comm2 = 0.0, anti2 = 0.0;
  for (std::size_t j = 0; j < domain.size(); ++j) {
    MapState e;
    e[domain.state(j)] = 1.0;
    const MapState vp = apply_polynomial(v_lambda, apply_polynomial(psi, e));
    const MapState pv = apply_polynomial(psi, apply_polynomial(v_lambda, e));
    double c2 = 0.0, a2 = 0.0;
    MapState diff = map_axpy(-1.0, pv, vp);
    for (const auto& [k, v] : diff) c2 += std::norm(v);
    MapState sum = map_axpy(+1.0, pv, vp);
    for (const auto& [k, v] : sum) a2 += std::norm(v);
    comm2 += c2;
    anti2 += a2;
  }
  return {std::sqrt(comm2), std::sqrt(anti2)};
}

/// Residual of the exchange relation with the sign keyed to the statistics
/// (minus for bosons, plus for fermions).
inline double verify_fund_relation(const Chain& chain, const ModeSetPtr& ms,
                                   const SectorSpec& sector) {
  const Polynomial v_lambda = lambda_part_polynomial(chain, ms);
  const Polynomial psi = psi_nc(chain, ms);
  const BasisPtr domain = enumerate_basis(ms, sector);
  const auto r = fund_relation_residuals(v_lambda, psi, *domain);
  return ms->statistics() == Statistics::Bose ? r.commutator : r.anticommutator;
}

// ---------------------------------------------------------------------------
// Dark-state constructions
// ---------------------------------------------------------------------------

struct GdsState {
  StateVector state;  // normalized
  double raw_norm = 0.0;
  double phi_tail_mass = 0.0;
  std::vector<std::pair<std::string, std::string>> meta;
};

namespace detail {

inline MapState vacuum_map(const ModeSetPtr& ms) {
  MapState m;
  m[FockState::vacuum(*ms)] = 1.0;
  return m;
}

inline GdsState finish_state(const ModeSetPtr& ms, const MapState& map,
                             double tail_mass, const char* what) {
  const double raw = map_norm(map);
  if (raw < kZeroStateTol)
    throw ZeroStateError(std::string(what) + " construction is the zero state");
  GdsState out;
  out.raw_norm = raw;
  out.phi_tail_mass = tail_mass;
  out.state = StateVector::from_map(ms, map).normalized();
  return out;
}

inline void check_n_per_class(const ModeSetPtr& ms,
                              const std::vector<int>& n_per_class) {
  if (static_cast<int>(n_per_class.size()) > ms->momentum_classes())
    throw ConstraintViolation("more atom groups than momentum classes");
  for (int n : n_per_class) {
    if (n < 0) throw ConstraintViolation("negative atom count");
    if (ms->statistics() == Statistics::Fermi && n > 1)
      throw ConstraintViolation(
          "fermionic occupation per momentum class is limited to n_p <= 1");
  }
}

inline MapState apply_psi_powers(const Chain& chain, const ModeSetPtr& ms,
                                 const std::vector<int>& n_per_class,
                                 MapState state) {
  for (std::size_t p = 0; p < n_per_class.size(); ++p) {
    const Polynomial psi = psi_nc(chain, ms, static_cast<int>(p));
    for (int k = 0; k < n_per_class[p]; ++k) state = apply_polynomial(psi, state);
  }
  return state;
}

}  // namespace detail

/// Lambda-chain dark state [prod_p Psi_NC(p)^{n_p}] Phi |0>, normalized.
inline GdsState build_lambda_gds(const Chain& chain, const ModeSetPtr& ms,
                                 const std::vector<int>& n_per_class,
                                 const PhiSpec& phi) {
  if (chain.kind != ChainKind::Lambda)
    throw ConstraintViolation("lambda construction requires a lambda chain");
  detail::check_n_per_class(ms, n_per_class);
  const PhiPolynomial phi_poly = phi_polynomial(phi, ms);
  MapState st = apply_polynomial(phi_poly.poly, detail::vacuum_map(ms));
  st = detail::apply_psi_powers(chain, ms, n_per_class, st);
  GdsState out = detail::finish_state(ms, st, phi_poly.tail_mass, "lambda");
  out.meta.emplace_back("chain", chain_kind_name(chain.kind));
  return out;
}

/// N-chain dark state [prod_p Psi_NC(p)^{n_p}] (a_c^dag)^m Phi{a_{-c}^dag}|0>
/// where c is the chain's constrained polarization and m <= L is required.
/// Phi may only involve the opposite (free) photon mode.
inline GdsState build_n_gds(const Chain& chain, const ModeSetPtr& ms,
                            const std::vector<int>& n_per_class, int m,
                            const PhiSpec& phi) {
  if (chain.kind != ChainKind::NPlus && chain.kind != ChainKind::NMinus)
    throw ConstraintViolation("N construction requires an N chain");
  detail::check_n_per_class(ms, n_per_class);
  const int c = chain.constrained_polarization();
  if (m < 0) throw ConstraintViolation("negative photon number m");
  if (m > chain.links)
    throw ConstraintViolation("no dark state: the constrained mode requires (m <= L), got m=" +
                              std::to_string(m) + ", L=" + std::to_string(chain.links));
  if (phi.variant == PhiSpec::Variant::Fock) {
    if ((c > 0 ? phi.m_plus : phi.m_minus) != 0)
      throw ConstraintViolation(
          "Phi of an N chain may only involve the free photon mode");
  } else if (phi.weak_polarization != c || phi.m_weak != 0) {
    throw ConstraintViolation(
        "coherent Phi of an N chain must be coherent in the free mode only");
  }
  const PhiPolynomial phi_poly = phi_polynomial(phi, ms);
  MapState st = apply_polynomial(phi_poly.poly, detail::vacuum_map(ms));
  Polynomial constrained(ms);
  constrained.add_term(
      1.0, std::vector<OpFactor>(
               static_cast<std::size_t>(m),
               OpFactor{ms->photon_index(c), Ladder::Create}));
  st = apply_polynomial(constrained, st);
  st = detail::apply_psi_powers(chain, ms, n_per_class, st);
  GdsState out = detail::finish_state(ms, st, phi_poly.tail_mass, "n-chain");
  out.meta.emplace_back("chain", chain_kind_name(chain.kind));
  out.meta.emplace_back("m", std::to_string(m));
  return out;
}

/// Psi_NC^n (a_+^dag)^m (a_-^dag)^{m'} |0> as a raw amplitude map.
inline MapState v_chain_power_state(const Chain& chain, const ModeSetPtr& ms,
                                    int n, int m, int mprime) {
  MapState st = detail::vacuum_map(ms);
  Polynomial photons(ms);
  std::vector<OpFactor> f;
  for (int k = 0; k < m; ++k) f.push_back({ms->photon_index(+1), Ladder::Create});
  for (int k = 0; k < mprime; ++k)
    f.push_back({ms->photon_index(-1), Ladder::Create});
  photons.add_term(1.0, std::move(f));
  st = apply_polynomial(photons, st);
  const Polynomial psi = psi_nc(chain, ms);
  for (int k = 0; k < n; ++k) st = apply_polynomial(psi, st);
  return st;
}

/// V-chain dark state Psi_NC (a_+^dag)^m (a_-^dag)^{m'} |0>; requires
/// m, m' <= L and is nontrivial (nonzero and photon-carrying) only when
/// (m+m' > L). Exactly one atom.
inline GdsState build_v_gds(const Chain& chain, const ModeSetPtr& ms, int m,
                            int mprime) {
  if (chain.kind != ChainKind::V)
    throw ConstraintViolation("V construction requires a V chain");
  if (m < 0 || mprime < 0) throw ConstraintViolation("negative photon number");
  if (m > chain.links || mprime > chain.links)
    throw ConstraintViolation(
        "no dark state: both photon numbers require (m,m' <= L), got m=" +
        std::to_string(m) + ", m'=" + std::to_string(mprime) +
        ", L=" + std::to_string(chain.links));
  if (m + mprime <= chain.links)
    throw ZeroStateError(
        "trivial state: the V-chain construction is nontrivial only when "
        "(m+m' > L), got m+m'=" +
        std::to_string(m + mprime) + ", L=" + std::to_string(chain.links));
  MapState st = v_chain_power_state(chain, ms, 1, m, mprime);
  GdsState out = detail::finish_state(ms, st, 0.0, "v-chain");
  out.meta.emplace_back("chain", chain_kind_name(chain.kind));
  out.meta.emplace_back("m", std::to_string(m));
  out.meta.emplace_back("m'", std::to_string(mprime));
  return out;
}

/// True when Psi_NC^n (a_+^dag)^m (a_-^dag)^{m'} |0> is the zero vector.
inline bool vanishing_check(const Chain& chain, const ModeSetPtr& ms, int n,
                            int m, int mprime) {
  if (chain.kind != ChainKind::V)
    throw ConstraintViolation("vanishing check is defined for V chains");
  if (m > chain.links || mprime > chain.links)
    throw ConstraintViolation("vanishing check requires (m,m' <= L)");
  const MapState st = v_chain_power_state(chain, ms, n, m, mprime);
  return map_norm(st) < kZeroStateTol;
}

/// Copy of the chain with every coupling replaced by the common value
/// +sqrt(1/2). States built from it must be checked against its own
/// coupling polynomial rather than the physical one.
inline Chain with_equal_couplings(const Chain& chain) {
  Chain out = chain;
  const ExactCG common = ExactCG::from_sign_square(1, Rational(1, 2));
  for (auto& c : out.couplings) c.g = common;
  return out;
}

/// The L=1 polariton family: (Psi_NC)^n N0 (a_-^dag)^m exp(z a_+^dag)|0>,
/// truncated in the coherent mode. n defaults to m, which reproduces the
/// m-fold excited dark-state polariton. force_equal_couplings replaces the
/// chain's two coefficients by a common value before Psi_NC is formed.
inline GdsState build_polariton(const Chain& chain, const ModeSetPtr& ms, int m,
                                Cplx z, int truncation,
                                bool force_equal_couplings, int n = -1) {
  if (chain.kind != ChainKind::Lambda || chain.links != 1)
    throw ConstraintViolation("polariton construction requires a lambda chain with L=1");
  if (m < 0) throw ConstraintViolation("negative photon number m");
  if (n < 0) n = m;
  if (ms->statistics() == Statistics::Fermi && n > 1)
    throw ConstraintViolation("fermionic polariton requires n <= 1");

  const Chain working =
      force_equal_couplings ? with_equal_couplings(chain) : chain;

  const PhiSpec phi = PhiSpec::coherent_times_fock(z, m, -1, truncation);
  const PhiPolynomial phi_poly = phi_polynomial(phi, ms);
  if (phi_poly.tail_mass > kCoherentTailBudget)
    throw TruncationError("coherent tail mass " +
                          std::to_string(phi_poly.tail_mass) +
                          " exceeds budget; increase the truncation");

  MapState st = apply_polynomial(phi_poly.poly, detail::vacuum_map(ms));
  const Polynomial psi = psi_nc(working, ms);
  for (int k = 0; k < n; ++k) st = apply_polynomial(psi, st);
  GdsState out = detail::finish_state(ms, st, phi_poly.tail_mass, "polariton");
  out.meta.emplace_back("m", std::to_string(m));
  out.meta.emplace_back("n", std::to_string(n));
  out.meta.emplace_back("truncation", std::to_string(truncation));
  out.meta.emplace_back("tail_mass", std::to_string(phi_poly.tail_mass));
  out.meta.emplace_back("tail_amplitude", std::to_string(phi_poly.tail_amplitude));
  return out;
}

}  // namespace qdark
