#pragma once

#include <vector>

#include "qdark/angular.hpp"
#include "qdark/fock.hpp"
#include "qdark/ops.hpp"

namespace qdark {

/// Physical parameters of the transition. hbar = 1 throughout; darkness is
/// independent of omega0, omega and rabi, which only scale the matrices.
struct ModelConfig {
  HalfInt f_g, f_e;
  double omega0 = 0.0;  // atomic transition frequency
  double omega = 0.0;   // field frequency
  double rabi = 1.0;    // single-photon coupling scale
  Statistics statistics = Statistics::Bose;
  int momentum_classes = 1;

  static ModelConfig for_transition(HalfInt f_g, HalfInt f_e,
                                    int momentum_classes = 1) {
    ModelConfig c;
    c.f_g = f_g;
    c.f_e = f_e;
    c.statistics = default_statistics(f_g);
    c.momentum_classes = momentum_classes;
    return c;
  }

  ModeSetPtr mode_set() const {
    return make_mode_set(f_g, f_e, statistics, momentum_classes);
  }
};

/// omega0 * sum_mu c^dag_mu c_mu over excited substates.
inline Polynomial build_ha(const ModelConfig& cfg, const ModeSetPtr& ms) {
  Polynomial p(ms);
  for (int t = -cfg.f_e.twice; t <= cfg.f_e.twice; t += 2) {
    const int idx = ms->excited_index(HalfInt::from_twice(t));
    p.add_term(cfg.omega0, {{idx, Ladder::Create}, {idx, Ladder::Annihilate}});
  }
  return p;
}

/// omega * sum_s a^dag_s a_s over the two circular photon modes.
inline Polynomial build_hph(const ModelConfig& cfg, const ModeSetPtr& ms) {
  Polynomial p(ms);
  for (int s : {+1, -1}) {
    const int idx = ms->photon_index(s);
    p.add_term(cfg.omega, {{idx, Ladder::Create}, {idx, Ladder::Annihilate}});
  }
  return p;
}

/// Number operator for excited atoms (unit coefficient).
inline Polynomial excited_number(const ModeSetPtr& ms) {
  ModelConfig c;
  c.f_g = ms->f_g();
  c.f_e = ms->f_e();
  c.omega0 = 1.0;
  return build_ha(c, ms);
}

/// The lowering half of the dipole coupling:
///   V = rabi * sum_{mu_g, s} C(F_g mu_g; 1 s | F_e mu_g+s)
///         c^dag_{mu_g+s} b_{mu_g} a_s,
/// replicated over momentum classes (photon modes are shared).
inline Polynomial build_v(const ModelConfig& cfg, const ModeSetPtr& ms) {
  Polynomial p(ms);
  for (int pcls = 0; pcls < cfg.momentum_classes; ++pcls) {
    for (int t = -cfg.f_g.twice; t <= cfg.f_g.twice; t += 2) {
      for (int s : {+1, -1}) {
        const HalfInt mu_g = HalfInt::from_twice(t);
        const HalfInt mu_e = HalfInt::from_twice(t + 2 * s);
        if (std::abs(mu_e.twice) > cfg.f_e.twice) continue;
        const ExactCG g = clebsch_gordan(cfg.f_g, mu_g, HalfInt::whole(1),
                                         HalfInt::whole(s), cfg.f_e, mu_e);
        if (g.is_zero()) continue;
        p.add_term(cfg.rabi * g.to_double(),
                   {{ms->excited_index(mu_e), Ladder::Create},
                    {ms->ground_index(pcls, mu_g), Ladder::Annihilate},
                    {ms->photon_index(s), Ladder::Annihilate}});
      }
    }
  }
  return p;
}

/// Keeps exactly the monomials of V whose atomic modes lie on the chain.
/// Summed over all chains of the transition this reproduces V term by term.
inline Polynomial project_chain(const Polynomial& v_full, const Chain& chain) {
  const ModeSetPtr& ms = v_full.mode_set();
  if (!ms) throw SectorMismatchError("project_chain: polynomial has no mode set");
  if (ms->f_g() != chain.f_g || ms->f_e() != chain.f_e)
    throw SectorMismatchError("project_chain: chain belongs to another transition");
  Polynomial out(ms);
  for (const auto& mono : v_full.terms()) {
    bool keep = true;
    for (const auto& f : mono.factors) {
      if (!ms->is_atomic(f.mode)) continue;
      const ModeId& m = ms->mode(f.mode);
      const SiteRole role =
          m.kind == ModeKind::Ground ? SiteRole::Ground : SiteRole::Excited;
      if (!chain.has_site(role, m.mu)) {
        keep = false;
        break;
      }
    }
    if (keep) out.add_term(mono.coeff, mono.factors);
  }
  return out;
}

/// Builds the chain-restricted coupling directly from the chain's stored
/// coefficients; equals project_chain(build_v(...), chain) and additionally
/// honors any re-phasing applied to the chain's couplings.
inline Polynomial chain_coupling_polynomial(const Chain& chain,
                                            const ModeSetPtr& ms,
                                            double rabi = 1.0) {
  Polynomial p(ms);
  for (int pcls = 0; pcls < ms->momentum_classes(); ++pcls) {
    for (const auto& c : chain.couplings) {
      const HalfInt mu_g = chain.site_by_label(c.ground_label)->mu;
      const HalfInt mu_e = chain.site_by_label(c.excited_label)->mu;
      p.add_term(rabi * c.g.to_double(),
                 {{ms->excited_index(mu_e), Ladder::Create},
                  {ms->ground_index(pcls, mu_g), Ladder::Annihilate},
                  {ms->photon_index(c.polarization), Ladder::Annihilate}});
    }
  }
  return p;
}

/// Restriction of the chain coupling to its maximal lambda sub-chain
/// (labels 1..2L+1), i.e. without the extra single-line couplings of
/// N and V chains.
inline Polynomial lambda_part_polynomial(const Chain& chain, const ModeSetPtr& ms,
                                         double rabi = 1.0) {
  Polynomial p(ms);
  for (int pcls = 0; pcls < ms->momentum_classes(); ++pcls) {
    for (const auto& c : chain.couplings) {
      if (c.ground_label < 1 || c.ground_label > 2 * chain.links + 1) continue;
      if (c.excited_label < 2 || c.excited_label > 2 * chain.links) continue;
      const HalfInt mu_g = chain.site_by_label(c.ground_label)->mu;
      const HalfInt mu_e = chain.site_by_label(c.excited_label)->mu;
      p.add_term(rabi * c.g.to_double(),
                 {{ms->excited_index(mu_e), Ladder::Create},
                  {ms->ground_index(pcls, mu_g), Ladder::Annihilate},
                  {ms->photon_index(c.polarization), Ladder::Annihilate}});
    }
  }
  return p;
}

}  // namespace qdark
