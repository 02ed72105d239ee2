#include <catch2/catch_amalgamated.hpp>

#include "qdark/model.hpp"
#include "qdark/ops.hpp"

using namespace qdark;

namespace {

HalfInt h(int twice) { return HalfInt::from_twice(twice); }

/// Sub-basis with a fixed excitation number N_exc = N_excited + n_+ + n_-.
BasisPtr fixed_excitation_basis(const ModeSetPtr& ms, const SectorSpec& box,
                                int n_exc) {
  const auto full = enumerate_basis(ms, box);
  std::vector<FockState> keep;
  for (const auto& st : full->states())
    if (st.excitation_number(*ms) == n_exc) keep.push_back(st);
  return basis_from_states(ms, std::move(keep), box);
}

}  // namespace

TEST_CASE("free atomic Hamiltonian counts excited atoms") {
  ModelConfig cfg = ModelConfig::for_transition(h(2), h(2));
  cfg.statistics = Statistics::Bose;
  cfg.omega0 = 1.7;
  auto ms = cfg.mode_set();
  const Polynomial ha = build_ha(cfg, ms);

  MapState ground_only;
  FockState g = FockState::vacuum(*ms);
  g.occ[ms->ground_index(0, h(0))] = 1;
  ground_only[g] = 1.0;
  CHECK(apply_polynomial(ha, ground_only).empty());

  FockState e1 = FockState::vacuum(*ms);
  e1.occ[ms->excited_index(h(0))] = 1;
  MapState one;
  one[e1] = 1.0;
  auto r1 = apply_polynomial(ha, one);
  REQUIRE(r1.size() == 1);
  CHECK(r1[e1].real() == Catch::Approx(1.7));

  FockState e2 = e1;
  e2.occ[ms->excited_index(h(0))] = 2;  // two bosons in one excited mode
  MapState two;
  two[e2] = 1.0;
  auto r2 = apply_polynomial(ha, two);
  REQUIRE(r2.size() == 1);
  CHECK(r2[e2].real() == Catch::Approx(2 * 1.7));
}

TEST_CASE("free photon Hamiltonian counts quanta of both modes") {
  ModelConfig cfg = ModelConfig::for_transition(h(2), h(2));
  cfg.omega = 0.9;
  auto ms = cfg.mode_set();
  const Polynomial hph = build_hph(cfg, ms);

  MapState vac;
  vac[FockState::vacuum(*ms)] = 1.0;
  CHECK(apply_polynomial(hph, vac).empty());

  FockState st = FockState::vacuum(*ms);
  st.occ[ms->photon_index(+1)] = 2;
  st.occ[ms->photon_index(-1)] = 1;
  MapState photons;
  photons[st] = 1.0;
  auto r = apply_polynomial(hph, photons);
  REQUIRE(r.size() == 1);
  CHECK(r[st].real() == Catch::Approx(3 * 0.9));
}

TEST_CASE("coupling term census follows the selection rules") {
  auto up = ModelConfig::for_transition(h(0), h(2));
  CHECK(build_v(up, up.mode_set()).size() == 2);

  auto down = ModelConfig::for_transition(h(4), h(2));
  CHECK(build_v(down, down.mode_set()).size() == 6);

  // Momentum classes replicate the atomic part, photons are shared.
  auto two_classes = ModelConfig::for_transition(h(4), h(2), 2);
  CHECK(build_v(two_classes, two_classes.mode_set()).size() == 12);
}

TEST_CASE("coupling annihilates photonless ground states") {
  ModelConfig cfg = ModelConfig::for_transition(h(4), h(2));
  auto ms = cfg.mode_set();
  const Polynomial v = build_v(cfg, ms);
  for (int t = -cfg.f_g.twice; t <= cfg.f_g.twice; t += 2) {
    FockState st = FockState::vacuum(*ms);
    st.occ[ms->ground_index(0, h(t))] = 1;
    MapState in;
    in[st] = 1.0;
    CHECK(apply_polynomial(v, in).empty());
  }
}

TEST_CASE("chain projections partition the coupling") {
  ModelConfig cfg = ModelConfig::for_transition(h(4), h(2));  // 2 -> 1
  auto ms = cfg.mode_set();
  const Polynomial v = build_v(cfg, ms);
  const auto chains = decompose_chains(h(4), h(2));
  REQUIRE(chains.size() == 2);

  const Polynomial v_long = project_chain(v, chains[0]);
  const Polynomial v_short = project_chain(v, chains[1]);
  CHECK(v_long.size() == 4);
  CHECK(v_short.size() == 2);
  CHECK(same_operator(v_long + v_short, v, 0.0));

  // The direct chain build agrees with the projection, term for term.
  CHECK(same_operator(v_long, chain_coupling_polynomial(chains[0], ms), 0.0));
  CHECK(same_operator(v_short, chain_coupling_polynomial(chains[1], ms), 0.0));
}

TEST_CASE("every chain projection of every transition partitions exactly") {
  for (int tg = 1; tg <= 5; ++tg) {
    for (int te = tg - 2; te <= std::min(5, tg + 2); te += 2) {
      if (te < 0) continue;
      ModelConfig cfg = ModelConfig::for_transition(h(tg), h(te));
      auto ms = cfg.mode_set();
      const Polynomial v = build_v(cfg, ms);
      Polynomial sum(ms);
      for (const auto& chain : decompose_chains(h(tg), h(te)))
        sum += project_chain(v, chain);
      CHECK(same_operator(sum, v, 0.0));
    }
  }
}

TEST_CASE("N-chain projection adds one outer coupling to the lambda part") {
  ModelConfig cfg = ModelConfig::for_transition(h(3), h(3));  // 3/2 -> 3/2
  auto ms = cfg.mode_set();
  const Polynomial v = build_v(cfg, ms);
  const auto chains = decompose_chains(h(3), h(3));
  const Chain& nplus = chains[0];
  REQUIRE(nplus.kind == ChainKind::NPlus);

  const Polynomial proj = project_chain(v, nplus);
  const Polynomial lam = lambda_part_polynomial(nplus, ms);
  const Polynomial extra = normal_order(proj - lam);
  REQUIRE(extra.size() == 1);

  // The single extra monomial is c^dag_{2L+2} b_{2L+1} a_{+1}.
  const auto& mono = extra.terms().front();
  bool has_plus_photon = false, creates_top_excited = false,
       annihilates_top_ground = false;
  for (const auto& f : mono.factors) {
    const ModeId& m = ms->mode(f.mode);
    if (m.kind == ModeKind::Photon && m.s == +1 && f.kind == Ladder::Annihilate)
      has_plus_photon = true;
    if (m.kind == ModeKind::Excited &&
        m.mu == nplus.site_by_label(2 * nplus.links + 2)->mu &&
        f.kind == Ladder::Create)
      creates_top_excited = true;
    if (m.kind == ModeKind::Ground &&
        m.mu == nplus.ground_mu(2 * nplus.links + 1) &&
        f.kind == Ladder::Annihilate)
      annihilates_top_ground = true;
  }
  CHECK(has_plus_photon);
  CHECK(creates_top_excited);
  CHECK(annihilates_top_ground);
}

TEST_CASE("isolated chains carry no coupling") {
  ModelConfig cfg = ModelConfig::for_transition(h(2), h(0));  // 1 -> 0
  auto ms = cfg.mode_set();
  const auto chains = decompose_chains(h(2), h(0));
  REQUIRE(chains[1].kind == ChainKind::IsolatedGround);
  CHECK(project_chain(build_v(cfg, ms), chains[1]).empty());
}

TEST_CASE("V + V-dagger is Hermitian on fixed-excitation sectors") {
  for (Statistics stats : {Statistics::Bose, Statistics::Fermi}) {
    ModelConfig cfg = ModelConfig::for_transition(h(4), h(4));
    cfg.statistics = stats;
    auto ms = cfg.mode_set();
    SectorSpec box;
    box.n_atoms = 2;
    box.cap_plus = 2;
    box.cap_minus = 2;
    const auto basis = fixed_excitation_basis(ms, box, 2);
    REQUIRE(basis->size() > 0);
    const Polynomial v = build_v(cfg, ms);
    const Eigen::MatrixXcd m =
        materialize(v + v.adjoint(), *basis, *basis).dense();
    CHECK((m - m.adjoint()).norm() <= 1e-14 * std::max(1.0, m.norm()));
  }
}

TEST_CASE("the coupling does not depend on the frequencies") {
  ModelConfig a = ModelConfig::for_transition(h(4), h(2));
  ModelConfig b = a;
  b.omega = 17.0;
  b.omega0 = -3.0;
  auto ms = a.mode_set();
  CHECK(same_operator(build_v(a, ms), build_v(b, ms), 0.0));
}
