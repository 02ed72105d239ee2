#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qdark/gds.hpp"
#include "qdark/oracle.hpp"

using namespace qdark;

namespace {

HalfInt h(int twice) { return HalfInt::from_twice(twice); }

Cplx map_amplitude(const MapState& st, const FockState& key) {
  auto it = st.find(key);
  return it == st.end() ? Cplx(0.0, 0.0) : it->second;
}

StateVector combine(const StateVector& a, Cplx ca, const StateVector& b,
                    Cplx cb) {
  MapState m = a.to_map();
  for (auto& [k, v] : m) v *= ca;
  for (const auto& [k, v] : b.to_map()) m[k] += cb * v;
  return StateVector::from_map(a.basis->mode_set(), m);
}

/// Chain with every coupling re-phased G^k_l -> eta_k eta_l G^k_l.
Chain rephased(const Chain& chain, const std::vector<int>& eta) {
  Chain out = chain;
  for (auto& c : out.couplings) {
    int sign = eta.at(c.ground_label) * eta.at(c.excited_label);
    if (sign < 0) c.g = -c.g;
  }
  return out;
}

}  // namespace

TEST_CASE("psi coefficients: single-link chain matches the closed form") {
  const auto chains = decompose_chains(h(2), h(2));  // 1 -> 1
  const Chain& lam = chains[0];
  REQUIRE(lam.links == 1);
  const auto terms = psi_nc_coefficients(lam);
  REQUIRE(terms.size() == 2);
  CHECK(terms[0].scalar == lam.lambda_minus(1));
  CHECK(terms[0].plus_power == 0);
  CHECK(terms[0].minus_power == 1);
  CHECK(terms[1].scalar == -lam.lambda_plus(1));
  CHECK(terms[1].plus_power == 1);
  CHECK(terms[1].minus_power == 0);
}

TEST_CASE("psi coefficients: empty products give a bare creation operator") {
  const auto chains = decompose_chains(h(2), h(4));  // 1 -> 2
  const Chain& center = chains[1];
  REQUIRE(center.links == 0);
  const auto terms = psi_nc_coefficients(center);
  REQUIRE(terms.size() == 1);
  CHECK(terms[0].scalar == ExactCG::one());
  CHECK(terms[0].plus_power == 0);
  CHECK(terms[0].minus_power == 0);
}

TEST_CASE("psi coefficients solve the two-term recurrence exactly") {
  for (auto [tg, te] : {std::pair{4, 2}, {6, 4}, {4, 4}}) {
    for (const auto& chain : decompose_chains(h(tg), h(te))) {
      if (chain.kind == ChainKind::IsolatedGround ||
          chain.kind == ChainKind::IsolatedExcited)
        continue;
      const int L = chain.links;
      if (L == 0) continue;
      // Independent route: seed A_1 with the product of sigma- couplings and
      // step with A_{2j+1} = -(G^{2j}_{2j-1}/G^{2j}_{2j+1}) A_{2j-1}.
      std::vector<ExactCG> expected(L + 1);
      ExactCG seed = ExactCG::one();
      for (int q = 1; q <= L; ++q) seed = seed * chain.lambda_minus(q);
      expected[0] = seed;
      for (int j = 1; j <= L; ++j)
        expected[j] = -(chain.lambda_plus(j) / chain.lambda_minus(j)) *
                      expected[j - 1];
      const auto terms = psi_nc_coefficients(chain);
      REQUIRE(terms.size() == static_cast<std::size_t>(L + 1));
      for (int j = 0; j <= L; ++j) {
        CHECK(terms[j].scalar == expected[j]);
        CHECK(terms[j].plus_power == j);
        CHECK(terms[j].minus_power == L - j);
      }
    }
  }
}

TEST_CASE("the exchange identity is the commutator for both statistics") {
  for (Statistics stats : {Statistics::Bose, Statistics::Fermi}) {
    for (auto [tg, te] : {std::pair{4, 2}, {2, 2}, {4, 4}}) {
      auto ms = make_mode_set(h(tg), h(te), stats);
      for (const auto& chain : decompose_chains(h(tg), h(te))) {
        if (chain.kind != ChainKind::Lambda) continue;
        SectorSpec sec;
        sec.n_atoms = 1;
        sec.cap_plus = 3;
        sec.cap_minus = 3;
        const auto domain = enumerate_basis(ms, sec);
        const auto r = fund_relation_residuals(
            lambda_part_polynomial(chain, ms), psi_nc(chain, ms), *domain);
        CHECK(r.commutator <= 1e-12);
        // The statistics-keyed form coincides for bosons.
        if (stats == Statistics::Bose)
          CHECK(verify_fund_relation(chain, ms, sec) <= 1e-12);
      }
    }
  }
}

TEST_CASE("a corrupted coefficient breaks the exchange identity") {
  auto ms = make_mode_set(h(4), h(2), Statistics::Bose);
  const auto chains_chain = decompose_chains(h(4), h(2));
  const Chain& chain = chains_chain[0];
  Polynomial psi = psi_nc(chain, ms);
  psi.mutable_terms()[1].coeff *= 1.1;  // 10% corruption
  SectorSpec sec;
  sec.n_atoms = 1;
  sec.cap_plus = 3;
  sec.cap_minus = 3;
  const auto domain = enumerate_basis(ms, sec);
  const auto r =
      fund_relation_residuals(lambda_part_polynomial(chain, ms), psi, *domain);
  CHECK(r.commutator > 1e-3);
}

TEST_CASE("lambda dark state: photon-only and single-atom forms") {
  auto ms = make_mode_set(h(2), h(2), Statistics::Bose);
  const auto chains_lam = decompose_chains(h(2), h(2));
  const Chain& lam = chains_lam[0];

  // n = 0 with a Fock functional is a pure photon state.
  const GdsState photons = build_lambda_gds(lam, ms, {}, PhiSpec::fock(2, 1));
  REQUIRE(photons.state.amps.size() == 1);
  FockState expect = FockState::vacuum(*ms);
  expect.occ[ms->photon_index(+1)] = 2;
  expect.occ[ms->photon_index(-1)] = 1;
  CHECK(photons.state.basis->state(0) == expect);
  CHECK(is_dark(photons.state).residual == 0.0);

  // n = 1, Phi = a+^dag a-^dag |0>: G23 |g1; 1 0> - G21 |g3; 0 1>.
  const GdsState one = build_lambda_gds(lam, ms, {1}, PhiSpec::fock(1, 1));
  const MapState m = one.state.to_map();
  REQUIRE(m.size() == 2);
  FockState k1 = FockState::vacuum(*ms);
  k1.occ[ms->ground_index(0, h(-2))] = 1;
  k1.occ[ms->photon_index(+1)] = 1;
  FockState k3 = FockState::vacuum(*ms);
  k3.occ[ms->ground_index(0, h(2))] = 1;
  k3.occ[ms->photon_index(-1)] = 1;
  const Cplx a1 = map_amplitude(m, k1);
  const Cplx a3 = map_amplitude(m, k3);
  const double want_ratio =
      -lam.lambda_minus(1).to_double() / lam.lambda_plus(1).to_double();
  CHECK((a1 / a3).real() == Catch::Approx(want_ratio).margin(1e-14));
  const auto check = is_dark(one.state);
  CHECK(check.residual <= 1e-14);
  CHECK(check.excited_occupancy == 0.0);
}

TEST_CASE("lambda dark state: fermions over two momentum classes") {
  auto ms = make_mode_set(h(2), h(2), Statistics::Fermi, 2);
  const auto chains_lam = decompose_chains(h(2), h(2));
  const Chain& lam = chains_lam[0];
  const GdsState st = build_lambda_gds(lam, ms, {1, 1}, PhiSpec::fock(2, 2));
  CHECK(st.raw_norm > 0.1);
  const auto check = is_dark(st.state);
  CHECK(check.dark);
  CHECK(check.residual <= 1e-12);
  CHECK(check.excited_occupancy == 0.0);

  // Pauli forbids doubling a class.
  CHECK_THROWS_AS(build_lambda_gds(lam, ms, {2, 0}, PhiSpec::fock(2, 2)),
                  ConstraintViolation);
}

TEST_CASE("lambda dark state: empty constructions raise") {
  auto ms = make_mode_set(h(2), h(2), Statistics::Bose);
  const auto chains_lam = decompose_chains(h(2), h(2));
  const Chain& lam = chains_lam[0];
  // Psi eats one photon; the vacuum functional leaves nothing.
  CHECK_THROWS_AS(build_lambda_gds(lam, ms, {1}, PhiSpec::fock(0, 0)),
                  ZeroStateError);
}

TEST_CASE("the coupling annihilates every power of the construction") {
  for (auto [tg, te] : {std::pair{4, 2}, {2, 2}, {4, 4}, {6, 4}}) {
    auto ms = make_mode_set(h(tg), h(te), Statistics::Bose);
    for (const auto& chain : decompose_chains(h(tg), h(te))) {
      if (chain.kind != ChainKind::Lambda) continue;
      const Polynomial v_lam = lambda_part_polynomial(chain, ms);
      const Polynomial psi = psi_nc(chain, ms);
      MapState st = detail::vacuum_map(ms);
      Polynomial phi(ms);
      std::vector<OpFactor> f;
      for (int k = 0; k < 3; ++k)
        f.push_back({ms->photon_index(+1), Ladder::Create});
      for (int k = 0; k < 3; ++k)
        f.push_back({ms->photon_index(-1), Ladder::Create});
      phi.add_term(1.0, std::move(f));
      st = apply_polynomial(phi, st);
      for (int n = 0; n <= 3; ++n) {
        CHECK(map_norm(apply_polynomial(v_lam, st)) <= 1e-13);
        st = apply_polynomial(psi, st);
      }
    }
  }
}

TEST_CASE("fermionic construction squares to zero as a polynomial") {
  for (auto [tg, te] : {std::pair{3, 3}, {3, 1}, {5, 5}, {4, 2}}) {
    auto ms = make_mode_set(h(tg), h(te), Statistics::Fermi);
    for (const auto& chain : decompose_chains(h(tg), h(te))) {
      if (chain.kind == ChainKind::IsolatedExcited) continue;
      const Polynomial psi = psi_nc(chain, ms);
      CHECK(normal_order(psi * psi).empty());
    }
  }
}

TEST_CASE("superpositions of dark states stay dark") {
  auto ms = make_mode_set(h(4), h(2), Statistics::Bose);
  const auto chains_lam = decompose_chains(h(4), h(2));
  const Chain& lam = chains_lam[0];
  std::vector<StateVector> darks;
  for (int mp = 0; mp <= 2; ++mp)
    for (int mm = 0; mm <= 2; ++mm) {
      try {
        darks.push_back(
            build_lambda_gds(lam, ms, {1}, PhiSpec::fock(mp, mm)).state);
      } catch (const ZeroStateError&) {
      }
    }
  REQUIRE(darks.size() >= 4);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, darks.size() - 1);
  for (int trial = 0; trial < 25; ++trial) {
    const StateVector mix =
        combine(darks[pick(rng)], Cplx(u(rng), u(rng)), darks[pick(rng)],
                Cplx(u(rng), u(rng)));
    if (mix.norm() < 1e-6) continue;
    CHECK(is_dark(mix).residual <= 1e-10);
  }
}

TEST_CASE("darkness survives a consistent re-phasing of the substates") {
  auto ms = make_mode_set(h(4), h(2), Statistics::Bose);
  const auto chains_lam = decompose_chains(h(4), h(2));
  const Chain& lam = chains_lam[0];
  std::vector<int> eta(2 * lam.links + 2, 1);
  eta[1] = -1;
  eta[2] = -1;
  eta[4] = -1;
  const Chain flipped = rephased(lam, eta);
  SectorSpec sec;
  sec.n_atoms = 1;
  sec.cap_plus = 2;
  sec.cap_minus = 2;
  const auto domain = enumerate_basis(ms, sec);
  const auto r = fund_relation_residuals(
      chain_coupling_polynomial(flipped, ms), psi_nc(flipped, ms), *domain);
  CHECK(r.commutator <= 1e-12);

  // The re-phased construction is dark for the re-phased coupling.
  MapState st = detail::vacuum_map(ms);
  Polynomial phi(ms);
  phi.add_term(1.0, {{ms->photon_index(+1), Ladder::Create},
                     {ms->photon_index(-1), Ladder::Create}});
  st = apply_polynomial(phi, st);
  st = apply_polynomial(psi_nc(flipped, ms), st);
  CHECK(map_norm(apply_polynomial(chain_coupling_polynomial(flipped, ms), st)) <=
        1e-13);
}

TEST_CASE("N-chain dark states obey the weak-mode bound") {
  auto ms = make_mode_set(h(3), h(3), Statistics::Fermi);
  const auto chains = decompose_chains(h(3), h(3));
  const Chain& nplus = chains[0];
  REQUIRE(nplus.kind == ChainKind::NPlus);

  // m = 1 <= L = 1, three free-mode photons.
  const GdsState st = build_n_gds(nplus, ms, {1}, 1, PhiSpec::fock(0, 3));
  const auto check = is_dark(st.state);
  CHECK(check.dark);
  CHECK(check.residual <= 1e-12);
  CHECK(check.excited_occupancy == 0.0);

  // m exceeding the chain length is the no-dark-state regime.
  CHECK_THROWS_WITH(build_n_gds(nplus, ms, {1}, 2, PhiSpec::fock(0, 3)),
                    Catch::Matchers::ContainsSubstring("(m <= L)"));

  // Photon-only member of the family.
  const GdsState photons = build_n_gds(nplus, ms, {}, 1, PhiSpec::fock(0, 2));
  CHECK(is_dark(photons.state).residual == 0.0);

  // Phi must not touch the constrained mode.
  CHECK_THROWS_AS(build_n_gds(nplus, ms, {1}, 1, PhiSpec::fock(1, 2)),
                  ConstraintViolation);

  // The N- chain constrains the opposite mode.
  const Chain& nminus = chains[1];
  REQUIRE(nminus.kind == ChainKind::NMinus);
  const GdsState mirror = build_n_gds(nminus, ms, {1}, 1, PhiSpec::fock(3, 0));
  CHECK(is_dark(mirror.state).residual <= 1e-12);
}

TEST_CASE("V-chain dark state matches the explicit entangled form") {
  auto ms = make_mode_set(h(2), h(4), Statistics::Bose);
  const auto chains_vchain = decompose_chains(h(2), h(4));
  const Chain& vchain = chains_vchain[0];
  REQUIRE(vchain.links == 1);

  const GdsState st = build_v_gds(vchain, ms, 1, 1);
  const MapState m = st.state.to_map();
  REQUIRE(m.size() == 2);
  FockState k1 = FockState::vacuum(*ms);
  k1.occ[ms->ground_index(0, h(-2))] = 1;
  k1.occ[ms->photon_index(+1)] = 1;
  FockState k3 = FockState::vacuum(*ms);
  k3.occ[ms->ground_index(0, h(2))] = 1;
  k3.occ[ms->photon_index(-1)] = 1;
  const Cplx a1 = map_amplitude(m, k1);
  const Cplx a3 = map_amplitude(m, k3);
  const double want_ratio =
      -vchain.lambda_minus(1).to_double() / vchain.lambda_plus(1).to_double();
  CHECK((a1 / a3).real() == Catch::Approx(want_ratio).margin(1e-14));
  const auto check = is_dark(st.state);
  CHECK(check.dark);
  CHECK(check.residual <= 1e-14);
  CHECK(st.state.excited_occupancy() == 0.0);
}

TEST_CASE("V-chain constraints and trivial regions raise") {
  auto ms = make_mode_set(h(2), h(4), Statistics::Bose);
  const auto chains = decompose_chains(h(2), h(4));
  const Chain& vchain = chains[0];

  CHECK_THROWS_WITH(build_v_gds(vchain, ms, 2, 1),
                    Catch::Matchers::ContainsSubstring("(m,m' <= L)"));
  CHECK_THROWS_WITH(build_v_gds(vchain, ms, 1, 0),
                    Catch::Matchers::ContainsSubstring("(m+m' > L)"));

  // The L = 0 chain admits no photon numbers at all.
  const Chain& center = chains[1];
  REQUIRE(center.links == 0);
  CHECK_THROWS_AS(build_v_gds(center, ms, 0, 0), ZeroStateError);
}

TEST_CASE("vanishing identities of the V-chain powers") {
  auto ms = make_mode_set(h(2), h(4), Statistics::Bose);
  const auto chains_vchain = decompose_chains(h(2), h(4));
  const Chain& vchain = chains_vchain[0];

  CHECK(vanishing_check(vchain, ms, 3, 1, 1));
  CHECK(vanishing_check(vchain, ms, 4, 1, 1));
  CHECK_FALSE(vanishing_check(vchain, ms, 1, 1, 1));

  // Two atoms at m = m' = L: nonzero but photonless.
  const MapState two = v_chain_power_state(vchain, ms, 2, 1, 1);
  REQUIRE(map_norm(two) > 0);
  for (const auto& [k, v] : two) CHECK(k.total_photons(*ms) == 0);

  CHECK_THROWS_AS(vanishing_check(vchain, ms, 3, 2, 1), ConstraintViolation);
}

TEST_CASE("polariton family: darkness, orthogonality, truncation guard") {
  auto ms = make_mode_set(h(2), h(2), Statistics::Bose);
  const auto chains_lam = decompose_chains(h(2), h(2));
  const Chain& lam = chains_lam[0];
  REQUIRE(lam.links == 1);

  // m = 0, n = 0: a bare coherent state in the sigma+ mode.
  const GdsState coherent = build_polariton(lam, ms, 0, 1.0, 12, false, 0);
  CHECK(is_dark(coherent.state).residual <= 1e-12);
  CHECK(coherent.state.photon_expectation(-1) == 0.0);

  // m-fold excited members with equalized couplings; darkness is checked
  // against the equalized coupling the state was built from.
  const Polynomial v_eq = chain_coupling_polynomial(with_equal_couplings(lam), ms);
  std::vector<StateVector> family;
  for (int m = 0; m <= 2; ++m) {
    const GdsState d = build_polariton(lam, ms, m, 1.0, 12, true);
    const double res =
        map_norm(apply_polynomial(v_eq, d.state.to_map())) / d.state.norm();
    CHECK(res <= 1e-10);
    CHECK(d.state.excited_occupancy() == 0.0);
    family.push_back(d.state);
  }
  for (std::size_t a = 0; a < family.size(); ++a)
    for (std::size_t b = 0; b < family.size(); ++b) {
      const Cplx g = family[a].dot(family[b]);
      CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) <= 1e-10);
    }

  // Real-coefficient chains are dark too; only the literature comparison
  // needs equal couplings.
  const GdsState native = build_polariton(lam, ms, 1, 1.0, 12, false);
  CHECK(is_dark(native.state).residual <= 1e-10);

  CHECK_THROWS_AS(build_polariton(lam, ms, 1, 2.0, 4, true), TruncationError);

  // The 2 -> 1 short chain realizes equal couplings physically, so there the
  // family is dark under the full transition coupling with no override.
  auto ms21 = make_mode_set(h(4), h(2), Statistics::Bose);
  const auto chains21 = decompose_chains(h(4), h(2));
  const Chain& short_chain = chains21[1];
  REQUIRE(short_chain.links == 1);
  REQUIRE(short_chain.lambda_plus(1) == short_chain.lambda_minus(1));
  for (int m = 0; m <= 2; ++m) {
    const GdsState d = build_polariton(short_chain, ms21, m, 1.0, 12, false);
    CHECK(is_dark(d.state).residual <= 1e-10);
  }
}

TEST_CASE("large-amplitude coherent light reproduces the classical pattern") {
  // With both modes coherent the atomic populations follow the construction
  // coefficients with the operators replaced by the field amplitudes.
  auto ms = make_mode_set(h(4), h(2), Statistics::Bose);
  const auto chains_lam = decompose_chains(h(4), h(2));
  const Chain& lam = chains_lam[0];
  const int L = lam.links;
  const double zp = 1.3, zm = 0.8;
  const int trunc = 18;

  Polynomial phi(ms);
  phi.add_term(1.0, {});
  for (int s : {+1, -1}) {
    Polynomial coh(ms);
    double fact = 1.0;
    const double z = s > 0 ? zp : zm;
    for (int k = 0; k <= trunc; ++k) {
      if (k > 0) fact *= k;
      coh.add_term(std::pow(z, k) / fact,
                   std::vector<OpFactor>(k, {ms->photon_index(s), Ladder::Create}));
    }
    phi = phi * coh;
  }
  MapState st = apply_polynomial(phi, detail::vacuum_map(ms));
  st = apply_polynomial(psi_nc(lam, ms), st);

  // Atomic marginals.
  std::vector<double> got(L + 1, 0.0);
  double total = 0.0;
  for (const auto& [k, v] : st) {
    for (int j = 0; j <= L; ++j)
      if (k.occ[ms->ground_index(0, lam.ground_mu(2 * j + 1))] == 1)
        got[j] += std::norm(v);
    total += std::norm(v);
  }
  const auto terms = psi_nc_coefficients(lam);
  std::vector<double> want(L + 1, 0.0);
  double wtotal = 0.0;
  for (int j = 0; j <= L; ++j) {
    const double c = terms[j].scalar.to_double() * std::pow(zp, j) *
                     std::pow(zm, L - j);
    want[j] = c * c;
    wtotal += want[j];
  }
  for (int j = 0; j <= L; ++j)
    CHECK(got[j] / total == Catch::Approx(want[j] / wtotal).margin(1e-6));
}
