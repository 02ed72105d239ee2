#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdark/fock.hpp"
#include "qdark/model.hpp"
#include "qdark/oracle.hpp"
#include "qdark/ops.hpp"

namespace qdark {

inline constexpr double kStepGuard = 0.05;
inline constexpr double kConvergenceResidual = 1e-8;

/// Configuration of the quantum-jump relaxation run. A small ensemble of
/// atoms (usually one) is driven by two quantized circular modes; spontaneous
/// photons are scattered out of the system at rate gamma per excited atom.
struct FilterConfig {
  HalfInt f_g, f_e;
  Statistics statistics = Statistics::Fermi;
  std::vector<HalfInt> atoms;  // initial ground substates, one entry per atom
  int n_plus = 0;
  int n_minus = 0;
  double gamma = 1.0;
  double rabi = 1.0;
  double omega = 0.0;
  double omega0 = 0.0;
  double t_max = 50.0;
  double dt = 0.005;
  int trajectories = 1;
  std::uint64_t seed = 1;
  double sample_interval = 0.1;  // spacing of residual samples

  /// The polarization whose photon count the run is expected to squeeze:
  /// the mode that starts with fewer quanta (ties go to sigma+).
  int weak_polarization() const { return n_plus <= n_minus ? +1 : -1; }
};

struct JumpEvent {
  double t = 0.0;
  HalfInt mu_e, mu_g;
  int q = 0;             // spherical component of the scattered photon
  int n_exc_before = 0;  // excitation number of the segment preceding the jump
  int n_exc_after = 0;
  int helicity2_before = 0;  // doubled helicity of the segments
  int helicity2_after = 0;
};

struct ResidualSample {
  double t = 0.0;
  double residual = 0.0;
  double weak_mean = 0.0;
};

struct TrajectoryRecord {
  int index = 0;
  bool converged = false;
  bool immediately_dark = false;
  double final_residual = 0.0;
  double final_time = 0.0;
  std::vector<JumpEvent> jumps;
  std::vector<ResidualSample> samples;
  StateVector final_state;
  std::vector<double> final_weak_distribution;  // P(n_weak = k), k = 0..cap
};

struct EnsembleSummary {
  FilterConfig config;
  int trajectories = 0;
  int converged = 0;
  double convergence_fraction = 0.0;
  double mean_jump_count = 0.0;
  std::vector<double> weak_histogram;  // mean final P(n_weak = k) over converged runs
  std::vector<TrajectoryRecord> records;
};

namespace detail {

struct FilterWorkspace {
  ModeSetPtr ms;
  BasisPtr basis;
  SparseOperator h_eff;         // drift generator, including the decay term
  SparseOperator v_matrix;      // coupling, for residual samples
  Eigen::VectorXd excited_occ;  // diagonal of N_excited
  struct Channel {
    HalfInt mu_e, mu_g;
    int q;
    SparseOperator matrix;
  };
  std::vector<Channel> channels;
  Eigen::VectorXcd initial;
  int weak_index = 0;
};

inline FilterWorkspace prepare_workspace(const FilterConfig& cfg) {
  if (cfg.trajectories < 1)
    throw ParseError("trajectories must be >= 1");
  FilterWorkspace w;
  w.ms = make_mode_set(cfg.f_g, cfg.f_e, cfg.statistics, 1);

  // Photons can redistribute between the modes (absorb from one, emit into
  // the other), so each mode is capped by the conserved excitation number of
  // the initial state, and the box is trimmed to N_exc <= N_exc(0).
  const int n_exc0 = cfg.n_plus + cfg.n_minus;
  SectorSpec sector;
  sector.n_atoms = static_cast<int>(cfg.atoms.size());
  sector.cap_plus = n_exc0;
  sector.cap_minus = n_exc0;
  sector.zero_excited = false;
  const auto box = enumerate_basis(w.ms, sector);
  std::vector<FockState> keep;
  for (const auto& st : box->states())
    if (st.excitation_number(*w.ms) <= n_exc0) keep.push_back(st);
  w.basis = basis_from_states(w.ms, std::move(keep), sector);

  ModelConfig mc;
  mc.f_g = cfg.f_g;
  mc.f_e = cfg.f_e;
  mc.omega0 = cfg.omega0;
  mc.omega = cfg.omega;
  mc.rabi = cfg.rabi;
  mc.statistics = cfg.statistics;
  const Polynomial v = build_v(mc, w.ms);
  const Polynomial h_herm =
      build_ha(mc, w.ms) + build_hph(mc, w.ms) + v + v.adjoint();

  w.v_matrix = materialize(v, *w.basis, *w.basis);
  w.excited_occ.resize(static_cast<int>(w.basis->size()));
  for (std::size_t i = 0; i < w.basis->size(); ++i)
    w.excited_occ[static_cast<int>(i)] =
        w.basis->state(i).excited_count(*w.ms);
  w.h_eff = materialize(h_herm, *w.basis, *w.basis);
  for (int i = 0; i < static_cast<int>(w.basis->size()); ++i)
    if (w.excited_occ[i] != 0.0)
      w.h_eff.entries.push_back(
          {i, i, Cplx(0.0, -0.5 * cfg.gamma * w.excited_occ[i])});
  w.h_eff.canonicalize();

  // One collapse channel per (excited substate, spherical component):
  // D = C(F_g mu_g, 1 q | F_e mu_e) b^dag_{mu_g} c_{mu_e}.
  for (int te = -cfg.f_e.twice; te <= cfg.f_e.twice; te += 2) {
    for (int q : {-1, 0, +1}) {
      const HalfInt mu_e = HalfInt::from_twice(te);
      const HalfInt mu_g = HalfInt::from_twice(te - 2 * q);
      if (std::abs(mu_g.twice) > cfg.f_g.twice) continue;
      const ExactCG g = clebsch_gordan(cfg.f_g, mu_g, HalfInt::whole(1),
                                       HalfInt::whole(q), cfg.f_e, mu_e);
      if (g.is_zero()) continue;
      Polynomial d(w.ms);
      d.add_term(g.to_double(), {{w.ms->ground_index(0, mu_g), Ladder::Create},
                                 {w.ms->excited_index(mu_e), Ladder::Annihilate}});
      w.channels.push_back({mu_e, mu_g, q, materialize(d, *w.basis, *w.basis)});
    }
  }

  FockState init = FockState::vacuum(*w.ms);
  for (const auto& mu : cfg.atoms) {
    const int idx = w.ms->ground_index(0, mu);
    if (cfg.statistics == Statistics::Fermi && init.occ[idx] == 1)
      throw ParseError("duplicate fermionic atom placement");
    init.occ[idx]++;
  }
  init.occ[w.ms->photon_index(+1)] = static_cast<std::uint8_t>(cfg.n_plus);
  init.occ[w.ms->photon_index(-1)] = static_cast<std::uint8_t>(cfg.n_minus);
  const int i0 = w.basis->index_of(init);
  if (i0 < 0) throw Error("initial state not in the enumerated sector");
  w.initial = Eigen::VectorXcd::Zero(static_cast<int>(w.basis->size()));
  w.initial[i0] = 1.0;
  w.weak_index = w.ms->photon_index(cfg.weak_polarization());

  // Stability guard on the explicit Euler step.
  std::vector<double> row_sums(w.basis->size(), 0.0);
  for (const auto& e : w.h_eff.entries) row_sums[e.row] += std::abs(e.value);
  const double row_norm =
      row_sums.empty() ? 0.0 : *std::max_element(row_sums.begin(), row_sums.end());
  if (cfg.dt * row_norm > kStepGuard)
    throw ParseError("dt too large: dt * ||H_eff|| = " +
                     std::to_string(cfg.dt * row_norm) + " exceeds " +
                     std::to_string(kStepGuard));
  return w;
}

/// Dominant support value of a per-state integer quantity; trajectories hold
/// definite N_exc and helicity between jumps, so this is the sector label.
template <typename F>
inline int definite_quantum_number(const FilterWorkspace& w,
                                   const Eigen::VectorXcd& psi, F&& value_of) {
  std::map<int, double> mass;
  for (int i = 0; i < psi.size(); ++i) {
    const double m = std::norm(psi[i]);
    if (m == 0.0) continue;
    mass[value_of(w.basis->state(i))] += m;
  }
  int best = 0;
  double best_mass = -1.0;
  for (const auto& [n, m] : mass)
    if (m > best_mass) {
      best_mass = m;
      best = n;
    }
  return best;
}

inline int definite_excitation_number(const FilterWorkspace& w,
                                      const Eigen::VectorXcd& psi) {
  return definite_quantum_number(
      w, psi, [&](const FockState& st) { return st.excitation_number(*w.ms); });
}

inline int definite_helicity2(const FilterWorkspace& w,
                              const Eigen::VectorXcd& psi) {
  return definite_quantum_number(
      w, psi, [&](const FockState& st) { return st.helicity2(*w.ms); });
}

inline double residual_of(const FilterWorkspace& w, const Eigen::VectorXcd& psi) {
  return w.v_matrix.apply(psi).norm() / psi.norm();
}

inline double weak_mean(const FilterWorkspace& w, const Eigen::VectorXcd& psi) {
  double acc = 0.0;
  for (int i = 0; i < psi.size(); ++i)
    acc += std::norm(psi[i]) * w.basis->state(i).occ[w.weak_index];
  return acc;
}

inline std::vector<double> weak_distribution(const FilterWorkspace& w,
                                             const Eigen::VectorXcd& psi,
                                             int cap) {
  std::vector<double> dist(cap + 1, 0.0);
  for (int i = 0; i < psi.size(); ++i)
    dist[w.basis->state(i).occ[w.weak_index]] += std::norm(psi[i]);
  return dist;
}

inline TrajectoryRecord run_trajectory_impl(const FilterConfig& cfg,
                                            const FilterWorkspace& w,
                                            std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint64_t>(0x9e3779b97f4a7c15ull), seed,
                    static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  TrajectoryRecord rec;
  rec.index = index;
  Eigen::VectorXcd psi = w.initial;
  double t = 0.0;
  const int n_steps = static_cast<int>(std::ceil(cfg.t_max / cfg.dt));
  const int sample_stride =
      std::max(1, static_cast<int>(std::round(cfg.sample_interval / cfg.dt)));

  double residual = residual_of(w, psi);
  rec.samples.push_back({0.0, residual, weak_mean(w, psi)});
  rec.immediately_dark = residual <= kConvergenceResidual;

  const int weak_cap = cfg.n_plus + cfg.n_minus;

  for (int step = 0; step < n_steps; ++step) {
    // Dark states are stationary up to phases; stop integrating once dark.
    const double nexc = w.excited_occ.dot(psi.cwiseAbs2());
    if (residual <= 1e-12 && nexc <= 1e-16) break;

    const double p_jump = cfg.gamma * cfg.dt * nexc;
    const double u = unif(rng);
    if (u < p_jump) {
      // Collapse: pick a channel proportionally to its squared amplitude.
      std::vector<double> weights(w.channels.size(), 0.0);
      std::vector<Eigen::VectorXcd> collapsed(w.channels.size());
      double total = 0.0;
      for (std::size_t c = 0; c < w.channels.size(); ++c) {
        collapsed[c] = w.channels[c].matrix.apply(psi);
        weights[c] = collapsed[c].squaredNorm();
        total += weights[c];
      }
      if (total <= 0.0) throw Error("jump drawn with no available channel");
      double pick = unif(rng) * total;
      std::size_t chosen = 0;
      for (; chosen + 1 < w.channels.size(); ++chosen) {
        pick -= weights[chosen];
        if (pick <= 0.0) break;
      }
      JumpEvent ev;
      ev.t = t;
      ev.mu_e = w.channels[chosen].mu_e;
      ev.mu_g = w.channels[chosen].mu_g;
      ev.q = w.channels[chosen].q;
      ev.n_exc_before = definite_excitation_number(w, psi);
      ev.helicity2_before = definite_helicity2(w, psi);
      psi = collapsed[chosen] / collapsed[chosen].norm();
      ev.n_exc_after = definite_excitation_number(w, psi);
      ev.helicity2_after = definite_helicity2(w, psi);
      rec.jumps.push_back(ev);
    } else {
      psi -= Cplx(0.0, cfg.dt) * w.h_eff.apply(psi);
      psi /= psi.norm();
    }
    t += cfg.dt;
    residual = residual_of(w, psi);
    if ((step + 1) % sample_stride == 0)
      rec.samples.push_back({t, residual, weak_mean(w, psi)});
  }

  rec.final_time = t;
  rec.final_residual = residual;
  rec.converged = residual <= kConvergenceResidual;
  rec.final_state = StateVector::zero(w.basis);
  rec.final_state.amps = psi;
  rec.final_weak_distribution = weak_distribution(w, psi, weak_cap);
  if (rec.samples.empty() || rec.samples.back().t < t)
    rec.samples.push_back({t, residual, weak_mean(w, psi)});
  return rec;
}

}  // namespace detail

/// One norm-preserving stochastic trajectory; deterministic in (cfg, seed).
inline TrajectoryRecord run_trajectory(const FilterConfig& cfg,
                                       std::uint64_t seed, int index = 0) {
  const auto w = detail::prepare_workspace(cfg);
  return detail::run_trajectory_impl(cfg, w, seed, index);
}

/// Aggregates cfg.trajectories independent runs with per-index substreams of
/// cfg.seed; the result is deterministic in (seed, trajectories).
inline EnsembleSummary run_ensemble(const FilterConfig& cfg) {
  const auto w = detail::prepare_workspace(cfg);
  EnsembleSummary out;
  out.config = cfg;
  out.trajectories = cfg.trajectories;
  const int weak_cap = cfg.n_plus + cfg.n_minus;
  out.weak_histogram.assign(weak_cap + 1, 0.0);
  double jump_acc = 0.0;
  for (int i = 0; i < cfg.trajectories; ++i) {
    TrajectoryRecord rec = detail::run_trajectory_impl(cfg, w, cfg.seed, i);
    jump_acc += static_cast<double>(rec.jumps.size());
    if (rec.converged) {
      out.converged++;
      for (std::size_t k = 0; k < rec.final_weak_distribution.size(); ++k)
        out.weak_histogram[k] += rec.final_weak_distribution[k];
    }
    out.records.push_back(std::move(rec));
  }
  if (out.converged > 0)
    for (auto& v : out.weak_histogram) v /= out.converged;
  out.convergence_fraction =
      static_cast<double>(out.converged) / cfg.trajectories;
  out.mean_jump_count = jump_acc / cfg.trajectories;
  return out;
}

}  // namespace qdark
