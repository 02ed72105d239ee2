#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "qdark/fock.hpp"
#include "qdark/gds.hpp"
#include "qdark/model.hpp"
#include "qdark/ops.hpp"

namespace qdark {

inline constexpr double kSvdRelativeTol = 1e-10;
inline constexpr double kSvdAbsoluteTol = 1e-12;
inline constexpr std::size_t kOracleDomainCap = 4000;

/// Numerically computed dark subspace of one sector: orthonormal null-space
/// basis of the coupling restricted to the zero-excited domain.
struct DarkSubspaceReport {
  BasisPtr domain;           // zero-excited domain states
  int dimension = 0;
  Eigen::MatrixXcd vectors;  // domain.size() x dimension, orthonormal columns
  double max_residual = 0.0;
  double sigma_max = 0.0;
  double tolerance = 0.0;    // singular-value cut actually applied

  StateVector vector(int k) const {
    StateVector v = StateVector::zero(domain);
    v.amps = vectors.col(k);
    return v;
  }
};

/// Brute-force dark subspace of the sector: SVD null space of V mapped from
/// the zero-excited subsector onto its image. The singular-value threshold is
/// 1e-10 * sigma_max, falling back to an absolute 1e-12 when sigma_max = 0.
inline DarkSubspaceReport dark_subspace(const ModeSetPtr& ms, SectorSpec sector,
                                        std::size_t domain_cap = kOracleDomainCap) {
  sector.zero_excited = true;
  sector.momentum_classes = ms->momentum_classes();
  BasisPtr domain = enumerate_basis(ms, sector);
  if (domain->size() > domain_cap)
    throw CapacityError("oracle domain has " + std::to_string(domain->size()) +
                        " states; cap is " + std::to_string(domain_cap));

  ModelConfig cfg;
  cfg.f_g = ms->f_g();
  cfg.f_e = ms->f_e();
  cfg.statistics = ms->statistics();
  cfg.momentum_classes = ms->momentum_classes();
  const Polynomial v = build_v(cfg, ms);

  DarkSubspaceReport report;
  report.domain = domain;
  const int n = static_cast<int>(domain->size());
  if (n == 0) return report;

  auto [op, image] = materialize_onto_image(v, *domain);
  if (image->size() == 0) {
    // V annihilates the whole domain.
    report.dimension = n;
    report.vectors = Eigen::MatrixXcd::Identity(n, n);
    report.tolerance = kSvdAbsoluteTol;
    return report;
  }

  const Eigen::MatrixXcd dense = op.dense();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  report.sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  report.tolerance = report.sigma_max > 0.0 ? kSvdRelativeTol * report.sigma_max
                                            : kSvdAbsoluteTol;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > report.tolerance) ++rank;
  report.dimension = n - rank;
  report.vectors = svd.matrixV().rightCols(report.dimension);
  for (int k = 0; k < report.dimension; ++k) {
    const double r = (dense * report.vectors.col(k)).norm();
    report.max_residual = std::max(report.max_residual, r);
  }
  return report;
}

struct DarknessCheck {
  bool dark = false;
  double residual = 0.0;           // ||V psi|| / ||psi||
  double excited_occupancy = 0.0;  // per unit norm
};

/// Checks the two darkness conditions directly: the coupling annihilates the
/// state and the excited manifold is unpopulated.
inline DarknessCheck is_dark(const StateVector& state, double tol = 1e-10) {
  const double nrm = state.norm();
  if (nrm < 1e-14) throw ZeroVectorError("is_dark on (numerically) zero vector");
  const ModeSetPtr& ms = state.basis->mode_set();
  ModelConfig cfg;
  cfg.f_g = ms->f_g();
  cfg.f_e = ms->f_e();
  cfg.statistics = ms->statistics();
  cfg.momentum_classes = ms->momentum_classes();
  const Polynomial v = build_v(cfg, ms);
  const MapState image = apply_polynomial(v, state.to_map());
  DarknessCheck out;
  out.residual = map_norm(image) / nrm;
  out.excited_occupancy = state.excited_occupancy() / (nrm * nrm);
  out.dark = out.residual <= tol && out.excited_occupancy <= tol;
  return out;
}

/// True when the state lies in the span of the report's dark basis within
/// tol (relative projection defect).
inline bool contains(const StateVector& state, const DarkSubspaceReport& report,
                     double tol = 1e-10) {
  if (!state.basis->modes().compatible(report.domain->modes()))
    throw SectorMismatchError("contains: mode sets differ");
  const double nrm = state.norm();
  if (nrm == 0.0) throw ZeroVectorError("contains on zero vector");

  // Express the state on the report's domain; out-of-domain amplitude counts
  // straight toward the defect.
  Eigen::VectorXcd on_domain =
      Eigen::VectorXcd::Zero(static_cast<int>(report.domain->size()));
  double outside2 = 0.0;
  for (int i = 0; i < state.amps.size(); ++i) {
    if (std::abs(state.amps[i]) == 0.0) continue;
    const int j = report.domain->index_of(state.basis->state(i));
    if (j < 0)
      outside2 += std::norm(state.amps[i]);
    else
      on_domain[j] = state.amps[i];
  }
  const Eigen::VectorXcd coeffs = report.vectors.adjoint() * on_domain;
  const double defect2 =
      (on_domain - report.vectors * coeffs).squaredNorm() + outside2;
  return std::sqrt(defect2) <= tol * nrm;
}

/// Projection defect ||state - P_dark state|| / ||state||, for diagnostics.
inline double projection_defect(const StateVector& state,
                                const DarkSubspaceReport& report) {
  Eigen::VectorXcd on_domain =
      Eigen::VectorXcd::Zero(static_cast<int>(report.domain->size()));
  double outside2 = 0.0;
  for (int i = 0; i < state.amps.size(); ++i) {
    if (std::abs(state.amps[i]) == 0.0) continue;
    const int j = report.domain->index_of(state.basis->state(i));
    if (j < 0)
      outside2 += std::norm(state.amps[i]);
    else
      on_domain[j] = state.amps[i];
  }
  const Eigen::VectorXcd coeffs = report.vectors.adjoint() * on_domain;
  const double defect2 =
      (on_domain - report.vectors * coeffs).squaredNorm() + outside2;
  return std::sqrt(defect2) / state.norm();
}

/// Sector labels (photon total, doubled helicity) of the chain construction
/// Psi_NC^n (a_+^dag)^{mp} (a_-^dag)^{mm} |0> over one momentum class.
/// Returns nullopt when the construction is impossible (negative photons).
inline std::optional<std::pair<int, int>> construction_sector(const Chain& chain,
                                                              int n, int mp,
                                                              int mm) {
  const int total = mp + mm - n * chain.links;
  if (total < 0) return std::nullopt;
  const int h2 =
      n * chain.ground_mu(1).twice + 2 * n * chain.links + 2 * (mp - mm);
  return std::make_pair(total, h2);
}

}  // namespace qdark
