#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qdark/filter.hpp"
#include "qdark/fock.hpp"
#include "qdark/oracle.hpp"
#include "qdark/ops.hpp"

namespace qdark {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Mode sets and sector specs
// ---------------------------------------------------------------------------

inline Json system_to_json(const ModeSet& ms) {
  return Json{{"two_f_g", ms.f_g().twice},
              {"two_f_e", ms.f_e().twice},
              {"statistics", statistics_name(ms.statistics())},
              {"momentum_classes", ms.momentum_classes()}};
}

inline ModeSetPtr system_from_json(const Json& j) {
  const Statistics stats = j.at("statistics").get<std::string>() == "fermi"
                               ? Statistics::Fermi
                               : Statistics::Bose;
  return make_mode_set(HalfInt::from_twice(j.at("two_f_g").get<int>()),
                       HalfInt::from_twice(j.at("two_f_e").get<int>()), stats,
                       j.at("momentum_classes").get<int>());
}

inline Json sector_to_json(const SectorSpec& s) {
  Json j{{"n_atoms", s.n_atoms},
         {"cap_plus", s.cap_plus},
         {"cap_minus", s.cap_minus},
         {"zero_excited", s.zero_excited},
         {"momentum_classes", s.momentum_classes}};
  if (s.helicity2) j["helicity2"] = *s.helicity2;
  if (s.total_photons) j["total_photons"] = *s.total_photons;
  if (s.fixed_plus) j["fixed_plus"] = *s.fixed_plus;
  if (s.fixed_minus) j["fixed_minus"] = *s.fixed_minus;
  if (s.atomic_modes) j["atomic_modes"] = *s.atomic_modes;
  return j;
}

inline SectorSpec sector_from_json(const Json& j) {
  SectorSpec s;
  s.n_atoms = j.at("n_atoms").get<int>();
  s.cap_plus = j.at("cap_plus").get<int>();
  s.cap_minus = j.at("cap_minus").get<int>();
  s.zero_excited = j.at("zero_excited").get<bool>();
  s.momentum_classes = j.at("momentum_classes").get<int>();
  if (j.contains("helicity2")) s.helicity2 = j["helicity2"].get<int>();
  if (j.contains("total_photons")) s.total_photons = j["total_photons"].get<int>();
  if (j.contains("fixed_plus")) s.fixed_plus = j["fixed_plus"].get<int>();
  if (j.contains("fixed_minus")) s.fixed_minus = j["fixed_minus"].get<int>();
  if (j.contains("atomic_modes"))
    s.atomic_modes = j["atomic_modes"].get<std::vector<int>>();
  return s;
}

// ---------------------------------------------------------------------------
// Basis, states, operators
// ---------------------------------------------------------------------------

inline Json basis_to_json(const Basis& b) {
  Json states = Json::array();
  for (const auto& st : b.states()) {
    Json occ = Json::array();
    for (auto v : st.occ) occ.push_back(static_cast<int>(v));
    states.push_back(occ);
  }
  return Json{{"schema_version", kSchemaVersion},
              {"type", "basis"},
              {"system", system_to_json(b.modes())},
              {"sector", sector_to_json(b.spec())},
              {"states", states}};
}

inline BasisPtr basis_from_json(const Json& j) {
  ModeSetPtr ms = system_from_json(j.at("system"));
  SectorSpec spec = sector_from_json(j.at("sector"));
  std::vector<FockState> states;
  for (const auto& occ : j.at("states")) {
    FockState st = FockState::vacuum(*ms);
    if (occ.size() != st.occ.size()) throw ParseError("occupation list length");
    for (std::size_t i = 0; i < st.occ.size(); ++i)
      st.occ[i] = static_cast<std::uint8_t>(occ[i].get<int>());
    states.push_back(std::move(st));
  }
  return std::make_shared<const Basis>(ms, spec, std::move(states));
}

inline Json state_to_json(const StateVector& v, Json metadata = Json::object()) {
  Json amps = Json::array();
  const ModeSet& ms = v.basis->modes();
  for (int i = 0; i < v.amps.size(); ++i) {
    if (std::abs(v.amps[i]) == 0.0) continue;
    amps.push_back(Json::array({v.basis->state(i).signature(ms),
                                v.amps[i].real(), v.amps[i].imag()}));
  }
  return Json{{"schema_version", kSchemaVersion},
              {"type", "state_vector"},
              {"system", system_to_json(ms)},
              {"amplitudes", amps},
              {"metadata", std::move(metadata)}};
}

inline StateVector state_from_json(const Json& j) {
  ModeSetPtr ms = system_from_json(j.at("system"));
  MapState map;
  for (const auto& row : j.at("amplitudes")) {
    const FockState st = parse_signature(*ms, row.at(0).get<std::string>());
    map[st] = Cplx(row.at(1).get<double>(), row.at(2).get<double>());
  }
  return StateVector::from_map(ms, map);
}

inline Json operator_to_json(const SparseOperator& op) {
  Json entries = Json::array();
  for (const auto& e : op.entries)
    entries.push_back(
        Json::array({e.row, e.col, e.value.real(), e.value.imag()}));
  return Json{{"schema_version", kSchemaVersion},
              {"type", "sparse_operator"},
              {"dim_row", op.dim_row},
              {"dim_col", op.dim_col},
              {"entries", entries}};
}

inline SparseOperator operator_from_json(const Json& j) {
  SparseOperator op;
  op.dim_row = j.at("dim_row").get<int>();
  op.dim_col = j.at("dim_col").get<int>();
  for (const auto& row : j.at("entries"))
    op.entries.push_back({row.at(0).get<int>(), row.at(1).get<int>(),
                          Cplx(row.at(2).get<double>(), row.at(3).get<double>())});
  return op;
}

// ---------------------------------------------------------------------------
// Oracle reports
// ---------------------------------------------------------------------------

inline Json report_to_json(const DarkSubspaceReport& r) {
  Json vectors = Json::array();
  const ModeSet& ms = r.domain->modes();
  for (int k = 0; k < r.dimension; ++k) {
    Json amps = Json::array();
    for (int i = 0; i < r.vectors.rows(); ++i) {
      const Cplx a = r.vectors(i, k);
      if (std::abs(a) == 0.0) continue;
      amps.push_back(
          Json::array({r.domain->state(i).signature(ms), a.real(), a.imag()}));
    }
    vectors.push_back(amps);
  }
  return Json{{"schema_version", kSchemaVersion},
              {"type", "dark_subspace_report"},
              {"system", system_to_json(ms)},
              {"sector", sector_to_json(r.domain->spec())},
              {"dimension", r.dimension},
              {"max_residual", r.max_residual},
              {"sigma_max", r.sigma_max},
              {"tolerance", r.tolerance},
              {"vectors", vectors}};
}

/// "transition,chain,sector,dimension,max_residual" summary line.
inline std::string report_csv_row(const std::string& transition,
                                  const std::string& chain,
                                  const std::string& sector,
                                  const DarkSubspaceReport& r) {
  std::ostringstream os;
  os << transition << ',' << chain << ',' << sector << ',' << r.dimension << ','
     << r.max_residual;
  return os.str();
}

// ---------------------------------------------------------------------------
// Filter configuration and results
// ---------------------------------------------------------------------------

inline Json filter_config_to_json(const FilterConfig& c) {
  Json atoms = Json::array();
  for (const auto& mu : c.atoms) atoms.push_back(mu.twice);
  return Json{{"schema_version", kSchemaVersion},
              {"type", "filter_config"},
              {"two_f_g", c.f_g.twice},
              {"two_f_e", c.f_e.twice},
              {"statistics", statistics_name(c.statistics)},
              {"atoms_two_mu", atoms},
              {"n_plus", c.n_plus},
              {"n_minus", c.n_minus},
              {"gamma", c.gamma},
              {"rabi", c.rabi},
              {"omega", c.omega},
              {"omega0", c.omega0},
              {"t_max", c.t_max},
              {"dt", c.dt},
              {"trajectories", c.trajectories},
              {"seed", c.seed},
              {"sample_interval", c.sample_interval}};
}

inline FilterConfig filter_config_from_json(const Json& j) {
  FilterConfig c;
  c.f_g = HalfInt::from_twice(j.at("two_f_g").get<int>());
  c.f_e = HalfInt::from_twice(j.at("two_f_e").get<int>());
  c.statistics = j.at("statistics").get<std::string>() == "fermi"
                     ? Statistics::Fermi
                     : Statistics::Bose;
  for (const auto& t : j.at("atoms_two_mu"))
    c.atoms.push_back(HalfInt::from_twice(t.get<int>()));
  c.n_plus = j.at("n_plus").get<int>();
  c.n_minus = j.at("n_minus").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.rabi = j.at("rabi").get<double>();
  c.omega = j.at("omega").get<double>();
  c.omega0 = j.at("omega0").get<double>();
  c.t_max = j.at("t_max").get<double>();
  c.dt = j.at("dt").get<double>();
  c.trajectories = j.at("trajectories").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sample_interval = j.at("sample_interval").get<double>();
  return c;
}

/// Flat "key = value" config file; '#' starts a comment. Keys mirror the
/// JSON schema: two_f_g (as "3/2"), two_f_e, statistics, atom_mu (comma
/// list), n_plus, n_minus, gamma, rabi, omega, omega0, t_max, dt,
/// trajectories, seed, sample_interval.
inline FilterConfig parse_filter_config(std::istream& in) {
  FilterConfig c;
  bool have_fg = false, have_fe = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank)
        throw ParseError("config line " + std::to_string(line_no) +
                         ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "f_g") {
        c.f_g = parse_half_int(val);
        have_fg = true;
      } else if (key == "f_e") {
        c.f_e = parse_half_int(val);
        have_fe = true;
      } else if (key == "statistics") {
        if (val != "bose" && val != "fermi")
          throw ParseError("statistics must be bose or fermi");
        c.statistics = val == "fermi" ? Statistics::Fermi : Statistics::Bose;
      } else if (key == "atom_mu") {
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ','))
          c.atoms.push_back(parse_half_int(trim(tok)));
      } else if (key == "n_plus") {
        c.n_plus = std::stoi(val);
      } else if (key == "n_minus") {
        c.n_minus = std::stoi(val);
      } else if (key == "gamma") {
        c.gamma = std::stod(val);
      } else if (key == "rabi") {
        c.rabi = std::stod(val);
      } else if (key == "omega") {
        c.omega = std::stod(val);
      } else if (key == "omega0") {
        c.omega0 = std::stod(val);
      } else if (key == "t_max") {
        c.t_max = std::stod(val);
      } else if (key == "dt") {
        c.dt = std::stod(val);
      } else if (key == "trajectories") {
        c.trajectories = std::stoi(val);
      } else if (key == "seed") {
        c.seed = std::stoull(val);
      } else if (key == "sample_interval") {
        c.sample_interval = std::stod(val);
      } else {
        throw ParseError("unknown config key: " + key);
      }
    } catch (const std::logic_error&) {
      throw ParseError("config line " + std::to_string(line_no) +
                       ": bad value for " + key);
    }
  }
  if (!have_fg || !have_fe) throw ParseError("config must set f_g and f_e");
  return c;
}

inline Json ensemble_to_json(const EnsembleSummary& s) {
  Json per_traj = Json::array();
  for (const auto& r : s.records) {
    per_traj.push_back(Json{{"index", r.index},
                            {"converged", r.converged},
                            {"immediately_dark", r.immediately_dark},
                            {"jumps", r.jumps.size()},
                            {"final_residual", r.final_residual},
                            {"final_weak_distribution", r.final_weak_distribution}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"type", "filter_ensemble"},
              {"config", filter_config_to_json(s.config)},
              {"trajectories", s.trajectories},
              {"converged", s.converged},
              {"convergence_fraction", s.convergence_fraction},
              {"mean_jump_count", s.mean_jump_count},
              {"weak_histogram", s.weak_histogram},
              {"per_trajectory", per_traj}};
}

/// Time-series CSV with one row per sample: trajectory, t, residual, weak mean.
inline void write_timeseries_csv(std::ostream& os, const EnsembleSummary& s) {
  os << "trajectory,t,residual,weak_mean\n";
  for (const auto& r : s.records)
    for (const auto& p : r.samples)
      os << r.index << ',' << p.t << ',' << p.residual << ',' << p.weak_mean
         << '\n';
}

}  // namespace qdark
