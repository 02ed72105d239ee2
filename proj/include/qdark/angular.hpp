#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qdark/errors.hpp"

namespace qdark {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// HalfInt
// ---------------------------------------------------------------------------

/// Angular momentum / magnetic quantum number stored as twice its value, so
/// half-integers stay exact and parity questions are integer arithmetic.
struct HalfInt {
  int twice = 0;

  constexpr HalfInt() = default;
  constexpr explicit HalfInt(int twice_value) : twice(twice_value) {}

  static constexpr HalfInt from_twice(int t) { return HalfInt(t); }
  static constexpr HalfInt whole(int n) { return HalfInt(2 * n); }

  constexpr bool is_integer() const { return twice % 2 == 0; }
  double value() const { return 0.5 * twice; }

  constexpr HalfInt operator+(HalfInt o) const { return HalfInt(twice + o.twice); }
  constexpr HalfInt operator-(HalfInt o) const { return HalfInt(twice - o.twice); }
  constexpr HalfInt operator-() const { return HalfInt(-twice); }
  constexpr bool operator==(const HalfInt&) const = default;
  constexpr auto operator<=>(const HalfInt&) const = default;

  std::string str() const {
    if (twice % 2 == 0) return std::to_string(twice / 2);
    return std::to_string(twice) + "/2";
  }
};

/// Parses "2", "-1", "3/2", "-3/2". Throws ParseError otherwise.
inline HalfInt parse_half_int(const std::string& text) {
  const auto bad = [&] { throw ParseError("cannot parse half-integer: '" + text + "'"); };
  std::string s = text;
  if (s.empty()) bad();
  std::size_t slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      std::size_t pos = 0;
      int whole = std::stoi(s, &pos);
      if (pos != s.size()) bad();
      return HalfInt::whole(whole);
    }
    std::size_t pos = 0;
    int num = std::stoi(s.substr(0, slash), &pos);
    if (pos != slash) bad();
    std::string den = s.substr(slash + 1);
    if (den != "2") bad();
    return HalfInt::from_twice(num);
  } catch (const std::logic_error&) {
    bad();
  }
  return HalfInt{};  // unreachable
}

// ---------------------------------------------------------------------------
// ExactCG: signed square roots of rationals
// ---------------------------------------------------------------------------

/// A Clebsch-Gordan amplitude kept exact as sign * sqrt(square).
/// Closed under products, quotients and negation, which is all the chain
/// algebra needs; floats are produced only when matrices are assembled.
class ExactCG {
 public:
  ExactCG() = default;

  static ExactCG from_sign_square(int sign, Rational square) {
    if (square < 0) throw Error("ExactCG: negative square");
    ExactCG g;
    if (square == 0 || sign == 0) return g;
    g.sign_ = sign > 0 ? 1 : -1;
    g.square_ = std::move(square);
    return g;
  }

  static ExactCG one() { return from_sign_square(1, 1); }

  int sign() const { return sign_; }
  const Rational& square() const { return square_; }
  bool is_zero() const { return sign_ == 0; }

  double to_double() const {
    if (sign_ == 0) return 0.0;
    return sign_ * std::sqrt(square_.convert_to<double>());
  }

  ExactCG operator-() const { return from_sign_square(-sign_, square_); }

  friend ExactCG operator*(const ExactCG& a, const ExactCG& b) {
    return from_sign_square(a.sign_ * b.sign_, a.square_ * b.square_);
  }

  friend ExactCG operator/(const ExactCG& a, const ExactCG& b) {
    if (b.is_zero()) throw Error("ExactCG: division by zero");
    return from_sign_square(a.sign_ * b.sign_, a.square_ / b.square_);
  }

  bool operator==(const ExactCG&) const = default;

  /// "+sqrt(1/3)", "-sqrt(2/5)", "0"
  std::string str() const {
    if (sign_ == 0) return "0";
    std::string body = numerator(square_).str();
    if (denominator(square_) != 1) body += "/" + denominator(square_).str();
    return std::string(sign_ > 0 ? "+" : "-") + "sqrt(" + body + ")";
  }

 private:
  int sign_ = 0;
  Rational square_ = 0;
};

namespace detail {

inline BigInt factorial(int n) {
  if (n < 0) throw Error("factorial of negative argument");
  BigInt f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline int require_half(int twice, const char* what) {
  if (twice % 2 != 0)
    throw InvalidAngularMomentum(std::string("parity mismatch in ") + what);
  return twice / 2;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Clebsch-Gordan coefficient
// ---------------------------------------------------------------------------

/// <j1 m1; j2 m2 | J M> in the Condon-Shortley convention, evaluated with the
/// Racah closed-form sum over exact rationals.
inline ExactCG clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2,
                              HalfInt J, HalfInt M) {
  using detail::factorial;
  using detail::require_half;

  if (j1.twice < 0 || j2.twice < 0 || J.twice < 0)
    throw InvalidAngularMomentum("negative angular momentum");
  if ((j1.twice + m1.twice) % 2 != 0 || (j2.twice + m2.twice) % 2 != 0 ||
      (J.twice + M.twice) % 2 != 0)
    throw InvalidAngularMomentum("projection parity does not match its momentum");
  if (std::abs(m1.twice) > j1.twice || std::abs(m2.twice) > j2.twice ||
      std::abs(M.twice) > J.twice)
    throw InvalidAngularMomentum("projection exceeds angular momentum");
  if (J.twice < std::abs(j1.twice - j2.twice) || J.twice > j1.twice + j2.twice)
    throw InvalidAngularMomentum("triangle inequality violated");
  if ((j1.twice + j2.twice + J.twice) % 2 != 0)
    throw InvalidAngularMomentum("j1+j2+J is not an integer");

  if (M.twice != m1.twice + m2.twice) return ExactCG{};  // selection rule

  const int a = require_half(j1.twice + j2.twice - J.twice, "j1+j2-J");
  const int b = require_half(j1.twice - j2.twice + J.twice, "j1-j2+J");
  const int c = require_half(-j1.twice + j2.twice + J.twice, "-j1+j2+J");
  const int j1mm1 = require_half(j1.twice - m1.twice, "j1-m1");
  const int j1pm1 = require_half(j1.twice + m1.twice, "j1+m1");
  const int j2mm2 = require_half(j2.twice - m2.twice, "j2-m2");
  const int j2pm2 = require_half(j2.twice + m2.twice, "j2+m2");
  const int JmM = require_half(J.twice - M.twice, "J-M");
  const int JpM = require_half(J.twice + M.twice, "J+M");
  const int Jmj2pm1 = require_half(J.twice - j2.twice + m1.twice, "J-j2+m1");
  const int Jmj1mm2 = require_half(J.twice - j1.twice - m2.twice, "J-j1-m2");

  const int kmin = std::max({0, -Jmj2pm1, -Jmj1mm2});
  const int kmax = std::min({a, j1mm1, j2pm2});
  Rational sum = 0;
  for (int k = kmin; k <= kmax; ++k) {
    Rational den(factorial(k) * factorial(a - k) * factorial(j1mm1 - k) *
                 factorial(j2pm2 - k) * factorial(Jmj2pm1 + k) *
                 factorial(Jmj1mm2 + k));
    Rational term = Rational(1) / den;
    if (k % 2 != 0) term = -term;
    sum += term;
  }
  if (sum == 0) return ExactCG{};

  Rational pref(BigInt(J.twice + 1), 1);  // 2J+1
  pref *= Rational(factorial(a) * factorial(b) * factorial(c),
                   factorial(a + b + c + 1));
  pref *= Rational(factorial(JpM) * factorial(JmM) * factorial(j1mm1) *
                   factorial(j1pm1) * factorial(j2mm2) * factorial(j2pm2));

  const int sign = sum > 0 ? 1 : -1;
  return ExactCG::from_sign_square(sign, pref * sum * sum);
}

// ---------------------------------------------------------------------------
// Chains of dipole-connected Zeeman substates
// ---------------------------------------------------------------------------

enum class ChainKind { Lambda, NPlus, NMinus, V, IsolatedGround, IsolatedExcited };

inline const char* chain_kind_name(ChainKind k) {
  switch (k) {
    case ChainKind::Lambda: return "lambda";
    case ChainKind::NPlus: return "n+";
    case ChainKind::NMinus: return "n-";
    case ChainKind::V: return "v";
    case ChainKind::IsolatedGround: return "isolated-ground";
    case ChainKind::IsolatedExcited: return "isolated-excited";
  }
  return "?";
}

enum class SiteRole { Ground, Excited };

struct ChainSite {
  SiteRole role;
  HalfInt mu;
  int label;  // ground sites odd, excited sites even; N-/V-chains start at 0
};

struct ChainCoupling {
  int ground_label;
  int excited_label;
  int polarization;  // photon spin, +1 or -1
  ExactCG g;
};

/// One connected component of the sigma+/- transition graph of F_g -> F_e.
/// Sites are stored by ascending mu and labeled with the usual convention:
/// grounds odd (1,3,...,2L+1), exciteds even, an extra excited 2L+2 on top
/// for N+ chains, an extra excited 0 below for N- chains, both for V chains.
struct Chain {
  ChainKind kind = ChainKind::Lambda;
  int links = 0;  // L: number of lambda links in the maximal lambda sub-chain
  HalfInt f_g, f_e;
  std::vector<ChainSite> sites;
  std::vector<ChainCoupling> couplings;

  const ChainSite* site_by_label(int label) const {
    for (const auto& s : sites)
      if (s.label == label) return &s;
    return nullptr;
  }

  const ChainCoupling* coupling(int ground_label, int excited_label) const {
    for (const auto& c : couplings)
      if (c.ground_label == ground_label && c.excited_label == excited_label)
        return &c;
    return nullptr;
  }

  /// G^{2j}_{2j-1}, the sigma+ coupling of lambda link j (1 <= j <= L).
  ExactCG lambda_plus(int j) const {
    const auto* c = coupling(2 * j - 1, 2 * j);
    if (!c) throw Error("chain has no coupling " + std::to_string(2 * j - 1) +
                        "->" + std::to_string(2 * j));
    return c->g;
  }

  /// G^{2j}_{2j+1}, the sigma- coupling of lambda link j.
  ExactCG lambda_minus(int j) const {
    const auto* c = coupling(2 * j + 1, 2 * j);
    if (!c) throw Error("chain has no coupling " + std::to_string(2 * j + 1) +
                        "->" + std::to_string(2 * j));
    return c->g;
  }

  bool has_site(SiteRole role, HalfInt mu) const {
    for (const auto& s : sites)
      if (s.role == role && s.mu == mu) return true;
    return false;
  }

  HalfInt ground_mu(int label) const {
    const auto* s = site_by_label(label);
    if (!s || s->role != SiteRole::Ground)
      throw Error("chain has no ground site with label " + std::to_string(label));
    return s->mu;
  }

  /// For N chains, the photon polarization whose occupation is bounded by L.
  int constrained_polarization() const {
    if (kind == ChainKind::NPlus) return +1;
    if (kind == ChainKind::NMinus) return -1;
    throw Error("constrained polarization is defined for N chains only");
  }
};

/// Splits the Zeeman manifold of F_g -> F_e into its connected transition
/// chains under sigma+/- selection rules. Every ground and excited substate
/// lands in exactly one chain; substates untouched by the light are emitted
/// as isolated single-site chains so the partition is exhaustive.
inline std::vector<Chain> decompose_chains(HalfInt f_g, HalfInt f_e) {
  if (f_g.twice < 0 || f_e.twice < 0)
    throw InvalidAngularMomentum("negative total angular momentum");
  if ((f_g.twice + f_e.twice) % 2 != 0)
    throw InvalidAngularMomentum("F_g and F_e differ by a half-integer");
  if (std::abs(f_g.twice - f_e.twice) > 2)
    throw InvalidAngularMomentum("dipole-forbidden transition |F_g-F_e| > 1");

  struct Node {
    SiteRole role;
    HalfInt mu;
  };
  std::vector<Node> nodes;
  for (int t = -f_g.twice; t <= f_g.twice; t += 2)
    nodes.push_back({SiteRole::Ground, HalfInt::from_twice(t)});
  for (int t = -f_e.twice; t <= f_e.twice; t += 2)
    nodes.push_back({SiteRole::Excited, HalfInt::from_twice(t)});

  auto node_index = [&](SiteRole role, HalfInt mu) -> int {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].role == role && nodes[i].mu == mu) return static_cast<int>(i);
    return -1;
  };

  // Edges: ground mu -- excited mu+s for s = +-1, kept only when the
  // coefficient is nonzero (chains split at vanishing couplings).
  struct Edge {
    int ground, excited;
    int pol;
    ExactCG g;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(nodes.size());
  for (int t = -f_g.twice; t <= f_g.twice; t += 2) {
    for (int s : {+1, -1}) {
      const HalfInt mu_g = HalfInt::from_twice(t);
      const HalfInt mu_e = HalfInt::from_twice(t + 2 * s);
      if (std::abs(mu_e.twice) > f_e.twice) continue;
      ExactCG g = clebsch_gordan(f_g, mu_g, HalfInt::whole(1), HalfInt::whole(s),
                                 f_e, mu_e);
      if (g.is_zero()) continue;
      int gi = node_index(SiteRole::Ground, mu_g);
      int ei = node_index(SiteRole::Excited, mu_e);
      edges.push_back({gi, ei, s, g});
      adj[gi].push_back(static_cast<int>(edges.size()) - 1);
      adj[ei].push_back(static_cast<int>(edges.size()) - 1);
    }
  }

  // Connected components by breadth-first walk.
  std::vector<int> component(nodes.size(), -1);
  int n_components = 0;
  for (std::size_t start = 0; start < nodes.size(); ++start) {
    if (component[start] >= 0) continue;
    const int id = n_components++;
    std::vector<int> queue{static_cast<int>(start)};
    component[start] = id;
    while (!queue.empty()) {
      int v = queue.back();
      queue.pop_back();
      for (int ei : adj[v]) {
        for (int w : {edges[ei].ground, edges[ei].excited}) {
          if (component[w] < 0) {
            component[w] = id;
            queue.push_back(w);
          }
        }
      }
    }
  }

  std::vector<Chain> chains(n_components);
  for (auto& ch : chains) {
    ch.f_g = f_g;
    ch.f_e = f_e;
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    chains[component[i]].sites.push_back({nodes[i].role, nodes[i].mu, 0});

  for (auto& ch : chains) {
    std::sort(ch.sites.begin(), ch.sites.end(),
              [](const ChainSite& a, const ChainSite& b) { return a.mu < b.mu; });
    // Along a chain mu strictly alternates ground/excited; labels follow the
    // renumbering convention (first site gets 1 if ground, 0 if excited).
    const int base = ch.sites.front().role == SiteRole::Ground ? 1 : 0;
    for (std::size_t i = 0; i < ch.sites.size(); ++i)
      ch.sites[i].label = base + static_cast<int>(i);

    int n_ground = 0, n_excited = 0;
    for (const auto& s : ch.sites) (s.role == SiteRole::Ground ? n_ground : n_excited)++;

    if (ch.sites.size() == 1) {
      ch.kind = n_ground ? ChainKind::IsolatedGround : ChainKind::IsolatedExcited;
      ch.links = 0;
    } else if (n_ground == n_excited + 1) {
      ch.kind = ChainKind::Lambda;
      ch.links = n_excited;
    } else if (n_ground == n_excited - 1) {
      ch.kind = ChainKind::V;
      ch.links = n_ground - 1;
    } else {
      ch.kind = ch.sites.front().role == SiteRole::Ground ? ChainKind::NPlus
                                                          : ChainKind::NMinus;
      ch.links = n_ground - 1;
    }
  }

  // Attach couplings using the assigned labels.
  for (const auto& e : edges) {
    Chain& ch = chains[component[e.ground]];
    const auto mu_g = nodes[e.ground].mu;
    const auto mu_e = nodes[e.excited].mu;
    int gl = -1, el = -1;
    for (const auto& s : ch.sites) {
      if (s.role == SiteRole::Ground && s.mu == mu_g) gl = s.label;
      if (s.role == SiteRole::Excited && s.mu == mu_e) el = s.label;
    }
    ch.couplings.push_back({gl, el, e.pol, e.g});
  }
  for (auto& ch : chains) {
    std::sort(ch.couplings.begin(), ch.couplings.end(),
              [](const ChainCoupling& a, const ChainCoupling& b) {
                if (a.ground_label != b.ground_label)
                  return a.ground_label < b.ground_label;
                return a.excited_label < b.excited_label;
              });
  }

  // Deterministic report order: larger chains first, then by lowest ground
  // substate; isolated sites trail.
  std::sort(chains.begin(), chains.end(), [](const Chain& a, const Chain& b) {
    if (a.sites.size() != b.sites.size()) return a.sites.size() > b.sites.size();
    auto min_ground = [](const Chain& c) {
      for (const auto& s : c.sites)
        if (s.role == SiteRole::Ground) return s.mu.twice;
      return c.sites.front().mu.twice;
    };
    if (min_ground(a) != min_ground(b)) return min_ground(a) < min_ground(b);
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return chains;
}

}  // namespace qdark
