#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "krausscope/channel.hpp"
#include "krausscope/common.hpp"
#include "krausscope/nonlinear.hpp"
#include "krausscope/rng.hpp"

namespace krausscope {

// Nonseparable probe: one OAM mode per comb frequency.
struct ProbeState {
  struct Pair {
    int omega_index;
    int ell;
    cd alpha;
  };
  std::vector<Pair> pairs;

  int dimension() const { return static_cast<int>(pairs.size()); }

  void validate() const {
    if (pairs.empty()) throw std::domain_error("ProbeState: empty");
    double norm = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      norm += std::norm(pairs[i].alpha);
      for (std::size_t j = i + 1; j < pairs.size(); ++j) {
        if (pairs[i].omega_index == pairs[j].omega_index)
          throw std::domain_error("ProbeState: omega indices must be distinct");
        if (pairs[i].ell == pairs[j].ell)
          throw std::domain_error("ProbeState: one OAM mode per wavelength");
      }
    }
    if (std::abs(norm - 1.0) > 1e-9) throw std::domain_error("ProbeState: coefficients must be normalized");
  }

  static ProbeState equal_superposition(const std::vector<int>& ells) {
    ProbeState p;
    const double a = 1.0 / std::sqrt(static_cast<double>(ells.size()));
    for (std::size_t i = 0; i < ells.size(); ++i)
      p.pairs.push_back({static_cast<int>(i), ells[i], cd(a, 0.0)});
    p.validate();
    return p;
  }
};

// Post-channel coefficients: coeffs(m, n) over (output OAM basis row m,
// probe frequency column n).
struct OutputState {
  Eigen::MatrixXcd coeffs;
  std::vector<int> ell_basis;
  int n_omega = 0;
};

inline OutputState apply_channel(const ProbeState& probe, const KrausMatrix& channel) {
  probe.validate();
  std::string missing;
  for (const auto& p : probe.pairs) {
    if (channel.index_of(p.ell) < 0) missing += (missing.empty() ? "" : ", ") + std::to_string(p.ell);
  }
  if (!missing.empty())
    throw std::domain_error("apply_channel: probe OAM indices missing from channel basis: " + missing);
  OutputState out;
  out.ell_basis = channel.basis;
  out.n_omega = probe.dimension();
  out.coeffs = Eigen::MatrixXcd::Zero(channel.dimension(), out.n_omega);
  for (int n = 0; n < out.n_omega; ++n) {
    const auto& p = probe.pairs[n];
    out.coeffs.col(n) = channel.entries.col(channel.index_of(p.ell)) * p.alpha;
  }
  return out;
}

// One upconversion measurement: a separable (OAM superposition) x (frequency
// superposition) measurement state. Frequency terms are stored by the output
// frequency they select; the physical measurement beam sits at the pump
// mirror point of that frequency. Coefficient lists are held normalized.
struct MeasurementSpec {
  struct OamTerm {
    int ell;
    cd coeff;
  };
  struct FreqTerm {
    int omega_index;
    cd coeff;
  };
  std::vector<OamTerm> oam_terms;
  std::vector<FreqTerm> freq_terms;
  std::string label;

  void normalize() {
    double so = 0.0, sf = 0.0;
    for (const auto& t : oam_terms) so += std::norm(t.coeff);
    for (const auto& t : freq_terms) sf += std::norm(t.coeff);
    if (!(so > 0.0) || !(sf > 0.0)) throw std::domain_error("MeasurementSpec: zero coefficient list");
    for (auto& t : oam_terms) t.coeff /= std::sqrt(so);
    for (auto& t : freq_terms) t.coeff /= std::sqrt(sf);
  }
};

// Crystal and beam parameters shared by every measurement in a run.
struct MeasurementContext {
  CrystalConfig crystal;
  double w1;  // output-state waist
  double w2;  // measurement-state waist
};

// Effective bra selected by a measurement state: OAM term at ell picks output
// row -ell with weight Lambda(|ell|), frequency term at omega_v picks column
// v. Coefficients enter unconjugated (they parametrize the bra directly).
// OAM terms outside the basis fall outside the truncation and contribute
// nothing; frequency labels must exist.
inline Eigen::MatrixXcd effective_projector(const MeasurementSpec& spec, const MeasurementContext& ctx,
                                            const std::vector<int>& ell_basis, int n_omega) {
  Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(static_cast<int>(ell_basis.size()), n_omega);
  for (const auto& ft : spec.freq_terms) {
    if (ft.omega_index < 0 || ft.omega_index >= n_omega)
      throw std::domain_error("effective_projector: frequency index " + std::to_string(ft.omega_index) +
                              " outside the prepared comb");
  }
  for (const auto& ot : spec.oam_terms) {
    const int flipped = -ot.ell;
    int row = -1;
    for (std::size_t i = 0; i < ell_basis.size(); ++i)
      if (ell_basis[i] == flipped) row = static_cast<int>(i);
    if (row < 0) continue;
    const double lam = lambda_coefficient(ctx.crystal, ctx.w1, ctx.w2, ot.ell);
    for (const auto& ft : spec.freq_terms) proj(row, ft.omega_index) += lam * ot.coeff * ft.coeff;
  }
  return proj;
}

struct NoiseSpec {
  enum class Kind { none, poisson };
  Kind kind = Kind::none;
  double n_photons = 0.0;
  std::uint64_t seed = 0;
};

// Detection probability |<psi_eff|psi_out>|^2. Under Poisson noise the count
// with mean n_photons * P is drawn (seeded per label, so the result does not
// depend on evaluation order) and renormalized.
inline double simulate_measurement(const OutputState& out, const MeasurementSpec& spec,
                                   const MeasurementContext& ctx, const NoiseSpec& noise = {}) {
  const Eigen::MatrixXcd proj = effective_projector(spec, ctx, out.ell_basis, out.n_omega);
  const cd amplitude = (proj.array() * out.coeffs.array()).sum();
  double p = std::norm(amplitude);
  if (noise.kind == NoiseSpec::Kind::poisson) {
    if (!(noise.n_photons > 0.0)) throw std::domain_error("simulate_measurement: n_photons must be positive");
    Rng rng(noise.seed ^ fnv1a64(spec.label));
    p = static_cast<double>(rng.poisson(noise.n_photons * p)) / noise.n_photons;
  }
  return p;
}

namespace tomo_detail {

inline std::string mag_label(int u, int v) { return "mag:u" + std::to_string(u) + ":v" + std::to_string(v); }
inline std::string fph_label(int u, int v, int w, bool q90) {
  return "fph:u" + std::to_string(u) + ":v" + std::to_string(v) + ":w" + std::to_string(w) +
         (q90 ? ":q90" : ":q00");
}
inline std::string oph_label(int v, int u, int x, bool q90) {
  return "oph:v" + std::to_string(v) + ":u" + std::to_string(u) + ":x" + std::to_string(x) +
         (q90 ? ":q90" : ":q00");
}

}  // namespace tomo_detail

// Measurement plan: d^2 single-mode magnitude specs, 2(d-1) two-frequency
// specs chaining the columns along the row ref_row, and 2 d (d-1) two-OAM
// specs chaining the rows within every column. Each interference pair is
// issued at relative phase 0 and pi/2, which recover the real and imaginary
// parts of the cross term.
inline std::vector<MeasurementSpec> generate_plan(int d, const std::vector<int>& basis, int ref_row = 0) {
  if (d < 2) throw std::domain_error("generate_plan: dimension must be >= 2");
  if (static_cast<int>(basis.size()) != d) throw std::domain_error("generate_plan: basis size must equal d");
  if (ref_row < 0 || ref_row >= d) throw std::domain_error("generate_plan: reference row out of range");
  std::vector<MeasurementSpec> plan;
  const cd one(1.0, 0.0);
  const cd quarter(0.0, 1.0);  // e^{i pi/2}
  for (int u = 0; u < d; ++u) {
    for (int v = 0; v < d; ++v) {
      MeasurementSpec s;
      s.oam_terms = {{-basis[u], one}};
      s.freq_terms = {{v, one}};
      s.label = tomo_detail::mag_label(u, v);
      s.normalize();
      plan.push_back(std::move(s));
    }
  }
  for (int v = 0; v + 1 < d; ++v) {
    for (bool q90 : {false, true}) {
      MeasurementSpec s;
      s.oam_terms = {{-basis[ref_row], one}};
      s.freq_terms = {{v, one}, {v + 1, q90 ? quarter : one}};
      s.label = tomo_detail::fph_label(ref_row, v, v + 1, q90);
      s.normalize();
      plan.push_back(std::move(s));
    }
  }
  for (int v = 0; v < d; ++v) {
    for (int u = 0; u + 1 < d; ++u) {
      for (bool q90 : {false, true}) {
        MeasurementSpec s;
        s.oam_terms = {{-basis[u], one}, {-basis[u + 1], q90 ? quarter : one}};
        s.freq_terms = {{v, one}};
        s.label = tomo_detail::oph_label(v, u, u + 1, q90);
        s.normalize();
        plan.push_back(std::move(s));
      }
    }
  }
  return plan;
}

// Reweights OAM superpositions by 1/Lambda(|ell|) so the effective projector
// weights come out equal across the terms of each spec.
inline void compensate_plan(std::vector<MeasurementSpec>& plan, const MeasurementContext& ctx) {
  for (auto& spec : plan) {
    if (spec.oam_terms.size() < 2) continue;
    for (auto& t : spec.oam_terms) t.coeff /= lambda_coefficient(ctx.crystal, ctx.w1, ctx.w2, t.ell);
    spec.normalize();
  }
}

struct ReconstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularChannelError : std::runtime_error {
  double sigma_min;
  double sigma_max;
  SingularChannelError(double smin, double smax)
      : std::runtime_error("design_compensation: estimate is numerically singular (sigma_min " +
                           std::to_string(smin) + ", sigma_max " + std::to_string(smax) + ", condition " +
                           std::to_string(smax / (smin > 0 ? smin : 1e-300)) + ")"),
        sigma_min(smin),
        sigma_max(smax) {}
};

struct ReconstructionOptions {
  // Noiseless flag threshold: fraction of the largest |T|.
  double magnitude_threshold_rel = 1e-6;
  // When set, the threshold becomes the 3-sigma shot-noise level instead.
  std::optional<double> n_photons;
};

struct ReconstructionReport {
  KrausMatrix T_est;
  std::pair<int, int> reference_element{0, 0};
  double fidelity = 0.0;  // measurement-fit fidelity in [0, 1]
  std::vector<std::pair<int, int>> flagged_elements;
};

namespace tomo_detail {

struct ParsedLabel {
  enum class Role { magnitude, freq_pair, oam_pair } role;
  int u = -1, v = -1, w = -1;  // role-dependent indices
  bool q90 = false;
};

inline int parse_int_after(const std::string& s, std::size_t& pos, char tag) {
  if (pos >= s.size() || s[pos] != ':' || pos + 1 >= s.size() || s[pos + 1] != tag)
    throw ReconstructionError("reconstruct: malformed label '" + s + "'");
  pos += 2;
  std::size_t end = pos;
  while (end < s.size() && s[end] != ':') ++end;
  const int value = std::stoi(s.substr(pos, end - pos));
  pos = end;
  return value;
}

inline ParsedLabel parse_label(const std::string& label) {
  ParsedLabel p;
  std::size_t pos;
  if (label.rfind("mag", 0) == 0) {
    p.role = ParsedLabel::Role::magnitude;
    pos = 3;
    p.u = parse_int_after(label, pos, 'u');
    p.v = parse_int_after(label, pos, 'v');
    return p;
  }
  if (label.rfind("fph", 0) == 0) {
    p.role = ParsedLabel::Role::freq_pair;
    pos = 3;
    p.u = parse_int_after(label, pos, 'u');
    p.v = parse_int_after(label, pos, 'v');
    p.w = parse_int_after(label, pos, 'w');
  } else if (label.rfind("oph", 0) == 0) {
    p.role = ParsedLabel::Role::oam_pair;
    pos = 3;
    p.v = parse_int_after(label, pos, 'v');
    p.u = parse_int_after(label, pos, 'u');
    p.w = parse_int_after(label, pos, 'x');
  } else {
    throw ReconstructionError("reconstruct: unknown label role in '" + label + "'");
  }
  if (label.compare(pos, std::string::npos, ":q90") == 0)
    p.q90 = true;
  else if (label.compare(pos, std::string::npos, ":q00") != 0)
    throw ReconstructionError("reconstruct: missing quadrature tag in '" + label + "'");
  return p;
}

// Phase-link between two matrix elements extracted from one interference
// pair: theta(b) - theta(a) = delta.
struct PhaseLink {
  std::pair<int, int> a;
  std::pair<int, int> b;
  double delta;
  bool usable;
};

}  // namespace tomo_detail

// Kraus reconstruction from a labeled probability set. Magnitudes come from
// the single-mode probabilities with the Lambda weights and preparation
// coefficients divided out; relative phases from the 0 / pi/2 interference
// pairs; phases are chained through the plan's link graph from the
// largest-magnitude element, which fixes the global-phase gauge (reference
// element real nonnegative). Elements below the magnitude threshold, or
// unreachable through usable links, are flagged and assigned phase 0.
inline ReconstructionReport reconstruct(const std::map<std::string, double>& probs,
                                        const std::vector<MeasurementSpec>& plan,
                                        const std::vector<cd>& alphas, const MeasurementContext& ctx,
                                        const ReconstructionOptions& options = {}) {
  using tomo_detail::ParsedLabel;

  std::string absent;
  for (const auto& spec : plan)
    if (!probs.count(spec.label)) absent += (absent.empty() ? "" : ", ") + spec.label;
  if (!absent.empty()) throw ReconstructionError("reconstruct: missing measurements: " + absent);

  // Recover the dimension and OAM basis from the magnitude specs.
  int d = 0;
  for (const auto& spec : plan) {
    const auto p = tomo_detail::parse_label(spec.label);
    if (p.role == ParsedLabel::Role::magnitude) d = std::max(d, std::max(p.u, p.v) + 1);
  }
  if (d < 2) throw ReconstructionError("reconstruct: plan has no usable magnitude specs");
  if (static_cast<int>(alphas.size()) != d)
    throw ReconstructionError("reconstruct: need one preparation coefficient per frequency");
  for (const auto& a : alphas)
    if (!(std::abs(a) > 0.0)) throw ReconstructionError("reconstruct: preparation coefficients must be nonzero");

  std::vector<int> basis(d, 0);
  std::vector<bool> basis_seen(d, false);
  Eigen::MatrixXd magnitude = Eigen::MatrixXd::Constant(d, d, -1.0);
  for (const auto& spec : plan) {
    const auto p = tomo_detail::parse_label(spec.label);
    if (p.role != ParsedLabel::Role::magnitude) continue;
    if (spec.oam_terms.size() != 1 || spec.freq_terms.size() != 1)
      throw ReconstructionError("reconstruct: magnitude spec '" + spec.label + "' is not single-mode");
    basis[p.u] = -spec.oam_terms[0].ell;
    basis_seen[p.u] = true;
    const double lam = lambda_coefficient(ctx.crystal, ctx.w1, ctx.w2, spec.oam_terms[0].ell);
    const double weight = lam * std::abs(spec.oam_terms[0].coeff) * std::abs(spec.freq_terms[0].coeff) *
                          std::abs(alphas[p.v]);
    magnitude(p.u, p.v) = std::sqrt(std::max(0.0, probs.at(spec.label))) / weight;
  }
  for (int u = 0; u < d; ++u) {
    if (!basis_seen[u]) throw ReconstructionError("reconstruct: no magnitude spec for row " + std::to_string(u));
    for (int v = 0; v < d; ++v)
      if (magnitude(u, v) < 0.0)
        throw ReconstructionError("reconstruct: magnitude grid incomplete at (" + std::to_string(u) + "," +
                                  std::to_string(v) + ")");
  }

  const double max_mag = magnitude.maxCoeff();
  if (!(max_mag > 0.0))
    throw ReconstructionError(
        "reconstruct: all magnitudes vanish; re-plan with a different reference or larger basis");
  double threshold = options.magnitude_threshold_rel * max_mag;
  if (options.n_photons) {
    // 3-sigma of shot noise on the count scale, mapped through the smallest
    // magnitude weight so it is conservative for every element.
    double min_weight = std::numeric_limits<double>::infinity();
    for (int u = 0; u < d; ++u) {
      const double lam = lambda_coefficient(ctx.crystal, ctx.w1, ctx.w2, basis[u]);
      for (int v = 0; v < d; ++v) min_weight = std::min(min_weight, lam * std::abs(alphas[v]));
    }
    threshold = 3.0 / std::sqrt(*options.n_photons) / min_weight;
  }

  // Collect interference pairs: root label -> (q00 prob, q90 prob, spec).
  struct PairProbe {
    double p0 = -1.0, p90 = -1.0;
    const MeasurementSpec* spec0 = nullptr;
    ParsedLabel parsed;
  };
  std::map<std::string, PairProbe> pairs;
  for (const auto& spec : plan) {
    const auto p = tomo_detail::parse_label(spec.label);
    if (p.role == ParsedLabel::Role::magnitude) continue;
    const std::string root = spec.label.substr(0, spec.label.size() - 4);
    auto& slot = pairs[root];
    slot.parsed = p;
    if (p.q90) {
      slot.p90 = probs.at(spec.label);
    } else {
      slot.p0 = probs.at(spec.label);
      slot.spec0 = &spec;
    }
  }

  std::vector<tomo_detail::PhaseLink> links;
  for (const auto& [root, probe] : pairs) {
    if (probe.p0 < 0.0 || probe.p90 < 0.0 || probe.spec0 == nullptr)
      throw ReconstructionError("reconstruct: interference pair '" + root + "' is missing a quadrature");
    const auto& spec = *probe.spec0;
    std::pair<int, int> ea, eb;
    cd coeff_a, coeff_b;
    double lam_a = 1.0, lam_b = 1.0;
    if (probe.parsed.role == ParsedLabel::Role::freq_pair) {
      ea = {probe.parsed.u, probe.parsed.v};
      eb = {probe.parsed.u, probe.parsed.w};
      if (spec.oam_terms.size() != 1 || spec.freq_terms.size() != 2)
        throw ReconstructionError("reconstruct: freq-pair spec '" + spec.label + "' malformed");
      lam_a = lam_b = lambda_coefficient(ctx.crystal, ctx.w1, ctx.w2, spec.oam_terms[0].ell);
      coeff_a = spec.oam_terms[0].coeff * spec.freq_terms[0].coeff;
      coeff_b = spec.oam_terms[0].coeff * spec.freq_terms[1].coeff;
    } else {
      ea = {probe.parsed.u, probe.parsed.v};
      eb = {probe.parsed.w, probe.parsed.v};
      if (spec.oam_terms.size() != 2 || spec.freq_terms.size() != 1)
        throw ReconstructionError("reconstruct: oam-pair spec '" + spec.label + "' malformed");
      lam_a = lambda_coefficient(ctx.crystal, ctx.w1, ctx.w2, spec.oam_terms[0].ell);
      lam_b = lambda_coefficient(ctx.crystal, ctx.w1, ctx.w2, spec.oam_terms[1].ell);
      coeff_a = spec.oam_terms[0].coeff * spec.freq_terms[0].coeff;
      coeff_b = spec.oam_terms[1].coeff * spec.freq_terms[0].coeff;
    }
    const cd weight_a = lam_a * coeff_a * alphas[ea.second];
    const cd weight_b = lam_b * coeff_b * alphas[eb.second];
    const double mag_a = std::abs(weight_a) * magnitude(ea.first, ea.second);
    const double mag_b = std::abs(weight_b) * magnitude(eb.first, eb.second);
    // P(0)  = S + 2 Re zeta, P(pi/2) = S - 2 Im zeta,
    // zeta = conj(A T_a) B T_b, S = |A T_a|^2 + |B T_b|^2.
    const double s = mag_a * mag_a + mag_b * mag_b;
    const cd zeta((probe.p0 - s) / 2.0, -(probe.p90 - s) / 2.0);
    const cd cross = zeta / (std::conj(weight_a) * weight_b);  // conj(T_a) T_b
    tomo_detail::PhaseLink link;
    link.a = ea;
    link.b = eb;
    link.delta = std::arg(cross);
    link.usable = magnitude(ea.first, ea.second) > threshold && magnitude(eb.first, eb.second) > threshold &&
                  std::abs(zeta) > 0.0;
    links.push_back(link);
  }

  // Chain phases by BFS from the largest-magnitude element (the gauge
  // reference, adaptive rather than fixed at (0,0)).
  int ref_u = 0, ref_v = 0;
  magnitude.maxCoeff(&ref_u, &ref_v);
  std::vector<double> theta(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<bool> reached(static_cast<std::size_t>(d) * d, false);
  const auto node = [d](std::pair<int, int> e) { return static_cast<std::size_t>(e.first) * d + e.second; };
  reached[node({ref_u, ref_v})] = true;
  std::vector<std::size_t> frontier{node({ref_u, ref_v})};
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (const auto& link : links) {
      if (!link.usable) continue;
      const std::size_t na = node(link.a);
      const std::size_t nb = node(link.b);
      for (std::size_t f : frontier) {
        if (na == f && !reached[nb]) {
          theta[nb] = theta[na] + link.delta;
          reached[nb] = true;
          next.push_back(nb);
        } else if (nb == f && !reached[na]) {
          theta[na] = theta[nb] - link.delta;
          reached[na] = true;
          next.push_back(na);
        }
      }
    }
    frontier = std::move(next);
  }

  ReconstructionReport report;
  report.T_est.basis = basis;
  report.T_est.waist = ctx.w1;
  report.T_est.entries = Eigen::MatrixXcd::Zero(d, d);
  report.reference_element = {ref_u, ref_v};
  for (int u = 0; u < d; ++u) {
    for (int v = 0; v < d; ++v) {
      const std::size_t n = node({u, v});
      const bool flagged = magnitude(u, v) <= threshold || !reached[n];
      if (flagged) {
        report.flagged_elements.push_back({u, v});
        report.T_est.entries(u, v) = cd(magnitude(u, v), 0.0);  // phase 0
      } else {
        report.T_est.entries(u, v) = std::polar(magnitude(u, v), theta[n]);
      }
    }
  }

  // Fit fidelity: Bhattacharyya overlap between the measured probabilities
  // and the probabilities the estimate reproduces.
  ProbeState probe_est;
  for (int n = 0; n < d; ++n) probe_est.pairs.push_back({n, basis[n], alphas[n]});
  double alpha_norm = 0.0;
  for (const auto& a : alphas) alpha_norm += std::norm(a);
  for (auto& p : probe_est.pairs) p.alpha /= std::sqrt(alpha_norm);
  const OutputState out_est = apply_channel(probe_est, report.T_est);
  double dot = 0.0, nm = 0.0, np = 0.0;
  for (const auto& spec : plan) {
    const double pm = std::max(0.0, probs.at(spec.label));
    // Un-normalized alphas are handled by scaling predictions back up.
    const double pp = simulate_measurement(out_est, spec, ctx) * alpha_norm;
    dot += std::sqrt(pm * pp);
    nm += pm;
    np += pp;
  }
  report.fidelity = (nm > 0.0 && np > 0.0) ? dot / std::sqrt(nm * np) : 0.0;
  return report;
}

// Inverse of the unitary polar factor: T = U H with H = sqrt(T^dag T) >= 0,
// returns U^dag, so design_compensation(T) * T = H is positive semidefinite
// Hermitian. Throws SingularChannelError with condition diagnostics when the
// estimate has a numerically vanishing singular value.
inline KrausMatrix design_compensation(const KrausMatrix& estimate, double sv_threshold_rel = 1e-12) {
  if (estimate.entries.rows() != estimate.entries.cols())
    throw std::domain_error("design_compensation: estimate must be square");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(estimate.entries, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > sv_threshold_rel * smax)) throw SingularChannelError(smin, smax);
  KrausMatrix comp;
  comp.entries = svd.matrixV() * svd.matrixU().adjoint();
  comp.basis = estimate.basis;
  comp.waist = estimate.waist;
  return comp;
}

}  // namespace krausscope
