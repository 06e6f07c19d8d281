#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "krausscope/channel.hpp"
#include "krausscope/common.hpp"
#include "krausscope/design.hpp"
#include "krausscope/modes.hpp"
#include "krausscope/nonlinear.hpp"
#include "krausscope/oracle.hpp"
#include "krausscope/serialize.hpp"
#include "krausscope/tomography.hpp"

namespace krausscope {

// Exit codes shared by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailure = 2;
inline constexpr int kExitToleranceBreach = 3;
inline constexpr int kExitReconstructionFailure = 4;

namespace experiment_detail {

inline std::filesystem::path ensure_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// |tr(A^dag B)| / (||A|| ||B||), gauge-invariant overlap in [0, 1].
inline double matrix_fidelity(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return 0.0;
  return std::abs((a.adjoint() * b).trace()) / (na * nb);
}

// min over global phase of ||A - e^{i phi} B||_F.
inline double gauge_min_frobenius(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const cd overlap = (b.adjoint() * a).trace();
  const cd phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : cd(1.0, 0.0);
  return (a - phase * b).norm();
}

}  // namespace experiment_detail

// ---------------------------------------------------------------------------
// verify-kernel: closed-form thin-crystal overlaps against the 4-D quadrature
// oracle, selection-rule zeros, and the Lambda(|l|) table. All comparisons are
// on l = 0 normalized ratios, matching how probabilities are reported.
// ---------------------------------------------------------------------------

struct VerifyKernelResult {
  bool tolerances_met = false;
  double beta = 0.0;
  double max_matched_rel_err = 0.0;
  double max_selection_ratio = 0.0;
  double max_lambda_rel_err = 0.0;
};

inline VerifyKernelResult run_verify_kernel(const ExperimentConfig& cfg, bool quiet = false) {
  const auto dir = experiment_detail::ensure_out_dir(cfg);
  const CrystalConfig crystal = cfg.crystal();
  const int ell_max = cfg.verify.ell_max;
  const QuadratureSpec quad = cfg.oracle_quadrature;

  const AzimuthalMode zero_out(0, cfg.w1);
  const AzimuthalMode zero_mea(0, cfg.w2);
  const cd oracle_zero = quadrature_overlap(crystal, zero_out, zero_mea, quad);
  const double closed_zero = overlap_closed_form(crystal, zero_out, zero_mea).value.real();

  struct Cell {
    int ell_out, ell_mea;
    double closed_norm, oracle_norm, rel_err;
    bool matched;
  };
  const int span = 2 * ell_max + 1;
  std::vector<Cell> cells(static_cast<std::size_t>(span) * span);
  parallel_for(cells.size(), [&](std::size_t idx) {
    const int ell_out = static_cast<int>(idx) / span - ell_max;
    const int ell_mea = static_cast<int>(idx) % span - ell_max;
    const AzimuthalMode mo(ell_out, cfg.w1);
    const AzimuthalMode mm(ell_mea, cfg.w2);
    const double closed_norm = overlap_closed_form(crystal, mo, mm).value.real() / closed_zero;
    const double oracle_norm = (quadrature_overlap(crystal, mo, mm, quad) / oracle_zero).real();
    const bool matched = (ell_out == -ell_mea);
    double rel_err = 0.0;
    if (matched) rel_err = std::abs(oracle_norm - closed_norm) / std::abs(closed_norm);
    cells[idx] = {ell_out, ell_mea, closed_norm, oracle_norm, rel_err, matched};
  });

  VerifyKernelResult result;
  result.beta = thin_crystal_beta(crystal);
  std::string pair_csv = "ell_out,ell_mea,closed_over_zero,oracle_over_zero,rel_err\n";
  for (const auto& c : cells) {
    pair_csv += std::to_string(c.ell_out) + "," + std::to_string(c.ell_mea) + "," +
                serialize_detail::format_double(c.closed_norm) + "," +
                serialize_detail::format_double(c.oracle_norm) + "," +
                serialize_detail::format_double(c.rel_err) + "\n";
    if (c.matched)
      result.max_matched_rel_err = std::max(result.max_matched_rel_err, c.rel_err);
    else
      result.max_selection_ratio = std::max(result.max_selection_ratio, std::abs(c.oracle_norm));
  }
  write_text_file(dir / "kernel_pairs.csv", pair_csv);

  // Lambda table: closed-form law, the value recovered from the oracle ratio,
  // and the symmetric-configuration reference (2 + alpha)^-|l| when it applies.
  const bool symmetric = (cfg.n1 == cfg.n2) && (cfg.lambda1 == cfg.lambda2) && (cfg.w1 == cfg.w2);
  const double alpha = cfg.w1 * cfg.w1 / (cfg.w_c * cfg.w_c);
  std::string lambda_csv = "ell,lambda,lambda_from_oracle,lambda_symmetric_reference\n";
  for (int ell = 0; ell <= ell_max; ++ell) {
    const double lam = lambda_coefficient(crystal, cfg.w1, cfg.w2, ell);
    const cd m_ell = quadrature_overlap(crystal, AzimuthalMode(ell, cfg.w1), AzimuthalMode(-ell, cfg.w2), quad);
    const double lam_oracle = lambda_from_overlap_ratio(m_ell, oracle_zero, ell, cfg.w1, cfg.w2);
    result.max_lambda_rel_err = std::max(result.max_lambda_rel_err, std::abs(lam_oracle - lam) / lam);
    lambda_csv += std::to_string(ell) + "," + serialize_detail::format_double(lam) + "," +
                  serialize_detail::format_double(lam_oracle) + ",";
    if (symmetric) lambda_csv += serialize_detail::format_double(std::pow(2.0 + alpha, -ell));
    lambda_csv += "\n";
  }
  write_text_file(dir / "lambda_table.csv", lambda_csv);

  result.tolerances_met = result.max_matched_rel_err < cfg.verify.tolerance_rel &&
                          result.max_selection_ratio < cfg.verify.selection_tolerance &&
                          result.max_lambda_rel_err < cfg.verify.tolerance_rel;

  ordered_json summary;
  summary["beta"] = result.beta;
  summary["ell_max"] = ell_max;
  summary["tolerance_rel"] = cfg.verify.tolerance_rel;
  summary["selection_tolerance"] = cfg.verify.selection_tolerance;
  summary["max_matched_rel_err"] = result.max_matched_rel_err;
  summary["max_selection_ratio"] = result.max_selection_ratio;
  summary["max_lambda_rel_err"] = result.max_lambda_rel_err;
  summary["tolerances_met"] = result.tolerances_met;
  write_json_file(dir / "verify_summary.json", summary);

  if (!quiet) {
    std::cout << "verify-kernel: beta " << result.beta << ", matched max rel err " << result.max_matched_rel_err
              << ", selection max " << result.max_selection_ratio << ", lambda max rel err "
              << result.max_lambda_rel_err << (result.tolerances_met ? " [ok]" : " [tolerance breach]")
              << "\n";
  }
  return result;
}

// ---------------------------------------------------------------------------
// simulate-channel: build the configured channel and write its artifacts.
// ---------------------------------------------------------------------------

struct ChannelBuild {
  KrausMatrix kraus;
  std::optional<PhaseScreen> screen;
};

inline ChannelBuild build_channel(const ExperimentConfig& cfg) {
  ChannelBuild out;
  const double waist = cfg.screen_waist.value_or(cfg.w1);
  switch (cfg.channel.type) {
    case ChannelSource::Type::kolmogorov:
      out.screen = kolmogorov_screen(cfg.channel.r0, cfg.channel.side, cfg.channel.dx, cfg.channel.seed);
      out.kraus = kraus_from_screen(*out.screen, cfg.basis, waist);
      break;
    case ChannelSource::Type::zernike:
      out.screen =
          zernike_screen(cfg.channel.zernike_terms, cfg.channel.side, cfg.channel.dx, cfg.channel.aperture_radius);
      out.kraus = kraus_from_screen(*out.screen, cfg.basis, waist);
      break;
    case ChannelSource::Type::random_unitary: {
      out.kraus = random_unitary_channel(cfg.dimension, cfg.channel.seed, waist);
      out.kraus.basis = cfg.basis;
      break;
    }
    case ChannelSource::Type::file:
      out.kraus = kraus_from_json(read_json_file(cfg.channel.path));
      break;
  }
  if (out.kraus.dimension() != cfg.dimension)
    throw ConfigError("channel dimension does not match the configured dimension");
  return out;
}

inline int run_simulate_channel(const ExperimentConfig& cfg, bool quiet = false) {
  const auto dir = experiment_detail::ensure_out_dir(cfg);
  const ChannelBuild built = build_channel(cfg);
  write_json_file(dir / "channel_kraus.json", kraus_to_json(built.kraus));
  if (built.screen) write_phase_screen(dir / "phase_screen.kscreen", *built.screen);
  ordered_json diag;
  ordered_json norms = ordered_json::array();
  for (int c = 0; c < built.kraus.dimension(); ++c) norms.push_back(built.kraus.entries.col(c).norm());
  diag["column_norms"] = std::move(norms);
  diag["basis"] = built.kraus.basis;
  write_json_file(dir / "channel_diagnostics.json", diag);
  if (!quiet) std::cout << "simulate-channel: wrote " << (dir / "channel_kraus.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run-tomography: full pipeline. Ground truth -> plan -> simulated
// probabilities -> reconstruction -> compensation -> fidelity summary.
// ---------------------------------------------------------------------------

inline int run_tomography(const ExperimentConfig& cfg, bool quiet = false) {
  const auto dir = experiment_detail::ensure_out_dir(cfg);
  const MeasurementContext ctx = cfg.context();
  const ChannelBuild built = build_channel(cfg);
  write_json_file(dir / "channel_truth.json", kraus_to_json(built.kraus));
  if (built.screen) write_phase_screen(dir / "phase_screen.kscreen", *built.screen);

  ProbeState probe = ProbeState::equal_superposition(built.kraus.basis);
  std::vector<cd> alphas(cfg.dimension);
  if (cfg.alphas) {
    for (int n = 0; n < cfg.dimension; ++n) {
      probe.pairs[n].alpha = (*cfg.alphas)[n];
      alphas[n] = (*cfg.alphas)[n];
    }
    probe.validate();
  } else {
    for (int n = 0; n < cfg.dimension; ++n) alphas[n] = probe.pairs[n].alpha;
  }

  std::vector<MeasurementSpec> plan = generate_plan(cfg.dimension, built.kraus.basis);
  compensate_plan(plan, ctx);
  write_text_file(dir / "plan.csv", plan_to_csv(plan));

  const OutputState out = apply_channel(probe, built.kraus);
  NoiseSpec noise;
  noise.kind = cfg.noise.kind;
  noise.n_photons = cfg.noise.n_photons;
  noise.seed = cfg.noise_seed();

  std::vector<double> values(plan.size());
  parallel_for(plan.size(), [&](std::size_t i) { values[i] = simulate_measurement(out, plan[i], ctx, noise); });
  std::map<std::string, double> probs;
  for (std::size_t i = 0; i < plan.size(); ++i) probs[plan[i].label] = values[i];
  write_text_file(dir / "probabilities.csv", probabilities_to_csv(probs));

  ReconstructionOptions options;
  if (cfg.noise.kind == NoiseSpec::Kind::poisson) options.n_photons = cfg.noise.n_photons;
  ReconstructionReport report;
  try {
    report = reconstruct(probs, plan, alphas, ctx, options);
    const KrausMatrix compensation = design_compensation(report.T_est);
    write_json_file(dir / "reconstruction.json", report_to_json(report));
    write_json_file(dir / "compensation.json", kraus_to_json(compensation));

    ordered_json summary;
    summary["fit_fidelity"] = report.fidelity;
    summary["reference_element"] =
        ordered_json::array({report.reference_element.first, report.reference_element.second});
    summary["flagged_count"] = report.flagged_elements.size();
    const Eigen::MatrixXcd& truth = built.kraus.entries;
    summary["fidelity_vs_truth"] = experiment_detail::matrix_fidelity(truth, report.T_est.entries);
    summary["frobenius_error_gauge_min"] =
        experiment_detail::gauge_min_frobenius(report.T_est.entries, truth);
    const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(cfg.dimension, cfg.dimension);
    summary["fidelity_raw_channel"] = experiment_detail::matrix_fidelity(identity, truth);
    summary["fidelity_compensated_channel"] =
        experiment_detail::matrix_fidelity(identity, compensation.entries * truth);
    write_json_file(dir / "fidelity_summary.json", summary);
    if (!quiet)
      std::cout << "run-tomography: fit fidelity " << report.fidelity << ", fidelity vs truth "
                << summary["fidelity_vs_truth"].get<double>() << "\n";
  } catch (const ReconstructionError& e) {
    ordered_json diag;
    diag["error"] = e.what();
    write_json_file(dir / "reconstruction_failure.json", diag);
    if (!quiet) std::cout << "run-tomography: reconstruction failed: " << e.what() << "\n";
    return kExitReconstructionFailure;
  } catch (const SingularChannelError& e) {
    ordered_json diag;
    diag["error"] = e.what();
    diag["sigma_min"] = e.sigma_min;
    diag["sigma_max"] = e.sigma_max;
    write_json_file(dir / "reconstruction_failure.json", diag);
    if (!quiet) std::cout << "run-tomography: compensation failed: " << e.what() << "\n";
    return kExitReconstructionFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// design: feasibility numbers from the comb and SLM parameters.
// ---------------------------------------------------------------------------

inline int run_design(const ExperimentConfig& cfg, bool quiet = false) {
  const auto dir = experiment_detail::ensure_out_dir(cfg);
  const CombSpec comb(cfg.design.nominal_wavelength, cfg.design.repetition_frequency,
                      cfg.design.component_spacing_multiple);
  const double lines = grating_line_count(comb);
  const double delta_lambda = comb.nominal_wavelength / lines;
  const double beam_size_mm = lines / cfg.design.grating_lines_per_mm;
  const int budget = slm_pixel_budget(cfg.design.slm_width_pixels, cfg.dimension);

  ordered_json j;
  j["grating_line_count"] = lines;
  j["delta_lambda"] = delta_lambda;
  j["component_spacing_hz"] = cfg.design.component_spacing_multiple * cfg.design.repetition_frequency;
  j["beam_size_mm"] = beam_size_mm;
  j["slm_pixels_per_beam"] = budget;
  j["pixels_adequate"] = budget >= cfg.design.min_pixels_per_beam;
  if (budget < cfg.design.min_pixels_per_beam) j["note"] = "consider multiple SLMs";
  write_json_file(dir / "design_report.json", j);
  if (!quiet)
    std::cout << "design: grating lines " << lines << ", beam " << beam_size_mm << " mm, " << budget
              << " px/beam\n";
  return kExitOk;
}

}  // namespace krausscope
