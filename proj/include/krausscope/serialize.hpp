#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "krausscope/channel.hpp"
#include "krausscope/common.hpp"
#include "krausscope/nonlinear.hpp"
#include "krausscope/quadrature.hpp"
#include "krausscope/tomography.hpp"

namespace krausscope {

using ordered_json = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON primitives. Complex numbers serialize as [re, im] arrays.
// ---------------------------------------------------------------------------

inline ordered_json complex_to_json(cd z) { return ordered_json::array({z.real(), z.imag()}); }

inline cd complex_from_json(const ordered_json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected a [re, im] pair");
  return cd(j[0].get<double>(), j[1].get<double>());
}

inline ordered_json matrix_to_json(const Eigen::MatrixXcd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXcd matrix_from_json(const ordered_json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected a nonempty matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw ConfigError("ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[r][c]);
  }
  return m;
}

inline ordered_json kraus_to_json(const KrausMatrix& k) {
  ordered_json j;
  j["basis"] = k.basis;
  j["waist"] = k.waist;
  j["entries"] = matrix_to_json(k.entries);
  return j;
}

inline KrausMatrix kraus_from_json(const ordered_json& j) {
  KrausMatrix k;
  k.basis = j.at("basis").get<std::vector<int>>();
  k.waist = j.at("waist").get<double>();
  k.entries = matrix_from_json(j.at("entries"));
  if (k.entries.rows() != static_cast<Eigen::Index>(k.basis.size()) || k.entries.rows() != k.entries.cols())
    throw ConfigError("Kraus matrix shape does not match its basis");
  return k;
}

inline void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

inline ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return ordered_json::parse(in);
}

// ---------------------------------------------------------------------------
// Phase screen file: one JSON header line, then the raw little-endian float64
// grid, row-major.
// ---------------------------------------------------------------------------

inline void write_phase_screen(const std::filesystem::path& path, const PhaseScreen& screen) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  ordered_json header;
  header["side"] = screen.side;
  header["dx"] = screen.dx;
  if (screen.r0 > 0.0)
    header["r0"] = screen.r0;
  else
    header["r0"] = nullptr;
  header["seed"] = screen.seed;
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(screen.grid.data()),
            static_cast<std::streamsize>(screen.grid.size() * sizeof(double)));
}

inline PhaseScreen read_phase_screen(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) throw ConfigError("phase screen file: missing header");
  const ordered_json header = ordered_json::parse(header_line);
  PhaseScreen screen;
  screen.side = header.at("side").get<int>();
  screen.dx = header.at("dx").get<double>();
  screen.r0 = header.at("r0").is_null() ? -1.0 : header.at("r0").get<double>();
  screen.seed = header.at("seed").get<std::uint64_t>();
  screen.grid.resize(static_cast<std::size_t>(screen.side) * screen.side);
  in.read(reinterpret_cast<char*>(screen.grid.data()),
          static_cast<std::streamsize>(screen.grid.size() * sizeof(double)));
  if (!in) throw ConfigError("phase screen file: truncated grid payload");
  return screen;
}

// ---------------------------------------------------------------------------
// CSV: plans are (label, oam_terms, freq_terms); term lists are
// semicolon-joined index:re:im triples. Probability sets are (label,
// probability).
// ---------------------------------------------------------------------------

namespace serialize_detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string encode_terms(const std::vector<MeasurementSpec::OamTerm>& terms) {
  std::string s;
  for (const auto& t : terms) {
    if (!s.empty()) s += ';';
    s += std::to_string(t.ell) + ":" + format_double(t.coeff.real()) + ":" + format_double(t.coeff.imag());
  }
  return s;
}

inline std::string encode_terms(const std::vector<MeasurementSpec::FreqTerm>& terms) {
  std::string s;
  for (const auto& t : terms) {
    if (!s.empty()) s += ';';
    s += std::to_string(t.omega_index) + ":" + format_double(t.coeff.real()) + ":" +
         format_double(t.coeff.imag());
  }
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Term>
inline std::vector<Term> decode_terms(const std::string& field) {
  std::vector<Term> terms;
  if (field.empty()) return terms;
  for (const auto& item : split(field, ';')) {
    const auto bits = split(item, ':');
    if (bits.size() != 3) throw ConfigError("malformed term field: " + field);
    Term t;
    if constexpr (std::is_same_v<Term, MeasurementSpec::OamTerm>)
      t.ell = std::stoi(bits[0]);
    else
      t.omega_index = std::stoi(bits[0]);
    t.coeff = cd(std::stod(bits[1]), std::stod(bits[2]));
    terms.push_back(t);
  }
  return terms;
}

}  // namespace serialize_detail

inline std::string plan_to_csv(const std::vector<MeasurementSpec>& plan) {
  std::string csv = "label,oam_terms,freq_terms\n";
  for (const auto& spec : plan) {
    csv += spec.label + "," + serialize_detail::encode_terms(spec.oam_terms) + "," +
           serialize_detail::encode_terms(spec.freq_terms) + "\n";
  }
  return csv;
}

inline std::vector<MeasurementSpec> plan_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "label,oam_terms,freq_terms")
    throw ConfigError("plan CSV: bad header");
  std::vector<MeasurementSpec> plan;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = serialize_detail::split(line, ',');
    if (fields.size() != 3) throw ConfigError("plan CSV: bad row: " + line);
    MeasurementSpec spec;
    spec.label = fields[0];
    spec.oam_terms = serialize_detail::decode_terms<MeasurementSpec::OamTerm>(fields[1]);
    spec.freq_terms = serialize_detail::decode_terms<MeasurementSpec::FreqTerm>(fields[2]);
    plan.push_back(std::move(spec));
  }
  return plan;
}

inline std::string probabilities_to_csv(const std::map<std::string, double>& probs) {
  std::string csv = "label,probability\n";
  for (const auto& [label, p] : probs) csv += label + "," + serialize_detail::format_double(p) + "\n";
  return csv;
}

inline std::map<std::string, double> probabilities_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "label,probability") throw ConfigError("probability CSV: bad header");
  std::map<std::string, double> probs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = serialize_detail::split(line, ',');
    if (fields.size() != 2) throw ConfigError("probability CSV: bad row: " + line);
    probs[fields[0]] = std::stod(fields[1]);
  }
  return probs;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiment configuration. Strictly validated: unknown keys are rejected at
// every level before any computation runs.
// ---------------------------------------------------------------------------

struct ChannelSource {
  enum class Type { kolmogorov, zernike, random_unitary, file };
  Type type = Type::random_unitary;
  // kolmogorov
  double r0 = 0.1;
  int side = 256;
  double dx = 4e-4;
  // zernike
  std::vector<ZernikeTerm> zernike_terms;
  double aperture_radius = 0.05;
  // file
  std::string path;
  // kolmogorov / random-unitary
  std::uint64_t seed = 1;
};

struct NoiseConfig {
  NoiseSpec::Kind kind = NoiseSpec::Kind::none;
  double n_photons = 1e6;
  std::optional<std::uint64_t> seed;
};

struct DesignConfig {
  double nominal_wavelength = 1e-6;
  double repetition_frequency = 1e9;
  int component_spacing_multiple = 2;
  int slm_width_pixels = 1000;
  double grating_lines_per_mm = 3000.0;
  int min_pixels_per_beam = 100;
};

struct VerifyConfig {
  int ell_max = 3;
  double tolerance_rel = 1e-6;        // closed form vs oracle, matched pairs
  double selection_tolerance = 1e-10;  // |M| / M(0,0) for mismatched pairs
};

struct ExperimentConfig {
  int dimension = 3;
  std::vector<int> basis{-1, 0, 1};
  double w1 = 1e-5;
  double w2 = 1e-5;
  double w_c = 2e-6;
  double lambda1 = 1e-6;
  double lambda2 = 1.064e-6;
  double n1 = 1.50;
  double n2 = 1.52;
  double crystal_length = 1e-7;
  ChannelSource channel;
  NoiseConfig noise;
  std::string output_dir = "out";
  std::optional<std::vector<cd>> alphas;
  std::optional<double> screen_waist;  // waist for screen-derived channels; defaults to w1
  QuadratureSpec oracle_quadrature{QuadratureSpec::Scheme::gauss_hermite, 32, 6.0, 1e-8};
  VerifyConfig verify;
  DesignConfig design;

  CrystalConfig crystal() const { return CrystalConfig(lambda1, lambda2, n1, n2, crystal_length, w_c); }
  MeasurementContext context() const { return MeasurementContext{crystal(), w1, w2}; }
  std::uint64_t noise_seed() const {
    return noise.seed ? *noise.seed : (channel.seed ^ 0xD1B54A32D192ED03ull);
  }
};

namespace serialize_detail {

inline void reject_unknown_keys(const ordered_json& obj, const std::vector<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || (k == key);
    if (!ok) throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

}  // namespace serialize_detail

inline ExperimentConfig parse_experiment_config(const ordered_json& j) {
  using serialize_detail::reject_unknown_keys;
  if (!j.is_object()) throw ConfigError("config: root must be an object");
  reject_unknown_keys(j,
                      {"dimension", "basis", "waists", "crystal", "channel", "noise", "output_dir", "alphas",
                       "screen_waist", "oracle", "verify", "design"},
                      "root");
  ExperimentConfig cfg;
  try {
    cfg.dimension = j.at("dimension").get<int>();
    cfg.basis = j.at("basis").get<std::vector<int>>();
    if (cfg.dimension < 2) throw ConfigError("config: dimension must be >= 2");
    if (static_cast<int>(cfg.basis.size()) != cfg.dimension)
      throw ConfigError("config: basis size must equal dimension");

    const auto& waists = j.at("waists");
    reject_unknown_keys(waists, {"w1", "w2", "w_c"}, "waists");
    cfg.w1 = waists.at("w1").get<double>();
    cfg.w2 = waists.at("w2").get<double>();
    cfg.w_c = waists.at("w_c").get<double>();

    const auto& crystal = j.at("crystal");
    reject_unknown_keys(crystal, {"lambda1", "lambda2", "n1", "n2", "length"}, "crystal");
    cfg.lambda1 = crystal.at("lambda1").get<double>();
    cfg.lambda2 = crystal.at("lambda2").get<double>();
    cfg.n1 = crystal.at("n1").get<double>();
    cfg.n2 = crystal.at("n2").get<double>();
    cfg.crystal_length = crystal.at("length").get<double>();
    cfg.crystal();  // runs the physical validity checks

    const auto& channel = j.at("channel");
    const std::string type = channel.at("type").get<std::string>();
    if (type == "kolmogorov") {
      reject_unknown_keys(channel, {"type", "r0", "side", "dx", "seed"}, "channel");
      cfg.channel.type = ChannelSource::Type::kolmogorov;
      cfg.channel.r0 = channel.at("r0").get<double>();
      cfg.channel.side = channel.at("side").get<int>();
      cfg.channel.dx = channel.at("dx").get<double>();
      cfg.channel.seed = channel.at("seed").get<std::uint64_t>();
    } else if (type == "zernike") {
      reject_unknown_keys(channel, {"type", "coeffs", "side", "dx", "aperture_radius"}, "channel");
      cfg.channel.type = ChannelSource::Type::zernike;
      for (const auto& term : channel.at("coeffs")) {
        if (!term.is_array() || term.size() != 3) throw ConfigError("config: zernike coeff must be [n, m, amp]");
        cfg.channel.zernike_terms.push_back(
            {term[0].get<int>(), term[1].get<int>(), term[2].get<double>()});
      }
      cfg.channel.side = channel.at("side").get<int>();
      cfg.channel.dx = channel.at("dx").get<double>();
      cfg.channel.aperture_radius = channel.at("aperture_radius").get<double>();
    } else if (type == "random-unitary") {
      reject_unknown_keys(channel, {"type", "seed"}, "channel");
      cfg.channel.type = ChannelSource::Type::random_unitary;
      cfg.channel.seed = channel.at("seed").get<std::uint64_t>();
    } else if (type == "file") {
      reject_unknown_keys(channel, {"type", "path"}, "channel");
      cfg.channel.type = ChannelSource::Type::file;
      cfg.channel.path = channel.at("path").get<std::string>();
    } else {
      throw ConfigError("config: unknown channel type '" + type + "'");
    }

    const auto& noise = j.at("noise");
    const std::string noise_type = noise.at("type").get<std::string>();
    if (noise_type == "none") {
      reject_unknown_keys(noise, {"type"}, "noise");
      cfg.noise.kind = NoiseSpec::Kind::none;
    } else if (noise_type == "poisson") {
      reject_unknown_keys(noise, {"type", "n_photons", "seed"}, "noise");
      cfg.noise.kind = NoiseSpec::Kind::poisson;
      cfg.noise.n_photons = noise.at("n_photons").get<double>();
      if (!(cfg.noise.n_photons > 0.0)) throw ConfigError("config: n_photons must be positive");
      if (noise.contains("seed")) cfg.noise.seed = noise.at("seed").get<std::uint64_t>();
    } else {
      throw ConfigError("config: unknown noise type '" + noise_type + "'");
    }

    cfg.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("alphas")) {
      std::vector<cd> alphas;
      for (const auto& a : j.at("alphas")) alphas.push_back(complex_from_json(a));
      if (static_cast<int>(alphas.size()) != cfg.dimension)
        throw ConfigError("config: alphas size must equal dimension");
      double norm = 0.0;
      for (const auto& a : alphas) norm += std::norm(a);
      if (std::abs(norm - 1.0) > 1e-9) throw ConfigError("config: alphas must be normalized");
      cfg.alphas = std::move(alphas);
    }
    if (j.contains("screen_waist")) cfg.screen_waist = j.at("screen_waist").get<double>();

    if (j.contains("oracle")) {
      const auto& q = j.at("oracle");
      reject_unknown_keys(q, {"scheme", "order", "extent", "tolerance"}, "oracle");
      const std::string scheme = q.value("scheme", "gauss-hermite");
      if (scheme == "gauss-hermite")
        cfg.oracle_quadrature.scheme = QuadratureSpec::Scheme::gauss_hermite;
      else if (scheme == "cartesian-grid")
        cfg.oracle_quadrature.scheme = QuadratureSpec::Scheme::cartesian_grid;
      else
        throw ConfigError("config: unknown quadrature scheme '" + scheme + "'");
      if (q.contains("order")) cfg.oracle_quadrature.order = q.at("order").get<int>();
      if (q.contains("extent")) cfg.oracle_quadrature.extent = q.at("extent").get<double>();
      if (q.contains("tolerance")) cfg.oracle_quadrature.tolerance = q.at("tolerance").get<double>();
      cfg.oracle_quadrature.validate();
    }
    if (j.contains("verify")) {
      const auto& v = j.at("verify");
      reject_unknown_keys(v, {"ell_max", "tolerance_rel", "selection_tolerance"}, "verify");
      if (v.contains("ell_max")) cfg.verify.ell_max = v.at("ell_max").get<int>();
      if (v.contains("tolerance_rel")) cfg.verify.tolerance_rel = v.at("tolerance_rel").get<double>();
      if (v.contains("selection_tolerance"))
        cfg.verify.selection_tolerance = v.at("selection_tolerance").get<double>();
      if (cfg.verify.ell_max < 1 || cfg.verify.ell_max > 8)
        throw ConfigError("config: verify.ell_max must be in [1, 8]");
    }
    if (j.contains("design")) {
      const auto& d = j.at("design");
      reject_unknown_keys(d,
                          {"nominal_wavelength", "repetition_frequency", "component_spacing_multiple",
                           "slm_width_pixels", "grating_lines_per_mm", "min_pixels_per_beam"},
                          "design");
      if (d.contains("nominal_wavelength")) cfg.design.nominal_wavelength = d.at("nominal_wavelength").get<double>();
      if (d.contains("repetition_frequency"))
        cfg.design.repetition_frequency = d.at("repetition_frequency").get<double>();
      if (d.contains("component_spacing_multiple"))
        cfg.design.component_spacing_multiple = d.at("component_spacing_multiple").get<int>();
      if (d.contains("slm_width_pixels")) cfg.design.slm_width_pixels = d.at("slm_width_pixels").get<int>();
      if (d.contains("grating_lines_per_mm"))
        cfg.design.grating_lines_per_mm = d.at("grating_lines_per_mm").get<double>();
      if (d.contains("min_pixels_per_beam"))
        cfg.design.min_pixels_per_beam = d.at("min_pixels_per_beam").get<int>();
    }
  } catch (const ordered_json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!(cfg.w1 > 0.0) || !(cfg.w2 > 0.0)) throw ConfigError("config: beam waists must be positive");
  std::vector<bool> seen;
  for (std::size_t i = 0; i < cfg.basis.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.basis.size(); ++k)
      if (cfg.basis[i] == cfg.basis[k]) throw ConfigError("config: basis indices must be distinct");
  return cfg;
}

inline ordered_json experiment_config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["dimension"] = cfg.dimension;
  j["basis"] = cfg.basis;
  j["waists"] = {{"w1", cfg.w1}, {"w2", cfg.w2}, {"w_c", cfg.w_c}};
  j["crystal"] = {{"lambda1", cfg.lambda1},
                  {"lambda2", cfg.lambda2},
                  {"n1", cfg.n1},
                  {"n2", cfg.n2},
                  {"length", cfg.crystal_length}};
  ordered_json channel;
  switch (cfg.channel.type) {
    case ChannelSource::Type::kolmogorov:
      channel = {{"type", "kolmogorov"},
                 {"r0", cfg.channel.r0},
                 {"side", cfg.channel.side},
                 {"dx", cfg.channel.dx},
                 {"seed", cfg.channel.seed}};
      break;
    case ChannelSource::Type::zernike: {
      ordered_json coeffs = ordered_json::array();
      for (const auto& t : cfg.channel.zernike_terms)
        coeffs.push_back(ordered_json::array({t.n, t.m, t.amplitude}));
      channel = {{"type", "zernike"},
                 {"coeffs", std::move(coeffs)},
                 {"side", cfg.channel.side},
                 {"dx", cfg.channel.dx},
                 {"aperture_radius", cfg.channel.aperture_radius}};
      break;
    }
    case ChannelSource::Type::random_unitary:
      channel = {{"type", "random-unitary"}, {"seed", cfg.channel.seed}};
      break;
    case ChannelSource::Type::file:
      channel = {{"type", "file"}, {"path", cfg.channel.path}};
      break;
  }
  j["channel"] = std::move(channel);
  if (cfg.noise.kind == NoiseSpec::Kind::none) {
    j["noise"] = {{"type", "none"}};
  } else {
    ordered_json noise = {{"type", "poisson"}, {"n_photons", cfg.noise.n_photons}};
    if (cfg.noise.seed) noise["seed"] = *cfg.noise.seed;
    j["noise"] = std::move(noise);
  }
  j["output_dir"] = cfg.output_dir;
  if (cfg.alphas) {
    ordered_json alphas = ordered_json::array();
    for (const auto& a : *cfg.alphas) alphas.push_back(complex_to_json(a));
    j["alphas"] = std::move(alphas);
  }
  if (cfg.screen_waist) j["screen_waist"] = *cfg.screen_waist;
  j["oracle"] = {{"scheme", cfg.oracle_quadrature.scheme == QuadratureSpec::Scheme::gauss_hermite
                                ? "gauss-hermite"
                                : "cartesian-grid"},
                 {"order", cfg.oracle_quadrature.order},
                 {"extent", cfg.oracle_quadrature.extent},
                 {"tolerance", cfg.oracle_quadrature.tolerance}};
  j["verify"] = {{"ell_max", cfg.verify.ell_max},
                 {"tolerance_rel", cfg.verify.tolerance_rel},
                 {"selection_tolerance", cfg.verify.selection_tolerance}};
  j["design"] = {{"nominal_wavelength", cfg.design.nominal_wavelength},
                 {"repetition_frequency", cfg.design.repetition_frequency},
                 {"component_spacing_multiple", cfg.design.component_spacing_multiple},
                 {"slm_width_pixels", cfg.design.slm_width_pixels},
                 {"grating_lines_per_mm", cfg.design.grating_lines_per_mm},
                 {"min_pixels_per_beam", cfg.design.min_pixels_per_beam}};
  return j;
}

inline ordered_json report_to_json(const ReconstructionReport& report) {
  ordered_json j;
  j["matrix"] = matrix_to_json(report.T_est.entries);
  j["basis"] = report.T_est.basis;
  j["waist"] = report.T_est.waist;
  j["reference_element"] = ordered_json::array({report.reference_element.first, report.reference_element.second});
  j["gauge"] = "reference element real nonnegative";
  j["fidelity"] = report.fidelity;
  ordered_json flagged = ordered_json::array();
  for (const auto& [u, v] : report.flagged_elements) flagged.push_back(ordered_json::array({u, v}));
  j["flagged_elements"] = std::move(flagged);
  return j;
}

}  // namespace krausscope
