#pragma once

// Batch experiments behind the command-line tool. Every command is a pure
// function of (config, seed) returning the report and any side files; the
// tool only parses flags and writes what it gets back.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperst/chsh.hpp"
#include "hyperst/hyperstates.hpp"
#include "hyperst/isometry.hpp"
#include "hyperst/optics.hpp"
#include "hyperst/rng.hpp"
#include "hyperst/robustness.hpp"
#include "hyperst/tomography.hpp"

namespace hyperst {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1.0";

/// Raised for malformed configs and flag values; the tool maps it to exit code 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  HyperBellLabel label;                        // claimed label
  std::optional<HyperBellLabel> source_label;  // defaults to `label`
  NoiseSpec noise;
  std::uint64_t copies = 10000;
  std::uint64_t shots = 100000;       // per CHSH setting pair
  std::uint64_t tomo_shots = 100000;  // per tomography setting
  std::uint64_t seed = 1;
  std::string out = "out";
  bool hardware_model = false;
  bool records = false;  // export raw shot records
  double confidence_z = 3.0;

  HyperBellLabel source() const { return source_label.value_or(label); }

  void validate() const {
    try {
      noise.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (copies == 0 || copies % 2 != 0) throw UsageError("copies must be a positive even number");
    if (shots == 0) throw UsageError("shots must be >= 1");
    if (tomo_shots == 0) throw UsageError("tomo_shots must be >= 1");
    if (!(confidence_z >= 0.0)) throw UsageError("confidence_z must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Config (de)serialization

inline HyperBellLabel label_from_string(const std::string& s) {
  auto l = parse_hyper_label(s);
  if (!l) throw UsageError("bad label '" + s + "', expected POL,SPAT with values phi+/phi-/psi+/psi-");
  return *l;
}

inline ojson to_json(const NoiseSpec& n) {
  return ojson{{"werner_p_pol", n.werner_p_pol},
               {"werner_p_spat", n.werner_p_spat},
               {"dephase_gamma_pol", n.dephase_gamma_pol},
               {"dephase_gamma_spat", n.dephase_gamma_spat},
               {"rotation_angle_pol", n.rotation_angle_pol},
               {"rotation_angle_spat", n.rotation_angle_spat}};
}

inline ojson to_json(const ExperimentConfig& c) {
  ojson j;
  j["label"] = to_string(c.label);
  j["source_label"] = to_string(c.source());
  j["noise"] = to_json(c.noise);
  j["copies"] = c.copies;
  j["shots"] = c.shots;
  j["tomo_shots"] = c.tomo_shots;
  j["seed"] = c.seed;
  j["hardware_model"] = c.hardware_model;
  j["confidence_z"] = c.confidence_z;
  return j;
}

namespace detail {

template <class T>
T get_as(const ojson& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

}  // namespace detail

/// Applies the keys present in `j` on top of `base`. Unknown keys are errors.
inline ExperimentConfig config_from_json(const ojson& j, ExperimentConfig base = {}) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "label") {
      base.label = label_from_string(detail::get_as<std::string>(j, key));
    } else if (key == "source_label") {
      base.source_label = label_from_string(detail::get_as<std::string>(j, key));
    } else if (key == "noise") {
      if (!value.is_object()) throw UsageError("config key 'noise' must be an object");
      for (const auto& [nk, nv] : value.items()) {
        double* slot = nullptr;
        if (nk == "werner_p_pol") slot = &base.noise.werner_p_pol;
        else if (nk == "werner_p_spat") slot = &base.noise.werner_p_spat;
        else if (nk == "dephase_gamma_pol") slot = &base.noise.dephase_gamma_pol;
        else if (nk == "dephase_gamma_spat") slot = &base.noise.dephase_gamma_spat;
        else if (nk == "rotation_angle_pol") slot = &base.noise.rotation_angle_pol;
        else if (nk == "rotation_angle_spat") slot = &base.noise.rotation_angle_spat;
        else throw UsageError("unknown noise key '" + nk + "'");
        *slot = detail::get_as<double>(value, nk);
      }
    } else if (key == "copies") {
      base.copies = detail::get_as<std::uint64_t>(j, key);
    } else if (key == "shots") {
      base.shots = detail::get_as<std::uint64_t>(j, key);
    } else if (key == "tomo_shots") {
      base.tomo_shots = detail::get_as<std::uint64_t>(j, key);
    } else if (key == "seed") {
      base.seed = detail::get_as<std::uint64_t>(j, key);
    } else if (key == "out") {
      base.out = detail::get_as<std::string>(j, key);
    } else if (key == "hardware_model") {
      base.hardware_model = detail::get_as<bool>(j, key);
    } else if (key == "records") {
      base.records = detail::get_as<bool>(j, key);
    } else if (key == "confidence_z") {
      base.confidence_z = detail::get_as<double>(j, key);
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  return base;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, base);
}

/// FNV-1a over the canonical JSON dump of the config.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Results

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  ojson report;
  std::string report_name;
  std::vector<OutputFile> files;
  int exit_code = 0;
};

namespace detail {

inline ojson header(const std::string& command, const ExperimentConfig& c) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config_hash"] = config_hash(c);
  j["seed"] = c.seed;
  j["config"] = to_json(c);
  return j;
}

// Independent sub-seeds so commands that chain stages never share streams.
enum SeedTag : std::uint64_t { kChshTag = 1, kSplitTag = 2, kStep1Tag = 3, kStep2Tag = 4, kTomoTag = 5 };

inline std::uint64_t sub_seed(std::uint64_t seed, SeedTag tag) {
  return CounterRng(seed, {0x6879706572ULL, tag}).next_u64();
}

inline ojson shot_json(const ShotRecord& r) {
  return ojson{{"dof", to_string(r.dof)}, {"i", r.i}, {"j", r.j}, {"a", r.a}, {"b", r.b}};
}

}  // namespace detail

inline ojson to_json(const ChshReport& r) {
  ojson j;
  j["dof"] = to_string(r.dof);
  j["i_value"] = r.i_value;
  j["shots_per_pair"] = r.shots_per_pair;
  j["std_error"] = r.std_error;
  j["epsilon"] = r.epsilon;
  j["epsilon_raw"] = r.epsilon_raw;
  j["correlators"] = {{r.correlators[0][0], r.correlators[0][1]},
                      {r.correlators[1][0], r.correlators[1][1]}};
  return j;
}

inline ojson to_json(const FidelityBound& b) {
  ojson j;
  j["eps1_p"] = b.eps1_p;
  j["eps1_s"] = b.eps1_s;
  j["eps2_p"] = b.eps2_p;
  j["eps2_s"] = b.eps2_s;
  j["f_p_lb"] = b.f_p_lb;
  j["f_s_lb"] = b.f_s_lb;
  j["f_t_lb"] = b.f_t_lb;
  j["f_p_lb_clamped"] = b.f_p_lb_clamped;
  j["f_s_lb_clamped"] = b.f_s_lb_clamped;
  j["f_t_lb_clamped"] = b.f_t_lb_clamped;
  return j;
}

inline ojson to_json(const DofFidelities& f) {
  return ojson{{"f_p", f.f_p}, {"f_s", f.f_s}, {"f_t_product", f.f_t_product}, {"f_full", f.f_full}};
}

// ---------------------------------------------------------------------------
// chsh

struct ChshPair {
  ChshReport pol;
  ChshReport spat;
};

inline ChshPair run_chsh(const ExperimentConfig& c, const ShotSink& sink = {}) {
  const ComplexMatrix rho = make_source(c.source(), c.noise);
  const ChshSettings s = noisy_settings(c.label, c.noise);
  const std::uint64_t seed = detail::sub_seed(c.seed, detail::kChshTag);
  auto one = [&](Dof d) {
    return c.hardware_model ? chsh_sampled_hardware(rho, s, d, c.shots, seed, StderrMode::Binomial, sink)
                            : chsh_sampled(rho, s, d, c.shots, seed, StderrMode::Binomial, sink);
  };
  return {one(Dof::Polarization), one(Dof::Spatial)};
}

inline CommandResult cmd_chsh(const ExperimentConfig& c) {
  c.validate();
  std::string shots;
  ShotSink sink;
  if (c.records) sink = [&](const ShotRecord& r) { shots += detail::shot_json(r).dump() + '\n'; };
  const ChshPair p = run_chsh(c, sink);

  CommandResult res;
  res.report = detail::header("chsh", c);
  res.report["measurement"] = c.hardware_model ? "hardware" : "abstract";
  res.report["dofs"] = {{"pol", to_json(p.pol)}, {"spat", to_json(p.spat)}};
  const bool violated = p.pol.i_value > 2.0 && p.spat.i_value > 2.0;
  res.report["violation"] = violated;
  res.report_name = "chsh.json";
  if (c.records) res.files.push_back({"chsh_shots.jsonl", std::move(shots)});
  res.exit_code = violated ? 0 : 1;
  return res;
}

// ---------------------------------------------------------------------------
// selftest

struct BranchStat {
  std::string bsm;
  bool accepted;
  double probability;
  std::uint64_t count = 0;
};

/// Pearson chi-square of observed counts against expected probabilities;
/// cells with zero expectation are dropped. Returns (statistic, dof, p-value).
struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

inline ChiSquare chi_square(const std::vector<BranchStat>& stats, std::uint64_t n) {
  ChiSquare r;
  int cells = 0;
  for (const auto& s : stats) {
    const double expected = s.probability * static_cast<double>(n);
    if (expected <= 1e-9) continue;
    const double d = static_cast<double>(s.count) - expected;
    r.statistic += d * d / expected;
    ++cells;
  }
  r.dof = std::max(0, cells - 1);
  r.p_value = r.dof > 0 ? boost::math::gamma_q(r.dof / 2.0, r.statistic / 2.0) : 1.0;
  return r;
}

struct SelftestOutcome {
  std::vector<BranchStat> step1;
  std::vector<BranchStat> step2;
  std::uint64_t step1_copies = 0;
  std::uint64_t step2_copies = 0;
  double step1_fidelity = 0.0;
  double step2_fidelity = 0.0;
  HyperBellLabel certified;
  std::string records;  // line-delimited certification records
};

inline double acceptance_rate(const std::vector<BranchStat>& s, std::uint64_t n) {
  std::uint64_t k = 0;
  for (const auto& b : s)
    if (b.accepted) k += b.count;
  return n ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
}

inline double exact_acceptance(const std::vector<BranchStat>& s) {
  double p = 0.0;
  for (const auto& b : s)
    if (b.accepted) p += b.probability;
  return p;
}

/// Each copy is i.i.d.; a copy's BSM outcome is drawn from the exact branch
/// distribution of its step with stream (seed, copy).
inline SelftestOutcome run_selftest(const ExperimentConfig& c, bool with_records = true) {
  const ComplexMatrix rho = make_source(c.source(), c.noise);
  const Step1Result s1 = run_step1_spatial(rho, c.label, noisy_isometry_config(Dof::Spatial, c.noise));
  const Step2Result s2 =
      run_step2_polarization(rho, c.label, noisy_isometry_config(Dof::Polarization, c.noise));

  SelftestOutcome out;
  out.step1_fidelity = s1.extracted_fidelity;
  out.step2_fidelity = s2.extracted_fidelity;
  std::vector<double> p1, p2;
  for (const auto& b : s1.branches) {
    out.step1.push_back({to_string(b.bsm), b.accepted, b.probability});
    p1.push_back(b.probability);
  }
  for (const auto& b : s2.branches) {
    out.step2.push_back({to_string(b.bsm), b.accepted, b.probability});
    p2.push_back(b.probability);
  }
  const DiscreteSampler draw1(p1), draw2(p2);

  // Random half/half split: a seeded shuffle of copy indices.
  std::vector<std::uint64_t> order(c.copies);
  for (std::uint64_t k = 0; k < c.copies; ++k) order[k] = k;
  CounterRng split(detail::sub_seed(c.seed, detail::kSplitTag));
  for (std::uint64_t k = c.copies; k > 1; --k) std::swap(order[k - 1], order[split.below(k)]);
  std::vector<bool> in_step1(c.copies, false);
  for (std::uint64_t k = 0; k < c.copies / 2; ++k) in_step1[order[k]] = true;

  const std::uint64_t seed1 = detail::sub_seed(c.seed, detail::kStep1Tag);
  const std::uint64_t seed2 = detail::sub_seed(c.seed, detail::kStep2Tag);
  for (std::uint64_t k = 0; k < c.copies; ++k) {
    const bool first = in_step1[k];
    CounterRng rng(first ? seed1 : seed2, {k});
    const std::size_t b = first ? draw1(rng) : draw2(rng);
    const auto& rec = first ? s1.branches[b] : s2.branches[b];
    auto& stat = first ? out.step1[b] : out.step2[b];
    ++stat.count;
    ++(first ? out.step1_copies : out.step2_copies);
    if (with_records) {
      ojson r;
      r["copy"] = k;
      r["step"] = to_string(rec.step);
      r["claimed"] = to_string(rec.claimed);
      r["bsm"] = to_string(rec.bsm);
      r["accepted"] = rec.accepted;
      r["branch_probability"] = rec.probability;
      r["extracted_fidelity"] = rec.extracted_fidelity;
      r["junk_spatial_entropy"] = rec.junk_spatial_entropy;
      out.records += r.dump() + '\n';
    }
  }

  // Certified label: majority spatial outcome of Step 1, and the polarization
  // label whose success rule collects the most Step 2 events. Ties go to the
  // earlier label in phi+, phi-, psi+, psi- order.
  std::uint64_t best = 0;
  out.certified.spat = BellLabel::PhiPlus;
  for (std::size_t k = 0; k < 4; ++k)
    if (out.step1[k].count > best) {
      best = out.step1[k].count;
      out.certified.spat = kBellLabels[k];
    }
  best = 0;
  out.certified.pol = BellLabel::PhiPlus;
  for (BellLabel pol : kBellLabels) {
    std::uint64_t n = 0;
    for (std::size_t k = 0; k < s2.branches.size(); ++k) {
      const auto& bsm = s2.branches[k].bsm;
      if (is_accepted(pol, {bsm.first, *bsm.second})) n += out.step2[k].count;
    }
    if (n > best) {
      best = n;
      out.certified.pol = pol;
    }
  }
  return out;
}

inline ojson step_json(const std::vector<BranchStat>& stats, std::uint64_t n, double fidelity) {
  ojson j;
  j["copies"] = n;
  j["extracted_fidelity"] = fidelity;
  j["acceptance_rate"] = acceptance_rate(stats, n);
  j["exact_acceptance"] = exact_acceptance(stats);
  j["branches"] = ojson::array();
  for (const auto& s : stats) {
    j["branches"].push_back({{"bsm", s.bsm},
                             {"accepted", s.accepted},
                             {"exact_probability", s.probability},
                             {"count", s.count},
                             {"frequency", n ? static_cast<double>(s.count) / static_cast<double>(n) : 0.0}});
  }
  const ChiSquare chi = chi_square(stats, n);
  j["chi_square"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
  return j;
}

inline CommandResult cmd_selftest(const ExperimentConfig& c) {
  c.validate();
  SelftestOutcome o = run_selftest(c);
  CommandResult res;
  res.report = detail::header("selftest", c);
  res.report["step1"] = step_json(o.step1, o.step1_copies, o.step1_fidelity);
  res.report["step2"] = step_json(o.step2, o.step2_copies, o.step2_fidelity);
  res.report["certified_label"] = to_string(o.certified);
  const bool match = o.certified == c.label;
  res.report["label_match"] = match;
  res.report_name = "selftest.json";
  res.files.push_back({"certification_records.jsonl", std::move(o.records)});
  res.exit_code = match ? 0 : 1;
  return res;
}

// ---------------------------------------------------------------------------
// bounds

struct SweepSpec {
  double lo = 0.0;
  double hi = 1e-3;
  std::size_t points = 101;
};

inline SweepSpec parse_sweep(const std::string& s) {
  SweepSpec sp;
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? std::string::npos : s.find(':', a + 1);
  if (b == std::string::npos) throw UsageError("--sweep expects LO:HI:POINTS");
  try {
    std::size_t used = 0;
    const std::string lo = s.substr(0, a), hi = s.substr(a + 1, b - a - 1), pts = s.substr(b + 1);
    sp.lo = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    sp.hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
    const long long n = std::stoll(pts, &used);
    if (used != pts.size() || n < 1) throw std::invalid_argument(pts);
    sp.points = static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw UsageError("--sweep expects LO:HI:POINTS, got '" + s + "'");
  }
  if (!(sp.lo >= 0.0 && sp.hi >= sp.lo)) throw UsageError("--sweep needs 0 <= LO <= HI");
  return sp;
}

struct BoundsInput {
  std::optional<double> epsilon_p;
  std::optional<double> epsilon_s;
  std::optional<ojson> chsh_report;  // a previous chsh report
  SweepSpec sweep;
};

inline CommandResult cmd_bounds(const ExperimentConfig& c, const BoundsInput& in,
                                std::vector<std::string>* warnings = nullptr) {
  c.validate();
  double ep = 0.0, es = 0.0;
  std::string source;
  if (in.epsilon_p || in.epsilon_s) {
    if (!(in.epsilon_p && in.epsilon_s)) throw UsageError("give both --epsilon-p and --epsilon-s");
    ep = *in.epsilon_p;
    es = *in.epsilon_s;
    source = "flags";
  } else if (in.chsh_report) {
    try {
      ep = in.chsh_report->at("dofs").at("pol").at("epsilon_raw").get<double>();
      es = in.chsh_report->at("dofs").at("spat").at("epsilon_raw").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("chsh report lacks dofs.*.epsilon_raw: ") + e.what());
    }
    source = "chsh_report";
  } else {
    const ComplexMatrix rho = make_source(c.source(), c.noise);
    const ChshSettings s = noisy_settings(c.label, c.noise);
    ep = kTsirelson - chsh_exact(rho, s, Dof::Polarization);
    es = kTsirelson - chsh_exact(rho, s, Dof::Spatial);
    source = "exact";
  }
  for (double* e : {&ep, &es}) {
    if (!std::isfinite(*e)) throw UsageError("epsilon must be finite");
    if (*e < 0.0) {
      if (warnings) warnings->push_back("negative epsilon " + std::to_string(*e) + " clamped to 0");
      *e = 0.0;
    }
    if (*e > kTsirelson) throw UsageError("epsilon must not exceed 2*sqrt(2)");
  }

  const FidelityBound b = total_bound({ep, es});
  const auto rows = sweep_bounds(make_grid(in.sweep.lo, in.sweep.hi, in.sweep.points), true);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);

  CommandResult res;
  res.report = detail::header("bounds", c);
  res.report["epsilon_source"] = source;
  res.report["epsilon_p"] = ep;
  res.report["epsilon_s"] = es;
  res.report["bound"] = to_json(b);
  res.report["sweep"] = {{"lo", in.sweep.lo},
                         {"hi", in.sweep.hi},
                         {"points", in.sweep.points},
                         {"spacing", in.sweep.lo > 0.0 ? "log" : "linear"},
                         {"file", "sweep.csv"}};
  res.report_name = "bounds.json";
  res.files.push_back({"sweep.csv", csv.str()});
  return res;
}

// ---------------------------------------------------------------------------
// tomography

inline std::string counts_jsonl(const std::vector<PauliSettingCounts>& counts) {
  std::string out;
  for (const auto& s : counts)
    for (std::size_t o = 0; o < kTomoOutcomes; ++o) {
      if (s.counts[o] == 0) continue;
      ojson r;
      r["setting"] = s.setting;
      r["outcome"] = outcome_name(o);
      r["count"] = s.counts[o];
      out += r.dump() + '\n';
    }
  return out;
}

inline ojson matrix_json(const ComplexMatrix& m) {
  ojson re = ojson::array(), im = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson r = ojson::array(), q = ojson::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      r.push_back(m(i, k).real());
      q.push_back(m(i, k).imag());
    }
    re.push_back(r);
    im.push_back(q);
  }
  return ojson{{"real", re}, {"imag", im}};
}

struct TomoOutcome {
  std::vector<PauliSettingCounts> counts;
  ComplexMatrix rho_hat;
  DofFidelities fidelities;
  double trace_distance_to_source;
};

inline TomoOutcome run_tomography(const ExperimentConfig& c) {
  const ComplexMatrix rho = make_source(c.source(), c.noise);
  TomoOutcome t;
  t.counts = simulate_tomography(rho, c.tomo_shots, detail::sub_seed(c.seed, detail::kTomoTag));
  t.rho_hat = reconstruct(t.counts);
  t.fidelities = dof_fidelities(t.rho_hat, c.label);
  t.trace_distance_to_source = trace_distance(t.rho_hat, rho);
  return t;
}

inline CommandResult cmd_tomo(const ExperimentConfig& c) {
  c.validate();
  TomoOutcome t = run_tomography(c);
  CommandResult res;
  res.report = detail::header("tomo", c);
  res.report["shots_per_setting"] = c.tomo_shots;
  res.report["settings"] = kTomoSettings;
  res.report["fidelities"] = to_json(t.fidelities);
  res.report["trace_distance_to_source"] = t.trace_distance_to_source;
  res.report["rho_hat"] = matrix_json(t.rho_hat);
  res.report_name = "tomo.json";
  res.files.push_back({"tomo_counts.jsonl", counts_jsonl(t.counts)});
  return res;
}

// ---------------------------------------------------------------------------
// certify

/// Deficit inflated by z standard errors, so finite statistics can only lower the bound.
inline double effective_epsilon(const ChshReport& r, double z) {
  return std::clamp(kTsirelson - r.i_value + z * r.std_error, 0.0, kTsirelson);
}

inline CommandResult cmd_certify(const ExperimentConfig& c) {
  c.validate();
  const ChshPair p = run_chsh(c);
  const double ep = effective_epsilon(p.pol, c.confidence_z);
  const double es = effective_epsilon(p.spat, c.confidence_z);
  const FidelityBound b = total_bound({ep, es});
  TomoOutcome t = run_tomography(c);
  const DofFidelities& f = t.fidelities;

  const bool pass_p = f.f_p >= b.f_p_lb_clamped;
  const bool pass_s = f.f_s >= b.f_s_lb_clamped;
  const bool pass_t = f.f_t_product >= b.f_t_lb_clamped;
  const bool pass = pass_p && pass_s && pass_t;

  CommandResult res;
  res.report = detail::header("certify", c);
  res.report["provenance"] = {{"chsh_seed", detail::sub_seed(c.seed, detail::kChshTag)},
                              {"tomo_seed", detail::sub_seed(c.seed, detail::kTomoTag)},
                              {"chsh_shots_per_pair", c.shots},
                              {"tomo_shots_per_setting", c.tomo_shots},
                              {"measurement", c.hardware_model ? "hardware" : "abstract"}};
  res.report["chsh"] = {{"pol", to_json(p.pol)}, {"spat", to_json(p.spat)}};
  res.report["epsilon_effective"] = {{"pol", ep}, {"spat", es}, {"confidence_z", c.confidence_z}};
  res.report["bound"] = to_json(b);
  res.report["measured"] = to_json(f);
  res.report["checks"] = {{"f_p", pass_p}, {"f_s", pass_s}, {"f_t", pass_t}};
  res.report["verdict"] = pass ? "PASS" : "FAIL";
  res.report_name = "certify.json";
  res.files.push_back({"tomo_counts.jsonl", counts_jsonl(t.counts)});
  res.exit_code = pass ? 0 : 1;
  return res;
}

// ---------------------------------------------------------------------------
// Writing

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_result(const CommandResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_atomic(dir / r.report_name, r.report.dump(2) + '\n');
  for (const auto& f : r.files) write_atomic(dir / f.name, f.content);
}

}  // namespace hyperst
