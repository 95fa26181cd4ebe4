#pragma once

// Experiment orchestration: configs, presets, artifact files and the summary
// error table.
//
// One run directory holds
//   loss_history.csv   iteration,total,residual,bc1,bc2,bc3,bc4,phase
//   spectrum.csv       iteration,eig1..eig4,max_inactive,kappa
//   snapshots.csv      iteration,xi,deflection,analytical (21 points per checkpoint)
//   strain.csv, strain_error.csv
//   hessian_spectrum.csv (only with hessian_probe)
//   params.json, manifest.json

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "beampinn/beam.hpp"
#include "beampinn/diagnostics.hpp"
#include "beampinn/fem.hpp"
#include "beampinn/io.hpp"
#include "beampinn/losses.hpp"
#include "beampinn/network.hpp"
#include "beampinn/optimizers.hpp"
#include "beampinn/quadrature.hpp"

#ifndef BEAMPINN_VERSION
#define BEAMPINN_VERSION "0.1.0"
#endif

namespace beampinn {

inline constexpr std::string_view kVersion = BEAMPINN_VERSION;

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name;  // run label; defaults to case-formulation-schedule
  CaseKind beam_case = CaseKind::CC;
  Formulation formulation = Formulation::strong_penalty;
  Schedule schedule{.phases = {{OptimizerKind::adam, 5000}}};
  std::uint64_t seed = 0;
  std::size_t quadrature_n = kDefaultQuadraturePoints;
  std::vector<LayerShape> net_shapes = default_shapes();
  bool tanh_output = true;
  double q_hat = 1.0;
  std::size_t record_every = 50;
  bool spectrum_validate = false;
  bool hessian_probe = false;
  std::filesystem::path output_dir = "runs";

  void validate() const {
    schedule.validate();
    check_shapes(net_shapes);
    if (quadrature_n < 1 || quadrature_n > kMaxQuadraturePoints) throw config_error("quadrature_n out of range");
    if (record_every == 0) throw config_error("record_every must be positive");
    if (!std::isfinite(q_hat)) throw config_error("q_hat must be finite");
  }
};

/// "adam5000", "lbfgs200", "hybrid" style tag for a schedule.
inline std::string schedule_tag(const Schedule& s) {
  if (s.phases.size() == 2 && s.phases[0].optimizer == OptimizerKind::adam && s.phases[1].optimizer == OptimizerKind::lbfgs)
    return "hybrid";
  std::string tag;
  for (const auto& p : s.phases) {
    if (!tag.empty()) tag += '+';
    tag += std::string(to_string(p.optimizer)) + std::to_string(p.count);
  }
  return tag;
}

inline std::string default_run_name(const ExperimentConfig& c) {
  return std::string(to_string(c.beam_case)) + "-" + std::string(to_string(c.formulation)) + "-" + schedule_tag(c.schedule);
}

inline std::string run_name(const ExperimentConfig& c) { return c.name.empty() ? default_run_name(c) : c.name; }

inline nlohmann::json to_json(const Schedule& s) {
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : s.phases) phases.push_back({{"optimizer", to_string(p.optimizer)}, {"count", p.count}});
  return {{"phases", phases},
          {"adam", {{"lr", s.adam.lr}, {"beta1", s.adam.beta1}, {"beta2", s.adam.beta2}, {"eps", s.adam.eps}}},
          {"lbfgs",
           {{"history", s.lbfgs.history},
            {"closure_budget", s.lbfgs.closure_budget},
            {"c1", s.lbfgs.c1},
            {"c2", s.lbfgs.c2},
            {"max_line_search_evals", s.lbfgs.max_line_search_evals},
            {"tolerance_grad", s.lbfgs.tolerance_grad},
            {"tolerance_change", s.lbfgs.tolerance_change},
            {"tolerance_x", s.lbfgs.tolerance_x},
            {"max_failures", s.lbfgs.max_failures}}}};
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& s : c.net_shapes) shapes.push_back({s.in, s.out});
  return {{"name", run_name(c)},
          {"case", to_string(c.beam_case)},
          {"formulation", to_string(c.formulation)},
          {"schedule", to_json(c.schedule)},
          {"seed", c.seed},
          {"quadrature_n", c.quadrature_n},
          {"net_shapes", shapes},
          {"tanh_output", c.tanh_output},
          {"q_hat", c.q_hat},
          {"record_every", c.record_every},
          {"spectrum_validate", c.spectrum_validate},
          {"hessian_probe", c.hessian_probe},
          {"output_dir", c.output_dir.generic_string()}};
}

namespace detail {

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline Schedule schedule_from_json(const nlohmann::json& j, Schedule s) {
  const nlohmann::json& phases = j.is_array() ? j : j.value("phases", nlohmann::json::array());
  if (j.is_array() || j.contains("phases")) {
    s.phases.clear();
    for (const auto& p : phases) {
      const auto kind = parse_optimizer(p.at("optimizer").get<std::string>());
      if (!kind) throw config_error("unknown optimizer " + p.at("optimizer").dump());
      const auto count = p.at("count").get<long long>();
      if (count < 0) throw config_error("phase count must be nonnegative");
      s.phases.push_back({*kind, static_cast<std::size_t>(count)});
    }
  }
  if (j.is_object() && j.contains("adam")) {
    const auto& a = j.at("adam");
    read_if(a, "lr", s.adam.lr);
    read_if(a, "beta1", s.adam.beta1);
    read_if(a, "beta2", s.adam.beta2);
    read_if(a, "eps", s.adam.eps);
  }
  if (j.is_object() && j.contains("lbfgs")) {
    const auto& l = j.at("lbfgs");
    read_if(l, "history", s.lbfgs.history);
    read_if(l, "closure_budget", s.lbfgs.closure_budget);
    read_if(l, "c1", s.lbfgs.c1);
    read_if(l, "c2", s.lbfgs.c2);
    read_if(l, "max_line_search_evals", s.lbfgs.max_line_search_evals);
    read_if(l, "tolerance_grad", s.lbfgs.tolerance_grad);
    read_if(l, "tolerance_change", s.lbfgs.tolerance_change);
    read_if(l, "tolerance_x", s.lbfgs.tolerance_x);
    read_if(l, "max_failures", s.lbfgs.max_failures);
  }
  return s;
}

}  // namespace detail

/// Applies the keys present in `j` on top of `base`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  try {
    ExperimentConfig c = std::move(base);
    detail::read_if(j, "name", c.name);
    if (j.contains("case")) {
      const auto k = parse_case(j.at("case").get<std::string>());
      if (!k) throw config_error("unknown case " + j.at("case").dump());
      c.beam_case = *k;
    }
    if (j.contains("formulation")) {
      const auto f = parse_formulation(j.at("formulation").get<std::string>());
      if (!f) throw config_error("unknown formulation " + j.at("formulation").dump());
      c.formulation = *f;
    }
    if (j.contains("schedule")) c.schedule = detail::schedule_from_json(j.at("schedule"), c.schedule);
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "quadrature_n", c.quadrature_n);
    if (j.contains("net_shapes")) {
      c.net_shapes.clear();
      for (const auto& s : j.at("net_shapes")) c.net_shapes.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    }
    detail::read_if(j, "tanh_output", c.tanh_output);
    detail::read_if(j, "q_hat", c.q_hat);
    detail::read_if(j, "record_every", c.record_every);
    detail::read_if(j, "spectrum_validate", c.spectrum_validate);
    detail::read_if(j, "hessian_probe", c.hessian_probe);
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("bad config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw config_error(path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Presets

inline Schedule adam_schedule(std::size_t n) { return Schedule{.phases = {{OptimizerKind::adam, n}}}; }
inline Schedule lbfgs_schedule(std::size_t outer) { return Schedule{.phases = {{OptimizerKind::lbfgs, outer}}}; }
inline Schedule hybrid_schedule(std::size_t adam = 400, std::size_t outer = 100) {
  return Schedule{.phases = {{OptimizerKind::adam, adam}, {OptimizerKind::lbfgs, outer}}};
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig3", "fig4", "fig5", "fig6", "fig8", "fig9",
                                              "fig10", "fig11", "fig12", "table2"};
  return names;
}

/// Expands a preset into runs. `base` supplies everything the preset does not
/// pin (seed, quadrature, output root, ...); each run writes to
/// base.output_dir / <preset> / <run name>.
inline std::vector<ExperimentConfig> expand_preset(std::string_view preset, const ExperimentConfig& base) {
  std::vector<ExperimentConfig> runs;
  auto add = [&](CaseKind k, Formulation f, Schedule s, auto&& tweak) {
    ExperimentConfig c = base;
    c.name.clear();
    c.beam_case = k;
    c.formulation = f;
    s.adam = base.schedule.adam;
    s.lbfgs = base.schedule.lbfgs;
    c.schedule = std::move(s);
    tweak(c);
    c.output_dir = base.output_dir / std::string(preset) / run_name(c);
    runs.push_back(std::move(c));
  };
  auto none = [](ExperimentConfig&) {};
  auto all_cases = [&](Formulation f, const Schedule& s) {
    for (CaseKind k : kAllCases) add(k, f, s, none);
  };

  if (preset == "fig3" || preset == "fig4" || preset == "fig5") {
    all_cases(Formulation::strong_penalty, adam_schedule(5000));
  } else if (preset == "fig6" || preset == "fig8") {
    all_cases(Formulation::strong_penalty, lbfgs_schedule(200));
  } else if (preset == "fig9" || preset == "fig10") {
    all_cases(Formulation::strong_embedded, lbfgs_schedule(200));
  } else if (preset == "fig11") {
    all_cases(Formulation::strong_embedded, lbfgs_schedule(200));
    all_cases(Formulation::strong_embedded, hybrid_schedule());
  } else if (preset == "fig12") {
    add(CaseKind::CC, Formulation::energy_embedded, lbfgs_schedule(200), none);
    add(CaseKind::CC, Formulation::energy_embedded, hybrid_schedule(), none);
    add(CaseKind::CC, Formulation::energy_embedded, lbfgs_schedule(200), [](ExperimentConfig& c) {
      c.net_shapes = diagnostic_shapes();
      c.hessian_probe = true;
      c.name = "CC-energy_embedded-lbfgs200-probe";
    });
  } else if (preset == "table2") {
    all_cases(Formulation::strong_penalty, lbfgs_schedule(200));
    all_cases(Formulation::strong_embedded, lbfgs_schedule(200));
    all_cases(Formulation::strong_embedded, hybrid_schedule());
    add(CaseKind::CC, Formulation::energy_embedded, lbfgs_schedule(200), none);
    add(CaseKind::CC, Formulation::energy_embedded, hybrid_schedule(), none);
  } else {
    throw config_error("unknown preset " + std::string(preset));
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  std::string name;
  std::filesystem::path dir;
  TrainingRecord record;
  std::vector<SpectrumRecord> spectra;
  std::optional<HessianSpectrum> hessian;
  std::string hessian_error;
  double max_abs_strain_error = std::numeric_limits<double>::quiet_NaN();
  double final_total = std::numeric_limits<double>::quiet_NaN();
  double wall_time_s = 0.0;
  MlpParams params;
};

inline std::string loss_history_csv(const TrainingRecord& r, std::string_view name) {
  std::ostringstream os;
  os << manifest_line(name) << "iteration,total,residual,bc1,bc2,bc3,bc4,phase\n";
  for (const auto& h : r.history) {
    os << h.iteration << ',' << format_real(h.total) << ',' << format_real(h.residual);
    for (double b : h.bc) os << ',' << format_real(b);
    os << ',' << to_string(h.phase) << '\n';
  }
  return os.str();
}

inline std::string spectrum_csv(const std::vector<SpectrumRecord>& spectra, std::string_view name) {
  std::ostringstream os;
  os << manifest_line(name) << "iteration,eig1,eig2,eig3,eig4,max_inactive,kappa\n";
  for (const auto& s : spectra) {
    os << s.iteration;
    for (double e : s.active_eigs) os << ',' << format_real(e);
    os << ',' << format_real(s.max_inactive) << ',' << format_real(s.kappa) << '\n';
  }
  return os.str();
}

inline std::string hessian_csv(const HessianSpectrum& h, std::string_view name) {
  std::ostringstream os;
  os << manifest_line(name) << "index,eigenvalue\n";
  for (std::size_t i = 0; i < h.eigenvalues.size(); ++i) os << i << ',' << format_real(h.eigenvalues[i]) << '\n';
  return os.str();
}

inline constexpr std::size_t kSnapshotPoints = 21;

/// Trains one configuration and writes its artifacts into config.output_dir.
inline RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.name = run_name(config);
  res.dir = config.output_dir;
  const BeamCase beam = make_case(config.beam_case, config.q_hat);
  const QuadratureRule rule = gauss_legendre(config.quadrature_n);
  res.params = init(config.seed, config.net_shapes, config.tanh_output);

  LossEvaluator evaluator(beam, config.formulation, rule);
  LossEvaluator probe_evaluator(beam, config.formulation, rule);
  const LossFunction loss_fn = make_loss_function(evaluator, res.params);

  const std::vector<double> snap_xi = uniform_grid(0.0, 1.0, kSnapshotPoints);
  std::ostringstream snapshots;
  snapshots << manifest_line(res.name) << "iteration,xi,deflection,analytical\n";
  MlpParams scratch = res.params;
  auto checkpoint = [&](std::size_t iteration, std::span<const double> theta, bool spectrum) {
    scratch.theta.assign(theta.begin(), theta.end());
    const auto jets = probe_evaluator.solution_jets(scratch, snap_xi);
    for (std::size_t i = 0; i < snap_xi.size(); ++i)
      snapshots << iteration << ',' << format_real(snap_xi[i]) << ',' << format_real(jets[i].d[0]) << ','
                << format_real(analytical_deflection(beam, snap_xi[i])) << '\n';
    if (spectrum) res.spectra.push_back(boundary_spectrum(probe_evaluator, scratch, iteration, config.spectrum_validate));
  };

  checkpoint(0, res.params.theta, true);
  Recorder recorder;
  recorder.checkpoint_every = config.record_every;
  recorder.on_checkpoint = [&](std::size_t it, std::span<const double> theta) { checkpoint(it, theta, true); };
  res.record = run_schedule(config.schedule, loss_fn, res.params.theta, recorder);

  const auto& dir = config.output_dir;
  write_text_file(dir / "snapshots.csv", snapshots.str());

  const bool trained = !res.record.history.empty();
  if (trained) {
    res.final_total = loss_fn(res.params.theta).total;
    const StrainField field = strain_field(
        [&](double x) { return probe_evaluator.solution_jets(res.params, std::vector<double>{x})[0].d[2]; }, beam,
        default_xi_grid(), default_zeta_grid());
    res.max_abs_strain_error = field.max_abs_error();
    write_text_file(dir / "loss_history.csv", loss_history_csv(res.record, res.name));
    write_text_file(dir / "spectrum.csv", spectrum_csv(res.spectra, res.name));
    write_text_file(dir / "strain.csv", strain_csv(field, false, res.name));
    write_text_file(dir / "strain_error.csv", strain_csv(field, true, res.name));
    write_text_file(dir / "params.json", to_json(res.params).dump(1) + "\n");
    if (config.hessian_probe) {
      try {
        res.hessian = full_hessian_spectrum(res.params.theta, loss_fn);
        write_text_file(dir / "hessian_spectrum.csv", hessian_csv(*res.hessian, res.name));
      } catch (const diagnostic_error& e) {
        res.hessian_error = e.what();
      }
    }
  }
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json manifest{{"name", res.name},
                          {"version", kVersion},
                          {"seed", config.seed},
                          {"config", to_json(config)},
                          {"complete", true},
                          {"aborted", res.record.aborted},
                          {"abort_reason", res.record.abort_reason},
                          {"stalled", res.record.stalled},
                          {"stall_reason", res.record.stall_reason},
                          {"nonfinite_steps", res.record.nonfinite_steps},
                          {"iterations", res.record.history.size()},
                          {"wall_time_s", res.wall_time_s}};
  if (trained) {
    manifest["final_total_loss"] = res.final_total;
    manifest["max_abs_strain_error"] = res.max_abs_strain_error;
  }
  if (res.hessian) {
    manifest["hessian"] = {{"lambda_min", res.hessian->lambda_min},
                           {"lambda_max", res.hessian->lambda_max},
                           {"n_negative", res.hessian->n_negative},
                           {"asymmetry", res.hessian->asymmetry}};
  } else if (!res.hessian_error.empty()) {
    manifest["hessian_error"] = res.hessian_error;
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------------------
// Summary

struct SummaryRow {
  std::string label;        // formulation/optimizer, or "FEM"
  std::string formulation;  // sort key; "fem" for the benchmark row
  std::string beam_case;
  double max_abs_strain_error = std::numeric_limits<double>::quiet_NaN();
  double final_total_loss = std::numeric_limits<double>::quiet_NaN();
  std::size_t iterations = 0;
  double wall_time_s = 0.0;
  bool complete = false;
  std::string source;
};

namespace detail {

/// Largest value in a strain CSV body (comment line and header skipped,
/// first column is xi).
inline double max_cell(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  bool header = false;
  double m = -std::numeric_limits<double>::infinity();
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    while (std::getline(cells, cell, ',')) m = std::max(m, std::stod(cell));
    ++rows;
  }
  if (rows == 0) throw io_error("empty strain table");
  return m;
}

inline int formulation_rank(std::string_view f) {
  if (f == "fem") return 0;
  if (f == "strong_penalty") return 1;
  if (f == "strong_embedded") return 2;
  if (f == "energy_embedded") return 3;
  return 4;
}

inline int case_rank(std::string_view c) {
  if (c == "CV") return 0;
  if (c == "SS") return 1;
  if (c == "CC") return 2;
  return 3;
}

}  // namespace detail

inline SummaryRow summarize_run(const std::filesystem::path& dir) {
  SummaryRow row;
  row.source = dir.generic_string();
  row.label = dir.filename().string();
  try {
    const auto m = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
    const auto& cfg = m.at("config");
    row.formulation = cfg.at("formulation").get<std::string>();
    row.beam_case = cfg.at("case").get<std::string>();
    Schedule s = detail::schedule_from_json(cfg.at("schedule"), Schedule{});
    row.label = row.formulation + "/" + schedule_tag(s);
    const std::string name = m.value("name", std::string{});
    const std::string default_name = row.beam_case + "-" + row.formulation + "-" + schedule_tag(s);
    if (!name.empty() && name != default_name) row.label = name;
    row.iterations = m.value("iterations", std::size_t{0});
    row.wall_time_s = m.value("wall_time_s", 0.0);
    row.final_total_loss = m.value("final_total_loss", std::numeric_limits<double>::quiet_NaN());
    row.max_abs_strain_error = detail::max_cell(read_text_file(dir / "strain_error.csv"));
    row.complete = m.value("complete", false) && !m.value("aborted", false);
  } catch (const std::exception&) {
    row.complete = false;
  }
  return row;
}

inline SummaryRow fem_summary_row(CaseKind k, std::size_t n_elem = 50, double q_hat = 1.0) {
  const auto t0 = std::chrono::steady_clock::now();
  const FemModel m = assemble(make_case(k, q_hat), n_elem);
  const auto u = solve(m);
  SummaryRow row;
  row.label = "FEM";
  row.formulation = "fem";
  row.beam_case = std::string(to_string(k));
  row.max_abs_strain_error = fem_strain_field(m, u).max_abs_error();
  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  row.complete = true;
  row.source = "fem:" + std::to_string(n_elem);
  return row;
}

inline void sort_rows(std::vector<SummaryRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    const auto ka = std::tuple(detail::formulation_rank(a.formulation), a.formulation, detail::case_rank(a.beam_case), a.label, a.source);
    const auto kb = std::tuple(detail::formulation_rank(b.formulation), b.formulation, detail::case_rank(b.beam_case), b.label, b.source);
    return ka < kb;
  });
}

/// One row per run directory plus FEM rows for every case present.
inline std::vector<SummaryRow> summarize(const std::vector<std::filesystem::path>& dirs, bool with_fem = true) {
  std::vector<SummaryRow> rows;
  for (const auto& d : dirs) rows.push_back(summarize_run(d));
  if (with_fem) {
    for (CaseKind k : kAllCases) {
      const bool present = std::any_of(rows.begin(), rows.end(), [&](const SummaryRow& r) { return r.beam_case == to_string(k); });
      if (present) rows.push_back(fem_summary_row(k));
    }
  }
  sort_rows(rows);
  return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << manifest_line("summary") << "label,case,max_abs_strain_error,final_total_loss,iterations,wall_time_s,status,source\n";
  for (const auto& r : rows)
    os << r.label << ',' << r.beam_case << ',' << format_real(r.max_abs_strain_error) << ',' << format_real(r.final_total_loss) << ','
       << r.iterations << ',' << format_real(r.wall_time_s) << ',' << (r.complete ? "ok" : "incomplete") << ',' << r.source << '\n';
  return os.str();
}

inline std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "model" << "  case  " << std::right << std::setw(12) << "max|err|"
     << std::setw(13) << "final loss" << std::setw(8) << "iters" << std::setw(10) << "time[s]" << "  status\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(w)) << r.label << "  " << std::setw(4) << r.beam_case << "  " << std::right
       << std::scientific << std::setprecision(3) << std::setw(12) << r.max_abs_strain_error << std::setw(13);
    if (std::isnan(r.final_total_loss))
      os << "-";
    else
      os << r.final_total_loss;
    os << std::setw(8) << r.iterations << std::fixed << std::setprecision(2) << std::setw(10) << r.wall_time_s << "  "
       << (r.complete ? "ok" : "incomplete") << '\n';
  }
  return os.str();
}

}  // namespace beampinn
