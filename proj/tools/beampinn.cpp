// Command line front end: run experiments, summarize run directories, and
// solve the finite element benchmark.

#include <beampinn/beampinn.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace beampinn;

int cmd_run(const std::string& config_path, const std::string& preset, const std::string& out,
            const std::optional<std::uint64_t>& seed) {
  ExperimentConfig base;
  if (!config_path.empty()) base = load_config(config_path);
  if (!out.empty()) base.output_dir = out;
  if (seed) base.seed = *seed;
  std::vector<ExperimentConfig> runs;
  if (preset.empty()) {
    if (config_path.empty()) throw config_error("run needs a config file or --preset");
    runs.push_back(base);
  } else {
    runs = expand_preset(preset, base);
  }
  bool aborted = false;
  for (const auto& cfg : runs) {
    const RunResult r = run_experiment(cfg);
    std::printf("%-40s iters %6zu  loss %.3e  max|strain err| %.3e  %.1fs%s%s\n", r.name.c_str(), r.record.history.size(),
                r.final_total, r.max_abs_strain_error, r.wall_time_s, r.record.stalled ? "  (stalled)" : "",
                r.record.aborted ? "  ABORTED" : "");
    aborted = aborted || r.record.aborted;
  }
  return aborted ? 1 : 0;
}

int cmd_summarize(const std::vector<std::string>& dirs, const std::string& out, bool fem) {
  std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
  const auto rows = summarize(paths, fem);
  const std::string table = summary_table(rows);
  std::cout << table;
  if (!out.empty()) {
    write_text_file(std::filesystem::path(out) / "summary.csv", summary_csv(rows));
    write_text_file(std::filesystem::path(out) / "summary.txt", table);
  }
  return std::all_of(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.complete; }) ? 0 : 1;
}

int cmd_fem(const std::string& case_name, std::size_t elements, double q_hat, const std::string& out) {
  const auto k = parse_case(case_name);
  if (!k) throw config_error("unknown case " + case_name);
  const BeamCase beam = make_case(*k, q_hat);
  const FemModel m = assemble(beam, elements);
  const auto u = solve(m);
  double nodal = 0.0;
  for (std::size_t i = 0; i <= m.n_elem; ++i) {
    const double x = static_cast<double>(i) * m.h;
    nodal = std::max(nodal, std::abs(u(static_cast<Eigen::Index>(2 * i)) - analytical_deflection(beam, x)));
  }
  const StrainField field = fem_strain_field(m, u);
  std::printf("case %s  elements %zu  max nodal deflection error %.3e  max|strain err| %.3e\n", case_name.c_str(), elements,
              nodal, field.max_abs_error());
  if (!out.empty()) {
    const std::string name = "fem-" + case_name + "-" + std::to_string(elements);
    write_text_file(std::filesystem::path(out) / "strain.csv", strain_csv(field, false, name));
    write_text_file(std::filesystem::path(out) / "strain_error.csv", strain_csv(field, true, name));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam PINN experiments"};
  app.set_version_flag("--version", std::string(beampinn::kVersion));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "train one config or a preset matrix");
  std::string config_path, preset, out;
  std::optional<std::uint64_t> seed;
  run->add_option("config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--preset", preset, "preset run matrix")->check(CLI::IsMember(beampinn::preset_names()));
  run->add_option("--out", out, "output directory (root for presets)");
  run->add_option("--seed", seed, "initialization seed");

  auto* sum = app.add_subcommand("summarize", "strain error table over run directories");
  std::vector<std::string> dirs;
  std::string sum_out;
  bool no_fem = false;
  sum->add_option("dirs", dirs, "run directories")->required();
  sum->add_option("--out", sum_out, "write summary.csv and summary.txt here");
  sum->add_flag("--no-fem", no_fem, "omit FEM benchmark rows");

  auto* fem = app.add_subcommand("fem", "finite element benchmark");
  std::string fem_case = "CC", fem_out;
  std::size_t elements = 50;
  double q_hat = 1.0;
  fem->add_option("--case", fem_case, "CV, SS or CC");
  fem->add_option("--elements", elements, "number of elements")->check(CLI::PositiveNumber);
  fem->add_option("--q", q_hat, "nondimensional load");
  fem->add_option("--out", fem_out, "write strain CSVs here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path, preset, out, seed);
    if (*sum) return cmd_summarize(dirs, sum_out, !no_fem);
    if (*fem) return cmd_fem(fem_case, elements, q_hat, fem_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
