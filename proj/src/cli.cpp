#include "cylevo/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "cylevo/analysis.hpp"
#include "cylevo/evolution.hpp"
#include "cylevo/io.hpp"
#include "cylevo/parallel.hpp"
#include "cylevo/synthetic.hpp"

namespace cylevo {

namespace {

using nlohmann::json;

struct CommonEvolutionFlags {
  double alpha = 0.5;
  double k = 2.0;
  int p_min = 50;
  double tau = 0.0;  // 0 = derive from the cloud
  int object_hint = 1;
  int generations = 500;
  std::uint64_t seed = 1;
  double eta_m = 20.0;
  double eta_c = 15.0;
  double crossover_rate = 0.9;
  double radial_tolerance = 1.0;
  std::string operators = "all";
  unsigned threads = 1;
  double r_min = 0.0, r_max = 0.0, l_min = 0.0, l_max = 0.0;  // 0 = inferred
};

void add_evolution_flags(CLI::App* cmd, CommonEvolutionFlags& f) {
  cmd->add_option("--alpha", f.alpha,
                  "Acceptance threshold on realized fitness")
      ->capture_default_str();
  cmd->add_option("--growth-k", f.k, "Population growth factor k (> 1)")
      ->capture_default_str();
  cmd->add_option("--pop-min", f.p_min, "Minimum population size p")
      ->capture_default_str();
  cmd->add_option("--tau", f.tau,
                  "Patch edge length; 0 derives bbox-diagonal/20/object-hint")
      ->capture_default_str();
  cmd->add_option("--object-hint", f.object_hint,
                  "Expected object count used by the default tau rule")
      ->capture_default_str();
  cmd->add_option("--generations", f.generations, "Generation budget")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed; runs are reproducible")
      ->capture_default_str();
  cmd->add_option("--eta-m", f.eta_m, "Polynomial mutation index")
      ->capture_default_str();
  cmd->add_option("--eta-c", f.eta_c, "SBX crossover index")
      ->capture_default_str();
  cmd->add_option("--crossover-rate", f.crossover_rate,
                  "Probability a parent pair undergoes block crossover")
      ->capture_default_str();
  cmd->add_option("--radial-tolerance", f.radial_tolerance,
                  "Radial window as a multiple of tau (0.5 = half-tau shell)")
      ->capture_default_str();
  cmd->add_option("--operators", f.operators,
                  "Comma list of mutation operators, or 'all' / 'basic'")
      ->capture_default_str();
  cmd->add_option("--threads", f.threads, "Worker threads (0 = hardware)")
      ->capture_default_str();
  cmd->add_option("--r-min", f.r_min, "Radius lower bound (0 = inferred)")
      ->capture_default_str();
  cmd->add_option("--r-max", f.r_max, "Radius upper bound (0 = inferred)")
      ->capture_default_str();
  cmd->add_option("--l-min", f.l_min, "Length lower bound (0 = inferred)")
      ->capture_default_str();
  cmd->add_option("--l-max", f.l_max, "Length upper bound (0 = inferred)")
      ->capture_default_str();
}

OperatorSet parse_operator_list(const std::string& text) {
  if (text == "all") return OperatorSet::all();
  if (text == "basic") return OperatorSet::basic();
  OperatorSet set;
  std::stringstream ss(text);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    const auto id = operator_from_name(name);
    if (!id)
      throw CLI::ValidationError("--operators",
                                 "unknown operator '" + name + "'");
    set.insert(*id);
  }
  if (set.empty())
    throw CLI::ValidationError("--operators", "empty operator set");
  return set;
}

double default_tau(const PointCloud& cloud, int object_hint) {
  return cloud.bounds().diagonal() / 20.0 / std::max(1, object_hint);
}

EvolutionConfig build_config(const CommonEvolutionFlags& f,
                             const PointCloud& cloud) {
  EvolutionConfig cfg;
  cfg.alpha = f.alpha;
  cfg.k = f.k;
  cfg.p_min = f.p_min;
  cfg.tau = f.tau > 0.0 ? f.tau : default_tau(cloud, f.object_hint);
  cfg.max_generations = f.generations;
  cfg.rng_seed = f.seed;
  cfg.eta_m = f.eta_m;
  cfg.eta_c = f.eta_c;
  cfg.crossover_rate = f.crossover_rate;
  cfg.radial_tolerance_factor = f.radial_tolerance;
  cfg.operator_set = parse_operator_list(f.operators);
  cfg.threads = f.threads == 0 ? hardware_threads() : f.threads;
  ParameterBounds bounds = ParameterBounds::infer(cloud, cfg.tau);
  if (f.r_min > 0.0) bounds.r_min = f.r_min;
  if (f.r_max > 0.0) bounds.r_max = f.r_max;
  if (f.l_min > 0.0) bounds.l_min = f.l_min;
  if (f.l_max > 0.0) bounds.l_max = f.l_max;
  cfg.bounds = bounds;
  return cfg;
}

CloudFormat parse_cloud_format(const std::string& name) {
  if (name == "auto") return CloudFormat::Auto;
  if (name == "xyz") return CloudFormat::XyzAscii;
  if (name == "ply") return CloudFormat::PlyAscii;
  if (name == "ply-binary") return CloudFormat::PlyBinaryLE;
  throw CLI::ValidationError("--format", "unknown format '" + name + "'");
}

int cmd_fit(const std::string& input, const std::string& format,
            const std::string& output, const std::string& mesh_path,
            int mesh_segments, const CommonEvolutionFlags& flags, bool verbose,
            std::ostream& err) {
  const PointCloud cloud = read_cloud(input, parse_cloud_format(format));
  EvolutionConfig cfg = build_config(flags, cloud);

  err << "fit: " << cloud.size() << " points, tau " << cfg.tau << ", alpha "
      << cfg.alpha << ", " << cfg.max_generations << " generations\n";
  const EvolveResult result = evolve(cloud, cfg);
  for (const GenerationReport& rep : result.reports) {
    if (!verbose && rep.generation % 50 != 0 &&
        rep.generation != cfg.max_generations)
      continue;
    err << "gen " << rep.generation << " pop " << rep.population_size
        << " best " << rep.best_realized << " accepted " << rep.accepted_count
        << "\n";
  }

  FitResult out;
  out.alpha = cfg.alpha;
  out.config = cfg;
  out.input_descriptor = input;
  out.generations = result.reports;
  for (const ScoredSolution& s : result.population.solutions) {
    out.population.push_back(SolutionRecord{s.cylinder,
                                            s.occupancy.potential_fitness,
                                            s.realized_fitness, s.accepted});
  }
  write_result(out, output);
  err << "wrote " << output << " (" << out.accepted().size() << " of "
      << out.population.size() << " accepted)\n";

  if (!mesh_path.empty()) {
    std::vector<Cylinder> accepted;
    for (const SolutionRecord& s : out.population)
      if (s.accepted) accepted.push_back(s.cylinder);
    export_mesh(accepted, mesh_path, mesh_segments);
    err << "wrote " << mesh_path << "\n";
  }
  return 0;
}

int cmd_synth(const std::string& generator, const std::string& output,
              const std::string& cloud_format, std::uint64_t seed,
              const CylinderSceneParams& cyl_params,
              const RingCyclideParams& cyc_params, int res_u, int res_v,
              std::ostream& err) {
  SyntheticScene scene;
  if (generator == "cylinder") {
    CylinderSceneParams p = cyl_params;
    p.seed = seed;
    scene = make_cylinder_scene(p);
  } else if (generator == "cyclide") {
    scene = make_cyclide_scene(cyc_params, res_u, res_v, seed);
  } else {
    throw CLI::ValidationError(
        "generator", "unknown generator '" + generator +
                         "' (valid: cylinder, cyclide)");
  }

  const CloudFormat fmt = parse_cloud_format(cloud_format);
  const std::string ext = fmt == CloudFormat::XyzAscii ? ".xyz" : ".ply";
  const std::string cloud_path = output + ext;
  write_cloud(scene.points, cloud_path, fmt);

  json j;
  j["descriptor"] = {{"generator", scene.descriptor.generator},
                     {"seed", scene.descriptor.seed},
                     {"params", scene.descriptor.params}};
  json truth = json::array();
  for (const Cylinder& c : scene.ground_truth)
    truth.push_back(json{{"x", c.x},
                         {"y", c.y},
                         {"z", c.z},
                         {"theta", c.theta},
                         {"phi", c.phi},
                         {"l", c.l},
                         {"r", c.r}});
  j["ground_truth"] = std::move(truth);
  j["cloud"] = cloud_path;
  const std::string scene_path = output + ".json";
  std::ofstream out(scene_path);
  if (!out) throw DataError("cannot write " + scene_path);
  out << j.dump(2) << '\n';

  err << "wrote " << cloud_path << " (" << scene.points.size()
      << " points) and " << scene_path << "\n";
  return 0;
}

json report_to_json(const ShapleyReport& rep) {
  json ops = json::object();
  for (int i = 0; i < kOperatorCount; ++i) {
    const auto id = static_cast<OperatorId>(i);
    ops[operator_name(id)] = {
        {"zeta", rep.zeta[std::size_t(i)]},
        {"stderr", rep.zeta_stderr[std::size_t(i)]},
        {"argmax_count", rep.argmax_count[std::size_t(i)]}};
  }
  json ranking = json::array();
  for (OperatorId id : rep.ranking) ranking.push_back(operator_name(id));
  return json{{"task", rep.task},
              {"budget", rep.budget},
              {"replicates", rep.replicates},
              {"grand_coalition_value", rep.grand_value},
              {"efficiency_residual", rep.efficiency_residual()},
              {"operators", std::move(ops)},
              {"ranking", std::move(ranking)}};
}

int cmd_shapley(const std::string& output, int budget, int replicates,
                std::uint64_t seed, const std::vector<std::string>& starts,
                const CommonEvolutionFlags& flags, bool additive_self_test,
                const CylinderSceneParams& task_params, std::ostream& err) {
  if (additive_self_test) {
    // Closed-form check: an additive game must give back its weights.
    std::array<double, kOperatorCount> weights{};
    Rng rng = make_rng(seed, 0xADD5u);
    for (double& w : weights) w = uniform01(rng);
    std::vector<double> table(std::size_t{1} << kOperatorCount, 0.0);
    for (std::size_t mask = 0; mask < table.size(); ++mask)
      for (int i = 0; i < kOperatorCount; ++i)
        if (mask & (std::size_t{1} << i)) table[mask] += weights[std::size_t(i)];
    const std::vector<double> zeta = shapley_from_table(table, kOperatorCount);
    double max_err = 0.0;
    for (int i = 0; i < kOperatorCount; ++i)
      max_err = std::max(max_err,
                         std::abs(zeta[std::size_t(i)] - weights[std::size_t(i)]));
    json j{{"task", "additive-self-test"},
           {"max_abs_error", max_err},
           {"pass", max_err < 1e-12}};
    std::ofstream out(output);
    if (!out) throw DataError("cannot write " + output);
    out << j.dump(2) << '\n';
    err << "additive self-test max error " << max_err << "\n";
    return max_err < 1e-12 ? 0 : 3;
  }

  SingletonTask task;
  task.scene = make_cylinder_scene(task_params);
  task.base_config = build_config(flags, task.scene.points);
  task.name = task.scene.descriptor.to_string();

  json j;
  if (starts.empty()) {
    const ShapleyReport rep =
        shapley_values(task, budget, replicates, seed, task.base_config.threads);
    j = report_to_json(rep);
  } else {
    std::vector<Vec3> positions;
    for (const std::string& s : starts) {
      std::stringstream ss(s);
      double x, y, z;
      char c1, c2;
      if (!(ss >> x >> c1 >> y >> c2 >> z) || c1 != ',' || c2 != ',')
        throw CLI::ValidationError("--start", "expected x,y,z");
      positions.emplace_back(x, y, z);
    }
    const auto reports = spatial_shapley_sweep(
        task, positions, budget, replicates, seed, task.base_config.threads);
    j = json::array();
    for (const PositionedReport& pr : reports) {
      json entry = report_to_json(pr.report);
      entry["start"] = {pr.start.x(), pr.start.y(), pr.start.z()};
      j.push_back(std::move(entry));
    }
  }
  std::ofstream out(output);
  if (!out) throw DataError("cannot write " + output);
  out << j.dump(2) << '\n';
  err << "wrote " << output << "\n";
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err) {
  (void)out;
  CLI::App app{"Evolutionary cylinder fitting on 3D point clouds"};
  app.require_subcommand(1);

  // --- fit ---
  auto* fit = app.add_subcommand("fit", "Fit cylinders to a point cloud");
  std::string fit_input, fit_output = "result.json", fit_mesh;
  std::string fit_format = "auto";
  int fit_mesh_segments = 24;
  bool fit_verbose = false;
  CommonEvolutionFlags fit_flags;
  fit->add_option("-i,--input", fit_input, "Input cloud (xyz or ply)")
      ->required();
  fit->add_option("-o,--output", fit_output, "Result file (json)")
      ->capture_default_str();
  fit->add_option("--format", fit_format,
                  "Input format: auto, xyz, ply, ply-binary")
      ->capture_default_str();
  fit->add_option("--mesh", fit_mesh, "Also export accepted cylinders as OBJ");
  fit->add_option("--mesh-segments", fit_mesh_segments,
                  "Circle segments for the OBJ export")
      ->capture_default_str();
  fit->add_flag("-v,--verbose", fit_verbose, "Progress line every generation");
  add_evolution_flags(fit, fit_flags);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  std::string synth_generator, synth_output = "scene";
  std::string synth_cloud_format = "xyz";
  std::string synth_jitter_mode = "per-coordinate";
  std::uint64_t synth_seed = 1;
  CylinderSceneParams cyl_params;
  RingCyclideParams cyc_params;
  int cyc_res_u = 100, cyc_res_v = 36;
  synth->add_option("generator", synth_generator,
                    "Scene generator: cylinder or cyclide")
      ->required();
  synth->add_option("-o,--output", synth_output,
                    "Output prefix (<prefix>.xyz/.ply and <prefix>.json)")
      ->capture_default_str();
  synth->add_option("--cloud-format", synth_cloud_format,
                    "Cloud file format: xyz, ply, ply-binary")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--radius", cyl_params.cylinder.r, "Cylinder radius")
      ->capture_default_str();
  synth->add_option("--length", cyl_params.cylinder.l, "Cylinder length")
      ->capture_default_str();
  synth->add_option("--axial-n", cyl_params.axial_n, "Samples along the axis")
      ->capture_default_str();
  synth->add_option("--circ-n", cyl_params.circ_n,
                    "Samples around the circumference")
      ->capture_default_str();
  synth->add_option("--jitter", cyl_params.jitter,
                    "Uniform jitter amplitude as a fraction of the radius")
      ->capture_default_str();
  synth->add_option("--jitter-mode", synth_jitter_mode,
                    "Jitter model: per-coordinate or radial")
      ->capture_default_str();
  synth->add_option("--completeness", cyl_params.completeness,
                    "Fraction of the circumference retained")
      ->capture_default_str();
  synth->add_option("--ring-radius", cyc_params.a, "Cyclide ring radius")
      ->capture_default_str();
  synth->add_option("--tube-radius", cyc_params.d, "Cyclide mean tube radius")
      ->capture_default_str();
  synth->add_option("--focal-offset", cyc_params.c, "Cyclide focal offset")
      ->capture_default_str();
  synth->add_option("--res-u", cyc_res_u, "Cyclide samples around the ring")
      ->capture_default_str();
  synth->add_option("--res-v", cyc_res_v, "Cyclide samples around the tube")
      ->capture_default_str();

  // --- shapley ---
  auto* shapley = app.add_subcommand(
      "shapley", "Attribute optimization performance to mutation operators");
  std::string shapley_output = "shapley.json";
  int shapley_budget = 400, shapley_replicates = 5;
  bool shapley_additive = false;
  std::vector<std::string> shapley_starts;
  CommonEvolutionFlags shapley_flags;
  CylinderSceneParams shapley_task;
  shapley->add_option("-o,--output", shapley_output, "Report file (json)")
      ->capture_default_str();
  shapley->add_option("--budget", shapley_budget,
                      "Iteration budget per singleton run")
      ->capture_default_str();
  shapley->add_option("--replicates", shapley_replicates,
                      "Replicate runs per coalition")
      ->capture_default_str();
  shapley->add_option("--start", shapley_starts,
                      "Start position x,y,z (repeatable; sweep mode)");
  shapley->add_flag("--additive-self-test", shapley_additive,
                    "Check exact weight recovery on an additive game");
  shapley->add_option("--task-radius", shapley_task.cylinder.r,
                      "Target cylinder radius")
      ->capture_default_str();
  shapley->add_option("--task-length", shapley_task.cylinder.l,
                      "Target cylinder length")
      ->capture_default_str();
  shapley->add_option("--task-axial-n", shapley_task.axial_n,
                      "Samples along the target axis")
      ->capture_default_str();
  shapley->add_option("--task-circ-n", shapley_task.circ_n,
                      "Samples around the target circumference")
      ->capture_default_str();
  add_evolution_flags(shapley, shapley_flags);

  // --- rethreshold ---
  auto* rethresh = app.add_subcommand(
      "rethreshold", "Re-apply the acceptance threshold on a saved result");
  std::string rt_input, rt_output;
  double rt_alpha = 0.5;
  rethresh->add_option("-i,--input", rt_input, "Result file")->required();
  rethresh->add_option("-o,--output", rt_output, "Re-thresholded result file")
      ->required();
  rethresh->add_option("--alpha", rt_alpha, "New acceptance threshold in [0,1]")
      ->capture_default_str();

  // --- export-mesh ---
  auto* exm = app.add_subcommand("export-mesh",
                                 "Export accepted cylinders of a result as OBJ");
  std::string exm_input, exm_output;
  int exm_segments = 24;
  exm->add_option("-i,--input", exm_input, "Result file")->required();
  exm->add_option("-o,--output", exm_output, "OBJ file")->required();
  exm->add_option("--segments", exm_segments, "Circle segments per cylinder")
      ->capture_default_str();

  try {
    std::vector<const char*> argv;
    argv.push_back("cylevo");
    for (const std::string& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (fit->parsed()) {
      return cmd_fit(fit_input, fit_format, fit_output, fit_mesh,
                     fit_mesh_segments, fit_flags, fit_verbose, err);
    }
    if (synth->parsed()) {
      if (synth_jitter_mode == "radial")
        cyl_params.jitter_mode = JitterMode::Radial;
      else if (synth_jitter_mode != "per-coordinate")
        throw CLI::ValidationError("--jitter-mode",
                                   "expected per-coordinate or radial");
      return cmd_synth(synth_generator, synth_output, synth_cloud_format,
                       synth_seed, cyl_params, cyc_params, cyc_res_u, cyc_res_v,
                       err);
    }
    if (shapley->parsed()) {
      if (shapley_budget < 1 || shapley_replicates < 1)
        throw CLI::ValidationError("--budget",
                                   "budget and replicates must be >= 1");
      return cmd_shapley(shapley_output, shapley_budget, shapley_replicates,
                         shapley_flags.seed, shapley_starts, shapley_flags,
                         shapley_additive, shapley_task, err);
    }
    if (rethresh->parsed()) {
      const FitResult updated = rethreshold(read_result(rt_input), rt_alpha);
      write_result(updated, rt_output);
      err << "wrote " << rt_output << " (" << updated.accepted().size()
          << " accepted at alpha " << rt_alpha << ")\n";
      return 0;
    }
    if (exm->parsed()) {
      const FitResult result = read_result(exm_input);
      std::vector<Cylinder> accepted;
      for (const SolutionRecord& s : result.population)
        if (s.accepted) accepted.push_back(s.cylinder);
      export_mesh(accepted, exm_output, exm_segments);
      err << "wrote " << exm_output << " (" << accepted.size()
          << " cylinders)\n";
      return 0;
    }
    return 1;
  } catch (const CLI::ParseError& e) {
    // --help lands here with Success
    const int code = app.exit(e, std::cout, err);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cylevo
