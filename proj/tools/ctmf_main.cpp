#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ctmf/harness.hpp"
#include "ctmf/records.hpp"
#include "ctmf/scenario.hpp"

namespace {

using namespace ctmf;

ScenarioConfig load_or_reference(const std::string& config_path) {
  if (config_path.empty()) return reference_scenario();
  return load_scenario(config_path);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 bool pgm) {
  ScenarioConfig cfg = load_or_reference(config_path);
  const Network net = build(cfg);
  std::filesystem::create_directories(out_dir);

  const Grid truth = generate_truth(cfg, net);
  write_matrix_csv(truth, out_dir + "/truth.csv");
  {
    std::ofstream out(out_dir + "/corridor.csv");
    write_corridor(cfg.corridor, out);
  }
  const auto geometry = axis_geometry(net);
  write_geometry_csv(geometry, out_dir + "/geometry.csv");
  write_loops_csv(simulate_loop_records(cfg, net, truth),
                  out_dir + "/loops.csv");
  write_probes_csv(simulate_probe_records(cfg, net, truth, geometry,
                                          cfg.penetration_rate),
                   out_dir + "/probes.csv");
  if (pgm) write_pgm(truth, net.jam_density(), out_dir + "/truth.pgm");
  std::printf("wrote truth, loops, probes (pr=%g), geometry to %s\n",
              cfg.penetration_rate, out_dir.c_str());
  return 0;
}

int cmd_filter(const std::string& config_path, const std::string& in_dir,
               const std::string& out_dir, const std::string& mode_flag,
               double pr_flag, int particles_flag, bool demand_from_loops,
               bool pgm) {
  ScenarioConfig cfg = load_or_reference(config_path);
  if (!mode_flag.empty()) cfg.mode = mode_from_string(mode_flag);
  if (pr_flag >= 0.0) cfg.penetration_rate = pr_flag;
  if (particles_flag > 0) cfg.particles = particles_flag;
  const Network net = build(cfg);

  std::map<int, std::vector<Measurement>> loop_bins, probe_bins;
  const auto loops = parse_loops_file(in_dir + "/loops.csv");
  loop_bins = bin_measurements(loop_measurements(loops));
  if (cfg.mode == FilterMode::probes_only || cfg.mode == FilterMode::fused) {
    const auto geometry = parse_geometry_file(in_dir + "/geometry.csv");
    MatchStats stats;
    probe_bins = bin_measurements(match_probes(
        parse_probes_file(in_dir + "/probes.csv"), geometry, &stats));
    std::printf("probes: %ld matched, %ld geometry-rejected, %ld "
                "heading-rejected\n",
                stats.matched, stats.geometry_rejected,
                stats.heading_rejected);
  }

  const DemandSchedule schedule =
      demand_from_loops ? boundary_series(loops, net, cfg.horizon_s)
                        : make_demand_schedule(cfg);

  Grid truth;
  const Grid* truth_ptr = nullptr;
  const std::string truth_path = in_dir + "/truth.csv";
  if (std::filesystem::exists(truth_path)) {
    truth = read_matrix_csv(truth_path);
    truth_ptr = &truth;
  }

  const RunReport report =
      run_filter(cfg, net, schedule, loop_bins, probe_bins, truth_ptr);
  export_grids(report, out_dir, pgm);
  if (report.mape)
    std::printf("%s: overall MAPE %.2f%% (congested %.2f%%, freeflow %.2f%%) "
                "in %.1f s\n",
                run_name(report.mode, report.penetration_rate).c_str(),
                100 * report.mape->overall, 100 * report.mape->congested,
                100 * report.mape->freeflow, report.runtime_s);
  else
    std::printf("%s: no reference grid, estimate written (%.1f s)\n",
                run_name(report.mode, report.penetration_rate).c_str(),
                report.runtime_s);
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& estimate,
                 const std::string& reference, const std::string& out_path) {
  ScenarioConfig cfg = load_or_reference(config_path);
  const Network net = build(cfg);
  const Grid est = read_matrix_csv(estimate);
  const Grid ref = read_matrix_csv(reference);
  const MapeResult m =
      compute_mape(est, ref, net.critical_density(), cfg.mape_floor);
  std::printf("overall %.4f%%  congested %.4f%%  freeflow %.4f%%  "
              "(%ld cells evaluated, %ld excluded)\n",
              100 * m.overall, 100 * m.congested, 100 * m.freeflow,
              m.evaluated, m.excluded);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << "key,value\n";
    out << "mape_overall," << m.overall << "\n";
    out << "mape_congested," << m.congested << "\n";
    out << "mape_freeflow," << m.freeflow << "\n";
    out << "evaluated_cells," << m.evaluated << "\n";
    out << "excluded_cells," << m.excluded << "\n";
  }
  return 0;
}

int cmd_validate(const std::string& config_path, const std::string& corridor,
                 const std::string& loops, const std::string& probes,
                 const std::string& geometry) {
  int problems = 0;
  auto report = [&problems](const std::string& file,
                            const std::vector<std::string>& issues) {
    for (const std::string& issue : issues) {
      std::fprintf(stderr, "%s: %s\n", file.c_str(), issue.c_str());
      ++problems;
    }
  };

  if (!config_path.empty()) {
    try {
      const ScenarioConfig cfg = load_scenario(config_path);
      validate_scenario(cfg, build(cfg));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "%s: %s\n", config_path.c_str(), e.what());
      ++problems;
    }
  }
  std::vector<std::string> issues;
  if (!corridor.empty()) {
    issues.clear();
    const CorridorSpec spec = parse_corridor_file(corridor, &issues);
    report(corridor, issues);
    if (issues.empty()) {
      try {
        build_network(spec, 5.0);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", corridor.c_str(), e.what());
        ++problems;
      }
    }
  }
  if (!loops.empty()) {
    issues.clear();
    parse_loops_file(loops, &issues);
    report(loops, issues);
  }
  if (!probes.empty()) {
    issues.clear();
    parse_probes_file(probes, &issues);
    report(probes, issues);
  }
  if (!geometry.empty()) {
    issues.clear();
    const auto boxes = parse_geometry_file(geometry, &issues);
    report(geometry, issues);
    if (issues.empty()) {
      try {
        validate_geometry(boxes);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", geometry.c_str(), e.what());
        ++problems;
      }
    }
  }
  if (problems) {
    std::fprintf(stderr, "%d problem(s) found\n", problems);
    return 1;
  }
  std::printf("all inputs valid\n");
  return 0;
}

int cmd_demo(const std::string& config_path, const std::string& out_dir,
             int seeds, int particles_flag, double horizon_flag, bool pgm) {
  ScenarioConfig cfg = load_or_reference(config_path);
  if (particles_flag > 0) cfg.particles = particles_flag;
  if (horizon_flag > 0.0) {
    // Trim the horizon and the demand profile together.
    cfg.horizon_s = horizon_flag;
    const Network net = build(cfg);
    const int bins = bin_count(cfg);
    Eigen::ArrayXXd demand(net.queue_count(), bins);
    for (int b = 0; b < bins; ++b)
      demand.col(b) =
          cfg.demand_bins.col(std::min<int>(b, cfg.demand_bins.cols() - 1));
    cfg.demand_bins = demand;
  }
  run_demo(cfg, out_dir, seeds, pgm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Freeway density estimation: stochastic cell-transmission simulation "
      "with particle-filter fusion of loop and probe data"};
  app.require_subcommand(1);

  std::string config, out_dir = "out", in_dir = "out";
  std::string mode, corridor, loops, probes, geometry;
  std::string estimate, reference, report_path;
  double pr = -1.0, horizon = -1.0;
  int particles = -1, seeds = 2;
  bool pgm = false;

  auto* sim = app.add_subcommand(
      "simulate", "generate a synthetic truth and its measurement files");
  sim->add_option("--config", config, "scenario JSON (default: built-in)");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_flag("--pgm", pgm, "also write graymap renderings");

  auto* fil = app.add_subcommand(
      "filter", "run the filter in one mode over simulated or ingested data");
  fil->add_option("--config", config, "scenario JSON (default: built-in)");
  fil->add_option("--in", in_dir, "directory with loops/probes/geometry csv");
  fil->add_option("--out", out_dir, "output directory");
  fil->add_option("--mode", mode,
                  "open_loop | loops_only | probes_only | fused");
  fil->add_option("--pr", pr, "penetration rate override");
  fil->add_option("--particles", particles, "particle count override");
  bool demand_from_loops = false;
  fil->add_flag("--demand-from-loops", demand_from_loops,
                "boundary demand from flow records (zero-order hold)");
  fil->add_flag("--pgm", pgm, "also write graymap renderings");

  auto* eva = app.add_subcommand("evaluate", "density MAPE of a grid");
  eva->add_option("--config", config, "scenario JSON (default: built-in)");
  eva->add_option("--estimate", estimate, "estimate grid csv")->required();
  eva->add_option("--reference", reference, "reference grid csv")->required();
  eva->add_option("--out", report_path, "write a report.csv here");

  auto* val = app.add_subcommand("validate", "schema checks on input files");
  val->add_option("--config", config, "scenario JSON");
  val->add_option("--corridor", corridor, "corridor csv");
  val->add_option("--loops", loops, "loop records csv");
  val->add_option("--probes", probes, "probe records csv");
  val->add_option("--geometry", geometry, "link geometry csv");

  auto* dem = app.add_subcommand(
      "demo", "full sweep: modes x penetration rates x seeds");
  dem->add_option("--config", config, "scenario JSON (default: built-in)");
  dem->add_option("--out", out_dir, "output directory");
  dem->add_option("--seeds", seeds, "number of seed offsets");
  dem->add_option("--particles", particles, "particle count override");
  dem->add_option("--horizon", horizon, "horizon override (s)");
  dem->add_flag("--pgm", pgm, "also write graymap renderings");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config, out_dir, pgm);
    if (fil->parsed())
      return cmd_filter(config, in_dir, out_dir, mode, pr, particles,
                        demand_from_loops, pgm);
    if (eva->parsed())
      return cmd_evaluate(config, estimate, reference, report_path);
    if (val->parsed())
      return cmd_validate(config, corridor, loops, probes, geometry);
    if (dem->parsed())
      return cmd_demo(config, out_dir, seeds, particles, horizon, pgm);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
