#include "ctmf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ctmf/random.hpp"

namespace ctmf {

namespace fs = std::filesystem;

namespace {

int steps_per_bin(const ScenarioConfig& cfg) {
  return static_cast<int>(std::llround(kBinSeconds / cfg.dt));
}

/// Grid column holding the last in-bin state of bin k.
int bin_reference_column(const ScenarioConfig& cfg, int bin) {
  return (bin + 1) * steps_per_bin(cfg) - 1;
}

int probe_count(double pr) {
  return static_cast<int>(std::floor(pr * 100.0 + 1e-9));
}

}  // namespace

Grid generate_truth(const ScenarioConfig& cfg, const Network& net) {
  validate_scenario(cfg, net);
  const int total = step_count(cfg);
  NoiseConfig noise = make_noise(cfg, net, cfg.seeds.truth);
  const DemandSchedule schedule = make_demand_schedule(cfg);

  Grid grid(net.density_count(), total + 1);
  DensityState state{cfg.initial_density,
                     Eigen::ArrayXd::Zero(net.queue_count())};
  grid.col(0) = state.rho;
  for (int t = 1; t <= total; ++t) {
    std::mt19937_64 rng = make_stream(cfg.seeds.truth, StreamKind::predict, 0,
                                      static_cast<std::uint64_t>(t));
    step_stochastic_in_place(net, state.rho, state.queues,
                             schedule.at_step(t, cfg.dt), noise, rng);
    grid.col(t) = state.rho;
  }
  return grid;
}

double congested_fraction(const Grid& grid, const Network& net) {
  long congested = 0;
  for (Eigen::Index s = 0; s < grid.rows(); ++s)
    congested +=
        (grid.row(s) > net.critical_density()[s]).count();
  return static_cast<double>(congested) /
         static_cast<double>(grid.rows() * grid.cols());
}

std::vector<LinkGeometry> axis_geometry(const Network& net) {
  std::vector<LinkGeometry> geometry;
  std::vector<double> node_x;  // x of junction i = end of mainline link i
  double x = 0.0;
  for (int idx : net.mainline()) {
    const Link& link = net.links()[idx];
    LinkGeometry g;
    g.link = link.id;
    g.x_min = x;
    g.x_max = x + link.length;
    g.y_min = 0.0;
    g.y_max = 30.0;
    g.bearing = 0.0;
    geometry.push_back(g);
    x += link.length;
    node_x.push_back(x);
  }
  std::map<int, int> ramp_node;  // link array index -> node id
  for (const Node& node : net.nodes())
    if (node.ramp >= 0) ramp_node[node.ramp] = node.id;
  for (int idx : net.onramps()) {
    const Link& link = net.links()[idx];
    const double x_end = node_x[ramp_node.at(idx)];
    geometry.push_back({link.id, x_end - link.length, x_end, 40.0, 70.0, 0.0});
  }
  for (int idx : net.offramps()) {
    const Link& link = net.links()[idx];
    const double x_start = node_x[ramp_node.at(idx)];
    geometry.push_back(
        {link.id, x_start, x_start + link.length, -70.0, -40.0, 0.0});
  }
  validate_geometry(geometry);
  return geometry;
}

std::vector<LoopRecord> simulate_loop_records(const ScenarioConfig& cfg,
                                              const Network& net,
                                              const Grid& truth) {
  std::vector<LoopRecord> records;
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int bin = 0; bin < bin_count(cfg); ++bin) {
    std::mt19937_64 rng = make_stream(cfg.seeds.measurement,
                                      StreamKind::loop_noise,
                                      static_cast<std::uint64_t>(bin), 0);
    const int col = bin_reference_column(cfg, bin);
    const double t = (bin + 1) * kBinSeconds - cfg.dt;
    for (int link_id : cfg.detectors) {
      const int slot = net.density_slot_of(link_id);
      const double value = truth(slot, col);
      LoopRecord r;
      r.t = t;
      r.detector = "D" + std::to_string(link_id);
      r.link = link_id;
      r.density =
          std::max(0.0, value * (1.0 + cfg.measurement_noise_frac * unit(rng)));
      r.healthy = true;
      records.push_back(std::move(r));
    }
  }
  return records;
}

std::vector<ProbeRecord> simulate_probe_records(
    const ScenarioConfig& cfg, const Network& net, const Grid& truth,
    const std::vector<LinkGeometry>& geometry, double pr) {
  std::map<int, const LinkGeometry*> box_of;
  for (const LinkGeometry& g : geometry) box_of[g.link] = &g;

  const int per_bin = probe_count(pr);
  std::vector<ProbeRecord> records;
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  for (int bin = 0; bin < bin_count(cfg); ++bin) {
    std::mt19937_64 rng = make_stream(
        cfg.seeds.measurement, StreamKind::probe_noise,
        static_cast<std::uint64_t>(bin),
        static_cast<std::uint64_t>(per_bin));
    const int col = bin_reference_column(cfg, bin);
    const Eigen::ArrayXd occupancy = truth.col(col) * net.length();
    const double total = occupancy.sum();
    if (!(total > 0.0)) continue;  // nothing on the road, no reports

    Eigen::ArrayXd cumulative(occupancy.size());
    double acc = 0.0;
    for (Eigen::Index s = 0; s < occupancy.size(); ++s) {
      acc += occupancy[s];
      cumulative[s] = acc;
    }
    cumulative[occupancy.size() - 1] = total;

    const double t = (bin + 1) * kBinSeconds - cfg.dt;
    for (int j = 0; j < per_bin; ++j) {
      const double pick = u01(rng) * total;
      const int slot = static_cast<int>(
          std::lower_bound(cumulative.data(),
                           cumulative.data() + cumulative.size(), pick) -
          cumulative.data());
      const Link& link = net.slot_link(slot);
      const double speed = link_velocity(*link.fd, truth(slot, col));
      const double noisy = std::max(
          0.0, speed * (1.0 + cfg.measurement_noise_frac * unit(rng)));
      const LinkGeometry& box = *box_of.at(link.id);
      ProbeRecord r;
      r.t = t;
      r.device = "p" + std::to_string(bin) + "_" + std::to_string(j);
      r.x = box.x_min + 1.0 + u01(rng) * (box.x_max - box.x_min - 2.0);
      r.y = box.y_min + 1.0 + u01(rng) * (box.y_max - box.y_min - 2.0);
      r.speed = noisy;
      double heading = box.bearing + (u01(rng) * 28.0 - 14.0);
      heading = std::fmod(heading + 360.0, 360.0);
      r.heading = heading;
      records.push_back(std::move(r));
    }
  }
  return records;
}

std::map<int, std::vector<Measurement>> simulate_loop_measurements(
    const ScenarioConfig& cfg, const Network& net, const Grid& truth) {
  return bin_measurements(
      loop_measurements(simulate_loop_records(cfg, net, truth)));
}

std::map<int, std::vector<Measurement>> simulate_probe_measurements(
    const ScenarioConfig& cfg, const Network& net, const Grid& truth,
    double pr) {
  const auto geometry = axis_geometry(net);
  return bin_measurements(
      match_probes(simulate_probe_records(cfg, net, truth, geometry, pr),
                   geometry));
}

RunReport run_filter(const ScenarioConfig& cfg, const Network& net,
                     const DemandSchedule& demands,
                     const std::map<int, std::vector<Measurement>>& loop_bins,
                     const std::map<int, std::vector<Measurement>>& probe_bins,
                     const Grid* truth) {
  validate_scenario(cfg, net);
  const auto t_start = std::chrono::steady_clock::now();
  const int total = step_count(cfg);
  const int per_bin = steps_per_bin(cfg);

  NoiseConfig noise = make_noise(cfg, net, cfg.seeds.filter);

  std::normal_distribution<double> unit(0.0, 1.0);
  ParticleEnsemble ens = init_ensemble(
      net, cfg.particles,
      [&](int p, Eigen::Ref<Eigen::ArrayXd> rho,
          Eigen::Ref<Eigen::ArrayXd> queues) {
        std::mt19937_64 rng = make_stream(cfg.seeds.filter, StreamKind::init,
                                          static_cast<std::uint64_t>(p), 0);
        for (Eigen::Index s = 0; s < rho.size(); ++s) {
          const double scale = 1.0 + cfg.init_noise_frac * unit(rng);
          rho[s] = std::clamp(cfg.initial_density[s] * scale, 0.0,
                              net.jam_density()[s]);
        }
        queues.setZero();
      });

  RunReport report;
  report.mode = cfg.mode;
  report.penetration_rate = cfg.penetration_rate;
  report.particles = cfg.particles;
  report.seeds = cfg.seeds;
  report.estimate.resize(net.density_count(), total + 1);
  report.estimate.col(0) = empirical_mean(ens).rho;
  for (int s = 0; s < net.density_count(); ++s)
    report.row_link_ids.push_back(net.slot_link(s).id);
  report.row_jam = net.jam_density();
  report.row_critical = net.critical_density();

  const bool use_loops =
      cfg.mode == FilterMode::loops_only || cfg.mode == FilterMode::fused;
  const bool use_probes =
      cfg.mode == FilterMode::probes_only || cfg.mode == FilterMode::fused;
  const bool density_only =
      cfg.mode == FilterMode::open_loop || cfg.mode == FilterMode::loops_only;
  const std::set<int> held(cfg.held_out.begin(), cfg.held_out.end());

  std::vector<Measurement> batch;
  for (int t = 1; t <= total; ++t) {
    batch.clear();
    if (t % per_bin == 0) {
      const int bin = t / per_bin - 1;
      if (use_loops) {
        const auto it = loop_bins.find(bin);
        if (it != loop_bins.end())
          for (const Measurement& m : it->second)
            if (!held.count(m.link)) batch.push_back(m);
      }
      if (use_probes) {
        const auto it = probe_bins.find(bin);
        if (it != probe_bins.end())
          batch.insert(batch.end(), it->second.begin(), it->second.end());
      }
    }
    const Eigen::ArrayXd demand = demands.at_step(t, cfg.dt);
    const AssimilationResult r =
        density_only ? pf_step(ens, net, demand, batch, noise, cfg.likelihood,
                               cfg.resample_ess_frac)
                     : rbpf_step(ens, net, demand, batch, noise,
                                 cfg.likelihood, cfg.resample_ess_frac);
    report.measurements_received += r.received;
    report.measurements_used += r.used;
    report.measurements_dropped += r.dropped;
    if (r.degenerate) ++report.degenerate_steps;
    if (r.resampled) ++report.resample_steps;
    report.estimate.col(t) = empirical_mean(ens).rho;
  }

  if (truth) {
    report.truth = *truth;
    report.mape = compute_mape(report.estimate, *truth,
                               net.critical_density(), cfg.mape_floor);
    for (int link_id : cfg.held_out) {
      const int slot = net.density_slot_of(link_id);
      const Grid est_row = report.estimate.row(slot);
      const Grid ref_row = truth->row(slot);
      Eigen::ArrayXd crit(1);
      crit[0] = net.critical_density()[slot];
      report.held_out_mape[link_id] =
          compute_mape(est_row, ref_row, crit, cfg.mape_floor).overall;
    }
  }
  report.runtime_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
  return report;
}

MapeResult compute_mape(const Grid& estimate, const Grid& reference,
                        const Eigen::ArrayXd& critical, double floor) {
  if (estimate.rows() != reference.rows() ||
      estimate.cols() != reference.cols())
    throw std::invalid_argument("estimate and reference grids differ in shape");
  if (critical.size() != estimate.rows())
    throw std::invalid_argument("one critical density per grid row required");

  MapeResult out;
  double total = 0.0, congested = 0.0, freeflow = 0.0;
  for (Eigen::Index s = 0; s < estimate.rows(); ++s) {
    for (Eigen::Index t = 0; t < estimate.cols(); ++t) {
      const double ref = reference(s, t);
      if (!(ref >= floor)) {
        ++out.excluded;
        continue;
      }
      const double err = std::fabs(estimate(s, t) - ref) / ref;
      total += err;
      ++out.evaluated;
      if (ref > critical[s]) {
        congested += err;
        ++out.congested_cells;
      } else {
        freeflow += err;
        ++out.freeflow_cells;
      }
    }
  }
  if (out.evaluated == 0)
    throw std::runtime_error("no evaluable cells above the reference floor");
  out.overall = total / out.evaluated;
  out.congested =
      out.congested_cells > 0 ? congested / out.congested_cells : 0.0;
  out.freeflow = out.freeflow_cells > 0 ? freeflow / out.freeflow_cells : 0.0;
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(double v) { return v == v ? fmt(v) : std::string(); }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write to '" + path + "'");
  return out;
}

}  // namespace

void write_matrix_csv(const Grid& grid, const std::string& path) {
  std::ofstream out = open_out(path);
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      if (c) out << ',';
      out << fmt(grid(r, c));
    }
    out << '\n';
  }
}

Grid read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (!rows.empty() && rows.front().size() != row.size())
      throw std::invalid_argument("ragged matrix in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("empty matrix in '" + path + "'");
  Grid grid(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) grid(r, c) = rows[r][c];
  return grid;
}

void write_loops_csv(const std::vector<LoopRecord>& records,
                     const std::string& path) {
  std::ofstream out = open_out(path);
  out << "t,detector,link,density,flow,speed,health\n";
  for (const LoopRecord& r : records)
    out << static_cast<long long>(r.t) << ',' << r.detector << ',' << r.link
        << ',' << fmt_opt(r.density) << ',' << fmt_opt(r.flow) << ','
        << fmt_opt(r.speed) << ',' << (r.healthy ? 1 : 0) << '\n';
}

void write_probes_csv(const std::vector<ProbeRecord>& records,
                      const std::string& path) {
  std::ofstream out = open_out(path);
  out << "t,device,x,y,speed,heading\n";
  for (const ProbeRecord& r : records)
    out << static_cast<long long>(r.t) << ',' << r.device << ',' << fmt(r.x)
        << ',' << fmt(r.y) << ',' << fmt(r.speed) << ',' << fmt(r.heading)
        << '\n';
}

void write_geometry_csv(const std::vector<LinkGeometry>& geometry,
                        const std::string& path) {
  std::ofstream out = open_out(path);
  out << "link,x_min,x_max,y_min,y_max,bearing\n";
  for (const LinkGeometry& g : geometry)
    out << g.link << ',' << fmt(g.x_min) << ',' << fmt(g.x_max) << ','
        << fmt(g.y_min) << ',' << fmt(g.y_max) << ',' << fmt(g.bearing)
        << '\n';
}

void write_pgm(const Grid& grid, const Eigen::ArrayXd& jam,
               const std::string& path) {
  std::ofstream out = open_out(path);
  out << "P2\n" << grid.cols() << ' ' << grid.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      const double frac = std::clamp(grid(r, c) / jam[r], 0.0, 1.0);
      const int gray = 255 - static_cast<int>(std::lround(frac * 255.0));
      if (c) out << ' ';
      out << gray;
    }
    out << '\n';
  }
}

std::string run_name(FilterMode mode, double pr) {
  std::string name = to_string(mode);
  if (mode == FilterMode::probes_only || mode == FilterMode::fused)
    name += "_pr" + std::to_string(probe_count(pr));
  return name;
}

void export_grids(const RunReport& report, const std::string& dir, bool pgm) {
  fs::create_directories(dir);
  const std::string name = run_name(report.mode, report.penetration_rate);
  write_matrix_csv(report.estimate, dir + "/estimate_" + name + ".csv");
  if (report.truth) write_matrix_csv(*report.truth, dir + "/truth.csv");
  if (pgm) {
    write_pgm(report.estimate, report.row_jam,
              dir + "/estimate_" + name + ".pgm");
    if (report.truth) write_pgm(*report.truth, report.row_jam, dir + "/truth.pgm");
  }

  {
    std::ofstream out = open_out(dir + "/report.csv");
    out << "key,value\n";
    out << "mode," << to_string(report.mode) << '\n';
    out << "penetration_rate," << fmt(report.penetration_rate) << '\n';
    out << "particles," << report.particles << '\n';
    if (report.mape) {
      out << "mape_overall," << fmt(report.mape->overall) << '\n';
      out << "mape_congested," << fmt(report.mape->congested) << '\n';
      out << "mape_freeflow," << fmt(report.mape->freeflow) << '\n';
      out << "evaluated_cells," << report.mape->evaluated << '\n';
      out << "excluded_cells," << report.mape->excluded << '\n';
      out << "congested_cells," << report.mape->congested_cells << '\n';
      out << "freeflow_cells," << report.mape->freeflow_cells << '\n';
    }
    for (const auto& [link, value] : report.held_out_mape)
      out << "held_out_mape_" << link << ',' << fmt(value) << '\n';
    out << "measurements_received," << report.measurements_received << '\n';
    out << "measurements_used," << report.measurements_used << '\n';
    out << "measurements_dropped," << report.measurements_dropped << '\n';
    out << "degenerate_steps," << report.degenerate_steps << '\n';
    out << "resample_steps," << report.resample_steps << '\n';
  }

  {
    std::ofstream out = open_out(dir + "/meta.txt");
    out << "run " << name << "\n";
    out << "seeds truth=" << report.seeds.truth
        << " filter=" << report.seeds.filter
        << " measurement=" << report.seeds.measurement << "\n";
    out << "particles " << report.particles << "\n";
    out << "grid " << report.estimate.rows() << " links x "
        << report.estimate.cols() << " timesteps\n";
    if (report.mape) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "mape overall=%.4f%% congested=%.4f%% freeflow=%.4f%%\n",
                    100.0 * report.mape->overall, 100.0 * report.mape->congested,
                    100.0 * report.mape->freeflow);
      out << buf;
    }
    out << "rows (upstream to downstream, then ramps):";
    for (int id : report.row_link_ids) out << ' ' << id;
    out << "\n";
  }
}

DemoSummary run_demo(const ScenarioConfig& base, const std::string& out_dir,
                     int n_seeds, bool pgm) {
  if (n_seeds < 1) throw std::invalid_argument("demo needs at least one seed");
  const std::vector<double> rates = {0.0, 0.01, 0.02, 0.03};

  DemoSummary summary;
  summary.rates = rates;
  summary.without_loops.resize(rates.size());
  summary.with_loops.resize(rates.size());
  auto add = [](MapeResult& acc, const MapeResult& m) {
    acc.overall += m.overall;
    acc.congested += m.congested;
    acc.freeflow += m.freeflow;
    acc.evaluated += m.evaluated;
    acc.excluded += m.excluded;
    acc.congested_cells += m.congested_cells;
    acc.freeflow_cells += m.freeflow_cells;
  };

  fs::create_directories(out_dir);
  for (int i = 0; i < n_seeds; ++i) {
    ScenarioConfig cfg = base;
    cfg.seeds.truth = base.seeds.truth + static_cast<std::uint64_t>(i);
    cfg.seeds.filter = base.seeds.filter + static_cast<std::uint64_t>(i);
    cfg.seeds.measurement =
        base.seeds.measurement + static_cast<std::uint64_t>(i);
    const Network net = build(cfg);
    const std::string seed_dir = out_dir + "/seed_" + std::to_string(i);
    fs::create_directories(seed_dir);

    const Grid truth = generate_truth(cfg, net);
    write_matrix_csv(truth, seed_dir + "/truth.csv");
    {
      std::ofstream out = open_out(seed_dir + "/corridor.csv");
      write_corridor(cfg.corridor, out);
    }
    const auto geometry = axis_geometry(net);
    write_geometry_csv(geometry, seed_dir + "/geometry.csv");
    write_loops_csv(simulate_loop_records(cfg, net, truth),
                    seed_dir + "/loops.csv");

    // Round-trip measurements through the files they were just written to.
    const auto loop_bins = bin_measurements(
        loop_measurements(parse_loops_file(seed_dir + "/loops.csv")));
    const auto geo = parse_geometry_file(seed_dir + "/geometry.csv");
    std::map<int, std::map<int, std::vector<Measurement>>> probe_bins_by_rate;
    for (std::size_t r = 1; r < rates.size(); ++r) {
      const int pct = probe_count(rates[r]);
      const std::string path =
          seed_dir + "/probes_pr" + std::to_string(pct) + ".csv";
      write_probes_csv(
          simulate_probe_records(cfg, net, truth, geometry, rates[r]), path);
      probe_bins_by_rate[pct] =
          bin_measurements(match_probes(parse_probes_file(path), geo));
    }

    const DemandSchedule schedule = make_demand_schedule(cfg);
    const std::map<int, std::vector<Measurement>> no_bins;
    auto run_one = [&](FilterMode mode, double pr,
                       const std::map<int, std::vector<Measurement>>& probes)
        -> MapeResult {
      ScenarioConfig c = cfg;
      c.mode = mode;
      c.penetration_rate = pr;
      const RunReport report =
          run_filter(c, net, schedule, loop_bins, probes, &truth);
      export_grids(report, seed_dir + "/" + run_name(mode, pr), pgm);
      return *report.mape;
    };

    add(summary.without_loops[0],
        run_one(FilterMode::open_loop, 0.0, no_bins));
    add(summary.with_loops[0], run_one(FilterMode::loops_only, 0.0, no_bins));
    for (std::size_t r = 1; r < rates.size(); ++r) {
      const auto& probes = probe_bins_by_rate[probe_count(rates[r])];
      add(summary.without_loops[r],
          run_one(FilterMode::probes_only, rates[r], probes));
      add(summary.with_loops[r], run_one(FilterMode::fused, rates[r], probes));
    }
  }

  for (std::size_t r = 0; r < rates.size(); ++r) {
    for (MapeResult* m : {&summary.without_loops[r], &summary.with_loops[r]}) {
      m->overall /= n_seeds;
      m->congested /= n_seeds;
      m->freeflow /= n_seeds;
    }
  }

  {
    std::ofstream out = open_out(out_dir + "/summary.csv");
    out << "pr,without_congested,without_freeflow,without_overall,"
           "with_congested,with_freeflow,with_overall\n";
    for (std::size_t r = 0; r < rates.size(); ++r) {
      const MapeResult& wo = summary.without_loops[r];
      const MapeResult& wi = summary.with_loops[r];
      out << fmt(rates[r]) << ',' << fmt(wo.congested) << ','
          << fmt(wo.freeflow) << ',' << fmt(wo.overall) << ','
          << fmt(wi.congested) << ',' << fmt(wi.freeflow) << ','
          << fmt(wi.overall) << '\n';
    }
  }

  std::printf("density MAPE over %d seed(s), %%\n", n_seeds);
  std::printf("%8s | %8s %8s %8s | %8s %8s %8s\n", "PR", "cong", "ff",
              "overall", "cong", "ff", "overall");
  std::printf("%8s | %26s | %26s\n", "", "without loops", "with loops");
  for (std::size_t r = 0; r < rates.size(); ++r) {
    const MapeResult& wo = summary.without_loops[r];
    const MapeResult& wi = summary.with_loops[r];
    char label[16];
    if (r == 0)
      std::snprintf(label, sizeof(label), "none");
    else
      std::snprintf(label, sizeof(label), "%d%%", probe_count(rates[r]));
    std::printf("%8s | %8.2f %8.2f %8.2f | %8.2f %8.2f %8.2f\n", label,
                100 * wo.congested, 100 * wo.freeflow, 100 * wo.overall,
                100 * wi.congested, 100 * wi.freeflow, 100 * wi.overall);
  }
  return summary;
}

}  // namespace ctmf
