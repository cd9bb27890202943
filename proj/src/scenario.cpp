#include "ctmf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace ctmf {

const char* to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::open_loop: return "open_loop";
    case FilterMode::loops_only: return "loops_only";
    case FilterMode::probes_only: return "probes_only";
    case FilterMode::fused: return "fused";
  }
  return "?";
}

FilterMode mode_from_string(const std::string& s) {
  if (s == "open_loop") return FilterMode::open_loop;
  if (s == "loops_only") return FilterMode::loops_only;
  if (s == "probes_only") return FilterMode::probes_only;
  if (s == "fused") return FilterMode::fused;
  throw std::invalid_argument("unknown filter mode '" + s + "'");
}

Network build(const ScenarioConfig& cfg) {
  return build_network(cfg.corridor, cfg.dt);
}

int step_count(const ScenarioConfig& cfg) {
  return static_cast<int>(std::llround(cfg.horizon_s / cfg.dt));
}

int bin_count(const ScenarioConfig& cfg) {
  return static_cast<int>(std::llround(cfg.horizon_s / kBinSeconds));
}

void validate_scenario(const ScenarioConfig& cfg, const Network& net) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("scenario: " + msg);
  };
  if (!(cfg.dt > 0.0)) fail("dt must be positive");
  const double bins_per = kBinSeconds / cfg.dt;
  if (std::fabs(bins_per - std::round(bins_per)) > 1e-9)
    fail("dt must divide the 300 s assimilation bin");
  if (!(cfg.horizon_s > 0.0)) fail("horizon must be positive");
  const double n_bins = cfg.horizon_s / kBinSeconds;
  if (std::fabs(n_bins - std::round(n_bins)) > 1e-9)
    fail("horizon must be a whole number of 300 s bins");
  if (cfg.particles < 1) fail("particle count must be >= 1");
  if (!(cfg.penetration_rate >= 0.0 && cfg.penetration_rate <= 1.0))
    fail("penetration rate must lie in [0,1]");
  if (cfg.measurement_noise_frac < 0.0 || cfg.demand_noise_frac < 0.0 ||
      cfg.init_noise_frac < 0.0)
    fail("noise fractions must be non-negative");
  if (!(cfg.split_concentration > 0.0))
    fail("split concentration must be positive");
  if (!(cfg.likelihood.variance_floor_frac > 0.0))
    fail("variance floor must be positive");
  if (!(cfg.mape_floor > 0.0)) fail("mape floor must be positive");

  std::set<int> det(cfg.detectors.begin(), cfg.detectors.end());
  for (int link : cfg.detectors)
    if (!net.has_link(link) || net.link_by_id(link).density_slot < 0)
      fail("detector on unknown or density-free link " + std::to_string(link));
  for (int link : cfg.held_out)
    if (!det.count(link))
      fail("held-out detector " + std::to_string(link) +
           " is not in the detector list");

  if (cfg.demand_bins.rows() != net.queue_count())
    fail("demand rows (" + std::to_string(cfg.demand_bins.rows()) +
         ") must match the source count (" +
         std::to_string(net.queue_count()) + ")");
  if (cfg.demand_bins.cols() != bin_count(cfg))
    fail("demand columns must match the bin count " +
         std::to_string(bin_count(cfg)));
  if ((cfg.demand_bins < 0.0).any()) fail("demands must be non-negative");

  if (cfg.initial_density.size() != net.density_count())
    fail("initial density must have one entry per density-carrying link");
  if ((cfg.initial_density < 0.0).any() ||
      (cfg.initial_density > net.jam_density()).any())
    fail("initial density outside [0, jam]");
}

NoiseConfig make_noise(const ScenarioConfig& cfg, const Network& net,
                       std::uint64_t seed) {
  NoiseConfig noise;
  noise.demand_sigma_frac = cfg.demand_noise_frac;
  noise.seed = seed;
  for (const Node& node : net.nodes()) {
    if (node.kind != NodeKind::diverge) continue;
    const double mean = node.split_ratio;
    if (!(mean > 0.0 && mean < 1.0))
      throw std::invalid_argument(
          "stochastic split ratios require beta strictly inside (0,1); link " +
          std::to_string(net.links()[node.ramp].id) + " has " +
          std::to_string(mean));
    noise.split_shapes.push_back(
        NoiseConfig::shapes_from_mean(mean, cfg.split_concentration));
  }
  return noise;
}

DemandSchedule make_demand_schedule(const ScenarioConfig& cfg) {
  DemandSchedule schedule;
  schedule.bin_s = kBinSeconds;
  schedule.nominal = cfg.demand_bins;
  return schedule;
}

namespace {

/// Piecewise demand profile: base level with a plateau over [first, last].
Eigen::ArrayXd peak_profile(int bins, double base, double peak, int first,
                            int last) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Constant(bins, base);
  for (int b = first; b <= last && b < bins; ++b) out[b] = peak;
  return out;
}

}  // namespace

ScenarioConfig reference_scenario() {
  ScenarioConfig cfg;
  cfg.network_path = "reference";

  const int n_main = 40;
  for (int i = 0; i < n_main; ++i) {
    CorridorLink cl;
    cl.id = i;
    cl.kind = LinkKind::mainline;
    cl.length = 200.0;
    cl.free_speed = 30.0;
    cl.wave_speed = 6.0;
    // Capacity drop over links 24..27 (0.4 veh/s against 0.6 elsewhere).
    cl.jam_density = (i >= 24 && i <= 27) ? 0.08 : 0.12;
    cfg.corridor.links.push_back(cl);
  }
  const int onramp_nodes[] = {7, 15, 23, 31};
  for (int k = 0; k < 4; ++k) {
    CorridorLink cl;
    cl.id = 100 + k;
    cl.kind = LinkKind::onramp;
    cl.length = 150.0;
    cl.free_speed = 20.0;
    cl.wave_speed = 6.0;
    cl.jam_density = 0.12;
    cl.at_node = onramp_nodes[k];
    cfg.corridor.links.push_back(cl);
  }
  const int offramp_nodes[] = {11, 19, 27};
  const double betas[] = {0.10, 0.12, 0.10};
  for (int k = 0; k < 3; ++k) {
    CorridorLink cl;
    cl.id = 200 + k;
    cl.kind = LinkKind::offramp;
    cl.length = 150.0;
    cl.free_speed = 20.0;
    cl.wave_speed = 6.0;
    cl.jam_density = 0.12;
    cl.at_node = offramp_nodes[k];
    cl.split_ratio = betas[k];
    cfg.corridor.links.push_back(cl);
  }

  cfg.dt = 5.0;
  cfg.horizon_s = 7200.0;
  cfg.particles = 1000;
  cfg.demand_noise_frac = 0.20;
  cfg.split_concentration = 12.0;
  cfg.init_noise_frac = 0.3;
  cfg.resample_ess_frac = 0.5;  // resample only on real weight concentration
  cfg.detectors = {2, 8, 14, 20, 26, 32, 38};
  cfg.held_out = {14, 32};

  // The peak holds the bottleneck arrivals just above capacity, so the
  // extent of the queue is dominated by the integrated process noise.
  const int bins = bin_count(cfg);
  cfg.demand_bins.resize(1 + 4, bins);
  cfg.demand_bins.row(0) = peak_profile(bins, 0.22, 0.32, 3, 17).transpose();
  for (int k = 0; k < 4; ++k)
    cfg.demand_bins.row(1 + k) =
        peak_profile(bins, 0.04, 0.06, 3, 17).transpose();

  const Network net = build(cfg);
  cfg.initial_density = Eigen::ArrayXd::Constant(net.density_count(), 0.008);
  return cfg;
}

namespace {

using nlohmann::json;

Eigen::ArrayXd demand_row(const json& value, int bins,
                          const std::string& key) {
  Eigen::ArrayXd row(bins);
  if (value.is_number()) {
    row.setConstant(value.get<double>());
    return row;
  }
  if (!value.is_array() || static_cast<int>(value.size()) != bins)
    throw std::invalid_argument("scenario: demand for '" + key +
                                "' must be a number or an array of " +
                                std::to_string(bins) + " per-bin values");
  for (int b = 0; b < bins; ++b) row[b] = value[b].get<double>();
  return row;
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("scenario '" + path +
                                "' is not valid JSON: " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();

  ScenarioConfig cfg;
  const std::string network = j.value("network", std::string("reference"));
  if (network == "reference") {
    cfg = reference_scenario();
  } else {
    const auto net_path = std::filesystem::path(network).is_absolute()
                              ? std::filesystem::path(network)
                              : dir / network;
    cfg.network_path = net_path.string();
    cfg.corridor = parse_corridor_file(cfg.network_path);
  }

  cfg.dt = j.value("dt_s", cfg.dt);
  cfg.horizon_s = j.value("horizon_s", cfg.horizon_s);
  cfg.particles = j.value("particles", cfg.particles);
  if (j.contains("mode")) cfg.mode = mode_from_string(j["mode"]);
  cfg.penetration_rate = j.value("penetration_rate", cfg.penetration_rate);
  cfg.measurement_noise_frac =
      j.value("measurement_noise_frac", cfg.measurement_noise_frac);
  cfg.demand_noise_frac = j.value("demand_noise_frac", cfg.demand_noise_frac);
  cfg.split_concentration =
      j.value("split_concentration", cfg.split_concentration);
  cfg.init_noise_frac = j.value("init_noise_frac", cfg.init_noise_frac);
  cfg.resample_ess_frac = j.value("resample_ess_frac", cfg.resample_ess_frac);
  cfg.likelihood.variance_floor_frac =
      j.value("variance_floor_frac", cfg.likelihood.variance_floor_frac);
  cfg.likelihood.outlier_sigma =
      j.value("outlier_sigma", cfg.likelihood.outlier_sigma);
  cfg.mape_floor = j.value("mape_floor", cfg.mape_floor);
  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    cfg.seeds.truth = s.value("truth", cfg.seeds.truth);
    cfg.seeds.filter = s.value("filter", cfg.seeds.filter);
    cfg.seeds.measurement = s.value("measurement", cfg.seeds.measurement);
  }
  if (j.contains("detectors"))
    cfg.detectors = j["detectors"].get<std::vector<int>>();
  if (j.contains("held_out"))
    cfg.held_out = j["held_out"].get<std::vector<int>>();

  const Network net = build(cfg);
  const int bins = bin_count(cfg);

  if (j.contains("demand")) {
    const json& d = j["demand"];
    if (!d.is_object())
      throw std::invalid_argument(
          "scenario: demand must map entry link ids to values");
    cfg.demand_bins = Eigen::ArrayXXd::Zero(net.queue_count(), bins);
    std::set<int> covered;
    const int head_id = net.links()[net.mainline().front()].id;
    for (const auto& [key, value] : d.items()) {
      const int link_id = std::stoi(key);
      int slot = -1;
      if (link_id == head_id) slot = 0;
      for (std::size_t k = 0; k < net.onramps().size(); ++k)
        if (net.links()[net.onramps()[k]].id == link_id)
          slot = static_cast<int>(k) + 1;
      if (slot < 0)
        throw std::invalid_argument(
            "scenario: demand key " + key +
            " is neither the first mainline link nor an onramp");
      cfg.demand_bins.row(slot) = demand_row(value, bins, key).transpose();
      covered.insert(slot);
    }
    if (static_cast<int>(covered.size()) != net.queue_count())
      throw std::invalid_argument(
          "scenario: demand must cover the upstream boundary and every "
          "onramp");
  } else if (cfg.demand_bins.rows() != net.queue_count() ||
             cfg.demand_bins.cols() != bins) {
    throw std::invalid_argument("scenario: demand section is required");
  }

  if (j.contains("initial_density")) {
    const json& init = j["initial_density"];
    cfg.initial_density.resize(net.density_count());
    if (init.is_number()) {
      cfg.initial_density.setConstant(init.get<double>());
    } else if (init.is_object()) {
      const double fallback = init.value("default", 0.0);
      cfg.initial_density.setConstant(fallback);
      for (const auto& [key, value] : init.items()) {
        if (key == "default") continue;
        cfg.initial_density[net.density_slot_of(std::stoi(key))] =
            value.get<double>();
      }
    } else {
      throw std::invalid_argument(
          "scenario: initial_density must be a number or an object");
    }
  } else if (cfg.initial_density.size() != net.density_count()) {
    throw std::invalid_argument("scenario: initial_density is required");
  }

  validate_scenario(cfg, net);
  return cfg;
}

}  // namespace ctmf
