#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ctmf/ctm.hpp"
#include "ctmf/fusion.hpp"
#include "ctmf/network.hpp"
#include "ctmf/records.hpp"

namespace ctmf {

enum class FilterMode { open_loop, loops_only, probes_only, fused };

const char* to_string(FilterMode mode);
FilterMode mode_from_string(const std::string& s);

struct Seeds {
  std::uint64_t truth = 1;
  std::uint64_t filter = 2;
  std::uint64_t measurement = 3;
};

/// Everything that determines a run: corridor, horizon, particle count,
/// noise and likelihood settings, measurement layout, and seeds.
struct ScenarioConfig {
  CorridorSpec corridor;
  std::string network_path;  // where the corridor came from, if a file

  double dt = 5.0;           // s; must divide the 300 s bin
  double horizon_s = 7200.0; // multiple of the bin width
  int particles = 1000;

  FilterMode mode = FilterMode::fused;
  double penetration_rate = 0.03;       // fraction of vehicles reporting
  double measurement_noise_frac = 0.10; // sensor noise, both kinds
  double demand_noise_frac = 0.15;      // process noise on boundary inflows
  double split_concentration = 50.0;    // beta a+b at each diverge
  double init_noise_frac = 0.2;         // multiplicative initial spread
  double resample_ess_frac = 0.0;       // 0: resample on every measurement

  LikelihoodConfig likelihood;
  Seeds seeds;

  std::vector<int> detectors;  // mainline link ids carrying loop detectors
  std::vector<int> held_out;   // subset excluded from assimilation

  Eigen::ArrayXXd demand_bins;    // queue slots x bins, veh/s
  Eigen::ArrayXd initial_density; // per density slot, veh/m
  double mape_floor = 1e-4;       // reference cells below this are skipped
};

Network build(const ScenarioConfig& cfg);
void validate_scenario(const ScenarioConfig& cfg, const Network& net);

NoiseConfig make_noise(const ScenarioConfig& cfg, const Network& net,
                       std::uint64_t seed);
DemandSchedule make_demand_schedule(const ScenarioConfig& cfg);
int step_count(const ScenarioConfig& cfg);
int bin_count(const ScenarioConfig& cfg);

/// The built-in desk-scale corridor: 40 mainline links with a capacity drop
/// two thirds of the way down, four onramps, three offramps, a two-hour
/// horizon, and an afternoon-peak demand profile that drives a sustained
/// congestion wave upstream of the drop.
ScenarioConfig reference_scenario();

/// Loads a scenario from JSON (schema in docs/formats.md). Relative paths
/// resolve against the config file's directory; "network": "reference"
/// selects the built-in corridor.
ScenarioConfig load_scenario(const std::string& path);

}  // namespace ctmf
