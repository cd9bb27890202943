#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctmf/fusion.hpp"
#include "ctmf/records.hpp"
#include "ctmf/scenario.hpp"

namespace ctmf {

/// Density trajectory: one row per density slot, one column per timestep
/// (column 0 is the initial condition, column s the state after step s).
using Grid = Eigen::ArrayXXd;

struct MapeResult {
  double overall = 0.0;    // fractions, not percent
  double congested = 0.0;  // cells where the reference exceeds critical
  double freeflow = 0.0;
  long evaluated = 0;
  long excluded = 0;  // reference below the floor
  long congested_cells = 0;
  long freeflow_cells = 0;
};

struct RunReport {
  FilterMode mode = FilterMode::fused;
  double penetration_rate = 0.0;
  int particles = 0;
  Seeds seeds;
  Grid estimate;
  std::optional<Grid> truth;
  std::optional<MapeResult> mape;
  std::map<int, double> held_out_mape;  // by detector link id
  long measurements_received = 0;
  long measurements_used = 0;
  long measurements_dropped = 0;
  int degenerate_steps = 0;
  int resample_steps = 0;
  double runtime_s = 0.0;             // console diagnostics, never exported
  std::vector<int> row_link_ids;      // grid row -> corridor link id
  Eigen::ArrayXd row_jam;             // per grid row, for renderings
  Eigen::ArrayXd row_critical;        // per grid row, for evaluation
};

/// One stochastic rollout of the corridor under the scenario's demand
/// profile and process noise, recorded at every timestep.
Grid generate_truth(const ScenarioConfig& cfg, const Network& net);

/// Fraction of truth cells above their link's critical density.
double congested_fraction(const Grid& grid, const Network& net);

/// Axis-aligned synthetic geometry: mainline boxes laid end to end along +x,
/// ramps offset in y near their junctions; bearings are all zero.
std::vector<LinkGeometry> axis_geometry(const Network& net);

/// Detector records for every configured detector (held-out ones included),
/// one per 5-minute bin, sampled from the truth at the bin's final in-bin
/// timestep with multiplicative Gaussian noise clamped at zero.
std::vector<LoopRecord> simulate_loop_records(const ScenarioConfig& cfg,
                                              const Network& net,
                                              const Grid& truth);

/// Probe records for penetration rate `pr`: floor(pr*100) reports per bin,
/// link drawn with replacement proportional to occupancy at the bin's final
/// in-bin timestep, speed from the truth velocity with multiplicative noise,
/// positioned inside the link's bounding box with a compliant heading.
std::vector<ProbeRecord> simulate_probe_records(
    const ScenarioConfig& cfg, const Network& net, const Grid& truth,
    const std::vector<LinkGeometry>& geometry, double pr);

/// In-memory measurement batches keyed by bin.
std::map<int, std::vector<Measurement>> simulate_loop_measurements(
    const ScenarioConfig& cfg, const Network& net, const Grid& truth);
std::map<int, std::vector<Measurement>> simulate_probe_measurements(
    const ScenarioConfig& cfg, const Network& net, const Grid& truth,
    double pr);

/// Runs the filter over the horizon in the scenario's mode, assimilating
/// each bin's batch at the bin's end. loops_only drops velocity
/// measurements, probes_only drops density measurements, open_loop drops
/// everything; held-out detectors are never assimilated.
RunReport run_filter(const ScenarioConfig& cfg, const Network& net,
                     const DemandSchedule& demands,
                     const std::map<int, std::vector<Measurement>>& loop_bins,
                     const std::map<int, std::vector<Measurement>>& probe_bins,
                     const Grid* truth);

/// Mean absolute percentage error split by congestion state of the
/// reference cell. Cells with reference below `floor` are excluded.
MapeResult compute_mape(const Grid& estimate, const Grid& reference,
                        const Eigen::ArrayXd& critical, double floor);

// Grid and record serialization. Matrices are comma-separated with %.17g
// values (exact double round-trip), rows in grid-row order, no header.
void write_matrix_csv(const Grid& grid, const std::string& path);
Grid read_matrix_csv(const std::string& path);
void write_loops_csv(const std::vector<LoopRecord>& records,
                     const std::string& path);
void write_probes_csv(const std::vector<ProbeRecord>& records,
                      const std::string& path);
void write_geometry_csv(const std::vector<LinkGeometry>& geometry,
                        const std::string& path);
void write_pgm(const Grid& grid, const Eigen::ArrayXd& jam,
               const std::string& path);

/// File name stem for a run: the mode, plus the penetration rate for modes
/// that consume probes (e.g. "fused_pr3").
std::string run_name(FilterMode mode, double pr);

/// Writes estimate_<run>.csv, report.csv, meta.txt, truth.csv when present,
/// and optional .pgm renderings into `dir` (created if needed).
void export_grids(const RunReport& report, const std::string& dir,
                  bool pgm = false);

/// Full sweep in the style of the headline experiment: for each seed
/// offset, simulate a truth and its measurements, then run open-loop,
/// loops-only, probes-only and fused filters across the penetration rates.
/// Writes per-seed run directories plus summary.csv under `out_dir` and
/// prints the mean MAPE table. Returns the summary row values
/// (pr -> {without_loops, with_loops} overall MAPE means).
struct DemoSummary {
  std::vector<double> rates;          // 0 entry stands for "no probes"
  std::vector<MapeResult> without_loops;  // per rate (open_loop for rate 0)
  std::vector<MapeResult> with_loops;     // per rate (loops_only for rate 0)
};
DemoSummary run_demo(const ScenarioConfig& cfg, const std::string& out_dir,
                     int n_seeds, bool pgm = false);

}  // namespace ctmf
