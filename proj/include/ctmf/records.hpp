#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctmf/fusion.hpp"
#include "ctmf/network.hpp"

namespace ctmf {

constexpr double kBinSeconds = 300.0;

/// Fixed-detector report. Either `density` or the `flow`/`speed` pair is
/// populated; absent numeric fields read back as NaN. Unhealthy records are
/// retained by the parser and filtered out downstream.
struct LoopRecord {
  double t = 0.0;        // s since run start (integer-valued)
  std::string detector;
  int link = -1;
  double density = std::numeric_limits<double>::quiet_NaN();  // veh/m
  double flow = std::numeric_limits<double>::quiet_NaN();     // veh/s
  double speed = std::numeric_limits<double>::quiet_NaN();    // m/s
  bool healthy = true;

  bool has_density() const { return density == density; }
  bool has_flow() const { return flow == flow; }
};

/// Probe point report in corridor-local planar coordinates.
struct ProbeRecord {
  double t = 0.0;
  std::string device;  // hashed identifier
  double x = 0.0, y = 0.0;  // m
  double speed = 0.0;       // m/s
  double heading = 0.0;     // degrees in [0, 360)
};

/// Axis-aligned bounding box and end-to-end bearing of one link.
struct LinkGeometry {
  int link = -1;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  double bearing = 0.0;  // degrees in [0, 360)
};

// Parsers. With `issues` null the first malformed row throws; otherwise
// problems are collected as "line N: ..." strings and bad rows skipped.
// Headers:
//   loops.csv:    t,detector,link,density,flow,speed,health
//   probes.csv:   t,device,x,y,speed,heading
//   geometry.csv: link,x_min,x_max,y_min,y_max,bearing
std::vector<LoopRecord> parse_loops(std::istream& in,
                                    std::vector<std::string>* issues = nullptr);
std::vector<ProbeRecord> parse_probes(
    std::istream& in, std::vector<std::string>* issues = nullptr);
std::vector<LinkGeometry> parse_geometry(
    std::istream& in, std::vector<std::string>* issues = nullptr);

std::vector<LoopRecord> parse_loops_file(
    const std::string& path, std::vector<std::string>* issues = nullptr);
std::vector<ProbeRecord> parse_probes_file(
    const std::string& path, std::vector<std::string>* issues = nullptr);
std::vector<LinkGeometry> parse_geometry_file(
    const std::string& path, std::vector<std::string>* issues = nullptr);

/// Throws when any two boxes overlap with positive area.
void validate_geometry(const std::vector<LinkGeometry>& geometry);

/// Shortest angular distance on the circle, degrees in [0, 180].
double angular_distance(double a, double b);

/// Assigns a probe point to the link whose box contains it, provided exactly
/// one box does and the heading lies within 15 degrees of the link bearing.
std::optional<int> match_probe(const ProbeRecord& p,
                               const std::vector<LinkGeometry>& geometry);

struct MatchStats {
  long matched = 0;
  long geometry_rejected = 0;  // in zero boxes, or on a shared edge
  long heading_rejected = 0;
};

/// Runs match_probe over a probe set and emits velocity measurements binned
/// by floor(t / bin). Every input record lands in exactly one MatchStats
/// bucket.
std::vector<Measurement> match_probes(const std::vector<ProbeRecord>& probes,
                                      const std::vector<LinkGeometry>& geometry,
                                      MatchStats* stats = nullptr,
                                      double bin_s = kBinSeconds);

/// Groups measurements into assimilation batches keyed by bin index; the
/// batch for bin k is assimilated at the first filter step at or after the
/// bin's end. Measurements must already carry their bin in t_bin (as
/// produced by match_probes / the record converters below).
std::map<int, std::vector<Measurement>> bin_measurements(
    std::vector<Measurement> measurements);

/// Density measurements from healthy loop records that carry a density,
/// binned by floor(t / bin).
std::vector<Measurement> loop_measurements(
    const std::vector<LoopRecord>& records, double bin_s = kBinSeconds);

/// Per-source nominal demand, one value per bin, zero-order held: the
/// nominal for bin k is the average measured flow of bin k-1; the first bin
/// reuses its own average (no earlier measurement exists).
struct DemandSchedule {
  Eigen::ArrayXXd nominal;  // queue slots x bins, veh/s
  double bin_s = kBinSeconds;

  /// Demand column in force while advancing to step `step` (1-based).
  Eigen::ArrayXd at_step(int step, double dt) const;
  int bins() const { return static_cast<int>(nominal.cols()); }
};

/// Builds the boundary demand schedule from flow-carrying loop records on
/// the entry links: the first mainline link feeds queue slot 0, each onramp
/// its own slot. Bins without coverage for some source are an error listing
/// the uncovered intervals. Unhealthy records are ignored.
DemandSchedule boundary_series(const std::vector<LoopRecord>& records,
                               const Network& net, double horizon_s,
                               double bin_s = kBinSeconds);

}  // namespace ctmf
