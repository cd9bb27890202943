#include "ctmf/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csv_util.hpp"

namespace ctmf {

namespace {

using detail::parse_double;
using detail::parse_int;
using detail::RowError;

double parse_optional(const std::string& field, const char* what) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  return parse_double(field, what);
}

double parse_timestamp(const std::string& field) {
  const double t = parse_double(field, "t");
  if (t < 0.0) throw RowError("t must be non-negative");
  if (t != std::floor(t)) throw RowError("t must be integer seconds");
  return t;
}

template <class Record, class RowFn>
std::vector<Record> parse_table(std::istream& in, const char* file_kind,
                                const char* header, int n_fields, RowFn row_fn,
                                std::vector<std::string>* issues) {
  std::vector<Record> records;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    const std::string full = "line " + std::to_string(line_no) + ": " + msg;
    if (issues)
      issues->push_back(full);
    else
      throw std::invalid_argument(std::string(file_kind) + ": " + full);
  };
  if (!std::getline(in, line)) {
    fail("missing header");
    return records;
  }
  line_no = 1;
  if (detail::trim(line) != header) {
    fail("header must be '" + std::string(header) + "'");
    return records;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (static_cast<int>(fields.size()) != n_fields) {
      fail("expected " + std::to_string(n_fields) + " fields, got " +
           std::to_string(fields.size()));
      continue;
    }
    try {
      records.push_back(row_fn(fields));
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  return records;
}

}  // namespace

std::vector<LoopRecord> parse_loops(std::istream& in,
                                    std::vector<std::string>* issues) {
  return parse_table<LoopRecord>(
      in, "loops", "t,detector,link,density,flow,speed,health", 7,
      [](const std::vector<std::string>& f) {
        LoopRecord r;
        r.t = parse_timestamp(f[0]);
        r.detector = f[1];
        if (r.detector.empty()) throw RowError("detector id is empty");
        r.link = parse_int(f[2], "link");
        r.density = parse_optional(f[3], "density");
        r.flow = parse_optional(f[4], "flow");
        r.speed = parse_optional(f[5], "speed");
        if (r.has_density() && r.density < 0.0)
          throw RowError("density must be non-negative");
        if (r.has_flow() && r.flow < 0.0)
          throw RowError("flow must be non-negative");
        if (r.speed == r.speed && r.speed < 0.0)
          throw RowError("speed must be non-negative");
        if (!r.has_density() && !r.has_flow())
          throw RowError("record carries neither density nor flow");
        const int health = parse_int(f[6], "health");
        if (health != 0 && health != 1)
          throw RowError("health must be 0 or 1");
        r.healthy = health == 1;
        return r;
      },
      issues);
}

std::vector<ProbeRecord> parse_probes(std::istream& in,
                                      std::vector<std::string>* issues) {
  return parse_table<ProbeRecord>(
      in, "probes", "t,device,x,y,speed,heading", 6,
      [](const std::vector<std::string>& f) {
        ProbeRecord r;
        r.t = parse_timestamp(f[0]);
        r.device = f[1];
        if (r.device.empty()) throw RowError("device id is empty");
        r.x = parse_double(f[2], "x");
        r.y = parse_double(f[3], "y");
        r.speed = parse_double(f[4], "speed");
        if (r.speed < 0.0) throw RowError("speed must be non-negative");
        r.heading = parse_double(f[5], "heading");
        if (!(r.heading >= 0.0 && r.heading < 360.0))
          throw RowError("heading must lie in [0,360)");
        return r;
      },
      issues);
}

std::vector<LinkGeometry> parse_geometry(std::istream& in,
                                         std::vector<std::string>* issues) {
  auto rows = parse_table<LinkGeometry>(
      in, "geometry", "link,x_min,x_max,y_min,y_max,bearing", 6,
      [](const std::vector<std::string>& f) {
        LinkGeometry g;
        g.link = parse_int(f[0], "link");
        g.x_min = parse_double(f[1], "x_min");
        g.x_max = parse_double(f[2], "x_max");
        g.y_min = parse_double(f[3], "y_min");
        g.y_max = parse_double(f[4], "y_max");
        if (!(g.x_min < g.x_max) || !(g.y_min < g.y_max))
          throw RowError("box must have positive extent");
        g.bearing = parse_double(f[5], "bearing");
        if (!(g.bearing >= 0.0 && g.bearing < 360.0))
          throw RowError("bearing must lie in [0,360)");
        return g;
      },
      issues);
  if (!issues) validate_geometry(rows);
  return rows;
}

namespace {

std::ifstream open_or_throw(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument(std::string("cannot open ") + what +
                                " file '" + path + "'");
  return in;
}

}  // namespace

std::vector<LoopRecord> parse_loops_file(const std::string& path,
                                         std::vector<std::string>* issues) {
  auto in = open_or_throw(path, "loops");
  return parse_loops(in, issues);
}

std::vector<ProbeRecord> parse_probes_file(const std::string& path,
                                           std::vector<std::string>* issues) {
  auto in = open_or_throw(path, "probes");
  return parse_probes(in, issues);
}

std::vector<LinkGeometry> parse_geometry_file(
    const std::string& path, std::vector<std::string>* issues) {
  auto in = open_or_throw(path, "geometry");
  return parse_geometry(in, issues);
}

void validate_geometry(const std::vector<LinkGeometry>& geometry) {
  for (std::size_t i = 0; i < geometry.size(); ++i)
    for (std::size_t j = i + 1; j < geometry.size(); ++j) {
      const LinkGeometry& a = geometry[i];
      const LinkGeometry& b = geometry[j];
      const bool overlap = a.x_min < b.x_max && b.x_min < a.x_max &&
                           a.y_min < b.y_max && b.y_min < a.y_max;
      if (overlap)
        throw std::invalid_argument(
            "bounding boxes of links " + std::to_string(a.link) + " and " +
            std::to_string(b.link) + " overlap");
    }
}

double angular_distance(double a, double b) {
  const double d = std::fabs(std::fmod(a - b, 360.0));
  return std::min(d, 360.0 - d);
}

std::optional<int> match_probe(const ProbeRecord& p,
                               const std::vector<LinkGeometry>& geometry) {
  const LinkGeometry* hit = nullptr;
  int hits = 0;
  for (const LinkGeometry& g : geometry) {
    if (p.x >= g.x_min && p.x <= g.x_max && p.y >= g.y_min && p.y <= g.y_max) {
      hit = &g;
      ++hits;
    }
  }
  if (hits != 1) return std::nullopt;  // outside all boxes or on a shared edge
  if (angular_distance(p.heading, hit->bearing) > 15.0) return std::nullopt;
  return hit->link;
}

std::vector<Measurement> match_probes(const std::vector<ProbeRecord>& probes,
                                      const std::vector<LinkGeometry>& geometry,
                                      MatchStats* stats, double bin_s) {
  MatchStats local;
  std::vector<Measurement> out;
  for (const ProbeRecord& p : probes) {
    // Separate the two rejection causes so the partition counts add up.
    const LinkGeometry* hit = nullptr;
    int hits = 0;
    for (const LinkGeometry& g : geometry)
      if (p.x >= g.x_min && p.x <= g.x_max && p.y >= g.y_min &&
          p.y <= g.y_max) {
        hit = &g;
        ++hits;
      }
    if (hits != 1) {
      ++local.geometry_rejected;
      continue;
    }
    if (angular_distance(p.heading, hit->bearing) > 15.0) {
      ++local.heading_rejected;
      continue;
    }
    ++local.matched;
    Measurement m;
    m.kind = MeasurementKind::velocity;
    m.value = p.speed;
    m.link = hit->link;
    m.t_bin = static_cast<int>(std::floor(p.t / bin_s));
    m.device = p.device;
    out.push_back(std::move(m));
  }
  if (stats) *stats = local;
  return out;
}

std::map<int, std::vector<Measurement>> bin_measurements(
    std::vector<Measurement> measurements) {
  std::map<int, std::vector<Measurement>> bins;
  for (Measurement& m : measurements)
    bins[m.t_bin].push_back(std::move(m));
  return bins;
}

std::vector<Measurement> loop_measurements(
    const std::vector<LoopRecord>& records, double bin_s) {
  std::vector<Measurement> out;
  for (const LoopRecord& r : records) {
    if (!r.healthy || !r.has_density()) continue;
    Measurement m;
    m.kind = MeasurementKind::density;
    m.value = r.density;
    m.link = r.link;
    m.t_bin = static_cast<int>(std::floor(r.t / bin_s));
    m.device = r.detector;
    out.push_back(std::move(m));
  }
  return out;
}

Eigen::ArrayXd DemandSchedule::at_step(int step, double dt) const {
  // Step `step` advances the state across [ (step-1)*dt, step*dt ).
  const double t = (step - 1) * dt;
  int bin = static_cast<int>(std::floor(t / bin_s));
  bin = std::clamp(bin, 0, bins() - 1);
  return nominal.col(bin);
}

DemandSchedule boundary_series(const std::vector<LoopRecord>& records,
                               const Network& net, double horizon_s,
                               double bin_s) {
  const int n_bins = static_cast<int>(std::ceil(horizon_s / bin_s));
  if (n_bins < 1) throw std::invalid_argument("horizon shorter than one bin");

  // Entry link id -> queue slot.
  std::map<int, int> entry_slot;
  entry_slot[net.links()[net.mainline().front()].id] = 0;
  for (std::size_t k = 0; k < net.onramps().size(); ++k)
    entry_slot[net.links()[net.onramps()[k]].id] = static_cast<int>(k) + 1;

  Eigen::ArrayXXd sums = Eigen::ArrayXXd::Zero(net.queue_count(), n_bins);
  Eigen::ArrayXXd counts = Eigen::ArrayXXd::Zero(net.queue_count(), n_bins);
  for (const LoopRecord& r : records) {
    if (!r.healthy || !r.has_flow()) continue;
    const auto it = entry_slot.find(r.link);
    if (it == entry_slot.end()) continue;
    const int bin = static_cast<int>(std::floor(r.t / bin_s));
    if (bin < 0 || bin >= n_bins) continue;
    sums(it->second, bin) += r.flow;
    counts(it->second, bin) += 1.0;
  }

  std::string uncovered;
  for (const auto& [link_id, slot] : entry_slot)
    for (int b = 0; b < n_bins; ++b)
      if (counts(slot, b) == 0.0)
        uncovered += " link " + std::to_string(link_id) + " bin [" +
                     std::to_string(b * bin_s) + "," +
                     std::to_string((b + 1) * bin_s) + ")";
  if (!uncovered.empty())
    throw std::runtime_error("boundary flow coverage is incomplete:" +
                             uncovered);

  const Eigen::ArrayXXd measured = sums / counts;
  DemandSchedule schedule;
  schedule.bin_s = bin_s;
  schedule.nominal.resize(net.queue_count(), n_bins);
  // Zero-order hold on a one-bin delay; the first bin reuses its own average.
  schedule.nominal.col(0) = measured.col(0);
  for (int b = 1; b < n_bins; ++b)
    schedule.nominal.col(b) = measured.col(b - 1);
  return schedule;
}

}  // namespace ctmf
