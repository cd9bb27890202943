#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "ctmf/records.hpp"
#include "test_util.hpp"

using namespace ctmf;
using testutil::chain_spec;

namespace {

const char* kLoopHeader = "t,detector,link,density,flow,speed,health\n";
const char* kProbeHeader = "t,device,x,y,speed,heading\n";

std::vector<LinkGeometry> two_boxes() {
  return {{5, 0.0, 100.0, 0.0, 30.0, 90.0},
          {6, 100.0, 200.0, 0.0, 30.0, 90.0}};
}

ProbeRecord probe_at(double x, double y, double heading, double t = 10.0) {
  ProbeRecord p;
  p.t = t;
  p.device = "d";
  p.x = x;
  p.y = y;
  p.speed = 20.0;
  p.heading = heading;
  return p;
}

}  // namespace

TEST_CASE("loop record parsing") {
  SUBCASE("header-only file yields no records") {
    std::stringstream ss(kLoopHeader);
    CHECK(parse_loops(ss).empty());
  }
  SUBCASE("negative density cites the line") {
    std::stringstream ss(std::string(kLoopHeader) +
                         "300,D1,1,0.05,,,1\n"
                         "600,D1,1,-0.05,,,1\n");
    std::vector<std::string> issues;
    const auto records = parse_loops(ss, &issues);
    CHECK(records.size() == 1);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("line 3") != std::string::npos);
    CHECK(issues[0].find("density") != std::string::npos);
  }
  SUBCASE("unhealthy records are retained but marked") {
    std::stringstream ss(std::string(kLoopHeader) + "300,D7,2,0.03,,,0\n");
    const auto records = parse_loops(ss);
    REQUIRE(records.size() == 1);
    CHECK_FALSE(records[0].healthy);
    CHECK(loop_measurements(records).empty());  // dropped downstream
  }
  SUBCASE("a detector fleet at five-minute cadence") {
    std::string text = kLoopHeader;
    const int detectors = 42, bins = 144;  // 12 hours
    for (int b = 0; b < bins; ++b)
      for (int d = 0; d < detectors; ++d)
        text += std::to_string(300 * b) + ",D" + std::to_string(d) + "," +
                std::to_string(d) + ",0.02,,,1\n";
    std::stringstream ss(text);
    CHECK(parse_loops(ss).size() == detectors * bins);
  }
  SUBCASE("non-integer timestamps are rejected") {
    std::stringstream ss(std::string(kLoopHeader) + "300.5,D1,1,0.05,,,1\n");
    std::vector<std::string> issues;
    parse_loops(ss, &issues);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("integer") != std::string::npos);
  }
  SUBCASE("flow records parse with empty density") {
    std::stringstream ss(std::string(kLoopHeader) + "300,D1,100,,0.25,12,1\n");
    const auto records = parse_loops(ss);
    REQUIRE(records.size() == 1);
    CHECK_FALSE(records[0].has_density());
    CHECK(records[0].has_flow());
    CHECK(records[0].flow == doctest::Approx(0.25));
  }
}

TEST_CASE("probe record parsing") {
  SUBCASE("heading outside [0,360) is rejected with the line") {
    std::stringstream ss(std::string(kProbeHeader) +
                         "10,a,5,5,20,360\n"
                         "10,b,5,5,20,359\n");
    std::vector<std::string> issues;
    const auto records = parse_probes(ss, &issues);
    CHECK(records.size() == 1);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("line 2") != std::string::npos);
  }
  SUBCASE("negative speed is rejected") {
    std::stringstream ss(std::string(kProbeHeader) + "10,a,5,5,-1,90\n");
    CHECK_THROWS_AS(parse_probes(ss), std::invalid_argument);
  }
}

TEST_CASE("geometry validation") {
  SUBCASE("positive-area overlap is an error") {
    std::vector<LinkGeometry> boxes = two_boxes();
    boxes[1].x_min = 90.0;  // overlaps the first box
    CHECK_THROWS_WITH_AS(validate_geometry(boxes), doctest::Contains("overlap"),
                         std::invalid_argument);
  }
  SUBCASE("touching edges are allowed") {
    CHECK_NOTHROW(validate_geometry(two_boxes()));
  }
}

TEST_CASE("angular distance wraps at 360") {
  CHECK(angular_distance(359.0, 1.0) == doctest::Approx(2.0));
  CHECK(angular_distance(90.0, 90.0) == doctest::Approx(0.0));
  CHECK(angular_distance(0.0, 180.0) == doctest::Approx(180.0));
  CHECK(angular_distance(350.0, 10.0) == doctest::Approx(20.0));
}

TEST_CASE("probe matching") {
  const auto boxes = two_boxes();
  SUBCASE("inside one box with an aligned heading") {
    CHECK(match_probe(probe_at(50.0, 10.0, 90.0), boxes) == 5);
    CHECK(match_probe(probe_at(150.0, 10.0, 100.0), boxes) == 6);
  }
  SUBCASE("heading off by ninety degrees is discarded") {
    CHECK_FALSE(match_probe(probe_at(50.0, 10.0, 180.0), boxes).has_value());
  }
  SUBCASE("heading exactly at the fifteen-degree limit passes") {
    CHECK(match_probe(probe_at(50.0, 10.0, 105.0), boxes) == 5);
    CHECK_FALSE(match_probe(probe_at(50.0, 10.0, 105.5), boxes).has_value());
  }
  SUBCASE("outside every box") {
    CHECK_FALSE(match_probe(probe_at(50.0, 50.0, 90.0), boxes).has_value());
  }
  SUBCASE("a point on the shared edge sits in two boxes and is dropped") {
    CHECK_FALSE(match_probe(probe_at(100.0, 10.0, 90.0), boxes).has_value());
  }
}

TEST_CASE("match statistics partition the input") {
  const auto boxes = two_boxes();
  std::vector<ProbeRecord> probes = {
      probe_at(50.0, 10.0, 90.0),    // matched
      probe_at(150.0, 10.0, 85.0),   // matched
      probe_at(50.0, 10.0, 200.0),   // heading rejected
      probe_at(500.0, 10.0, 90.0),   // geometry rejected
      probe_at(100.0, 10.0, 90.0),   // shared edge: geometry rejected
  };
  MatchStats stats;
  const auto measurements = match_probes(probes, boxes, &stats);
  CHECK(stats.matched == 2);
  CHECK(stats.heading_rejected == 1);
  CHECK(stats.geometry_rejected == 2);
  CHECK(stats.matched + stats.heading_rejected + stats.geometry_rejected ==
        static_cast<long>(probes.size()));
  REQUIRE(measurements.size() == 2);
  CHECK(measurements[0].kind == MeasurementKind::velocity);
  CHECK(measurements[0].link == 5);
  CHECK(measurements[0].value == doctest::Approx(20.0));
}

TEST_CASE("binning") {
  SUBCASE("boundary convention: floor(t/300)") {
    const auto boxes = two_boxes();
    std::vector<ProbeRecord> probes = {probe_at(50, 10, 90, 0.0),
                                       probe_at(50, 10, 90, 299.0),
                                       probe_at(50, 10, 90, 301.0)};
    const auto measurements = match_probes(probes, boxes);
    CHECK(measurements[0].t_bin == 0);
    CHECK(measurements[1].t_bin == 0);
    CHECK(measurements[2].t_bin == 1);
  }
  SUBCASE("binning partitions the matched set") {
    std::vector<Measurement> ms;
    for (int i = 0; i < 100; ++i) {
      Measurement m;
      m.kind = MeasurementKind::density;
      m.value = 0.01;
      m.link = 0;
      m.t_bin = i % 7;
      ms.push_back(m);
    }
    const auto bins = bin_measurements(ms);
    std::size_t total = 0;
    for (const auto& [bin, batch] : bins) total += batch.size();
    CHECK(total == 100);
    CHECK(bins.size() == 7);
  }
}

TEST_CASE("boundary demand schedule") {
  const Network net = build_network(chain_spec(3), 5.0);
  const int head_id = 0;
  auto flow_record = [&](double t, double flow) {
    LoopRecord r;
    r.t = t;
    r.detector = "Din";
    r.link = head_id;
    r.flow = flow;
    r.healthy = true;
    return r;
  };

  SUBCASE("constant measured flow holds from the second bin on") {
    std::vector<LoopRecord> records;
    for (int b = 0; b < 4; ++b) records.push_back(flow_record(300.0 * b, 0.4));
    const DemandSchedule s = boundary_series(records, net, 1200.0);
    for (int b = 0; b < 4; ++b) CHECK(s.nominal(0, b) == doctest::Approx(0.4));
  }
  SUBCASE("a step change appears one bin later") {
    std::vector<LoopRecord> records;
    for (int b = 0; b < 4; ++b)
      records.push_back(flow_record(300.0 * b, b >= 2 ? 0.6 : 0.3));
    const DemandSchedule s = boundary_series(records, net, 1200.0);
    CHECK(s.nominal(0, 0) == doctest::Approx(0.3));  // warm-up: own average
    CHECK(s.nominal(0, 1) == doctest::Approx(0.3));
    CHECK(s.nominal(0, 2) == doctest::Approx(0.3));  // held from bin 1
    CHECK(s.nominal(0, 3) == doctest::Approx(0.6));  // sees the step at bin 2
  }
  SUBCASE("per-bin averages combine multiple records") {
    std::vector<LoopRecord> records = {flow_record(0.0, 0.2),
                                       flow_record(100.0, 0.4),
                                       flow_record(400.0, 0.5)};
    const DemandSchedule s = boundary_series(records, net, 600.0);
    CHECK(s.nominal(0, 0) == doctest::Approx(0.3));
    CHECK(s.nominal(0, 1) == doctest::Approx(0.3));
  }
  SUBCASE("missing coverage names the uncovered interval") {
    std::vector<LoopRecord> records = {flow_record(0.0, 0.2),
                                       flow_record(700.0, 0.4)};
    CHECK_THROWS_WITH_AS(boundary_series(records, net, 900.0),
                         doctest::Contains("[300"), std::runtime_error);
  }
  SUBCASE("schedule lookup is constant within a bin") {
    std::vector<LoopRecord> records;
    for (int b = 0; b < 2; ++b)
      records.push_back(flow_record(300.0 * b, b == 0 ? 0.2 : 0.8));
    const DemandSchedule s = boundary_series(records, net, 600.0);
    CHECK(s.at_step(1, 5.0)(0) == doctest::Approx(0.2));
    CHECK(s.at_step(60, 5.0)(0) == doctest::Approx(0.2));   // t in [295,300)
    CHECK(s.at_step(61, 5.0)(0) == doctest::Approx(0.2));   // bin 1 holds bin 0
    CHECK(s.at_step(120, 5.0)(0) == doctest::Approx(0.2));
  }
}
