#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ctmf/ctm.hpp"
#include "ctmf/random.hpp"
#include "test_util.hpp"

using namespace ctmf;
using testutil::chain;
using testutil::chain_spec;

namespace {

Eigen::ArrayXd no_betas() { return Eigen::ArrayXd(0); }

double total_vehicles(const Network& net, const DensityState& s) {
  return (s.rho * net.length()).sum() + s.queues.sum();
}

/// Chain with one onramp (junction 1) and one offramp (junction 2).
Network ramp_network() {
  CorridorSpec spec = chain_spec(4);
  CorridorLink on;
  on.id = 10;
  on.kind = LinkKind::onramp;
  on.length = 150.0;
  on.free_speed = 20.0;
  on.wave_speed = 6.0;
  on.jam_density = 0.12;
  on.at_node = 1;
  spec.links.push_back(on);
  CorridorLink off = on;
  off.id = 11;
  off.kind = LinkKind::offramp;
  off.at_node = 2;
  off.split_ratio = 0.3;
  spec.links.push_back(off);
  return build_network(spec, 5.0);
}

}  // namespace

TEST_CASE("node closures") {
  SUBCASE("simple passes the binding constraint") {
    const NodeFlows f = resolve_node(NodeKind::simple, 0.3, 0.0, 0.5, 0.0);
    CHECK(f.main_out == doctest::Approx(0.3));
    CHECK(f.main_in == doctest::Approx(0.3));
  }
  SUBCASE("merge rations the supply in proportion to demand") {
    const NodeFlows f = resolve_node(NodeKind::merge, 0.4, 0.2, 0.3, 0.0);
    CHECK(f.main_out == doctest::Approx(0.2));
    CHECK(f.ramp_out == doctest::Approx(0.1));
    CHECK(f.main_in == doctest::Approx(0.3));
  }
  SUBCASE("merge below supply passes both fully") {
    const NodeFlows f = resolve_node(NodeKind::merge, 0.1, 0.2, 0.5, 0.0);
    CHECK(f.main_out == doctest::Approx(0.1));
    CHECK(f.ramp_out == doctest::Approx(0.2));
  }
  SUBCASE("diverge with beta zero reduces to simple") {
    const NodeFlows d = resolve_node(NodeKind::diverge, 0.4, 0.0, 0.3, 0.0);
    const NodeFlows s = resolve_node(NodeKind::simple, 0.4, 0.0, 0.3, 0.0);
    CHECK(d.main_out == doctest::Approx(s.main_out));
    CHECK(d.main_in == doctest::Approx(s.main_in));
    CHECK(d.ramp_in == doctest::Approx(0.0));
  }
  SUBCASE("diverge with beta one sends everything to the offramp") {
    const NodeFlows f = resolve_node(NodeKind::diverge, 0.4, 0.0, 0.0, 1.0);
    CHECK(f.main_out == doctest::Approx(0.4));
    CHECK(f.ramp_in == doctest::Approx(0.4));
    CHECK(f.main_in == doctest::Approx(0.0));
  }
  SUBCASE("invalid split ratio throws") {
    CHECK_THROWS_AS(resolve_node(NodeKind::diverge, 0.4, 0.0, 0.3, 1.5),
                    std::invalid_argument);
  }
}

TEST_CASE("node flows conserve and are monotone in the downstream supply") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double s_main = u(rng), s_ramp = u(rng), beta = u(rng);
    const double r1 = u(rng), r2 = r1 + u(rng);
    for (NodeKind kind :
         {NodeKind::simple, NodeKind::merge, NodeKind::diverge}) {
      const NodeFlows lo = resolve_node(kind, s_main, s_ramp, r1, beta);
      const NodeFlows hi = resolve_node(kind, s_main, s_ramp, r2, beta);
      CHECK(lo.main_out + lo.ramp_out ==
            doctest::Approx(lo.main_in + lo.ramp_in));
      CHECK(hi.main_out >= lo.main_out - 1e-12);
      CHECK(hi.ramp_out >= lo.ramp_out - 1e-12);
      CHECK(hi.main_in >= lo.main_in - 1e-12);
      CHECK(hi.ramp_in >= lo.ramp_in - 1e-12);
    }
  }
}

TEST_CASE("deterministic step fixed points") {
  SUBCASE("empty network with zero demand stays empty") {
    const Network net = chain(3);
    const DensityState zero = DensityState::zero(net);
    const DensityState next = step_deterministic(
        net, zero, Eigen::ArrayXd::Zero(1), no_betas());
    CHECK((next.rho == 0.0).all());
    CHECK((next.queues == 0.0).all());
  }
  SUBCASE("uniform critical density with capacity inflow is stationary") {
    const Network net = chain(5);
    DensityState state = DensityState::zero(net);
    state.rho.setConstant(net.critical_density()[0]);
    Eigen::ArrayXd demand(1);
    demand[0] = net.capacity()[0];
    const DensityState next =
        step_deterministic(net, state, demand, no_betas());
    for (int s = 0; s < net.density_count(); ++s)
      CHECK(next.rho[s] == doctest::Approx(state.rho[s]).epsilon(1e-12));
    CHECK(next.queues[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("three-link chain with a jammed middle link, one step by hand") {
  const Network net = chain(3);
  DensityState state = DensityState::zero(net);
  state.rho << 0.01, 0.12, 0.01;
  Eigen::ArrayXd demand(1);
  demand[0] = 0.3;
  StepFlows flows;
  const double before = total_vehicles(net, state);
  const DensityState next =
      step_deterministic(net, state, demand, no_betas(), &flows);
  // Blocked junction upstream of the jam, full discharge out of it.
  CHECK(next.rho[0] == doctest::Approx(0.0175));
  CHECK(next.rho[1] == doctest::Approx(0.105));
  CHECK(next.rho[2] == doctest::Approx(0.0175));
  const double after = total_vehicles(net, next);
  const double expected_delta =
      (flows.external_in - flows.offramp_out - flows.sink_out) * net.dt();
  CHECK(after - before == doctest::Approx(expected_delta).epsilon(1e-12));
}

TEST_CASE("vehicle balance holds step by step on a ramp network") {
  const Network net = ramp_network();
  DensityState state = DensityState::zero(net);
  state.rho.setConstant(0.01);
  std::mt19937_64 rng(11);
  NoiseConfig noise;
  noise.demand_sigma_frac = 0.2;
  noise.split_shapes = {NoiseConfig::shapes_from_mean(0.3, 50.0)};
  Eigen::ArrayXd demand(2);
  demand << 0.5, 0.2;

  for (int t = 0; t < 500; ++t) {
    StepFlows flows;
    const double before = total_vehicles(net, state);
    step_stochastic_in_place(net, state.rho, state.queues, demand, noise, rng,
                             &flows);
    const double after = total_vehicles(net, state);
    const double expected =
        (flows.external_in - flows.offramp_out - flows.sink_out) * net.dt();
    CHECK(after - before ==
          doctest::Approx(expected).epsilon(1e-9).scale(std::max(1.0, after)));
    validate_state(net, state);
  }
}

TEST_CASE("density bounds survive heavy congestion") {
  const Network net = ramp_network();
  DensityState state = DensityState::zero(net);
  Eigen::ArrayXd demand(2);
  demand << 2.0, 1.0;  // far beyond capacity; queues must absorb the excess
  Eigen::ArrayXd betas(1);
  betas << 0.3;
  for (int t = 0; t < 2000; ++t) {
    step_deterministic_in_place(net, state.rho, state.queues, demand, betas);
    validate_state(net, state);
  }
  CHECK(state.queues[0] > 0.0);  // the boundary queue absorbed the overload
  CHECK((state.rho <= net.jam_density() + 1e-9).all());
}

TEST_CASE("stochastic step reductions") {
  const Network net = ramp_network();
  DensityState state = DensityState::zero(net);
  state.rho.setConstant(0.02);
  Eigen::ArrayXd demand(2);
  demand << 0.4, 0.1;

  SUBCASE("zero noise and point-mass splits reduce to the deterministic step") {
    NoiseConfig noise;
    noise.demand_sigma_frac = 0.0;
    noise.split_shapes = {
        NoiseConfig::shapes_from_mean(0.3, 1e15)};  // point mass at 0.3
    std::mt19937_64 rng(5);
    const DensityState stoch = step_stochastic(net, state, demand, noise, rng);
    Eigen::ArrayXd betas(1);
    betas << 0.3;
    const DensityState det = step_deterministic(net, state, demand, betas);
    CHECK((stoch.rho == det.rho).all());
    CHECK((stoch.queues == det.queues).all());
  }

  SUBCASE("a fixed stream is a pure function of its inputs") {
    NoiseConfig noise;
    noise.demand_sigma_frac = 0.15;
    noise.split_shapes = {NoiseConfig::shapes_from_mean(0.3, 50.0)};
    std::mt19937_64 a = make_stream(42, StreamKind::predict, 7, 9);
    std::mt19937_64 b = make_stream(42, StreamKind::predict, 7, 9);
    const DensityState one = step_stochastic(net, state, demand, noise, a);
    const DensityState two = step_stochastic(net, state, demand, noise, b);
    CHECK((one.rho == two.rho).all());
    CHECK((one.queues == two.queues).all());
  }
}

TEST_CASE("perturbed demand is unbiased when far from the clamp") {
  const Network net = chain(2);
  NoiseConfig noise;
  noise.demand_sigma_frac = 0.1;
  std::mt19937_64 rng(99);
  const double nominal = 0.5;  // 5 sigma away from zero, clamp bias negligible
  Eigen::ArrayXd demand(1);
  demand[0] = nominal;

  // The released flow equals the (clamped) noisy demand when supply is ample.
  const int n = 100000;
  double sum = 0.0;
  DensityState state = DensityState::zero(net);
  for (int i = 0; i < n; ++i) {
    StepFlows flows;
    DensityState s = state;
    step_stochastic_in_place(net, s.rho, s.queues, demand, noise, rng, &flows);
    sum += flows.external_in;
  }
  const double mean = sum / n;
  const double sigma = noise.demand_sigma_frac * nominal;
  CHECK(std::fabs(mean - nominal) < 3.0 * sigma / std::sqrt(double(n)));
}
