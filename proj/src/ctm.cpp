#include "ctmf/ctm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ctmf/random.hpp"

namespace ctmf {

namespace {

constexpr double kBoundTol = 1e-9;

[[noreturn]] void state_error(const Network& net, int slot,
                              const std::string& what, double value) {
  throw std::runtime_error("link " + std::to_string(net.slot_link(slot).id) +
                           ": " + what + " (" + std::to_string(value) + ")");
}

}  // namespace

void validate_state(const Network& net, const DensityState& state) {
  if (state.rho.size() != net.density_count() ||
      state.queues.size() != net.queue_count())
    throw std::invalid_argument("state dimensions do not match the network");
  for (int s = 0; s < net.density_count(); ++s) {
    const double rho = state.rho[s];
    if (!(rho >= -kBoundTol))
      state_error(net, s, "negative density", rho);
    if (!(rho <= net.jam_density()[s] + kBoundTol))
      state_error(net, s, "density above jam", rho);
  }
  for (int q = 0; q < net.queue_count(); ++q)
    if (!(state.queues[q] >= -kBoundTol))
      throw std::runtime_error("source queue " + std::to_string(q) +
                               " is negative");
}

NodeFlows resolve_node(NodeKind kind, double s_main, double s_ramp,
                       double r_down_main, double beta) {
  NodeFlows flows;
  switch (kind) {
    case NodeKind::simple: {
      flows.main_out = std::min(s_main, r_down_main);
      flows.main_in = flows.main_out;
      break;
    }
    case NodeKind::merge: {
      const double total = s_main + s_ramp;
      if (total <= r_down_main || total <= 0.0) {
        flows.main_out = s_main;
        flows.ramp_out = s_ramp;
      } else {
        flows.main_out = r_down_main * s_main / total;
        flows.ramp_out = r_down_main * s_ramp / total;
      }
      flows.main_in = flows.main_out + flows.ramp_out;
      break;
    }
    case NodeKind::diverge: {
      if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("split ratio outside [0,1]: " +
                                    std::to_string(beta));
      const double through = 1.0 - beta;
      const double q_up = through > 0.0
                              ? std::min(s_main, r_down_main / through)
                              : s_main;
      flows.main_out = q_up;
      flows.main_in = through * q_up;
      flows.ramp_in = beta * q_up;
      break;
    }
  }
  return flows;
}

void step_deterministic_in_place(const Network& net,
                                 Eigen::Ref<Eigen::ArrayXd> rho,
                                 Eigen::Ref<Eigen::ArrayXd> queues,
                                 const Eigen::ArrayXd& demands,
                                 const Eigen::ArrayXd& betas,
                                 StepFlows* flows) {
  const int n_slots = net.density_count();
  if (rho.size() != n_slots || queues.size() != net.queue_count())
    throw std::invalid_argument("state dimensions do not match the network");
  if (demands.size() != net.queue_count())
    throw std::invalid_argument("expected one demand per source queue");
  if (betas.size() != net.diverge_count())
    throw std::invalid_argument("expected one split ratio per diverge");

  const double dt = net.dt();
  const Eigen::ArrayXd& vf = net.free_speed();
  const Eigen::ArrayXd& w = net.wave_speed();
  const Eigen::ArrayXd& rho_j = net.jam_density();
  const Eigen::ArrayXd& cap = net.capacity();

  auto sending = [&](int slot) {
    return std::min(vf[slot] * rho[slot], cap[slot]);
  };
  auto receiving = [&](int slot) {
    return std::min(cap[slot], w[slot] * (rho_j[slot] - rho[slot]));
  };
  auto slot_of = [&](int link_index) {
    return net.links()[link_index].density_slot;
  };

  Eigen::ArrayXd net_flow = Eigen::ArrayXd::Zero(n_slots);  // veh/s, in - out
  StepFlows totals;

  // Source queues release into the mainline head and the onramps.
  const int head = slot_of(net.mainline().front());
  Eigen::ArrayXd release(net.queue_count());
  {
    const double avail = queues[0] / dt + demands[0];
    release[0] = std::min(avail, receiving(head));
    net_flow[head] += release[0];
  }
  for (std::size_t k = 0; k < net.onramps().size(); ++k) {
    const int ramp = slot_of(net.onramps()[k]);
    const int q = static_cast<int>(k) + 1;
    const double avail = queues[q] / dt + demands[q];
    release[q] = std::min(avail, receiving(ramp));
    net_flow[ramp] += release[q];
  }

  // Internal junctions.
  int diverge_idx = 0;
  for (const Node& node : net.nodes()) {
    const int up = slot_of(node.upstream);
    const int down = slot_of(node.downstream);
    const int ramp = node.ramp >= 0 ? slot_of(node.ramp) : -1;
    const double s_ramp = node.kind == NodeKind::merge ? sending(ramp) : 0.0;
    const double beta =
        node.kind == NodeKind::diverge ? betas[diverge_idx++] : 0.0;
    const NodeFlows nf =
        resolve_node(node.kind, sending(up), s_ramp, receiving(down), beta);
    net_flow[up] -= nf.main_out;
    net_flow[down] += nf.main_in;
    if (node.kind == NodeKind::merge) net_flow[ramp] -= nf.ramp_out;
    if (node.kind == NodeKind::diverge) net_flow[ramp] += nf.ramp_in;
  }

  // Free boundary outflows: the mainline tail and every offramp drain at
  // their sending rate.
  {
    const int tail = slot_of(net.mainline().back());
    const double out = sending(tail);
    net_flow[tail] -= out;
    totals.sink_out = out;
  }
  for (int link_index : net.offramps()) {
    const int ramp = slot_of(link_index);
    const double out = sending(ramp);
    net_flow[ramp] -= out;
    totals.offramp_out += out;
  }

  // Apply, checking the density bounds the flux construction guarantees.
  for (int s = 0; s < n_slots; ++s) {
    double next = rho[s] + dt / net.length()[s] * net_flow[s];
    if (next < -kBoundTol)
      state_error(net, s, "flux update drove density negative", next);
    if (next > rho_j[s] + kBoundTol)
      state_error(net, s, "flux update drove density above jam", next);
    rho[s] = std::clamp(next, 0.0, rho_j[s]);
  }
  for (int q = 0; q < net.queue_count(); ++q) {
    queues[q] = std::max(0.0, queues[q] + (demands[q] - release[q]) * dt);
    totals.external_in += demands[q];
  }
  if (flows) *flows = totals;
}

DensityState step_deterministic(const Network& net, const DensityState& state,
                                const Eigen::ArrayXd& demands,
                                const Eigen::ArrayXd& betas,
                                StepFlows* flows) {
  DensityState next = state;
  step_deterministic_in_place(net, next.rho, next.queues, demands, betas,
                              flows);
  return next;
}

void step_stochastic_in_place(const Network& net,
                              Eigen::Ref<Eigen::ArrayXd> rho,
                              Eigen::Ref<Eigen::ArrayXd> queues,
                              const Eigen::ArrayXd& nominal_demands,
                              const NoiseConfig& noise, std::mt19937_64& rng,
                              StepFlows* flows) {
  if (static_cast<int>(noise.split_shapes.size()) != net.diverge_count())
    throw std::invalid_argument("expected one split shape pair per diverge");

  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::ArrayXd demands(nominal_demands.size());
  for (Eigen::Index i = 0; i < nominal_demands.size(); ++i) {
    const double nominal = nominal_demands[i];
    const double noisy =
        nominal + noise.demand_sigma_frac * nominal * unit(rng);
    demands[i] = std::max(0.0, noisy);
  }

  Eigen::ArrayXd betas(net.diverge_count());
  for (int d = 0; d < net.diverge_count(); ++d) {
    const auto& [a, b] = noise.split_shapes[d];
    if (!(a > 0.0) || !(b > 0.0))
      throw std::invalid_argument("beta shapes must be positive");
    betas[d] = sample_beta(rng, a, b);
  }

  step_deterministic_in_place(net, rho, queues, demands, betas, flows);
}

DensityState step_stochastic(const Network& net, const DensityState& state,
                             const Eigen::ArrayXd& nominal_demands,
                             const NoiseConfig& noise, std::mt19937_64& rng,
                             StepFlows* flows) {
  DensityState next = state;
  step_stochastic_in_place(net, next.rho, next.queues, nominal_demands, noise,
                           rng, flows);
  return next;
}

}  // namespace ctmf
