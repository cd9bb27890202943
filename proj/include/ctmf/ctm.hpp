#pragma once

#include <Eigen/Dense>
#include <random>
#include <utility>
#include <vector>

#include "ctmf/network.hpp"

namespace ctmf {

/// Per-link densities plus the boundary source queues. Densities are indexed
/// by network density slot, queues by network queue slot.
struct DensityState {
  Eigen::ArrayXd rho;     // veh/m
  Eigen::ArrayXd queues;  // veh

  static DensityState zero(const Network& net) {
    return {Eigen::ArrayXd::Zero(net.density_count()),
            Eigen::ArrayXd::Zero(net.queue_count())};
  }
};

/// Throws when densities leave [0, jam] or queues go negative (beyond 1e-9).
void validate_state(const Network& net, const DensityState& state);

/// Resolved flows at one junction (veh/s). Flow into the node always equals
/// flow out: main_out + ramp_out == main_in + ramp_in.
struct NodeFlows {
  double main_out = 0.0;  // leaving the upstream mainline link
  double ramp_out = 0.0;  // leaving the onramp (merge nodes)
  double main_in = 0.0;   // entering the downstream mainline link
  double ramp_in = 0.0;   // entering the offramp (diverge nodes)
};

/// Junction closure. Simple: min(demand, supply). Merge: both streams pass
/// when they fit, otherwise the downstream supply is split in proportion to
/// the demands. Diverge: first-in-first-out, main_out = min(S_up,
/// R_down/(1-beta)), with the offramp accepting its share unconditionally.
/// `s_ramp` is ignored for simple/diverge nodes, `beta` and `r_down_main` as
/// appropriate.
NodeFlows resolve_node(NodeKind kind, double s_main, double s_ramp,
                       double r_down_main, double beta);

/// Process-noise parameters: Gaussian perturbation of source demands and
/// beta-distributed split ratios, one independent draw per diverge per step.
struct NoiseConfig {
  double demand_sigma_frac = 0.0;  // std dev as a fraction of nominal demand
  std::vector<std::pair<double, double>> split_shapes;  // per diverge (a, b)
  std::uint64_t seed = 0;  // root for derived per-particle/per-step streams

  /// Shapes for a Beta with the given mean and concentration a+b.
  static std::pair<double, double> shapes_from_mean(double mean,
                                                    double concentration) {
    return {mean * concentration, (1.0 - mean) * concentration};
  }
};

/// Totals of one step's boundary exchanges, for conservation accounting.
struct StepFlows {
  double external_in = 0.0;  // veh/s entering the source queues
  double offramp_out = 0.0;  // veh/s draining from offramp links
  double sink_out = 0.0;     // veh/s leaving the mainline tail
};

/// One conservation update. `demands` holds veh/s per source queue slot,
/// `betas` one realized split ratio per diverge in node order. All flows are
/// evaluated on the incoming state, then applied at once.
DensityState step_deterministic(const Network& net, const DensityState& state,
                                const Eigen::ArrayXd& demands,
                                const Eigen::ArrayXd& betas,
                                StepFlows* flows = nullptr);

/// As step_deterministic, with demands perturbed by N(0, (frac*nominal)^2)
/// (clamped at zero) and split ratios drawn from their beta distributions.
/// Draw order: demands in queue-slot order, then diverges in node order.
DensityState step_stochastic(const Network& net, const DensityState& state,
                             const Eigen::ArrayXd& nominal_demands,
                             const NoiseConfig& noise, std::mt19937_64& rng,
                             StepFlows* flows = nullptr);

/// In-place variants used by the particle loop.
void step_deterministic_in_place(const Network& net,
                                 Eigen::Ref<Eigen::ArrayXd> rho,
                                 Eigen::Ref<Eigen::ArrayXd> queues,
                                 const Eigen::ArrayXd& demands,
                                 const Eigen::ArrayXd& betas,
                                 StepFlows* flows = nullptr);
void step_stochastic_in_place(const Network& net,
                              Eigen::Ref<Eigen::ArrayXd> rho,
                              Eigen::Ref<Eigen::ArrayXd> queues,
                              const Eigen::ArrayXd& nominal_demands,
                              const NoiseConfig& noise, std::mt19937_64& rng,
                              StepFlows* flows = nullptr);

}  // namespace ctmf
