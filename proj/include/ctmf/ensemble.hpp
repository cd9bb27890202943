#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

#include "ctmf/ctm.hpp"

namespace ctmf {

/// Weighted particle set. Particle p is column p of `rho` and `queues`;
/// weights are kept normalized to sum one.
struct ParticleEnsemble {
  Eigen::ArrayXXd rho;     // density slots x P
  Eigen::ArrayXXd queues;  // queue slots x P
  Eigen::VectorXd weights; // P, non-negative, sums to one
  int t = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Samples P particles from the initial-condition sampler and assigns uniform
/// weights. The sampler fills one particle's columns:
///   sampler(p, rho_col, queue_col)
/// Each sampled state is validated against the network bounds.
template <class Sampler>
ParticleEnsemble init_ensemble(const Network& net, int count,
                               Sampler&& sampler) {
  if (count < 1) throw std::invalid_argument("particle count must be >= 1");
  ParticleEnsemble ens;
  ens.rho.resize(net.density_count(), count);
  ens.queues.resize(net.queue_count(), count);
  ens.weights = Eigen::VectorXd::Constant(count, 1.0 / count);
  ens.t = 0;
  for (int p = 0; p < count; ++p) {
    sampler(p, ens.rho.col(p), ens.queues.col(p));
    validate_state(net, {ens.rho.col(p), ens.queues.col(p)});
  }
  return ens;
}

/// Advances every particle independently through the transition kernel;
/// weights are untouched (they remain the prior weights). The kernel sees
///   kernel(p, t_next, rho_col, queue_col)
/// and must derive any randomness from (p, t_next) so that execution order
/// cannot change the result.
template <class Kernel>
void predict(ParticleEnsemble& ens, Kernel&& kernel) {
  const int t_next = ens.t + 1;
  for (int p = 0; p < ens.size(); ++p)
    kernel(p, t_next, ens.rho.col(p), ens.queues.col(p));
  ens.t = t_next;
}

/// Multiplies weights by per-particle likelihoods and renormalizes.
/// Returns false when every product is zero, in which case the weights are
/// reset to uniform (degenerate ensemble; the caller should skip resampling).
inline bool reweigh(ParticleEnsemble& ens,
                    const Eigen::VectorXd& likelihood) {
  if (likelihood.size() != ens.weights.size())
    throw std::invalid_argument("one likelihood value per particle required");
  if ((likelihood.array() < 0.0).any())
    throw std::invalid_argument("likelihoods must be non-negative");
  const Eigen::VectorXd updated =
      ens.weights.cwiseProduct(likelihood);
  const double total = updated.sum();
  if (!(total > 0.0)) {
    ens.weights.setConstant(1.0 / ens.size());
    return false;
  }
  ens.weights = updated / total;
  return true;
}

/// Log-space reweighing for batches of many measurement factors: weights are
/// scaled by exp(log_likelihood - max) before normalization.
inline bool reweigh_log(ParticleEnsemble& ens,
                        const Eigen::VectorXd& log_likelihood) {
  if (log_likelihood.size() != ens.weights.size())
    throw std::invalid_argument("one log-likelihood per particle required");
  const double peak = log_likelihood.maxCoeff();
  if (!std::isfinite(peak)) {
    ens.weights.setConstant(1.0 / ens.size());
    return false;
  }
  return reweigh(ens, (log_likelihood.array() - peak).exp().matrix());
}

/// Draws P particles i.i.d. with replacement, selection probability equal to
/// the current weights, and resets the weights to uniform.
inline void resample_multinomial(ParticleEnsemble& ens, std::mt19937_64& rng) {
  const int count = ens.size();
  Eigen::VectorXd cumulative(count);
  double acc = 0.0;
  for (int p = 0; p < count; ++p) {
    acc += ens.weights[p];
    cumulative[p] = acc;
  }
  cumulative[count - 1] = 1.0;  // guard against rounding in the tail

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> pick(count);
  for (int p = 0; p < count; ++p) {
    const double u = unit(rng);
    pick[p] = static_cast<int>(
        std::lower_bound(cumulative.data(), cumulative.data() + count, u) -
        cumulative.data());
  }

  Eigen::ArrayXXd rho(ens.rho.rows(), count);
  Eigen::ArrayXXd queues(ens.queues.rows(), count);
  for (int p = 0; p < count; ++p) {
    rho.col(p) = ens.rho.col(pick[p]);
    queues.col(p) = ens.queues.col(pick[p]);
  }
  ens.rho.swap(rho);
  ens.queues.swap(queues);
  ens.weights.setConstant(1.0 / count);
}

/// Weighted ensemble average of the state.
inline DensityState empirical_mean(const ParticleEnsemble& ens) {
  return {(ens.rho.matrix() * ens.weights).array(),
          (ens.queues.matrix() * ens.weights).array()};
}

/// 1 / sum(w^2): P when weights are uniform, 1 when one particle holds all
/// the mass.
inline double effective_sample_size(const ParticleEnsemble& ens) {
  return 1.0 / ens.weights.squaredNorm();
}

}  // namespace ctmf
