#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ctmf/ensemble.hpp"
#include "ctmf/network.hpp"

namespace ctmf {

enum class MeasurementKind { density, velocity };

/// A single observation bound to a link and an assimilation bin: either a
/// density (veh/m) from fixed detection or a velocity (m/s) from a probe.
struct Measurement {
  MeasurementKind kind = MeasurementKind::density;
  double value = 0.0;
  int link = -1;     // corridor link id
  int t_bin = 0;     // assimilation bin index
  std::string device;  // probe reports only
};

void validate_measurement(const Network& net, const Measurement& m);

/// Likelihood policy: Gaussian densities centered on the particle value with
/// the weighted ensemble variance of the measured link, floored at
/// (variance_floor_frac * jam_density)^2 for density measurements and
/// (variance_floor_frac * free_speed)^2 for velocity measurements. A
/// measurement is discarded as an outlier when its best particle sits more
/// than `outlier_sigma` standard deviations from it.
struct LikelihoodConfig {
  double variance_floor_frac = 0.01;
  double outlier_sigma = 6.0;
};

/// Per-link average speed implied by a density state (the velocity
/// pseudostate): deterministic under the noiseless flux-parameter convention.
Eigen::ArrayXd pseudostate_velocity(const Network& net,
                                    const Eigen::ArrayXd& rho);

/// Column-per-particle version of pseudostate_velocity.
Eigen::ArrayXXd pseudostate_velocities(const Network& net,
                                       const Eigen::ArrayXXd& rho);

/// Weighted population variance per row of `field`, floored elementwise at
/// `floor_sq`. Weights must be normalized.
Eigen::ArrayXd weighted_variance(const Eigen::ArrayXXd& field,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::ArrayXd& floor_sq);

/// Ensemble variance of link densities (kind=density) or of the velocity
/// pseudostate (kind=velocity), with the configured floor.
Eigen::ArrayXd ensemble_variances(const ParticleEnsemble& ens,
                                  const Network& net, MeasurementKind kind,
                                  const LikelihoodConfig& cfg);

double log_gaussian(double y, double mean, double var);

/// Gaussian likelihood of one measurement against one particle, using the
/// per-link ensemble variances. Evaluated in log space internally.
double log_measurement_likelihood(const Measurement& m, const Network& net,
                                  const Eigen::ArrayXd& rho_p,
                                  const Eigen::ArrayXd& vbar_p,
                                  const Eigen::ArrayXd& density_var,
                                  const Eigen::ArrayXd& velocity_var);
double measurement_likelihood(const Measurement& m, const Network& net,
                              const Eigen::ArrayXd& rho_p,
                              const Eigen::ArrayXd& vbar_p,
                              const Eigen::ArrayXd& density_var,
                              const Eigen::ArrayXd& velocity_var);

/// Product of measurement likelihoods over an already-screened batch.
/// An empty batch carries no information and yields exactly 1.
double particle_likelihood(const std::vector<Measurement>& surviving,
                           const Network& net, const Eigen::ArrayXd& rho_p,
                           const Eigen::ArrayXd& vbar_p,
                           const Eigen::ArrayXd& density_var,
                           const Eigen::ArrayXd& velocity_var);

/// One batch evaluated against every particle. Outlier screening is uniform
/// across particles: a measurement is kept for all particles or for none.
struct BatchEvaluation {
  Eigen::ArrayXd density_var;       // per link (empty if no density factors)
  Eigen::ArrayXd velocity_var;      // per link (empty if no velocity factors)
  std::vector<char> keep;           // per measurement
  Eigen::VectorXd particle_loglik;  // P, summed over kept measurements
  int used = 0;
  int dropped = 0;
};
BatchEvaluation evaluate_batch(const std::vector<Measurement>& batch,
                               const ParticleEnsemble& ens, const Network& net,
                               const LikelihoodConfig& cfg);

struct AssimilationResult {
  int received = 0;
  int used = 0;
  int dropped = 0;
  bool resampled = false;
  bool degenerate = false;
};

/// One filter step of the data-fusion algorithm: stochastic prediction of
/// every particle, velocity-pseudostate evaluation, batch outlier screening,
/// weight update, and multinomial resampling. Randomness derives from
/// noise.seed via (particle, timestep) streams, so results are independent
/// of evaluation order. With resample_ess_frac = 0 the ensemble is resampled
/// on every step whose screened batch is non-empty; with a positive fraction
/// only when the effective sample size drops below frac * P.
AssimilationResult rbpf_step(ParticleEnsemble& ens, const Network& net,
                             const Eigen::ArrayXd& nominal_demands,
                             const std::vector<Measurement>& batch,
                             const NoiseConfig& noise,
                             const LikelihoodConfig& cfg,
                             double resample_ess_frac = 0.0);

/// The density-only filter step: identical machinery restricted to density
/// measurements. Throws if the batch contains a velocity measurement.
AssimilationResult pf_step(ParticleEnsemble& ens, const Network& net,
                           const Eigen::ArrayXd& nominal_demands,
                           const std::vector<Measurement>& batch,
                           const NoiseConfig& noise,
                           const LikelihoodConfig& cfg,
                           double resample_ess_frac = 0.0);

}  // namespace ctmf
