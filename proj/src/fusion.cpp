#include "ctmf/fusion.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "ctmf/random.hpp"

namespace ctmf {

void validate_measurement(const Network& net, const Measurement& m) {
  if (!(m.value >= 0.0))
    throw std::invalid_argument("measurement value must be non-negative");
  net.density_slot_of(m.link);  // throws for unknown or density-free links
}

Eigen::ArrayXd pseudostate_velocity(const Network& net,
                                    const Eigen::ArrayXd& rho) {
  return link_velocity(net.free_speed(), net.wave_speed(), net.jam_density(),
                       net.critical_density(), rho);
}

Eigen::ArrayXXd pseudostate_velocities(const Network& net,
                                       const Eigen::ArrayXXd& rho) {
  Eigen::ArrayXXd vbar(rho.rows(), rho.cols());
  for (int s = 0; s < rho.rows(); ++s) {
    const double vf = net.free_speed()[s];
    const double w = net.wave_speed()[s];
    const double rho_j = net.jam_density()[s];
    const double crit = net.critical_density()[s];
    vbar.row(s) = (rho.row(s) <= crit)
                      .select(vf, w * (rho_j - rho.row(s)) /
                                      rho.row(s).max(1e-300));
  }
  return vbar;
}

Eigen::ArrayXd weighted_variance(const Eigen::ArrayXXd& field,
                                 const Eigen::VectorXd& weights,
                                 const Eigen::ArrayXd& floor_sq) {
  const Eigen::ArrayXd mean = (field.matrix() * weights).array();
  const Eigen::ArrayXd second =
      (field.square().matrix() * weights).array();
  return (second - mean.square()).max(floor_sq);
}

Eigen::ArrayXd ensemble_variances(const ParticleEnsemble& ens,
                                  const Network& net, MeasurementKind kind,
                                  const LikelihoodConfig& cfg) {
  if (kind == MeasurementKind::density) {
    const Eigen::ArrayXd floor_sq =
        (cfg.variance_floor_frac * net.jam_density()).square();
    return weighted_variance(ens.rho, ens.weights, floor_sq);
  }
  const Eigen::ArrayXd floor_sq =
      (cfg.variance_floor_frac * net.free_speed()).square();
  return weighted_variance(pseudostate_velocities(net, ens.rho), ens.weights,
                           floor_sq);
}

double log_gaussian(double y, double mean, double var) {
  const double dev = y - mean;
  return -0.5 * (dev * dev / var + std::log(2.0 * std::numbers::pi * var));
}

double log_measurement_likelihood(const Measurement& m, const Network& net,
                                  const Eigen::ArrayXd& rho_p,
                                  const Eigen::ArrayXd& vbar_p,
                                  const Eigen::ArrayXd& density_var,
                                  const Eigen::ArrayXd& velocity_var) {
  const int slot = net.density_slot_of(m.link);
  if (m.kind == MeasurementKind::density)
    return log_gaussian(m.value, rho_p[slot], density_var[slot]);
  return log_gaussian(m.value, vbar_p[slot], velocity_var[slot]);
}

double measurement_likelihood(const Measurement& m, const Network& net,
                              const Eigen::ArrayXd& rho_p,
                              const Eigen::ArrayXd& vbar_p,
                              const Eigen::ArrayXd& density_var,
                              const Eigen::ArrayXd& velocity_var) {
  return std::exp(log_measurement_likelihood(m, net, rho_p, vbar_p,
                                             density_var, velocity_var));
}

double particle_likelihood(const std::vector<Measurement>& surviving,
                           const Network& net, const Eigen::ArrayXd& rho_p,
                           const Eigen::ArrayXd& vbar_p,
                           const Eigen::ArrayXd& density_var,
                           const Eigen::ArrayXd& velocity_var) {
  double log_total = 0.0;
  for (const Measurement& m : surviving)
    log_total += log_measurement_likelihood(m, net, rho_p, vbar_p, density_var,
                                            velocity_var);
  return std::exp(log_total);
}

BatchEvaluation evaluate_batch(const std::vector<Measurement>& batch,
                               const ParticleEnsemble& ens, const Network& net,
                               const LikelihoodConfig& cfg) {
  BatchEvaluation out;
  const int count = static_cast<int>(batch.size());
  const int particles = ens.size();
  out.keep.assign(count, 0);
  out.particle_loglik = Eigen::VectorXd::Zero(particles);
  if (count == 0) return out;

  bool any_density = false, any_velocity = false;
  for (const Measurement& m : batch) {
    validate_measurement(net, m);
    (m.kind == MeasurementKind::density ? any_density : any_velocity) = true;
  }
  if (any_density)
    out.density_var =
        ensemble_variances(ens, net, MeasurementKind::density, cfg);

  Eigen::ArrayXXd vbar;
  if (any_velocity) {
    vbar = pseudostate_velocities(net, ens.rho);
    const Eigen::ArrayXd floor_sq =
        (cfg.variance_floor_frac * net.free_speed()).square();
    out.velocity_var = weighted_variance(vbar, ens.weights, floor_sq);
  }

  // Log likelihood of each measurement against every particle; screening
  // keeps a measurement only if its best particle is within outlier_sigma
  // standard deviations, so exclusion is uniform across particles.
  Eigen::Array<double, 1, Eigen::Dynamic> row(particles);
  for (int i = 0; i < count; ++i) {
    const Measurement& m = batch[i];
    const int slot = net.density_slot_of(m.link);
    const bool is_density = m.kind == MeasurementKind::density;
    const double var = is_density ? out.density_var[slot]
                                  : out.velocity_var[slot];
    if (is_density)
      row = -0.5 * ((m.value - ens.rho.row(slot)).square() / var +
                    std::log(2.0 * std::numbers::pi * var));
    else
      row = -0.5 * ((m.value - vbar.row(slot)).square() / var +
                    std::log(2.0 * std::numbers::pi * var));
    const double best = row.maxCoeff();
    const double peak = -0.5 * std::log(2.0 * std::numbers::pi * var);
    if (best >= peak - 0.5 * cfg.outlier_sigma * cfg.outlier_sigma) {
      out.keep[i] = 1;
      ++out.used;
      out.particle_loglik.array() += row.transpose();
    } else {
      ++out.dropped;
    }
  }
  return out;
}

namespace {

AssimilationResult filter_step(ParticleEnsemble& ens, const Network& net,
                               const Eigen::ArrayXd& nominal_demands,
                               const std::vector<Measurement>& batch,
                               const NoiseConfig& noise,
                               const LikelihoodConfig& cfg,
                               double resample_ess_frac) {
  predict(ens, [&](int p, int t, Eigen::Ref<Eigen::ArrayXd> rho,
                   Eigen::Ref<Eigen::ArrayXd> queues) {
    std::mt19937_64 rng = make_stream(noise.seed, StreamKind::predict,
                                      static_cast<std::uint64_t>(p),
                                      static_cast<std::uint64_t>(t));
    step_stochastic_in_place(net, rho, queues, nominal_demands, noise, rng);
  });

  AssimilationResult result;
  result.received = static_cast<int>(batch.size());
  if (batch.empty()) return result;

  const BatchEvaluation eval = evaluate_batch(batch, ens, net, cfg);
  result.used = eval.used;
  result.dropped = eval.dropped;
  if (eval.used == 0) return result;  // nothing survived screening

  if (!reweigh_log(ens, eval.particle_loglik)) {
    result.degenerate = true;
    std::fprintf(stderr,
                 "warning: degenerate ensemble at step %d; weights reset to "
                 "uniform, resampling skipped\n",
                 ens.t);
    return result;
  }

  bool do_resample = true;
  if (resample_ess_frac > 0.0)
    do_resample = effective_sample_size(ens) <
                  resample_ess_frac * static_cast<double>(ens.size());
  if (do_resample) {
    std::mt19937_64 rng =
        make_stream(noise.seed, StreamKind::resample, 0,
                    static_cast<std::uint64_t>(ens.t));
    resample_multinomial(ens, rng);
    result.resampled = true;
  }
  return result;
}

}  // namespace

AssimilationResult rbpf_step(ParticleEnsemble& ens, const Network& net,
                             const Eigen::ArrayXd& nominal_demands,
                             const std::vector<Measurement>& batch,
                             const NoiseConfig& noise,
                             const LikelihoodConfig& cfg,
                             double resample_ess_frac) {
  return filter_step(ens, net, nominal_demands, batch, noise, cfg,
                     resample_ess_frac);
}

AssimilationResult pf_step(ParticleEnsemble& ens, const Network& net,
                           const Eigen::ArrayXd& nominal_demands,
                           const std::vector<Measurement>& batch,
                           const NoiseConfig& noise,
                           const LikelihoodConfig& cfg,
                           double resample_ess_frac) {
  for (const Measurement& m : batch)
    if (m.kind == MeasurementKind::velocity)
      throw std::invalid_argument(
          "density-only filter step received a velocity measurement");
  return filter_step(ens, net, nominal_demands, batch, noise, cfg,
                     resample_ess_frac);
}

}  // namespace ctmf
