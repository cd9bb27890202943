#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ctmf/ensemble.hpp"
#include "ctmf/random.hpp"
#include "test_util.hpp"

using namespace ctmf;
using testutil::chain;

namespace {

/// Point-mass initial condition at a fixed density.
ParticleEnsemble point_mass(const Network& net, int count, double rho) {
  return init_ensemble(net, count,
                       [&](int, Eigen::Ref<Eigen::ArrayXd> r,
                           Eigen::Ref<Eigen::ArrayXd> q) {
                         r.setConstant(rho);
                         q.setZero();
                       });
}

void check_normalized(const ParticleEnsemble& ens) {
  CHECK(ens.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((ens.weights.array() >= 0.0).all());
}

}  // namespace

TEST_CASE("initialization") {
  const Network net = chain(3);
  SUBCASE("single particle carries all weight") {
    const ParticleEnsemble ens = point_mass(net, 1, 0.01);
    CHECK(ens.size() == 1);
    CHECK(ens.weights[0] == 1.0);
  }
  SUBCASE("point mass replicates across particles") {
    const ParticleEnsemble ens = point_mass(net, 100, 0.01);
    CHECK(ens.weights[0] == doctest::Approx(0.01));
    CHECK((ens.rho == 0.01).all());
    check_normalized(ens);
  }
  SUBCASE("uniform initial condition has the right sample mean") {
    const int count = 1000;
    const double hi = 0.02;  // uniform on [0, critical]
    const ParticleEnsemble ens = init_ensemble(
        net, count,
        [&](int p, Eigen::Ref<Eigen::ArrayXd> r,
            Eigen::Ref<Eigen::ArrayXd> q) {
          std::mt19937_64 rng = make_stream(5, StreamKind::init, p, 0);
          std::uniform_real_distribution<double> u(0.0, hi);
          for (Eigen::Index s = 0; s < r.size(); ++s) r[s] = u(rng);
          q.setZero();
        });
    const DensityState mean = empirical_mean(ens);
    const double sigma = hi / std::sqrt(12.0);
    for (int s = 0; s < net.density_count(); ++s)
      CHECK(std::fabs(mean.rho[s] - hi / 2.0) <
            3.0 * sigma / std::sqrt(double(count)));
  }
  SUBCASE("invalid sampled states are rejected") {
    CHECK_THROWS(init_ensemble(net, 2,
                               [&](int, Eigen::Ref<Eigen::ArrayXd> r,
                                   Eigen::Ref<Eigen::ArrayXd> q) {
                                 r.setConstant(1.0);  // above jam density
                                 q.setZero();
                               }));
  }
}

TEST_CASE("prediction advances particles, never weights") {
  const Network net = chain(3);
  ParticleEnsemble ens = point_mass(net, 50, 0.01);
  ens.weights[0] = 0.5;
  ens.weights.tail(49).setConstant(0.5 / 49);

  Eigen::ArrayXd demand(1);
  demand[0] = 0.3;
  const Eigen::VectorXd weights_before = ens.weights;
  predict(ens, [&](int, int, Eigen::Ref<Eigen::ArrayXd> rho,
                   Eigen::Ref<Eigen::ArrayXd> queues) {
    step_deterministic_in_place(net, rho, queues, demand, Eigen::ArrayXd(0));
  });
  CHECK(ens.t == 1);
  CHECK((ens.weights.array() == weights_before.array()).all());
  // A deterministic kernel moves every particle identically.
  for (int p = 1; p < ens.size(); ++p)
    CHECK((ens.rho.col(p) == ens.rho.col(0)).all());
}

TEST_CASE("predicted ensemble mean matches a brute-force kernel average") {
  const Network net = chain(3);
  NoiseConfig noise;
  noise.demand_sigma_frac = 0.3;
  Eigen::ArrayXd demand(1);
  demand[0] = 0.4;
  DensityState start = DensityState::zero(net);
  start.rho.setConstant(0.015);

  // Brute force: many independent draws of the one-step kernel.
  const int draws = 100000;
  Eigen::ArrayXd brute = Eigen::ArrayXd::Zero(net.density_count());
  Eigen::ArrayXd brute_sq = Eigen::ArrayXd::Zero(net.density_count());
  std::mt19937_64 rng(2024);
  for (int i = 0; i < draws; ++i) {
    const DensityState next = step_stochastic(net, start, demand, noise, rng);
    brute += next.rho;
    brute_sq += next.rho.square();
  }
  brute /= draws;
  brute_sq = brute_sq / draws - brute.square();

  const int count = 2000;
  ParticleEnsemble ens = init_ensemble(
      net, count,
      [&](int, Eigen::Ref<Eigen::ArrayXd> r, Eigen::Ref<Eigen::ArrayXd> q) {
        r = start.rho;
        q = start.queues;
      });
  predict(ens, [&](int p, int t, Eigen::Ref<Eigen::ArrayXd> rho,
                   Eigen::Ref<Eigen::ArrayXd> queues) {
    std::mt19937_64 stream = make_stream(7, StreamKind::predict, p, t);
    step_stochastic_in_place(net, rho, queues, demand, noise, stream);
  });
  const DensityState mean = empirical_mean(ens);
  for (int s = 0; s < net.density_count(); ++s) {
    const double var = std::max(0.0, brute_sq[s]);
    const double se = std::sqrt(var / count + var / draws);
    CHECK(std::fabs(mean.rho[s] - brute[s]) < 4.0 * se + 1e-12);
  }
}

TEST_CASE("reweighing") {
  const Network net = chain(2);
  SUBCASE("constant likelihood changes nothing") {
    ParticleEnsemble ens = point_mass(net, 4, 0.01);
    ens.weights << 0.1, 0.2, 0.3, 0.4;
    CHECK(reweigh(ens, Eigen::VectorXd::Constant(4, 2.5)));
    CHECK(ens.weights[0] == doctest::Approx(0.1));
    CHECK(ens.weights[3] == doctest::Approx(0.4));
  }
  SUBCASE("a zero likelihood removes a particle") {
    ParticleEnsemble ens = point_mass(net, 2, 0.01);
    Eigen::VectorXd g(2);
    g << 1.0, 0.0;
    CHECK(reweigh(ens, g));
    CHECK(ens.weights[0] == doctest::Approx(1.0));
    CHECK(ens.weights[1] == doctest::Approx(0.0));
  }
  SUBCASE("hand-normalized example") {
    ParticleEnsemble ens = point_mass(net, 2, 0.01);
    ens.weights << 0.2, 0.8;
    Eigen::VectorXd g(2);
    g << 3.0, 1.0;
    CHECK(reweigh(ens, g));
    CHECK(ens.weights[0] == doctest::Approx(0.6 / 1.4));
    CHECK(ens.weights[1] == doctest::Approx(0.8 / 1.4));
    check_normalized(ens);
  }
  SUBCASE("all-zero products reset to uniform and report degeneracy") {
    ParticleEnsemble ens = point_mass(net, 4, 0.01);
    CHECK_FALSE(reweigh(ens, Eigen::VectorXd::Zero(4)));
    CHECK(ens.weights[2] == doctest::Approx(0.25));
  }
  SUBCASE("log-space matches linear space") {
    ParticleEnsemble lin = point_mass(net, 3, 0.01);
    ParticleEnsemble logv = point_mass(net, 3, 0.01);
    lin.weights << 0.5, 0.25, 0.25;
    logv.weights = lin.weights;
    Eigen::VectorXd g(3);
    g << 2.0, 0.5, 1.0;
    CHECK(reweigh(lin, g));
    CHECK(reweigh_log(logv, g.array().log().matrix()));
    for (int p = 0; p < 3; ++p)
      CHECK(logv.weights[p] == doctest::Approx(lin.weights[p]).epsilon(1e-12));
  }
  SUBCASE("negative likelihood is rejected") {
    ParticleEnsemble ens = point_mass(net, 2, 0.01);
    Eigen::VectorXd g(2);
    g << 1.0, -0.5;
    CHECK_THROWS_AS(reweigh(ens, g), std::invalid_argument);
  }
}

TEST_CASE("multinomial resampling") {
  const Network net = chain(2);
  SUBCASE("a unit weight clones that particle everywhere") {
    ParticleEnsemble ens = point_mass(net, 8, 0.01);
    for (int p = 0; p < 8; ++p) ens.rho.col(p).setConstant(0.001 * (p + 1));
    ens.weights.setZero();
    ens.weights[5] = 1.0;
    std::mt19937_64 rng(1);
    resample_multinomial(ens, rng);
    CHECK((ens.rho == 0.006).all());
    CHECK(ens.weights[0] == doctest::Approx(1.0 / 8));
  }

  SUBCASE("uniform weights give multinomial counts (chi-square, 1% level)") {
    const int count = 256;
    int failures = 0;
    const int repeats = 20;
    for (int rep = 0; rep < repeats; ++rep) {
      ParticleEnsemble ens = point_mass(net, count, 0.01);
      for (int p = 0; p < count; ++p) ens.rho.col(p).setConstant(1e-5 * p);
      std::mt19937_64 rng(100 + rep);
      resample_multinomial(ens, rng);
      std::vector<int> counts(count, 0);
      for (int p = 0; p < count; ++p) {
        const int src = static_cast<int>(std::lround(ens.rho(0, p) / 1e-5));
        ++counts[src];
      }
      double chi2 = 0.0;
      for (int c : counts) chi2 += (c - 1.0) * (c - 1.0);
      const double df = count - 1;
      // Normal approximation to the chi-square null at the 1% level.
      if (std::fabs(chi2 - df) > 2.576 * std::sqrt(2.0 * df)) ++failures;
    }
    CHECK(failures <= 2);
  }

  SUBCASE("resampling preserves the weighted mean in expectation") {
    const int count = 32;
    ParticleEnsemble base = point_mass(net, count, 0.01);
    std::mt19937_64 setup(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int p = 0; p < count; ++p)
      base.rho.col(p).setConstant(0.01 * u(setup));
    Eigen::VectorXd w(count);
    for (int p = 0; p < count; ++p) w[p] = u(setup);
    base.weights = w / w.sum();
    const double target = empirical_mean(base).rho[0];

    const int repeats = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      ParticleEnsemble ens = base;
      std::mt19937_64 rng(1000 + rep);
      resample_multinomial(ens, rng);
      const double m = empirical_mean(ens).rho[0];
      sum += m;
      sum_sq += m * m;
    }
    const double mean = sum / repeats;
    const double var = sum_sq / repeats - mean * mean;
    CHECK(std::fabs(mean - target) < 3.0 * std::sqrt(var / repeats) + 1e-12);
  }
}

TEST_CASE("empirical mean") {
  const Network net = chain(2);
  SUBCASE("single particle returns itself") {
    ParticleEnsemble ens = point_mass(net, 1, 0.07);
    CHECK(empirical_mean(ens).rho[0] == doctest::Approx(0.07));
  }
  SUBCASE("two equal-weight particles average") {
    ParticleEnsemble ens = point_mass(net, 2, 0.0);
    ens.rho.col(1).setConstant(0.1);
    CHECK(empirical_mean(ens).rho[0] == doctest::Approx(0.05));
  }
  SUBCASE("matches a long-double two-pass oracle") {
    const int count = 500;
    ParticleEnsemble ens = point_mass(net, count, 0.0);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 0.12);
    Eigen::VectorXd w(count);
    for (int p = 0; p < count; ++p) {
      ens.rho.col(p).setConstant(u(rng));
      w[p] = u(rng) + 1e-3;
    }
    ens.weights = w / w.sum();
    long double acc = 0.0L;
    for (int p = 0; p < count; ++p)
      acc += static_cast<long double>(ens.weights[p]) *
             static_cast<long double>(ens.rho(0, p));
    const double oracle = static_cast<double>(acc);
    CHECK(empirical_mean(ens).rho[0] == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("effective sample size") {
  const Network net = chain(2);
  ParticleEnsemble ens = point_mass(net, 3, 0.01);
  CHECK(effective_sample_size(ens) == doctest::Approx(3.0));
  ens.weights << 1.0, 0.0, 0.0;
  CHECK(effective_sample_size(ens) == doctest::Approx(1.0));
  ens.weights << 0.5, 0.25, 0.25;
  CHECK(effective_sample_size(ens) == doctest::Approx(8.0 / 3.0));
}
