#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

namespace ctmf {

/// Triangular flux model: a freeflow branch with slope `free_speed` and a
/// congested branch with slope `-wave_speed`, meeting at the critical
/// density. Units are m/s and veh/m throughout.
struct FundamentalDiagram {
  double free_speed = 0.0;   // m/s
  double wave_speed = 0.0;   // m/s
  double jam_density = 0.0;  // veh/m
};

inline void validate(const FundamentalDiagram& fd) {
  if (!(fd.free_speed > 0.0) || !(fd.wave_speed > 0.0) ||
      !(fd.jam_density > 0.0))
    throw std::invalid_argument(
        "fundamental diagram parameters must be positive");
}

/// Density where the freeflow and congested branches intersect.
inline double critical_density(const FundamentalDiagram& fd) {
  return fd.wave_speed * fd.jam_density / (fd.free_speed + fd.wave_speed);
}

/// Peak flow, attained at the critical density.
inline double capacity(const FundamentalDiagram& fd) {
  return fd.free_speed * critical_density(fd);
}

/// Demand: the most a link at density `rho` can discharge downstream (veh/s).
inline double sending_flow(const FundamentalDiagram& fd, double rho) {
  return std::min(fd.free_speed * rho, capacity(fd));
}

/// Supply: the most a link at density `rho` can accept from upstream (veh/s).
inline double receiving_flow(const FundamentalDiagram& fd, double rho) {
  return std::min(capacity(fd), fd.wave_speed * (fd.jam_density - rho));
}

inline double flux(const FundamentalDiagram& fd, double rho) {
  return std::min(fd.free_speed * rho, fd.wave_speed * (fd.jam_density - rho));
}

/// Space-mean speed flux(rho)/rho: constant at free_speed below the critical
/// density (including the rho -> 0 limit), hyperbolic above it.
inline double link_velocity(const FundamentalDiagram& fd, double rho) {
  if (rho <= critical_density(fd)) return fd.free_speed;
  return fd.wave_speed * (fd.jam_density - rho) / rho;
}

/// Elementwise link_velocity over slot-aligned parameter arrays.
inline Eigen::ArrayXd link_velocity(const Eigen::ArrayXd& free_speed,
                                    const Eigen::ArrayXd& wave_speed,
                                    const Eigen::ArrayXd& jam_density,
                                    const Eigen::ArrayXd& critical,
                                    const Eigen::ArrayXd& rho) {
  const Eigen::ArrayXd safe_rho = rho.max(1e-300);
  return (rho <= critical)
      .select(free_speed, wave_speed * (jam_density - rho) / safe_rho);
}

}  // namespace ctmf
