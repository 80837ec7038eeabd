#pragma once

#include "evolve/problem.hpp"

namespace evolve {

// Named analytic profile with parameter bounds that keep every Gram matrix
// positive definite on [0, T].
struct Profile {
  enum class Kind { Affine, SinOffset };
  Kind kind = Kind::Affine;
  double c0 = 1.0;
  double c1 = 0.0;
  double omega = 1.0;

  double value(double t) const;
  double derivative(double t) const;
  double min_on(double horizon) const;

  static Profile affine(double c0, double c1) { return {Kind::Affine, c0, c1, 0.0}; }
  static Profile sin_offset(double c0, double c1, double omega) {
    return {Kind::SinOffset, c0, c1, omega};
  }
};

struct InstanceSpec {
  enum class Name { StaticCircle, WeightedRn, EvolvingCircle, MovingIntervalFem };
  Name name = Name::StaticCircle;
  int n = 9;          // mode count (circles, weighted) or node count (interval)
  double horizon = 1.0;
  Profile profile;    // weight w(t), radius R(t), or right endpoint g(t)

  static InstanceSpec parse_name(const std::string& name, int n, double horizon,
                                 Profile profile);
};

struct Instance {
  std::shared_ptr<const SpaceFamily> fam;
  ParabolicProblem prob;  // zero data; attach data with prob.with_data(...)
};

// Fourier wavenumber of hierarchy index i in the circle instances
// (constant, cos, sin, cos 2., sin 2., ...).
int circle_wavenumber(int index);

Instance make_instance(const InstanceSpec& spec);

// Load that makes the truncated weak formulation hold exactly for u_exact:
// f = (time form) du + (elliptic) u + (drift) u in pullback coordinates,
// returned in state (H) coordinates. u_exact must supply a derivative.
ParabolicProblem manufacture(const Instance& inst, const Trajectory& u_exact);

}  // namespace evolve
