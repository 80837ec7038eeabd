#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "evolve/errors.hpp"

namespace evolve {

enum class QuadRule {
  Trapezoid,
  GaussLegendre2,  // composite 2-point Gauss, degree of exactness 3
};

// Strictly increasing time nodes t_0 = 0 < ... < t_M = T plus a composite
// quadrature rule on the cells they define.
class TimeGrid {
 public:
  TimeGrid(std::vector<double> nodes, QuadRule rule = QuadRule::GaussLegendre2);

  static TimeGrid uniform(double horizon, int steps, QuadRule rule = QuadRule::GaussLegendre2);

  const std::vector<double>& nodes() const { return nodes_; }
  int steps() const { return static_cast<int>(nodes_.size()) - 1; }
  double horizon() const { return nodes_.back(); }
  QuadRule rule() const { return rule_; }

  // Quadrature points and weights of the composite rule.
  std::vector<std::pair<double, double>> quad_points() const;

  double integrate(const std::function<double(double)>& f) const;

  TimeGrid refined() const;  // every cell halved

 private:
  std::vector<double> nodes_;
  QuadRule rule_;
};

}  // namespace evolve
