#include "evolve/time_grid.hpp"

#include <cmath>

namespace evolve {

TimeGrid::TimeGrid(std::vector<double> nodes, QuadRule rule)
    : nodes_(std::move(nodes)), rule_(rule) {
  if (nodes_.size() < 2) throw PreconditionError("TimeGrid: need at least two nodes");
  if (nodes_.front() != 0.0) throw PreconditionError("TimeGrid: first node must be 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!(nodes_[i] > nodes_[i - 1]))
      throw PreconditionError("TimeGrid: nodes must be strictly increasing");
}

TimeGrid TimeGrid::uniform(double horizon, int steps, QuadRule rule) {
  if (horizon <= 0.0) throw PreconditionError("TimeGrid: horizon must be positive");
  if (steps < 1) throw PreconditionError("TimeGrid: need at least one step");
  std::vector<double> nodes(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) nodes[i] = horizon * static_cast<double>(i) / steps;
  nodes.back() = horizon;  // exact endpoint
  return TimeGrid(std::move(nodes), rule);
}

std::vector<std::pair<double, double>> TimeGrid::quad_points() const {
  std::vector<std::pair<double, double>> pts;
  const int m = steps();
  if (rule_ == QuadRule::Trapezoid) {
    pts.reserve(nodes_.size());
    for (int i = 0; i <= m; ++i) {
      double w = 0.0;
      if (i > 0) w += 0.5 * (nodes_[i] - nodes_[i - 1]);
      if (i < m) w += 0.5 * (nodes_[i + 1] - nodes_[i]);
      pts.emplace_back(nodes_[i], w);
    }
  } else {
    // Two Gauss points per cell at mid +- dt/(2*sqrt(3)).
    const double c = 0.5 / std::sqrt(3.0);
    pts.reserve(2 * static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      double dt = nodes_[i + 1] - nodes_[i];
      double mid = 0.5 * (nodes_[i] + nodes_[i + 1]);
      pts.emplace_back(mid - c * dt, 0.5 * dt);
      pts.emplace_back(mid + c * dt, 0.5 * dt);
    }
  }
  return pts;
}

double TimeGrid::integrate(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (const auto& [t, w] : quad_points()) acc += w * f(t);
  return acc;
}

TimeGrid TimeGrid::refined() const {
  std::vector<double> out;
  out.reserve(2 * nodes_.size());
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    out.push_back(nodes_[i]);
    out.push_back(0.5 * (nodes_[i] + nodes_[i + 1]));
  }
  out.push_back(nodes_.back());
  return TimeGrid(std::move(out), rule_);
}

}  // namespace evolve
