#ifndef SLOC_TRANSPORT_HPP
#define SLOC_TRANSPORT_HPP

#include <Eigen/Core>

#include "sloc/measures.hpp"

namespace sloc {

// Exact optimal transport between two discrete measures under squared
// Euclidean cost.  `cost` is the squared 2-Wasserstein distance; `flow`
// the optimal plan (rows follow mu's atoms, columns nu's).
struct TransportPlan {
    double cost = 0.0;
    Eigen::MatrixXd flow;
};

// Solves the transportation linear program with a successive-shortest-path
// min-cost-flow using node potentials: exact at optimality, no tolerance
// tuning.  Supported up to 256 atoms of combined support; larger inputs get
// a capability error suggesting quantize_points.
TransportPlan transport_plan(const DiscreteMeasure& mu,
                             const DiscreteMeasure& nu);

// Squared transport distance (the plan's optimal value).
double t2_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

} // namespace sloc

#endif
