#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smds {

// Global node index, 0-based.
using NodeId = Eigen::Index;

// N x P coordinate matrix, one row per node.
using Embedding = Eigen::MatrixXd;

// Rejected input: out-of-range indices, negative weights, bad config values.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Right-hand side of a Laplacian system that is not in the range of L.
class InconsistentSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File missing, unreadable or unwritable.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative solver failed to meet its residual contract.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One dissimilarity measurement delta_mn(t) with weight w_mn(t).
struct Observation {
    NodeId m = 0;
    NodeId n = 0;
    double delta = 0.0;
    double weight = 1.0;
};

// All measurements collected in one time slot.
struct ObservationBatch {
    std::int64_t slot = 0;
    std::vector<Observation> entries;
};

struct StepConfig {
    double mu = 0.1;
    // Regularizer added to squared distances in B^eps. Zero selects the
    // classical B(X) with its coincident-point guard.
    double eps_x = 1e-8;
    // Smallest admissible nonzero weight.
    double eps_w = 1e-3;

    void validate() const {
        if (!(mu >= 0.0 && mu <= 1.0))
            throw InvalidInput("mu must lie in [0, 1], got " + std::to_string(mu));
        if (!(eps_x >= 0.0) || !std::isfinite(eps_x))
            throw InvalidInput("eps_x must be nonnegative, got " + std::to_string(eps_x));
        if (!(eps_w > 0.0 && eps_w <= 1.0))
            throw InvalidInput("eps_w must lie in (0, 1], got " + std::to_string(eps_w));
    }
};

}  // namespace smds
