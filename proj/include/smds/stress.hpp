#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "smds/graph_linalg.hpp"
#include "smds/types.hpp"

namespace smds {

// Sum over observations of w * (delta - ||x_m - x_n||)^2.
double stress(const Embedding& X, const ObservationBatch& batch);

// Sum over observations of w * delta^2.
double stress_normalizer(const ObservationBatch& batch);

// stress / sum(w delta^2); zero when the batch carries no weight.
double normalized_stress(const Embedding& X, const ObservationBatch& batch);

// B^eps(X) per connected component of the batch graph, in the same order
// and with the same node sets as build_laplacian. Off-diagonal coupling is
// w*delta/sqrt(d^2 + eps_x); with eps_x = 0 coincident pairs contribute 0.
std::vector<ComponentLaplacian> b_epsilon_matrix(const Embedding& X, const ObservationBatch& batch,
                                                 double eps_x);

// Positive-weight observations of one connected component, in local indices.
struct ComponentSystem {
    std::vector<NodeId> nodes;     // ascending global ids
    std::vector<LocalEdge> edges;  // sorted by (i, j), weight = w
    std::vector<double> deltas;    // aligned with edges
};

// Splits the positive-weight observations into connected components.
// Nodes that carry no positive weight are not part of any component.
std::vector<ComponentSystem> split_components(std::span<const Observation> entries);

// B^eps(X_c) X_c for one component, with X_c in local row order.
Eigen::MatrixXd b_times_x(const ComponentSystem& sys, const Eigen::MatrixXd& Xc, double eps_x);

// Applies X_c <- X_c - mu J X_c + mu L^+ B^eps(X_c) X_c to the rows of X that
// belong to every component of `entries`. Rows outside those components are
// untouched.
void apply_cluster_update(Embedding& X, std::span<const Observation> entries, double mu,
                          double eps_x, const SolverOptions& solver = {});

// Batch SMACOF with the Laplacian factorizations of a fixed batch cached
// across iterations. Components are iterated independently and keep their
// coordinate means.
class SmacofPlan {
public:
    SmacofPlan(const ObservationBatch& batch, Eigen::Index node_count,
               const SolverOptions& solver = {});

    // One Guttman transform per component, optionally relaxed:
    // X <- (1 - r) X + r (mean + L^+ B(X) X).
    Embedding iterate(const Embedding& X, double relaxation = 1.0) const;

private:
    struct Component {
        ComponentSystem system;
        LaplacianSolver solver;
    };
    Eigen::Index node_count_;
    std::vector<Component> components_;
};

Embedding smacof_iterate(const Embedding& X, const ObservationBatch& batch,
                         const SolverOptions& solver = {});

// General stochastic SMACOF update applied per component of the batch graph.
// Every positive-weight observation must fall inside one cluster of the
// partition; clusters are processed in parallel.
Embedding stochastic_step(const Embedding& X, const ObservationBatch& batch, const StepConfig& cfg,
                          const ClusterPartition& partition, const SolverOptions& solver = {});

// Same, with the partition taken as the connected components of the batch.
Embedding stochastic_step(const Embedding& X, const ObservationBatch& batch, const StepConfig& cfg,
                          const SolverOptions& solver = {});

// Two-node proximity-embedding update with learning rate `rate`:
//   x_i' = x_i - rate (1 - delta/d) (x_i - x_j), and symmetrically for x_j.
// stochastic_step on a single pair with step mu equals spe_step with rate mu/2.
std::pair<Eigen::VectorXd, Eigen::VectorXd> spe_step(const Eigen::VectorXd& xi,
                                                     const Eigen::VectorXd& xj, double delta,
                                                     double rate);

struct SgdResult {
    Embedding X;
    bool diverged = false;
};

// X + mu (B(X) X - L X). Divergence is reported, not thrown.
SgdResult sgd_step(const Embedding& X, const ObservationBatch& batch, double mu);

// N (p - 1) / (p (N - 1)).
double upsilon(Eigen::Index node_count, Eigen::Index cluster_size);

// Closed-form E[L_t^+ B_t^eps(X)] when the N nodes are split uniformly at
// random into N/p clusters with i.i.d. weights. Requires p | N.
Eigen::MatrixXd closed_form_b_average(const Embedding& X, const Eigen::MatrixXd& expected_deltas,
                                      double eps_x, Eigen::Index node_count,
                                      Eigen::Index cluster_size);

// X' = (1 - mu*upsilon) X + mu * B^a X.
Embedding averaged_step(const Embedding& X, const Eigen::MatrixXd& b_average, double mu,
                        double upsilon_value);

// Mean-stress objective tracked by the averaged recursion, up to its
// expected-weight scale and a variance constant:
//   sum_{m<n} delta_mn^2 - 2 delta_mn sqrt(d_mn^2 + eps_x) + d_mn^2
// with delta the expected dissimilarities. Equals the plain stress at eps_x=0.
double mean_stress(const Embedding& X, const Eigen::MatrixXd& expected_deltas, double eps_x);

}  // namespace smds
