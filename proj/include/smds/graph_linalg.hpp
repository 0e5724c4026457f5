#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "smds/types.hpp"

namespace smds {

// Off-diagonal entry of a Laplacian-structured matrix over local indices,
// stored once per unordered pair with i < j. The matrix entry is -weight.
struct LocalEdge {
    Eigen::Index i = 0;
    Eigen::Index j = 0;
    double weight = 0.0;
};

// Weighted graph Laplacian restricted to one connected component.
//
// Local index k refers to global node node_ids()[k]; node ids are stored in
// ascending order. Only strictly positive weights are stored and the
// diagonal is defined as the sum of incident weights, so row sums are zero
// by construction. The same structure also carries B(X) and B^eps(X), which
// are Laplacians of the graph with weights w*delta/d.
class ComponentLaplacian {
public:
    ComponentLaplacian() = default;
    ComponentLaplacian(std::vector<NodeId> node_ids, std::vector<LocalEdge> edges);

    Eigen::Index size() const { return static_cast<Eigen::Index>(node_ids_.size()); }
    const std::vector<NodeId>& node_ids() const { return node_ids_; }
    const std::vector<LocalEdge>& weights() const { return edges_; }
    const Eigen::VectorXd& degree() const { return degree_; }
    // Stored off-diagonal entries (both triangles).
    std::size_t nnz() const { return 2 * edges_.size(); }
    double min_weight() const;
    bool is_connected() const;

    Eigen::MatrixXd dense() const;
    // L * x for x with size() rows.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;

    // Rows of X belonging to this component, in local order.
    Eigen::MatrixXd gather(const Embedding& X) const;
    void scatter(const Eigen::MatrixXd& rows, Embedding& X) const;

private:
    std::vector<NodeId> node_ids_;
    std::vector<LocalEdge> edges_;
    Eigen::VectorXd degree_;
};

// Disjoint node clusters C_t^j with the pairs F_t^j selected inside each.
struct ClusterPartition {
    std::int64_t slot = 0;
    std::vector<std::vector<NodeId>> clusters;
    std::vector<std::vector<std::pair<NodeId, NodeId>>> edge_sets;

    // Throws InvalidInput when clusters overlap, leave [0, node_count), or
    // an edge set references a node outside its cluster.
    void validate(Eigen::Index node_count) const;
};

// Checks index ranges, m != n, nonnegative finite weights, delta > 0 where
// w > 0 and at most one entry per unordered pair.
void validate_batch(const ObservationBatch& batch, Eigen::Index node_count);

// One Laplacian per connected component of the positive-weight graph, ordered
// by smallest member. Isolated nodes come back as singleton components with
// no edges.
std::vector<ComponentLaplacian> build_laplacian(const ObservationBatch& batch,
                                                Eigen::Index node_count);

// Components of the positive-weight graph as a partition of {0..N-1}.
ClusterPartition connected_components(const ObservationBatch& batch, Eigen::Index node_count);

struct SolverOptions {
    // Components up to this size use a dense Cholesky factorization; larger
    // ones use deflated preconditioned conjugate gradients.
    Eigen::Index dense_threshold = 512;
    double cg_tolerance = 1e-12;
    int cg_max_iterations = 0;  // 0: 20*p + 100
    // Relative column-sum tolerance for RHS membership in range(L).
    double range_tolerance = 1e-9;
    // When positive, weights below this value trigger a conditioning warning.
    double eps_w = 0.0;
};

// Minimum-norm solver for L Y = RHS on one connected component. Holds the
// factorization so repeated solves with the same L are cheap.
class LaplacianSolver {
public:
    explicit LaplacianSolver(const ComponentLaplacian& L, const SolverOptions& options = {});

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    bool uses_dense() const { return dense_; }

private:
    Eigen::MatrixXd solve_cg(const Eigen::MatrixXd& rhs) const;

    ComponentLaplacian laplacian_;
    SolverOptions options_;
    bool dense_ = true;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Y = L^+ RHS. RHS columns must sum to zero (relative tolerance 1e-9).
Eigen::MatrixXd solve_min_norm(const ComponentLaplacian& L, const Eigen::MatrixXd& rhs,
                               const SolverOptions& options = {});

// L^+ L X, i.e. X with its column means over the component removed.
Eigen::MatrixXd project_centering(const ComponentLaplacian& L, const Eigen::MatrixXd& X);

// Second-smallest eigenvalue of L. Requires at least two nodes.
double algebraic_connectivity(const ComponentLaplacian& L);

}  // namespace smds
