#include "smds/graph_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "smds/diagnostics.hpp"
#include "union_find.hpp"

namespace smds {

namespace {

std::uint64_t pair_key(NodeId a, NodeId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) ^ static_cast<std::uint64_t>(b);
}

}  // namespace

ComponentLaplacian::ComponentLaplacian(std::vector<NodeId> node_ids, std::vector<LocalEdge> edges)
    : node_ids_(std::move(node_ids)), edges_(std::move(edges)) {
    for (std::size_t k = 1; k < node_ids_.size(); ++k) {
        if (node_ids_[k] <= node_ids_[k - 1])
            throw InvalidInput("component node ids must be strictly ascending");
    }
    const Eigen::Index p = size();
    for (auto& e : edges_) {
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.i < 0 || e.j >= p || e.i == e.j)
            throw InvalidInput("component edge (" + std::to_string(e.i) + "," +
                               std::to_string(e.j) + ") out of range");
        if (!(e.weight > 0.0) || !std::isfinite(e.weight))
            throw InvalidInput("component edge weights must be finite and positive");
    }
    std::sort(edges_.begin(), edges_.end(), [](const LocalEdge& a, const LocalEdge& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j)
            throw InvalidInput("duplicate edge in component");
    }
    degree_ = Eigen::VectorXd::Zero(p);
    for (const auto& e : edges_) {
        degree_(e.i) += e.weight;
        degree_(e.j) += e.weight;
    }
}

double ComponentLaplacian::min_weight() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& e : edges_) w = std::min(w, e.weight);
    return w;
}

bool ComponentLaplacian::is_connected() const {
    const auto p = static_cast<std::size_t>(size());
    if (p <= 1) return true;
    detail::UnionFind uf(p);
    std::size_t merges = 0;
    for (const auto& e : edges_) {
        if (uf.unite(static_cast<std::size_t>(e.i), static_cast<std::size_t>(e.j))) ++merges;
    }
    return merges + 1 == p;
}

Eigen::MatrixXd ComponentLaplacian::dense() const {
    Eigen::MatrixXd L = degree_.asDiagonal();
    for (const auto& e : edges_) {
        L(e.i, e.j) -= e.weight;
        L(e.j, e.i) -= e.weight;
    }
    return L;
}

Eigen::MatrixXd ComponentLaplacian::apply(const Eigen::MatrixXd& x) const {
    if (x.rows() != size()) throw InvalidInput("apply: row count does not match component size");
    Eigen::MatrixXd y = degree_.asDiagonal() * x;
    for (const auto& e : edges_) {
        y.row(e.i) -= e.weight * x.row(e.j);
        y.row(e.j) -= e.weight * x.row(e.i);
    }
    return y;
}

Eigen::MatrixXd ComponentLaplacian::gather(const Embedding& X) const {
    Eigen::MatrixXd rows(size(), X.cols());
    for (Eigen::Index k = 0; k < size(); ++k) rows.row(k) = X.row(node_ids_[k]);
    return rows;
}

void ComponentLaplacian::scatter(const Eigen::MatrixXd& rows, Embedding& X) const {
    for (Eigen::Index k = 0; k < size(); ++k) X.row(node_ids_[k]) = rows.row(k);
}

void ClusterPartition::validate(Eigen::Index node_count) const {
    std::vector<int> owner(static_cast<std::size_t>(node_count), -1);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (NodeId v : clusters[c]) {
            if (v < 0 || v >= node_count)
                throw InvalidInput("cluster member " + std::to_string(v) + " out of range");
            auto& o = owner[static_cast<std::size_t>(v)];
            if (o != -1) throw InvalidInput("node " + std::to_string(v) + " appears in two clusters");
            o = static_cast<int>(c);
        }
    }
    if (edge_sets.size() > clusters.size())
        throw InvalidInput("more edge sets than clusters");
    for (std::size_t c = 0; c < edge_sets.size(); ++c) {
        for (const auto& [a, b] : edge_sets[c]) {
            if (a < 0 || b < 0 || a >= node_count || b >= node_count ||
                owner[static_cast<std::size_t>(a)] != static_cast<int>(c) ||
                owner[static_cast<std::size_t>(b)] != static_cast<int>(c))
                throw InvalidInput("edge set " + std::to_string(c) +
                                   " references a node outside its cluster");
        }
    }
}

void validate_batch(const ObservationBatch& batch, Eigen::Index node_count) {
    if (node_count <= 0) throw InvalidInput("node_count must be positive");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(batch.entries.size() * 2);
    for (const auto& o : batch.entries) {
        if (o.m < 0 || o.n < 0 || o.m >= node_count || o.n >= node_count)
            throw InvalidInput("observation (" + std::to_string(o.m) + "," + std::to_string(o.n) +
                               ") index out of range");
        if (o.m == o.n) throw InvalidInput("self-pair observation for node " + std::to_string(o.m));
        if (!(o.weight >= 0.0) || !std::isfinite(o.weight))
            throw InvalidInput("negative or non-finite weight for pair (" + std::to_string(o.m) +
                               "," + std::to_string(o.n) + ")");
        if (o.weight > 0.0 && !(o.delta > 0.0 && std::isfinite(o.delta)))
            throw InvalidInput("weighted pair (" + std::to_string(o.m) + "," +
                               std::to_string(o.n) + ") needs a positive dissimilarity");
        if (!seen.insert(pair_key(o.m, o.n)).second)
            throw InvalidInput("duplicate observation for pair (" + std::to_string(o.m) + "," +
                               std::to_string(o.n) + ")");
    }
}

namespace {

struct ComponentIndex {
    std::vector<int> component;  // per node
    std::vector<Eigen::Index> local;
    std::vector<std::vector<NodeId>> members;
};

ComponentIndex index_components(const ObservationBatch& batch, Eigen::Index node_count) {
    validate_batch(batch, node_count);
    const auto n = static_cast<std::size_t>(node_count);
    detail::UnionFind uf(n);
    for (const auto& o : batch.entries) {
        if (o.weight > 0.0) uf.unite(static_cast<std::size_t>(o.m), static_cast<std::size_t>(o.n));
    }
    ComponentIndex idx;
    idx.component.assign(n, -1);
    idx.local.assign(n, 0);
    std::vector<int> root_to_comp(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t r = uf.find(v);
        if (root_to_comp[r] < 0) {
            root_to_comp[r] = static_cast<int>(idx.members.size());
            idx.members.emplace_back();
        }
        const int c = root_to_comp[r];
        idx.component[v] = c;
        idx.local[v] = static_cast<Eigen::Index>(idx.members[static_cast<std::size_t>(c)].size());
        idx.members[static_cast<std::size_t>(c)].push_back(static_cast<NodeId>(v));
    }
    return idx;
}

}  // namespace

std::vector<ComponentLaplacian> build_laplacian(const ObservationBatch& batch,
                                                Eigen::Index node_count) {
    ComponentIndex idx = index_components(batch, node_count);
    std::vector<std::vector<LocalEdge>> edges(idx.members.size());
    for (const auto& o : batch.entries) {
        if (!(o.weight > 0.0)) continue;
        const auto m = static_cast<std::size_t>(o.m);
        const auto n = static_cast<std::size_t>(o.n);
        edges[static_cast<std::size_t>(idx.component[m])].push_back({idx.local[m], idx.local[n], o.weight});
    }
    std::vector<ComponentLaplacian> out;
    out.reserve(idx.members.size());
    for (std::size_t c = 0; c < idx.members.size(); ++c)
        out.emplace_back(std::move(idx.members[c]), std::move(edges[c]));
    return out;
}

ClusterPartition connected_components(const ObservationBatch& batch, Eigen::Index node_count) {
    ComponentIndex idx = index_components(batch, node_count);
    ClusterPartition part;
    part.slot = batch.slot;
    part.edge_sets.resize(idx.members.size());
    for (const auto& o : batch.entries) {
        if (!(o.weight > 0.0)) continue;
        part.edge_sets[static_cast<std::size_t>(idx.component[static_cast<std::size_t>(o.m)])]
            .emplace_back(std::min(o.m, o.n), std::max(o.m, o.n));
    }
    part.clusters = std::move(idx.members);
    return part;
}

LaplacianSolver::LaplacianSolver(const ComponentLaplacian& L, const SolverOptions& options)
    : laplacian_(L), options_(options) {
    if (!laplacian_.is_connected())
        throw InvalidInput("Laplacian solve requires a connected component");
    if (options_.eps_w > 0.0 && laplacian_.min_weight() < options_.eps_w) {
        warn("Laplacian weight " + std::to_string(laplacian_.min_weight()) +
             " is below eps_w; the connectivity bound 2*eps_w/(p-1)^2 does not apply");
    }
    const Eigen::Index p = laplacian_.size();
    dense_ = p <= options_.dense_threshold;
    if (dense_ && p > 0) {
        Eigen::MatrixXd M = laplacian_.dense();
        M.array() += 1.0 / static_cast<double>(p);
        llt_.compute(M);
        if (llt_.info() != Eigen::Success)
            throw SolverError("Cholesky factorization of L + 11^T/p failed");
    }
}

Eigen::MatrixXd LaplacianSolver::solve(const Eigen::MatrixXd& rhs) const {
    const Eigen::Index p = laplacian_.size();
    if (rhs.rows() != p) throw InvalidInput("solve: RHS row count does not match component size");
    if (p == 0) return rhs;

    Eigen::MatrixXd b = rhs;
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
        const double sum = b.col(c).sum();
        const double scale = b.col(c).cwiseAbs().sum();
        if (std::abs(sum) > options_.range_tolerance * scale) {
            throw InconsistentSystem("RHS column " + std::to_string(c) +
                                     " is not in the range of L (column sum " +
                                     std::to_string(sum) + ")");
        }
        b.col(c).array() -= sum / static_cast<double>(p);
    }

    Eigen::MatrixXd y = dense_ ? Eigen::MatrixXd(llt_.solve(b)) : solve_cg(b);
    y.rowwise() -= y.colwise().mean();
    return y;
}

// Preconditioned CG restricted to the complement of the constant vector.
// The preconditioner J D^{-1} J is SPD on that subspace, so iterates stay
// centered and converge to the minimum-norm solution.
Eigen::MatrixXd LaplacianSolver::solve_cg(const Eigen::MatrixXd& b) const {
    const Eigen::Index p = laplacian_.size();
    const int max_iter = options_.cg_max_iterations > 0 ? options_.cg_max_iterations
                                                        : static_cast<int>(20 * p + 100);
    const Eigen::VectorXd inv_diag = laplacian_.degree().cwiseInverse();
    auto precondition = [&](const Eigen::VectorXd& r) {
        Eigen::VectorXd z = inv_diag.cwiseProduct(r);
        z.array() -= z.mean();
        return z;
    };

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(p, b.cols());
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
        const Eigen::VectorXd bc = b.col(c);
        const double bnorm = bc.norm();
        if (bnorm == 0.0) continue;
        Eigen::VectorXd xc = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd r = bc;
        Eigen::VectorXd z = precondition(r);
        Eigen::VectorXd dir = z;
        double rz = r.dot(z);
        for (int it = 0; it < max_iter; ++it) {
            const Eigen::VectorXd Ad = laplacian_.apply(dir);
            const double alpha = rz / dir.dot(Ad);
            xc += alpha * dir;
            r -= alpha * Ad;
            r.array() -= r.mean();
            if (r.norm() <= options_.cg_tolerance * bnorm) break;
            z = precondition(r);
            const double rz_next = r.dot(z);
            dir = z + (rz_next / rz) * dir;
            rz = rz_next;
        }
        const double residual = (bc - laplacian_.apply(xc)).norm() / bnorm;
        if (!(residual <= 1e-8)) {
            throw SolverError("conjugate gradient stalled at relative residual " +
                              std::to_string(residual));
        }
        x.col(c) = xc;
    }
    return x;
}

Eigen::MatrixXd solve_min_norm(const ComponentLaplacian& L, const Eigen::MatrixXd& rhs,
                               const SolverOptions& options) {
    return LaplacianSolver(L, options).solve(rhs);
}

Eigen::MatrixXd project_centering(const ComponentLaplacian& L, const Eigen::MatrixXd& X) {
    if (X.rows() != L.size())
        throw InvalidInput("project_centering: row count does not match component size");
    if (X.rows() == 0) return X;
    Eigen::MatrixXd out = X;
    out.rowwise() -= X.colwise().mean();
    return out;
}

double algebraic_connectivity(const ComponentLaplacian& L) {
    if (L.size() < 2) throw InvalidInput("algebraic connectivity needs at least two nodes");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.dense(), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1);
}

}  // namespace smds
