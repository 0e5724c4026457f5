#include "smds/stress.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "smds/parallel.hpp"
#include "union_find.hpp"

namespace smds {

namespace {

double coupling(double weight, double delta, double sq_dist, double eps_x) {
    const double denom = std::sqrt(sq_dist + eps_x);
    if (denom == 0.0) return 0.0;  // classical B: coincident points contribute nothing
    return weight * delta / denom;
}

void check_dims(const Embedding& X, const ObservationBatch& batch) {
    for (const auto& o : batch.entries) {
        if (o.m < 0 || o.n < 0 || o.m >= X.rows() || o.n >= X.rows())
            throw InvalidInput("observation index out of range for embedding with " +
                               std::to_string(X.rows()) + " rows");
    }
}

void component_step(Embedding& X, const ComponentSystem& sys, double mu, double eps_x,
                    const SolverOptions& solver) {
    ComponentLaplacian L(sys.nodes, sys.edges);
    const Eigen::MatrixXd Xc = L.gather(X);
    const Eigen::MatrixXd rhs = b_times_x(sys, Xc, eps_x);
    const Eigen::MatrixXd y = LaplacianSolver(L, solver).solve(rhs);
    const Eigen::RowVectorXd mean = Xc.colwise().mean();
    const Eigen::MatrixXd next = Xc - mu * (Xc.rowwise() - mean) + mu * y;
    L.scatter(next, X);
}

}  // namespace

double stress(const Embedding& X, const ObservationBatch& batch) {
    check_dims(X, batch);
    double s = 0.0;
    for (const auto& o : batch.entries) {
        if (o.weight == 0.0) continue;
        const double d = (X.row(o.m) - X.row(o.n)).norm();
        const double r = o.delta - d;
        s += o.weight * r * r;
    }
    return s;
}

double stress_normalizer(const ObservationBatch& batch) {
    double s = 0.0;
    for (const auto& o : batch.entries) s += o.weight * o.delta * o.delta;
    return s;
}

double normalized_stress(const Embedding& X, const ObservationBatch& batch) {
    const double norm = stress_normalizer(batch);
    return norm > 0.0 ? stress(X, batch) / norm : 0.0;
}

std::vector<ComponentLaplacian> b_epsilon_matrix(const Embedding& X, const ObservationBatch& batch,
                                                 double eps_x) {
    if (!(eps_x >= 0.0)) throw InvalidInput("eps_x must be nonnegative");
    const auto laplacians = build_laplacian(batch, X.rows());
    std::vector<ComponentLaplacian> out;
    out.reserve(laplacians.size());
    // Lookup of delta per (component, local pair) through the batch entries.
    std::vector<int> comp_of(static_cast<std::size_t>(X.rows()), -1);
    std::vector<Eigen::Index> local_of(static_cast<std::size_t>(X.rows()), 0);
    for (std::size_t c = 0; c < laplacians.size(); ++c) {
        const auto& ids = laplacians[c].node_ids();
        for (std::size_t k = 0; k < ids.size(); ++k) {
            comp_of[static_cast<std::size_t>(ids[k])] = static_cast<int>(c);
            local_of[static_cast<std::size_t>(ids[k])] = static_cast<Eigen::Index>(k);
        }
    }
    std::vector<std::vector<LocalEdge>> edges(laplacians.size());
    for (const auto& o : batch.entries) {
        if (!(o.weight > 0.0)) continue;
        const double sq = (X.row(o.m) - X.row(o.n)).squaredNorm();
        const double c = coupling(o.weight, o.delta, sq, eps_x);
        if (c == 0.0) continue;
        const auto m = static_cast<std::size_t>(o.m);
        const auto n = static_cast<std::size_t>(o.n);
        edges[static_cast<std::size_t>(comp_of[m])].push_back({local_of[m], local_of[n], c});
    }
    for (std::size_t c = 0; c < laplacians.size(); ++c)
        out.emplace_back(laplacians[c].node_ids(), std::move(edges[c]));
    return out;
}

std::vector<ComponentSystem> split_components(std::span<const Observation> entries) {
    std::vector<NodeId> nodes;
    nodes.reserve(entries.size() * 2);
    for (const auto& o : entries) {
        if (!(o.weight > 0.0)) continue;
        nodes.push_back(o.m);
        nodes.push_back(o.n);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    auto local = [&](NodeId v) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };

    detail::UnionFind uf(nodes.size());
    for (const auto& o : entries) {
        if (o.weight > 0.0) uf.unite(local(o.m), local(o.n));
    }
    std::vector<int> comp(nodes.size(), -1);
    std::vector<Eigen::Index> pos(nodes.size(), 0);
    std::vector<ComponentSystem> out;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const std::size_t r = uf.find(k);
        if (comp[r] < 0) {
            comp[r] = static_cast<int>(out.size());
            out.emplace_back();
        }
        auto& sys = out[static_cast<std::size_t>(comp[r])];
        comp[k] = comp[r];
        pos[k] = static_cast<Eigen::Index>(sys.nodes.size());
        sys.nodes.push_back(nodes[k]);
    }

    std::vector<std::vector<std::tuple<Eigen::Index, Eigen::Index, double, double>>> raw(out.size());
    for (const auto& o : entries) {
        if (!(o.weight > 0.0)) continue;
        const std::size_t a = local(o.m);
        const std::size_t b = local(o.n);
        Eigen::Index i = pos[a];
        Eigen::Index j = pos[b];
        if (i > j) std::swap(i, j);
        raw[static_cast<std::size_t>(comp[a])].emplace_back(i, j, o.weight, o.delta);
    }
    for (std::size_t c = 0; c < out.size(); ++c) {
        auto& r = raw[c];
        std::sort(r.begin(), r.end(), [](const auto& x, const auto& y) {
            return std::get<0>(x) != std::get<0>(y) ? std::get<0>(x) < std::get<0>(y)
                                                    : std::get<1>(x) < std::get<1>(y);
        });
        auto& sys = out[c];
        sys.edges.reserve(r.size());
        sys.deltas.reserve(r.size());
        for (const auto& [i, j, w, d] : r) {
            sys.edges.push_back({i, j, w});
            sys.deltas.push_back(d);
        }
    }
    return out;
}

Eigen::MatrixXd b_times_x(const ComponentSystem& sys, const Eigen::MatrixXd& Xc, double eps_x) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Xc.rows(), Xc.cols());
    for (std::size_t k = 0; k < sys.edges.size(); ++k) {
        const auto& e = sys.edges[k];
        const Eigen::RowVectorXd diff = Xc.row(e.i) - Xc.row(e.j);
        const double c = coupling(e.weight, sys.deltas[k], diff.squaredNorm(), eps_x);
        out.row(e.i) += c * diff;
        out.row(e.j) -= c * diff;
    }
    return out;
}

void apply_cluster_update(Embedding& X, std::span<const Observation> entries, double mu,
                          double eps_x, const SolverOptions& solver) {
    if (mu == 0.0) return;
    for (const auto& sys : split_components(entries)) {
        if (sys.nodes.size() < 2) continue;
        component_step(X, sys, mu, eps_x, solver);
    }
}

SmacofPlan::SmacofPlan(const ObservationBatch& batch, Eigen::Index node_count,
                       const SolverOptions& solver)
    : node_count_(node_count) {
    validate_batch(batch, node_count);
    for (auto& sys : split_components(batch.entries)) {
        if (sys.nodes.size() < 2) continue;
        ComponentLaplacian L(sys.nodes, sys.edges);
        LaplacianSolver s(L, solver);
        components_.push_back({std::move(sys), std::move(s)});
    }
}

Embedding SmacofPlan::iterate(const Embedding& X, double relaxation) const {
    if (X.rows() != node_count_) throw InvalidInput("embedding row count does not match the plan");
    Embedding out = X;
    parallel_for(components_.size(), [&](std::size_t c) {
        const auto& comp = components_[c];
        Eigen::MatrixXd Xc(static_cast<Eigen::Index>(comp.system.nodes.size()), X.cols());
        for (Eigen::Index k = 0; k < Xc.rows(); ++k) Xc.row(k) = X.row(comp.system.nodes[k]);
        const Eigen::MatrixXd y = comp.solver.solve(b_times_x(comp.system, Xc, 0.0));
        const Eigen::RowVectorXd mean = Xc.colwise().mean();
        const Eigen::MatrixXd target = y.rowwise() + mean;
        const Eigen::MatrixXd next = (1.0 - relaxation) * Xc + relaxation * target;
        for (Eigen::Index k = 0; k < Xc.rows(); ++k) out.row(comp.system.nodes[k]) = next.row(k);
    });
    return out;
}

Embedding smacof_iterate(const Embedding& X, const ObservationBatch& batch,
                         const SolverOptions& solver) {
    return SmacofPlan(batch, X.rows(), solver).iterate(X);
}

Embedding stochastic_step(const Embedding& X, const ObservationBatch& batch, const StepConfig& cfg,
                          const ClusterPartition& partition, const SolverOptions& solver) {
    cfg.validate();
    validate_batch(batch, X.rows());
    partition.validate(X.rows());
    std::vector<int> owner(static_cast<std::size_t>(X.rows()), -1);
    for (std::size_t c = 0; c < partition.clusters.size(); ++c) {
        for (NodeId v : partition.clusters[c]) owner[static_cast<std::size_t>(v)] = static_cast<int>(c);
    }
    std::vector<std::vector<Observation>> per_cluster(partition.clusters.size());
    for (const auto& o : batch.entries) {
        if (!(o.weight > 0.0)) continue;
        const int a = owner[static_cast<std::size_t>(o.m)];
        const int b = owner[static_cast<std::size_t>(o.n)];
        if (a < 0 || a != b)
            throw InvalidInput("observation (" + std::to_string(o.m) + "," + std::to_string(o.n) +
                               ") is not inside a single cluster of the partition");
        per_cluster[static_cast<std::size_t>(a)].push_back(o);
    }
    Embedding out = X;
    parallel_for(per_cluster.size(), [&](std::size_t c) {
        apply_cluster_update(out, per_cluster[c], cfg.mu, cfg.eps_x, solver);
    });
    return out;
}

Embedding stochastic_step(const Embedding& X, const ObservationBatch& batch, const StepConfig& cfg,
                          const SolverOptions& solver) {
    return stochastic_step(X, batch, cfg, connected_components(batch, X.rows()), solver);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> spe_step(const Eigen::VectorXd& xi,
                                                     const Eigen::VectorXd& xj, double delta,
                                                     double rate) {
    if (xi.size() != xj.size()) throw InvalidInput("spe_step: dimension mismatch");
    const Eigen::VectorXd diff = xi - xj;
    const double d = diff.norm();
    if (d == 0.0) throw InvalidInput("spe_step: coincident points; use the eps_x regularized update");
    const double shrink = rate * (1.0 - delta / d);
    return {xi - shrink * diff, xj + shrink * diff};
}

SgdResult sgd_step(const Embedding& X, const ObservationBatch& batch, double mu) {
    validate_batch(batch, X.rows());
    SgdResult r{X, false};
    for (const auto& o : batch.entries) {
        if (!(o.weight > 0.0)) continue;
        const Eigen::RowVectorXd diff = X.row(o.m) - X.row(o.n);
        const double c = coupling(o.weight, o.delta, diff.squaredNorm(), 0.0);
        const Eigen::RowVectorXd g = mu * (c - o.weight) * diff;
        r.X.row(o.m) += g;
        r.X.row(o.n) -= g;
    }
    r.diverged = !r.X.allFinite();
    return r;
}

double upsilon(Eigen::Index node_count, Eigen::Index cluster_size) {
    if (node_count < 2 || cluster_size < 2 || cluster_size > node_count)
        throw InvalidInput("upsilon needs 2 <= p <= N");
    const double N = static_cast<double>(node_count);
    const double p = static_cast<double>(cluster_size);
    return N * (p - 1.0) / (p * (N - 1.0));
}

Eigen::MatrixXd closed_form_b_average(const Embedding& X, const Eigen::MatrixXd& expected_deltas,
                                      double eps_x, Eigen::Index node_count,
                                      Eigen::Index cluster_size) {
    if (X.rows() != node_count || expected_deltas.rows() != node_count ||
        expected_deltas.cols() != node_count)
        throw InvalidInput("closed_form_b_average: dimension mismatch");
    if (cluster_size < 2 || cluster_size > node_count || node_count % cluster_size != 0)
        throw InvalidInput("closed_form_b_average: cluster size " + std::to_string(cluster_size) +
                           " must divide N = " + std::to_string(node_count));
    const double scale = upsilon(node_count, cluster_size) / static_cast<double>(node_count);
    Eigen::MatrixXd Ba = Eigen::MatrixXd::Zero(node_count, node_count);
    for (Eigen::Index m = 0; m < node_count; ++m) {
        for (Eigen::Index n = m + 1; n < node_count; ++n) {
            const double sq = (X.row(m) - X.row(n)).squaredNorm();
            const double v = scale * coupling(1.0, expected_deltas(m, n), sq, eps_x);
            Ba(m, n) = -v;
            Ba(n, m) = -v;
            Ba(m, m) += v;
            Ba(n, n) += v;
        }
    }
    return Ba;
}

Embedding averaged_step(const Embedding& X, const Eigen::MatrixXd& b_average, double mu,
                        double upsilon_value) {
    if (b_average.rows() != X.rows() || b_average.cols() != X.rows())
        throw InvalidInput("averaged_step: dimension mismatch");
    return (1.0 - mu * upsilon_value) * X + mu * (b_average * X);
}

double mean_stress(const Embedding& X, const Eigen::MatrixXd& expected_deltas, double eps_x) {
    double s = 0.0;
    for (Eigen::Index m = 0; m < X.rows(); ++m) {
        for (Eigen::Index n = m + 1; n < X.rows(); ++n) {
            const double delta = expected_deltas(m, n);
            const double sq = (X.row(m) - X.row(n)).squaredNorm();
            s += delta * delta - 2.0 * delta * std::sqrt(sq + eps_x) + sq;
        }
    }
    return s;
}

}  // namespace smds
