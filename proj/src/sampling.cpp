#include "smds/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "smds/diagnostics.hpp"
#include "union_find.hpp"

namespace smds {

WeightScheme parse_weight_scheme(const std::string& name) {
    if (name == "unity") return WeightScheme::unity;
    if (name == "sammon") return WeightScheme::sammon;
    if (name == "provided") return WeightScheme::provided;
    throw InvalidInput("unknown weight scheme '" + name + "' (expected unity, sammon or provided)");
}

std::string to_string(WeightScheme scheme) {
    switch (scheme) {
        case WeightScheme::unity: return "unity";
        case WeightScheme::sammon: return "sammon";
        case WeightScheme::provided: return "provided";
    }
    return "unity";
}

void SamplerConfig::validate(Eigen::Index node_count) const {
    if (p < 2) throw InvalidInput("p must be at least 2");
    if (p > node_count)
        throw InvalidInput("p = " + std::to_string(p) + " exceeds N = " + std::to_string(node_count));
    if (const auto* c = std::get_if<PairCount>(&budget)) {
        if (c->value < 1) throw InvalidInput("q must be at least 1");
    } else {
        const double f = std::get<PairFraction>(budget).value;
        if (!(f > 0.0 && f <= 1.0)) throw InvalidInput("pair fraction must lie in (0, 1]");
    }
}

ClusterPartition partition_nodes(Eigen::Index node_count, Eigen::Index p, Rng& rng) {
    if (p < 2) throw InvalidInput("cluster size p must be at least 2");
    if (p > node_count)
        throw InvalidInput("cluster size p = " + std::to_string(p) + " exceeds N = " +
                           std::to_string(node_count));
    std::vector<NodeId> perm(static_cast<std::size_t>(node_count));
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);

    ClusterPartition part;
    const auto n = static_cast<std::size_t>(node_count);
    const auto size = static_cast<std::size_t>(p);
    part.clusters.reserve(n / size + 1);
    for (std::size_t start = 0; start < n; start += size) {
        const std::size_t end = std::min(n, start + size);
        if (end - start < 2) break;  // lone remainder node idles
        std::vector<NodeId> cluster(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                    perm.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(cluster.begin(), cluster.end());
        part.clusters.push_back(std::move(cluster));
    }
    part.edge_sets.resize(part.clusters.size());
    return part;
}

std::pair<Eigen::Index, Eigen::Index> decode_pair_index(std::uint64_t k, Eigen::Index p) {
    const double two_p = 2.0 * static_cast<double>(p) - 1.0;
    auto offset = [p](std::uint64_t a) {
        return a * (2 * static_cast<std::uint64_t>(p) - a - 1) / 2;
    };
    const double disc = two_p * two_p - 8.0 * static_cast<double>(k);
    auto a = static_cast<std::uint64_t>(std::max(0.0, std::floor((two_p - std::sqrt(std::max(0.0, disc))) / 2.0)));
    while (a > 0 && offset(a) > k) --a;
    while (offset(a + 1) <= k) ++a;
    const std::uint64_t b = a + 1 + (k - offset(a));
    return {static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)};
}

std::vector<std::uint64_t> sample_distinct(std::uint64_t range, std::size_t k, Rng& rng) {
    if (k > range) throw InvalidInput("cannot sample more distinct values than the range holds");
    std::vector<std::uint64_t> out;
    out.reserve(k);
    if (k == range) {
        for (std::uint64_t v = 0; v < range; ++v) out.push_back(v);
        return out;
    }
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(k * 2);
    for (std::uint64_t j = range - k; j < range; ++j) {
        const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
        const std::uint64_t pick = chosen.count(t) ? j : t;
        chosen.insert(pick);
        out.push_back(pick);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

bool connects(std::size_t p, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& local_pairs) {
    detail::UnionFind uf(p);
    std::size_t merges = 0;
    for (const auto& [a, b] : local_pairs) {
        if (uf.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b))) ++merges;
    }
    return merges + 1 == p;
}

}  // namespace

std::vector<std::pair<NodeId, NodeId>> sample_cluster_edges(std::span<const NodeId> cluster,
                                                            const EdgeBudget& budget, Rng& rng,
                                                            bool require_connected) {
    const auto p = static_cast<Eigen::Index>(cluster.size());
    if (p < 2) throw InvalidInput("cluster must hold at least two nodes");
    const std::size_t total = pair_count(p);
    std::size_t k = 0;
    if (const auto* c = std::get_if<PairCount>(&budget)) {
        k = c->value;
        if (k > total) {
            warn("requested " + std::to_string(k) + " pairs but a cluster of " + std::to_string(p) +
                 " has only " + std::to_string(total) + "; clamping");
            k = total;
        }
    } else {
        const double f = std::get<PairFraction>(budget).value;
        k = static_cast<std::size_t>(std::llround(f * static_cast<double>(total)));
    }
    k = std::clamp<std::size_t>(k, 1, total);

    std::vector<std::pair<Eigen::Index, Eigen::Index>> local;
    constexpr int max_attempts = 64;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        local.clear();
        for (std::uint64_t idx : sample_distinct(total, k, rng)) local.push_back(decode_pair_index(idx, p));
        if (!require_connected || connects(static_cast<std::size_t>(p), local)) break;
        if (attempt + 1 == max_attempts)
            warn("could not draw a connected pair set; the cluster will be split into components");
    }

    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(local.size());
    for (const auto& [a, b] : local) {
        NodeId u = cluster[static_cast<std::size_t>(a)];
        NodeId v = cluster[static_cast<std::size_t>(b)];
        if (u > v) std::swap(u, v);
        out.emplace_back(u, v);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Observation> assign_weights(std::span<const Observation> measured, WeightScheme scheme,
                                        double eps_w) {
    std::vector<Observation> out(measured.begin(), measured.end());
    std::size_t raised = 0;
    for (auto& o : out) {
        if (!(o.delta > 0.0) || !std::isfinite(o.delta)) {
            o.weight = 0.0;
            continue;
        }
        switch (scheme) {
            case WeightScheme::unity: o.weight = 1.0; break;
            case WeightScheme::sammon: o.weight = std::min(1.0, 1.0 / o.delta); break;
            case WeightScheme::provided:
                if (!(o.weight >= 0.0) || !std::isfinite(o.weight))
                    throw InvalidInput("provided weight must be finite and nonnegative");
                break;
        }
        if (o.weight > 0.0 && o.weight < eps_w) {
            o.weight = eps_w;
            ++raised;
        }
    }
    if (raised > 0)
        warn(std::to_string(raised) + " weight(s) below eps_w raised to " + std::to_string(eps_w));
    return out;
}

ClusterSizing calibrate_p_q(Eigen::Index node_count, double measurements_per_slot,
                            bool sparse_mode, double beta) {
    if (node_count < 2) throw InvalidInput("calibration needs N >= 2");
    const double n = static_cast<double>(node_count);
    if (!(measurements_per_slot >= n))
        throw InvalidInput("target measurements per slot must be at least N");
    const double ratio = measurements_per_slot / n;
    long long p = 0;
    long long q = 0;
    if (sparse_mode) {
        if (!(beta > 0.0)) throw InvalidInput("beta must be positive");
        p = std::llround(std::pow(ratio, beta));
        q = std::llround(std::pow(ratio, beta + 1.0));
    } else {
        p = std::llround(ratio);
        q = static_cast<long long>(pair_count(static_cast<Eigen::Index>(std::max(p, 0LL))));
    }
    ClusterSizing s;
    s.p = static_cast<Eigen::Index>(std::clamp<long long>(p, 2, node_count));
    const auto max_q = static_cast<long long>(pair_count(s.p));
    if (!sparse_mode && s.p != p) q = max_q;
    s.q = static_cast<std::size_t>(std::clamp<long long>(q, 1, max_q));
    if (s.p != p || static_cast<long long>(s.q) != q) {
        warn("calibration target infeasible; using p = " + std::to_string(s.p) +
             ", q = " + std::to_string(s.q));
    }
    return s;
}

}  // namespace smds
