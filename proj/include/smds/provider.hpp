#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "smds/types.hpp"

namespace smds {

// Dissimilarity with an optional caller-provided weight.
struct Measurement {
    double delta = 0.0;
    double weight = 1.0;
};

// Source of pairwise dissimilarities. Lookups are symmetric, lazily
// evaluated and safe to call concurrently.
class DissimilarityProvider {
public:
    virtual ~DissimilarityProvider() = default;

    virtual Eigen::Index node_count() const = 0;

    // delta_mn and its weight, or nothing when the pair is unknown.
    std::optional<Measurement> measure(NodeId m, NodeId n) const;
    std::optional<double> lookup(NodeId m, NodeId n) const;

    std::uint64_t lookup_count() const { return lookups_.load(std::memory_order_relaxed); }
    void reset_lookup_count() { lookups_.store(0, std::memory_order_relaxed); }

protected:
    // Called with m < n, both in range.
    virtual std::optional<Measurement> fetch(NodeId m, NodeId n) const = 0;

private:
    mutable std::atomic<std::uint64_t> lookups_{0};
};

// Explicit list of measured pairs.
class EdgeListProvider : public DissimilarityProvider {
public:
    EdgeListProvider(const ObservationBatch& batch, Eigen::Index node_count);
    Eigen::Index node_count() const override { return n_; }

protected:
    std::optional<Measurement> fetch(NodeId m, NodeId n) const override;

private:
    Eigen::Index n_;
    std::unordered_map<std::uint64_t, Measurement> table_;
};

// Euclidean distances between rows of a point matrix, computed on demand.
class EuclideanPointProvider : public DissimilarityProvider {
public:
    explicit EuclideanPointProvider(Eigen::MatrixXd points);
    Eigen::Index node_count() const override { return points_.rows(); }
    const Eigen::MatrixXd& points() const { return points_; }

protected:
    std::optional<Measurement> fetch(NodeId m, NodeId n) const override;

private:
    Eigen::MatrixXd points_;
};

// Arbitrary bit string packed into 64-bit words, lowest bit first.
class Fingerprint {
public:
    Fingerprint() = default;
    explicit Fingerprint(std::size_t bits);

    // Hex digits, most significant first: "c" is the 4-bit string 1100.
    static Fingerprint from_hex(const std::string& hex);
    // '0'/'1' characters, most significant first.
    static Fingerprint from_bits(const std::string& bits);

    std::size_t size() const { return bits_; }
    bool test(std::size_t i) const;
    void set(std::size_t i, bool value = true);
    std::size_t popcount() const;
    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

// Tanimoto dissimilarity between binary fingerprints.
class FingerprintProvider : public DissimilarityProvider {
public:
    explicit FingerprintProvider(std::vector<Fingerprint> fingerprints);
    Eigen::Index node_count() const override {
        return static_cast<Eigen::Index>(fingerprints_.size());
    }

protected:
    std::optional<Measurement> fetch(NodeId m, NodeId n) const override;

private:
    std::vector<Fingerprint> fingerprints_;
};

// Cosine dissimilarity between feature rows.
class CosineProvider : public DissimilarityProvider {
public:
    explicit CosineProvider(Eigen::MatrixXd features);
    Eigen::Index node_count() const override { return features_.rows(); }

protected:
    std::optional<Measurement> fetch(NodeId m, NodeId n) const override;

private:
    Eigen::MatrixXd features_;
};

// Wraps a callable, mostly for tests and synthetic sources.
class FunctionProvider : public DissimilarityProvider {
public:
    using Fn = std::function<std::optional<Measurement>(NodeId, NodeId)>;
    FunctionProvider(Eigen::Index node_count, Fn fn) : n_(node_count), fn_(std::move(fn)) {}
    Eigen::Index node_count() const override { return n_; }

protected:
    std::optional<Measurement> fetch(NodeId m, NodeId n) const override { return fn_(m, n); }

private:
    Eigen::Index n_;
    Fn fn_;
};

// Row-major N x N float64 matrix on disk, read in row blocks through a
// bounded LRU cache. The full matrix is never held in memory unless it fits
// the budget.
class DenseMatrixProvider : public DissimilarityProvider {
public:
    DenseMatrixProvider(const std::string& path, Eigen::Index node_count,
                        std::size_t memory_budget_bytes = std::size_t{64} << 20,
                        Eigen::Index block_rows = 0);
    ~DenseMatrixProvider() override;

    Eigen::Index node_count() const override { return n_; }
    Eigen::Index block_rows() const { return block_rows_; }
    std::size_t max_cached_blocks() const { return max_blocks_; }
    std::size_t cached_blocks() const;
    std::uint64_t block_reads() const { return block_reads_.load(); }

protected:
    std::optional<Measurement> fetch(NodeId m, NodeId n) const override;

private:
    struct Block {
        Eigen::Index index;
        std::vector<double> values;
    };

    const std::vector<double>& block(Eigen::Index index) const;

    std::string path_;
    Eigen::Index n_;
    Eigen::Index block_rows_;
    std::size_t max_blocks_;
    mutable std::mutex mutex_;
    mutable std::list<Block> lru_;
    mutable std::unordered_map<Eigen::Index, std::list<Block>::iterator> index_;
    mutable std::atomic<std::uint64_t> block_reads_{0};
    struct FileHandle;
    std::unique_ptr<FileHandle> file_;
};

// Writes a dense matrix in the layout DenseMatrixProvider reads.
void write_dense_matrix(const std::string& path, const Eigen::MatrixXd& matrix);

}  // namespace smds
