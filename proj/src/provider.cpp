#include "smds/provider.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "smds/data_io.hpp"

namespace smds {

namespace {

void check_pair(const DissimilarityProvider& p, NodeId m, NodeId n) {
    const Eigen::Index N = p.node_count();
    if (m < 0 || n < 0 || m >= N || n >= N)
        throw InvalidInput("pair (" + std::to_string(m) + ", " + std::to_string(n) +
                           ") outside [0, " + std::to_string(N) + ")");
    if (m == n) throw InvalidInput("lookup of a self pair");
}

std::optional<Measurement> positive(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) return std::nullopt;
    return Measurement{delta, 1.0};
}

}  // namespace

std::optional<Measurement> DissimilarityProvider::measure(NodeId m, NodeId n) const {
    check_pair(*this, m, n);
    lookups_.fetch_add(1, std::memory_order_relaxed);
    return m < n ? fetch(m, n) : fetch(n, m);
}

std::optional<double> DissimilarityProvider::lookup(NodeId m, NodeId n) const {
    const auto r = measure(m, n);
    if (!r) return std::nullopt;
    return r->delta;
}

EdgeListProvider::EdgeListProvider(const ObservationBatch& batch, Eigen::Index node_count)
    : n_(node_count) {
    table_.reserve(batch.entries.size());
    for (const auto& o : batch.entries) {
        if (o.m < 0 || o.n < 0 || o.m >= n_ || o.n >= n_ || o.m == o.n)
            throw InvalidInput("edge (" + std::to_string(o.m) + ", " + std::to_string(o.n) +
                               ") invalid for N = " + std::to_string(n_));
        const NodeId a = std::min(o.m, o.n);
        const NodeId b = std::max(o.m, o.n);
        table_[static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(n_) +
               static_cast<std::uint64_t>(b)] = Measurement{o.delta, o.weight};
    }
}

std::optional<Measurement> EdgeListProvider::fetch(NodeId m, NodeId n) const {
    const auto it = table_.find(static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(n_) +
                                static_cast<std::uint64_t>(n));
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

EuclideanPointProvider::EuclideanPointProvider(Eigen::MatrixXd points) : points_(std::move(points)) {}

std::optional<Measurement> EuclideanPointProvider::fetch(NodeId m, NodeId n) const {
    return positive((points_.row(m) - points_.row(n)).norm());
}

Fingerprint::Fingerprint(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

Fingerprint Fingerprint::from_hex(const std::string& hex) {
    Fingerprint f(hex.size() * 4);
    for (std::size_t k = 0; k < hex.size(); ++k) {
        const char c = hex[hex.size() - 1 - k];
        int v = 0;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw InvalidInput(std::string("invalid hex digit '") + c + "'");
        for (int b = 0; b < 4; ++b)
            if (v & (1 << b)) f.set(k * 4 + static_cast<std::size_t>(b));
    }
    return f;
}

Fingerprint Fingerprint::from_bits(const std::string& bits) {
    Fingerprint f(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        const char c = bits[bits.size() - 1 - k];
        if (c == '1') f.set(k);
        else if (c != '0') throw InvalidInput(std::string("invalid bit '") + c + "'");
    }
    return f;
}

bool Fingerprint::test(std::size_t i) const {
    if (i >= bits_) throw InvalidInput("fingerprint bit out of range");
    return (words_[i / 64] >> (i % 64)) & 1U;
}

void Fingerprint::set(std::size_t i, bool value) {
    if (i >= bits_) throw InvalidInput("fingerprint bit out of range");
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value) words_[i / 64] |= mask;
    else words_[i / 64] &= ~mask;
}

std::size_t Fingerprint::popcount() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

FingerprintProvider::FingerprintProvider(std::vector<Fingerprint> fingerprints)
    : fingerprints_(std::move(fingerprints)) {
    for (const auto& f : fingerprints_)
        if (f.size() != fingerprints_.front().size())
            throw InvalidInput("fingerprints must share one bit length");
}

std::optional<Measurement> FingerprintProvider::fetch(NodeId m, NodeId n) const {
    const auto& h = fingerprints_[static_cast<std::size_t>(m)];
    const auto& g = fingerprints_[static_cast<std::size_t>(n)];
    if (h.popcount() == 0 && g.popcount() == 0) return std::nullopt;
    return positive(tanimoto_dissimilarity(h, g));
}

CosineProvider::CosineProvider(Eigen::MatrixXd features) : features_(std::move(features)) {
    for (Eigen::Index r = 0; r < features_.rows(); ++r)
        if (features_.row(r).squaredNorm() == 0.0)
            throw InvalidInput("feature row " + std::to_string(r) + " is the zero vector");
}

std::optional<Measurement> CosineProvider::fetch(NodeId m, NodeId n) const {
    return positive(cosine_dissimilarity(features_.row(m).transpose(), features_.row(n).transpose()));
}

struct DenseMatrixProvider::FileHandle {
    std::ifstream stream;
};

DenseMatrixProvider::DenseMatrixProvider(const std::string& path, Eigen::Index node_count,
                                         std::size_t memory_budget_bytes, Eigen::Index block_rows)
    : path_(path), n_(node_count), file_(std::make_unique<FileHandle>()) {
    if (n_ < 1) throw InvalidInput("dense matrix needs N >= 1");
    file_->stream.open(path, std::ios::binary);
    if (!file_->stream) throw IoError("cannot open " + path);
    file_->stream.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::uint64_t>(file_->stream.tellg());
    const auto expected = static_cast<std::uint64_t>(n_) * static_cast<std::uint64_t>(n_) * 8U;
    if (bytes != expected)
        throw InvalidInput(path + ": expected " + std::to_string(expected) + " bytes for N = " +
                           std::to_string(n_) + ", found " + std::to_string(bytes));

    const std::size_t row_bytes = static_cast<std::size_t>(n_) * sizeof(double);
    if (memory_budget_bytes < row_bytes)
        throw InvalidInput("memory budget smaller than one matrix row");
    if (block_rows <= 0) {
        // Aim for eight blocks in the budget.
        block_rows = static_cast<Eigen::Index>(std::max<std::size_t>(1, memory_budget_bytes / (8 * row_bytes)));
    }
    block_rows_ = std::min(block_rows, n_);
    max_blocks_ = std::max<std::size_t>(
        1, memory_budget_bytes / (static_cast<std::size_t>(block_rows_) * row_bytes));
}

DenseMatrixProvider::~DenseMatrixProvider() = default;

std::size_t DenseMatrixProvider::cached_blocks() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return lru_.size();
}

const std::vector<double>& DenseMatrixProvider::block(Eigen::Index index) const {
    if (auto it = index_.find(index); it != index_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        return lru_.front().values;
    }
    if (lru_.size() >= max_blocks_) {
        index_.erase(lru_.back().index);
        lru_.pop_back();
    }
    const Eigen::Index first = index * block_rows_;
    const Eigen::Index rows = std::min(block_rows_, n_ - first);
    Block b{index, std::vector<double>(static_cast<std::size_t>(rows * n_))};
    file_->stream.clear();
    file_->stream.seekg(static_cast<std::streamoff>(first * n_ * 8));
    file_->stream.read(reinterpret_cast<char*>(b.values.data()),
                       static_cast<std::streamsize>(b.values.size() * sizeof(double)));
    if (!file_->stream) throw IoError("short read from " + path_);
    block_reads_.fetch_add(1);
    lru_.push_front(std::move(b));
    index_[index] = lru_.begin();
    return lru_.front().values;
}

std::optional<Measurement> DenseMatrixProvider::fetch(NodeId m, NodeId n) const {
    double value = 0.0;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto& values = block(m / block_rows_);
        value = values[static_cast<std::size_t>((m % block_rows_) * n_ + n)];
    }
    return positive(value);
}

void write_dense_matrix(const std::string& path, const Eigen::MatrixXd& matrix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
            const double v = matrix(r, c);
            out.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace smds
