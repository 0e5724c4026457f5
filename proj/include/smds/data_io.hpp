#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "smds/provider.hpp"
#include "smds/trace.hpp"
#include "smds/types.hpp"

namespace smds {

// Lines "m<TAB>n<TAB>delta[<TAB>weight]", 0-based ids, '#' comments.
// Duplicate unordered pairs: the last line wins, with a warning.
// Malformed lines throw InvalidInput naming the line number.
ObservationBatch parse_edge_list(std::istream& in);
ObservationBatch load_edge_list(const std::string& path);
void write_edge_list(const ObservationBatch& batch, std::ostream& out);

// Largest referenced id plus one.
Eigen::Index infer_node_count(const ObservationBatch& batch);

// 1 - |h & g| / |h | g|.
double tanimoto_dissimilarity(const Fingerprint& h, const Fingerprint& g);

// 1 - cos(u, v), clamped to [0, 2].
double cosine_dissimilarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct FingerprintRecord {
    std::string id;
    Fingerprint bits;
};

// Lines "id<TAB>hex"; '#' comments and blank lines skipped.
std::vector<FingerprintRecord> parse_fingerprints(std::istream& in);

// Whitespace- or comma-separated numeric rows.
Eigen::MatrixXd parse_matrix(std::istream& in);

// Shortest decimal string that reads back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

// CSV "id,c0,...,c{P-1}". Ids default to row indices.
void write_embedding(const Embedding& X, std::ostream& out,
                     const std::vector<std::string>* ids = nullptr);
void save_embedding(const Embedding& X, const std::string& path,
                    const std::vector<std::string>* ids = nullptr);

struct LabeledEmbedding {
    std::vector<std::string> ids;
    Embedding X;
};

LabeledEmbedding read_embedding(std::istream& in);
LabeledEmbedding load_embedding(const std::string& path);

// JSON lines: one header line holding `header_json` under "config" (and the
// run status when given), then one record per slot.
void write_trace(std::ostream& out, const std::string& header_json,
                 std::span<const TraceRecord> records, const std::string& status = "");

struct ParsedTrace {
    std::string header_json;
    std::string status;
    std::vector<TraceRecord> records;
};

ParsedTrace read_trace(std::istream& in);

}  // namespace smds
