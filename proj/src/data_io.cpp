#include "smds/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "smds/diagnostics.hpp"

namespace smds {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_index(const std::string& text, NodeId& out) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end || v < 0) return false;
    out = static_cast<NodeId>(v);
    return true;
}

bool parse_real(const std::string& text, double& out) {
    const auto* begin = text.data();
    const auto* end = begin + text.size();
    if (begin != end && *begin == '+') ++begin;
    const auto r = std::from_chars(begin, end, out);
    return r.ec == std::errc() && r.ptr == end;
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& what) {
    throw InvalidInput("line " + std::to_string(line_no) + ": " + what);
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    if (!parse_real(trim(text), v)) throw InvalidInput("not a number: '" + text + "'");
    return v;
}

ObservationBatch parse_edge_list(std::istream& in) {
    ObservationBatch batch;
    std::map<std::pair<NodeId, NodeId>, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto fields = split(body, '\t');
        if (fields.size() != 3 && fields.size() != 4)
            line_error(line_no, "expected 3 or 4 tab-separated fields, found " +
                                    std::to_string(fields.size()));
        Observation o;
        if (!parse_index(fields[0], o.m) || !parse_index(fields[1], o.n))
            line_error(line_no, "node ids must be nonnegative integers");
        if (!parse_real(fields[2], o.delta) || !std::isfinite(o.delta))
            line_error(line_no, "invalid dissimilarity '" + fields[2] + "'");
        if (fields.size() == 4 && (!parse_real(fields[3], o.weight) || !std::isfinite(o.weight)))
            line_error(line_no, "invalid weight '" + fields[3] + "'");
        if (o.m == o.n) line_error(line_no, "self-loop on node " + std::to_string(o.m));
        if (o.weight < 0.0) line_error(line_no, "negative weight");
        if (o.weight > 0.0 && !(o.delta > 0.0))
            line_error(line_no, "dissimilarity must be positive when the weight is positive");
        const auto key = std::minmax(o.m, o.n);
        if (auto it = seen.find(key); it != seen.end()) {
            warn("line " + std::to_string(line_no) + ": duplicate pair (" + std::to_string(key.first) +
                 ", " + std::to_string(key.second) + "), keeping the last value");
            batch.entries[it->second] = o;
        } else {
            seen.emplace(key, batch.entries.size());
            batch.entries.push_back(o);
        }
    }
    return batch;
}

ObservationBatch load_edge_list(const std::string& path) {
    auto in = open_in(path);
    return parse_edge_list(in);
}

void write_edge_list(const ObservationBatch& batch, std::ostream& out) {
    for (const auto& o : batch.entries) {
        out << o.m << '\t' << o.n << '\t' << format_double(o.delta) << '\t'
            << format_double(o.weight) << '\n';
    }
    if (!out) throw IoError("edge list write failed");
}

Eigen::Index infer_node_count(const ObservationBatch& batch) {
    NodeId hi = -1;
    for (const auto& o : batch.entries) hi = std::max({hi, o.m, o.n});
    return hi + 1;
}

double tanimoto_dissimilarity(const Fingerprint& h, const Fingerprint& g) {
    if (h.size() != g.size())
        throw InvalidInput("fingerprint lengths differ: " + std::to_string(h.size()) + " vs " +
                           std::to_string(g.size()));
    std::size_t both = 0;
    std::size_t any = 0;
    for (std::size_t k = 0; k < h.words().size(); ++k) {
        both += static_cast<std::size_t>(std::popcount(h.words()[k] & g.words()[k]));
        any += static_cast<std::size_t>(std::popcount(h.words()[k] | g.words()[k]));
    }
    if (any == 0) throw InvalidInput("Tanimoto score undefined for two all-zero fingerprints");
    return 1.0 - static_cast<double>(both) / static_cast<double>(any);
}

double cosine_dissimilarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw InvalidInput("vector lengths differ");
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw InvalidInput("cosine dissimilarity of a zero vector");
    return std::clamp(1.0 - u.dot(v) / (nu * nv), 0.0, 2.0);
}

std::vector<FingerprintRecord> parse_fingerprints(std::istream& in) {
    std::vector<FingerprintRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto fields = split(body, '\t');
        if (fields.size() != 2) line_error(line_no, "expected id<TAB>hex");
        try {
            out.push_back({fields[0], Fingerprint::from_hex(trim(fields[1]))});
        } catch (const InvalidInput& e) {
            line_error(line_no, e.what());
        }
        if (out.back().bits.size() != out.front().bits.size())
            line_error(line_no, "fingerprint length differs from the first record");
    }
    return out;
}

Eigen::MatrixXd parse_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::replace(body.begin(), body.end(), ',', ' ');
        std::istringstream fields(body);
        std::vector<double> row;
        std::string tok;
        while (fields >> tok) {
            double v = 0.0;
            if (!parse_real(tok, v)) line_error(line_no, "invalid number '" + tok + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            line_error(line_no, "row length differs from the first row");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return M;
}

void write_embedding(const Embedding& X, std::ostream& out, const std::vector<std::string>* ids) {
    if (ids && static_cast<Eigen::Index>(ids->size()) != X.rows())
        throw InvalidInput("label count does not match the embedding rows");
    out << "id";
    for (Eigen::Index c = 0; c < X.cols(); ++c) out << ",c" << c;
    out << '\n';
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        if (ids) out << (*ids)[static_cast<std::size_t>(r)];
        else out << r;
        for (Eigen::Index c = 0; c < X.cols(); ++c) out << ',' << format_double(X(r, c));
        out << '\n';
    }
    if (!out) throw IoError("embedding write failed");
}

void save_embedding(const Embedding& X, const std::string& path, const std::vector<std::string>* ids) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_embedding(X, out, ids);
}

LabeledEmbedding read_embedding(std::istream& in) {
    LabeledEmbedding result;
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("embedding file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    if (header.empty() || header.front() != "id") throw InvalidInput("embedding header must start with 'id'");
    const auto cols = static_cast<Eigen::Index>(header.size() - 1);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (static_cast<Eigen::Index>(fields.size()) != cols + 1)
            line_error(line_no, "expected " + std::to_string(cols + 1) + " fields");
        result.ids.push_back(fields[0]);
        std::vector<double> row;
        for (std::size_t k = 1; k < fields.size(); ++k) {
            double v = 0.0;
            if (!parse_real(fields[k], v)) line_error(line_no, "invalid number '" + fields[k] + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    result.X.resize(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            result.X(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    return result;
}

LabeledEmbedding load_embedding(const std::string& path) {
    auto in = open_in(path);
    return read_embedding(in);
}

void write_trace(std::ostream& out, const std::string& header_json,
                 std::span<const TraceRecord> records, const std::string& status) {
    nlohmann::ordered_json header;
    header["config"] = nlohmann::ordered_json::parse(header_json.empty() ? "{}" : header_json);
    if (!status.empty()) header["status"] = status;
    out << header.dump() << '\n';
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["t"] = r.t;
        j["stress"] = r.stress;
        j["stress_norm"] = r.stress_norm;
        j["mu"] = r.mu;
        j["wall_ms"] = r.wall_ms;
        j["pairs"] = r.pairs;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("trace write failed");
}

ParsedTrace read_trace(std::istream& in) {
    ParsedTrace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            line_error(line_no, e.what());
        }
        if (j.contains("config")) {
            trace.header_json = j["config"].dump();
            trace.status = j.value("status", std::string{});
            continue;
        }
        try {
            TraceRecord r;
            r.t = j.at("t").get<std::int64_t>();
            r.stress = j.at("stress").is_null() ? NAN : j.at("stress").get<double>();
            r.stress_norm = j.at("stress_norm").is_null() ? NAN : j.at("stress_norm").get<double>();
            r.mu = j.at("mu").get<double>();
            r.wall_ms = j.value("wall_ms", 0.0);
            r.pairs = j.value("pairs", std::size_t{0});
            trace.records.push_back(r);
        } catch (const nlohmann::json::exception& e) {
            line_error(line_no, std::string("bad trace record: ") + e.what());
        }
    }
    return trace;
}

}  // namespace smds
