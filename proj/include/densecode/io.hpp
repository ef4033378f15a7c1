#pragma once

// Message-set files: JSON with every matrix entry stored as a [re, im] pair.
// Doubles are written in shortest round-trip form, so save -> load is exact.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "densecode/qmat.hpp"

#ifndef DENSECODE_VERSION
#define DENSECODE_VERSION "0.1.0"
#endif

namespace densecode {

inline constexpr int kFormatVersion = 1;

struct FileMetadata {
    std::uint64_t seed = 0;
    double cost = 0.0;
    std::string tool_version = DENSECODE_VERSION;
    std::string timestamp;  ///< left empty unless the caller sets one, so output stays reproducible
};

struct MessageSetFile {
    MessageSet set;
    FileMetadata metadata;
};

namespace detail {

inline nlohmann::json matrix_to_json(const ComplexMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j, int d, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) throw Error(where + ": expected " + std::to_string(d) + " rows");
    ComplexMatrix m(d, d);
    for (int r = 0; r < d; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<int>(row.size()) != d)
            throw Error(where + ": row " + std::to_string(r) + " must have " + std::to_string(d) + " entries");
        for (int c = 0; c < d; ++c) {
            const auto& e = row[c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                throw Error(where + ": entry (" + std::to_string(r) + "," + std::to_string(c) +
                            ") must be a [re, im] pair");
            m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    }
    return m;
}

}  // namespace detail

inline nlohmann::json to_json(const MessageSet& set, const FileMetadata& meta) {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["dim"] = set.dim();
    j["schmidt"] = set.spectrum().lambdas();
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : set.messages()) {
        nlohmann::json kraus = nlohmann::json::array();
        for (const auto& k : m.kraus()) kraus.push_back(detail::matrix_to_json(k));
        msgs.push_back({{"kraus", std::move(kraus)}});
    }
    j["messages"] = std::move(msgs);
    j["metadata"] = {{"seed", meta.seed},
                     {"cost", meta.cost},
                     {"tool_version", meta.tool_version},
                     {"timestamp", meta.timestamp}};
    return j;
}

inline MessageSetFile from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("message-set file must be a JSON object");
    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        throw Error("message-set file has no integer format_version");
    const int version = j["format_version"].get<int>();
    if (version != kFormatVersion)
        throw Error("unsupported format_version " + std::to_string(version) + " (this build reads " +
                    std::to_string(kFormatVersion) + ")");
    for (const char* key : {"dim", "schmidt", "messages"})
        if (!j.contains(key)) throw Error(std::string("message-set file is missing '") + key + "'");
    const int d = j["dim"].get<int>();
    const auto lambdas = j["schmidt"].get<std::vector<double>>();
    if (static_cast<int>(lambdas.size()) != d) throw Error("schmidt has " + std::to_string(lambdas.size()) + " entries, dim is " + std::to_string(d));
    SchmidtSpectrum spec(lambdas);
    std::vector<Message> ms;
    const auto& msgs = j["messages"];
    if (!msgs.is_array()) throw Error("'messages' must be an array");
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        const std::string where = "message " + std::to_string(i);
        if (!msgs[i].contains("kraus") || !msgs[i]["kraus"].is_array() || msgs[i]["kraus"].empty())
            throw Error(where + ": needs a nonempty 'kraus' list");
        std::vector<ComplexMatrix> ks;
        for (std::size_t k = 0; k < msgs[i]["kraus"].size(); ++k)
            ks.push_back(detail::matrix_from_json(msgs[i]["kraus"][k], d, where + " kraus " + std::to_string(k)));
        ms.emplace_back(std::move(ks));
    }
    MessageSetFile f{MessageSet(std::move(spec), std::move(ms)), {}};
    if (j.contains("metadata")) {
        const auto& m = j["metadata"];
        f.metadata.seed = m.value("seed", std::uint64_t{0});
        f.metadata.cost = m.value("cost", 0.0);
        f.metadata.tool_version = m.value("tool_version", std::string());
        f.metadata.timestamp = m.value("timestamp", std::string());
    }
    return f;
}

inline std::string dump_message_set(const MessageSet& set, const FileMetadata& meta) {
    return to_json(set, meta).dump(1) + "\n";
}

inline MessageSetFile parse_message_set(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed JSON: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed message-set file: ") + e.what());
    }
}

inline void save_message_set(const std::string& path, const MessageSet& set, const FileMetadata& meta) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    os << dump_message_set(set, meta);
    if (!os) throw Error("failed writing '" + path + "'");
}

inline MessageSetFile load_message_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_message_set(ss.str());
}

}  // namespace densecode
