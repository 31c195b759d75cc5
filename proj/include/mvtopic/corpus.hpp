// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mvtopic/error.hpp"

namespace mvt {

enum class Modality { text, audio, visual, fused, word };

inline std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::audio: return "audio";
        case Modality::visual: return "visual";
        case Modality::fused: return "fused";
        case Modality::word: return "word";
    }
    return "unknown";
}

inline Modality parse_modality(std::string_view s) {
    if (s == "text") return Modality::text;
    if (s == "audio") return Modality::audio;
    if (s == "visual") return Modality::visual;
    if (s == "fused") return Modality::fused;
    if (s == "word") return Modality::word;
    throw ParseError("unknown modality '" + std::string(s) + "'");
}

/// One ASR-aligned unit of a video.
struct Segment {
    std::string video_id;
    std::size_t index = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::string text;

    double duration() const { return t_end - t_start; }
    double midpoint() const { return 0.5 * (t_start + t_end); }
};

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EmbeddingMatrix {
    Modality modality = Modality::text;
    std::string source = "synthetic";
    RowMatrixF data;
    /// Header fields beyond the standard six, preserved across load/write.
    nlohmann::ordered_json extra_header = nlohmann::ordered_json::object();

    std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t dims() const { return static_cast<std::size_t>(data.cols()); }
    Eigen::VectorXd row(std::size_t i) const { return data.row(static_cast<Eigen::Index>(i)).cast<double>().transpose(); }
};

namespace detail {

inline void check_finite(const RowMatrixF& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            if (!std::isfinite(m(r, c))) throw DataError("non-finite embedding value", static_cast<std::size_t>(r));
}

inline float load_f32le(const char* p) {
    std::uint32_t bits;
    std::memcpy(&bits, p, 4);
    if constexpr (std::endian::native == std::endian::big)
        bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void store_f32le(float v, std::string& out) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    if constexpr (std::endian::native == std::endian::big)
        bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
    char buf[4];
    std::memcpy(buf, &bits, 4);
    out.append(buf, 4);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

/// Parse a JSON-lines segment file: one {"start","end","text"} object per line.
/// Output is sorted by (start, end) with indices reassigned from 0.
inline std::vector<Segment> parse_segments(std::string_view content, const std::string& video_id,
                                           Diagnostics* diag = nullptr) {
    std::vector<Segment> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (nl == content.size()) break;
            continue;
        }
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed segment record: ") + e.what(), line_no);
        }
        if (!rec.is_object() || !rec.contains("start") || !rec.contains("end") || !rec["start"].is_number() ||
            !rec["end"].is_number())
            throw ParseError("segment record needs numeric 'start' and 'end'", line_no);
        Segment s;
        s.video_id = video_id;
        s.t_start = rec["start"].get<double>();
        s.t_end = rec["end"].get<double>();
        if (rec.contains("text")) {
            if (!rec["text"].is_string()) throw ParseError("segment 'text' must be a string", line_no);
            s.text = rec["text"].get<std::string>();
        }
        if (!std::isfinite(s.t_start) || !std::isfinite(s.t_end) || s.t_start < 0.0)
            throw ValidationError("segment at line " + std::to_string(line_no) + " has an invalid start time");
        if (s.t_end <= s.t_start)
            throw ValidationError("segment at line " + std::to_string(line_no) + " has end <= start (" +
                                  std::to_string(s.t_start) + ", " + std::to_string(s.t_end) + ")");
        out.push_back(std::move(s));
        if (nl == content.size()) break;
    }
    std::stable_sort(out.begin(), out.end(), [](const Segment& a, const Segment& b) {
        return a.t_start != b.t_start ? a.t_start < b.t_start : a.t_end < b.t_end;
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].index = i;
        if (i > 0 && out[i].t_start < out[i - 1].t_end)
            detail::warn(diag, "video " + video_id + ": segments " + std::to_string(i - 1) + " and " +
                                   std::to_string(i) + " overlap");
    }
    return out;
}

inline std::vector<Segment> load_segments(const std::filesystem::path& path, const std::string& video_id = {},
                                          Diagnostics* diag = nullptr) {
    return parse_segments(detail::read_file(path), video_id.empty() ? path.stem().string() : video_id, diag);
}

inline std::string format_segments(const std::vector<Segment>& segments) {
    std::string out;
    for (const auto& s : segments) {
        nlohmann::ordered_json rec;
        rec["start"] = s.t_start;
        rec["end"] = s.t_end;
        rec["text"] = s.text;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

// ---- EMB1 -------------------------------------------------------------------

/// Serialize to EMB1: compact JSON header line, then rows*dims little-endian f32.
inline std::string encode_emb1(const EmbeddingMatrix& m) {
    nlohmann::ordered_json header;
    header["magic"] = "EMB1";
    header["count"] = m.rows();
    header["dims"] = m.dims();
    header["dtype"] = "f32le";
    header["modality"] = std::string(to_string(m.modality));
    header["source"] = m.source;
    for (const auto& [k, v] : m.extra_header.items()) header[k] = v;
    std::string out = header.dump();
    out += '\n';
    out.reserve(out.size() + m.rows() * m.dims() * 4);
    for (Eigen::Index r = 0; r < m.data.rows(); ++r)
        for (Eigen::Index c = 0; c < m.data.cols(); ++c) detail::store_f32le(m.data(r, c), out);
    return out;
}

inline EmbeddingMatrix decode_emb1(std::string_view bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) throw ParseError("EMB1 header is not newline-terminated", 1);
    nlohmann::ordered_json header;
    try {
        header = nlohmann::ordered_json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("EMB1 header is not valid JSON: ") + e.what(), 1);
    }
    if (!header.is_object() || header.value("magic", "") != "EMB1") throw ParseError("missing EMB1 magic", 1);
    if (!header.contains("count") || !header.contains("dims") || !header["count"].is_number_unsigned() ||
        !header["dims"].is_number_unsigned())
        throw ParseError("EMB1 header needs unsigned 'count' and 'dims'", 1);
    if (header.value("dtype", "f32le") != "f32le") throw ParseError("unsupported EMB1 dtype", 1);
    const auto count = header["count"].get<std::size_t>();
    const auto dims = header["dims"].get<std::size_t>();
    if (dims < 1) throw ParseError("EMB1 dims must be >= 1", 1);
    const auto payload = bytes.substr(nl + 1);
    if (payload.size() != count * dims * 4)
        throw ParseError("EMB1 payload has " + std::to_string(payload.size()) + " bytes, expected " +
                         std::to_string(count * dims * 4));

    EmbeddingMatrix m;
    m.modality = parse_modality(header.value("modality", "text"));
    m.source = header.value("source", "");
    m.data.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dims));
    const char* p = payload.data();
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t c = 0; c < dims; ++c, p += 4)
            m.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = detail::load_f32le(p);
    for (const auto& [k, v] : header.items()) {
        if (k == "magic" || k == "count" || k == "dims" || k == "dtype" || k == "modality" || k == "source") continue;
        m.extra_header[k] = v;
    }
    detail::check_finite(m.data);
    return m;
}

/// CSV fallback: one row per segment, comma-separated decimals.
inline EmbeddingMatrix decode_csv(std::string_view content, Modality modality) {
    std::vector<std::vector<float>> rows;
    std::size_t line_no = 0;
    std::istringstream in{std::string(content)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<float> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stof(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::out_of_range&) {
                row.push_back(std::numeric_limits<float>::infinity());
            } catch (const std::exception&) {
                throw ParseError("bad CSV cell '" + cell + "'", line_no);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("CSV row has " + std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(rows.front().size()),
                             line_no);
        rows.push_back(std::move(row));
    }
    EmbeddingMatrix m;
    m.modality = modality;
    m.source = "csv";
    const auto d = rows.empty() ? 0 : rows.front().size();
    m.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < d; ++c) m.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    detail::check_finite(m.data);
    return m;
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_rows,
                                       Modality csv_modality = Modality::text) {
    const auto bytes = detail::read_file(path);
    const auto first = bytes.find_first_not_of(" \t\r\n");
    EmbeddingMatrix m = (first != std::string::npos && bytes[first] == '{') ? decode_emb1(bytes)
                                                                             : decode_csv(bytes, csv_modality);
    if (expected_rows && m.rows() != *expected_rows) throw AlignmentError(*expected_rows, m.rows(), path.string());
    return m;
}

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
    detail::write_file(path, encode_emb1(m));
}

// ---- corpus ------------------------------------------------------------------

/// Segments of one video plus row-aligned matrices keyed by modality.
class VideoCorpus {
public:
    VideoCorpus() = default;
    VideoCorpus(std::string video_id, std::vector<Segment> segments)
        : video_id_(std::move(video_id)), segments_(std::move(segments)) {}

    const std::string& video_id() const { return video_id_; }
    const std::vector<Segment>& segments() const { return segments_; }
    std::size_t size() const { return segments_.size(); }

    /// Replaces any matrix already attached under the same modality.
    void attach(EmbeddingMatrix m) {
        if (m.modality != Modality::word && m.rows() != segments_.size())
            throw AlignmentError(segments_.size(), m.rows(), std::string("attach ") + std::string(to_string(m.modality)));
        const auto key = m.modality;
        matrices_.insert_or_assign(key, std::move(m));
    }

    bool has(Modality m) const { return matrices_.count(m) != 0; }

    const EmbeddingMatrix& matrix(Modality m) const {
        auto it = matrices_.find(m);
        if (it == matrices_.end())
            throw ConfigError("modality '" + std::string(to_string(m)) + "' is not attached to video " + video_id_);
        return it->second;
    }

    const std::map<Modality, EmbeddingMatrix>& matrices() const { return matrices_; }

private:
    std::string video_id_;
    std::vector<Segment> segments_;
    std::map<Modality, EmbeddingMatrix> matrices_;
};

inline VideoCorpus attach(VideoCorpus corpus, EmbeddingMatrix m) {
    corpus.attach(std::move(m));
    return corpus;
}

}  // namespace mvt
