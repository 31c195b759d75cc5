// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mvtopic/corpus.hpp"
#include "mvtopic/error.hpp"

namespace mvt::frames {

/// Interleaved 8-bit RGB image.
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;

    std::uint8_t at(std::size_t x, std::size_t y, std::size_t ch) const { return rgb[(y * width + x) * 3 + ch]; }
};

struct SelectionParams {
    std::size_t k = 5;
    std::size_t alpha = 4;
    std::size_t min_candidates = 8;
    double lambda_center = 0.7;
    double lambda_sharpness = 0.3;
    double nu = 0.3;
    double dedup_threshold = 0.96;
    /// Spans shorter than this get a single midpoint candidate.
    double frame_duration = 1.0 / 25.0;

    void validate() const {
        if (k < 1) throw ConfigError("frame selection: k must be >= 1");
        if (std::abs(lambda_center + lambda_sharpness - 1.0) > 1e-9)
            throw ConfigError("frame selection: lambda_center + lambda_sharpness must equal 1");
        if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0))
            throw ConfigError("frame selection: dedup_threshold must lie in (0, 1]");
        if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("frame selection: nu must lie in [0, 1]");
    }

    std::size_t pool_size() const { return std::max({k, alpha * k, min_candidates}); }
};

struct FrameCandidate {
    double timestamp = 0.0;
    Eigen::VectorXd feature;
    double sharpness_raw = 0.0;
    double sharpness_norm = 1.0;
};

struct SelectedFrame {
    std::size_t candidate = 0;
    std::size_t rank = 0;
    double relevance = 0.0;
    double score = 0.0;
};

/// Uniformly spaced interior timestamps, pool_size() of them.
inline std::vector<double> candidate_timestamps(double t_start, double t_end, const SelectionParams& params,
                                                Diagnostics* diag = nullptr) {
    if (!(t_end > t_start)) throw ValidationError("candidate_timestamps: t_end must exceed t_start");
    const double span = t_end - t_start;
    if (span < params.frame_duration) {
        mvt::detail::warn(diag, "segment [" + std::to_string(t_start) + ", " + std::to_string(t_end) +
                                    "] is shorter than one frame; using its midpoint only");
        return {t_start + 0.5 * span};
    }
    const auto gamma = params.pool_size();
    std::vector<double> out;
    out.reserve(gamma);
    for (std::size_t j = 1; j <= gamma; ++j)
        out.push_back(t_start + static_cast<double>(j) / static_cast<double>(gamma + 1) * span);
    return out;
}

/// 1 at the segment midpoint, falling linearly to 0 at either boundary.
inline double center_preference(double tau, double t_start, double t_end) {
    const double mid = 0.5 * (t_start + t_end);
    const double half = 0.5 * (t_end - t_start);
    return 1.0 - std::min(1.0, std::abs(tau - mid) / half);
}

struct FrameDescription {
    Eigen::VectorXd feature;
    double sharpness_raw = 0.0;
};

inline constexpr std::size_t kPatchSide = 32;
inline constexpr std::size_t kHistogramBins = 16;
inline constexpr std::size_t kFeatureDims = kPatchSide * kPatchSide + 3 * kHistogramBins;

/// Texture-color descriptor (32x32 gray patch + 16-bin per-channel histograms, L2-normalized)
/// and the variance of the 4-neighbour Laplacian of the grayscale image.
inline FrameDescription describe_frame(const Raster& image) {
    if (image.width == 0 || image.height == 0 || image.rgb.size() != image.width * image.height * 3)
        throw InputError("describe_frame: image has zero area or a short pixel buffer");
    const std::size_t w = image.width, h = image.height;

    std::vector<double> gray(w * h);
    std::array<std::vector<double>, 3> hist;
    for (auto& hc : hist) hc.assign(kHistogramBins, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double r = image.at(x, y, 0), g = image.at(x, y, 1), b = image.at(x, y, 2);
            gray[y * w + x] = 0.299 * r + 0.587 * g + 0.114 * b;
            hist[0][image.at(x, y, 0) >> 4] += 1.0;
            hist[1][image.at(x, y, 1) >> 4] += 1.0;
            hist[2][image.at(x, y, 2) >> 4] += 1.0;
        }

    FrameDescription out;
    out.feature.resize(static_cast<Eigen::Index>(kFeatureDims));
    // Area-average resize; source cells are at least one pixel wide.
    for (std::size_t oy = 0; oy < kPatchSide; ++oy) {
        std::size_t y0 = oy * h / kPatchSide, y1 = std::max(y0 + 1, (oy + 1) * h / kPatchSide);
        for (std::size_t ox = 0; ox < kPatchSide; ++ox) {
            std::size_t x0 = ox * w / kPatchSide, x1 = std::max(x0 + 1, (ox + 1) * w / kPatchSide);
            double sum = 0.0;
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x) sum += gray[y * w + x];
            out.feature(static_cast<Eigen::Index>(oy * kPatchSide + ox)) =
                sum / static_cast<double>((y1 - y0) * (x1 - x0)) / 255.0;
        }
    }
    const double pixels = static_cast<double>(w * h);
    for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t b = 0; b < kHistogramBins; ++b)
            out.feature(static_cast<Eigen::Index>(kPatchSide * kPatchSide + ch * kHistogramBins + b)) = hist[ch][b] / pixels;
    out.feature.normalize();

    // Replicated border.
    auto g = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
        x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
        y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
        return gray[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    };
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y)
        for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(w); ++x) {
            const double lap = g(x - 1, y) + g(x + 1, y) + g(x, y - 1) + g(x, y + 1) - 4.0 * g(x, y);
            ++n;
            const double delta = lap - mean;
            mean += delta / static_cast<double>(n);
            m2 += delta * (lap - mean);
        }
    out.sharpness_raw = m2 / static_cast<double>(n);
    return out;
}

/// Segment-local min-max normalization of raw sharpness; a flat pool gets 1 everywhere.
inline void normalize_sharpness(std::vector<FrameCandidate>& candidates) {
    if (candidates.empty()) return;
    auto [lo, hi] = std::minmax_element(candidates.begin(), candidates.end(),
                                        [](const auto& a, const auto& b) { return a.sharpness_raw < b.sharpness_raw; });
    const double min = lo->sharpness_raw, range = hi->sharpness_raw - lo->sharpness_raw;
    for (auto& c : candidates) c.sharpness_norm = range > 0.0 ? (c.sharpness_raw - min) / range : 1.0;
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

/// Greedy diversity-penalized selection. The first pick maximizes relevance; each later
/// pick maximizes (1-nu)*relevance - nu*max_sim to the selected set. A candidate whose
/// similarity to any selected frame exceeds dedup_threshold is dropped for good.
/// Ties go to the lower candidate index.
inline std::vector<SelectedFrame> rank_and_select(const std::vector<FrameCandidate>& candidates, double t_start,
                                                  double t_end, const SelectionParams& params) {
    const std::size_t n = candidates.size();
    std::vector<double> relevance(n);
    for (std::size_t j = 0; j < n; ++j)
        relevance[j] = params.lambda_center * center_preference(candidates[j].timestamp, t_start, t_end) +
                       params.lambda_sharpness * candidates[j].sharpness_norm;

    std::vector<SelectedFrame> selected;
    std::vector<bool> available(n, true);
    std::vector<double> max_sim(n, -std::numeric_limits<double>::infinity());

    while (selected.size() < params.k) {
        std::size_t best = n;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!available[j]) continue;
            const double score =
                selected.empty() ? relevance[j] : (1.0 - params.nu) * relevance[j] - params.nu * max_sim[j];
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        if (best == n) break;
        selected.push_back({best, selected.size(), relevance[best], best_score});
        available[best] = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (!available[j]) continue;
            max_sim[j] = std::max(max_sim[j], cosine(candidates[j].feature, candidates[best].feature));
            if (max_sim[j] > params.dedup_threshold) available[j] = false;
        }
    }
    return selected;
}

/// Row mean of a k x d matrix; empty input gives a zero vector of `dims`.
inline Eigen::VectorXd pool_visual(const Eigen::MatrixXd& frame_embeddings, std::size_t dims = 0,
                                   Diagnostics* diag = nullptr) {
    if (frame_embeddings.rows() == 0) {
        mvt::detail::warn(diag, "pool_visual: no usable frames, emitting a zero descriptor");
        return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims ? dims : frame_embeddings.cols()));
    }
    return frame_embeddings.colwise().mean().transpose();
}

// ---- manifests ---------------------------------------------------------------

struct FrameRecord {
    std::string video_id;
    std::size_t segment_index = 0;
    double timestamp = 0.0;
    std::string path;
    // Only set in selected-frame reports.
    std::size_t rank = 0;
    double score = 0.0;
};

inline std::vector<FrameRecord> parse_frame_manifest(std::string_view content) {
    std::vector<FrameRecord> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            auto rec = nlohmann::json::parse(line);
            FrameRecord f;
            f.video_id = rec.at("video_id").get<std::string>();
            f.segment_index = rec.at("segment_index").get<std::size_t>();
            f.timestamp = rec.at("timestamp").get<double>();
            f.path = rec.at("path").get<std::string>();
            out.push_back(std::move(f));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad frame manifest record: ") + e.what(), line_no);
        }
    }
    return out;
}

inline std::vector<FrameRecord> load_frame_manifest(const std::filesystem::path& path) {
    return parse_frame_manifest(mvt::detail::read_file(path));
}

inline std::string format_selected_frames(const std::vector<FrameRecord>& frames) {
    std::string out;
    for (const auto& f : frames) {
        nlohmann::ordered_json rec;
        rec["video_id"] = f.video_id;
        rec["segment_index"] = f.segment_index;
        rec["timestamp"] = f.timestamp;
        rec["path"] = f.path;
        rec["rank"] = f.rank;
        rec["score"] = f.score;
        out += rec.dump();
        out += '\n';
    }
    return out;
}

/// Groups manifest records of one video by segment index, each group sorted by timestamp.
inline std::map<std::size_t, std::vector<FrameRecord>> group_by_segment(const std::vector<FrameRecord>& records,
                                                                        const std::string& video_id) {
    std::map<std::size_t, std::vector<FrameRecord>> out;
    for (const auto& r : records)
        if (r.video_id == video_id) out[r.segment_index].push_back(r);
    for (auto& [_, v] : out)
        std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return out;
}

}  // namespace mvt::frames
