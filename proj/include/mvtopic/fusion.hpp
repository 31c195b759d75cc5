// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mvtopic/corpus.hpp"
#include "mvtopic/error.hpp"

namespace mvt::fusion {

struct FusionWeights {
    double text = 0.34;
    double audio = 0.33;
    double visual = 0.33;

    void validate() const {
        for (double w : {text, audio, visual})
            if (!(w > 0.0 && w <= 1.0)) throw ConfigError("fusion weights must lie in (0, 1]");
    }
};

/// Pairwise cosine similarities of the three normalized modalities and the scale
/// factor s = (sim_ta + sim_tv + sim_av + 3) / 6.
struct Gate {
    double sim_ta = 0.0;
    double sim_tv = 0.0;
    double sim_av = 0.0;
    double s = 0.5;
};

struct FusedEmbedding {
    Eigen::VectorXd vector;
    std::size_t d_min = 0;
    Gate gate;
    /// Pre-normalization concatenation had zero norm; vector is all zeros.
    bool degenerate = false;
};

/// Leading d_min coordinates, L2-normalized. Zero input stays zero.
inline Eigen::VectorXd normalize_truncate(const Eigen::VectorXd& x, std::size_t d_min) {
    if (d_min < 1 || static_cast<std::size_t>(x.size()) < d_min)
        throw DimensionError("normalize_truncate: vector of length " + std::to_string(x.size()) +
                             " cannot be truncated to " + std::to_string(d_min));
    Eigen::VectorXd head = x.head(static_cast<Eigen::Index>(d_min));
    const double n = head.norm();
    if (n > 0.0) head /= n;
    return head;
}

inline Gate gate(const Eigen::VectorXd& t, const Eigen::VectorXd& a, const Eigen::VectorXd& v) {
    if (t.size() != a.size() || t.size() != v.size()) throw DimensionError("gate: inputs must share d_min");
    Gate g;
    g.sim_ta = t.dot(a);
    g.sim_tv = t.dot(v);
    g.sim_av = a.dot(v);
    g.s = (g.sim_ta + g.sim_tv + g.sim_av + 3.0) / 6.0;
    return g;
}

/// [w_t*s*t ; w_a*s*a ; w_v*s*v ; t.*a ; t.*v ; a.*v ; t.*a.*v], L2-normalized.
/// The gate scales only the three weighted blocks.
inline FusedEmbedding fuse(const Eigen::VectorXd& t, const Eigen::VectorXd& a, const Eigen::VectorXd& v,
                           const FusionWeights& weights, const Gate& g) {
    if (t.size() != a.size() || t.size() != v.size()) throw DimensionError("fuse: inputs must share d_min");
    const Eigen::Index d = t.size();
    FusedEmbedding out;
    out.d_min = static_cast<std::size_t>(d);
    out.gate = g;
    out.vector.resize(7 * d);
    out.vector.segment(0 * d, d) = weights.text * g.s * t;
    out.vector.segment(1 * d, d) = weights.audio * g.s * a;
    out.vector.segment(2 * d, d) = weights.visual * g.s * v;
    out.vector.segment(3 * d, d) = t.cwiseProduct(a);
    out.vector.segment(4 * d, d) = t.cwiseProduct(v);
    out.vector.segment(5 * d, d) = a.cwiseProduct(v);
    out.vector.segment(6 * d, d) = t.cwiseProduct(a).cwiseProduct(v);
    const double n = out.vector.norm();
    if (n > 0.0) {
        out.vector /= n;
    } else {
        out.vector.setZero();
        out.degenerate = true;
    }
    return out;
}

/// Full per-segment path from raw modality vectors.
inline FusedEmbedding fuse_raw(const Eigen::VectorXd& t_raw, const Eigen::VectorXd& a_raw, const Eigen::VectorXd& v_raw,
                               const FusionWeights& weights) {
    const auto d_min = static_cast<std::size_t>(std::min({t_raw.size(), a_raw.size(), v_raw.size()}));
    const auto t = normalize_truncate(t_raw, d_min);
    const auto a = normalize_truncate(a_raw, d_min);
    const auto v = normalize_truncate(v_raw, d_min);
    return fuse(t, a, v, weights, gate(t, a, v));
}

/// Bi-modal baseline: normalize, truncate to the pair's d_min, concatenate, renormalize.
/// No gate and no interaction terms.
inline Eigen::VectorXd concat_pair(const Eigen::VectorXd& x_raw, const Eigen::VectorXd& y_raw) {
    const auto d_min = static_cast<std::size_t>(std::min(x_raw.size(), y_raw.size()));
    const Eigen::Index d = static_cast<Eigen::Index>(d_min);
    Eigen::VectorXd out(2 * d);
    out.head(d) = normalize_truncate(x_raw, d_min);
    out.tail(d) = normalize_truncate(y_raw, d_min);
    const double n = out.norm();
    if (n > 0.0) out /= n;
    return out;
}

struct FusionResult {
    EmbeddingMatrix matrix;
    std::vector<Gate> gates;
    std::vector<bool> degenerate;
};

inline FusionResult fuse_corpus(const VideoCorpus& corpus, const FusionWeights& weights) {
    weights.validate();
    const auto& T = corpus.matrix(Modality::text);
    const auto& A = corpus.matrix(Modality::audio);
    const auto& V = corpus.matrix(Modality::visual);
    const auto d_min = std::min({T.dims(), A.dims(), V.dims()});
    const auto n = corpus.size();

    FusionResult out;
    out.matrix.modality = Modality::fused;
    out.matrix.source = "gated-fusion(" + T.source + "," + A.source + "," + V.source + ")";
    out.matrix.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(7 * d_min));
    out.gates.reserve(n);
    out.degenerate.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = normalize_truncate(T.row(i), d_min);
        const auto a = normalize_truncate(A.row(i), d_min);
        const auto v = normalize_truncate(V.row(i), d_min);
        const auto g = gate(t, a, v);
        const auto m = fuse(t, a, v, weights, g);
        out.matrix.data.row(static_cast<Eigen::Index>(i)) = m.vector.cast<float>().transpose();
        out.gates.push_back(g);
        out.degenerate.push_back(m.degenerate);
    }
    return out;
}

inline EmbeddingMatrix concat_corpus(const VideoCorpus& corpus, Modality first, Modality second) {
    const auto& X = corpus.matrix(first);
    const auto& Y = corpus.matrix(second);
    const auto d_min = std::min(X.dims(), Y.dims());
    EmbeddingMatrix out;
    out.modality = Modality::fused;
    out.source = "concat(" + X.source + "," + Y.source + ")";
    out.data.resize(static_cast<Eigen::Index>(corpus.size()), static_cast<Eigen::Index>(2 * d_min));
    for (std::size_t i = 0; i < corpus.size(); ++i)
        out.data.row(static_cast<Eigen::Index>(i)) = concat_pair(X.row(i), Y.row(i)).cast<float>().transpose();
    return out;
}

/// Sidecar with per-segment gate diagnostics.
inline nlohmann::ordered_json gate_sidecar(const std::string& video_id, const FusionResult& r) {
    nlohmann::ordered_json j;
    j["video_id"] = video_id;
    auto& rows = j["segments"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.gates.size(); ++i) {
        nlohmann::ordered_json row;
        row["index"] = i;
        row["s"] = r.gates[i].s;
        row["sim_ta"] = r.gates[i].sim_ta;
        row["sim_tv"] = r.gates[i].sim_tv;
        row["sim_av"] = r.gates[i].sim_av;
        row["degenerate"] = static_cast<bool>(r.degenerate[i]);
        rows.push_back(std::move(row));
    }
    return j;
}

}  // namespace mvt::fusion
