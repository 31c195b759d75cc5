// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mvtopic/corpus.hpp"
#include "mvtopic/text.hpp"
#include "mvtopic/wordvec.hpp"

namespace mvt::metrics {

inline constexpr int kOutlier = -1;

// ---- topic structure ----------------------------------------------------------

struct StructureMetrics {
    double noise_ratio = 0.0;
    double transition_rate = 0.0;
    double entropy_norm = 0.0;
    double gini = 0.0;
    std::size_t n_topics = 0;
    bool empty = false;
};

struct StructureOptions {
    /// Drop consecutive pairs that involve an outlier instead of treating -1 as a label.
    bool exclude_outlier_transitions = false;
};

inline std::map<int, std::size_t> topic_sizes(std::span<const int> labels) {
    std::map<int, std::size_t> sizes;
    for (int l : labels)
        if (l != kOutlier) ++sizes[l];
    return sizes;
}

/// Gini coefficient: sum_ij |x_i - x_j| / (2 n^2 mean).
inline double gini(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double total = 0.0, diff = 0.0;
    for (double a : x) {
        total += a;
        for (double b : x) diff += std::abs(a - b);
    }
    if (total <= 0.0) return 0.0;
    const double n = static_cast<double>(x.size());
    return diff / (2.0 * n * total);
}

/// `video_starts` lists the first index of every video after the first; transitions are
/// only counted between consecutive segments of the same video.
inline StructureMetrics structure_metrics(std::span<const int> labels, std::span<const std::size_t> video_starts = {},
                                          const StructureOptions& opt = {}) {
    StructureMetrics m;
    const auto n = labels.size();
    if (n == 0) {
        m.empty = true;
        return m;
    }
    std::set<std::size_t> starts(video_starts.begin(), video_starts.end());
    std::size_t outliers = 0, pairs = 0, changes = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == kOutlier) ++outliers;
        if (i == 0 || starts.count(i)) continue;
        if (opt.exclude_outlier_transitions && (labels[i] == kOutlier || labels[i - 1] == kOutlier)) continue;
        ++pairs;
        if (labels[i] != labels[i - 1]) ++changes;
    }
    m.noise_ratio = static_cast<double>(outliers) / static_cast<double>(n);
    m.transition_rate = pairs ? static_cast<double>(changes) / static_cast<double>(pairs) : 0.0;

    const auto sizes = topic_sizes(labels);
    m.n_topics = sizes.size();
    std::vector<double> x;
    double assigned = 0.0;
    for (const auto& [_, s] : sizes) {
        x.push_back(static_cast<double>(s));
        assigned += static_cast<double>(s);
    }
    if (m.n_topics > 1) {
        double h = 0.0;
        for (double s : x) {
            const double p = s / assigned;
            h -= p * std::log(p);
        }
        m.entropy_norm = h / std::log(static_cast<double>(m.n_topics));
    }
    m.gini = gini(x);
    return m;
}

// ---- cluster validity ---------------------------------------------------------

struct ClusterValidity {
    double ch = 0.0;
    double silhouette = 0.0;
    double db = 0.0;
    Modality space = Modality::fused;
    std::size_t n_points = 0;
    std::size_t n_clusters = 0;
    /// Singleton clusters or zero within-cluster dispersion; CH is then reported as 0.
    bool degenerate = false;
};

/// Calinski-Harabasz, mean silhouette and Davies-Bouldin over non-outlier rows, Euclidean.
/// Absent when fewer than two clusters remain.
inline std::optional<ClusterValidity> cluster_validity(const Eigen::MatrixXd& X, std::span<const int> labels,
                                                       Modality space = Modality::fused) {
    if (static_cast<std::size_t>(X.rows()) != labels.size())
        throw DimensionError("cluster_validity: labels and rows differ in length");
    std::vector<Eigen::Index> rows;
    std::map<int, std::size_t> cluster_index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kOutlier) continue;
        rows.push_back(static_cast<Eigen::Index>(i));
        cluster_index.try_emplace(labels[i], cluster_index.size());
    }
    const std::size_t k = cluster_index.size();
    if (k < 2) return std::nullopt;
    const std::size_t n = rows.size();
    const auto d = X.cols();

    std::vector<std::size_t> member(n);
    std::vector<std::size_t> count(k, 0);
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), d);
    Eigen::RowVectorXd overall = Eigen::RowVectorXd::Zero(d);
    for (std::size_t r = 0; r < n; ++r) {
        member[r] = cluster_index[labels[static_cast<std::size_t>(rows[r])]];
        ++count[member[r]];
        centroids.row(static_cast<Eigen::Index>(member[r])) += X.row(rows[r]);
        overall += X.row(rows[r]);
    }
    for (std::size_t c = 0; c < k; ++c) centroids.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(count[c]);
    overall /= static_cast<double>(n);

    ClusterValidity v;
    v.space = space;
    v.n_points = n;
    v.n_clusters = k;

    double between = 0.0, within = 0.0;
    std::vector<double> scatter(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
        between += static_cast<double>(count[c]) * (centroids.row(static_cast<Eigen::Index>(c)) - overall).squaredNorm();
    for (std::size_t r = 0; r < n; ++r) {
        const auto diff = X.row(rows[r]) - centroids.row(static_cast<Eigen::Index>(member[r]));
        within += diff.squaredNorm();
        scatter[member[r]] += diff.norm();
    }
    if (n == k || within <= 0.0) {
        v.degenerate = true;
        v.ch = 0.0;
    } else {
        v.ch = (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
    }

    // Silhouette; singletons contribute 0.
    double sil = 0.0;
    std::vector<double> dist_sum(k);
    for (std::size_t r = 0; r < n; ++r) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t q = 0; q < n; ++q)
            if (q != r) dist_sum[member[q]] += (X.row(rows[r]) - X.row(rows[q])).norm();
        const auto own = member[r];
        if (count[own] < 2) {
            v.degenerate = true;
            continue;
        }
        const double a = dist_sum[own] / static_cast<double>(count[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != own) b = std::min(b, dist_sum[c] / static_cast<double>(count[c]));
        const double denom = std::max(a, b);
        sil += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    v.silhouette = sil / static_cast<double>(n);

    double db = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double si = scatter[i] / static_cast<double>(count[i]);
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            const double sj = scatter[j] / static_cast<double>(count[j]);
            const double dc = (centroids.row(static_cast<Eigen::Index>(i)) - centroids.row(static_cast<Eigen::Index>(j))).norm();
            if (dc > 0.0) worst = std::max(worst, (si + sj) / dc);
        }
        db += worst;
    }
    v.db = db / static_cast<double>(k);
    return v;
}

// ---- semantic quality ---------------------------------------------------------

using WordLists = std::vector<std::vector<std::string>>;

struct CoverageValue {
    std::optional<double> value;
    std::size_t used = 0;     // pairs (npmi) or topics (we)
    std::size_t skipped = 0;  // pairs or topics left out for missing words
};

inline constexpr double kNpmiEpsilon = 1e-12;

/// Document-level NPMI of every top-word pair, averaged per topic and then across topics.
/// A pair whose joint probability is 1 scores 1.
inline CoverageValue npmi(const WordLists& topics, const std::vector<std::string>& documents, double epsilon = kNpmiEpsilon) {
    CoverageValue out;
    const double D = static_cast<double>(documents.size());
    if (documents.empty()) return out;
    std::vector<std::unordered_set<std::string>> docs;
    docs.reserve(documents.size());
    for (const auto& d : documents) {
        auto toks = text::tokenize(d, 1);
        docs.emplace_back(toks.begin(), toks.end());
    }
    auto doc_count = [&](const std::string& a, const std::string* b) {
        std::size_t c = 0;
        for (const auto& d : docs)
            if (d.count(a) && (!b || d.count(*b))) ++c;
        return static_cast<double>(c);
    };
    double total = 0.0;
    std::size_t topics_used = 0;
    for (const auto& words : topics) {
        if (words.size() < 2) continue;
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < words.size(); ++i)
            for (std::size_t j = i + 1; j < words.size(); ++j) {
                const auto wi = text::lowercase(words[i]), wj = text::lowercase(words[j]);
                const double ci = doc_count(wi, nullptr), cj = doc_count(wj, nullptr);
                if (ci == 0.0 || cj == 0.0) {
                    ++out.skipped;
                    continue;
                }
                const double pi = ci / D, pj = cj / D, pij = doc_count(wi, &wj) / D;
                double value;
                if (pij >= 1.0) {
                    value = 1.0;
                } else {
                    const double joint = std::log(pij + epsilon);
                    value = (joint - std::log(pi) - std::log(pj)) / (-joint);
                }
                sum += value;
                ++pairs;
            }
        out.used += pairs;
        if (pairs) {
            total += sum / static_cast<double>(pairs);
            ++topics_used;
        }
    }
    if (topics_used) out.value = total / static_cast<double>(topics_used);
    return out;
}

/// Unique words across topics over T*k. k defaults to the longest list.
inline double topic_diversity(const WordLists& topics, std::size_t k = 0) {
    if (topics.empty()) return 0.0;
    std::set<std::string> unique;
    std::size_t longest = 0;
    for (const auto& t : topics) {
        unique.insert(t.begin(), t.end());
        longest = std::max(longest, t.size());
    }
    const std::size_t kk = k ? k : longest;
    if (kk == 0) return 0.0;
    return static_cast<double>(unique.size()) / static_cast<double>(topics.size() * kk);
}

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    return (na == 0.0 || nb == 0.0) ? 0.0 : a.dot(b) / (na * nb);
}

/// Mean pairwise cosine of each topic's covered top-word vectors, averaged over topics.
inline CoverageValue we_alignment(const WordLists& topics, const WordVectorTable& table) {
    CoverageValue out;
    double total = 0.0;
    for (const auto& words : topics) {
        std::vector<const Eigen::VectorXd*> vecs;
        for (const auto& w : words)
            if (auto* v = table.find(w)) vecs.push_back(v);
        if (vecs.size() < 2) {
            ++out.skipped;
            continue;
        }
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < vecs.size(); ++i)
            for (std::size_t j = i + 1; j < vecs.size(); ++j, ++pairs) sum += cosine(*vecs[i], *vecs[j]);
        total += sum / static_cast<double>(pairs);
        ++out.used;
    }
    if (out.used) out.value = total / static_cast<double>(out.used);
    return out;
}

/// Mean within-topic pairwise cosine of rows of X, averaged over topics with >= 2 members.
inline std::optional<double> iec(const Eigen::MatrixXd& X, std::span<const int> labels) {
    if (static_cast<std::size_t>(X.rows()) != labels.size()) throw DimensionError("iec: labels and rows differ in length");
    std::map<int, std::vector<Eigen::Index>> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != kOutlier) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
    double total = 0.0;
    std::size_t topics = 0;
    for (const auto& [_, rows] : members) {
        if (rows.size() < 2) continue;
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = a + 1; b < rows.size(); ++b, ++pairs)
                sum += cosine(X.row(rows[a]).transpose(), X.row(rows[b]).transpose());
        total += sum / static_cast<double>(pairs);
        ++topics;
    }
    if (!topics) return std::nullopt;
    return total / static_cast<double>(topics);
}

// ---- reports ------------------------------------------------------------------

/// Flat metric map of one video; absent values are nullopt.
struct VideoReport {
    std::string video_id;
    std::map<std::string, std::optional<double>> values;
    std::vector<std::string> flags;
};

struct EvaluationInputs {
    std::span<const int> labels;
    const std::vector<Segment>* segments = nullptr;
    WordLists top_words;
    std::size_t top_k = 10;
    /// Embedding spaces to score (any subset of text/audio/visual/fused).
    std::map<Modality, Eigen::MatrixXd> spaces;
    const WordVectorTable* word_vectors = nullptr;
    double npmi_epsilon = kNpmiEpsilon;
    StructureOptions structure;
};

inline VideoReport evaluate_video(const std::string& video_id, const EvaluationInputs& in) {
    VideoReport r;
    r.video_id = video_id;
    const auto s = structure_metrics(in.labels, {}, in.structure);
    if (s.empty) r.flags.push_back("empty video");
    r.values["noise_ratio"] = s.noise_ratio;
    r.values["transition_rate"] = s.transition_rate;
    r.values["entropy_norm"] = s.entropy_norm;
    r.values["gini"] = s.gini;
    r.values["n_topics"] = static_cast<double>(s.n_topics);

    for (const auto& [space, X] : in.spaces) {
        const std::string suffix = "_" + std::string(to_string(space));
        auto v = cluster_validity(X, in.labels, space);
        r.values["ch" + suffix] = v ? std::optional<double>(v->ch) : std::nullopt;
        r.values["silhouette" + suffix] = v ? std::optional<double>(v->silhouette) : std::nullopt;
        r.values["db" + suffix] = v ? std::optional<double>(v->db) : std::nullopt;
        if (v && v->degenerate) r.flags.push_back("degenerate clusters in " + std::string(to_string(space)) + " space");
        r.values["iec" + suffix] = iec(X, in.labels);
    }

    if (in.segments) {
        std::vector<std::string> docs;
        for (const auto& seg : *in.segments) docs.push_back(seg.text);
        const auto np = npmi(in.top_words, docs, in.npmi_epsilon);
        r.values["npmi"] = np.value;
        if (np.skipped) r.flags.push_back("npmi skipped " + std::to_string(np.skipped) + " word pairs");
    }
    r.values["diversity"] = in.top_words.empty() ? std::nullopt : std::optional<double>(topic_diversity(in.top_words, in.top_k));
    if (in.word_vectors) {
        const auto we = we_alignment(in.top_words, *in.word_vectors);
        r.values["we"] = we.value;
        if (we.skipped) r.flags.push_back("we skipped " + std::to_string(we.skipped) + " topics");
    }
    return r;
}

struct AggregateValue {
    std::optional<double> mean;
    std::size_t present = 0;
    std::size_t total = 0;
};

/// Unweighted per-metric mean across videos, ignoring absent values.
inline std::map<std::string, AggregateValue> aggregate(const std::vector<VideoReport>& reports) {
    std::map<std::string, AggregateValue> out;
    for (const auto& r : reports)
        for (const auto& [name, _] : r.values) out[name].total = reports.size();
    for (auto& [name, agg] : out) {
        double sum = 0.0;
        for (const auto& r : reports) {
            auto it = r.values.find(name);
            if (it != r.values.end() && it->second) {
                sum += *it->second;
                ++agg.present;
            }
        }
        if (agg.present) agg.mean = sum / static_cast<double>(agg.present);
    }
    return out;
}

inline nlohmann::ordered_json formula_definitions() {
    nlohmann::ordered_json j;
    j["noise_ratio"] = "|{i : label_i = -1}| / N";
    j["transition_rate"] =
        "|{consecutive same-video pairs with different labels}| / |pairs|; -1 counts as a label unless excluded";
    j["entropy_norm"] = "H(p) / ln(T) over non-outlier topic proportions p; 0 when T <= 1";
    j["gini"] = "sum_ij |x_i - x_j| / (2 T^2 mean(x)) over non-outlier topic sizes x";
    j["n_topics"] = "T, number of non-outlier topics";
    j["ch"] = "[trace(B)/(T-1)] / [trace(W)/(n-T)], Euclidean, outliers excluded; 0 with degenerate flag if W = 0";
    j["silhouette"] = "mean over points of (b-a)/max(a,b); singleton clusters contribute 0";
    j["db"] = "mean_i max_{j!=i} (s_i + s_j)/d(c_i, c_j), s = mean distance to centroid";
    j["npmi"] = "[ln(p_ij + eps) - ln p_i - ln p_j] / -ln(p_ij + eps), document = segment transcript, eps = 1e-12; "
                "mean over pairs, then over topics";
    j["diversity"] = "|unique top words| / (T * k)";
    j["we"] = "mean pairwise cosine of top-word vectors per topic, mean over topics";
    j["iec"] = "mean within-topic pairwise cosine of segment embeddings per topic (>= 2 members), mean over topics";
    return j;
}

inline nlohmann::ordered_json report_json(const VideoReport& r) {
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    auto& vals = j["metrics"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.values) vals[k] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    j["flags"] = r.flags;
    return j;
}

inline nlohmann::ordered_json aggregate_json(const std::map<std::string, AggregateValue>& agg) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : agg)
        j[k] = {{"mean", v.mean ? nlohmann::ordered_json(*v.mean) : nlohmann::ordered_json(nullptr)},
                {"present", v.present},
                {"total", v.total}};
    return j;
}

}  // namespace mvt::metrics
