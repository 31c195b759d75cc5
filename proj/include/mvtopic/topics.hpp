// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mvtopic/corpus.hpp"
#include "mvtopic/ctfidf.hpp"
#include "mvtopic/error.hpp"
#include "mvtopic/hdbscan.hpp"
#include "mvtopic/reduce.hpp"
#include "mvtopic/wordvec.hpp"

namespace mvt::cluster {

struct ClusterParams {
    std::size_t reducer_components = 8;
    std::size_t reducer_neighbors = 15;  // reserved for a neighbour-graph reducer
    std::size_t min_cluster_size = 5;
    double merge_threshold = 0.70;
    std::size_t top_k_words = 10;
    std::size_t min_doc_freq = 2;
    double seed_blend_threshold = 0.3;

    void validate() const {
        if (min_cluster_size < 2) throw ConfigError("min_cluster_size must be >= 2");
        if (!(merge_threshold > 0.0 && merge_threshold <= 1.0)) throw ConfigError("merge_threshold must lie in (0, 1]");
        if (reducer_components < 1) throw ConfigError("reducer_components must be >= 1");
        if (top_k_words < 1) throw ConfigError("top_k_words must be >= 1");
    }
};

struct SeedTopic {
    std::string name;
    std::vector<std::string> words;
    std::optional<Eigen::VectorXd> centroid;
};

/// The fifteen news themes used for guided runs.
inline std::vector<SeedTopic> default_seed_topics() {
    return {
        {"War & conflict", {"war", "conflict", "battle", "army"}, {}},
        {"Democracy", {"democracy", "freedom", "election", "parliament"}, {}},
        {"Peace & history", {"peace", "reconciliation", "memory", "history"}, {}},
        {"Economy", {"economy", "trade", "market", "growth"}, {}},
        {"Climate", {"climate", "environment", "sustainability", "green"}, {}},
        {"Technology", {"technology", "innovation", "digital", "future"}, {}},
        {"Health", {"health", "medicine", "pandemic", "vaccine"}, {}},
        {"Culture", {"culture", "art", "music", "literature"}, {}},
        {"Sports", {"sports", "competition", "athlete", "tournament"}, {}},
        {"Education", {"education", "school", "university", "learning"}, {}},
        {"Human rights", {"human rights", "justice", "equality", "activism"}, {}},
        {"Migration", {"migration", "refugee", "border", "asylum"}, {}},
        {"Science", {"science", "research", "discovery", "experiment"}, {}},
        {"Space", {"space", "astronomy", "exploration", "universe"}, {}},
        {"Leadership", {"leadership", "governance", "policy", "diplomacy"}, {}},
    };
}

/// Seed list from JSON (a YAML flow list parses too when it is JSON-compatible).
inline std::vector<SeedTopic> parse_seed_topics(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("seed list must be an array of {name, words, centroid?}");
    std::vector<SeedTopic> out;
    for (const auto& item : j) {
        SeedTopic s;
        try {
            s.name = item.at("name").get<std::string>();
            s.words = item.at("words").get<std::vector<std::string>>();
            if (item.contains("centroid")) {
                auto c = item.at("centroid").get<std::vector<double>>();
                Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
                if (v.norm() == 0.0) throw ConfigError("seed '" + s.name + "' has a zero centroid");
                s.centroid = v.normalized();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad seed topic entry: ") + e.what());
        }
        if (s.words.empty()) throw ConfigError("seed '" + s.name + "' needs at least one word");
        out.push_back(std::move(s));
    }
    return out;
}

/// Fills missing centroids with the normalized mean of the seed words' vectors.
inline void build_seed_centroids(std::vector<SeedTopic>& seeds, const WordVectorTable* table) {
    for (auto& s : seeds) {
        if (s.centroid) continue;
        if (!table || table->empty())
            throw ConfigError("seed '" + s.name + "' has no centroid and no word-vector table is configured");
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table->dims()));
        std::size_t hits = 0;
        for (const auto& w : s.words)
            if (auto v = table->lookup_phrase(w)) {
                sum += *v;
                ++hits;
            }
        if (hits == 0 || sum.norm() == 0.0)
            throw ConfigError("seed '" + s.name + "': none of its words are in the word-vector table");
        s.centroid = sum.normalized();
    }
}

struct BlendResult {
    Eigen::MatrixXd embeddings;
    std::vector<std::optional<std::size_t>> matched;  // seed index per row
};

/// Rows whose best seed cosine reaches `threshold` move to the normalized midpoint
/// of the (normalized) row and that seed centroid. Other rows are returned unchanged.
inline BlendResult guided_blend(const Eigen::MatrixXd& text, const std::vector<SeedTopic>& seeds, double threshold) {
    BlendResult out{text, std::vector<std::optional<std::size_t>>(static_cast<std::size_t>(text.rows()))};
    for (const auto& s : seeds) {
        if (!s.centroid) throw ConfigError("seed '" + s.name + "' has no centroid");
        if (s.centroid->size() != text.cols())
            throw DimensionError("seed '" + s.name + "' centroid has " + std::to_string(s.centroid->size()) +
                                 " dims, text embeddings have " + std::to_string(text.cols()));
    }
    if (seeds.empty()) return out;
    for (Eigen::Index i = 0; i < text.rows(); ++i) {
        const double n = text.row(i).norm();
        if (n == 0.0) continue;
        const Eigen::VectorXd t = text.row(i).transpose() / n;
        std::size_t best = 0;
        double best_cos = -2.0;
        for (std::size_t j = 0; j < seeds.size(); ++j) {
            const double c = t.dot(*seeds[j].centroid);
            if (c > best_cos) {
                best_cos = c;
                best = j;
            }
        }
        if (best_cos >= threshold) {
            Eigen::VectorXd mid = 0.5 * (t + *seeds[best].centroid);
            const double m = mid.norm();
            if (m > 0.0) out.embeddings.row(i) = (mid / m).transpose();
            out.matched[static_cast<std::size_t>(i)] = best;
        }
    }
    return out;
}

struct MergeEntry {
    int from;
    int into;
    double similarity;
};

struct Topic {
    int id = 0;
    std::size_t size = 0;
    std::vector<std::pair<std::string, double>> top_words;
    Eigen::VectorXd counts;   // class term frequencies over the vocabulary
    Eigen::VectorXd weights;  // c-TF-IDF
    std::optional<std::string> seed;
    bool words_empty = false;
};

/// Per-video topic assignment. Label -1 marks outliers; topic ids are dense 0..T-1.
struct TopicModel {
    std::vector<int> labels;
    Vocabulary vocabulary;
    std::vector<Topic> topics;
    /// Topic ids here refer to the numbering before the final renumbering.
    std::vector<MergeEntry> merge_log;
    /// Seed matched by guided blending, per segment.
    std::vector<std::optional<std::string>> segment_seeds;
    std::size_t top_k_words = 10;

    std::size_t n_topics() const { return topics.size(); }
};

namespace detail {

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm(), nb = b.norm();
    return (na == 0.0 || nb == 0.0) ? 0.0 : a.dot(b) / (na * nb);
}

/// Majority seed among a topic's members; ties go to the lexicographically smaller name.
inline std::optional<std::string> majority_seed(const TopicModel& m, int topic) {
    std::map<std::string, std::size_t> votes;
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        if (m.labels[i] == topic && i < m.segment_seeds.size() && m.segment_seeds[i]) ++votes[*m.segment_seeds[i]];
    std::optional<std::string> best;
    std::size_t best_count = 0;
    for (const auto& [name, count] : votes)
        if (count > best_count) {
            best = name;
            best_count = count;
        }
    return best;
}

}  // namespace detail

/// Recompute weights and top words from counts, after renumbering topics by size
/// (descending, ties by current id). Labels are remapped accordingly.
inline void finalize_topics(TopicModel& m) {
    std::vector<std::size_t> order(m.topics.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (m.topics[a].size != m.topics[b].size) return m.topics[a].size > m.topics[b].size;
        return m.topics[a].id < m.topics[b].id;
    });
    std::map<int, int> remap;
    std::vector<Topic> sorted;
    for (std::size_t k = 0; k < order.size(); ++k) {
        remap[m.topics[order[k]].id] = static_cast<int>(k);
        sorted.push_back(std::move(m.topics[order[k]]));
        sorted.back().id = static_cast<int>(k);
    }
    m.topics = std::move(sorted);
    for (auto& l : m.labels)
        if (l != kNoise) l = remap.at(l);

    Eigen::MatrixXd counts(static_cast<Eigen::Index>(m.topics.size()), static_cast<Eigen::Index>(m.vocabulary.size()));
    for (std::size_t k = 0; k < m.topics.size(); ++k) counts.row(static_cast<Eigen::Index>(k)) = m.topics[k].counts.transpose();
    const Eigen::MatrixXd W = ctfidf_weights(counts);
    for (std::size_t k = 0; k < m.topics.size(); ++k) {
        auto& t = m.topics[k];
        t.weights = W.row(static_cast<Eigen::Index>(k)).transpose();
        t.top_words = top_terms(t.weights, m.vocabulary, m.top_k_words);
        t.words_empty = t.top_words.empty();
        t.seed = detail::majority_seed(m, t.id);
    }
}

struct CtfidfOptions {
    std::size_t top_k_words = 10;
    std::size_t min_doc_freq = 2;
    const text::StopwordSet* stopwords = nullptr;
};

/// Topic model with c-TF-IDF representations for a given labelling. Outliers do not form a class.
inline TopicModel ctfidf(const std::vector<int>& labels, const std::vector<Segment>& segments, const CtfidfOptions& opt,
                         Diagnostics* diag = nullptr) {
    if (labels.size() != segments.size()) throw DimensionError("ctfidf: labels and segments differ in length");
    TopicModel m;
    m.labels = labels;
    m.top_k_words = opt.top_k_words;
    m.segment_seeds.resize(labels.size());
    VocabularyOptions vopt{2, opt.min_doc_freq, opt.stopwords};
    std::vector<std::string> docs;
    docs.reserve(segments.size());
    for (const auto& s : segments) docs.push_back(s.text);
    m.vocabulary = build_vocabulary(docs, vopt);

    std::map<int, Topic> topics;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kNoise) continue;
        auto [it, fresh] = topics.try_emplace(labels[i]);
        if (fresh) {
            it->second.id = labels[i];
            it->second.counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.vocabulary.size()));
        }
        it->second.size += 1;
        it->second.counts += term_counts(docs[i], m.vocabulary, vopt);
    }
    for (auto& [_, t] : topics) m.topics.push_back(std::move(t));
    finalize_topics(m);
    for (const auto& t : m.topics)
        if (t.words_empty)
            mvt::detail::warn(diag, "topic " + std::to_string(t.id) + " has no terms left after vocabulary filtering");
    return m;
}

/// Greedy merging on c-TF-IDF cosine: repeatedly merge the most similar pair while its
/// similarity exceeds `threshold`. The smaller topic folds into the larger (equal sizes:
/// the lower id absorbs); weights are recomputed from pooled counts after every merge.
inline TopicModel merge_topics(TopicModel m, double threshold) {
    for (;;) {
        const auto T = m.topics.size();
        if (T < 2) break;
        Eigen::MatrixXd counts(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(m.vocabulary.size()));
        for (std::size_t k = 0; k < T; ++k) counts.row(static_cast<Eigen::Index>(k)) = m.topics[k].counts.transpose();
        const Eigen::MatrixXd W = ctfidf_weights(counts);
        double best = -2.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < T; ++i)
            for (std::size_t j = i + 1; j < T; ++j) {
                const double s = detail::cosine(W.row(static_cast<Eigen::Index>(i)).transpose(),
                                                W.row(static_cast<Eigen::Index>(j)).transpose());
                if (s > best) {
                    best = s;
                    bi = i;
                    bj = j;
                }
            }
        if (!(best > threshold)) break;
        auto& a = m.topics[bi];
        auto& b = m.topics[bj];
        const bool a_absorbs = a.size != b.size ? a.size > b.size : a.id < b.id;
        auto& into = a_absorbs ? a : b;
        auto& from = a_absorbs ? b : a;
        m.merge_log.push_back({from.id, into.id, best});
        into.counts += from.counts;
        into.size += from.size;
        for (auto& l : m.labels)
            if (l == from.id) l = into.id;
        const int gone = from.id;
        std::erase_if(m.topics, [gone](const Topic& t) { return t.id == gone; });
    }
    finalize_topics(m);
    return m;
}

struct AssignOptions {
    ClusterParams params;
    const text::StopwordSet* stopwords = nullptr;
    const Reducer* reducer = nullptr;  // defaults to PcaReducer(params.reducer_components)
};

/// reduce -> density cluster -> c-TF-IDF -> merge on an already-built input matrix.
inline TopicModel assign_topics(const Eigen::MatrixXd& input, const std::vector<Segment>& segments,
                                const AssignOptions& opt,
                                const std::vector<std::optional<std::string>>& segment_seeds = {},
                                Diagnostics* diag = nullptr) {
    opt.params.validate();
    if (static_cast<std::size_t>(input.rows()) != segments.size())
        throw AlignmentError(segments.size(), static_cast<std::size_t>(input.rows()), "assign_topics");
    PcaReducer fallback(opt.params.reducer_components);
    const Reducer& reducer = opt.reducer ? *opt.reducer : fallback;
    const Eigen::MatrixXd reduced = reducer.reduce(input, diag);
    const auto labels = density_cluster(reduced, opt.params.min_cluster_size);

    TopicModel m = ctfidf(labels, segments, {opt.params.top_k_words, opt.params.min_doc_freq, opt.stopwords}, diag);
    if (!segment_seeds.empty()) {
        m.segment_seeds = segment_seeds;
        m.segment_seeds.resize(labels.size());
    }
    return merge_topics(std::move(m), opt.params.merge_threshold);
}

inline nlohmann::ordered_json topic_model_json(const TopicModel& m) {
    nlohmann::ordered_json j;
    j["labels"] = m.labels;
    auto& topics = j["topics"] = nlohmann::ordered_json::array();
    for (const auto& t : m.topics) {
        nlohmann::ordered_json tj;
        tj["id"] = t.id;
        tj["size"] = t.size;
        auto& words = tj["top_words"] = nlohmann::ordered_json::array();
        for (const auto& [w, wt] : t.top_words) words.push_back({{"word", w}, {"weight", wt}});
        tj["seed"] = t.seed ? nlohmann::ordered_json(*t.seed) : nlohmann::ordered_json(nullptr);
        if (t.words_empty) tj["words_empty"] = true;
        topics.push_back(std::move(tj));
    }
    auto& log = j["merge_log"] = nlohmann::ordered_json::array();
    for (const auto& e : m.merge_log) log.push_back({{"from", e.from}, {"into", e.into}, {"similarity", e.similarity}});
    return j;
}

}  // namespace mvt::cluster
