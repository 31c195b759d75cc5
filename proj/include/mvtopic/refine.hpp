// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mvtopic/corpus.hpp"
#include "mvtopic/text.hpp"
#include "mvtopic/topics.hpp"

namespace mvt::refine {

enum class SummaryMethod { tfidf_centroid, token_frequency_fallback };

inline std::string_view to_string(SummaryMethod m) {
    return m == SummaryMethod::tfidf_centroid ? "tfidf_centroid" : "token_frequency_fallback";
}

struct Sentence {
    std::string text;
    std::size_t segment_index = 0;
    std::size_t position = 0;  // order within the segment
    double score = 0.0;
};

struct TopicSummary {
    int topic_id = 0;
    std::vector<Sentence> sentences;
    SummaryMethod method = SummaryMethod::tfidf_centroid;
    bool empty = false;  // no usable text in the topic
};

inline constexpr std::size_t kMinSentenceTokens = 3;

/// Splits on '.', '!' or '?' followed by whitespace or end of text. Fragments with fewer
/// than three tokens are joined to the next one (the last one to its predecessor).
/// Every returned sentence is a verbatim substring of `text`.
inline std::vector<std::string> split_sentences(std::string_view text) {
    struct Span {
        std::size_t begin, end;
    };
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    std::vector<Span> raw;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_space(text[i + 1]))) {
            raw.push_back({start, i + 1});
            start = i + 1;
        }
    }
    if (start < text.size()) raw.push_back({start, text.size()});

    auto trim = [&](Span s) {
        while (s.begin < s.end && is_space(text[s.begin])) ++s.begin;
        while (s.end > s.begin && is_space(text[s.end - 1])) --s.end;
        return s;
    };
    auto tokens = [&](Span s) { return text::tokenize_spans(text.substr(s.begin, s.end - s.begin)).size(); };

    std::vector<Span> merged;
    std::optional<std::size_t> pending;  // begin of a short fragment waiting for its successor
    for (auto s : raw) {
        s = trim(s);
        if (s.begin >= s.end) continue;
        if (pending) s.begin = *pending;
        if (tokens(s) < kMinSentenceTokens) {
            pending = s.begin;
            continue;
        }
        pending.reset();
        merged.push_back(s);
    }
    if (pending) {
        Span tail = trim({*pending, text.size()});
        if (!merged.empty())
            merged.back().end = tail.end;
        else if (tail.begin < tail.end)
            merged.push_back(tail);
    }
    std::vector<std::string> out;
    for (auto s : merged) out.emplace_back(text.substr(s.begin, s.end - s.begin));
    return out;
}

/// TF-IDF centroid extraction over the topic's sentences, with smoothed idf
/// ln((1+N)/(1+df)) + 1. When stopword removal leaves no terms, sentences are scored by
/// the summed topic-level frequency of their tokens instead (scaled so the best is 1).
inline TopicSummary summarize_topic(const std::vector<Segment>& topic_segments, std::size_t k_max,
                                    const text::StopwordSet& stopwords = text::default_stopwords(), int topic_id = 0) {
    TopicSummary summary;
    summary.topic_id = topic_id;
    std::vector<Sentence> sentences;
    for (const auto& seg : topic_segments) {
        auto parts = split_sentences(seg.text);
        for (std::size_t p = 0; p < parts.size(); ++p) sentences.push_back({std::move(parts[p]), seg.index, p, 0.0});
    }
    if (sentences.empty()) {
        summary.empty = true;
        return summary;
    }

    std::vector<std::vector<std::string>> terms(sentences.size());
    std::map<std::string, std::size_t> df;
    for (std::size_t j = 0; j < sentences.size(); ++j) {
        for (auto& t : text::tokenize(sentences[j].text, 2))
            if (!stopwords.count(t)) terms[j].push_back(std::move(t));
        std::set<std::string> uniq(terms[j].begin(), terms[j].end());
        for (const auto& t : uniq) ++df[t];
    }

    if (!df.empty()) {
        std::map<std::string, std::size_t> column;
        for (const auto& [t, _] : df) column.emplace(t, column.size());
        const double n = static_cast<double>(sentences.size());
        Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sentences.size()),
                                                  static_cast<Eigen::Index>(column.size()));
        for (std::size_t j = 0; j < sentences.size(); ++j)
            for (const auto& t : terms[j]) X(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(column[t])) += 1.0;
        for (const auto& [t, c] : column)
            X.col(static_cast<Eigen::Index>(c)) *= std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
        const Eigen::RowVectorXd centroid = X.colwise().mean();
        const double cn = centroid.norm();
        for (std::size_t j = 0; j < sentences.size(); ++j) {
            const double sn = X.row(static_cast<Eigen::Index>(j)).norm();
            sentences[j].score = (sn == 0.0 || cn == 0.0) ? 0.0 : X.row(static_cast<Eigen::Index>(j)).dot(centroid) / (sn * cn);
        }
        summary.method = SummaryMethod::tfidf_centroid;
    } else {
        std::map<std::string, double> tf;
        std::vector<std::vector<std::string>> raw(sentences.size());
        for (std::size_t j = 0; j < sentences.size(); ++j) {
            raw[j] = text::tokenize(sentences[j].text, 1);
            for (const auto& t : raw[j]) tf[t] += 1.0;
        }
        double best = 0.0;
        for (std::size_t j = 0; j < sentences.size(); ++j) {
            double s = 0.0;
            for (const auto& t : raw[j]) s += tf[t];
            sentences[j].score = s;
            best = std::max(best, s);
        }
        if (best > 0.0)
            for (auto& s : sentences) s.score /= best;
        summary.method = SummaryMethod::token_frequency_fallback;
    }

    std::stable_sort(sentences.begin(), sentences.end(), [](const Sentence& a, const Sentence& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.segment_index != b.segment_index) return a.segment_index < b.segment_index;
        return a.position < b.position;
    });
    if (sentences.size() > k_max) sentences.resize(k_max);
    summary.sentences = std::move(sentences);
    return summary;
}

inline std::vector<TopicSummary> summarize_model(const cluster::TopicModel& model, const std::vector<Segment>& segments,
                                                 std::size_t k_max,
                                                 const text::StopwordSet& stopwords = text::default_stopwords()) {
    std::vector<TopicSummary> out;
    for (const auto& t : model.topics) {
        std::vector<Segment> members;
        for (std::size_t i = 0; i < segments.size(); ++i)
            if (model.labels[i] == t.id) members.push_back(segments[i]);
        out.push_back(summarize_topic(members, k_max, stopwords, t.id));
    }
    return out;
}

inline nlohmann::ordered_json summary_json(const TopicSummary& s) {
    nlohmann::ordered_json j;
    j["method"] = std::string(to_string(s.method));
    if (s.empty) j["empty"] = true;
    auto& arr = j["sentences"] = nlohmann::ordered_json::array();
    for (const auto& sent : s.sentences)
        arr.push_back({{"text", sent.text}, {"score", sent.score}, {"segment_index", sent.segment_index}});
    return j;
}

}  // namespace mvt::refine
