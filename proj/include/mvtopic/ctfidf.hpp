// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Class-based TF-IDF. Every topic's pooled transcripts form one class c:
//   weight(t, c) = tf(t, c) * log(1 + A / f(t))
// where A is the mean token count per class and f(t) the frequency of t summed over classes.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvtopic/corpus.hpp"
#include "mvtopic/text.hpp"

namespace mvt::cluster {

struct Vocabulary {
    std::vector<std::string> terms;  // sorted
    std::unordered_map<std::string, std::size_t> index;

    std::size_t size() const { return terms.size(); }
};

struct VocabularyOptions {
    std::size_t min_token_length = 2;
    std::size_t min_doc_freq = 2;
    const text::StopwordSet* stopwords = nullptr;
};

inline std::vector<std::string> filtered_tokens(const std::string& s, const VocabularyOptions& opt) {
    auto toks = text::tokenize(s, opt.min_token_length);
    if (opt.stopwords)
        std::erase_if(toks, [&](const std::string& t) { return opt.stopwords->count(t) != 0; });
    return toks;
}

/// Terms whose document frequency over `documents` reaches min_doc_freq.
inline Vocabulary build_vocabulary(const std::vector<std::string>& documents, const VocabularyOptions& opt) {
    std::map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
        auto toks = filtered_tokens(doc, opt);
        std::set<std::string> uniq(toks.begin(), toks.end());
        for (const auto& t : uniq) ++df[t];
    }
    Vocabulary v;
    for (const auto& [term, count] : df)
        if (count >= opt.min_doc_freq) {
            v.index.emplace(term, v.terms.size());
            v.terms.push_back(term);
        }
    return v;
}

/// Term counts of one document restricted to the vocabulary.
inline Eigen::VectorXd term_counts(const std::string& doc, const Vocabulary& vocab, const VocabularyOptions& opt) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
    for (const auto& t : filtered_tokens(doc, opt))
        if (auto it = vocab.index.find(t); it != vocab.index.end()) counts(static_cast<Eigen::Index>(it->second)) += 1.0;
    return counts;
}

/// Rows are classes, columns vocabulary terms.
inline Eigen::MatrixXd ctfidf_weights(const Eigen::MatrixXd& class_counts) {
    const auto T = class_counts.rows();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(T, class_counts.cols());
    if (T == 0) return W;
    const double avg_tokens = class_counts.sum() / static_cast<double>(T);
    const Eigen::RowVectorXd freq = class_counts.colwise().sum();
    for (Eigen::Index t = 0; t < class_counts.cols(); ++t) {
        if (freq(t) <= 0.0) continue;
        const double idf = std::log(1.0 + avg_tokens / freq(t));
        W.col(t) = class_counts.col(t) * idf;
    }
    return W;
}

/// Highest-weight terms, ties broken lexicographically; zero weights are skipped.
inline std::vector<std::pair<std::string, double>> top_terms(const Eigen::VectorXd& weights, const Vocabulary& vocab,
                                                             std::size_t k) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < vocab.size(); ++i)
        if (weights(static_cast<Eigen::Index>(i)) > 0.0) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double wa = weights(static_cast<Eigen::Index>(a)), wb = weights(static_cast<Eigen::Index>(b));
        return wa != wb ? wa > wb : vocab.terms[a] < vocab.terms[b];
    });
    if (order.size() > k) order.resize(k);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(order.size());
    for (auto i : order) out.emplace_back(vocab.terms[i], weights(static_cast<Eigen::Index>(i)));
    return out;
}

}  // namespace mvt::cluster
