// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <Eigen/Core>

#include "mvtopic/error.hpp"
#include "mvtopic/text.hpp"

namespace mvt {

/// word -> vector, all of one dimensionality. Keys are stored lowercased.
class WordVectorTable {
public:
    void add(const std::string& word, Eigen::VectorXd v) {
        if (!table_.empty() && static_cast<std::size_t>(v.size()) != dims_)
            throw DimensionError("word vector for '" + word + "' has " + std::to_string(v.size()) + " dims, expected " +
                                 std::to_string(dims_));
        dims_ = static_cast<std::size_t>(v.size());
        table_.insert_or_assign(text::lowercase(word), std::move(v));
    }

    const Eigen::VectorXd* find(const std::string& word) const {
        auto it = table_.find(text::lowercase(word));
        return it == table_.end() ? nullptr : &it->second;
    }

    /// Exact entry, else the mean of the phrase's covered tokens.
    std::optional<Eigen::VectorXd> lookup_phrase(const std::string& phrase) const {
        if (auto* v = find(phrase)) return *v;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims_));
        std::size_t hits = 0;
        for (const auto& tok : text::tokenize(phrase, 1))
            if (auto* v = find(tok)) {
                sum += *v;
                ++hits;
            }
        if (hits == 0) return std::nullopt;
        return sum / static_cast<double>(hits);
    }

    std::size_t size() const { return table_.size(); }
    std::size_t dims() const { return dims_; }
    bool empty() const { return table_.empty(); }

private:
    std::map<std::string, Eigen::VectorXd> table_;
    std::size_t dims_ = 0;
};

/// Plain text: one word per line followed by whitespace-separated decimals.
inline WordVectorTable parse_word_vectors(std::istream& in) {
    WordVectorTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string word;
        if (!(ss >> word)) continue;
        std::vector<double> values;
        std::string cell;
        while (ss >> cell) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("bad word-vector value '" + cell + "'", line_no);
            }
        }
        if (values.empty()) throw ParseError("word '" + word + "' has no vector", line_no);
        try {
            table.add(word, Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
        } catch (const DimensionError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return table;
}

inline WordVectorTable load_word_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open word-vector table " + path.string());
    return parse_word_vectors(in);
}

}  // namespace mvt
