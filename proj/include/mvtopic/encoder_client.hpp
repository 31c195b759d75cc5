// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// HTTP client for the encoder sidecar. Requests are JSON
//   {"modality": "text"|"audio"|"visual", "items": [...]}
// where items are transcript strings, {"file","start","end"} audio spans, or frame paths.
// Responses are EMB1 bodies.

#include <chrono>
#include <string>
#include <thread>
#include <variant>
#include <vector>

// Eigen goes first: httplib pulls in <resolv.h>, whose _res macro breaks Eigen.
#include <Eigen/Dense>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mvtopic/corpus.hpp"
#include "mvtopic/error.hpp"

namespace mvt::encoder {

struct AudioSpan {
    std::string file;
    double start = 0.0;
    double end = 0.0;
};

struct EncodeRequest {
    Modality modality = Modality::text;
    std::vector<std::string> texts;        // text, or image paths for visual
    std::vector<AudioSpan> audio_spans;    // audio

    std::size_t size() const { return modality == Modality::audio ? audio_spans.size() : texts.size(); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["modality"] = std::string(to_string(modality));
        auto& items = j["items"] = nlohmann::json::array();
        if (modality == Modality::audio) {
            for (const auto& s : audio_spans) items.push_back({{"file", s.file}, {"start", s.start}, {"end", s.end}});
        } else {
            for (const auto& t : texts) items.push_back(t);
        }
        return j;
    }
};

inline EncodeRequest text_request(const std::vector<Segment>& segments) {
    EncodeRequest r;
    r.modality = Modality::text;
    for (const auto& s : segments) r.texts.push_back(s.text);
    return r;
}

inline EncodeRequest audio_request(const std::vector<Segment>& segments, const std::string& media_file) {
    EncodeRequest r;
    r.modality = Modality::audio;
    for (const auto& s : segments) r.audio_spans.push_back({media_file, s.t_start, s.t_end});
    return r;
}

inline EncodeRequest visual_request(std::vector<std::string> frame_paths) {
    EncodeRequest r;
    r.modality = Modality::visual;
    r.texts = std::move(frame_paths);
    return r;
}

struct RetryPolicy {
    std::size_t attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::seconds timeout{120};
};

struct Url {
    std::string scheme_host_port;
    std::string path;
};

inline Url split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint '" + url + "' must start with http://");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

/// POSTs the request, retrying transport failures and non-2xx replies with exponential
/// backoff. A reply whose row count differs from the request is an AlignmentError and is
/// not retried. `attempts_made` reports how many requests were sent.
inline EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const EncodeRequest& request,
                                        const RetryPolicy& policy = {}, std::size_t* attempts_made = nullptr) {
    const auto url = split_url(endpoint);
    const auto body = request.to_json().dump();
    std::string last_error = "no attempt made";
    auto backoff = policy.initial_backoff;
    for (std::size_t attempt = 1; attempt <= policy.attempts; ++attempt) {
        if (attempts_made) *attempts_made = attempt;
        httplib::Client client(url.scheme_host_port);
        client.set_connection_timeout(policy.timeout);
        client.set_read_timeout(policy.timeout);
        auto res = client.Post(url.path, body, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            EmbeddingMatrix m;
            try {
                m = decode_emb1(res->body);
            } catch (const Error& e) {
                throw StageError(endpoint + ": invalid EMB1 response: " + e.what());
            }
            if (m.rows() != request.size()) throw AlignmentError(request.size(), m.rows(), endpoint);
            m.modality = request.modality;
            return m;
        }
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        if (attempt < policy.attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw StageError(endpoint + ": giving up after " + std::to_string(policy.attempts) + " attempts (" + last_error + ")");
}

}  // namespace mvt::encoder
