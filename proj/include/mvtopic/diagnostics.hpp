// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Core>

#include "mvtopic/corpus.hpp"
#include "mvtopic/hdbscan.hpp"
#include "mvtopic/reduce.hpp"
#include "mvtopic/topics.hpp"

namespace mvt::diagnostics {

/// Speaker-style labels from the audio embeddings alone (-1 = noise). Metadata only:
/// nothing on the topic path reads these.
inline std::vector<int> speaker_style_labels(const EmbeddingMatrix& audio, const cluster::ClusterParams& params,
                                             Diagnostics* diag = nullptr) {
    params.validate();
    const cluster::PcaReducer reducer(params.reducer_components);
    const Eigen::MatrixXd reduced = reducer.reduce(audio.data.cast<double>(), diag);
    return cluster::density_cluster(reduced, params.min_cluster_size);
}

}  // namespace mvt::diagnostics
