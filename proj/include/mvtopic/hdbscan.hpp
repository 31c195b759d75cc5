// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// HDBSCAN over Euclidean distances:
//   1. core distance = distance to the min_samples-th nearest neighbour (the point itself counts);
//   2. mutual reachability mr(a,b) = max(core(a), core(b), d(a,b));
//   3. minimum spanning tree of the mutual-reachability graph (Prim, O(n^2));
//   4. single-linkage hierarchy condensed at min_cluster_size;
//   5. excess-of-mass selection (the root is never selected).
// Points that fall out of a selected cluster keep its label; everything else is -1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace mvt::cluster {

inline constexpr int kNoise = -1;

struct CondensedRow {
    std::size_t parent;
    std::size_t child;
    double lambda;
    std::size_t child_size;
};

struct HdbscanResult {
    std::vector<int> labels;
    std::vector<CondensedRow> condensed;
    std::vector<double> stability;  // indexed by cluster label (selected clusters only)
};

namespace detail {

struct LinkageNode {
    std::size_t left;
    std::size_t right;
    double distance;
    std::size_t size;
};

// Distances below this are treated as duplicates so that lambda stays finite.
inline constexpr double kMinDistance = 1e-12;

inline double lambda_of(double distance) { return 1.0 / std::max(distance, kMinDistance); }

inline Eigen::MatrixXd pairwise_euclidean(const Eigen::MatrixXd& Y) {
    const auto n = Y.rows();
    Eigen::MatrixXd D(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        D(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = (Y.row(i) - Y.row(j)).norm();
    }
    return D;
}

inline std::vector<double> core_distances(const Eigen::MatrixXd& D, std::size_t min_samples) {
    const auto n = static_cast<std::size_t>(D.rows());
    std::vector<double> core(n);
    std::vector<double> row(n);
    const std::size_t kth = std::min(min_samples > 0 ? min_samples - 1 : 0, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) row[j] = D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kth), row.end());
        core[i] = row[kth];
    }
    return core;
}

struct Edge {
    std::size_t a;
    std::size_t b;
    double w;
    double raw = 0.0;  // plain distance, breaks ties between equal reachability weights
};

inline std::vector<Edge> mutual_reachability_mst(const Eigen::MatrixXd& D, const std::vector<double>& core) {
    const auto n = core.size();
    std::vector<Edge> edges;
    edges.reserve(n - 1);
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<double> best_raw(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t next = n;
        double next_w = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            const double raw = D(static_cast<Eigen::Index>(current), static_cast<Eigen::Index>(j));
            const double mr = std::max({core[current], core[j], raw});
            if (mr < best[j] || (mr == best[j] && raw < best_raw[j])) {
                best[j] = mr;
                best_raw[j] = raw;
                from[j] = current;
            }
            if (best[j] < next_w) {
                next_w = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push_back({from[next], next, next_w, best_raw[next]});
        current = next;
    }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& x, const Edge& y) { return x.w != y.w ? x.w < y.w : x.raw < y.raw; });
    return edges;
}

/// Nodes 0..n-1 are points, n..2n-2 are merges in ascending distance.
inline std::vector<LinkageNode> single_linkage(const std::vector<Edge>& edges, std::size_t n) {
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::vector<std::size_t> size(2 * n - 1, 1);
    auto find = [&](std::size_t x) {
        std::size_t root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            auto up = parent[x];
            parent[x] = root;
            x = up;
        }
        return root;
    };
    std::vector<LinkageNode> nodes;
    nodes.reserve(n - 1);
    std::size_t next = n;
    for (const auto& e : edges) {
        const auto ra = find(e.a), rb = find(e.b);
        nodes.push_back({ra, rb, e.w, size[ra] + size[rb]});
        parent[ra] = parent[rb] = next;
        size[next] = size[ra] + size[rb];
        ++next;
    }
    return nodes;
}

}  // namespace detail

/// Condensed tree, stabilities and flat labels. min_samples defaults to min_cluster_size.
inline HdbscanResult hdbscan(const Eigen::MatrixXd& Y, std::size_t min_cluster_size,
                             std::optional<std::size_t> min_samples = std::nullopt) {
    const auto n = static_cast<std::size_t>(Y.rows());
    HdbscanResult result;
    result.labels.assign(n, kNoise);
    if (n < 2) return result;
    const std::size_t mcs = std::max<std::size_t>(min_cluster_size, 2);

    const Eigen::MatrixXd D = detail::pairwise_euclidean(Y);
    const auto core = detail::core_distances(D, min_samples.value_or(mcs));
    const auto edges = detail::mutual_reachability_mst(D, core);
    const auto linkage = detail::single_linkage(edges, n);

    auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : linkage[node - n].size; };
    auto collect_points = [&](std::size_t node, std::vector<std::size_t>& out) {
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            auto x = stack.back();
            stack.pop_back();
            if (x < n) {
                out.push_back(x);
            } else {
                stack.push_back(linkage[x - n].right);
                stack.push_back(linkage[x - n].left);
            }
        }
    };

    // Condense. Cluster ids start at n (root) and grow in BFS order.
    const std::size_t root_node = 2 * n - 2;
    std::vector<std::size_t> relabel(2 * n - 1, 0);
    relabel[root_node] = n;
    std::size_t next_cluster = n + 1;
    std::vector<CondensedRow>& rows = result.condensed;
    std::deque<std::size_t> queue{root_node};
    std::vector<std::size_t> fallen;
    while (!queue.empty()) {
        const auto node = queue.front();
        queue.pop_front();
        const auto& link = linkage[node - n];
        const double lambda = detail::lambda_of(link.distance);
        const auto parent_id = relabel[node];
        const auto lsize = node_size(link.left), rsize = node_size(link.right);
        const bool lbig = lsize >= mcs, rbig = rsize >= mcs;

        auto spill = [&](std::size_t child) {
            fallen.clear();
            collect_points(child, fallen);
            for (auto p : fallen) rows.push_back({parent_id, p, lambda, 1});
        };

        if (lbig && rbig) {
            for (auto child : {link.left, link.right}) {
                relabel[child] = next_cluster++;
                rows.push_back({parent_id, relabel[child], lambda, node_size(child)});
                queue.push_back(child);
            }
        } else if (!lbig && !rbig) {
            spill(link.left);
            spill(link.right);
        } else {
            const auto keep = lbig ? link.left : link.right;
            const auto drop = lbig ? link.right : link.left;
            spill(drop);
            relabel[keep] = parent_id;
            queue.push_back(keep);
        }
    }

    // Births and stabilities.
    const std::size_t n_clusters = next_cluster - n;
    std::vector<double> birth(n_clusters, 0.0);
    std::vector<std::size_t> cluster_parent(n_clusters, 0);
    std::vector<std::vector<std::size_t>> cluster_children(n_clusters);
    std::vector<std::size_t> point_parent(n, n);
    for (const auto& r : rows) {
        if (r.child >= n) {
            birth[r.child - n] = r.lambda;
            cluster_parent[r.child - n] = r.parent - n;
            cluster_children[r.parent - n].push_back(r.child - n);
        } else {
            point_parent[r.child] = r.parent - n;
        }
    }
    std::vector<double> stability(n_clusters, 0.0);
    for (const auto& r : rows)
        stability[r.parent - n] += (r.lambda - birth[r.parent - n]) * static_cast<double>(r.child_size);

    // Excess of mass, leaves first. A cluster with no persistence is never selected.
    std::vector<bool> selected(n_clusters, false);
    for (std::size_t c = n_clusters; c-- > 1;) {
        double subtree = 0.0;
        for (auto child : cluster_children[c]) subtree += stability[child];
        if (subtree > stability[c] || stability[c] <= 0.0) {
            selected[c] = false;
            stability[c] = subtree;
        } else {
            selected[c] = true;
            std::vector<std::size_t> stack(cluster_children[c]);
            while (!stack.empty()) {
                auto x = stack.back();
                stack.pop_back();
                selected[x] = false;
                for (auto y : cluster_children[x]) stack.push_back(y);
            }
        }
    }

    std::vector<int> label_of(n_clusters, kNoise);
    int next_label = 0;
    for (std::size_t c = 1; c < n_clusters; ++c)
        if (selected[c]) {
            label_of[c] = next_label++;
            result.stability.push_back(stability[c]);
        }
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t c = point_parent[p];
        while (c != 0 && !selected[c]) c = cluster_parent[c];
        result.labels[p] = selected[c] ? label_of[c] : kNoise;
    }
    return result;
}

inline std::vector<int> density_cluster(const Eigen::MatrixXd& Y, std::size_t min_cluster_size) {
    return hdbscan(Y, min_cluster_size).labels;
}

}  // namespace mvt::cluster
