// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mvtopic/error.hpp"
#include "mvtopic/frameselect.hpp"

namespace mvt::frames {

/// Decodes any format OpenCV reads into an RGB raster.
inline Raster load_raster(const std::filesystem::path& path) {
    const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw InputError("cannot decode image " + path.string());
    Raster r;
    r.width = static_cast<std::size_t>(bgr.cols);
    r.height = static_cast<std::size_t>(bgr.rows);
    r.rgb.resize(r.width * r.height * 3);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            auto* px = &r.rgb[(static_cast<std::size_t>(y) * r.width + static_cast<std::size_t>(x)) * 3];
            px[0] = row[x][2];
            px[1] = row[x][1];
            px[2] = row[x][0];
        }
    }
    return r;
}

/// Encodes a raster to PNG, mainly for fixtures.
inline void save_raster(const Raster& r, const std::filesystem::path& path) {
    cv::Mat bgr(static_cast<int>(r.height), static_cast<int>(r.width), CV_8UC3);
    for (std::size_t y = 0; y < r.height; ++y)
        for (std::size_t x = 0; x < r.width; ++x)
            bgr.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x)) = {r.at(x, y, 2), r.at(x, y, 1), r.at(x, y, 0)};
    if (!cv::imwrite(path.string(), bgr)) throw InputError("cannot write image " + path.string());
}

}  // namespace mvt::frames
