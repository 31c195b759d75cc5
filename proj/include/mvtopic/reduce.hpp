// Copyright (C) 2026 The mvtopic Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "mvtopic/error.hpp"

namespace mvt::cluster {

/// Dimensionality reducer used ahead of density clustering.
class Reducer {
public:
    virtual ~Reducer() = default;
    virtual Eigen::MatrixXd reduce(const Eigen::MatrixXd& X, Diagnostics* diag = nullptr) const = 0;
    virtual std::string name() const = 0;
};

struct PcaFit {
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd components;     // d x c, columns are unit loadings
    Eigen::VectorXd variances;      // c retained eigenvalues, descending
    Eigen::VectorXd all_variances;  // every eigenvalue of the covariance, descending
};

/// Rows scaled to unit L2 norm; zero rows stay zero.
inline Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out = X;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double n = out.row(i).norm();
        if (n > 0.0) out.row(i) /= n;
    }
    return out;
}

/// PCA on the given rows (no row normalization here). Covariance uses N-1.
/// Each component is sign-fixed so that its largest-magnitude loading is positive.
inline PcaFit fit_pca(const Eigen::MatrixXd& X, std::size_t components) {
    const auto n = X.rows();
    const auto d = X.cols();
    PcaFit fit;
    fit.mean = n > 0 ? Eigen::RowVectorXd(X.colwise().mean()) : Eigen::RowVectorXd::Zero(d);
    if (n < 2 || d == 0) {
        fit.components.resize(d, 0);
        fit.variances.resize(0);
        fit.all_variances = Eigen::VectorXd::Zero(d);
        return fit;
    }
    const Eigen::MatrixXd centered = X.rowwise() - fit.mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd values = eig.eigenvalues().reverse();
    const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

    const auto c = static_cast<Eigen::Index>(std::min<std::size_t>(components, static_cast<std::size_t>(d)));
    fit.all_variances = values;
    fit.variances = values.head(c);
    fit.components = vectors.leftCols(c);
    for (Eigen::Index k = 0; k < c; ++k) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < d; ++r) {
            // Tolerance keeps the choice stable when two loadings tie up to rounding.
            if (std::abs(fit.components(r, k)) > best + 1e-12) {
                best = std::abs(fit.components(r, k));
                arg = r;
            }
        }
        if (fit.components(arg, k) < 0.0) fit.components.col(k) *= -1.0;
    }
    return fit;
}

/// Deterministic stand-in for UMAP: PCA over L2-normalized rows (cosine geometry).
class PcaReducer final : public Reducer {
public:
    explicit PcaReducer(std::size_t components = 8) : components_(components) {}

    Eigen::MatrixXd reduce(const Eigen::MatrixXd& X, Diagnostics* diag = nullptr) const override {
        std::size_t c = components_;
        const auto n = static_cast<std::size_t>(X.rows());
        if (n < c) {
            const std::size_t capped = n > 0 ? n - 1 : 0;
            mvt::detail::warn(diag, "reduce: only " + std::to_string(n) + " rows, using " + std::to_string(capped) +
                                        " components instead of " + std::to_string(c));
            c = capped;
        }
        const Eigen::MatrixXd Xn = normalize_rows(X);
        const auto fit = fit_pca(Xn, c);
        return (Xn.rowwise() - fit.mean) * fit.components;
    }

    std::string name() const override { return "pca(" + std::to_string(components_) + ", cosine)"; }
    std::size_t components() const { return components_; }

private:
    std::size_t components_;
};

}  // namespace mvt::cluster
