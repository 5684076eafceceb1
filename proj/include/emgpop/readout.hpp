// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "binary_io.hpp"
#include "errors.hpp"
#include "lif_encoder.hpp"
#include "util.hpp"

namespace emgpop {

inline constexpr int kDoaCount = 5;

/// Smoothed spike features, one row per timestep and one column per raster row.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    double dt_s = 0.010;

    Eigen::Index steps() const { return values.rows(); }
    Eigen::Index features() const { return values.cols(); }
};

/// Leaky-integrator smoothing of every raster row: y[t] = g*y[t-1] + s[t],
/// g = exp(-dt/tau_filt), y[-1] = 0.
inline FeatureMatrix smooth(const SpikeRaster& raster, double tau_filt_s)
{
    if (!(tau_filt_s > 0.0))
        throw ConfigError("smooth: tau_filt_s must be positive");
    const double g = std::exp(-raster.dt_s() / tau_filt_s);
    FeatureMatrix out;
    out.dt_s = raster.dt_s();
    out.values.resize(static_cast<Eigen::Index>(raster.step_count()), static_cast<Eigen::Index>(raster.neuron_count()));
    for (std::size_t n = 0; n < raster.neuron_count(); ++n) {
        const auto row = raster.row(n);
        double y = 0.0;
        for (std::size_t t = 0; t < row.size(); ++t) {
            y = g * y + row[t];
            out.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n)) = y;
        }
    }
    return out;
}

struct LinearModel {
    Eigen::MatrixXd weights;   // features x 5
    Eigen::VectorXd intercept; // 5
    double ridge_lambda = 0.0;

    Eigen::Index feature_count() const { return weights.rows(); }

    bool operator==(const LinearModel& o) const
    {
        return ridge_lambda == o.ridge_lambda && weights.rows() == o.weights.rows() &&
               weights.cols() == o.weights.cols() && intercept.size() == o.intercept.size() &&
               weights == o.weights && intercept == o.intercept;
    }
};

/// What fit_linear does when the normal matrix is (numerically) singular.
enum class RankPolicy {
    reject,   ///< throw SingularSystemError
    truncate, ///< pivoted LDL^T, dependent directions get zero weight
};

struct FitOptions {
    RankPolicy rank_policy = RankPolicy::reject;
    /// Optional per-feature mask; true forces a zero weight.
    std::vector<bool> excluded;
    /// Reciprocal condition estimate below which the system counts as singular.
    double min_rcond = 1e-13;
    /// Relative pivot size below which a direction is dropped under `truncate`.
    double pivot_tolerance = 1e-11;
};

namespace detail {

// Solves gram * w = rhs for symmetric positive semi-definite gram, dropping
// pivots of the diagonally pivoted LDL^T factorization that are negligible
// relative to the largest one.
inline Eigen::MatrixXd truncated_ldlt_solve(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& rhs, double tol)
{
    // info() reports exactly-zero pivots as a numerical issue; those are the
    // directions dropped below, so only non-finite factors are fatal.
    Eigen::LDLT<Eigen::MatrixXd, Eigen::Lower> ldlt(gram);
    const Eigen::VectorXd d = ldlt.vectorD();
    if (!d.allFinite())
        throw SingularSystemError("fit_linear: LDL^T factorization produced non-finite pivots");
    const double cutoff = tol * std::max(d.cwiseAbs().maxCoeff(), 0.0);
    Eigen::MatrixXd z = ldlt.transpositionsP() * rhs;
    ldlt.matrixL().solveInPlace(z);
    for (Eigen::Index i = 0; i < d.size(); ++i)
        z.row(i) = d(i) > cutoff ? Eigen::RowVectorXd(z.row(i) / d(i)) : Eigen::RowVectorXd::Zero(z.cols());
    ldlt.matrixU().solveInPlace(z);
    return ldlt.transpositionsP().transpose() * z;
}

} // namespace detail

/// Minimizes sum ||Y - XW - b||^2 + lambda ||W||_F^2 in closed form on
/// mean-centered data; the intercept is not penalized.
inline LinearModel fit_linear(const FeatureMatrix& X, const Eigen::MatrixXd& Y, double ridge_lambda,
                              const FitOptions& opts = {})
{
    if (X.steps() != Y.rows())
        throw ConfigError("fit_linear: X has " + std::to_string(X.steps()) + " steps, Y has " +
                          std::to_string(Y.rows()));
    if (Y.cols() != kDoaCount)
        throw ConfigError("fit_linear: Y must have 5 columns");
    if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda))
        throw ConfigError("fit_linear: ridge_lambda must be nonnegative");
    if (X.steps() < 1)
        throw ConfigError("fit_linear: no samples");

    const Eigen::Index n_feat = X.features();
    if (!opts.excluded.empty() && static_cast<Eigen::Index>(opts.excluded.size()) != n_feat)
        throw ConfigError("fit_linear: exclusion mask has " + std::to_string(opts.excluded.size()) +
                          " entries for " + std::to_string(n_feat) + " features");
    const Eigen::RowVectorXd x_mean = X.values.colwise().mean();
    const Eigen::RowVectorXd y_mean = Y.colwise().mean();

    std::vector<Eigen::Index> active;
    active.reserve(static_cast<std::size_t>(n_feat));
    for (Eigen::Index f = 0; f < n_feat; ++f)
        if (opts.excluded.empty() || !opts.excluded[static_cast<std::size_t>(f)])
            active.push_back(f);
    const auto n_active = static_cast<Eigen::Index>(active.size());

    LinearModel m;
    m.ridge_lambda = ridge_lambda;
    m.weights = Eigen::MatrixXd::Zero(n_feat, kDoaCount);

    if (n_active > 0) {
        const bool reject = opts.rank_policy == RankPolicy::reject;
        if (reject && ridge_lambda == 0.0 && X.steps() <= n_active)
            throw SingularSystemError("fit_linear: " + std::to_string(X.steps()) + " samples for " +
                                      std::to_string(n_active) +
                                      " features is ill-posed without regularization; use ridge_lambda > 0");
        Eigen::MatrixXd Xc(X.steps(), n_active);
        for (Eigen::Index j = 0; j < n_active; ++j)
            Xc.col(j) = X.values.col(active[static_cast<std::size_t>(j)]).array() -
                        x_mean(active[static_cast<std::size_t>(j)]);
        const Eigen::MatrixXd Yc = Y.rowwise() - y_mean;

        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_active, n_active);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(Xc.transpose());
        gram.diagonal().array() += ridge_lambda;
        const Eigen::MatrixXd rhs = Xc.transpose() * Yc;

        Eigen::MatrixXd w;
        Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(gram);
        const bool ok = llt.info() == Eigen::Success && llt.rcond() >= opts.min_rcond;
        if (ok)
            w = llt.solve(rhs);
        else if (!reject)
            w = detail::truncated_ldlt_solve(gram, rhs, opts.pivot_tolerance);
        else
            throw SingularSystemError("fit_linear: normal matrix is singular or rank-deficient (rcond " +
                                      format_double(llt.info() == Eigen::Success ? llt.rcond() : 0.0) +
                                      "); use ridge_lambda > 0");
        for (Eigen::Index j = 0; j < n_active; ++j)
            m.weights.row(active[static_cast<std::size_t>(j)]) = w.row(j);
    }
    m.intercept = (y_mean - x_mean * m.weights).transpose();
    if (!m.weights.allFinite() || !m.intercept.allFinite())
        throw SingularSystemError("fit_linear: non-finite solution");
    return m;
}

inline Eigen::MatrixXd predict(const LinearModel& model, const FeatureMatrix& X)
{
    if (X.features() != model.feature_count())
        throw ConfigError("predict: X has " + std::to_string(X.features()) + " features, model expects " +
                          std::to_string(model.feature_count()));
    Eigen::MatrixXd out = X.values * model.weights;
    out.rowwise() += model.intercept.transpose();
    return out;
}

// -- model file -------------------------------------------------------------
//
// Layout (little-endian):
//   8 bytes  magic "EPLINMOD"
//   u32      version (1)
//   u32      feature count F
//   u32      output count (always 5)
//   f64      ridge_lambda
//   F*5 f64  weights, row-major (feature-major)
//   5 f64    intercept

inline constexpr std::string_view kModelMagic = "EPLINMOD";
inline constexpr std::uint32_t kModelVersion = 1;

inline void write_model(const LinearModel& m, const std::filesystem::path& path)
{
    binio::Writer w;
    w.bytes(kModelMagic);
    w.uint<std::uint32_t>(kModelVersion);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(m.weights.rows()));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(m.weights.cols()));
    w.f64(m.ridge_lambda);
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < m.weights.cols(); ++c)
            w.f64(m.weights(r, c));
    for (Eigen::Index c = 0; c < m.intercept.size(); ++c)
        w.f64(m.intercept(c));
    w.save(path);
}

inline LinearModel read_model(const std::filesystem::path& path)
{
    auto rd = binio::Reader::from_file(path);
    if (rd.bytes(kModelMagic.size()) != kModelMagic)
        throw DataError(rd.what() + ": not a linear model file");
    if (const auto v = rd.uint<std::uint32_t>(); v != kModelVersion)
        throw FormatVersionError(rd.what() + ": model version " + std::to_string(v) + ", expected " +
                                 std::to_string(kModelVersion));
    const auto f = rd.uint<std::uint32_t>();
    const auto o = rd.uint<std::uint32_t>();
    if (o != kDoaCount)
        throw DimensionError(rd.what() + ": model has " + std::to_string(o) + " outputs, expected 5");
    LinearModel m;
    m.ridge_lambda = rd.f64();
    rd.need((static_cast<std::size_t>(f) + 1) * kDoaCount * 8);
    m.weights.resize(f, kDoaCount);
    for (Eigen::Index r = 0; r < m.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < kDoaCount; ++c)
            m.weights(r, c) = rd.f64();
    m.intercept.resize(kDoaCount);
    for (Eigen::Index c = 0; c < kDoaCount; ++c)
        m.intercept(c) = rd.f64();
    rd.expect_end();
    return m;
}

} // namespace emgpop
