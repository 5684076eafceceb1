// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

#include "errors.hpp"

namespace emgpop {

struct MaeReport {
    double overall_deg = 0.0;
    std::array<double, 5> per_doa_deg{};
    std::size_t n_infer = 0;
};

/// Mean absolute error over all inferences and DoAs, plus the per-DoA breakdown.
inline MaeReport mae(const Eigen::MatrixXd& y, const Eigen::MatrixXd& y_hat)
{
    if (y.rows() != y_hat.rows() || y.cols() != y_hat.cols())
        throw ConfigError("mae: shape mismatch (" + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                          " vs " + std::to_string(y_hat.rows()) + "x" + std::to_string(y_hat.cols()) + ")");
    if (y.cols() != 5)
        throw ConfigError("mae: expected 5 DoA columns");
    if (y.rows() < 1)
        throw ConfigError("mae: need at least one inference");

    MaeReport r;
    r.n_infer = static_cast<std::size_t>(y.rows());
    double total = 0.0;
    std::array<double, 5> col{};
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index d = 0; d < 5; ++d) {
            const double e = std::abs(y_hat(i, d) - y(i, d));
            total += e;
            col[static_cast<std::size_t>(d)] += e;
        }
    const auto n = static_cast<double>(y.rows());
    r.overall_deg = total / (n * 5.0);
    for (std::size_t d = 0; d < 5; ++d)
        r.per_doa_deg[d] = col[d] / n;
    return r;
}

struct SubjectAggregate {
    double mean_deg = 0.0;
    double std_deg = 0.0;
};

/// Mean and sample standard deviation (n-1; 0 for a single report) of overall MAE.
inline SubjectAggregate aggregate_subjects(std::span<const MaeReport> reports)
{
    if (reports.empty())
        throw ConfigError("aggregate_subjects: no reports");
    double sum = 0.0;
    for (const auto& r : reports)
        sum += r.overall_deg;
    const auto n = static_cast<double>(reports.size());
    SubjectAggregate a;
    a.mean_deg = sum / n;
    if (reports.size() > 1) {
        double ss = 0.0;
        for (const auto& r : reports)
            ss += (r.overall_deg - a.mean_deg) * (r.overall_deg - a.mean_deg);
        a.std_deg = std::sqrt(ss / (n - 1.0));
    }
    return a;
}

inline void to_json(nlohmann::json& j, const MaeReport& r)
{
    j = nlohmann::json{{"overall_deg", r.overall_deg}, {"per_doa_deg", r.per_doa_deg}, {"n_infer", r.n_infer}};
}

inline void from_json(const nlohmann::json& j, MaeReport& r)
{
    j.at("overall_deg").get_to(r.overall_deg);
    j.at("per_doa_deg").get_to(r.per_doa_deg);
    j.at("n_infer").get_to(r.n_infer);
}

} // namespace emgpop
