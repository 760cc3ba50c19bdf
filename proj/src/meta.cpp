#include "trajmeta/meta.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "trajmeta/errors.hpp"

namespace trajmeta {

PooledEffect pool(std::span<const double> effects, std::span<const double> variances) {
    if (effects.size() != variances.size()) throw DataError("pool: length mismatch");
    const int k = static_cast<int>(effects.size());
    if (k < 2) throw DataError("pool: need at least 2 configurations");

    double w_sum = 0.0, w2_sum = 0.0, wy_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        if (variances[i] <= 0.0) throw DataError("pool: non-positive variance");
        const double w = 1.0 / variances[i];
        w_sum += w;
        w2_sum += w * w;
        wy_sum += w * effects[i];
    }
    PooledEffect out;
    out.k = k;
    out.fixed_effect = wy_sum / w_sum;

    for (int i = 0; i < k; ++i) {
        const double d = effects[i] - out.fixed_effect;
        out.q += d * d / variances[i];
    }
    const double df = static_cast<double>(k - 1);
    out.tau2 = std::max(0.0, (out.q - df) / (w_sum - w2_sum / w_sum));
    out.i2 = out.q == 0.0 ? 0.0 : std::max(0.0, 1.0 - df / out.q) * 100.0;

    double wr_sum = 0.0, wry_sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const double w = 1.0 / (variances[i] + out.tau2);
        wr_sum += w;
        wry_sum += w * effects[i];
    }
    out.pooled_effect = wry_sum / wr_sum;
    return out;
}

std::string_view heterogeneity_class(double i2) {
    if (i2 < 25.0) return "universal";
    if (i2 < 75.0) return "moderate";
    return "config_specific";
}

DirectionSplit direction_split(std::span<const double> effects, double zero_band) {
    DirectionSplit out;
    for (double e : effects) {
        if (e > zero_band) ++out.n_pos;
        else if (e < -zero_band) ++out.n_neg;
        else ++out.n_zero;
    }
    return out;
}

std::string_view to_string(Moderator m) {
    return m == Moderator::framework ? "framework" : "llm_family";
}

Moderator moderator_from_string(std::string_view s) {
    if (s == "framework") return Moderator::framework;
    if (s == "llm_family") return Moderator::llm_family;
    throw DataError("unknown moderator '" + std::string(s) + "'");
}

std::string moderator_value(const ConfigurationId& config, Moderator m) {
    return m == Moderator::framework ? config.framework : config.llm_family;
}

ModeratorFit meta_regress(std::span<const double> effects, std::span<const double> variances,
                          std::span<const std::string> labels, Moderator which) {
    const int k = static_cast<int>(effects.size());
    if (static_cast<int>(variances.size()) != k || static_cast<int>(labels.size()) != k) {
        throw DataError("meta_regress: length mismatch");
    }

    ModeratorFit fit;
    fit.moderator = which;
    fit.k = k;
    fit.levels.assign(labels.begin(), labels.end());
    std::sort(fit.levels.begin(), fit.levels.end());
    fit.levels.erase(std::unique(fit.levels.begin(), fit.levels.end()), fit.levels.end());
    const int l = static_cast<int>(fit.levels.size());
    if (l < 2) throw DataError("meta_regress: moderator has a single level");
    if (k < l + 1) throw DataError("meta_regress: no residual degrees of freedom");

    std::vector<int> level_of(static_cast<std::size_t>(k));
    std::vector<int> level_count(static_cast<std::size_t>(l), 0);
    for (int i = 0; i < k; ++i) {
        const auto it = std::lower_bound(fit.levels.begin(), fit.levels.end(), labels[i]);
        level_of[static_cast<std::size_t>(i)] = static_cast<int>(it - fit.levels.begin());
        ++level_count[static_cast<std::size_t>(level_of[static_cast<std::size_t>(i)])];
    }
    for (int c : level_count) {
        if (c == 1) ++fit.single_config_levels;
    }

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(k, l);
    Eigen::VectorXd y(k), w(k);
    for (int i = 0; i < k; ++i) {
        if (variances[i] <= 0.0) throw DataError("meta_regress: non-positive variance");
        x(i, level_of[static_cast<std::size_t>(i)]) = 1.0;
        y(i) = effects[i];
        w(i) = 1.0 / variances[i];
    }

    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    const Eigen::MatrixXd a = xtw * x;
    const auto ldlt = a.ldlt();
    const Eigen::VectorXd beta_fe = ldlt.solve(xtw * y);

    const Eigen::VectorXd resid = y - x * beta_fe;
    double q_e = 0.0;
    for (int i = 0; i < k; ++i) q_e += w(i) * resid(i) * resid(i);

    const Eigen::MatrixXd xt_w2_x = x.transpose() * w.cwiseProduct(w).asDiagonal() * x;
    const double trace_penalty = ldlt.solve(xt_w2_x).trace();
    const double denom = w.sum() - trace_penalty;
    fit.tau2_residual =
        denom > 0.0 ? std::max(0.0, (q_e - static_cast<double>(k - l)) / denom) : 0.0;

    fit.tau2_null = pool(effects, variances).tau2;
    fit.r2 = fit.tau2_null == 0.0
                 ? 0.0
                 : std::clamp(1.0 - fit.tau2_residual / fit.tau2_null, 0.0, 1.0);

    Eigen::VectorXd w_re(k);
    for (int i = 0; i < k; ++i) w_re(i) = 1.0 / (variances[i] + fit.tau2_residual);
    const Eigen::MatrixXd xtwr = x.transpose() * w_re.asDiagonal();
    const Eigen::VectorXd beta_re = (xtwr * x).ldlt().solve(xtwr * y);
    fit.coefficients.assign(beta_re.data(), beta_re.data() + l);
    return fit;
}

ModeratorFit meta_regress(std::span<const EffectEstimate> effects, Moderator which) {
    std::vector<double> y, v;
    std::vector<std::string> labels;
    y.reserve(effects.size());
    v.reserve(effects.size());
    labels.reserve(effects.size());
    for (const auto& e : effects) {
        y.push_back(e.effect);
        v.push_back(e.variance);
        labels.push_back(moderator_value(e.config, which));
    }
    return meta_regress(y, v, labels, which);
}

namespace {

std::map<std::string, std::vector<const EffectEstimate*>> group_by_feature(
    std::span<const EffectEstimate> estimates) {
    std::map<std::string, std::vector<const EffectEstimate*>> groups;
    for (const auto& e : estimates) groups[e.feature].push_back(&e);
    return groups;
}

}  // namespace

std::vector<MetaRow> meta_all(std::span<const EffectEstimate> estimates, double zero_band) {
    std::vector<MetaRow> rows;
    for (const auto& [feature, group] : group_by_feature(estimates)) {
        if (group.size() < 2) continue;
        std::vector<double> y, v;
        y.reserve(group.size());
        v.reserve(group.size());
        for (const auto* e : group) {
            y.push_back(e->effect);
            v.push_back(e->variance);
        }
        MetaRow row;
        row.feature = feature;
        row.kind = group.front()->kind;
        row.pooled = pool(y, v);
        row.split = direction_split(y, zero_band);
        row.classification = std::string(heterogeneity_class(row.pooled.i2));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<FitRow> meta_regress_all(std::span<const EffectEstimate> estimates, Moderator which) {
    std::vector<FitRow> rows;
    for (const auto& [feature, group] : group_by_feature(estimates)) {
        std::vector<double> y, v;
        std::vector<std::string> labels;
        for (const auto* e : group) {
            y.push_back(e->effect);
            v.push_back(e->variance);
            labels.push_back(moderator_value(e->config, which));
        }
        try {
            FitRow row;
            row.feature = feature;
            row.fit = meta_regress(y, v, labels, which);
            rows.push_back(std::move(row));
        } catch (const DataError&) {
            // infeasible fit for this feature; skipped by contract
        }
    }
    return rows;
}

}  // namespace trajmeta
