#include "trajmeta/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trajmeta/errors.hpp"
#include "trajmeta/rng.hpp"

namespace trajmeta {

namespace {

constexpr std::uint64_t kKmeansStream = 0x6b6d6e73ULL;  // "kmns"
constexpr double kTolerance = 1e-8;
constexpr int kMaxIterations = 500;

int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::RowVector3d& point,
                     double* distance_out = nullptr) {
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int c = 0; c < centroids.rows(); ++c) {
        const double d2 = (centroids.row(c) - point).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = c;
        }
    }
    if (distance_out) *distance_out = std::sqrt(best_d2);
    return best;
}

Eigen::MatrixXd kmeans_pp_init(const Eigen::MatrixXd& points, int k, Rng& rng) {
    const int n = static_cast<int>(points.rows());
    Eigen::MatrixXd centroids(k, 3);
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    Eigen::VectorXd d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        int chosen;
        if (total <= 0.0) {
            chosen = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        } else {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.row(c) = points.row(chosen);
        d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

std::vector<int> lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd& centroids) {
    const int n = static_cast<int>(points.rows());
    const int k = static_cast<int>(centroids.rows());
    std::vector<int> assignment(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        for (int i = 0; i < n; ++i) {
            assignment[static_cast<std::size_t>(i)] =
                nearest_centroid(centroids, points.row(i));
        }

        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, 3);
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            next.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
                continue;
            }
            // Empty cluster: take the point farthest from its centroid.
            int farthest = 0;
            double worst = -1.0;
            for (int i = 0; i < n; ++i) {
                const double d2 =
                    (points.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)]))
                        .squaredNorm();
                if (d2 > worst) {
                    worst = d2;
                    farthest = i;
                }
            }
            next.row(c) = points.row(farthest);
            assignment[static_cast<std::size_t>(farthest)] = c;
        }

        const double shift = (next - centroids).rowwise().norm().maxCoeff();
        centroids = next;
        if (shift < kTolerance) break;
    }
    for (int i = 0; i < n; ++i) {
        assignment[static_cast<std::size_t>(i)] = nearest_centroid(centroids, points.row(i));
    }
    return assignment;
}

}  // namespace

double silhouette_score(const Eigen::MatrixXd& points, std::span<const int> assignment, int k) {
    const int n = static_cast<int>(points.rows());
    if (n < 2) throw DataError("silhouette: need at least 2 points");
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assignment) ++counts[static_cast<std::size_t>(a)];

    double total = 0.0;
    std::vector<double> mean_dist(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i) {
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_dist[static_cast<std::size_t>(assignment[static_cast<std::size_t>(j)])] +=
                (points.row(i) - points.row(j)).norm();
        }
        const int own = assignment[static_cast<std::size_t>(i)];
        double a = 0.0;
        if (counts[static_cast<std::size_t>(own)] > 1) {
            a = mean_dist[static_cast<std::size_t>(own)] /
                static_cast<double>(counts[static_cast<std::size_t>(own)] - 1);
        }
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[static_cast<std::size_t>(c)] == 0) continue;
            b = std::min(b, mean_dist[static_cast<std::size_t>(c)] /
                                static_cast<double>(counts[static_cast<std::size_t>(c)]));
        }
        if (!std::isfinite(b)) throw DataError("silhouette: single non-empty cluster");
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

TaxonomyModel fit_taxonomy(std::span<const ConfigFeatureSummary> summaries, int k,
                           std::uint64_t seed) {
    const int n = static_cast<int>(summaries.size());
    if (k < 2) throw DataError("fit_taxonomy: k must be at least 2");
    if (n < k) throw DataError("fit_taxonomy: fewer configurations than k");

    TaxonomyModel model;
    model.k = k;
    model.seed = seed;

    std::vector<int> kept;
    for (int f = 0; f < static_cast<int>(kFeatureCount); ++f) {
        bool complete = true;
        for (const auto& s : summaries) {
            if (!s.features[static_cast<std::size_t>(f)]) {
                complete = false;
                break;
            }
        }
        if (!complete) {
            model.dropped.emplace_back(kFeatureNames[static_cast<std::size_t>(f)]);
            continue;
        }
        double mean = 0.0;
        for (const auto& s : summaries) mean += *s.features[static_cast<std::size_t>(f)];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& s : summaries) {
            const double d = *s.features[static_cast<std::size_t>(f)] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n - 1);
        if (var <= 0.0) {
            model.dropped.emplace_back(kFeatureNames[static_cast<std::size_t>(f)]);
            continue;
        }
        kept.push_back(f);
        model.feature_order.emplace_back(kFeatureNames[static_cast<std::size_t>(f)]);
        model.means.conservativeResize(model.means.size() + 1);
        model.stds.conservativeResize(model.stds.size() + 1);
        model.means(model.means.size() - 1) = mean;
        model.stds(model.stds.size() - 1) = std::sqrt(var);
    }
    const int f_count = static_cast<int>(kept.size());
    if (f_count < 3) throw DataError("fit_taxonomy: fewer than 3 usable features");

    Eigen::MatrixXd z(n, f_count);
    for (int i = 0; i < n; ++i) {
        for (int f = 0; f < f_count; ++f) {
            const double value =
                *summaries[static_cast<std::size_t>(i)]
                     .features[static_cast<std::size_t>(kept[static_cast<std::size_t>(f)])];
            z(i, f) = (value - model.means(f)) / model.stds(f);
        }
    }

    const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw InternalError("fit_taxonomy: eigensolver failed");

    const double total_var = std::max(0.0, solver.eigenvalues().sum());
    model.components.resize(3, f_count);
    for (int c = 0; c < 3; ++c) {
        const int src = f_count - 1 - c;  // eigenvalues come out ascending
        Eigen::VectorXd axis = solver.eigenvectors().col(src);
        int peak = 0;
        axis.cwiseAbs().maxCoeff(&peak);
        if (axis(peak) < 0.0) axis = -axis;
        model.components.row(c) = axis.transpose();
        model.explained_variance(c) =
            total_var > 0.0 ? std::max(0.0, solver.eigenvalues()(src)) / total_var : 0.0;
    }

    const Eigen::MatrixXd projected = z * model.components.transpose();
    Rng rng(derive_seed(seed, kKmeansStream));
    model.centroids = kmeans_pp_init(projected, k, rng);
    const std::vector<int> assignment = lloyd(projected, model.centroids);
    model.silhouette = silhouette_score(projected, assignment, k);
    return model;
}

TypeAssignment assign_type(const TaxonomyModel& model, const ConfigFeatureSummary& summary) {
    const int f_count = static_cast<int>(model.feature_order.size());
    Eigen::VectorXd z(f_count);
    for (int f = 0; f < f_count; ++f) {
        const auto& name = model.feature_order[static_cast<std::size_t>(f)];
        const auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
        if (it == kFeatureNames.end()) throw DataError("unknown feature '" + name + "' in model");
        const auto idx = static_cast<std::size_t>(it - kFeatureNames.begin());
        if (!summary.features[idx]) throw DataError("missing feature '" + name + "'");
        z(f) = (*summary.features[idx] - model.means(f)) / model.stds(f);
    }
    const Eigen::RowVector3d point = (model.components * z).transpose();
    TypeAssignment out;
    out.type = 1 + nearest_centroid(model.centroids, point, &out.distance);
    return out;
}

nlohmann::json taxonomy_to_json(const TaxonomyModel& model) {
    nlohmann::json j;
    j["feature_order"] = model.feature_order;
    j["dropped"] = model.dropped;
    j["means"] = std::vector<double>(model.means.data(), model.means.data() + model.means.size());
    j["stds"] = std::vector<double>(model.stds.data(), model.stds.data() + model.stds.size());
    nlohmann::json components = nlohmann::json::array();
    for (int c = 0; c < model.components.rows(); ++c) {
        nlohmann::json row = nlohmann::json::array();
        for (int f = 0; f < model.components.cols(); ++f) row.push_back(model.components(c, f));
        components.push_back(std::move(row));
    }
    j["components"] = std::move(components);
    j["explained_variance"] = {model.explained_variance(0), model.explained_variance(1),
                               model.explained_variance(2)};
    nlohmann::json centroids = nlohmann::json::array();
    for (int c = 0; c < model.centroids.rows(); ++c) {
        centroids.push_back({model.centroids(c, 0), model.centroids(c, 1), model.centroids(c, 2)});
    }
    j["centroids"] = std::move(centroids);
    j["k"] = model.k;
    j["seed"] = model.seed;
    j["silhouette"] = model.silhouette;
    return j;
}

TaxonomyModel taxonomy_from_json(const nlohmann::json& j) {
    for (const char* key : {"feature_order", "dropped", "means", "stds", "components",
                            "explained_variance", "centroids", "k", "seed", "silhouette"}) {
        if (!j.contains(key)) throw DataError(std::string("model: missing key '") + key + "'");
    }
    TaxonomyModel model;
    model.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    model.dropped = j.at("dropped").get<std::vector<std::string>>();
    const auto means = j.at("means").get<std::vector<double>>();
    const auto stds = j.at("stds").get<std::vector<double>>();
    const auto f_count = static_cast<Eigen::Index>(model.feature_order.size());
    if (static_cast<Eigen::Index>(means.size()) != f_count ||
        static_cast<Eigen::Index>(stds.size()) != f_count) {
        throw DataError("model: means/stds length mismatch");
    }
    model.means = Eigen::Map<const Eigen::VectorXd>(means.data(), f_count);
    model.stds = Eigen::Map<const Eigen::VectorXd>(stds.data(), f_count);

    const auto& components = j.at("components");
    if (components.size() != 3) throw DataError("model: expected 3 components");
    model.components.resize(3, f_count);
    for (Eigen::Index c = 0; c < 3; ++c) {
        const auto row = components.at(static_cast<std::size_t>(c)).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != f_count) {
            throw DataError("model: component length mismatch");
        }
        for (Eigen::Index f = 0; f < f_count; ++f) {
            model.components(c, f) = row[static_cast<std::size_t>(f)];
        }
    }
    const auto ev = j.at("explained_variance").get<std::vector<double>>();
    if (ev.size() != 3) throw DataError("model: expected 3 explained_variance entries");
    model.explained_variance = Eigen::Vector3d(ev[0], ev[1], ev[2]);

    const auto& centroids = j.at("centroids");
    model.k = j.at("k").get<int>();
    if (static_cast<int>(centroids.size()) != model.k) {
        throw DataError("model: centroid count does not match k");
    }
    model.centroids.resize(model.k, 3);
    for (int c = 0; c < model.k; ++c) {
        const auto row = centroids.at(static_cast<std::size_t>(c)).get<std::vector<double>>();
        if (row.size() != 3) throw DataError("model: centroid length mismatch");
        model.centroids.row(c) = Eigen::RowVector3d(row[0], row[1], row[2]);
    }
    model.seed = j.at("seed").get<std::uint64_t>();
    model.silhouette = j.at("silhouette").get<double>();
    return model;
}

std::vector<SweepRow> sweep_taxonomy(std::span<const ConfigFeatureSummary> summaries, int k_lo,
                                     int k_hi, std::uint64_t seed) {
    if (k_lo < 2 || k_hi < k_lo) throw DataError("sweep: invalid k range");
    std::vector<SweepRow> rows;
    for (int k = k_lo; k <= k_hi; ++k) {
        rows.push_back({k, fit_taxonomy(summaries, k, seed).silhouette});
    }
    return rows;
}

}  // namespace trajmeta
