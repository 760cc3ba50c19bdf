#pragma once
// Configuration-level trajectory typing: z-score the feature summaries,
// project onto 3 principal components, cluster with k-means, and assign new
// configurations to the nearest centroid.

#include <Eigen/Dense>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "trajmeta/features.hpp"

namespace trajmeta {

struct TaxonomyModel {
    std::vector<std::string> feature_order;  // features kept for the fit
    std::vector<std::string> dropped;        // constant or incomplete features
    Eigen::VectorXd means;                   // per kept feature
    Eigen::VectorXd stds;
    Eigen::MatrixXd components;          // 3 x F, rows orthonormal, sign-fixed
    Eigen::Vector3d explained_variance;  // fractions, non-increasing
    Eigen::MatrixXd centroids;           // k x 3
    int k = 0;
    std::uint64_t seed = 0;
    double silhouette = 0.0;
};

// Drops features that are constant or missing in any configuration, then
// PCA + k-means++ / Lloyd (tol 1e-8, max 500 iterations). Throws DataError
// when there are fewer configurations than k or fewer than 3 usable features.
TaxonomyModel fit_taxonomy(std::span<const ConfigFeatureSummary> summaries, int k = 5,
                           std::uint64_t seed = 0);

struct TypeAssignment {
    int type = 0;  // 1-based cluster index
    double distance = 0.0;
};

// Standardizes with the stored parameters, projects, picks the nearest
// centroid (ties break to the lowest index). Throws DataError naming any
// missing feature.
TypeAssignment assign_type(const TaxonomyModel& model, const ConfigFeatureSummary& summary);

// Mean silhouette over a labeled point set; singleton clusters take
// within-distance 0, so an isolated point scores 1 rather than 0.
double silhouette_score(const Eigen::MatrixXd& points, std::span<const int> assignment, int k);

nlohmann::json taxonomy_to_json(const TaxonomyModel& model);
TaxonomyModel taxonomy_from_json(const nlohmann::json& j);

struct SweepRow {
    int k = 0;
    double silhouette = 0.0;
};

std::vector<SweepRow> sweep_taxonomy(std::span<const ConfigFeatureSummary> summaries, int k_lo,
                                     int k_hi, std::uint64_t seed = 0);

}  // namespace trajmeta
