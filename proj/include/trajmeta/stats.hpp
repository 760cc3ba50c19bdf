#pragma once
// Shared numeric helpers for the statistics layer.

#include <span>
#include <vector>

namespace trajmeta {

// Average ranks (1-based); tied values share the mean of their rank range.
std::vector<double> midranks(std::span<const double> values);

// Median with the even case averaged; input need not be sorted.
double median_of(std::vector<double> values);  // throws DataError when empty

// Linear interpolation between order statistics (the common type-7 rule).
// p in [0, 1]; input need not be sorted.
double percentile(std::vector<double> values, double p);

// Shannon entropy, natural log, of a count histogram.
double entropy_from_counts(std::span<const int> counts);

double normal_cdf(double z);

double sample_mean(std::span<const double> values);
double sample_variance(std::span<const double> values);  // denominator n - 1

}  // namespace trajmeta
