#include "trajmeta/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajmeta/errors.hpp"

namespace trajmeta {

std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw DataError("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DataError("percentile of empty set");
    if (p < 0.0 || p > 1.0) throw DataError("percentile p must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
    if (lo == hi) return values[lo];
    const double frac = h - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double entropy_from_counts(std::span<const int> counts) {
    double total = 0.0;
    for (int c : counts) total += c;
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (int c : counts) {
        if (c <= 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double sample_mean(std::span<const double> values) {
    if (values.empty()) throw DataError("mean of empty set");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2) throw DataError("variance needs at least 2 values");
    const double m = sample_mean(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return s / static_cast<double>(values.size() - 1);
}

}  // namespace trajmeta
