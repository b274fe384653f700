#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbpa/core.hpp"
#include "dbpa/errors.hpp"
#include "dbpa/similarity.hpp"

namespace dbpa {

// ---------------------------------------------------------------------------
// Discrepancy measures omega(P0, P1): the test statistic and effect size.
// JSD and Wasserstein-1 consume scalar similarity distributions; the energy
// and centroid measures consume embedding sets directly.
// ---------------------------------------------------------------------------

namespace detail {

// Histogram on `bins` equal-width bins spanning [min, max] of the pooled
// values. A degenerate pooled range collapses to a single occupied bin.
inline std::vector<double> histogram_probs(std::span<const double> values, double lo, double hi,
                                           int bins) {
    std::vector<double> probs(static_cast<std::size_t>(bins), 0.0);
    const double width = hi - lo;
    for (double v : values) {
        std::size_t idx = 0;
        if (width > 0.0) {
            idx = static_cast<std::size_t>((v - lo) / width * bins);
            if (idx >= static_cast<std::size_t>(bins)) idx = static_cast<std::size_t>(bins) - 1;
        }
        probs[idx] += 1.0;
    }
    const double n = static_cast<double>(values.size());
    for (double& p : probs) p /= n;
    return probs;
}

} // namespace detail

// Jensen-Shannon divergence between the two empirical measures, natural log,
// 0*log(0) := 0. Bounded by ln 2.
inline double jsd(std::span<const double> p0, std::span<const double> p1, int bins) {
    require(!p0.empty() && !p1.empty(), ErrorCode::EmptyDistribution,
            "jsd requires non-empty distributions");
    require(bins >= 1, ErrorCode::InvalidConfig, "jsd requires bins >= 1");
    double lo = p0[0], hi = p0[0];
    for (double v : p0) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : p1) { lo = std::min(lo, v); hi = std::max(hi, v); }
    const auto p = detail::histogram_probs(p0, lo, hi, bins);
    const auto q = detail::histogram_probs(p1, lo, hi, bins);
    double total = 0.0;
    for (int i = 0; i < bins; ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) total += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) total += 0.5 * q[i] * std::log(q[i] / m);
    }
    return std::max(total, 0.0);
}

inline double jsd(const SimilarityDistribution& p0, const SimilarityDistribution& p1, int bins) {
    return jsd(std::span<const double>(p0.values), std::span<const double>(p1.values), bins);
}

// Exact 1-D Wasserstein-1 between empirical measures. Equal sizes reduce to
// the mean absolute difference of the sorted values; unequal sizes use the
// integral of |CDF difference|.
inline double wasserstein1(std::span<const double> p0, std::span<const double> p1) {
    require(!p0.empty() && !p1.empty(), ErrorCode::EmptyDistribution,
            "wasserstein1 requires non-empty distributions");
    std::vector<double> a(p0.begin(), p0.end());
    std::vector<double> b(p1.begin(), p1.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() == b.size()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
        return sum / static_cast<double>(a.size());
    }
    // CDF sweep over the pooled breakpoints.
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double total = 0.0;
    double prev = std::min(a[0], b[0]);
    while (ia < a.size() || ib < b.size()) {
        double x;
        if (ib == b.size() || (ia < a.size() && a[ia] <= b[ib])) x = a[ia];
        else x = b[ib];
        total += std::abs(ia / na - ib / nb) * (x - prev);
        prev = x;
        while (ia < a.size() && a[ia] == x) ++ia;
        while (ib < b.size() && b[ib] == x) ++ib;
    }
    return total;
}

inline double wasserstein1(const SimilarityDistribution& p0, const SimilarityDistribution& p1) {
    return wasserstein1(std::span<const double>(p0.values), std::span<const double>(p1.values));
}

// ---------------------------------------------------------------------------
// Embedding-set measures
// ---------------------------------------------------------------------------

enum class GroundMetric { one_minus_cosine, l1, l2 };

inline double ground_distance(std::span<const double> a, std::span<const double> b,
                              GroundMetric metric) {
    require(a.size() == b.size(), ErrorCode::SizeMismatch,
            "ground metric requires equal dimensions");
    switch (metric) {
        case GroundMetric::one_minus_cosine:
            return 1.0 - cosine(a, b);
        case GroundMetric::l1: {
            double sum = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
            return sum;
        }
        case GroundMetric::l2: {
            double sum = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
            return std::sqrt(sum);
        }
    }
    fail(ErrorCode::InvalidConfig, "unhandled ground metric");
}

using VectorSet = std::vector<std::vector<double>>;

namespace detail {

inline void check_vector_set(const VectorSet& x, std::size_t min_size, const char* what) {
    require(x.size() >= min_size, ErrorCode::InvalidSampleSize,
            std::string(what) + " requires at least " + std::to_string(min_size) + " vectors");
    for (const auto& v : x)
        require(v.size() == x.front().size() && !v.empty(), ErrorCode::SizeMismatch,
                std::string(what) + " requires equal non-zero dimensions");
}

inline double mean_cross_distance(const VectorSet& x, const VectorSet& y, GroundMetric metric) {
    double sum = 0.0;
    for (const auto& xi : x)
        for (const auto& yj : y) sum += ground_distance(xi, yj, metric);
    return sum / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

inline double mean_within_distance(const VectorSet& x, GroundMetric metric) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) sum += ground_distance(x[i], x[j], metric);
    const double n = static_cast<double>(x.size());
    return 2.0 * sum / (n * (n - 1.0));
}

} // namespace detail

// Energy distance E = 2 E d(X,Y) - E d(X,X') - E d(Y,Y'), within-set means
// over i != j. Arguments are evaluated in canonical order so the result is
// bit-identical under argument swap; clamped at 0 against round-off.
inline double energy_distance(const VectorSet& x, const VectorSet& y, GroundMetric metric) {
    detail::check_vector_set(x, 2, "energy_distance");
    detail::check_vector_set(y, 2, "energy_distance");
    require(x.front().size() == y.front().size(), ErrorCode::SizeMismatch,
            "energy_distance requires equal dimensions across sets");
    const VectorSet* first = &x;
    const VectorSet* second = &y;
    if (*second < *first) std::swap(first, second);
    const double cross = detail::mean_cross_distance(*first, *second, metric);
    const double within_a = detail::mean_within_distance(*first, metric);
    const double within_b = detail::mean_within_distance(*second, metric);
    return std::max(2.0 * cross - within_a - within_b, 0.0);
}

// Euclidean distance between the set centroids.
inline double centroid_euclidean(const VectorSet& x, const VectorSet& y) {
    detail::check_vector_set(x, 1, "centroid_euclidean");
    detail::check_vector_set(y, 1, "centroid_euclidean");
    require(x.front().size() == y.front().size(), ErrorCode::SizeMismatch,
            "centroid_euclidean requires equal dimensions across sets");
    const std::size_t d = x.front().size();
    double sum = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        double mx = 0.0, my = 0.0;
        for (const auto& v : x) mx += v[c];
        for (const auto& v : y) my += v[c];
        mx /= static_cast<double>(x.size());
        my /= static_cast<double>(y.size());
        sum += (mx - my) * (mx - my);
    }
    return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Measure dispatch
// ---------------------------------------------------------------------------

enum class MeasureId { jsd, wasserstein1, energy_cosine, energy_l1, energy_l2, centroid_euclidean };

enum class MeasureInput { scalar_similarities, embedding_sets };

inline const char* measure_id_name(MeasureId id) {
    switch (id) {
        case MeasureId::jsd: return "jsd";
        case MeasureId::wasserstein1: return "wasserstein1";
        case MeasureId::energy_cosine: return "energy_cosine";
        case MeasureId::energy_l1: return "energy_l1";
        case MeasureId::energy_l2: return "energy_l2";
        case MeasureId::centroid_euclidean: return "centroid_euclidean";
    }
    return "?";
}

inline MeasureId measure_id_from_name(std::string_view name) {
    if (name == "jsd") return MeasureId::jsd;
    if (name == "wasserstein1") return MeasureId::wasserstein1;
    if (name == "energy_cosine") return MeasureId::energy_cosine;
    if (name == "energy_l1") return MeasureId::energy_l1;
    if (name == "energy_l2") return MeasureId::energy_l2;
    if (name == "centroid_euclidean") return MeasureId::centroid_euclidean;
    fail(ErrorCode::InvalidConfig, "unknown measure id '" + std::string(name) + "'");
}

class Measure {
public:
    explicit Measure(MeasureId id) : id_(id) {}

    MeasureId id() const { return id_; }
    std::string name() const { return measure_id_name(id_); }

    MeasureInput operates_on() const {
        return id_ == MeasureId::jsd || id_ == MeasureId::wasserstein1
                   ? MeasureInput::scalar_similarities
                   : MeasureInput::embedding_sets;
    }

    GroundMetric ground_metric() const {
        switch (id_) {
            case MeasureId::energy_cosine: return GroundMetric::one_minus_cosine;
            case MeasureId::energy_l1: return GroundMetric::l1;
            case MeasureId::energy_l2: return GroundMetric::l2;
            default:
                fail(ErrorCode::InvalidConfig, name() + " has no ground metric");
        }
    }

    double evaluate_scalar(std::span<const double> p0, std::span<const double> p1,
                           int bins) const {
        switch (id_) {
            case MeasureId::jsd: return jsd(p0, p1, bins);
            case MeasureId::wasserstein1: return wasserstein1(p0, p1);
            default:
                fail(ErrorCode::InvalidConfig, name() + " does not consume scalar distributions");
        }
    }

    double evaluate_sets(const VectorSet& x, const VectorSet& y) const {
        switch (id_) {
            case MeasureId::energy_cosine:
            case MeasureId::energy_l1:
            case MeasureId::energy_l2:
                return energy_distance(x, y, ground_metric());
            case MeasureId::centroid_euclidean:
                return centroid_euclidean(x, y);
            default:
                fail(ErrorCode::InvalidConfig, name() + " does not consume embedding sets");
        }
    }

private:
    MeasureId id_;
};

} // namespace dbpa
