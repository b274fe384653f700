#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dbpa/core.hpp"
#include "dbpa/discrepancy.hpp"
#include "dbpa/errors.hpp"
#include "dbpa/rng.hpp"
#include "dbpa/similarity.hpp"

namespace dbpa {

// ---------------------------------------------------------------------------
// Statistical engine: permutation testing, Bonferroni multiplicity control,
// significance stars, and the sample-size planner.
// ---------------------------------------------------------------------------

struct PermutationConfig {
    int B = 1000;
    std::uint64_t seed = 0;
    MeasureId measure_id = MeasureId::jsd;
    SimilarityId similarity_id = SimilarityId::cosine;
    int bins = 10; // JSD histogram bins

    void validate() const {
        require(B >= 1, ErrorCode::InvalidConfig, "B must be >= 1");
        require(bins >= 1, ErrorCode::InvalidConfig, "bins must be >= 1");
    }
};

struct MultiplicityPlan {
    double alpha = 0.05;
    int m = 1;
    double alpha_adj = 0.05;
    double p_crit = 0.05;
    double fwer_upper = 0.05;
};

inline MultiplicityPlan bonferroni(double alpha, int m) {
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidConfig, "alpha must be in (0, 1)");
    require(m >= 1, ErrorCode::InvalidConfig, "m must be >= 1");
    MultiplicityPlan plan;
    plan.alpha = alpha;
    plan.m = m;
    plan.alpha_adj = alpha / m;
    plan.p_crit = plan.alpha_adj;
    plan.fwer_upper = 1.0 - std::pow(1.0 - alpha, m);
    return plan;
}

inline std::string stars(double p) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidConfig, "p must be in [0, 1]");
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

// Standard normal quantile. Acklam's rational approximation (~1.1e-9
// relative error) followed by one Halley step against erfc, which takes the
// absolute error well below 1e-9.
inline double normal_quantile(double q) {
    require(q > 0.0 && q < 1.0, ErrorCode::InvalidConfig, "quantile argument must be in (0, 1)");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double x;
    if (q < p_low) {
        const double u = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    } else if (q <= 1.0 - p_low) {
        const double u = q - 0.5;
        const double r = u * u;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double u = std::sqrt(-2.0 * std::log(1.0 - q));
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }
    const double err = 0.5 * std::erfc(-x / std::numbers::sqrt2) - q;
    const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

// Monte Carlo sample size restoring power under Bonferroni correction:
// ceil(c * ((z_{1-alpha/(2m)} + z_{1-beta}) / omega_target)^2).
inline long long plan_sample_size(double alpha, double beta, int m, double omega_target,
                                  double c = 1.0) {
    require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidConfig, "alpha must be in (0, 1)");
    require(beta > 0.0 && beta < 1.0, ErrorCode::InvalidConfig, "beta must be in (0, 1)");
    require(m >= 1, ErrorCode::InvalidConfig, "m must be >= 1");
    require(omega_target > 0.0, ErrorCode::InvalidConfig, "omega_target must be > 0");
    require(c > 0.0, ErrorCode::InvalidConfig, "c must be > 0");
    const double z_alpha = normal_quantile(1.0 - alpha / (2.0 * m));
    const double z_beta = normal_quantile(1.0 - beta);
    const double ratio = (z_alpha + z_beta) / omega_target;
    const double n = std::ceil(c * ratio * ratio);
    return std::max<long long>(static_cast<long long>(n), 1);
}

// ---------------------------------------------------------------------------
// Permutation test
// ---------------------------------------------------------------------------

namespace detail {

// Evaluates the test statistic for an arbitrary k/k split of the pooled 2k
// samples. All pairwise similarities (or ground-metric distances) are
// computed once into a 2k x 2k table; each split only re-indexes the table.
class SplitStatistic {
public:
    SplitStatistic(std::vector<const OutputSample*> pooled, const PermutationConfig& cfg)
        : pooled_(std::move(pooled)), measure_(cfg.measure_id), bins_(cfg.bins) {
        n_ = pooled_.size();
        if (measure_.operates_on() == MeasureInput::scalar_similarities) {
            const Similarity sim(cfg.similarity_id);
            fill_table([&](const OutputSample& a, const OutputSample& b) { return sim(a, b); });
        } else if (measure_.id() != MeasureId::centroid_euclidean) {
            const GroundMetric metric = measure_.ground_metric();
            fill_table([&](const OutputSample& a, const OutputSample& b) {
                require(a.embedding && b.embedding, ErrorCode::EmbeddingsRequired,
                        measure_.name() + " requires embeddings");
                return ground_distance(*a.embedding, *b.embedding, metric);
            });
        } else {
            for (const OutputSample* s : pooled_)
                require(s->embedding.has_value(), ErrorCode::EmbeddingsRequired,
                        "centroid_euclidean requires embeddings");
        }
    }

    // first/second are sorted index lists partitioning {0, ..., 2k-1}.
    double eval(std::span<const std::size_t> first, std::span<const std::size_t> second) const {
        if (measure_.operates_on() == MeasureInput::scalar_similarities) {
            std::vector<double> p0;
            p0.reserve(first.size() * (first.size() - 1) / 2);
            for (std::size_t a = 0; a < first.size(); ++a)
                for (std::size_t b = a + 1; b < first.size(); ++b)
                    p0.push_back(table_[first[a] * n_ + first[b]]);
            std::vector<double> p1;
            p1.reserve(first.size() * second.size());
            for (std::size_t u : first)
                for (std::size_t v : second) p1.push_back(table_[u * n_ + v]);
            return measure_.evaluate_scalar(p0, p1, bins_);
        }
        if (measure_.id() == MeasureId::centroid_euclidean) return centroid(first, second);
        return energy(first, second);
    }

private:
    template <typename PairFn>
    void fill_table(PairFn&& fn) {
        table_.assign(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double v = fn(*pooled_[i], *pooled_[j]);
                table_[i * n_ + j] = v;
                table_[j * n_ + i] = v;
            }
        }
    }

    double energy(std::span<const std::size_t> first, std::span<const std::size_t> second) const {
        double cross = 0.0;
        for (std::size_t u : first)
            for (std::size_t v : second) cross += table_[u * n_ + v];
        cross /= static_cast<double>(first.size()) * static_cast<double>(second.size());
        auto within = [&](std::span<const std::size_t> idx) {
            double sum = 0.0;
            for (std::size_t a = 0; a < idx.size(); ++a)
                for (std::size_t b = a + 1; b < idx.size(); ++b)
                    sum += table_[idx[a] * n_ + idx[b]];
            const double m = static_cast<double>(idx.size());
            return 2.0 * sum / (m * (m - 1.0));
        };
        return std::max(2.0 * cross - within(first) - within(second), 0.0);
    }

    double centroid(std::span<const std::size_t> first, std::span<const std::size_t> second) const {
        const std::size_t d = pooled_.front()->embedding->size();
        double sum = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double mx = 0.0, my = 0.0;
            for (std::size_t u : first) mx += (*pooled_[u]->embedding)[c];
            for (std::size_t v : second) my += (*pooled_[v]->embedding)[c];
            mx /= static_cast<double>(first.size());
            my /= static_cast<double>(second.size());
            sum += (mx - my) * (mx - my);
        }
        return std::sqrt(sum);
    }

    std::vector<const OutputSample*> pooled_;
    Measure measure_;
    int bins_;
    std::size_t n_ = 0;
    std::vector<double> table_;
};

} // namespace detail

// Two-sample permutation test on the pooled 2k outputs.
//
// Validity rests on exchangeability of the raw pooled outputs under H0; the
// engine therefore permutes sample indices, never similarity scores. For
// each of the B iterations a uniformly random size-k subset of {1..2k} is
// drawn (seeded Fisher-Yates, per-iteration seeds split from cfg.seed), the
// statistic is recomputed on the re-indexed similarity table, and ties count
// toward the numerator: p = (1 + #{T_pi >= T_obs}) / (1 + B).
inline TestOutcome permutation_test(const SampleSet& base, const SampleSet& pert,
                                    const PermutationConfig& cfg, int parallelism = 1) {
    cfg.validate();
    require(base.k() >= 2, ErrorCode::InvalidSampleSize, "permutation_test requires k >= 2");
    require(base.k() == pert.k(), ErrorCode::SizeMismatch,
            "permutation_test requires equal sample sizes in both arms");
    const std::size_t k = base.k();
    const std::size_t n = 2 * k;

    std::vector<const OutputSample*> pooled;
    pooled.reserve(n);
    for (const auto& s : base.samples) pooled.push_back(&s);
    for (const auto& s : pert.samples) pooled.push_back(&s);

    const detail::SplitStatistic statistic(std::move(pooled), cfg);

    std::vector<std::size_t> observed_first(k), observed_second(k);
    for (std::size_t i = 0; i < k; ++i) {
        observed_first[i] = i;
        observed_second[i] = k + i;
    }
    const double t_obs = statistic.eval(observed_first, observed_second);

    auto run_range = [&](int begin, int end) {
        long long count = 0;
        std::vector<std::size_t> second(k);
        for (int pi = begin; pi < end; ++pi) {
            Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(pi)));
            auto first = choose_k_of_n(rng, n, k);
            std::sort(first.begin(), first.end());
            std::size_t w = 0, f = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (f < k && first[f] == i) ++f;
                else second[w++] = i;
            }
            if (statistic.eval(first, second) >= t_obs) ++count;
        }
        return count;
    };

    long long exceed = 0;
    const int threads = std::max(1, parallelism);
    if (threads == 1 || cfg.B < 2 * threads) {
        exceed = run_range(1, cfg.B + 1);
    } else {
        std::atomic<long long> total{0};
        std::vector<std::thread> pool;
        const int chunk = (cfg.B + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = 1 + t * chunk;
            const int end = std::min(cfg.B + 1, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end] { total += run_range(begin, end); });
        }
        for (auto& th : pool) th.join();
        exceed = total.load();
    }

    TestOutcome outcome;
    outcome.omega = t_obs;
    outcome.exceed_count = static_cast<int>(exceed);
    outcome.B = cfg.B;
    outcome.p_value = (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(cfg.B));
    outcome.measure_id = measure_id_name(cfg.measure_id);
    outcome.similarity_id = similarity_id_name(cfg.similarity_id);
    outcome.seed = cfg.seed;
    outcome.k = static_cast<int>(k);
    return outcome;
}

} // namespace dbpa
