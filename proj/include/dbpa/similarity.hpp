#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbpa/core.hpp"
#include "dbpa/errors.hpp"
#include "dbpa/text.hpp"

namespace dbpa {

// ---------------------------------------------------------------------------
// Pairwise similarity functions and the P0/P1 distribution builders.
// ---------------------------------------------------------------------------

// Cosine similarity, clamped to [-1, 1] against round-off. Zero-norm inputs
// are an error, never a silent 0.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && !a.empty(), ErrorCode::SizeMismatch,
            "cosine requires equal non-zero dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    require(na > 0.0 && nb > 0.0, ErrorCode::ZeroVector,
            "cosine is undefined for zero-norm vectors");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace detail {

inline std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks,
                                                            std::size_t n) {
    std::map<std::vector<std::string>, int> counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
    return counts;
}

inline int clipped_overlap(const std::map<std::vector<std::string>, int>& cand,
                           const std::map<std::vector<std::string>, int>& ref) {
    int overlap = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

} // namespace detail

// Sentence-level BLEU: geometric mean of modified n-gram precisions n=1..4,
// add-1 smoothing on both the clipped-match and total counts, times the
// brevity penalty exp(1 - r/c) when c < r. Result in [0, 1].
inline double bleu(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    require(!cand.empty() && !ref.empty(), ErrorCode::EmptyText,
            "bleu requires both texts to tokenize to >= 1 token");
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto cg = detail::ngram_counts(cand, n);
        const auto rg = detail::ngram_counts(ref, n);
        int total = 0;
        for (const auto& [gram, count] : cg) total += count;
        const int overlap = detail::clipped_overlap(cg, rg);
        log_sum += std::log((overlap + 1.0) / (total + 1.0));
    }
    const double geo = std::exp(log_sum / 4.0);
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
    return bp * geo;
}

enum class RougeVariant { one, two, lcs };

// ROUGE F1. Variants 1/2 use unigram/bigram multiset overlap, variant L the
// longest common subsequence. F1 := 2PR/(P+R), defined 0 when P+R = 0.
inline double rouge(std::string_view candidate, std::string_view reference, RougeVariant variant) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    require(!cand.empty() && !ref.empty(), ErrorCode::EmptyText,
            "rouge requires both texts to tokenize to >= 1 token");
    double overlap = 0.0, cand_total = 0.0, ref_total = 0.0;
    if (variant == RougeVariant::lcs) {
        overlap = static_cast<double>(detail::lcs_length(cand, ref));
        cand_total = static_cast<double>(cand.size());
        ref_total = static_cast<double>(ref.size());
    } else {
        const std::size_t n = variant == RougeVariant::one ? 1 : 2;
        const auto cg = detail::ngram_counts(cand, n);
        const auto rg = detail::ngram_counts(ref, n);
        overlap = static_cast<double>(detail::clipped_overlap(cg, rg));
        for (const auto& [gram, count] : cg) cand_total += count;
        for (const auto& [gram, count] : rg) ref_total += count;
    }
    if (cand_total == 0.0 || ref_total == 0.0) return 0.0;
    const double p = overlap / cand_total;
    const double r = overlap / ref_total;
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

// ---------------------------------------------------------------------------
// Similarity function dispatch
// ---------------------------------------------------------------------------

enum class SimilarityId { cosine, bleu, rouge1_f, rouge2_f, rougeL_f };

inline const char* similarity_id_name(SimilarityId id) {
    switch (id) {
        case SimilarityId::cosine: return "cosine";
        case SimilarityId::bleu: return "bleu";
        case SimilarityId::rouge1_f: return "rouge1_f";
        case SimilarityId::rouge2_f: return "rouge2_f";
        case SimilarityId::rougeL_f: return "rougeL_f";
    }
    return "?";
}

inline SimilarityId similarity_id_from_name(std::string_view name) {
    if (name == "cosine") return SimilarityId::cosine;
    if (name == "bleu") return SimilarityId::bleu;
    if (name == "rouge1_f") return SimilarityId::rouge1_f;
    if (name == "rouge2_f") return SimilarityId::rouge2_f;
    if (name == "rougeL_f") return SimilarityId::rougeL_f;
    fail(ErrorCode::InvalidConfig, "unknown similarity id '" + std::string(name) + "'");
}

// Text metrics are evaluated symmetrized, s(a,b) := (m(a,b) + m(b,a)) / 2,
// so P0/P1 values are independent of pair argument order.
class Similarity {
public:
    explicit Similarity(SimilarityId id) : id_(id) {}

    SimilarityId id() const { return id_; }
    std::string name() const { return similarity_id_name(id_); }
    bool requires_embeddings() const { return id_ == SimilarityId::cosine; }

    double operator()(const OutputSample& a, const OutputSample& b) const {
        switch (id_) {
            case SimilarityId::cosine:
                require(a.embedding && b.embedding, ErrorCode::EmbeddingsRequired,
                        "cosine similarity requires embeddings");
                return cosine(*a.embedding, *b.embedding);
            case SimilarityId::bleu:
                return 0.5 * (bleu(a.text, b.text) + bleu(b.text, a.text));
            case SimilarityId::rouge1_f:
                return 0.5 * (rouge(a.text, b.text, RougeVariant::one) +
                              rouge(b.text, a.text, RougeVariant::one));
            case SimilarityId::rouge2_f:
                return 0.5 * (rouge(a.text, b.text, RougeVariant::two) +
                              rouge(b.text, a.text, RougeVariant::two));
            case SimilarityId::rougeL_f:
                return 0.5 * (rouge(a.text, b.text, RougeVariant::lcs) +
                              rouge(b.text, a.text, RougeVariant::lcs));
        }
        fail(ErrorCode::InvalidConfig, "unhandled similarity id");
    }

private:
    SimilarityId id_;
};

namespace detail {

inline void check_embeddings(const SampleSet& set, const Similarity& s) {
    if (!s.requires_embeddings()) return;
    for (const auto& sample : set.samples)
        require(sample.embedding.has_value(), ErrorCode::EmbeddingsRequired,
                "sample set lacks embeddings required by " + s.name());
}

} // namespace detail

// P0: all k(k-1)/2 unordered within-set pair values, i<j order.
inline SimilarityDistribution build_p0(const SampleSet& set, const Similarity& s) {
    require(set.k() >= 2, ErrorCode::InvalidSampleSize, "build_p0 requires k >= 2");
    detail::check_embeddings(set, s);
    SimilarityDistribution dist;
    dist.label = DistributionLabel::p0;
    dist.similarity_id = s.name();
    dist.values.reserve(set.k() * (set.k() - 1) / 2);
    for (std::size_t i = 0; i < set.k(); ++i)
        for (std::size_t j = i + 1; j < set.k(); ++j)
            dist.values.push_back(s(set.samples[i], set.samples[j]));
    return dist;
}

// P1: all k^2 cross-set pair values.
inline SimilarityDistribution build_p1(const SampleSet& base, const SampleSet& pert,
                                       const Similarity& s) {
    require(base.k() >= 2 && pert.k() >= 2, ErrorCode::InvalidSampleSize,
            "build_p1 requires k >= 2 in both sets");
    require(base.k() == pert.k(), ErrorCode::SizeMismatch,
            "build_p1 requires equal sample sizes in both arms");
    detail::check_embeddings(base, s);
    detail::check_embeddings(pert, s);
    SimilarityDistribution dist;
    dist.label = DistributionLabel::p1;
    dist.similarity_id = s.name();
    dist.values.reserve(base.k() * pert.k());
    for (std::size_t i = 0; i < base.k(); ++i)
        for (std::size_t j = 0; j < pert.k(); ++j)
            dist.values.push_back(s(base.samples[i], pert.samples[j]));
    return dist;
}

} // namespace dbpa
