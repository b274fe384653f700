#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dbpa/errors.hpp"

namespace dbpa {

// ---------------------------------------------------------------------------
// Domain types shared by every other module. No I/O, no statistics logic.
// All types are immutable-by-convention after construction and safe to share
// between threads.
// ---------------------------------------------------------------------------

struct SamplingParams {
    double temperature = 1.0;
    int max_tokens = 256;
    std::map<std::string, std::string> extra;
};

struct GenerationRequest {
    std::string prompt;
    SamplingParams sampling_params;
    std::string model_id;

    void validate() const {
        require(!prompt.empty(), ErrorCode::InvalidConfig, "prompt must be non-empty");
        require(sampling_params.temperature >= 0.0, ErrorCode::InvalidConfig,
                "temperature must be >= 0");
        require(sampling_params.max_tokens > 0, ErrorCode::InvalidConfig,
                "max_tokens must be positive");
    }
};

struct Provenance {
    std::string provider_id;
    std::string model_id;
    int sample_index = 0;
    bool cache_hit = false;
};

struct OutputSample {
    std::string text;
    std::optional<std::vector<double>> embedding;
    Provenance provenance;

    void validate() const {
        if (embedding) {
            require(!embedding->empty(), ErrorCode::InvalidConfig,
                    "embedding dimension must be > 0");
            for (double v : *embedding)
                require(std::isfinite(v), ErrorCode::InvalidConfig,
                        "embedding components must be finite");
        }
    }
};

enum class Condition { baseline, perturbed };

inline const char* condition_name(Condition c) {
    return c == Condition::baseline ? "baseline" : "perturbed";
}

// k sampled outputs for one (prompt, condition) pair.
struct SampleSet {
    Condition condition = Condition::baseline;
    std::vector<OutputSample> samples;
    GenerationRequest request;

    std::size_t k() const { return samples.size(); }

    void validate() const {
        require(!samples.empty(), ErrorCode::InvalidSampleSize, "sample set is empty");
        for (const auto& s : samples) s.validate();
    }
};

enum class DistributionLabel { p0, p1, permuted_p0, permuted_p1 };

inline const char* distribution_label_name(DistributionLabel l) {
    switch (l) {
        case DistributionLabel::p0: return "P0";
        case DistributionLabel::p1: return "P1";
        case DistributionLabel::permuted_p0: return "permuted_P0";
        case DistributionLabel::permuted_p1: return "permuted_P1";
    }
    return "?";
}

// Multiset of scalar pairwise similarities (the empirical P0 or P1).
struct SimilarityDistribution {
    DistributionLabel label = DistributionLabel::p0;
    std::vector<double> values;
    std::string similarity_id;
};

// Result of one permutation test: effect size and p-value.
struct TestOutcome {
    double omega = 0.0;
    double p_value = 1.0;
    int B = 0;
    std::string measure_id;
    std::string similarity_id;
    std::uint64_t seed = 0;
    int k = 0;
    int exceed_count = 0;
};

enum class PerturbationKind { control, target, unlabeled };

inline const char* perturbation_kind_name(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::control: return "control";
        case PerturbationKind::target: return "target";
        case PerturbationKind::unlabeled: return "unlabeled";
    }
    return "?";
}

enum class TransformKind { prefix_text, suffix_text, template_substitution, model_swap };

inline const char* transform_kind_name(TransformKind t) {
    switch (t) {
        case TransformKind::prefix_text: return "prefix_text";
        case TransformKind::suffix_text: return "suffix_text";
        case TransformKind::template_substitution: return "template_substitution";
        case TransformKind::model_swap: return "model_swap";
    }
    return "?";
}

// A named input or system transformation labeled control/target/unlabeled.
// payload carries the prefix/suffix text or the target model id;
// substitutions carries the template_substitution map.
struct PerturbationSpec {
    std::string id;
    PerturbationKind kind = PerturbationKind::unlabeled;
    TransformKind transform = TransformKind::prefix_text;
    std::string payload;
    std::map<std::string, std::string> substitutions;
};

struct RocPoint {
    double alpha = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

// Ordered (alpha, FPR, TPR) points plus trapezoidal AUC over (FPR, TPR).
struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

// ---------------------------------------------------------------------------
// apply_perturbation: pure; never mutates its input request.
// ---------------------------------------------------------------------------

namespace detail {

// Replaces every `{key}` placeholder; keys are [A-Za-z0-9_]+. A placeholder
// with no entry in the map is an error; unused map entries are allowed.
inline std::string substitute_template(const std::string& prompt,
                                       const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(prompt.size());
    std::size_t i = 0;
    while (i < prompt.size()) {
        if (prompt[i] == '{') {
            std::size_t j = i + 1;
            while (j < prompt.size() &&
                   (std::isalnum(static_cast<unsigned char>(prompt[j])) || prompt[j] == '_'))
                ++j;
            if (j < prompt.size() && prompt[j] == '}' && j > i + 1) {
                const std::string key = prompt.substr(i + 1, j - i - 1);
                auto it = values.find(key);
                require(it != values.end(), ErrorCode::MissingPlaceholder,
                        "no substitution value for placeholder {" + key + "}");
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += prompt[i++];
    }
    return out;
}

} // namespace detail

// Prefix/suffix joining inserts exactly one ASCII space between payload and
// prompt, none when the payload is empty. model_swap preserves the prompt
// byte-for-byte; the configured_models list gates which swaps are legal.
inline GenerationRequest apply_perturbation(const PerturbationSpec& spec,
                                            const GenerationRequest& request,
                                            const std::vector<std::string>& configured_models = {}) {
    GenerationRequest out = request;
    switch (spec.transform) {
        case TransformKind::prefix_text:
            if (!spec.payload.empty()) out.prompt = spec.payload + " " + request.prompt;
            break;
        case TransformKind::suffix_text:
            if (!spec.payload.empty()) out.prompt = request.prompt + " " + spec.payload;
            break;
        case TransformKind::template_substitution:
            out.prompt = detail::substitute_template(request.prompt, spec.substitutions);
            break;
        case TransformKind::model_swap: {
            bool known = false;
            for (const auto& m : configured_models)
                if (m == spec.payload) { known = true; break; }
            require(known, ErrorCode::UnknownModel,
                    "model_swap target '" + spec.payload + "' is not configured");
            out.model_id = spec.payload;
            break;
        }
    }
    return out;
}

} // namespace dbpa
