#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dbpa/cache.hpp"
#include "dbpa/core.hpp"
#include "dbpa/errors.hpp"
#include "dbpa/rng.hpp"
#include "dbpa/text.hpp"

namespace dbpa {

// ---------------------------------------------------------------------------
// Pluggable generation and embedding backends. The statistics core never
// performs I/O directly; everything flows through these interfaces plus the
// disk cache.
// ---------------------------------------------------------------------------

struct ProviderCapabilities {
    bool supports_seed = false;
};

class GeneratorProvider {
public:
    virtual ~GeneratorProvider() = default;
    virtual std::string id() const = 0;
    virtual ProviderCapabilities capabilities() const = 0;
    virtual bool remote() const { return false; }
    // One sample. Seeded providers must be a pure function of
    // (configuration, seed, sample_index).
    virtual OutputSample generate(const GenerationRequest& request, std::uint64_t seed,
                                  int sample_index) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual bool remote() const { return false; }
    // Deterministic: identical text -> identical vector, across calls and
    // processes. Output is order-aligned with the input.
    virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) = 0;
};

struct SampleStats {
    std::atomic<std::size_t> provider_calls{0};
    std::atomic<std::size_t> cache_hits{0};
    std::atomic<std::size_t> embed_calls{0};
    std::atomic<std::size_t> embed_cache_hits{0};
};

struct SamplerOptions {
    DiskCache* cache = nullptr;
    int parallelism = 1;
    bool network_allowed = true;
    SampleStats* stats = nullptr;
};

namespace detail {

// Runs fn(i) for i in [0, n) on at most `parallelism` threads. The first
// exception wins and is rethrown after all workers finish.
template <typename Fn>
inline void bounded_parallel_for(std::size_t n, int parallelism, Fn&& fn) {
    const int threads = std::min<int>(std::max(1, parallelism), static_cast<int>(n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace detail

// Draws k samples, reusing cached ones. Uncached indices are fetched with
// bounded parallelism; the returned set is ordered by sample_index regardless
// of completion order. Fetched samples are persisted even when a later index
// fails, but a failed run never returns a partial SampleSet.
inline SampleSet sample(GeneratorProvider& provider, const GenerationRequest& request, int k,
                        std::uint64_t seed, Condition condition = Condition::baseline,
                        const SamplerOptions& options = {}) {
    request.validate();
    require(k >= 2, ErrorCode::InvalidSampleSize, "sample requires k >= 2");

    SampleSet set;
    set.condition = condition;
    set.request = request;
    set.samples.resize(static_cast<std::size_t>(k));

    std::vector<CacheKey> keys(static_cast<std::size_t>(k));
    std::vector<std::size_t> misses;
    for (int i = 0; i < k; ++i) {
        auto& key = keys[static_cast<std::size_t>(i)];
        key.provider_id = provider.id();
        key.model_id = request.model_id;
        key.prompt = request.prompt;
        key.sample_index = i;
        key.seed = seed;
        key.params = request.sampling_params;

        std::optional<CacheEntry> hit;
        if (options.cache) hit = options.cache->find(key);
        auto& out = set.samples[static_cast<std::size_t>(i)];
        out.provenance = {provider.id(), request.model_id, i, hit.has_value()};
        if (hit) {
            out.text = hit->text;
            if (options.stats) options.stats->cache_hits.fetch_add(1);
        } else {
            misses.push_back(static_cast<std::size_t>(i));
        }
    }

    if (!misses.empty()) {
        require(!provider.remote() || options.network_allowed, ErrorCode::ProviderUnavailable,
                "cache-only mode: " + std::to_string(misses.size()) + " samples missing for " +
                    provider.id() + "/" + request.model_id);
        std::vector<std::pair<CacheKey, CacheEntry>> fetched(misses.size());
        std::vector<char> done(misses.size(), 0);
        std::exception_ptr error;
        try {
            detail::bounded_parallel_for(misses.size(), options.parallelism, [&](std::size_t m) {
                const std::size_t i = misses[m];
                OutputSample s = provider.generate(request, seed, static_cast<int>(i));
                s.provenance = {provider.id(), request.model_id, static_cast<int>(i), false};
                fetched[m] = {keys[i], CacheEntry{s.text, std::nullopt, ""}};
                done[m] = 1;
                set.samples[i] = std::move(s);
                if (options.stats) options.stats->provider_calls.fetch_add(1);
            });
        } catch (...) {
            error = std::current_exception();
        }
        if (options.cache) {
            std::vector<std::pair<CacheKey, CacheEntry>> completed;
            for (std::size_t m = 0; m < misses.size(); ++m)
                if (done[m]) completed.push_back(std::move(fetched[m]));
            options.cache->put_batch(completed);
        }
        if (error) std::rethrow_exception(error);
    }
    return set;
}

// Returns a copy of `set` where every sample carries an embedding of the
// provider's dimension. Duplicate texts embed identically and are embedded
// once. Embeddings are cached under the embedder's own provider directory,
// keyed by text, so any generator's outputs share them.
inline SampleSet embed_all(EmbeddingProvider& provider, const SampleSet& set,
                           const SamplerOptions& options = {}) {
    SampleSet out = set;
    std::vector<std::string> unique_texts;
    std::map<std::string, std::size_t> slot; // text -> index into unique_texts
    for (const auto& s : out.samples) {
        require(!s.text.empty(), ErrorCode::EmptyText, "cannot embed an empty sample text");
        if (slot.emplace(s.text, unique_texts.size()).second) unique_texts.push_back(s.text);
    }

    auto key_for = [&](const std::string& text) {
        CacheKey key;
        key.provider_id = provider.id();
        key.model_id = "embeddings";
        key.prompt = text;
        return key;
    };

    std::vector<std::optional<std::vector<double>>> vectors(unique_texts.size());
    std::vector<std::string> to_embed;
    std::vector<std::size_t> to_embed_slot;
    for (std::size_t i = 0; i < unique_texts.size(); ++i) {
        if (options.cache) {
            if (auto hit = options.cache->find(key_for(unique_texts[i]));
                hit && hit->embedding && hit->embedder_id == provider.id()) {
                vectors[i] = hit->embedding;
                if (options.stats) options.stats->embed_cache_hits.fetch_add(1);
                continue;
            }
        }
        to_embed.push_back(unique_texts[i]);
        to_embed_slot.push_back(i);
    }

    if (!to_embed.empty()) {
        require(!provider.remote() || options.network_allowed, ErrorCode::ProviderUnavailable,
                "cache-only mode: " + std::to_string(to_embed.size()) + " embeddings missing");
        auto embedded = provider.embed_batch(to_embed);
        require(embedded.size() == to_embed.size(), ErrorCode::ProtocolViolation,
                "embedding batch size mismatch");
        std::vector<std::pair<CacheKey, CacheEntry>> records;
        for (std::size_t j = 0; j < embedded.size(); ++j) {
            require(embedded[j].size() == provider.dimension(), ErrorCode::ProtocolViolation,
                    "embedding dimension " + std::to_string(embedded[j].size()) +
                        " != declared " + std::to_string(provider.dimension()));
            vectors[to_embed_slot[j]] = std::move(embedded[j]);
            if (options.stats) options.stats->embed_calls.fetch_add(1);
            if (options.cache)
                records.emplace_back(key_for(to_embed[j]),
                                     CacheEntry{to_embed[j], vectors[to_embed_slot[j]],
                                                provider.id()});
        }
        if (options.cache) options.cache->put_batch(records);
    }

    for (auto& s : out.samples) s.embedding = vectors[slot[s.text]];
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic local embedder: whitespace/punctuation tokenization, each
// token feature-hashed into one of `dimension` signed buckets with a fixed
// 64-bit seed, then L2-normalized.
// ---------------------------------------------------------------------------

class HashingEmbedder : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dimension = 256,
                             std::uint64_t seed = 0x5BD1E995C6A3B493ULL)
        : dimension_(dimension), seed_(seed) {
        require(dimension_ > 0, ErrorCode::InvalidConfig, "embedder dimension must be > 0");
    }

    std::string id() const override {
        return "hashing-d" + std::to_string(dimension_);
    }

    std::size_t dimension() const override { return dimension_; }

    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) override {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& text : texts) out.push_back(embed_one(text));
        return out;
    }

private:
    std::vector<double> embed_one(const std::string& text) const {
        const auto tokens = tokenize(text);
        require(!tokens.empty(), ErrorCode::EmptyText,
                "text tokenizes to zero tokens, cannot embed");
        std::vector<double> v(dimension_, 0.0);
        for (const auto& tok : tokens) {
            const std::uint64_t h = splitmix64(fnv1a64(tok) ^ seed_);
            const std::size_t bucket = static_cast<std::size_t>(h % dimension_);
            v[bucket] += (h >> 63) ? 1.0 : -1.0;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        require(norm > 0.0, ErrorCode::ZeroVector, "hashed embedding collapsed to zero");
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    }

    std::size_t dimension_;
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Registry wiring model ids to providers, shared by the audit workflows.
// ---------------------------------------------------------------------------

class ProviderRegistry {
public:
    void add_generator(const std::string& model_id, std::shared_ptr<GeneratorProvider> provider) {
        require(provider != nullptr, ErrorCode::InvalidConfig, "null generator provider");
        generators_[model_id] = std::move(provider);
    }

    std::shared_ptr<GeneratorProvider> generator_for(const std::string& model_id) const {
        auto it = generators_.find(model_id);
        require(it != generators_.end(), ErrorCode::UnknownModel,
                "no generator configured for model '" + model_id + "'");
        return it->second;
    }

    std::vector<std::string> model_ids() const {
        std::vector<std::string> ids;
        ids.reserve(generators_.size());
        for (const auto& [id, provider] : generators_) ids.push_back(id);
        return ids;
    }

    bool all_seeded() const {
        for (const auto& [id, provider] : generators_)
            if (!provider->capabilities().supports_seed) return false;
        return true;
    }

    void set_embedder(std::shared_ptr<EmbeddingProvider> embedder) {
        embedder_ = std::move(embedder);
    }
    EmbeddingProvider* embedder() const { return embedder_.get(); }

    void set_cache(std::shared_ptr<DiskCache> cache) { cache_ = std::move(cache); }
    DiskCache* cache() const { return cache_.get(); }

    SamplerOptions sampler_options() {
        return SamplerOptions{cache_.get(), parallelism, network_allowed, &stats};
    }

    int parallelism = 1;
    bool network_allowed = true;
    SampleStats stats;

private:
    std::map<std::string, std::shared_ptr<GeneratorProvider>> generators_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    std::shared_ptr<DiskCache> cache_;
};

} // namespace dbpa
