#pragma once

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "dbpa/core.hpp"
#include "dbpa/errors.hpp"
#include "dbpa/rng.hpp"

namespace dbpa {

// ---------------------------------------------------------------------------
// Content-addressed disk cache: one JSON record per line, append-only,
// fsync on batch boundaries. Layout: <cache_dir>/<provider_id>/<model_id>.jsonl
// Later records with the same key win, so embedding back-fill and crash
// recovery need no rewrites.
// ---------------------------------------------------------------------------

struct CacheKey {
    std::string provider_id;
    std::string model_id;
    std::string prompt;
    int sample_index = 0;
    std::uint64_t seed = 0;
    SamplingParams params;

    // Canonical JSON of the key fields; nlohmann objects serialize with
    // sorted keys, so this string is a pure function of the fields. The
    // sampling seed is folded in as a sampling parameter.
    std::string canonical() const {
        nlohmann::json j;
        j["provider_id"] = provider_id;
        j["model_id"] = model_id;
        j["prompt"] = prompt;
        j["sample_index"] = sample_index;
        j["params"] = {{"temperature", params.temperature},
                       {"max_tokens", params.max_tokens},
                       {"extra", params.extra},
                       {"seed", seed}};
        return j.dump();
    }

    std::string digest() const {
        const std::string c = canonical();
        char buf[33];
        std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                      static_cast<unsigned long long>(fnv1a64(c)),
                      static_cast<unsigned long long>(fnv1a64(c, 0x9AE16A3B2F90404FULL)));
        return buf;
    }
};

struct CacheEntry {
    std::string text;
    std::optional<std::vector<double>> embedding;
    std::string embedder_id; // set when `embedding` holds a value
};

class DiskCache {
public:
    explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::optional<CacheEntry> find(const CacheKey& key) {
        std::lock_guard lock(mutex_);
        ensure_loaded(key.provider_id, key.model_id);
        auto it = index_.find(key.canonical());
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    void put(const CacheKey& key, const CacheEntry& entry) {
        const std::pair<CacheKey, CacheEntry> one[] = {{key, entry}};
        put_batch(one);
    }

    void put_batch(std::span<const std::pair<CacheKey, CacheEntry>> records) {
        if (records.empty()) return;
        std::lock_guard lock(mutex_);
        // group appends per file; one fsync per file per batch
        std::map<std::filesystem::path, std::string> appends;
        for (const auto& [key, entry] : records) {
            ensure_loaded(key.provider_id, key.model_id);
            appends[file_for(key.provider_id, key.model_id)] += record_line(key, entry);
            index_[key.canonical()] = entry;
        }
        for (const auto& [path, data] : appends) {
            std::filesystem::create_directories(path.parent_path());
            std::FILE* f = std::fopen(path.c_str(), "ab");
            require(f != nullptr, ErrorCode::IoError, "cannot open cache file " + path.string());
            const bool ok = std::fwrite(data.data(), 1, data.size(), f) == data.size() &&
                            std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
            std::fclose(f);
            require(ok, ErrorCode::IoError, "cache write failed for " + path.string());
        }
    }

private:
    static std::string sanitize(const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (char c : s)
            out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')
                       ? c
                       : '_';
        return out.empty() ? "_" : out;
    }

    std::filesystem::path file_for(const std::string& provider_id, const std::string& model_id) const {
        return dir_ / sanitize(provider_id) / (sanitize(model_id) + ".jsonl");
    }

    static std::string timestamp_utc() {
        std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    static std::string record_line(const CacheKey& key, const CacheEntry& entry) {
        nlohmann::json j;
        j["key"] = key.digest();
        j["provider_id"] = key.provider_id;
        j["model_id"] = key.model_id;
        j["prompt"] = key.prompt;
        j["sample_index"] = key.sample_index;
        j["seed"] = key.seed;
        j["temperature"] = key.params.temperature;
        j["max_tokens"] = key.params.max_tokens;
        j["extra"] = key.params.extra;
        j["text"] = entry.text;
        if (entry.embedding) {
            j["embedding"] = *entry.embedding;
            j["embedder_id"] = entry.embedder_id;
        }
        j["created_at"] = timestamp_utc();
        return j.dump() + "\n";
    }

    void ensure_loaded(const std::string& provider_id, const std::string& model_id) {
        const auto path = file_for(provider_id, model_id);
        if (!loaded_.insert(path.string()).second) return;
        std::ifstream in(path);
        if (!in) return;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) continue; // tolerate a torn tail line
            try {
                CacheKey key;
                key.provider_id = j.at("provider_id").get<std::string>();
                key.model_id = j.at("model_id").get<std::string>();
                key.prompt = j.at("prompt").get<std::string>();
                key.sample_index = j.at("sample_index").get<int>();
                key.seed = j.at("seed").get<std::uint64_t>();
                key.params.temperature = j.at("temperature").get<double>();
                key.params.max_tokens = j.at("max_tokens").get<int>();
                key.params.extra = j.at("extra").get<std::map<std::string, std::string>>();
                CacheEntry entry;
                entry.text = j.at("text").get<std::string>();
                if (j.contains("embedding")) {
                    entry.embedding = j.at("embedding").get<std::vector<double>>();
                    entry.embedder_id = j.value("embedder_id", std::string());
                }
                index_[key.canonical()] = std::move(entry);
            } catch (const nlohmann::json::exception&) {
                continue;
            }
        }
    }

    std::filesystem::path dir_;
    std::mutex mutex_;
    std::map<std::string, CacheEntry> index_;
    std::set<std::string> loaded_;
};

} // namespace dbpa
