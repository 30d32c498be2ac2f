#include "hexheat/geocode.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "hexheat/errors.hpp"

namespace fs = std::filesystem;

namespace hexheat {

namespace {

// Stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string percent_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size() * 3);
    for (unsigned char c : s) {
        const bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                           (c >= '0' && c <= '9') || c == '-' || c == '_' ||
                           c == '.' || c == '~';
        if (plain) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        }
    }
    return out;
}

struct CacheEntry {
    bool found = false;
    GeoPoint location;
};

class AddressCache {
public:
    explicit AddressCache(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    std::optional<CacheEntry> lookup(const std::string& address) const {
        std::ifstream in(entry_path(address));
        if (!in) return std::nullopt;
        nlohmann::json doc;
        try {
            in >> doc;
            if (doc.at("address").get<std::string>() != address) {
                return std::nullopt; // hash collision; treat as a miss
            }
            CacheEntry e;
            e.found = doc.at("found").get<bool>();
            if (e.found) {
                e.location = GeoPoint{doc.at("x").get<double>(),
                                      doc.at("y").get<double>()};
            }
            return e;
        } catch (const nlohmann::json::exception&) {
            return std::nullopt; // corrupt entry; refetch and overwrite
        }
    }

    void store(const std::string& address, const CacheEntry& e) {
        nlohmann::ordered_json doc;
        doc["address"] = address;
        doc["found"] = e.found;
        if (e.found) {
            doc["x"] = e.location.x;
            doc["y"] = e.location.y;
        }
        const fs::path target = entry_path(address);
        const fs::path tmp =
            target.string() + ".tmp" +
            std::to_string(
                tmp_counter_.fetch_add(1, std::memory_order_relaxed));
        {
            std::ofstream out(tmp, std::ios::binary);
            out << doc.dump(1, '\t') << '\n';
            if (!out) {
                throw ServiceError("geocode cache: cannot write " +
                                   tmp.string());
            }
        }
        fs::rename(tmp, target);
    }

private:
    fs::path entry_path(const std::string& address) const {
        char name[24];
        std::snprintf(name, sizeof(name), "%016llx.json",
                      static_cast<unsigned long long>(fnv1a64(address)));
        return dir_ / name;
    }

    fs::path dir_;
    mutable std::atomic<std::uint64_t> tmp_counter_{0};
};

// Global min-interval throttle shared by all workers.
class RateThrottle {
public:
    explicit RateThrottle(double per_second)
        : interval_(per_second > 0.0
                        ? std::chrono::duration_cast<
                              std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(1.0 / per_second))
                        : std::chrono::steady_clock::duration::zero()) {}

    void wait() {
        if (interval_ == std::chrono::steady_clock::duration::zero()) return;
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_);
            next_ = slot + interval_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_{
        std::chrono::steady_clock::now()};
    std::mutex mutex_;
};

CacheEntry fetch(const GeocodeConfig& config, httplib::Client& http,
                 RateThrottle& throttle, const std::string& address) {
    const std::string path = "/geocode?address=" + percent_encode(address);
    for (int attempt = 0;; ++attempt) {
        throttle.wait();
        httplib::Result res = http.Get(path);
        if (!res || res->status >= 500) {
            if (attempt >= config.max_retries) {
                throw ServiceError(
                    "geocode: request failed after " +
                    std::to_string(attempt + 1) + " attempts for '" +
                    address + "'" +
                    (res ? " (status " + std::to_string(res->status) + ")"
                         : " (connection error)"));
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
            continue;
        }
        if (res->status == 404) {
            return CacheEntry{}; // no match
        }
        if (res->status != 200) {
            throw ServiceError("geocode: unexpected status " +
                               std::to_string(res->status) + " for '" +
                               address + "'");
        }
        try {
            const nlohmann::json doc = nlohmann::json::parse(res->body);
            CacheEntry e;
            e.found = true;
            e.location = GeoPoint{doc.at("x").get<double>(),
                                  doc.at("y").get<double>()};
            return e;
        } catch (const nlohmann::json::exception& err) {
            throw ServiceError(std::string("geocode: malformed service "
                                           "response for '") + address +
                               "': " + err.what());
        }
    }
}

} // namespace

GeocodeClient::GeocodeClient(GeocodeConfig config)
    : config_(std::move(config)) {}

GeocodeOutcome GeocodeClient::geocode(std::vector<BuildingRecord> records) {
    GeocodeOutcome outcome;

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].location) pending.push_back(i);
    }
    if (pending.empty()) {
        outcome.records = std::move(records);
        return outcome;
    }
    if (config_.cache_dir.empty()) {
        throw ConfigError("geocode: cache_dir is not configured");
    }

    AddressCache cache(config_.cache_dir);

    // Serve from cache first; only cache misses touch the network.
    std::vector<std::size_t> misses;
    std::mutex state_mutex;
    std::vector<GeocodeRejection> rejections;
    for (std::size_t i : pending) {
        if (auto hit = cache.lookup(records[i].address_key)) {
            ++outcome.cache_hits;
            if (hit->found) {
                records[i].location = hit->location;
            } else {
                rejections.push_back(
                    GeocodeRejection{records[i].address_key,
                                     "no match (cached)"});
            }
        } else {
            misses.push_back(i);
        }
    }

    if (!misses.empty()) {
        if (config_.base_url.empty()) {
            throw ConfigError("geocode: " + std::to_string(misses.size()) +
                              " addresses need the service but base_url is "
                              "not configured");
        }
        RateThrottle throttle(config_.rate_limit_per_s);
        std::atomic<std::size_t> cursor{0};
        std::atomic<std::size_t> calls{0};
        std::exception_ptr failure;

        const std::size_t workers =
            std::max<std::size_t>(1, std::min(config_.max_concurrency,
                                              misses.size()));
        const auto work = [&] {
            httplib::Client http(config_.base_url);
            http.set_connection_timeout(5, 0);
            http.set_read_timeout(10, 0);
            while (true) {
                const std::size_t slot =
                    cursor.fetch_add(1, std::memory_order_relaxed);
                if (slot >= misses.size()) return;
                const std::size_t rec = misses[slot];
                const std::string& address = records[rec].address_key;
                try {
                    const CacheEntry e =
                        fetch(config_, http, throttle, address);
                    calls.fetch_add(1, std::memory_order_relaxed);
                    cache.store(address, e);
                    std::lock_guard<std::mutex> lock(state_mutex);
                    if (e.found) {
                        records[rec].location = e.location;
                    } else {
                        rejections.push_back(
                            GeocodeRejection{address, "no match"});
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(state_mutex);
                    if (!failure) failure = std::current_exception();
                    cursor.store(misses.size(), std::memory_order_relaxed);
                    return;
                }
            }
        };

        if (workers == 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
        if (failure) std::rethrow_exception(failure);
        outcome.service_calls = calls.load();
    }

    // Deterministic report order regardless of worker scheduling.
    std::sort(rejections.begin(), rejections.end(),
              [](const GeocodeRejection& a, const GeocodeRejection& b) {
                  return a.address_key < b.address_key;
              });
    outcome.rejections = std::move(rejections);
    outcome.records = std::move(records);
    return outcome;
}

void write_rejections_csv(const std::vector<GeocodeRejection>& rejections,
                          std::ostream& out) {
    std::string text = "address,reason\n";
    for (const auto& r : rejections) {
        text += csv::escape(r.address_key) + "," + csv::escape(r.reason) +
                "\n";
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

} // namespace hexheat
