#pragma once

#include <string>
#include <vector>

#include "hexheat/features.hpp"

namespace hexheat {

struct GeocodeConfig {
    /// Service root, e.g. "http://localhost:8080". The client issues
    /// GET <base_url>/geocode?address=<urlencoded> and expects a JSON
    /// document with numeric "x" and "y" fields; a 404 means no match.
    std::string base_url;
    double rate_limit_per_s = 1.0;
    std::size_t max_concurrency = 1;
    std::string cache_dir;
    int max_retries = 3;
};

struct GeocodeRejection {
    std::string address_key;
    std::string reason;
};

struct GeocodeOutcome {
    /// All input records in input order; resolved ones carry a location.
    std::vector<BuildingRecord> records;
    std::vector<GeocodeRejection> rejections;
    std::size_t cache_hits = 0;
    std::size_t service_calls = 0;
};

/// Resolves building addresses to planar coordinates through the external
/// service, caching every response on disk (one JSON document per address)
/// so later runs never re-fetch. Requests respect a global rate throttle
/// and a bounded worker count; cache writes are write-temp-then-rename.
class GeocodeClient {
public:
    explicit GeocodeClient(GeocodeConfig config);

    /// Fill in missing locations. Unresolvable addresses are collected in
    /// the rejection report, never silently dropped. Throws ConfigError when
    /// records need geocoding but no base_url is configured, ServiceError on
    /// persistent network failures or malformed responses.
    GeocodeOutcome geocode(std::vector<BuildingRecord> records);

private:
    GeocodeConfig config_;
};

void write_rejections_csv(const std::vector<GeocodeRejection>& rejections,
                          std::ostream& out);

} // namespace hexheat
