#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "hexheat/errors.hpp"
#include "hexheat/geocode.hpp"

// httplib last: it drags in <resolv.h>, whose _res macro mangles Eigen.
#include <httplib.h>

using namespace hexheat;
namespace fs = std::filesystem;

namespace {

// Local stand-in for the coordinate service: /geocode?address=... returns
// planar coordinates derived from the address, "UNKNOWN ..." is a 404.
class StubService {
public:
    StubService() {
        server_.Get("/geocode", [this](const httplib::Request& req,
                                       httplib::Response& res) {
            requests_.fetch_add(1);
            const std::string address = req.get_param_value("address");
            if (address.rfind("UNKNOWN", 0) == 0) {
                res.status = 404;
                return;
            }
            if (address.rfind("BROKEN", 0) == 0) {
                res.set_content("not json at all", "text/plain");
                return;
            }
            const double x = 1000.0 + 10.0 * static_cast<double>(
                                                  address.size());
            res.set_content("{\"x\": " + std::to_string(x) +
                                ", \"y\": 2000.5}",
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubService() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const {
        return "http://127.0.0.1:" + std::to_string(port_);
    }

    int requests() const { return requests_.load(); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> requests_{0};
};

BuildingRecord record(std::string address) {
    BuildingRecord r;
    r.address_key = std::move(address);
    r.height_storeys = 10;
    r.dwelling_units = 80;
    r.residential_flag = 1;
    return r;
}

struct TempDir {
    TempDir() {
        path = fs::temp_directory_path() /
               ("hexheat_geo_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter_++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path path;
    static inline int counter_ = 0;
};

} // namespace

TEST_CASE("geocode resolves addresses, caches, and never refetches") {
    StubService stub;
    TempDir tmp;
    GeocodeConfig cfg;
    cfg.base_url = stub.base_url();
    cfg.cache_dir = (tmp.path / "cache").string();
    cfg.rate_limit_per_s = 0.0; // unthrottled

    GeocodeClient client(cfg);
    auto out1 = client.geocode({record("BLK 1"), record("BLK 22")});
    CHECK(out1.records[0].location.has_value());
    CHECK(out1.records[1].location.has_value());
    CHECK(out1.service_calls == 2);
    CHECK(out1.cache_hits == 0);
    CHECK(stub.requests() == 2);

    // a fresh client instance reads the same cache: zero network traffic
    GeocodeClient client2(cfg);
    auto out2 = client2.geocode({record("BLK 1"), record("BLK 22")});
    CHECK(out2.cache_hits == 2);
    CHECK(out2.service_calls == 0);
    CHECK(stub.requests() == 2);
    CHECK(out2.records[0].location->x == out1.records[0].location->x);
}

TEST_CASE("records that already have coordinates are left untouched") {
    GeocodeConfig cfg; // no base_url, no cache: must not matter
    GeocodeClient client(cfg);
    BuildingRecord r = record("ANYWHERE");
    r.location = GeoPoint{5.0, 6.0};
    const auto out = client.geocode({r});
    CHECK(out.records[0].location->x == 5.0);
    CHECK(out.service_calls == 0);
}

TEST_CASE("no-match addresses land in the rejection report") {
    StubService stub;
    TempDir tmp;
    GeocodeConfig cfg;
    cfg.base_url = stub.base_url();
    cfg.cache_dir = (tmp.path / "cache").string();
    cfg.rate_limit_per_s = 0.0;

    GeocodeClient client(cfg);
    auto out = client.geocode(
        {record("BLK 9"), record("UNKNOWN PLACE"), record("UNKNOWN ALSO")});
    CHECK(out.records[0].location.has_value());
    CHECK(!out.records[1].location.has_value());
    REQUIRE(out.rejections.size() == 2);
    CHECK(out.rejections[0].address_key == "UNKNOWN ALSO"); // sorted

    // negative results are cached too
    auto out2 = GeocodeClient(cfg).geocode({record("UNKNOWN PLACE")});
    CHECK(out2.cache_hits == 1);
    CHECK(out2.service_calls == 0);
    REQUIRE(out2.rejections.size() == 1);

    std::ostringstream csv;
    write_rejections_csv(out.rejections, csv);
    CHECK(csv.str().rfind("address,reason\n", 0) == 0);
    CHECK(csv.str().find("UNKNOWN PLACE") != std::string::npos);
}

TEST_CASE("rate throttle spaces out service calls") {
    StubService stub;
    TempDir tmp;
    GeocodeConfig cfg;
    cfg.base_url = stub.base_url();
    cfg.cache_dir = (tmp.path / "cache").string();
    cfg.rate_limit_per_s = 1.0; // 1 request per second

    const auto start = std::chrono::steady_clock::now();
    GeocodeClient(cfg).geocode({record("BLK A"), record("BLK B")});
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(std::chrono::duration<double>(elapsed).count() >= 1.0);
}

TEST_CASE("malformed responses raise ServiceError") {
    StubService stub;
    TempDir tmp;
    GeocodeConfig cfg;
    cfg.base_url = stub.base_url();
    cfg.cache_dir = (tmp.path / "cache").string();
    cfg.rate_limit_per_s = 0.0;

    CHECK_THROWS_WITH_AS(GeocodeClient(cfg).geocode({record("BROKEN 1")}),
                         doctest::Contains("malformed"), ServiceError);
}

TEST_CASE("unreachable service fails after bounded retries") {
    TempDir tmp;
    GeocodeConfig cfg;
    cfg.base_url = "http://127.0.0.1:1"; // nothing listens here
    cfg.cache_dir = (tmp.path / "cache").string();
    cfg.rate_limit_per_s = 0.0;
    cfg.max_retries = 1;
    CHECK_THROWS_AS(GeocodeClient(cfg).geocode({record("BLK X")}),
                    ServiceError);
}

TEST_CASE("missing base_url with pending addresses is a config error") {
    TempDir tmp;
    GeocodeConfig cfg;
    cfg.cache_dir = (tmp.path / "cache").string();
    CHECK_THROWS_AS(GeocodeClient(cfg).geocode({record("BLK X")}),
                    ConfigError);
}

TEST_CASE("concurrent geocoding respects the worker bound and completes") {
    StubService stub;
    TempDir tmp;
    GeocodeConfig cfg;
    cfg.base_url = stub.base_url();
    cfg.cache_dir = (tmp.path / "cache").string();
    cfg.rate_limit_per_s = 0.0;
    cfg.max_concurrency = 4;

    std::vector<BuildingRecord> records;
    for (int i = 0; i < 24; ++i) {
        records.push_back(record("BLK " + std::to_string(i)));
    }
    const auto out = GeocodeClient(cfg).geocode(records);
    CHECK(out.service_calls == 24);
    for (const auto& r : out.records) {
        CHECK(r.location.has_value());
    }
}
