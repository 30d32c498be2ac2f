#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "hexheat/kernels.hpp"
#include "hexheat/rng.hpp"

using namespace hexheat;
namespace k = hexheat::kernels;

namespace {

constexpr double kNodata = -9999.0;

// Mixed magnitudes, sentinels sprinkled in, and awkward lengths so the
// vector remainder path runs too.
std::vector<double> random_input(Rng& rng, std::size_t n, double lo,
                                 double hi) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = rng.uniform() < 0.13 ? kNodata : rng.uniform(lo, hi);
    }
    return v;
}

bool bitwise_equal(const std::vector<double>& a,
                   const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct LaneGuard {
    ~LaneGuard() { k::reset_lane(); }
};

// Runs the op under both lanes and checks bit-identical output.
template <typename Op>
void check_lane_equivalence(const Op& op, std::size_t n) {
    if (!k::lane_supported(k::Lane::avx2)) {
        MESSAGE("AVX2 unavailable; equivalence check skipped");
        return;
    }
    LaneGuard guard;
    std::vector<double> scalar_out(n, 0.0), avx2_out(n, 0.0);
    k::force_lane(k::Lane::scalar);
    op(scalar_out);
    k::force_lane(k::Lane::avx2);
    op(avx2_out);
    REQUIRE(bitwise_equal(scalar_out, avx2_out));
}

} // namespace

TEST_CASE("lane dispatch reports a supported lane") {
    CHECK(k::lane_supported(k::Lane::scalar));
    const k::Lane lane = k::active_lane();
    CHECK((lane == k::Lane::scalar || lane == k::Lane::avx2));
    CHECK(std::string(k::lane_name(k::Lane::scalar)) == "scalar");
    CHECK(std::string(k::lane_name(k::Lane::avx2)) == "avx2");
}

TEST_CASE("scalar and AVX2 lanes are bit-identical on all kernels") {
    Rng rng(2024);
    for (std::size_t n : {1ul, 3ul, 4ul, 7ul, 64ul, 1001ul, 4096ul}) {
        const auto q = random_input(rng, n, 0.0, 65535.0);
        check_lane_equivalence(
            [&](std::vector<double>& out) {
                k::rescale_affine(q.data(), out.data(), n, 3.342e-4, 0.1,
                                  kNodata);
            },
            n);

        const auto radiance = random_input(rng, n, 0.5, 18.0);
        check_lane_equivalence(
            [&](std::vector<double>& out) {
                k::brightness_temperature(radiance.data(), out.data(), n,
                                          774.8853, 1321.0789, kNodata);
            },
            n);

        const auto a = random_input(rng, n, 0.0, 1.0);
        const auto b = random_input(rng, n, 0.0, 1.0);
        check_lane_equivalence(
            [&](std::vector<double>& out) {
                k::normalized_difference(a.data(), b.data(), out.data(), n,
                                         kNodata);
            },
            n);

        const auto ndvi = random_input(rng, n, -1.0, 1.0);
        check_lane_equivalence(
            [&](std::vector<double>& out) {
                k::vegetation_proportion(ndvi.data(), out.data(), n, -0.4,
                                         0.8, kNodata);
            },
            n);

        const auto pv = random_input(rng, n, 0.0, 1.0);
        check_lane_equivalence(
            [&](std::vector<double>& out) {
                k::linear_emissivity(pv.data(), out.data(), n, 0.004, 0.986,
                                     kNodata);
            },
            n);

        const auto bt = random_input(rng, n, 250.0, 340.0);
        const auto eps = random_input(rng, n, 0.90, 1.0);
        check_lane_equivalence(
            [&](std::vector<double>& out) {
                k::surface_temperature(bt.data(), eps.data(), out.data(), n,
                                       10.895e-6, 1.438e-2, 273.15, kNodata);
            },
            n);
    }
}

TEST_CASE("kernels propagate nodata in every lane") {
    const std::vector<double> in = {kNodata, 100.0, kNodata, 3.5, kNodata};
    for (k::Lane lane : {k::Lane::scalar, k::Lane::avx2}) {
        if (!k::lane_supported(lane)) continue;
        LaneGuard guard;
        k::force_lane(lane);
        std::vector<double> out(in.size());
        k::rescale_affine(in.data(), out.data(), in.size(), 2.0, 1.0,
                          kNodata);
        CHECK(out[0] == kNodata);
        CHECK(out[1] == 201.0);
        CHECK(out[2] == kNodata);

        std::vector<double> lst(in.size());
        const std::vector<double> eps(in.size(), 0.99);
        k::surface_temperature(in.data(), eps.data(), lst.data(), in.size(),
                               10.895e-6, 1.438e-2, 0.0, kNodata);
        CHECK(lst[0] == kNodata);
        CHECK(lst[4] == kNodata);

        // nodata in the second input also propagates
        const std::vector<double> bt(in.size(), 300.0);
        k::surface_temperature(bt.data(), in.data(), lst.data(), in.size(),
                               10.895e-6, 1.438e-2, 0.0, kNodata);
        CHECK(lst[0] == kNodata);
        CHECK(lst[1] != kNodata);
    }
}

TEST_CASE("normalized_difference maps a+b==0 to nodata") {
    for (k::Lane lane : {k::Lane::scalar, k::Lane::avx2}) {
        if (!k::lane_supported(lane)) continue;
        LaneGuard guard;
        k::force_lane(lane);
        const std::vector<double> a = {0.0, 0.5, 1.0, -2.0};
        const std::vector<double> b = {0.0, 0.3, 1.0, 2.0};
        std::vector<double> out(a.size());
        k::normalized_difference(a.data(), b.data(), out.data(), a.size(),
                                 kNodata);
        CHECK(out[0] == kNodata);
        CHECK(out[1] == doctest::Approx(0.25));
        CHECK(out[2] == 0.0);
        CHECK(out[3] == kNodata); // -2 + 2 == 0
    }
}

TEST_CASE("vegetation_proportion clamps after squaring") {
    for (k::Lane lane : {k::Lane::scalar, k::Lane::avx2}) {
        if (!k::lane_supported(lane)) continue;
        LaneGuard guard;
        k::force_lane(lane);
        const std::vector<double> ndvi = {-0.9, 0.0, 0.5, 1.0, 1.7, -1.2};
        std::vector<double> out(ndvi.size());
        k::vegetation_proportion(ndvi.data(), out.data(), ndvi.size(), 0.0,
                                 1.0, kNodata);
        CHECK(out[0] == doctest::Approx(0.81)); // square is already in range
        CHECK(out[1] == 0.0);
        CHECK(out[2] == 0.25);
        CHECK(out[3] == 1.0);
        CHECK(out[4] == 1.0); // above hi clamps
        CHECK(out[5] == 1.0); // far below lo clamps too
    }
}
