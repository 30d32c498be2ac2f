#include "hexheat/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "hexheat/errors.hpp"
#include "kernel_table.hpp"

namespace hexheat::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(HEXHEAT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const detail::KernelTable* table_for(Lane lane) {
#if defined(HEXHEAT_HAVE_AVX2)
    if (lane == Lane::avx2) return &detail::avx2_table;
#endif
    (void)lane;
    return &detail::scalar_table;
}

Lane default_lane() {
    if (const char* env = std::getenv("HEXHEAT_SIMD")) {
        const std::string v(env);
        if (v == "scalar") return Lane::scalar;
        if (v == "avx2") {
            if (!cpu_has_avx2()) {
                throw NumericError(
                    "HEXHEAT_SIMD=avx2 requested but AVX2 is unavailable");
            }
            return Lane::avx2;
        }
        throw ConfigError("HEXHEAT_SIMD must be 'scalar' or 'avx2', got '" +
                          v + "'");
    }
    return cpu_has_avx2() ? Lane::avx2 : Lane::scalar;
}

std::atomic<const detail::KernelTable*>& active_table() {
    static std::atomic<const detail::KernelTable*> table{
        table_for(default_lane())};
    return table;
}

std::atomic<Lane>& lane_state() {
    static std::atomic<Lane> lane{default_lane()};
    return lane;
}

} // namespace

Lane active_lane() { return lane_state().load(std::memory_order_relaxed); }

const char* lane_name(Lane lane) {
    return lane == Lane::avx2 ? "avx2" : "scalar";
}

bool lane_supported(Lane lane) {
    return lane == Lane::scalar || cpu_has_avx2();
}

void force_lane(Lane lane) {
    if (!lane_supported(lane)) {
        throw NumericError(std::string("kernel lane unsupported: ") +
                           lane_name(lane));
    }
    lane_state().store(lane, std::memory_order_relaxed);
    active_table().store(table_for(lane), std::memory_order_relaxed);
}

void reset_lane() { force_lane(default_lane()); }

#define HEXHEAT_DISPATCH(fn, ...) \
    active_table().load(std::memory_order_relaxed)->fn(__VA_ARGS__)

void rescale_affine(const double* in, double* out, std::size_t n,
                    double scale, double offset, double nodata) {
    HEXHEAT_DISPATCH(rescale_affine, in, out, n, scale, offset, nodata);
}

void brightness_temperature(const double* radiance, double* out,
                            std::size_t n, double k1, double k2,
                            double nodata) {
    HEXHEAT_DISPATCH(brightness_temperature, radiance, out, n, k1, k2,
                     nodata);
}

void normalized_difference(const double* a, const double* b, double* out,
                           std::size_t n, double nodata) {
    HEXHEAT_DISPATCH(normalized_difference, a, b, out, n, nodata);
}

void vegetation_proportion(const double* ndvi, double* out, std::size_t n,
                           double lo, double hi, double nodata) {
    HEXHEAT_DISPATCH(vegetation_proportion, ndvi, out, n, lo, hi, nodata);
}

void linear_emissivity(const double* pv, double* out, std::size_t n,
                       double gain, double base, double nodata) {
    HEXHEAT_DISPATCH(linear_emissivity, pv, out, n, gain, base, nodata);
}

void surface_temperature(const double* bt, const double* emissivity,
                         double* out, std::size_t n, double wavelength,
                         double rho, double shift, double nodata) {
    HEXHEAT_DISPATCH(surface_temperature, bt, emissivity, out, n, wavelength,
                     rho, shift, nodata);
}

#undef HEXHEAT_DISPATCH

} // namespace hexheat::kernels
