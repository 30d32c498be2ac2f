// AVX2 lane. Compiled with -mavx2 in its own translation unit; only ever
// called after the dispatcher has confirmed CPU support. Vector bodies use
// mul/add/div (no FMA) in the same order as cellmath.hpp, and the logarithm
// is evaluated lane-by-lane with std::log, so results match the scalar lane
// bit-for-bit.

#if defined(HEXHEAT_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "kernel_table.hpp"
#include "cellmath.hpp"

namespace hexheat::kernels::detail {

namespace {

constexpr std::size_t kStep = 4; // doubles per __m256d

inline __m256d log_lanes(__m256d v) {
    alignas(32) double buf[kStep];
    _mm256_store_pd(buf, v);
    for (std::size_t j = 0; j < kStep; ++j) buf[j] = std::log(buf[j]);
    return _mm256_load_pd(buf);
}

void rescale_affine(const double* in, double* out, std::size_t n,
                    double scale, double offset, double nodata) {
    const __m256d vscale = _mm256_set1_pd(scale);
    const __m256d voffset = _mm256_set1_pd(offset);
    const __m256d vnod = _mm256_set1_pd(nodata);
    std::size_t i = 0;
    for (; i + kStep <= n; i += kStep) {
        const __m256d q = _mm256_loadu_pd(in + i);
        const __m256d miss = _mm256_cmp_pd(q, vnod, _CMP_EQ_OQ);
        const __m256d r =
            _mm256_add_pd(_mm256_mul_pd(vscale, q), voffset);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(r, vnod, miss));
    }
    for (; i < n; ++i) {
        out[i] = in[i] == nodata ? nodata
                                 : cell::rescale_affine(in[i], scale, offset);
    }
}

void brightness_temperature(const double* radiance, double* out,
                            std::size_t n, double k1, double k2,
                            double nodata) {
    const __m256d vk1 = _mm256_set1_pd(k1);
    const __m256d vk2 = _mm256_set1_pd(k2);
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d vnod = _mm256_set1_pd(nodata);
    std::size_t i = 0;
    for (; i + kStep <= n; i += kStep) {
        const __m256d L = _mm256_loadu_pd(radiance + i);
        const __m256d miss = _mm256_cmp_pd(L, vnod, _CMP_EQ_OQ);
        const __m256d arg = _mm256_add_pd(_mm256_div_pd(vk1, L), vone);
        const __m256d t = _mm256_div_pd(vk2, log_lanes(arg));
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(t, vnod, miss));
    }
    for (; i < n; ++i) {
        out[i] = radiance[i] == nodata
                     ? nodata
                     : cell::brightness_temperature(radiance[i], k1, k2);
    }
}

void normalized_difference(const double* a, const double* b, double* out,
                           std::size_t n, double nodata) {
    const __m256d vnod = _mm256_set1_pd(nodata);
    const __m256d vzero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kStep <= n; i += kStep) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        const __m256d sum = _mm256_add_pd(va, vb);
        __m256d miss = _mm256_or_pd(_mm256_cmp_pd(va, vnod, _CMP_EQ_OQ),
                                    _mm256_cmp_pd(vb, vnod, _CMP_EQ_OQ));
        miss = _mm256_or_pd(miss, _mm256_cmp_pd(sum, vzero, _CMP_EQ_OQ));
        const __m256d q = _mm256_div_pd(_mm256_sub_pd(va, vb), sum);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(q, vnod, miss));
    }
    for (; i < n; ++i) {
        out[i] = (a[i] == nodata || b[i] == nodata)
                     ? nodata
                     : cell::normalized_difference(a[i], b[i], nodata);
    }
}

void vegetation_proportion(const double* ndvi, double* out, std::size_t n,
                           double lo, double hi, double nodata) {
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vrange = _mm256_set1_pd(hi - lo);
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d vnod = _mm256_set1_pd(nodata);
    std::size_t i = 0;
    for (; i + kStep <= n; i += kStep) {
        const __m256d v = _mm256_loadu_pd(ndvi + i);
        const __m256d miss = _mm256_cmp_pd(v, vnod, _CMP_EQ_OQ);
        const __m256d t = _mm256_div_pd(_mm256_sub_pd(v, vlo), vrange);
        const __m256d sq = _mm256_mul_pd(t, t);
        const __m256d r = _mm256_min_pd(sq, vone);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(r, vnod, miss));
    }
    for (; i < n; ++i) {
        out[i] = ndvi[i] == nodata
                     ? nodata
                     : cell::vegetation_proportion(ndvi[i], lo, hi);
    }
}

void linear_emissivity(const double* pv, double* out, std::size_t n,
                       double gain, double base, double nodata) {
    const __m256d vgain = _mm256_set1_pd(gain);
    const __m256d vbase = _mm256_set1_pd(base);
    const __m256d vnod = _mm256_set1_pd(nodata);
    std::size_t i = 0;
    for (; i + kStep <= n; i += kStep) {
        const __m256d v = _mm256_loadu_pd(pv + i);
        const __m256d miss = _mm256_cmp_pd(v, vnod, _CMP_EQ_OQ);
        const __m256d r = _mm256_add_pd(_mm256_mul_pd(vgain, v), vbase);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(r, vnod, miss));
    }
    for (; i < n; ++i) {
        out[i] = pv[i] == nodata ? nodata
                                 : cell::linear_emissivity(pv[i], gain, base);
    }
}

void surface_temperature(const double* bt, const double* emissivity,
                         double* out, std::size_t n, double wavelength,
                         double rho, double shift, double nodata) {
    const __m256d vwl = _mm256_set1_pd(wavelength);
    const __m256d vrho = _mm256_set1_pd(rho);
    const __m256d vshift = _mm256_set1_pd(shift);
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d vnod = _mm256_set1_pd(nodata);
    std::size_t i = 0;
    for (; i + kStep <= n; i += kStep) {
        const __m256d t = _mm256_loadu_pd(bt + i);
        const __m256d eps = _mm256_loadu_pd(emissivity + i);
        const __m256d miss =
            _mm256_or_pd(_mm256_cmp_pd(t, vnod, _CMP_EQ_OQ),
                         _mm256_cmp_pd(eps, vnod, _CMP_EQ_OQ));
        const __m256d term = _mm256_mul_pd(
            _mm256_div_pd(_mm256_mul_pd(vwl, t), vrho), log_lanes(eps));
        const __m256d lst =
            _mm256_sub_pd(_mm256_div_pd(t, _mm256_add_pd(vone, term)),
                          vshift);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(lst, vnod, miss));
    }
    for (; i < n; ++i) {
        out[i] = (bt[i] == nodata || emissivity[i] == nodata)
                     ? nodata
                     : cell::surface_temperature(bt[i], emissivity[i],
                                                 wavelength, rho, shift);
    }
}

} // namespace

const KernelTable avx2_table = {
    &rescale_affine,        &brightness_temperature, &normalized_difference,
    &vegetation_proportion, &linear_emissivity,      &surface_temperature,
};

} // namespace hexheat::kernels::detail

#endif // HEXHEAT_HAVE_AVX2
