#include <cstddef>

#include "kernel_table.hpp"
#include "cellmath.hpp"

namespace hexheat::kernels::detail {

namespace {

void rescale_affine(const double* in, double* out, std::size_t n,
                    double scale, double offset, double nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = in[i] == nodata ? nodata
                                 : cell::rescale_affine(in[i], scale, offset);
    }
}

void brightness_temperature(const double* radiance, double* out,
                            std::size_t n, double k1, double k2,
                            double nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = radiance[i] == nodata
                     ? nodata
                     : cell::brightness_temperature(radiance[i], k1, k2);
    }
}

void normalized_difference(const double* a, const double* b, double* out,
                           std::size_t n, double nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (a[i] == nodata || b[i] == nodata)
                     ? nodata
                     : cell::normalized_difference(a[i], b[i], nodata);
    }
}

void vegetation_proportion(const double* ndvi, double* out, std::size_t n,
                           double lo, double hi, double nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = ndvi[i] == nodata
                     ? nodata
                     : cell::vegetation_proportion(ndvi[i], lo, hi);
    }
}

void linear_emissivity(const double* pv, double* out, std::size_t n,
                       double gain, double base, double nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = pv[i] == nodata ? nodata
                                 : cell::linear_emissivity(pv[i], gain, base);
    }
}

void surface_temperature(const double* bt, const double* emissivity,
                         double* out, std::size_t n, double wavelength,
                         double rho, double shift, double nodata) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (bt[i] == nodata || emissivity[i] == nodata)
                     ? nodata
                     : cell::surface_temperature(bt[i], emissivity[i],
                                                 wavelength, rho, shift);
    }
}

} // namespace

const KernelTable scalar_table = {
    &rescale_affine,        &brightness_temperature, &normalized_difference,
    &vegetation_proportion, &linear_emissivity,      &surface_temperature,
};

} // namespace hexheat::kernels::detail
