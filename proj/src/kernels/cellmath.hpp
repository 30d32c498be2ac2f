#pragma once

#include <cmath>

// Per-cell formulas shared by the scalar lane and the remainder loops of the
// SIMD lane. The vector bodies re-express exactly these operation sequences,
// which is what makes the lanes bit-identical.

namespace hexheat::kernels::cell {

inline double rescale_affine(double q, double scale, double offset) {
    return scale * q + offset;
}

inline double brightness_temperature(double radiance, double k1, double k2) {
    return k2 / std::log(k1 / radiance + 1.0);
}

inline double normalized_difference(double a, double b, double nodata) {
    const double sum = a + b;
    if (sum == 0.0) return nodata;
    return (a - b) / sum;
}

inline double vegetation_proportion(double ndvi, double lo, double hi) {
    const double t = (ndvi - lo) / (hi - lo);
    const double sq = t * t;
    return sq < 1.0 ? sq : 1.0;
}

inline double linear_emissivity(double pv, double gain, double base) {
    return gain * pv + base;
}

inline double surface_temperature(double bt, double eps, double wavelength,
                                  double rho, double shift) {
    const double term = ((wavelength * bt) / rho) * std::log(eps);
    return bt / (1.0 + term) - shift;
}

} // namespace hexheat::kernels::cell
