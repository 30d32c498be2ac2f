#pragma once

#include <cstddef>

// Cell-wise arithmetic kernels for the radiometric chain. Each kernel has a
// scalar reference implementation and, on x86-64, an AVX2 variant selected at
// runtime. Both lanes evaluate the same per-cell operation sequence with FP
// contraction disabled, so their outputs are bit-identical; the test suite
// asserts this equivalence.
//
// All kernels propagate the nodata sentinel: an input cell equal to `nodata`
// yields `nodata`. Inputs are not validated here; callers scan for domain
// violations first (see indices.hpp).

namespace hexheat::kernels {

enum class Lane { scalar, avx2 };

/// Lane used by subsequent kernel calls. Chosen at first use from CPU
/// features; the HEXHEAT_SIMD environment variable ("scalar" or "avx2")
/// overrides the choice.
Lane active_lane();
const char* lane_name(Lane lane);

/// True when this build and CPU can run the given lane.
bool lane_supported(Lane lane);

/// Force a specific lane (used by the equivalence tests). Throws
/// NumericError when the lane is unsupported.
void force_lane(Lane lane);

/// Reset to automatic lane selection.
void reset_lane();

/// out[i] = scale * in[i] + offset
void rescale_affine(const double* in, double* out, std::size_t n,
                    double scale, double offset, double nodata);

/// out[i] = k2 / ln(k1 / in[i] + 1)
void brightness_temperature(const double* radiance, double* out,
                            std::size_t n, double k1, double k2,
                            double nodata);

/// out[i] = (a[i] - b[i]) / (a[i] + b[i]); a[i] + b[i] == 0 yields nodata.
/// Nodata in either input propagates.
void normalized_difference(const double* a, const double* b, double* out,
                           std::size_t n, double nodata);

/// out[i] = min(((in[i] - lo) / (hi - lo))^2, 1), i.e. the squared position
/// inside [lo, hi] clamped to [0, 1] after squaring.
void vegetation_proportion(const double* ndvi, double* out, std::size_t n,
                           double lo, double hi, double nodata);

/// out[i] = gain * in[i] + base (the emissivity ramp; gain=0.004, base=0.986)
void linear_emissivity(const double* pv, double* out, std::size_t n,
                       double gain, double base, double nodata);

/// out[i] = T / (1 + (wavelength * T / rho) * ln(eps)) - shift,
/// with T = bt[i], eps = emissivity[i]. Nodata in either input propagates.
void surface_temperature(const double* bt, const double* emissivity,
                         double* out, std::size_t n, double wavelength,
                         double rho, double shift, double nodata);

} // namespace hexheat::kernels
