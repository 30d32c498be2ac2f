#pragma once

#include "hexheat/raster.hpp"

namespace hexheat {

/// Scene calibration constants for the thermal band, plus the physical
/// constants of the surface-temperature formula. M_L, A_L, K1 and K2 come
/// from the scene metadata and have no defaults; the wavelength default is
/// the Landsat 8 Band 10 center and rho_planck is the composite h*c/sigma.
struct RadiometricConstants {
    double m_l = 0.0;
    double a_l = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double wavelength = 10.895e-6; // meters
    double rho_planck = 1.438e-2;  // meter * Kelvin

    void validate() const;
};

/// Top-of-atmosphere spectral radiance: L = M_L * Q_cal + A_L per cell.
/// Digital numbers must be >= 0.
RasterGrid toa_radiance(const RasterGrid& qcal,
                        const RadiometricConstants& constants);

/// At-sensor brightness temperature in Kelvin: T = K2 / ln(K1/L + 1).
/// Any non-nodata radiance <= 0 raises NumericError naming the cell.
RasterGrid brightness_temperature(const RasterGrid& radiance,
                                  const RadiometricConstants& constants);

/// (a - b) / (a + b) per cell; NDVI = nd(NIR, Red), NDWI = nd(Green, SWIR).
/// Cells where a + b == 0 become nodata. Grids must share geometry.
RasterGrid normalized_difference(const RasterGrid& band_a,
                                 const RasterGrid& band_b);

/// Squared position of NDVI between the scene extrema, clamped to [0, 1].
RasterGrid vegetation_proportion(const RasterGrid& ndvi, double ndvi_min,
                                 double ndvi_max);

/// Emissivity ramp 0.004 * Pv + 0.986; inputs must lie in [0, 1], so the
/// output lies in [0.986, 0.990].
RasterGrid emissivity(const RasterGrid& pv);

/// Surface temperature T / (1 + (wavelength*T/rho) * ln(eps)), Kelvin, or
/// Celsius when output_celsius is set. Emissivity must lie in (0, 1].
RasterGrid land_surface_temperature(const RasterGrid& bt,
                                    const RasterGrid& eps,
                                    const RadiometricConstants& constants,
                                    bool output_celsius);

} // namespace hexheat
