#include "hexheat/indices.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "hexheat/errors.hpp"
#include "hexheat/kernels.hpp"

namespace hexheat {

namespace {

std::string cell_label(const RasterGrid& g, std::size_t flat) {
    return "(row " + std::to_string(flat / g.cols()) + ", col " +
           std::to_string(flat % g.cols()) + ")";
}

// First non-nodata cell for which `bad` holds, or npos.
template <typename Pred>
std::size_t find_violation(const RasterGrid& g, Pred bad) {
    const auto& v = g.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!g.is_nodata(v[i]) && bad(v[i])) return i;
    }
    return static_cast<std::size_t>(-1);
}

constexpr std::size_t npos = static_cast<std::size_t>(-1);

void require_same_geometry(const RasterGrid& a, const RasterGrid& b,
                           const char* op) {
    if (!a.same_geometry(b)) {
        throw NumericError(std::string(op) +
                           ": input rasters have mismatched geometry");
    }
    if (a.nodata() != b.nodata()) {
        throw NumericError(std::string(op) +
                           ": input rasters have mismatched nodata sentinels");
    }
}

} // namespace

void RadiometricConstants::validate() const {
    if (!(k1 > 0.0)) throw ConfigError("radiometric constants: k1 must be > 0");
    if (!(k2 > 0.0)) throw ConfigError("radiometric constants: k2 must be > 0");
    if (!(wavelength > 0.0)) {
        throw ConfigError("radiometric constants: wavelength must be > 0");
    }
    if (!(rho_planck > 0.0)) {
        throw ConfigError("radiometric constants: rho_planck must be > 0");
    }
}

RasterGrid toa_radiance(const RasterGrid& qcal,
                        const RadiometricConstants& constants) {
    constants.validate();
    if (auto i = find_violation(qcal, [](double v) { return v < 0.0; });
        i != npos) {
        throw NumericError("toa_radiance: negative digital number at " +
                           cell_label(qcal, i));
    }
    std::vector<double> out(qcal.cell_count());
    kernels::rescale_affine(qcal.values().data(), out.data(), out.size(),
                            constants.m_l, constants.a_l, qcal.nodata());
    return qcal.with_values(std::move(out));
}

RasterGrid brightness_temperature(const RasterGrid& radiance,
                                  const RadiometricConstants& constants) {
    constants.validate();
    if (auto i = find_violation(radiance, [](double v) { return v <= 0.0; });
        i != npos) {
        throw NumericError("brightness_temperature: non-positive radiance at " +
                           cell_label(radiance, i));
    }
    std::vector<double> out(radiance.cell_count());
    kernels::brightness_temperature(radiance.values().data(), out.data(),
                                    out.size(), constants.k1, constants.k2,
                                    radiance.nodata());
    return radiance.with_values(std::move(out));
}

RasterGrid normalized_difference(const RasterGrid& band_a,
                                 const RasterGrid& band_b) {
    require_same_geometry(band_a, band_b, "normalized_difference");
    std::vector<double> out(band_a.cell_count());
    kernels::normalized_difference(band_a.values().data(),
                                   band_b.values().data(), out.data(),
                                   out.size(), band_a.nodata());
    return band_a.with_values(std::move(out));
}

RasterGrid vegetation_proportion(const RasterGrid& ndvi, double ndvi_min,
                                 double ndvi_max) {
    if (!(ndvi_max > ndvi_min)) {
        throw NumericError("vegetation_proportion: ndvi_max must exceed "
                           "ndvi_min");
    }
    std::vector<double> out(ndvi.cell_count());
    kernels::vegetation_proportion(ndvi.values().data(), out.data(),
                                   out.size(), ndvi_min, ndvi_max,
                                   ndvi.nodata());
    return ndvi.with_values(std::move(out));
}

RasterGrid emissivity(const RasterGrid& pv) {
    if (auto i = find_violation(
            pv, [](double v) { return v < 0.0 || v > 1.0; });
        i != npos) {
        throw NumericError("emissivity: vegetation proportion outside [0,1] "
                           "at " + cell_label(pv, i));
    }
    std::vector<double> out(pv.cell_count());
    kernels::linear_emissivity(pv.values().data(), out.data(), out.size(),
                               0.004, 0.986, pv.nodata());
    return pv.with_values(std::move(out));
}

RasterGrid land_surface_temperature(const RasterGrid& bt,
                                    const RasterGrid& eps,
                                    const RadiometricConstants& constants,
                                    bool output_celsius) {
    constants.validate();
    require_same_geometry(bt, eps, "land_surface_temperature");
    if (auto i = find_violation(
            eps, [](double v) { return v <= 0.0 || v > 1.0; });
        i != npos) {
        throw NumericError("land_surface_temperature: emissivity outside "
                           "(0,1] at " + cell_label(eps, i));
    }
    std::vector<double> out(bt.cell_count());
    kernels::surface_temperature(bt.values().data(), eps.values().data(),
                                 out.data(), out.size(), constants.wavelength,
                                 constants.rho_planck,
                                 output_celsius ? 273.15 : 0.0, bt.nodata());
    return bt.with_values(std::move(out));
}

} // namespace hexheat
