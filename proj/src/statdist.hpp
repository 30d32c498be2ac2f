#pragma once

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace hexheat::stats {

inline double two_sided_t_pvalue(double t, double dof) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

inline double two_sided_z_pvalue(double z) {
    if (std::isnan(z)) return 1.0;
    if (std::isinf(z)) return 0.0;
    static const boost::math::normal dist;
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(z)));
}

inline double chi_squared_upper_pvalue(double x, double dof) {
    if (std::isnan(x)) return 1.0;
    if (x <= 0.0) return 1.0;
    const boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

/// Highest attained significance level: p < .001 -> 0.999, p < .01 -> 0.99,
/// p < .05 -> 0.95, else 0.
inline double significance_level(double p) {
    if (p < 0.001) return 0.999;
    if (p < 0.01) return 0.99;
    if (p < 0.05) return 0.95;
    return 0.0;
}

} // namespace hexheat::stats
