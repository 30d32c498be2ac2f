#pragma once

#include <cstddef>

namespace hexheat::kernels::detail {

// One function pointer per kernel; the dispatcher picks a whole table.
struct KernelTable {
    void (*rescale_affine)(const double*, double*, std::size_t, double,
                           double, double);
    void (*brightness_temperature)(const double*, double*, std::size_t,
                                   double, double, double);
    void (*normalized_difference)(const double*, const double*, double*,
                                  std::size_t, double);
    void (*vegetation_proportion)(const double*, double*, std::size_t, double,
                                  double, double);
    void (*linear_emissivity)(const double*, double*, std::size_t, double,
                              double, double);
    void (*surface_temperature)(const double*, const double*, double*,
                                std::size_t, double, double, double, double);
};

extern const KernelTable scalar_table;

#if defined(HEXHEAT_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif

} // namespace hexheat::kernels::detail
