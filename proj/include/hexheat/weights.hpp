#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "hexheat/hexgrid.hpp"

namespace hexheat {

/// Row-standardized first-order contiguity weights over observed hexagons,
/// with the eigenvalues of the standardized matrix cached for likelihood
/// evaluation. Immutable once built; build_weights is the validated factory
/// (tests may construct degenerate instances directly).
struct SpatialWeights {
    /// Observation count after isolated cells were removed.
    std::size_t n = 0;

    /// Per-row sparse list of (column index, weight). Rows built by
    /// build_weights have >= 1 entry and sum to exactly 1.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> neighbors;

    /// Eigenvalues of the row-standardized matrix, ascending. Real because
    /// they are computed from the symmetric similarity transform
    /// D^{-1/2} C D^{-1/2} of the binary adjacency C.
    std::vector<double> eigenvalues;

    /// Row index -> hexagon, aligned with the retained observations.
    std::vector<HexCellId> cells;

    /// Cells removed because they had no observed neighbor.
    std::vector<HexCellId> dropped;

    double min_eigenvalue() const;
    double max_eigenvalue() const;

    /// Open interval of spatial coefficients for which I - coef*W stays
    /// nonsingular with positive log-determinant terms: (1/w_min, 1/w_max).
    /// Degenerate spectra (all zero) fall back to a wide interval.
    std::pair<double, double> feasible_interval() const;
};

/// Build weights from the observed cells: shared-edge hexagonal contiguity
/// restricted to the set, rows standardized to sum 1, isolated cells
/// dropped and reported via `dropped`. Throws NumericError when cells are
/// not distinct or fewer than 2 non-isolated cells remain.
SpatialWeights build_weights(const std::vector<HexCellId>& cells);

/// (W v)_i = sum_j w_ij v_j. Throws NumericError on length mismatch.
std::vector<double> spatial_lag(const SpatialWeights& w,
                                const std::vector<double>& v);

/// sum_i ln(1 - coef * eigenvalue_i), the log-determinant of I - coef*W.
/// Throws NumericError when any term is non-positive (coef outside the
/// feasible interval).
double log_det_factor(const SpatialWeights& w, double coef);

/// Sparse triplet export, header "i,j,weight", for external verification.
void write_weights_csv(const SpatialWeights& w, std::ostream& out);

} // namespace hexheat
