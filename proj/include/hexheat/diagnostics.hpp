#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hexheat/models.hpp"
#include "hexheat/weights.hpp"

namespace hexheat {

/// Outcome of one spatial diagnostic. Moran's I is referred to a normal
/// z-score; the LM statistics to chi-squared with `chi2_df` degrees of
/// freedom (z_score is 0 for those).
struct DiagnosticResult {
    double statistic = 0.0;
    double z_score = 0.0;
    double chi2_df = 0.0;
    double p_value = 1.0;
    double significance = 0.0; // highest of {0, 0.95, 0.99, 0.999}
};

/// Global Moran's I of a residual vector: I = (n/S0) (e'We)/(e'e), with the
/// z-score under the normality assumption (E[I] = -1/(n-1), Cliff-Ord
/// variance) and a two-sided p-value. Throws NumericError on zero-variance
/// residuals.
DiagnosticResult morans_i(const std::vector<double>& residuals,
                          const SpatialWeights& w);

/// Lagrange multiplier test against error-type spatial dependence:
/// LM_err = [e'We / (e'e/n)]^2 / T with T = tr(W'W + W*W), chi2(1).
DiagnosticResult lm_error_test(const ModelFit& ols_fit,
                               const DesignMatrix& design,
                               const SpatialWeights& w);

/// Lagrange multiplier test against lag-type spatial dependence:
/// LM_lag = [e'Wy / (e'e/n)]^2 / D with
/// D = (W X beta)' M (W X beta) / sigma2 + T and M = I - X(X'X)^-1 X'.
DiagnosticResult lm_lag_test(const ModelFit& ols_fit,
                             const DesignMatrix& design,
                             const SpatialWeights& w);

/// One comparison row: a fitted model on one grid size plus its residual
/// diagnostics. The LM statistics are per-diameter properties of the OLS
/// residuals and are carried on every row of that diameter.
struct ReportRow {
    double diameter = 0.0;
    ModelKind kind = ModelKind::ols;
    std::size_t n = 0;
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;
    DiagnosticResult moran;
    std::optional<DiagnosticResult> lm_lag;
    std::optional<DiagnosticResult> lm_error;
    std::optional<Coefficient> spatial;
    std::vector<Coefficient> coefficients;
};

struct SelectionReport {
    std::vector<ReportRow> rows;
    std::size_t chosen_index = 0;
    std::string justification;
};

/// Assemble the comparison and pick the best model: highest adjusted r2,
/// ties broken by lower AIC, then by larger spatial-coefficient magnitude.
/// Throws NumericError on empty input.
SelectionReport build_selection_report(std::vector<ReportRow> rows);

/// CSV export, one row per (diameter, model).
void write_report_csv(const SelectionReport& report, std::ostream& out);

/// Human-readable comparison: summary statistics per row, then per-diameter
/// coefficient tables with significance stars.
void write_report_text(const SelectionReport& report, std::ostream& out);

} // namespace hexheat
