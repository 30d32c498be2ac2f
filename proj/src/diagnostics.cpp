#include "hexheat/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "hexheat/errors.hpp"
#include "statdist.hpp"

namespace hexheat {

namespace {

double weight_at(const SpatialWeights& w, std::size_t i, std::uint32_t j) {
    for (const auto& [col, value] : w.neighbors[i]) {
        if (col == j) return value;
    }
    return 0.0;
}

// S0, S1, S2 of the Cliff-Ord normality variance.
struct MoranMoments {
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
};

MoranMoments moran_moments(const SpatialWeights& w) {
    MoranMoments m;
    std::vector<double> row_sums(w.n, 0.0), col_sums(w.n, 0.0);
    for (std::size_t i = 0; i < w.n; ++i) {
        for (const auto& [j, wij] : w.neighbors[i]) {
            const double wji = weight_at(w, j, static_cast<std::uint32_t>(i));
            m.s0 += wij;
            m.s1 += 0.5 * (wij + wji) * (wij + wji);
            row_sums[i] += wij;
            col_sums[j] += wij;
        }
    }
    for (std::size_t i = 0; i < w.n; ++i) {
        const double t = row_sums[i] + col_sums[i];
        m.s2 += t * t;
    }
    return m;
}

// tr(W'W) + tr(W W)
double lm_trace(const SpatialWeights& w) {
    double t = 0.0;
    for (std::size_t i = 0; i < w.n; ++i) {
        for (const auto& [j, wij] : w.neighbors[i]) {
            const double wji = weight_at(w, j, static_cast<std::uint32_t>(i));
            t += wij * wij + wij * wji;
        }
    }
    return t;
}

DiagnosticResult chi2_result(double statistic, double df) {
    DiagnosticResult r;
    r.statistic = statistic;
    r.chi2_df = df;
    r.p_value = stats::chi_squared_upper_pvalue(statistic, df);
    r.significance = stats::significance_level(r.p_value);
    return r;
}

void check_ols(const ModelFit& fit, const char* op) {
    if (fit.kind != ModelKind::ols) {
        throw NumericError(std::string(op) + ": requires an OLS fit");
    }
}

} // namespace

DiagnosticResult morans_i(const std::vector<double>& residuals,
                          const SpatialWeights& w) {
    if (residuals.size() != w.n) {
        throw NumericError("morans_i: residual length does not match weights");
    }
    const double n = static_cast<double>(w.n);
    double ee = 0.0;
    for (double e : residuals) ee += e * e;
    if (!(ee > 0.0)) {
        throw NumericError("morans_i: zero-variance residuals");
    }
    const std::vector<double> we = spatial_lag(w, residuals);
    double ewe = 0.0;
    for (std::size_t i = 0; i < w.n; ++i) ewe += residuals[i] * we[i];

    const MoranMoments m = moran_moments(w);
    DiagnosticResult r;
    r.statistic = (n / m.s0) * (ewe / ee);

    const double expect = -1.0 / (n - 1.0);
    const double var =
        (n * n * m.s1 - n * m.s2 + 3.0 * m.s0 * m.s0) /
            ((n * n - 1.0) * m.s0 * m.s0) -
        expect * expect;
    if (var > 0.0) {
        r.z_score = (r.statistic - expect) / std::sqrt(var);
        r.p_value = stats::two_sided_z_pvalue(r.z_score);
    } else {
        r.z_score = 0.0;
        r.p_value = 1.0;
    }
    r.significance = stats::significance_level(r.p_value);
    return r;
}

DiagnosticResult lm_error_test(const ModelFit& ols_fit,
                               const DesignMatrix& design,
                               const SpatialWeights& w) {
    check_ols(ols_fit, "lm_error_test");
    if (static_cast<std::size_t>(ols_fit.residuals.size()) != w.n ||
        design.n() != w.n) {
        throw NumericError("lm_error_test: size mismatch");
    }
    const double n = static_cast<double>(w.n);
    const Eigen::VectorXd& e = ols_fit.residuals;
    const double ee = e.squaredNorm();
    if (!(ee > 0.0)) {
        throw NumericError("lm_error_test: zero-variance residuals");
    }
    std::vector<double> ev(e.data(), e.data() + e.size());
    const std::vector<double> wev = spatial_lag(w, ev);
    double ewe = 0.0;
    for (std::size_t i = 0; i < w.n; ++i) ewe += ev[i] * wev[i];

    const double scaled = ewe / (ee / n);
    return chi2_result(scaled * scaled / lm_trace(w), 1.0);
}

DiagnosticResult lm_lag_test(const ModelFit& ols_fit,
                             const DesignMatrix& design,
                             const SpatialWeights& w) {
    check_ols(ols_fit, "lm_lag_test");
    if (static_cast<std::size_t>(ols_fit.residuals.size()) != w.n ||
        design.n() != w.n) {
        throw NumericError("lm_lag_test: size mismatch");
    }
    const double n = static_cast<double>(w.n);
    const Eigen::VectorXd& e = ols_fit.residuals;
    const double ee = e.squaredNorm();
    if (!(ee > 0.0)) {
        throw NumericError("lm_lag_test: zero-variance residuals");
    }
    const double sigma2 = ee / n;

    std::vector<double> yv(design.y.data(), design.y.data() + design.y.size());
    const std::vector<double> wy = spatial_lag(w, yv);
    double ewy = 0.0;
    for (std::size_t i = 0; i < w.n; ++i) ewy += e(static_cast<Eigen::Index>(i)) * wy[i];

    // W X beta is the spatial lag of the OLS fitted values.
    std::vector<double> fv(ols_fit.fitted.data(),
                           ols_fit.fitted.data() + ols_fit.fitted.size());
    const std::vector<double> wf = spatial_lag(w, fv);
    const Eigen::VectorXd wxb = Eigen::Map<const Eigen::VectorXd>(
        wf.data(), static_cast<Eigen::Index>(wf.size()));
    // M v = v - X (X'X)^-1 X'v, the annihilator residual of v on X.
    const Eigen::VectorXd mwxb =
        wxb - design.X * design.X.colPivHouseholderQr().solve(wxb);
    const double denom = wxb.dot(mwxb) / sigma2 + lm_trace(w);

    const double scaled = ewy / sigma2;
    return chi2_result(scaled * scaled / denom, 1.0);
}

SelectionReport build_selection_report(std::vector<ReportRow> rows) {
    if (rows.empty()) {
        throw NumericError("build_selection_report: no fitted models");
    }
    SelectionReport report;
    report.rows = std::move(rows);

    const auto magnitude = [](const ReportRow& r) {
        return r.spatial ? std::abs(r.spatial->estimate) : 0.0;
    };
    // Highest adjusted r2; ties by lower AIC, then larger spatial
    // coefficient magnitude.
    const auto better = [&](const ReportRow& a, const ReportRow& b) {
        if (a.adjusted_r2 != b.adjusted_r2) {
            return a.adjusted_r2 > b.adjusted_r2;
        }
        if (a.aic != b.aic) return a.aic < b.aic;
        return magnitude(a) > magnitude(b);
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (better(report.rows[i], report.rows[best])) best = i;
    }
    report.chosen_index = best;

    const ReportRow& c = report.rows[best];
    char buf[256];
    if (c.spatial) {
        std::snprintf(buf, sizeof(buf),
                      "%gm %s: adjusted r2 %.4g (AIC %.6g, lnL %.6g, %s = "
                      "%.4g)",
                      c.diameter, model_kind_name(c.kind), c.adjusted_r2,
                      c.aic, c.log_likelihood, c.spatial->name.c_str(),
                      c.spatial->estimate);
    } else {
        std::snprintf(buf, sizeof(buf),
                      "%gm %s: adjusted r2 %.4g (AIC %.6g, lnL %.6g)",
                      c.diameter, model_kind_name(c.kind), c.adjusted_r2,
                      c.aic, c.log_likelihood);
    }
    report.justification = buf;
    return report;
}

namespace {

std::string stars(double significance) {
    if (significance >= 0.999) return "***";
    if (significance >= 0.99) return "**";
    if (significance >= 0.95) return "*";
    return "";
}

void append_csv_number(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

} // namespace

void write_report_csv(const SelectionReport& report, std::ostream& out) {
    // Column order: fixed summary block, then one (value, sig) pair per
    // regressor in the order of the first row.
    std::string text =
        "diameter,model,n,adjusted_r2,r2,log_likelihood,aic,"
        "moran_i,moran_z,moran_p,moran_sig,"
        "lm_lag,lm_lag_p,lm_error,lm_error_p,"
        "spatial_coef,spatial_se,spatial_p,spatial_sig,chosen";
    for (const auto& c : report.rows.front().coefficients) {
        text += "," + c.name + "," + c.name + "_sig";
    }
    text += "\n";

    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const ReportRow& r = report.rows[i];
        append_csv_number(text, r.diameter);
        text += ",";
        text += model_kind_name(r.kind);
        text += "," + std::to_string(r.n) + ",";
        append_csv_number(text, r.adjusted_r2);
        text += ",";
        append_csv_number(text, r.r2);
        text += ",";
        append_csv_number(text, r.log_likelihood);
        text += ",";
        append_csv_number(text, r.aic);
        text += ",";
        append_csv_number(text, r.moran.statistic);
        text += ",";
        append_csv_number(text, r.moran.z_score);
        text += ",";
        append_csv_number(text, r.moran.p_value);
        text += ",";
        append_csv_number(text, r.moran.significance);
        text += ",";
        if (r.lm_lag) append_csv_number(text, r.lm_lag->statistic);
        text += ",";
        if (r.lm_lag) append_csv_number(text, r.lm_lag->p_value);
        text += ",";
        if (r.lm_error) append_csv_number(text, r.lm_error->statistic);
        text += ",";
        if (r.lm_error) append_csv_number(text, r.lm_error->p_value);
        text += ",";
        if (r.spatial) append_csv_number(text, r.spatial->estimate);
        text += ",";
        if (r.spatial) append_csv_number(text, r.spatial->std_error);
        text += ",";
        if (r.spatial) append_csv_number(text, r.spatial->p_value);
        text += ",";
        if (r.spatial) append_csv_number(text, r.spatial->significance);
        text += ",";
        text += (i == report.chosen_index) ? "1" : "0";
        for (const auto& c : r.coefficients) {
            text += ",";
            append_csv_number(text, c.estimate);
            text += ",";
            append_csv_number(text, c.significance);
        }
        text += "\n";
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_report_text(const SelectionReport& report, std::ostream& out) {
    std::ostringstream os;
    os << "Model comparison\n";
    os << "================\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-9s %-5s %5s %8s %8s %10s %10s %12s %10s %10s %10s\n",
                  "diameter", "model", "n", "adj_r2", "r2", "lnL", "AIC",
                  "moran_I", "LM_lag", "LM_err", "spatial");
    os << line;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const ReportRow& r = report.rows[i];
        std::string moran_s =
            [&] {
                char b[32];
                std::snprintf(b, sizeof(b), "%.3f%s", r.moran.statistic,
                              stars(r.moran.significance).c_str());
                return std::string(b);
            }();
        const auto diag_s = [&](const std::optional<DiagnosticResult>& d) {
            if (!d) return std::string("-");
            char b[32];
            std::snprintf(b, sizeof(b), "%.4g%s", d->statistic,
                          stars(d->significance).c_str());
            return std::string(b);
        };
        const std::string spatial_s =
            r.spatial
                ? [&] {
                      char b[32];
                      std::snprintf(b, sizeof(b), "%.3f%s",
                                    r.spatial->estimate,
                                    stars(r.spatial->significance).c_str());
                      return std::string(b);
                  }()
                : std::string("-");
        std::snprintf(line, sizeof(line),
                      "%-9g %-5s %5zu %8.4f %8.4f %10.4g %10.6g %12s %10s %10s %10s%s\n",
                      r.diameter, model_kind_name(r.kind), r.n, r.adjusted_r2,
                      r.r2, r.log_likelihood, r.aic, moran_s.c_str(),
                      diag_s(r.lm_lag).c_str(), diag_s(r.lm_error).c_str(),
                      spatial_s.c_str(),
                      i == report.chosen_index ? "  <- chosen" : "");
        os << line;
    }
    os << "\nchosen model: " << report.justification << "\n";
    os << "significance stars: * 0.95, ** 0.99, *** 0.999\n";

    // Per-diameter coefficient tables, models side by side.
    std::set<double, std::greater<double>> diameters;
    for (const auto& r : report.rows) diameters.insert(r.diameter);
    for (double d : diameters) {
        std::vector<const ReportRow*> cols;
        for (const auto& r : report.rows) {
            if (r.diameter == d) cols.push_back(&r);
        }
        os << "\nCoefficients, " << d << "m grid\n";
        std::snprintf(line, sizeof(line), "%-26s", "variable");
        os << line;
        for (const ReportRow* r : cols) {
            std::snprintf(line, sizeof(line), " %16s",
                          model_kind_name(r->kind));
            os << line;
        }
        os << "\n";
        const std::size_t ncoef = cols.front()->coefficients.size();
        for (std::size_t ci = 0; ci < ncoef; ++ci) {
            std::snprintf(line, sizeof(line), "%-26s",
                          cols.front()->coefficients[ci].name.c_str());
            os << line;
            for (const ReportRow* r : cols) {
                char b[40];
                std::snprintf(b, sizeof(b), "%.3e%s",
                              r->coefficients[ci].estimate,
                              stars(r->coefficients[ci].significance).c_str());
                std::snprintf(line, sizeof(line), " %16s", b);
                os << line;
            }
            os << "\n";
        }
        for (const char* name : {"rho", "lambda"}) {
            bool any = false;
            for (const ReportRow* r : cols) {
                if (r->spatial && r->spatial->name == name) any = true;
            }
            if (!any) continue;
            std::snprintf(line, sizeof(line), "%-26s", name);
            os << line;
            for (const ReportRow* r : cols) {
                std::string cellv = "-";
                if (r->spatial && r->spatial->name == name) {
                    char b[40];
                    std::snprintf(b, sizeof(b), "%.3e%s",
                                  r->spatial->estimate,
                                  stars(r->spatial->significance).c_str());
                    cellv = b;
                }
                std::snprintf(line, sizeof(line), " %16s", cellv.c_str());
                os << line;
            }
            os << "\n";
        }
    }
    const std::string text = os.str();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

} // namespace hexheat
