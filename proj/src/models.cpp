#include "hexheat/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "hexheat/errors.hpp"
#include "statdist.hpp"

namespace hexheat {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kSigmaFloor = 1e-300;

using QrDecomposition = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>;

std::string column_name(const DesignMatrix& d, Eigen::Index col) {
    return col == 0 ? std::string("intercept")
                    : d.names[static_cast<std::size_t>(col - 1)];
}

// Shared design validation: size contract, n > k+2, full column rank.
QrDecomposition validated_qr(const DesignMatrix& d) {
    if (d.X.rows() != d.y.size()) {
        throw NumericError("design: response length does not match X rows");
    }
    if (d.names.size() + 1 != static_cast<std::size_t>(d.X.cols())) {
        throw NumericError("design: column name count does not match X");
    }
    if (d.n() <= d.k() + 2) {
        throw NumericError("design: need n > k + 2, got n = " +
                           std::to_string(d.n()) + ", k = " +
                           std::to_string(d.k()));
    }
    QrDecomposition qr(d.X);
    if (qr.rank() < d.X.cols()) {
        const auto& perm = qr.colsPermutation().indices();
        std::string cols;
        for (Eigen::Index i = qr.rank(); i < d.X.cols(); ++i) {
            if (!cols.empty()) cols += ", ";
            cols += column_name(d, perm(i));
        }
        throw NumericError("design: rank-deficient (rank " +
                           std::to_string(qr.rank()) + " of " +
                           std::to_string(d.X.cols()) +
                           "); suspect columns: " + cols);
    }
    return qr;
}

void require_alignment(const DesignMatrix& d, const SpatialWeights& w,
                       const char* op) {
    if (d.n() != w.n) {
        throw NumericError(std::string(op) + ": design has " +
                           std::to_string(d.n()) + " rows but weights have " +
                           std::to_string(w.n));
    }
}

Eigen::VectorXd lag_vector(const SpatialWeights& w, const Eigen::VectorXd& v) {
    std::vector<double> in(v.data(), v.data() + v.size());
    const std::vector<double> out = spatial_lag(w, in);
    return Eigen::Map<const Eigen::VectorXd>(out.data(),
                                             static_cast<Eigen::Index>(out.size()));
}

Eigen::MatrixXd lag_columns(const SpatialWeights& w, const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        out.col(c) = lag_vector(w, m.col(c));
    }
    return out;
}

struct Argmax {
    double x = 0.0;
    double value = 0.0;
};

// Golden-section maximization of a unimodal f over [lo, hi], stopping when
// the bracketing interval is narrower than tol.
template <typename F>
Argmax golden_section_maximize(F&& f, double lo, double hi, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tol) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    const double mid = 0.5 * (a + b);
    return Argmax{mid, f(mid)};
}

// Central-difference Hessian with per-coordinate relative step 1e-5.
Eigen::MatrixXd numerical_hessian(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& theta) {
    const Eigen::Index m = theta.size();
    Eigen::VectorXd h(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        h(i) = 1e-5 * std::max(std::abs(theta(i)), 1e-2);
    }
    Eigen::MatrixXd hess(m, m);
    const double f0 = f(theta);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(i) += h(i);
        tm(i) -= h(i);
        hess(i, i) = (f(tp) - 2.0 * f0 + f(tm)) / (h(i) * h(i));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            Eigen::VectorXd tpp = theta, tpm = theta, tmp = theta,
                            tmm = theta;
            tpp(i) += h(i);
            tpp(j) += h(j);
            tpm(i) += h(i);
            tpm(j) -= h(j);
            tmp(i) -= h(i);
            tmp(j) += h(j);
            tmm(i) -= h(i);
            tmm(j) -= h(j);
            const double v =
                (f(tpp) - f(tpm) - f(tmp) + f(tmm)) / (4.0 * h(i) * h(j));
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

// Standard errors from the negative inverse Hessian; NaN when the Hessian
// is singular or has the wrong curvature sign.
Eigen::VectorXd hessian_std_errors(
    const std::function<double(const Eigen::VectorXd&)>& loglik,
    const Eigen::VectorXd& theta) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        const Eigen::MatrixXd hess = numerical_hessian(loglik, theta);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(-hess);
        if (!lu.isInvertible()) {
            return Eigen::VectorXd::Constant(theta.size(), nan);
        }
        const Eigen::MatrixXd cov = lu.inverse();
        Eigen::VectorXd se(theta.size());
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            se(i) = std::sqrt(cov(i, i)); // NaN when cov(i,i) < 0
        }
        return se;
    } catch (const NumericError&) {
        return Eigen::VectorXd::Constant(theta.size(), nan);
    }
}

// est/se handles the degenerate cases through IEEE arithmetic: se == 0
// gives an infinite statistic (p = 0) unless est is also 0, and NaN or
// infinite se gives p = 1 via the p-value helpers.
Coefficient make_coefficient_t(std::string name, double est, double se,
                               double dof) {
    Coefficient c;
    c.name = std::move(name);
    c.estimate = est;
    c.std_error = se;
    c.p_value = stats::two_sided_t_pvalue(est / se, dof);
    c.significance = stats::significance_level(c.p_value);
    return c;
}

Coefficient make_coefficient_z(std::string name, double est, double se) {
    Coefficient c;
    c.name = std::move(name);
    c.estimate = est;
    c.std_error = se;
    c.p_value = stats::two_sided_z_pvalue(est / se);
    c.significance = stats::significance_level(c.p_value);
    return c;
}

double corr_squared(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ac = a.array() - a.mean();
    const Eigen::VectorXd bc = b.array() - b.mean();
    const double den = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    if (!(den > 0.0) || !std::isfinite(den)) return 0.0;
    const double c = ac.dot(bc) / den;
    return std::clamp(c * c, 0.0, 1.0);
}

double adjusted_r2_of(double r2, std::size_t n, std::size_t k) {
    const double dn = static_cast<double>(n);
    const double dk = static_cast<double>(k);
    return 1.0 - (1.0 - r2) * (dn - 1.0) / (dn - dk - 1.0);
}

double concentrated_value(std::size_t n, double sse, double logdet) {
    const double s2 = std::max(sse / static_cast<double>(n), kSigmaFloor);
    const double dn = static_cast<double>(n);
    return -0.5 * dn * (kLog2Pi + std::log(s2)) - 0.5 * dn + logdet;
}

bool degenerate_spectrum(const SpatialWeights& w) {
    return std::abs(w.min_eigenvalue()) < 1e-14 &&
           std::abs(w.max_eigenvalue()) < 1e-14;
}

// Interior search bracket and boundary guard for the spatial coefficient.
struct SearchInterval {
    double lo, hi;
};

SearchInterval search_interval(const SpatialWeights& w) {
    const auto [lo, hi] = w.feasible_interval();
    const double margin = 1e-9 * (hi - lo);
    return SearchInterval{lo + margin, hi - margin};
}

void check_interior(double coef, const SearchInterval& s, const char* op) {
    const double span = s.hi - s.lo;
    if (coef - s.lo < 1e-6 * span || s.hi - coef < 1e-6 * span) {
        throw NumericError(std::string(op) +
                           ": optimizer converged to the feasible-interval "
                           "boundary (non-convergence)");
    }
}

} // namespace

DesignMatrix DesignMatrix::build(
    std::vector<std::string> names,
    const std::vector<std::vector<double>>& columns,
    std::vector<double> response) {
    if (names.size() != columns.size()) {
        throw NumericError("DesignMatrix: name/column count mismatch");
    }
    const std::size_t n = response.size();
    for (const auto& col : columns) {
        if (col.size() != n) {
            throw NumericError("DesignMatrix: column length mismatch");
        }
    }
    DesignMatrix d;
    d.names = std::move(names);
    d.X.resize(static_cast<Eigen::Index>(n),
               static_cast<Eigen::Index>(columns.size() + 1));
    d.X.col(0).setOnes();
    for (std::size_t c = 0; c < columns.size(); ++c) {
        d.X.col(static_cast<Eigen::Index>(c + 1)) =
            Eigen::Map<const Eigen::VectorXd>(columns[c].data(),
                                              static_cast<Eigen::Index>(n));
    }
    d.y = Eigen::Map<const Eigen::VectorXd>(response.data(),
                                            static_cast<Eigen::Index>(n));
    return d;
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::ols: return "ols";
        case ModelKind::sar: return "sar";
        case ModelKind::sem: return "sem";
    }
    return "ols";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "ols") return ModelKind::ols;
    if (name == "sar") return ModelKind::sar;
    if (name == "sem") return ModelKind::sem;
    throw ConfigError("unknown model kind: '" + name + "'");
}

double aic(const ModelFit& fit) {
    return 2.0 * static_cast<double>(fit.param_count) -
           2.0 * fit.log_likelihood;
}

double ols_full_loglik(const DesignMatrix& d, const Eigen::VectorXd& beta,
                       double sigma2) {
    const double s2 = std::max(sigma2, kSigmaFloor);
    const Eigen::VectorXd e = d.y - d.X * beta;
    const double dn = static_cast<double>(d.n());
    return -0.5 * dn * (kLog2Pi + std::log(s2)) -
           e.squaredNorm() / (2.0 * s2);
}

double sar_full_loglik(const DesignMatrix& d, const SpatialWeights& w,
                       const Eigen::VectorXd& beta, double rho,
                       double sigma2) {
    const double s2 = std::max(sigma2, kSigmaFloor);
    const Eigen::VectorXd wy = lag_vector(w, d.y);
    const Eigen::VectorXd e = d.y - rho * wy - d.X * beta;
    const double dn = static_cast<double>(d.n());
    return -0.5 * dn * (kLog2Pi + std::log(s2)) + log_det_factor(w, rho) -
           e.squaredNorm() / (2.0 * s2);
}

double sem_full_loglik(const DesignMatrix& d, const SpatialWeights& w,
                       const Eigen::VectorXd& beta, double lambda,
                       double sigma2) {
    const double s2 = std::max(sigma2, kSigmaFloor);
    const Eigen::VectorXd u = d.y - d.X * beta;
    const Eigen::VectorXd e = u - lambda * lag_vector(w, u);
    const double dn = static_cast<double>(d.n());
    return -0.5 * dn * (kLog2Pi + std::log(s2)) + log_det_factor(w, lambda) -
           e.squaredNorm() / (2.0 * s2);
}

double sar_profile_loglik(const DesignMatrix& d, const SpatialWeights& w,
                          double rho) {
    QrDecomposition qr(d.X);
    const Eigen::VectorXd wy = lag_vector(w, d.y);
    const Eigen::VectorXd e0 = d.y - d.X * qr.solve(d.y);
    const Eigen::VectorXd ed = wy - d.X * qr.solve(wy);
    return concentrated_value(d.n(), (e0 - rho * ed).squaredNorm(),
                              log_det_factor(w, rho));
}

double sem_profile_loglik(const DesignMatrix& d, const SpatialWeights& w,
                          double lambda) {
    const Eigen::VectorXd wy = lag_vector(w, d.y);
    const Eigen::MatrixXd wx = lag_columns(w, d.X);
    const Eigen::MatrixXd xa = d.X - lambda * wx;
    const Eigen::VectorXd ya = d.y - lambda * wy;
    const Eigen::VectorXd beta = xa.colPivHouseholderQr().solve(ya);
    return concentrated_value(d.n(), (ya - xa * beta).squaredNorm(),
                              log_det_factor(w, lambda));
}

ModelFit fit_ols(const DesignMatrix& d) {
    QrDecomposition qr = validated_qr(d);
    const std::size_t n = d.n();
    const std::size_t k = d.k();
    const double dn = static_cast<double>(n);

    const Eigen::VectorXd beta = qr.solve(d.y);
    const Eigen::VectorXd e = d.y - d.X * beta;
    const double sse = e.squaredNorm();
    const double sigma2 = sse / dn;

    ModelFit fit;
    fit.kind = ModelKind::ols;
    fit.n = n;
    fit.k = k;
    fit.param_count = k + 1;
    fit.sigma2 = sigma2;
    fit.log_likelihood =
        -0.5 * dn * (kLog2Pi + std::log(std::max(sigma2, kSigmaFloor))) -
        0.5 * dn;
    fit.residuals = e;
    fit.fitted = d.y - e;

    // Classical t inference with the unbiased variance.
    const double dof = dn - static_cast<double>(k) - 1.0;
    const double s2_unbiased = sse / dof;
    const Eigen::MatrixXd xtx_inv =
        (d.X.transpose() * d.X)
            .ldlt()
            .solve(Eigen::MatrixXd::Identity(d.X.cols(), d.X.cols()));
    for (Eigen::Index i = 0; i < d.X.cols(); ++i) {
        const double se = std::sqrt(s2_unbiased * xtx_inv(i, i));
        fit.coefficients.push_back(
            make_coefficient_t(column_name(d, i), beta(i), se, dof));
    }

    const double sst = (d.y.array() - d.y.mean()).square().sum();
    fit.r2 = sst > 0.0 ? 1.0 - sse / sst : 0.0; // constant response -> 0
    fit.adjusted_r2 = sst > 0.0 ? adjusted_r2_of(fit.r2, n, k) : 0.0;
    fit.aic = aic(fit);
    return fit;
}

ModelFit fit_sar(const DesignMatrix& d, const SpatialWeights& w) {
    QrDecomposition qr = validated_qr(d);
    require_alignment(d, w, "fit_sar");
    const std::size_t n = d.n();
    const std::size_t k = d.k();
    const double dn = static_cast<double>(n);

    const Eigen::VectorXd wy = lag_vector(w, d.y);
    const Eigen::VectorXd beta0 = qr.solve(d.y);
    const Eigen::VectorXd betad = qr.solve(wy);
    const Eigen::VectorXd e0 = d.y - d.X * beta0;
    const Eigen::VectorXd ed = wy - d.X * betad;

    const auto profile = [&](double rho) {
        return concentrated_value(n, (e0 - rho * ed).squaredNorm(),
                                  log_det_factor(w, rho));
    };

    double rho;
    if (degenerate_spectrum(w)) {
        // W == 0: rho is unidentified and the model collapses to OLS.
        rho = 0.0;
    } else {
        const SearchInterval s = search_interval(w);
        const Argmax best = golden_section_maximize(profile, s.lo, s.hi, 1e-8);
        check_interior(best.x, s, "fit_sar");
        rho = best.x;
    }

    const Eigen::VectorXd beta = beta0 - rho * betad;
    const Eigen::VectorXd e = e0 - rho * ed;
    const double sigma2 = e.squaredNorm() / dn;

    ModelFit fit;
    fit.kind = ModelKind::sar;
    fit.n = n;
    fit.k = k;
    fit.param_count = k + 2;
    fit.sigma2 = sigma2;
    fit.log_likelihood = profile(rho);
    fit.residuals = e;
    fit.fitted = d.y - e;

    const Eigen::Index p = d.X.cols();
    Eigen::VectorXd theta(p + 2);
    theta.head(p) = beta;
    theta(p) = rho;
    theta(p + 1) = sigma2;
    const auto loglik = [&](const Eigen::VectorXd& t) {
        return sar_full_loglik(d, w, t.head(p), t(p), t(p + 1));
    };
    const Eigen::VectorXd se = hessian_std_errors(loglik, theta);

    for (Eigen::Index i = 0; i < p; ++i) {
        fit.coefficients.push_back(
            make_coefficient_z(column_name(d, i), beta(i), se(i)));
    }
    fit.spatial = make_coefficient_z("rho", rho, se(p));

    fit.r2 = corr_squared(fit.fitted, d.y);
    fit.adjusted_r2 = adjusted_r2_of(fit.r2, n, k);
    fit.aic = aic(fit);
    return fit;
}

ModelFit fit_sem(const DesignMatrix& d, const SpatialWeights& w) {
    (void)validated_qr(d);
    require_alignment(d, w, "fit_sem");
    const std::size_t n = d.n();
    const std::size_t k = d.k();
    const double dn = static_cast<double>(n);

    const Eigen::VectorXd wy = lag_vector(w, d.y);
    const Eigen::MatrixXd wx = lag_columns(w, d.X);

    const auto solve_at = [&](double lambda) {
        const Eigen::MatrixXd xa = d.X - lambda * wx;
        const Eigen::VectorXd ya = d.y - lambda * wy;
        Eigen::VectorXd beta = xa.colPivHouseholderQr().solve(ya);
        Eigen::VectorXd e = ya - xa * beta;
        return std::pair<Eigen::VectorXd, Eigen::VectorXd>(std::move(beta),
                                                           std::move(e));
    };
    const auto profile = [&](double lambda) {
        const auto [beta, e] = solve_at(lambda);
        return concentrated_value(n, e.squaredNorm(),
                                  log_det_factor(w, lambda));
    };

    double lambda;
    if (degenerate_spectrum(w)) {
        lambda = 0.0;
    } else {
        const SearchInterval s = search_interval(w);
        const Argmax best = golden_section_maximize(profile, s.lo, s.hi, 1e-8);
        check_interior(best.x, s, "fit_sem");
        lambda = best.x;
    }

    const auto [beta, e] = solve_at(lambda);
    const double sigma2 = e.squaredNorm() / dn;

    ModelFit fit;
    fit.kind = ModelKind::sem;
    fit.n = n;
    fit.k = k;
    fit.param_count = k + 2;
    fit.sigma2 = sigma2;
    fit.log_likelihood = profile(lambda);
    fit.residuals = e;
    fit.fitted = d.y - e;

    const Eigen::Index p = d.X.cols();
    Eigen::VectorXd theta(p + 2);
    theta.head(p) = beta;
    theta(p) = lambda;
    theta(p + 1) = sigma2;
    const auto loglik = [&](const Eigen::VectorXd& t) {
        return sem_full_loglik(d, w, t.head(p), t(p), t(p + 1));
    };
    const Eigen::VectorXd se = hessian_std_errors(loglik, theta);

    for (Eigen::Index i = 0; i < p; ++i) {
        fit.coefficients.push_back(
            make_coefficient_z(column_name(d, i), beta(i), se(i)));
    }
    fit.spatial = make_coefficient_z("lambda", lambda, se(p));

    fit.r2 = corr_squared(fit.fitted, d.y);
    fit.adjusted_r2 = adjusted_r2_of(fit.r2, n, k);
    fit.aic = aic(fit);
    return fit;
}

} // namespace hexheat
