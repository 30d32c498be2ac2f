#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hexheat/weights.hpp"

namespace hexheat {

/// Regression design with a leading intercept column of ones. `names` holds
/// the k regressor names (the intercept is implicit).
struct DesignMatrix {
    Eigen::MatrixXd X; // n x (k+1)
    Eigen::VectorXd y; // n
    std::vector<std::string> names;

    /// Build from regressor columns; prepends the intercept.
    static DesignMatrix build(std::vector<std::string> names,
                              const std::vector<std::vector<double>>& columns,
                              std::vector<double> response);

    std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
    std::size_t k() const {
        return static_cast<std::size_t>(X.cols()) - 1;
    }
};

enum class ModelKind { ols, sar, sem };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

/// One estimated coefficient. `significance` is the highest attained level
/// of {0.95, 0.99, 0.999}, or 0 when p >= 0.05.
struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double p_value = 1.0;
    double significance = 0.0;
};

struct ModelFit {
    ModelKind kind = ModelKind::ols;
    std::size_t n = 0;
    std::size_t k = 0;
    /// Estimated parameters entering the AIC: k+1 for OLS, k+2 for SAR/SEM
    /// (the error variance is excluded by convention).
    std::size_t param_count = 0;

    /// Intercept first, then the k regressors in design order.
    std::vector<Coefficient> coefficients;

    /// rho (SAR) or lambda (SEM); absent for OLS.
    std::optional<Coefficient> spatial;

    /// Maximum-likelihood error variance e'e/n.
    double sigma2 = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0;

    /// OLS: coefficient of determination. SAR/SEM: squared Pearson
    /// correlation of fitted vs observed (pseudo-R2).
    double r2 = 0.0;
    /// 1 - (1 - r2)(n - 1)/(n - k - 1) for every model kind.
    double adjusted_r2 = 0.0;

    /// OLS: e = y - X beta. SAR: y - rho*W*y - X*beta. SEM: the innovations
    /// (I - lambda*W)(y - X*beta).
    Eigen::VectorXd residuals;
    Eigen::VectorXd fitted; // y - residuals
};

/// Ordinary least squares via column-pivoted QR. Throws NumericError on a
/// rank-deficient design (naming the offending columns) or when n <= k+2.
ModelFit fit_ols(const DesignMatrix& design);

/// Spatial lag model y = rho*W*y + X*beta + e by maximum likelihood:
/// the concentrated log-likelihood is maximized over rho by golden-section
/// search to an interval width of 1e-8; standard errors come from the
/// negative inverse numerical Hessian of the full log-likelihood.
ModelFit fit_sar(const DesignMatrix& design, const SpatialWeights& w);

/// Spatial error model y = X*beta + u, u = lambda*W*u + e, estimated like
/// fit_sar with the concentrated likelihood over lambda.
ModelFit fit_sem(const DesignMatrix& design, const SpatialWeights& w);

/// 2 * param_count - 2 * log_likelihood.
double aic(const ModelFit& fit);

/// Concentrated (profile) log-likelihoods as maximized by the fitters.
/// Exposed so tests can run independent dense grid searches.
double sar_profile_loglik(const DesignMatrix& design, const SpatialWeights& w,
                          double rho);
double sem_profile_loglik(const DesignMatrix& design, const SpatialWeights& w,
                          double lambda);

/// Full Gaussian log-likelihoods at explicit parameter values.
double ols_full_loglik(const DesignMatrix& design, const Eigen::VectorXd& beta,
                       double sigma2);
double sar_full_loglik(const DesignMatrix& design, const SpatialWeights& w,
                       const Eigen::VectorXd& beta, double rho, double sigma2);
double sem_full_loglik(const DesignMatrix& design, const SpatialWeights& w,
                       const Eigen::VectorXd& beta, double lambda,
                       double sigma2);

} // namespace hexheat
