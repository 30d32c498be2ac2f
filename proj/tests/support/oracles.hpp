#pragma once

// Independent oracles for the test and acceptance suites. Everything here
// deliberately avoids the library's own solution paths: the regression
// oracle runs normal equations in long double with hand-rolled Gaussian
// elimination, and the determinant oracle is a dense long-double LU.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hexheat/hexgrid.hpp"
#include "hexheat/models.hpp"
#include "hexheat/rng.hpp"
#include "hexheat/weights.hpp"

namespace oracles {

// Solve A x = b in long double with partial pivoting.
inline std::vector<long double> solve_long_double(
    std::vector<std::vector<long double>> a, std::vector<long double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (a[pivot][col] == 0.0L) {
            throw std::runtime_error("oracle: singular system");
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<long double> x(n, 0.0L);
    for (std::size_t i = n; i-- > 0;) {
        long double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

// Extended-precision normal-equations OLS: beta = (X'X)^-1 X'y.
inline std::vector<double> ols_normal_equations(const Eigen::MatrixXd& x,
                                                const Eigen::VectorXd& y) {
    const std::size_t n = static_cast<std::size_t>(x.rows());
    const std::size_t p = static_cast<std::size_t>(x.cols());
    std::vector<std::vector<long double>> xtx(
        p, std::vector<long double>(p, 0.0L));
    std::vector<long double> xty(p, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            const long double xa =
                static_cast<long double>(x(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(a)));
            xty[a] += xa * static_cast<long double>(
                               y(static_cast<Eigen::Index>(i)));
            for (std::size_t b = 0; b < p; ++b) {
                xtx[a][b] +=
                    xa * static_cast<long double>(
                             x(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(b)));
            }
        }
    }
    const std::vector<long double> beta = solve_long_double(xtx, xty);
    std::vector<double> out(p);
    for (std::size_t i = 0; i < p; ++i) out[i] = static_cast<double>(beta[i]);
    return out;
}

// Dense row-standardized matrix of the weights.
inline Eigen::MatrixXd dense_weights(const hexheat::SpatialWeights& w) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(w.n), static_cast<Eigen::Index>(w.n));
    for (std::size_t i = 0; i < w.n; ++i) {
        for (const auto& [j, weight] : w.neighbors[i]) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                weight;
        }
    }
    return m;
}

// ln|I - coef*W| by long-double LU elimination on the dense matrix.
// Throws when the determinant is not positive (outside the feasible range).
inline double log_det_dense_lu(const hexheat::SpatialWeights& w,
                               double coef) {
    const std::size_t n = w.n;
    std::vector<std::vector<long double>> a(
        n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0L;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, weight] : w.neighbors[i]) {
            a[i][j] -= static_cast<long double>(coef) *
                       static_cast<long double>(weight);
        }
    }
    long double log_abs = 0.0L;
    int sign = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (a[pivot][col] == 0.0L) {
            throw std::runtime_error("oracle: singular I - coef*W");
        }
        if (pivot != col) {
            std::swap(a[col], a[pivot]);
            sign = -sign;
        }
        if (a[col][col] < 0.0L) sign = -sign;
        log_abs += std::log(std::abs(a[col][col]));
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    if (sign < 0) {
        throw std::runtime_error("oracle: negative determinant");
    }
    return static_cast<double>(log_abs);
}

// Parallelogram patch of axial cells; every interior cell has 6 neighbors.
inline std::vector<hexheat::HexCellId> hex_patch(int q_count, int r_count) {
    std::vector<hexheat::HexCellId> cells;
    cells.reserve(static_cast<std::size_t>(q_count) *
                  static_cast<std::size_t>(r_count));
    for (int q = 0; q < q_count; ++q) {
        for (int r = 0; r < r_count; ++r) {
            cells.push_back(hexheat::HexCellId{q, r});
        }
    }
    return cells;
}

inline Eigen::SparseMatrix<double> sparse_weights(
    const hexheat::SpatialWeights& w) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < w.n; ++i) {
        for (const auto& [j, weight] : w.neighbors[i]) {
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j),
                                  weight);
        }
    }
    Eigen::SparseMatrix<double> m(static_cast<int>(w.n),
                                  static_cast<int>(w.n));
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

// Solves (I - coef*W) x = rhs; used to synthesize SAR and SEM processes.
class SpatialSolver {
public:
    SpatialSolver(const hexheat::SpatialWeights& w, double coef) {
        Eigen::SparseMatrix<double> a = sparse_weights(w);
        a *= -coef;
        for (int i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += 1.0;
        a.makeCompressed();
        solver_.compute(a);
        if (solver_.info() != Eigen::Success) {
            throw std::runtime_error("oracle: sparse factorization failed");
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        return solver_.solve(rhs);
    }

private:
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver_;
};

// Random design with an intercept and k standard-normal regressors.
inline hexheat::DesignMatrix random_design(hexheat::Rng& rng, std::size_t n,
                                           std::size_t k) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns(k);
    for (std::size_t j = 0; j < k; ++j) {
        names.push_back("x" + std::to_string(j + 1));
        columns[j].resize(n);
        for (std::size_t i = 0; i < n; ++i) columns[j][i] = rng.normal();
    }
    std::vector<double> y(n, 0.0);
    return hexheat::DesignMatrix::build(std::move(names), columns,
                                        std::move(y));
}

// y = (I - rho W)^-1 (X beta + sigma eps) -- the lag process.
inline void fill_sar_response(hexheat::DesignMatrix& d,
                              const hexheat::SpatialWeights& w,
                              const Eigen::VectorXd& beta, double rho,
                              double sigma, hexheat::Rng& rng) {
    Eigen::VectorXd eps(d.X.rows());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
    const SpatialSolver solver(w, rho);
    d.y = solver.solve(Eigen::VectorXd(d.X * beta + sigma * eps));
}

// y = X beta + (I - lambda W)^-1 eps * sigma -- the error process.
inline void fill_sem_response(hexheat::DesignMatrix& d,
                              const hexheat::SpatialWeights& w,
                              const Eigen::VectorXd& beta, double lambda,
                              double sigma, hexheat::Rng& rng) {
    Eigen::VectorXd eps(d.X.rows());
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
    const SpatialSolver solver(w, lambda);
    d.y = d.X * beta + sigma * solver.solve(eps);
}

// Dense grid argmax of a 1-D function over [lo, hi].
template <typename F>
double grid_search_argmax(F&& f, double lo, double hi, std::size_t points) {
    double best_x = lo;
    double best_v = f(lo);
    for (std::size_t i = 1; i < points; ++i) {
        const double x =
            lo + (hi - lo) * static_cast<double>(i) /
                     static_cast<double>(points - 1);
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
        }
    }
    return best_x;
}

} // namespace oracles
