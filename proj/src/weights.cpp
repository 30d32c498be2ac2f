#include "hexheat/weights.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Dense>

#include "hexheat/errors.hpp"

namespace hexheat {

double SpatialWeights::min_eigenvalue() const {
    return eigenvalues.empty() ? 0.0 : eigenvalues.front();
}

double SpatialWeights::max_eigenvalue() const {
    return eigenvalues.empty() ? 0.0 : eigenvalues.back();
}

std::pair<double, double> SpatialWeights::feasible_interval() const {
    constexpr double kTiny = 1e-12;
    constexpr double kWide = 1e3;
    const double lo =
        min_eigenvalue() < -kTiny ? 1.0 / min_eigenvalue() : -kWide;
    const double hi =
        max_eigenvalue() > kTiny ? 1.0 / max_eigenvalue() : kWide;
    return {lo, hi};
}

SpatialWeights build_weights(const std::vector<HexCellId>& cells) {
    std::unordered_map<HexCellId, std::uint32_t> index;
    index.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!index.emplace(cells[i], static_cast<std::uint32_t>(i)).second) {
            throw NumericError("build_weights: duplicate cell (" +
                               std::to_string(cells[i].q) + "," +
                               std::to_string(cells[i].r) + ")");
        }
    }

    // Binary shared-edge adjacency restricted to the observed set. Symmetric
    // by construction: (a adjacent b) uses the same offset test both ways.
    std::vector<std::vector<std::uint32_t>> adj(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        for (const auto& off : kHexNeighborOffsets) {
            const HexCellId nb{cells[i].q + off.q, cells[i].r + off.r};
            if (auto it = index.find(nb); it != index.end()) {
                adj[i].push_back(it->second);
            }
        }
        std::sort(adj[i].begin(), adj[i].end());
    }

    SpatialWeights w;
    std::vector<std::uint32_t> keep;
    std::vector<std::uint32_t> new_index(cells.size(),
                                         std::numeric_limits<std::uint32_t>::max());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (adj[i].empty()) {
            w.dropped.push_back(cells[i]);
        } else {
            new_index[i] = static_cast<std::uint32_t>(keep.size());
            keep.push_back(static_cast<std::uint32_t>(i));
        }
    }
    if (keep.size() < 2) {
        throw NumericError(
            "build_weights: fewer than 2 non-isolated cells remain (" +
            std::to_string(keep.size()) + " of " +
            std::to_string(cells.size()) + ")");
    }

    w.n = keep.size();
    w.cells.reserve(w.n);
    w.neighbors.resize(w.n);
    for (std::size_t row = 0; row < w.n; ++row) {
        const std::uint32_t old = keep[row];
        w.cells.push_back(cells[old]);
        const double weight = 1.0 / static_cast<double>(adj[old].size());
        auto& list = w.neighbors[row];
        list.reserve(adj[old].size());
        for (std::uint32_t nb : adj[old]) {
            // Neighbors of a non-isolated cell are themselves non-isolated
            // (adjacency is symmetric), so the translation always exists.
            list.emplace_back(new_index[nb], weight);
        }
    }

    // Eigenvalues of W = D^-1 C via the symmetric similarity transform
    // S = D^-1/2 C D^-1/2, which shares W's spectrum and is guaranteed real.
    Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(w.n), static_cast<Eigen::Index>(w.n));
    for (std::size_t row = 0; row < w.n; ++row) {
        const double di = static_cast<double>(w.neighbors[row].size());
        for (const auto& [col, weight] : w.neighbors[row]) {
            (void)weight;
            const double dj =
                static_cast<double>(w.neighbors[col].size());
            sym(static_cast<Eigen::Index>(row),
                static_cast<Eigen::Index>(col)) = 1.0 / std::sqrt(di * dj);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericError("build_weights: eigenvalue computation failed");
    }
    w.eigenvalues.assign(solver.eigenvalues().data(),
                         solver.eigenvalues().data() + w.n);
    std::sort(w.eigenvalues.begin(), w.eigenvalues.end());

    if (std::abs(w.max_eigenvalue() - 1.0) > 1e-10) {
        throw NumericError(
            "build_weights: largest eigenvalue of the row-standardized "
            "matrix is not 1 (got " + std::to_string(w.max_eigenvalue()) +
            ")");
    }
    // A row-stochastic matrix has largest eigenvalue exactly 1; pin it so
    // the feasible interval's upper end is exact.
    w.eigenvalues.back() = 1.0;
    return w;
}

std::vector<double> spatial_lag(const SpatialWeights& w,
                                const std::vector<double>& v) {
    if (v.size() != w.n) {
        throw NumericError("spatial_lag: vector length " +
                           std::to_string(v.size()) + " != n = " +
                           std::to_string(w.n));
    }
    std::vector<double> out(w.n, 0.0);
    for (std::size_t i = 0; i < w.n; ++i) {
        double acc = 0.0;
        for (const auto& [j, weight] : w.neighbors[i]) {
            acc += weight * v[j];
        }
        out[i] = acc;
    }
    return out;
}

double log_det_factor(const SpatialWeights& w, double coef) {
    double sum = 0.0;
    for (double ev : w.eigenvalues) {
        const double term = 1.0 - coef * ev;
        if (!(term > 0.0)) {
            throw NumericError(
                "log_det_factor: coefficient " + std::to_string(coef) +
                " outside the feasible eigenvalue interval");
        }
        sum += std::log(term);
    }
    return sum;
}

void write_weights_csv(const SpatialWeights& w, std::ostream& out) {
    std::string text = "i,j,weight\n";
    char buf[64];
    for (std::size_t i = 0; i < w.n; ++i) {
        for (const auto& [j, weight] : w.neighbors[i]) {
            std::snprintf(buf, sizeof(buf), "%zu,%u,%.17g\n", i, j, weight);
            text += buf;
        }
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

} // namespace hexheat
