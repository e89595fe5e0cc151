#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "qpwalk/model.hpp"
#include "qpwalk/rng.hpp"

namespace qpwalk {

/// Stationary vector of the folded chain restricted to {0..T}^2.
struct TruncatedSolution {
    int T = 0;
    std::vector<double> pi;  // row-major (T+1)x(T+1)
    double residual = 0;     // max balance violation over the grid
    double tail_mass_estimate = 0;  // mass on n1 + n2 > T/2
    std::string method;      // which solver produced the vector

    double at(int n1, int n2) const { return pi[n1 * (T + 1) + n2]; }

    double tail_mass_beyond(int m) const {
        double s = 0;
        for (int n1 = 0; n1 <= T; ++n1)
            for (int n2 = 0; n2 <= T; ++n2)
                if (n1 + n2 > m) s += at(n1, n2);
        return s;
    }
};

namespace detail {

inline Eigen::SparseMatrix<double> folded_transitions(const TransitionKernel& k, int T) {
    const int n = (T + 1) * (T + 1);
    auto idx = [T](int i, int j) { return i * (T + 1) + j; };
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 9);
    for (int n1 = 0; n1 <= T; ++n1)
        for (int n2 = 0; n2 <= T; ++n2) {
            const JumpDistribution& d = k.jump_distribution({n1, n2});
            for (int i = -1; i <= 1; ++i)
                for (int j = -1; j <= 1; ++j) {
                    double pr = d(i, j);
                    if (pr <= 0) continue;
                    // [.]^+ folding at the axes, reflect at the truncation edge
                    int t1 = std::min(std::max(n1 + i, 0), T);
                    int t2 = std::min(std::max(n2 + j, 0), T);
                    trips.emplace_back(idx(t1, t2), idx(n1, n2), pr);  // P^T
                }
        }
    Eigen::SparseMatrix<double> Pt(n, n);
    Pt.setFromTriplets(trips.begin(), trips.end());
    Pt.makeCompressed();
    return Pt;
}

inline double balance_residual(const Eigen::SparseMatrix<double>& Pt, const Eigen::VectorXd& x) {
    return (Pt * x - x).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Direct stationary solve of the truncated, folded chain. Krylov solve with
/// an incomplete-LU preconditioner; falls back to power iteration when the
/// linear solve stalls. Single-threaded and deterministic.
inline TruncatedSolution truncated_stationary(const TransitionKernel& k, int T,
                                              double tol = 1e-12,
                                              long max_power_iters = 1000000) {
    if (T < std::max(k.split.N1, k.split.N2) + 2)
        throw ValidationError("truncation T must be at least max(N1,N2)+2");
    const int n = (T + 1) * (T + 1);
    Eigen::SparseMatrix<double> Pt = detail::folded_transitions(k, T);

    TruncatedSolution sol;
    sol.T = T;
    Eigen::VectorXd x;
    bool solved = false;

    {
        // (P^T - I) x = 0 with the first balance row replaced by sum(x) = 1
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(Pt.nonZeros() + n);
        std::vector<char> has_diag(n, 0);
        for (int c = 0; c < Pt.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator it(Pt, c); it; ++it) {
                if (it.row() == 0) continue;
                if (it.row() == c) has_diag[c] = 1;
                trips.emplace_back(it.row(), c, it.value() - (it.row() == c ? 1.0 : 0.0));
            }
        for (int c = 1; c < n; ++c)
            if (!has_diag[c]) trips.emplace_back(c, c, -1.0);
        for (int c = 0; c < n; ++c) trips.emplace_back(0, c, 1.0);
        Eigen::SparseMatrix<double> A(n, n);
        A.setFromTriplets(trips.begin(), trips.end());
        A.makeCompressed();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        b(0) = 1.0;
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
        solver.preconditioner().setFillfactor(12);
        solver.preconditioner().setDroptol(1e-5);
        solver.setTolerance(1e-15);
        solver.setMaxIterations(400);
        solver.compute(A);
        if (solver.info() == Eigen::Success) {
            x = solver.solve(b);
            // one refinement pass through the same preconditioned solve
            Eigen::VectorXd r = b - A * x;
            x += solver.solve(r);
            if (x.allFinite()) {
                x = x.cwiseMax(0.0);
                x /= x.sum();
                if (detail::balance_residual(Pt, x) < tol) {
                    solved = true;
                    sol.method = "bicgstab_ilut";
                }
            }
        }
    }

    if (!solved) {
        // Power iteration fallback: x <- P^T x, renormalized
        if (x.size() != n || !x.allFinite()) x = Eigen::VectorXd::Constant(n, 1.0 / n);
        long it = 0;
        double res = 1;
        for (; it < max_power_iters; ++it) {
            Eigen::VectorXd y = Pt * x;
            y /= y.sum();
            if (it % 64 == 0) {
                res = detail::balance_residual(Pt, y);
                if (res < tol) {
                    x = y;
                    break;
                }
            }
            x.swap(y);
        }
        x = x.cwiseMax(0.0);
        x /= x.sum();
        res = detail::balance_residual(Pt, x);
        if (res >= tol)
            throw NoConvergenceError(it, res,
                                     "stationary solve did not reach the requested residual");
        sol.method = "power_iteration";
    }

    sol.pi.assign(x.data(), x.data() + n);
    sol.residual = detail::balance_residual(Pt, x);
    sol.tail_mass_estimate = sol.tail_mass_beyond(T / 2);
    return sol;
}

/// Empirical outcome of a seeded trajectory of the folded chain.
struct SimulationResult {
    long steps = 0;
    std::uint64_t seed = 0;
    std::map<State, double> empirical;  // visit frequencies, sum to 1
    double drift1 = 0, drift2 = 0;      // mean folded increments per step
    double drift1_se = 0, drift2_se = 0;  // batch-means standard errors
    State final_state;

    double at(State s) const {
        auto it = empirical.find(s);
        return it == empirical.end() ? 0.0 : it->second;
    }
};

/// Exact folded-chain trajectory from (0,0); a seed fully determines it.
inline SimulationResult simulate(const TransitionKernel& k, long steps, std::uint64_t seed) {
    if (steps < 1) throw ValidationError("steps must be >= 1");
    SplitMix64 rng(seed);
    SimulationResult res;
    res.steps = steps;
    res.seed = seed;
    State q{0, 0};
    std::map<State, long> visits;
    const int nbatches = 100;
    const long batch_len = std::max<long>(1, steps / nbatches);
    std::vector<double> b1, b2;
    double acc1 = 0, acc2 = 0, tot1 = 0, tot2 = 0;
    long in_batch = 0;
    for (long t = 0; t < steps; ++t) {
        ++visits[q];
        double u = rng.next_double();
        const JumpDistribution& d = k.jump_distribution(q);
        int di = 0, dj = 0;
        double cum = 0;
        bool chosen = false;
        for (int i = -1; i <= 1 && !chosen; ++i)
            for (int j = -1; j <= 1 && !chosen; ++j) {
                cum += d(i, j);
                if (u < cum) {
                    di = i;
                    dj = j;
                    chosen = true;
                }
            }
        State next{std::max(q.n1 + di, 0), std::max(q.n2 + dj, 0)};
        double inc1 = next.n1 - q.n1, inc2 = next.n2 - q.n2;
        acc1 += inc1;
        acc2 += inc2;
        tot1 += inc1;
        tot2 += inc2;
        if (++in_batch == batch_len) {
            b1.push_back(acc1 / in_batch);
            b2.push_back(acc2 / in_batch);
            acc1 = acc2 = 0;
            in_batch = 0;
        }
        q = next;
    }
    res.final_state = q;
    res.drift1 = tot1 / steps;
    res.drift2 = tot2 / steps;
    auto se = [](const std::vector<double>& b, double mean) {
        if (b.size() < 2) return 0.0;
        double var = 0;
        for (double v : b) var += (v - mean) * (v - mean);
        var /= (b.size() - 1);
        return std::sqrt(var / b.size());
    };
    res.drift1_se = se(b1, res.drift1);
    res.drift2_se = se(b2, res.drift2);
    for (const auto& [s, c] : visits)
        res.empirical[s] = static_cast<double>(c) / static_cast<double>(steps);
    return res;
}

/// Symmetric error metrics between two distributions on a common window.
struct CompareReport {
    double max_abs = 0;
    double total_variation = 0;  // on the window
    State argmax;
};

template <typename FA, typename FB>
CompareReport compare_on_window(FA&& a, FB&& b, int window) {
    CompareReport rep;
    for (int n1 = 0; n1 <= window; ++n1)
        for (int n2 = 0; n2 <= window - n1; ++n2) {
            double diff = std::abs(a(State{n1, n2}) - b(State{n1, n2}));
            rep.total_variation += 0.5 * diff;
            if (diff > rep.max_abs) {
                rep.max_abs = diff;
                rep.argmax = {n1, n2};
            }
        }
    return rep;
}

}  // namespace qpwalk
