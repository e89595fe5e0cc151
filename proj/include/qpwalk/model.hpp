#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qpwalk/errors.hpp"

namespace qpwalk {

constexpr double kProbTol = 1e-12;

enum class Region { S0, S1, S2, S3 };

struct State {
    int n1 = 0;
    int n2 = 0;
    friend bool operator==(const State&, const State&) = default;
    friend auto operator<=>(const State&, const State&) = default;
};

/// Thresholds (N1, N2) splitting the quadrant into the four regions.
struct RegionSplit {
    int N1 = 1;
    int N2 = 1;

    RegionSplit() = default;
    RegionSplit(int n1, int n2) : N1(n1), N2(n2) {
        if (N1 < 1 || N2 < 1) throw ValidationError("thresholds N1, N2 must be >= 1");
    }

    Region region_of(State s) const {
        if (s.n1 < N1) return s.n2 < N2 ? Region::S0 : Region::S2;
        return s.n2 < N2 ? Region::S1 : Region::S3;
    }

    /// The stored representative whose one-step law the state shares.
    State representative(State s) const {
        return {std::min(s.n1, N1), std::min(s.n2, N2)};
    }
};

/// One-step jump law on {-1,0,1}^2.
struct JumpDistribution {
    std::array<std::array<double, 3>, 3> p{};  // p[i+1][j+1]

    double operator()(int i, int j) const { return p[i + 1][j + 1]; }
    double& at(int i, int j) { return p[i + 1][j + 1]; }

    double sum() const {
        double s = 0;
        for (const auto& row : p)
            for (double v : row) s += v;
        return s;
    }

    double drift_x() const {
        double s = 0;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) s += i * (*this)(i, j);
        return s;
    }

    double drift_y() const {
        double s = 0;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) s += j * (*this)(i, j);
        return s;
    }

    JumpDistribution transposed() const {
        JumpDistribution t;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) t.at(i, j) = (*this)(j, i);
        return t;
    }
};

/// Four-region storage: one value per representative state.
/// s0 is an N1 x N2 grid, s1 covers (N1, n2) for n2 < N2, s2 covers
/// (n1, N2) for n1 < N1, s3 is the single homogeneous-tail value.
template <typename T>
struct RegionTable {
    RegionSplit split;
    std::vector<std::vector<T>> s0;  // s0[n1][n2]
    std::vector<T> s1;               // index n2
    std::vector<T> s2;               // index n1
    T s3{};

    RegionTable() = default;
    explicit RegionTable(RegionSplit sp)
        : split(sp),
          s0(sp.N1, std::vector<T>(sp.N2)),
          s1(sp.N2),
          s2(sp.N1) {}

    const T& lookup(State s) const {
        switch (split.region_of(s)) {
            case Region::S0: return s0[s.n1][s.n2];
            case Region::S1: return s1[s.n2];
            case Region::S2: return s2[s.n1];
            default: return s3;
        }
    }

    T& ref(State s) {
        switch (split.region_of(s)) {
            case Region::S0: return s0[s.n1][s.n2];
            case Region::S1: return s1[s.n2];
            case Region::S2: return s2[s.n1];
            default: return s3;
        }
    }

    template <typename F>
    void for_each_representative(F&& f) const {
        for (int n1 = 0; n1 < split.N1; ++n1)
            for (int n2 = 0; n2 < split.N2; ++n2) f(State{n1, n2}, s0[n1][n2]);
        for (int n2 = 0; n2 < split.N2; ++n2) f(State{split.N1, n2}, s1[n2]);
        for (int n1 = 0; n1 < split.N1; ++n1) f(State{n1, split.N2}, s2[n1]);
        f(State{split.N1, split.N2}, s3);
    }
};

/// Partially homogeneous one-step law over the quarter plane.
/// Immutable after construction; lookups never allocate.
struct TransitionKernel {
    RegionSplit split;
    RegionTable<JumpDistribution> table;

    TransitionKernel() = default;
    explicit TransitionKernel(RegionSplit sp) : split(sp), table(sp) {}

    const JumpDistribution& jump_distribution(State s) const { return table.lookup(s); }
    const JumpDistribution& s3() const { return table.s3; }

    double p(int i, int j, State s) const { return table.lookup(s)(i, j); }

    /// Mirror of the walk under the swap (n1,n2) -> (n2,n1), (i,j) -> (j,i).
    TransitionKernel transposed() const {
        TransitionKernel t(RegionSplit(split.N2, split.N1));
        for (int n1 = 0; n1 < split.N1; ++n1)
            for (int n2 = 0; n2 < split.N2; ++n2)
                t.table.s0[n2][n1] = table.s0[n1][n2].transposed();
        for (int n2 = 0; n2 < split.N2; ++n2) t.table.s2[n2] = table.s1[n2].transposed();
        for (int n1 = 0; n1 < split.N1; ++n1) t.table.s1[n1] = table.s2[n1].transposed();
        t.table.s3 = table.s3.transposed();
        return t;
    }
};

/// Per-user arrival and transmission probabilities of the adaptive
/// random-access network, with the same four-region storage.
struct AlohaParams {
    RegionSplit split;
    RegionTable<double> lambda1, lambda2, a1, a2;

    explicit AlohaParams(RegionSplit sp)
        : split(sp), lambda1(sp), lambda2(sp), a1(sp), a2(sp) {}
};

namespace detail {

inline JumpDistribution aloha_jump(double l1, double l2, double a1, double a2) {
    for (double v : {l1, l2, a1, a2})
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError("ALOHA parameter outside [0,1]");
    const double b1 = 1 - a1, b2 = 1 - a2, m1 = 1 - l1, m2 = 1 - l2;
    const double none_or_both = b1 * b2 + a1 * a2;  // no departure this slot
    const double d10 = l1 * m2, d01 = l2 * m1, d11 = l1 * l2, d00 = m1 * m2;
    JumpDistribution d;
    d.at(1, 0) = none_or_both * d10 + b1 * a2 * d11;
    d.at(0, 1) = none_or_both * d01 + b2 * a1 * d11;
    d.at(1, 1) = none_or_both * d11;
    d.at(-1, 1) = a1 * b2 * d01;
    d.at(1, -1) = a2 * b1 * d10;
    d.at(-1, 0) = a1 * b2 * d00;
    d.at(0, -1) = a2 * b1 * d00;
    d.at(0, 0) = none_or_both * d00 + b1 * a2 * d01 + b2 * a1 * d10;
    d.at(-1, -1) = 0.0;  // at most one success per slot
    return d;
}

}  // namespace detail

/// Build the transition kernel induced by ALOHA parameters.
inline TransitionKernel aloha_kernel(const AlohaParams& params) {
    if (params.a1.lookup({0, 0}) != 0.0 || params.a2.lookup({0, 0}) != 0.0 ||
        [&] {
            for (int n2 = 0; n2 <= params.split.N2; ++n2)
                if (params.a1.lookup({0, std::min(n2, params.split.N2)}) != 0.0) return true;
            for (int n1 = 0; n1 <= params.split.N1; ++n1)
                if (params.a2.lookup({std::min(n1, params.split.N1), 0}) != 0.0) return true;
            return false;
        }())
        throw ValidationError("empty queues cannot transmit: a1(0,n2) and a2(n1,0) must be 0");
    TransitionKernel k(params.split);
    k.table.for_each_representative([&](State s, const JumpDistribution&) {
        k.table.ref(s) = detail::aloha_jump(params.lambda1.lookup(s), params.lambda2.lookup(s),
                                            params.a1.lookup(s), params.a2.lookup(s));
    });
    return k;
}

enum class ValidateMode { Oracle, Analytic };

struct ValidationIssue {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

namespace detail {

/// Reachability of the folded chain on a truncated grid, both directions.
inline bool irreducible_on_grid(const TransitionKernel& k, int T) {
    const int n = (T + 1) * (T + 1);
    auto idx = [T](State s) { return s.n1 * (T + 1) + s.n2; };
    std::vector<char> fwd(n, 0);
    std::deque<State> queue{{0, 0}};
    fwd[0] = 1;
    int nf = 1;
    while (!queue.empty()) {
        State s = queue.front();
        queue.pop_front();
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j)
                if (k.p(i, j, s) > 0) {
                    State t{std::min(std::max(s.n1 + i, 0), T), std::min(std::max(s.n2 + j, 0), T)};
                    if (!fwd[idx(t)]) {
                        fwd[idx(t)] = 1;
                        ++nf;
                        queue.push_back(t);
                    }
                }
    }
    // Backward: a state reaches (0,0) iff (0,0) sees it in the reversed edge set.
    std::vector<std::vector<int>> rev(n);
    for (int n1 = 0; n1 <= T; ++n1)
        for (int n2 = 0; n2 <= T; ++n2) {
            State s{n1, n2};
            for (int i = -1; i <= 1; ++i)
                for (int j = -1; j <= 1; ++j)
                    if (k.p(i, j, s) > 0) {
                        State t{std::min(std::max(n1 + i, 0), T), std::min(std::max(n2 + j, 0), T)};
                        rev[idx(t)].push_back(idx(s));
                    }
        }
    std::vector<char> back(n, 0);
    std::deque<int> q{0};
    back[0] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop_front();
        for (int v : rev[u])
            if (!back[v]) {
                back[v] = 1;
                q.push_back(v);
            }
    }
    // Every forward-reachable state must reach the origin back.
    for (int u = 0; u < n; ++u)
        if (fwd[u] && !back[u]) return false;
    return nf > 1;
}

}  // namespace detail

/// Structural checks; report-valued, never throws.
inline ValidationReport validate(const TransitionKernel& k, ValidateMode mode) {
    ValidationReport rep;
    auto loc = [](State s) { return "(" + std::to_string(s.n1) + "," + std::to_string(s.n2) + ")"; };
    k.table.for_each_representative([&](State s, const JumpDistribution& d) {
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) {
                double v = d(i, j);
                if (!(v >= -kProbTol && v <= 1 + kProbTol) || std::isnan(v))
                    rep.issues.push_back({"negative_prob",
                                          "p(" + std::to_string(i) + "," + std::to_string(j) +
                                              ") at " + loc(s) + " outside [0,1]"});
            }
        if (std::abs(d.sum() - 1.0) > kProbTol)
            rep.issues.push_back({"not_stochastic", "entries at " + loc(s) + " sum to " +
                                                        std::to_string(d.sum()) + ", not 1"});
    });
    if (mode == ValidateMode::Analytic) {
        // No out-of-quadrant mass at the axes.
        for (int n2 = 0; n2 <= k.split.N2; ++n2)
            for (int j = -1; j <= 1; ++j)
                if (k.p(-1, j, {0, std::min(n2, k.split.N2)}) > 0)
                    rep.issues.push_back(
                        {"axis_west_mass", "p(-1," + std::to_string(j) + ")(0," +
                                               std::to_string(n2) + ") > 0 (vertical axis)"});
        for (int n1 = 0; n1 <= k.split.N1; ++n1)
            for (int i = -1; i <= 1; ++i)
                if (k.p(i, -1, {std::min(n1, k.split.N1), 0}) > 0)
                    rep.issues.push_back(
                        {"axis_south_mass", "p(" + std::to_string(i) + ",-1)(" +
                                                std::to_string(n1) + ",0) > 0 (horizontal axis)"});
        // South-West jumps break the Riemann-Hilbert route on S1/S2/S3.
        if (k.s3()(-1, -1) > 0)
            rep.issues.push_back({"psi00_nonzero", "Psi(0,0)>0: p(-1,-1) in S3 is " +
                                                       std::to_string(k.s3()(-1, -1))});
        for (int n2 = 0; n2 < k.split.N2; ++n2)
            if (k.p(-1, -1, {k.split.N1, n2}) > 0)
                rep.issues.push_back({"psi00_nonzero", "p(-1,-1)(N1," + std::to_string(n2) +
                                                           ") > 0 in S1"});
        for (int n1 = 0; n1 < k.split.N1; ++n1)
            if (k.p(-1, -1, {n1, k.split.N2}) > 0)
                rep.issues.push_back({"psi00_nonzero", "p(-1,-1)(" + std::to_string(n1) +
                                                           ",N2) > 0 in S2"});
    }
    const int T = std::max(2 * (k.split.N1 + k.split.N2), 8);
    if (rep.ok() && !detail::irreducible_on_grid(k, T))
        rep.issues.push_back({"not_irreducible",
                              "reachable class of (0,0) is not irreducible on the truncated grid"});
    return rep;
}

}  // namespace qpwalk
