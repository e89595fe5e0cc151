#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qpwalk/model.hpp"

namespace qpwalk {

/// One-dimensional birth-death chain governing one coordinate while the
/// other is saturated above its threshold. Levels 0..cutoff-1 are stored,
/// the homogeneous tail values apply from level cutoff on.
struct InducedChain {
    int cutoff = 0;                       // N2 for axis 2, N1 for axis 1
    std::vector<double> up, down, stay;   // level 0..cutoff-1
    double tail_up = 0, tail_down = 0, tail_stay = 0;

    double up_at(int n) const { return n < cutoff ? up[n] : tail_up; }
    double down_at(int n) const { return n < cutoff ? down[n] : tail_down; }
    double stay_at(int n) const { return n < cutoff ? stay[n] : tail_stay; }
};

/// axis=2: chain of n2 with n1 saturated (probabilities read at (N1, n2));
/// axis=1: chain of n1 with n2 saturated (probabilities read at (n1, N2)).
inline InducedChain induced_chain(const TransitionKernel& k, int axis) {
    if (axis != 1 && axis != 2) throw ValidationError("axis must be 1 or 2");
    const TransitionKernel& kk = axis == 2 ? k : k.transposed();
    const int cutoff = kk.split.N2;
    InducedChain c;
    c.cutoff = cutoff;
    auto fill = [&](const JumpDistribution& d, double& u, double& dn, double& st) {
        u = d(0, 1) + d(1, 1) + d(-1, 1);
        dn = d(1, -1) + d(0, -1) + d(-1, -1);
        st = 1.0 - u - dn;
    };
    c.up.resize(cutoff);
    c.down.resize(cutoff);
    c.stay.resize(cutoff);
    for (int n = 0; n < cutoff; ++n)
        fill(kk.jump_distribution({kk.split.N1, n}), c.up[n], c.down[n], c.stay[n]);
    fill(kk.s3(), c.tail_up, c.tail_down, c.tail_stay);
    return c;
}

/// Stationary law of an induced chain: explicit head plus geometric tail.
struct InducedStationary {
    std::vector<double> probs;  // psi_0 .. psi_cutoff
    double tail_ratio = 0;      // psi_{n+1}/psi_n for n >= cutoff

    double at(int n) const {
        if (n < static_cast<int>(probs.size())) return probs[n];
        return probs.back() * std::pow(tail_ratio, n - (static_cast<int>(probs.size()) - 1));
    }

    /// Mass at levels 0..m-1 (closed form for the geometric part beyond the head).
    double head_mass(int m) const {
        double s = 0;
        for (int n = 0; n < m; ++n) s += at(n);
        return s;
    }

    double total_mass() const {
        double s = 0;
        for (std::size_t n = 0; n + 1 < probs.size(); ++n) s += probs[n];
        return s + probs.back() / (1.0 - tail_ratio);
    }
};

inline InducedStationary induced_stationary(const InducedChain& c) {
    const double r = c.tail_up / c.tail_down;
    if (!(c.tail_down > 0) || !(r < 1.0))
        throw NotPositiveRecurrentError(
            "induced chain tail is not positive recurrent (up >= down)");
    InducedStationary s;
    s.tail_ratio = r;
    s.probs.resize(c.cutoff + 1);
    s.probs[0] = 1.0;
    for (int n = 1; n <= c.cutoff; ++n) {
        double dn = c.down_at(n);
        if (!(dn > 0))
            throw NotPositiveRecurrentError("induced chain has down(" + std::to_string(n) +
                                            ") = 0; no stationary law");
        s.probs[n] = s.probs[n - 1] * c.up_at(n - 1) / dn;
    }
    double total = 0;
    for (int n = 0; n < c.cutoff; ++n) total += s.probs[n];
    total += s.probs[c.cutoff] / (1.0 - r);
    for (double& v : s.probs) v /= total;
    return s;
}

/// Mean one-step displacements per region level.
struct DriftProfile {
    std::vector<double> gamma;  // x-drift at (N1, n2), n2 = 0..N2-1
    std::vector<double> delta;  // y-drift at (n1, N2), n1 = 0..N1-1
    double Ex = 0;              // x-drift in S3 (tail gamma)
    double Ey = 0;              // y-drift in S3 (tail delta)
};

inline DriftProfile drift_profile(const TransitionKernel& k) {
    DriftProfile d;
    d.gamma.resize(k.split.N2);
    d.delta.resize(k.split.N1);
    for (int n2 = 0; n2 < k.split.N2; ++n2)
        d.gamma[n2] = k.jump_distribution({k.split.N1, n2}).drift_x();
    for (int n1 = 0; n1 < k.split.N1; ++n1)
        d.delta[n1] = k.jump_distribution({n1, k.split.N2}).drift_y();
    d.Ex = k.s3().drift_x();
    d.Ey = k.s3().drift_y();
    return d;
}

enum class Classification { Ergodic, Transient, Boundary };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::Ergodic: return "ergodic";
        case Classification::Transient: return "transient";
        default: return "boundary";
    }
}

/// Classification of the walk plus everything the decision used.
struct StabilityReport {
    Classification classification = Classification::Boundary;
    int theorem_case = 0;              // 1..4
    std::optional<double> h1, h2;      // signed margins, when defined
    DriftProfile drifts;
    std::optional<InducedStationary> psi;  // coordinate-2 chain (needs Ey < 0)
    std::optional<InducedStationary> phi;  // coordinate-1 chain (needs Ex < 0)
    bool equality_subcase = false;     // decided by an equality clause; no
                                       // tolerance guidance exists for these
};

namespace detail {

/// Signed margin: saturated-drift balance of coordinate 1 against the
/// stationary weight the coordinate-2 chain puts below its threshold.
/// Negative means the drift condition for ergodicity holds strictly.
inline double margin(const std::vector<double>& gamma, double tail_gamma,
                     const InducedStationary& psi, int cutoff) {
    double head = 0, weighted = 0;
    for (int n = 0; n < cutoff; ++n) {
        head += psi.at(n);
        weighted += gamma[n] * psi.at(n);
    }
    return tail_gamma * (1.0 - head) + weighted;
}

}  // namespace detail

inline StabilityReport stability_report(const TransitionKernel& k, double tol = 1e-10) {
    StabilityReport rep;
    rep.drifts = drift_profile(k);
    const double gamma = rep.drifts.Ex, delta = rep.drifts.Ey;
    if (delta < 0) rep.psi = induced_stationary(induced_chain(k, 2));
    if (gamma < 0) rep.phi = induced_stationary(induced_chain(k, 1));
    if (rep.psi)
        rep.h1 = detail::margin(rep.drifts.gamma, gamma, *rep.psi, k.split.N2);
    if (rep.phi)
        rep.h2 = detail::margin(rep.drifts.delta, delta, *rep.phi, k.split.N1);

    if (gamma < 0 && delta < 0) {
        rep.theorem_case = 1;
        if (*rep.h1 < -tol && *rep.h2 < -tol)
            rep.classification = Classification::Ergodic;
        else if (*rep.h1 > tol || *rep.h2 > tol)
            rep.classification = Classification::Transient;
        else
            rep.classification = Classification::Boundary;
    } else if (gamma >= 0 && delta < 0) {
        rep.theorem_case = 2;
        if (*rep.h1 < -tol)
            rep.classification = Classification::Ergodic;
        else if (*rep.h1 > tol)
            rep.classification = Classification::Transient;
        else if (gamma > tol) {
            rep.classification = Classification::Transient;  // equality clause
            rep.equality_subcase = true;
        } else {
            rep.classification = Classification::Boundary;
        }
    } else if (gamma < 0 && delta >= 0) {
        rep.theorem_case = 3;
        if (*rep.h2 < -tol)
            rep.classification = Classification::Ergodic;
        else if (*rep.h2 > tol)
            rep.classification = Classification::Transient;
        else if (delta > tol) {
            rep.classification = Classification::Transient;
            rep.equality_subcase = true;
        } else {
            rep.classification = Classification::Boundary;
        }
    } else {
        rep.theorem_case = 4;
        rep.classification = Classification::Transient;
    }
    return rep;
}

inline Classification classify(const TransitionKernel& k, double tol = 1e-10) {
    return stability_report(k, tol).classification;
}

/// Signed left-minus-right values of the case-1 inequalities. Both drift
/// conditions must hold for this to be meaningful; throws otherwise.
inline std::pair<double, double> stability_margins(const TransitionKernel& k) {
    StabilityReport rep = stability_report(k);
    if (!rep.h1 || !rep.h2)
        throw NotPositiveRecurrentError(
            "stability margins need both saturated drifts negative (case 1)");
    return {*rep.h1, *rep.h2};
}

}  // namespace qpwalk
