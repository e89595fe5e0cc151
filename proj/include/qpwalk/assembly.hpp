#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qpwalk/kernel.hpp"
#include "qpwalk/linear_form.hpp"
#include "qpwalk/model.hpp"

namespace qpwalk {

/// The three level polynomials of the horizontal-strip recursion, read at
/// the representative state (N1, min(level, N2)).
struct FPolys {
    Complex f1, f2, f3;
};

inline FPolys f_polys(const TransitionKernel& k, int level, Complex x) {
    if (level < 0) throw ValidationError("f polynomials need level >= 0");
    const JumpDistribution& d = k.jump_distribution({k.split.N1, level});
    FPolys f;
    f.f1 = x * x * d(1, 1) + x * d(0, 1) + d(-1, 1);
    f.f2 = x * (1.0 - d(0, 0)) - x * x * d(1, 0) - d(-1, 0);
    f.f3 = d(-1, -1) + x * d(0, -1) + x * x * d(1, -1);
    return f;
}

/// Maps grid coordinates of a possibly transposed walk into the shared
/// unknown layout.
struct PiIndexer {
    UnknownLayout layout;
    bool swapped = false;
    int operator()(int n1, int n2) const {
        return swapped ? layout.pi_index(n2, n1) : layout.pi_index(n1, n2);
    }
};

/// Right-hand side of the strip recursion at one level: affine in the
/// boundary probabilities on the two columns n1 = N1-1, N1.
inline LinearForm boundary_form(const TransitionKernel& k, const PiIndexer& pi, int n2,
                                Complex x) {
    const int N1 = k.split.N1;
    if (n2 < 0 || n2 >= k.split.N2)
        throw ValidationError("boundary form references states outside the unknown grid");
    LinearForm b;
    auto term = [&](int n1, int lvl, int i, int j, Complex weight) {
        if (lvl < 0) return;
        b += LinearForm::unknown(pi(n1, lvl), weight * k.p(i, j, {n1, lvl}));
    };
    term(N1 - 1, n2 - 1, 1, 1, x);
    term(N1 - 1, n2 + 1, 1, -1, x);
    term(N1 - 1, n2, 1, 0, x);
    term(N1, n2 - 1, -1, 1, -1.0);
    term(N1, n2, -1, 0, -1.0);
    term(N1, n2 + 1, -1, -1, -1.0);
    return b;
}

enum class RecursionVariant { General, Psi0 };

/// Level tables expressing the strip generating functions through the
/// boundary one: general variant gives g_n(x) = e_n(x) g0(x) + t_n(x);
/// the Psi0 variant (south-west-free strips) gives the same combination
/// scaled by x^n, which is what derivative extraction at 0 needs.
struct RecursionTables {
    Complex x;
    RecursionVariant variant = RecursionVariant::General;
    std::vector<Complex> e;      // e_0 .. e_N2
    std::vector<LinearForm> t;   // t_0 .. t_N2

    LinearForm combination(int level, const LinearForm& g0) const {
        return e[level] * g0 + t[level];
    }
};

inline RecursionTables recursions(const TransitionKernel& k, const PiIndexer& pi, Complex x,
                                  RecursionVariant variant, int levels = -1) {
    const int N2 = k.split.N2;
    const int top = levels < 0 ? N2 : levels;
    RecursionTables tab;
    tab.x = x;
    tab.variant = variant;
    tab.e.assign(top + 1, Complex(0));
    tab.t.assign(top + 1, LinearForm());
    tab.e[0] = 1.0;
    Complex e_m2 = 0, e_m1 = 1.0;  // e_{n-2}, e_{n-1}
    LinearForm t_m2, t_m1;
    Complex x_pow = 1.0;  // x^{n-1} weight for the Psi0 boundary terms
    for (int n = 1; n <= top; ++n) {
        FPolys fm1 = f_polys(k, n - 1, x);
        Complex f1m2 = n >= 2 ? f_polys(k, n - 2, x).f1 : Complex(0);
        Complex divisor;
        if (variant == RecursionVariant::General) {
            divisor = f_polys(k, n, x).f3;
        } else {
            const JumpDistribution& d = k.jump_distribution({k.split.N1, n});
            if (d(-1, -1) != 0.0)
                throw ValidationError(
                    "Psi0 recursion variant needs p(-1,-1) = 0 at every strip level");
            divisor = d(0, -1) + x * d(1, -1);
        }
        if (std::abs(divisor) < 1e-12)
            throw DivisorZeroError(n, "recursion divisor vanishes at level " +
                                          std::to_string(n));
        LinearForm b = boundary_form(k, pi, n - 1, x);
        Complex e_n;
        LinearForm t_n;
        if (variant == RecursionVariant::General) {
            e_n = (fm1.f2 * e_m1 - f1m2 * e_m2) / divisor;
            t_n = (fm1.f2 * t_m1 - f1m2 * t_m2 - b) * (1.0 / divisor);
        } else {
            e_n = (fm1.f2 * e_m1 - x * f1m2 * e_m2) / divisor;
            t_n = (fm1.f2 * t_m1 - (x * f1m2) * t_m2 - x_pow * b) * (1.0 / divisor);
        }
        tab.e[n] = e_n;
        tab.t[n] = t_n;
        e_m2 = e_m1;
        e_m1 = e_n;
        t_m2 = t_m1;
        t_m1 = t_n;
        x_pow *= x;
    }
    return tab;
}

/// Lower-triangular band matrix of the strip system K(x) l = c1 g0 + b.
inline Eigen::MatrixXcd matrix_K(const TransitionKernel& k, Complex x) {
    const int N2 = k.split.N2;
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(N2, N2);
    for (int i = 1; i <= N2; ++i) {
        K(i - 1, i - 1) = -f_polys(k, i, x).f3;
        if (i >= 2) K(i - 1, i - 2) = f_polys(k, i - 1, x).f2;
        if (i >= 3) K(i - 1, i - 3) = -f_polys(k, i - 2, x).f1;
    }
    return K;
}

inline Eigen::MatrixXcd matrix_M(const TransitionKernel& k, Complex y) {
    return matrix_K(k.transposed(), y);
}

/// First-column vector of the strip system.
inline Eigen::VectorXcd strip_c1(const TransitionKernel& k, Complex x) {
    const int N2 = k.split.N2;
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(N2);
    c(0) = -f_polys(k, 0, x).f2;
    if (N2 >= 2) c(1) = f_polys(k, 0, x).f1;
    return c;
}

/// Functional-equation coefficients: R(x,y) g(x,y) = A g0(x) + B h0(y) + C.
/// A and B depend only on the kernel; C is affine in the unknowns.
struct ABC {
    Complex A, B;
    LinearForm C;
    LinearForm corner;  // the four-term coupling head inside C
};

inline ABC abc(const TransitionKernel& k, const UnknownLayout& layout, Complex x, Complex y) {
    const int N1 = k.split.N1, N2 = k.split.N2;
    PiIndexer pi{layout, false};
    PiIndexer pit{layout, true};
    TransitionKernel kt = k.transposed();
    RecursionTables horiz = recursions(k, pi, x, RecursionVariant::General);
    RecursionTables vert = recursions(kt, pit, y, RecursionVariant::General);

    Complex f1_top = f_polys(k, N2 - 1, x).f1;
    Complex f3_tail = f_polys(k, N2, x).f3;
    Complex g1_top = f_polys(kt, N1 - 1, y).f1;
    Complex g3_tail = f_polys(kt, N1, y).f3;

    ABC r;
    r.A = y * f1_top * horiz.e[N2 - 1] - f3_tail * horiz.e[N2];
    r.B = x * g1_top * vert.e[N1 - 1] - g3_tail * vert.e[N1];
    r.C = y * f1_top * horiz.t[N2 - 1] - f3_tail * horiz.t[N2] + x * g1_top * vert.t[N1 - 1] -
          g3_tail * vert.t[N1];
    // corner coupling between the two strips
    r.corner = (x * y * k.p(1, 1, {N1 - 1, N2 - 1})) *
               LinearForm::unknown(layout.pi_index(N1 - 1, N2 - 1));
    r.corner += Complex(k.s3()(-1, -1)) * LinearForm::unknown(layout.pi_index(N1, N2));
    r.corner -= (x * k.p(1, -1, {N1 - 1, N2})) * LinearForm::unknown(layout.pi_index(N1 - 1, N2));
    r.corner -= (y * k.p(-1, 1, {N1, N2 - 1})) * LinearForm::unknown(layout.pi_index(N1, N2 - 1));
    r.C += r.corner;
    return r;
}

}  // namespace qpwalk
