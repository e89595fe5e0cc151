#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "qpwalk/circle_ops.hpp"
#include "qpwalk/model.hpp"
#include "qpwalk/poly.hpp"

namespace qpwalk {

/// The kernel R(x,y) = xy - Psi(x,y) of the homogeneous tail, in both of its
/// quadratic readings: hat_a(x) y^2 + hat_b(x) y + hat_c(x) and
/// a(y) x^2 + b(y) x + c(y).
struct KernelPolynomials {
    JumpDistribution p;

    Complex psi(Complex x, Complex y) const {
        Complex acc = 0;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j)
                acc += p(i, j) * std::pow(x, i + 1) * std::pow(y, j + 1);
        return acc;
    }

    Complex R(Complex x, Complex y) const { return x * y - psi(x, y); }

    Complex hat_a(Complex x) const { return -(x * p(0, 1) + x * x * p(1, 1) + p(-1, 1)); }
    Complex hat_b(Complex x) const {
        return x * (1.0 - p(0, 0)) - p(-1, 0) - x * x * p(1, 0);
    }
    Complex hat_c(Complex x) const { return -(x * x * p(1, -1) + x * p(0, -1) + p(-1, -1)); }

    Complex a(Complex y) const { return -(y * p(1, 0) + y * y * p(1, 1) + p(1, -1)); }
    Complex b(Complex y) const {
        return y * (1.0 - p(0, 0)) - p(0, -1) - y * y * p(0, 1);
    }
    Complex c(Complex y) const { return -(y * y * p(-1, 1) + y * p(-1, 0) + p(-1, -1)); }

    Complex discriminant_y(Complex x) const {
        return hat_b(x) * hat_b(x) - 4.0 * hat_a(x) * hat_c(x);
    }
    Complex discriminant_x(Complex y) const { return b(y) * b(y) - 4.0 * a(y) * c(y); }

    /// x-drift and y-drift of the tail law.
    double Ex() const { return p.drift_x(); }
    double Ey() const { return p.drift_y(); }

    /// gamma < 0 is the regime where X0(1) = 1.
    double gamma() const {
        return p(1, 0) + p(1, 1) + p(1, -1) - p(-1, 1) - p(-1, 0);
    }

    KernelPolynomials transposed() const { return {p.transposed()}; }

    /// Coefficients of the quartic hat_b^2 - 4 hat_a hat_c in x.
    Poly discriminant_y_poly() const {
        Poly hb{{-p(-1, 0), 1.0 - p(0, 0), -p(1, 0)}};
        Poly ha{{-p(-1, 1), -p(0, 1), -p(1, 1)}};
        Poly hc{{-p(-1, -1), -p(0, -1), -p(1, -1)}};
        Poly r = poly_mul(hb, hb);
        Poly s = poly_mul(ha, hc);
        for (std::size_t k = 0; k < r.c.size(); ++k) r.c[k] -= 4.0 * s.c[k];
        return r;
    }
};

inline KernelPolynomials kernel_coeffs(const TransitionKernel& k) { return {k.s3()}; }

enum class Axis { X, Y };  // X: slits of Y(x) in the x-plane, Y: slits of X(y)

/// Four real branch points b1 <= b2 < b3 <= b4 with |b1|,|b2| < 1 < |b3|,|b4|;
/// b4 is +infinity when the discriminant degree drops to three.
struct BranchPointSet {
    Axis axis;
    double b1, b2, b3, b4;
    bool b4_infinite = false;
    std::function<double(double)> D;
};

inline BranchPointSet branch_points(const KernelPolynomials& kp, Axis axis) {
    const KernelPolynomials k = axis == Axis::X ? kp : kp.transposed();
    Poly D = k.discriminant_y_poly();
    double scale = 0;
    for (const Complex& v : D.c) scale = std::max(scale, std::abs(v));
    const bool degree_drop = std::abs(D.c[4]) < 1e-14 * scale;

    std::vector<double> roots;
    for (const Complex& r : poly_roots(D, 1e-14)) {
        if (std::abs(r.imag()) > 1e-8 * (1.0 + std::abs(r)))
            continue;
        roots.push_back(r.real());
    }
    std::sort(roots.begin(), roots.end());
    // collapse near-duplicates from the polish
    for (std::size_t i = 1; i < roots.size();)
        if (std::abs(roots[i] - roots[i - 1]) < 1e-12 * (1.0 + std::abs(roots[i])))
            roots.erase(roots.begin() + i);
        else
            ++i;

    const std::size_t expected = degree_drop ? 3 : 4;
    if (roots.size() != expected)
        throw DegenerateDiscriminantError("discriminant has " + std::to_string(roots.size()) +
                                          " real roots, expected " + std::to_string(expected));
    std::vector<double> inside, outside;
    for (double r : roots) (std::abs(r) < 1.0 ? inside : outside).push_back(r);
    if (inside.size() != 2 || outside.size() != expected - 2)
        throw DegenerateDiscriminantError(
            "branch points do not split across the unit circle as expected");
    if (std::abs(inside[1] - inside[0]) < 1e-10)
        throw DegenerateDiscriminantError("branch points closer than 1e-10");
    // A negative outer root marks a slit through infinity; order by modulus.
    std::sort(outside.begin(), outside.end(),
              [](double u, double v) { return std::abs(u) < std::abs(v); });

    BranchPointSet bp;
    bp.axis = axis;
    bp.b1 = inside[0];
    bp.b2 = inside[1];
    bp.b3 = outside[0];
    bp.b4 = degree_drop ? std::numeric_limits<double>::infinity() : outside[1];
    bp.b4_infinite = degree_drop;
    bp.D = [k](double t) { return k.discriminant_y(t).real(); };
    return bp;
}

namespace detail {

/// Numerically stable roots of q2 t^2 + q1 t + q0 with the given sqrt of the
/// discriminant (so callers control the branch on the slits).
inline std::pair<Complex, Complex> quadratic_roots(Complex q2, Complex q1, Complex q0,
                                                   Complex sqrt_disc) {
    if (std::abs(q2) < 1e-300) {
        Complex lin = std::abs(q1) > 0 ? -q0 / q1 : Complex(0);
        return {lin, Complex(std::numeric_limits<double>::infinity(), 0)};
    }
    Complex u = std::conj(q1);
    Complex s = (u * sqrt_disc).real() >= 0 ? sqrt_disc : -sqrt_disc;
    Complex q = -0.5 * (q1 + s);
    Complex r1 = q / q2;
    Complex r2 = std::abs(q) > 0 ? q0 / q : -q1 / q2 - r1;
    return {r1, r2};
}

}  // namespace detail

/// Both y-roots of R(x, .) = 0, smaller modulus first; a modulus tie keeps
/// the minus branch. On the slits the upper-edge limit is taken: the square
/// root of the negative discriminant is +i sqrt(|D|).
inline std::pair<Complex, Complex> branch_Y(const KernelPolynomials& kp, Complex x) {
    Complex A = kp.hat_a(x), B = kp.hat_b(x), C = kp.hat_c(x);
    Complex D = B * B - 4.0 * A * C;
    Complex sq;
    if (std::abs(x.imag()) < 1e-14 && std::abs(D.imag()) < 1e-13 * (1.0 + std::abs(D)) &&
        D.real() < 0)
        sq = Complex(0, std::sqrt(-D.real()));  // slit: principal upper edge
    else
        sq = std::sqrt(D);
    Complex minus = (-B - sq) / (2.0 * A);
    Complex plus = (-B + sq) / (2.0 * A);
    if (std::abs(A) < 1e-14) {
        auto [r1, r2] = detail::quadratic_roots(A, B, C, sq);
        minus = r1;
        plus = r2;
    }
    double dm = std::abs(minus), dp = std::abs(plus);
    if (dm <= dp + 1e-14 * std::max(dm, dp)) return {minus, plus};
    return {plus, minus};
}

inline Complex branch_Y0(const KernelPolynomials& kp, Complex x) {
    return branch_Y(kp, x).first;
}
inline Complex branch_Y1(const KernelPolynomials& kp, Complex x) {
    return branch_Y(kp, x).second;
}
inline Complex branch_X0(const KernelPolynomials& kp, Complex y) {
    return branch_Y0(kp.transposed(), y);
}
inline Complex branch_X1(const KernelPolynomials& kp, Complex y) {
    return branch_Y1(kp.transposed(), y);
}

inline bool on_slit(const BranchPointSet& bp, Complex t, double tol = 1e-12) {
    if (std::abs(t.imag()) > tol) return false;
    double r = t.real();
    return (r >= bp.b1 - tol && r <= bp.b2 + tol) ||
           (!bp.b4_infinite ? (r >= bp.b3 - tol && r <= bp.b4 + tol) : r >= bp.b3 - tol);
}

enum class Contour { M, L };

/// Closed curve traced by the small branch over the inner slit of the other
/// variable, tabulated in polar form on a uniform angle grid.
struct ContourData {
    Contour which = Contour::M;
    std::vector<double> phi, rho;
    std::vector<Complex> points;
    double extreme_right = 0, extreme_left = 0;  // beta0/beta1 (eta0/eta1 for L)
    double slit_lo = 0, slit_hi = 0;             // [y1, y2] (resp. [x1, x2])
    std::function<double(double)> relation;      // |x|^2 as a function of Re x
    std::function<double(double)> radius_exact;  // angle -> radius, off-grid
    std::function<double(double)> slit_param_exact;  // angle -> slit parameter y

    double radius_at(double angle) const {
        // linear interpolation on the uniform grid; used for membership tests
        const int n = static_cast<int>(phi.size());
        double a = std::fmod(angle, kTwoPi);
        if (a < 0) a += kTwoPi;
        double pos = a / kTwoPi * n;
        int j = static_cast<int>(pos) % n;
        double frac = pos - std::floor(pos);
        return rho[j] * (1 - frac) + rho[(j + 1) % n] * frac;
    }

    bool contains(Complex x, double safety = 0.0) const {
        double r = radius_exact ? radius_exact(std::arg(x)) : radius_at(std::arg(x));
        return std::abs(x) <= r - safety;
    }
};

namespace detail {

/// Helpers describing M for the kernel `k`: for y in [y1,y2] the two x-roots
/// are conjugate, with real part re_on_slit(y) and squared modulus mod2(y).
/// Holds its kernel by value so stored evaluators stay valid.
struct SlitCurve {
    KernelPolynomials k;
    double re_on_slit(double y) const {
        Complex av = k.a(y), bv = k.b(y);
        if (std::abs(av) < 1e-300) throw NumericError("degenerate a(y) on the slit");
        return (-bv / (2.0 * av)).real();
    }
    double mod2(double y) const {
        Complex av = k.a(y), cv = k.c(y);
        double v = (cv / av).real();
        return std::max(v, 0.0);
    }
};

}  // namespace detail

inline ContourData contour(const KernelPolynomials& kp, Contour which, int grid_size = 512) {
    const KernelPolynomials k = which == Contour::M ? kp : kp.transposed();
    BranchPointSet bp = branch_points(k, Axis::Y);  // slits of X(y): y1..y4
    const double y1 = bp.b1, y2 = bp.b2;
    detail::SlitCurve curve{k};

    ContourData cd;
    cd.which = which;
    cd.slit_lo = y1;
    cd.slit_hi = y2;
    cd.extreme_right = std::sqrt(curve.mod2(y2));
    cd.extreme_left = -std::sqrt(curve.mod2(y1));
    if (!(curve.re_on_slit(y2) > 0 && curve.re_on_slit(y1) < 0))
        throw NumericError("contour endpoints do not straddle 0; not star-shaped");

    const int n = grid_size;
    cd.phi = uniform_angles(n);
    cd.rho.assign(n, 0.0);
    auto solve_param = [curve, y1, y2](double angle) {
        const double c = std::cos(angle);
        auto h = [&](double y) { return curve.re_on_slit(y) - c * std::sqrt(curve.mod2(y)); };
        return bisect(h, y1, y2, 1e-15);
    };
    auto solve_angle = [curve, solve_param](double angle) {
        return std::sqrt(curve.mod2(solve_param(angle)));
    };
    cd.slit_param_exact = solve_param;
    cd.radius_exact = solve_angle;
    for (int j = 0; j <= n / 2; ++j) cd.rho[j] = solve_angle(cd.phi[j]);
    for (int j = n / 2 + 1; j < n; ++j) cd.rho[j] = cd.rho[n - j];  // conjugate symmetry
    cd.points.resize(n);
    for (int j = 0; j < n; ++j) cd.points[j] = std::polar(cd.rho[j], cd.phi[j]);

    // |x|^2 as a function of Re x, via the slit parameter
    cd.relation = [curve, y1, y2](double re) {
        auto f = [&](double y) { return curve.re_on_slit(y) - re; };
        double y = bisect(f, y1, y2, 1e-15);
        return curve.mod2(y);
    };
    return cd;
}

/// One-valued inverse of the modulus relation on the inner x-slit: the
/// parameter value in [x1, x2] whose conjugate y-roots have |y|^2 = k2.
inline double slit_parameter_from_modulus(const KernelPolynomials& kp, double k2,
                                          double x_lo, double x_hi) {
    // hat_c(x) - k2 * hat_a(x) = 0, quadratic in x
    double q2 = -kp.p(1, -1) + k2 * kp.p(1, 1);
    double q1 = -kp.p(0, -1) + k2 * kp.p(0, 1);
    double q0 = -kp.p(-1, -1) + k2 * kp.p(-1, 1);
    double disc = q1 * q1 - 4 * q2 * q0;
    if (disc < 0) throw NumericError("modulus relation has no real inverse");
    double s = std::sqrt(disc);
    for (double root : {(-q1 - s) / (2 * q2), (-q1 + s) / (2 * q2)})
        if (root >= x_lo - 1e-9 && root <= x_hi + 1e-9) return root;
    throw NumericError("modulus relation inverse fell outside the slit");
}

/// Zeros of g^2 = Psi(g s, g s^-1) inside the closed unit disc, traced along
/// the unit s-circle, and the curves they sweep.
struct GeneralZeroTrace {
    std::vector<Complex> s;   // unit-circle samples
    std::vector<Complex> g;   // the branch through g(1) = 1
    std::vector<Complex> s1;  // {g(s) s}
    std::vector<Complex> s2;  // {g(s) / s}
    std::vector<std::vector<Complex>> zeros_inside;  // all roots with |g| <= 1 per sample
};

namespace detail {

inline Poly kernel_in_g(const KernelPolynomials& kp, Complex s) {
    // Psi(g s, g s^-1) - g^2 as a polynomial in g
    Poly q;
    q.c.assign(5, Complex(0));
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            q.c[i + j + 2] += kp.p(i, j) * std::pow(s, i - j);
    q.c[2] -= 1.0;
    return q;
}

inline int winding_count_on_circle(const Poly& q, double radius, int n = 2048) {
    std::vector<Complex> vals(n);
    for (int j = 0; j < n; ++j) vals[j] = q.eval(std::polar(radius, kTwoPi * j / n));
    return winding_number(vals);
}

}  // namespace detail

inline GeneralZeroTrace general_zeros(const KernelPolynomials& kp, int n_samples = 128) {
    if (kp.p(-1, -1) <= 0)
        throw ValidationError("general zero trace needs Psi(0,0) > 0");
    if (!(kp.Ex() < 0 && kp.Ey() < 0))
        throw ValidationError("general zero trace needs negative tail drifts");
    GeneralZeroTrace tr;
    tr.s = unit_circle_points(n_samples);
    tr.g.resize(n_samples);
    tr.zeros_inside.resize(n_samples);
    Complex prev = 1.0;  // g(1) = 1
    for (int j = 0; j < n_samples; ++j) {
        Poly q = detail::kernel_in_g(kp, tr.s[j]);
        int count = detail::winding_count_on_circle(q, 1.0 + 1e-7);
        if (count != 2)
            throw ZeroCountMismatchError("argument principle counts " + std::to_string(count) +
                                         " zeros in |g|<=1 at sample " + std::to_string(j));
        std::vector<Complex> inside;
        for (const Complex& r : poly_roots(q))
            if (std::abs(r) <= 1.0 + 1e-7) inside.push_back(r);
        if (inside.size() != 2)
            throw ZeroCountMismatchError("root solve found " + std::to_string(inside.size()) +
                                         " zeros in |g|<=1 at sample " + std::to_string(j));
        tr.zeros_inside[j] = inside;
        tr.g[j] = std::abs(inside[0] - prev) <= std::abs(inside[1] - prev) ? inside[0]
                                                                           : inside[1];
        prev = tr.g[j];
    }
    tr.s1.resize(n_samples);
    tr.s2.resize(n_samples);
    for (int j = 0; j < n_samples; ++j) {
        tr.s1[j] = tr.g[j] * tr.s[j];
        tr.s2[j] = tr.g[j] / tr.s[j];
    }
    return tr;
}

}  // namespace qpwalk
