#pragma once

#include <complex>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qpwalk/errors.hpp"

namespace qpwalk {

using Complex = std::complex<double>;

/// Dense univariate polynomial, coefficients in ascending degree order.
struct Poly {
    std::vector<Complex> c;

    Complex eval(Complex x) const {
        Complex acc = 0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
        return acc;
    }

    Poly derivative() const {
        Poly d;
        if (c.size() > 1) {
            d.c.resize(c.size() - 1);
            for (std::size_t k = 1; k < c.size(); ++k) d.c[k - 1] = double(k) * c[k];
        }
        return d;
    }

    int degree(double tol = 0.0) const {
        double scale = 0;
        for (const Complex& v : c) scale = std::max(scale, std::abs(v));
        int d = static_cast<int>(c.size()) - 1;
        while (d > 0 && std::abs(c[d]) <= tol * scale) --d;
        return d;
    }
};

inline Poly poly_mul(const Poly& a, const Poly& b) {
    Poly r;
    r.c.assign(a.c.size() + b.c.size() - 1, Complex(0));
    for (std::size_t i = 0; i < a.c.size(); ++i)
        for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
}

/// Companion-matrix roots followed by a few Newton polish steps.
inline std::vector<Complex> poly_roots(const Poly& p, double degree_tol = 1e-13) {
    int deg = p.degree(degree_tol);
    if (deg <= 0) return {};
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -p.c[i] / p.c[deg];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(companion, false);
    if (es.info() != Eigen::Success) throw NumericError("companion eigensolve failed");
    Poly trunc;
    trunc.c.assign(p.c.begin(), p.c.begin() + deg + 1);
    Poly dp = trunc.derivative();
    std::vector<Complex> roots(deg);
    for (int i = 0; i < deg; ++i) {
        Complex r = es.eigenvalues()(i);
        for (int it = 0; it < 8; ++it) {
            Complex f = trunc.eval(r), df = dp.eval(r);
            if (std::abs(df) == 0.0) break;
            Complex step = f / df;
            r -= step;
            if (std::abs(step) < 1e-16 * (1.0 + std::abs(r))) break;
        }
        roots[i] = r;
    }
    return roots;
}

}  // namespace qpwalk
