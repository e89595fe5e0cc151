#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "qpwalk/errors.hpp"

namespace qpwalk {

using Complex = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline std::vector<double> uniform_angles(int n) {
    std::vector<double> phi(n);
    for (int j = 0; j < n; ++j) phi[j] = kTwoPi * j / n;
    return phi;
}

inline std::vector<Complex> unit_circle_points(int n) {
    std::vector<Complex> t(n);
    for (int j = 0; j < n; ++j) t[j] = std::polar(1.0, kTwoPi * j / n);
    return t;
}

/// Harmonic conjugate of periodic samples (zero-mean convention: the
/// conjugate of a constant is 0, and the result has zero mean).
inline std::vector<double> conjugate_function(const std::vector<double>& u) {
    const int n = static_cast<int>(u.size());
    Eigen::FFT<double> fft;
    std::vector<Complex> in(u.begin(), u.end()), freq(n), out(n);
    fft.fwd(freq, in);
    for (int m = 0; m < n; ++m) {
        int k = m <= n / 2 ? m : m - n;  // signed frequency
        if (k > 0 && 2 * k != n)
            freq[m] *= Complex(0, -1);
        else if (k < 0)
            freq[m] *= Complex(0, 1);
        else
            freq[m] = 0;  // mean and Nyquist
    }
    fft.inv(out, freq);
    std::vector<double> v(n);
    for (int m = 0; m < n; ++m) v[m] = out[m].real();
    return v;
}

/// Schwarz integral of real boundary samples: the analytic function in the
/// disc with Re = u on the boundary and Im = 0 at the origin, by the
/// trapezoidal rule (spectrally accurate away from the boundary).
inline Complex schwarz_integral(const std::vector<double>& u, const std::vector<Complex>& t,
                                Complex z) {
    const int n = static_cast<int>(u.size());
    Complex acc = 0;
    for (int j = 0; j < n; ++j) acc += u[j] * (t[j] + z) / (t[j] - z);
    return acc / static_cast<double>(n);
}

/// Truncated-Fourier form of the Schwarz integral: the analytic completion
/// c0 + sum_m 2 u_hat(m) z^m of real boundary samples. For smooth data the
/// truncation error is uniform over the closed disc, unlike the trapezoidal
/// sum whose aliasing term grows like |z|^n near the boundary.
struct FourierSeries {
    Complex c0;
    std::vector<Complex> c;  // c[m-1] = 2 u_hat(m)

    static FourierSeries from_samples(const std::vector<double>& u) {
        const int n = static_cast<int>(u.size());
        Eigen::FFT<double> fft;
        std::vector<Complex> in(u.begin(), u.end()), freq(n);
        fft.fwd(freq, in);
        FourierSeries s;
        s.c0 = freq[0] / static_cast<double>(n);
        s.c.resize(n / 2 - 1);
        for (int m = 1; m < n / 2; ++m) s.c[m - 1] = 2.0 * freq[m] / static_cast<double>(n);
        return s;
    }

    Complex eval(Complex z) const {
        Complex acc = 0;
        for (std::size_t m = c.size(); m-- > 0;) acc = acc * z + c[m];
        return acc * z + c0;
    }

    Complex deriv(Complex z) const {
        Complex acc = 0;
        for (std::size_t m = c.size(); m-- > 0;) acc = acc * z + double(m + 1) * c[m];
        return acc;
    }
};

/// d/dz of the Schwarz integral.
inline Complex schwarz_integral_deriv(const std::vector<double>& u,
                                      const std::vector<Complex>& t, Complex z) {
    const int n = static_cast<int>(u.size());
    Complex acc = 0;
    for (int j = 0; j < n; ++j) {
        Complex d = t[j] - z;
        acc += u[j] * 2.0 * t[j] / (d * d);
    }
    return acc / static_cast<double>(n);
}

/// Taylor coefficients 0..kmax of an analytic function from samples on the
/// circle of radius r (discrete circle transform).
inline std::vector<Complex> circle_coefficients(const std::vector<Complex>& samples, double r,
                                                int kmax) {
    const int n = static_cast<int>(samples.size());
    Eigen::FFT<double> fft;
    std::vector<Complex> freq(n), in = samples;
    fft.fwd(freq, in);
    std::vector<Complex> coeff(kmax + 1);
    for (int k = 0; k <= kmax && k < n; ++k)
        coeff[k] = freq[k] / (static_cast<double>(n) * std::pow(r, k));
    return coeff;
}

/// Winding number of a sampled closed curve around 0.
inline int winding_number(const std::vector<Complex>& curve) {
    double total = 0;
    const int n = static_cast<int>(curve.size());
    for (int j = 0; j < n; ++j) {
        Complex a = curve[j], b = curve[(j + 1) % n];
        if (std::abs(a) == 0.0 || std::abs(b) == 0.0)
            throw NumericError("winding number undefined: curve passes through 0");
        total += std::arg(b / a);
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

/// Continuous argument along a sampled curve; element k is arg(curve[k])
/// unwrapped from the start.
inline std::vector<double> unwrap_arg(const std::vector<Complex>& curve) {
    std::vector<double> th(curve.size());
    if (curve.empty()) return th;
    th[0] = std::arg(curve[0]);
    for (std::size_t j = 1; j < curve.size(); ++j)
        th[j] = th[j - 1] + std::arg(curve[j] / curve[j - 1]);
    return th;
}

/// Polynomial extrapolation of (h_i, v_i) samples to h = 0 (Neville).
inline Complex extrapolate_to_zero(std::vector<double> h, std::vector<Complex> v) {
    const int n = static_cast<int>(h.size());
    for (int level = 1; level < n; ++level)
        for (int i = 0; i < n - level; ++i)
            v[i] = (h[i + level] * v[i] - h[i] * v[i + 1]) / (h[i + level] - h[i]);
    return v[0];
}

/// Bisection on a bracketing interval; f(lo) and f(hi) must differ in sign,
/// with a little absolute slack so exact-root endpoints survive roundoff.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol = 1e-14, int max_iter = 200,
              double endpoint_slack = 1e-11) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0)) {
        if (std::abs(flo) <= endpoint_slack && std::abs(flo) <= std::abs(fhi)) return lo;
        if (std::abs(fhi) <= endpoint_slack) return hi;
        throw NumericError("bisection bracket does not change sign");
    }
    for (int it = 0; it < max_iter && hi - lo > tol * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace qpwalk
