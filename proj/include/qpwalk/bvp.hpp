#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "qpwalk/assembly.hpp"
#include "qpwalk/circle_ops.hpp"
#include "qpwalk/kernel.hpp"
#include "qpwalk/linear_form.hpp"

namespace qpwalk {

/// Conformal equivalence between the unit disc and the interior of the
/// tabulated contour, from the boundary-correspondence fixed point.
struct ConformalPair {
    ContourData contour;
    int n = 0;
    std::vector<double> phi;       // uniform preimage angles
    std::vector<double> psi;       // image angles psi(phi_j)
    std::vector<double> log_rho;   // log rho(psi(phi_j))
    std::vector<Complex> t;        // circle grid e^{i phi_j}
    std::vector<Complex> boundary; // image points on the contour
    FourierSeries log_rho_series;  // analytic completion of log_rho
    int iterations = 0;
    double residual = 0;
    std::vector<double> residual_history;

    /// gamma0: closed unit disc -> closure of the contour interior.
    Complex forward(Complex z) const { return z * std::exp(log_rho_series.eval(z)); }
    Complex forward_deriv(Complex z) const {
        Complex s = log_rho_series.eval(z);
        return std::exp(s) * (1.0 + z * log_rho_series.deriv(z));
    }

    /// gamma: interior point -> disc, Newton on the forward map.
    Complex inverse(Complex x, double tol = 1e-13) const {
        const double scale = 1.0 + std::abs(x);
        Complex d0 = forward_deriv(0.0);
        Complex z = x / d0;
        if (std::abs(z) > 0.95) {
            // start from the nearest tabulated boundary point
            std::size_t best = 0;
            double bd = 1e300;
            for (std::size_t j = 0; j < boundary.size(); ++j) {
                double dist = std::abs(boundary[j] - x);
                if (dist < bd) {
                    bd = dist;
                    best = j;
                }
            }
            z = t[best] * std::min(1.0, std::abs(x) / std::max(1e-12, std::abs(boundary[best])));
        }
        for (int it = 0; it < 100; ++it) {
            Complex f = forward(z) - x;
            if (std::abs(f) < tol * scale) return z;
            Complex df = forward_deriv(z);
            if (std::abs(df) < 1e-300) break;
            Complex step = f / df;
            // keep the iterate in the closed disc
            Complex nz = z - step;
            int halvings = 0;
            while (std::abs(nz) > 1.0 + 1e-9 && halvings < 60) {
                step *= 0.5;
                nz = z - step;
                ++halvings;
            }
            z = nz;
        }
        Complex f = forward(z) - x;
        if (std::abs(f) < 1e-8 * scale) return z;  // loose but usable
        throw NumericError("conformal inverse did not converge");
    }
};

/// Boundary-correspondence fixed point (damped, with conjugate-symmetry
/// projection each sweep).
inline ConformalPair theodorsen(const ContourData& cd, double tol = 1e-10,
                                int max_iter = 400, double damping = 0.5) {
    if (!cd.radius_exact) throw ValidationError("contour lacks an exact radius evaluator");
    ConformalPair map;
    map.contour = cd;
    map.n = static_cast<int>(cd.phi.size());
    const int n = map.n;
    map.phi = cd.phi;
    map.t = unit_circle_points(n);
    std::vector<double> v(n, 0.0), u(n), hv(n);
    double res = 0;
    int it = 0;
    for (; it < max_iter; ++it) {
        for (int j = 0; j < n; ++j) u[j] = std::log(cd.radius_exact(map.phi[j] + v[j]));
        hv = conjugate_function(u);
        res = 0;
        for (int j = 0; j < n; ++j) {
            double nv = (1 - damping) * v[j] + damping * hv[j];
            res = std::max(res, std::abs(nv - v[j]));
            v[j] = nv;
        }
        map.residual_history.push_back(res);
        // conjugate symmetry: psi(2pi - phi) = 2pi - psi(phi)
        v[0] = 0.0;
        if (n % 2 == 0) v[n / 2] = 0.0;
        for (int j = 1; j < n / 2; ++j) {
            double odd = 0.5 * (v[j] - v[n - j]);
            v[j] = odd;
            v[n - j] = -odd;
        }
        if (res < tol) break;
    }
    if (res >= tol)
        throw NoConvergenceError(it, res, "boundary correspondence did not converge");
    map.iterations = it + 1;
    map.residual = res;
    map.psi.resize(n);
    map.log_rho.resize(n);
    map.boundary.resize(n);
    for (int j = 0; j < n; ++j) {
        map.psi[j] = map.phi[j] + v[j];
        map.log_rho[j] = std::log(cd.radius_exact(map.psi[j]));
        map.boundary[j] = std::polar(std::exp(map.log_rho[j]), map.psi[j]);
    }
    map.log_rho_series = FourierSeries::from_samples(map.log_rho);
    return map;
}

/// Zeros of an analytic function in the lune between the contour and the
/// unit circle (the region where the boundary generating function may
/// acquire poles).
struct PoleDetection {
    std::vector<Complex> poles;        // with multiplicity, repeated
    int boundary_winding = 0;          // argument-principle count
    bool lune_empty = true;
};

inline PoleDetection detect_poles(const std::function<Complex(Complex)>& fn,
                                  const ContourData& cd) {
    PoleDetection det;
    // crossing angles of the contour with the unit circle on [0, pi]
    std::vector<double> crossings;
    const int n = static_cast<int>(cd.phi.size());
    for (int j = 0; j < n / 2; ++j) {
        double a0 = cd.phi[j], a1 = cd.phi[j + 1];
        double f0 = cd.rho[j] - 1.0, f1 = cd.rho[j + 1] - 1.0;
        if ((f0 > 0) != (f1 > 0))
            crossings.push_back(bisect(
                [&](double a) { return cd.radius_exact(a) - 1.0; }, a0, a1, 1e-14));
    }
    if (cd.rho[0] <= 1.0 && crossings.empty()) return det;  // contour inside the disc
    if (cd.rho[0] > 1.0 && crossings.size() != 1)
        throw NumericError("unsupported lune topology: " + std::to_string(crossings.size()) +
                           " upper-half crossings");
    if (cd.rho[0] <= 1.0 && !crossings.empty())
        throw NumericError("unsupported lune topology: contour re-enters the disc");
    det.lune_empty = false;
    const double a_star = crossings[0];

    // positively oriented lune boundary: contour arc (-a*, a*), then the
    // unit-circle arc traversed backwards
    const int m = 512;
    std::vector<Complex> vals;
    vals.reserve(2 * m);
    for (int j = 0; j < m; ++j) {
        double a = -a_star + 2 * a_star * j / m;
        vals.push_back(fn(std::polar(cd.radius_exact(std::abs(a)), a)));
    }
    for (int j = 0; j < m; ++j) {
        double a = a_star - 2 * a_star * j / m;
        vals.push_back(fn(std::polar(1.0, a)));
    }
    det.boundary_winding = winding_number(vals);
    if (det.boundary_winding == 0) return det;

    // locate the zeros: coarse modulus scan inside the lune, Newton polish
    std::vector<Complex> seeds;
    const int nr = 24, na = 96;
    for (int ir = 1; ir < nr; ++ir)
        for (int ia = 0; ia <= na; ++ia) {
            double a = -a_star + 2 * a_star * ia / na;
            double rmax = cd.radius_exact(std::abs(a));
            if (rmax <= 1.0) continue;
            double r = 1.0 + (rmax - 1.0) * ir / nr;
            seeds.push_back(std::polar(r, a));
        }
    std::vector<std::pair<double, Complex>> ranked;
    for (const Complex& s : seeds) ranked.emplace_back(std::abs(fn(s)), s);
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& p, const auto& q) { return p.first < q.first; });
    auto newton = [&](Complex z) {
        for (int it = 0; it < 60; ++it) {
            const double h = 1e-7;
            Complex f = fn(z);
            Complex df = (fn(z + h) - fn(z - h)) / (2 * h);
            if (std::abs(df) < 1e-300) break;
            Complex nz = z - f / df;
            if (std::abs(nz - z) < 1e-13 * (1 + std::abs(z))) return nz;
            z = nz;
        }
        return z;
    };
    auto local_multiplicity = [&](Complex z0) {
        std::vector<Complex> circle(64);
        for (int j = 0; j < 64; ++j)
            circle[j] = fn(z0 + std::polar(1e-4, kTwoPi * j / 64));
        return winding_number(circle);
    };
    for (const auto& [mag, seed] : ranked) {
        if (static_cast<int>(det.poles.size()) >= det.boundary_winding) break;
        Complex z = newton(seed);
        if (std::abs(fn(z)) > 1e-9) continue;
        if (std::abs(z) <= 1.0 + 1e-10) continue;
        if (std::abs(z) > cd.radius_exact(std::arg(z)) - 1e-10) continue;
        bool dup = false;
        for (const Complex& q : det.poles) dup |= std::abs(q - z) < 1e-6;
        if (dup) continue;
        int mult = std::max(1, local_multiplicity(z));
        for (int c = 0; c < mult; ++c) det.poles.push_back(z);
    }
    if (static_cast<int>(det.poles.size()) != det.boundary_winding)
        throw NumericError("pole search found " + std::to_string(det.poles.size()) +
                           " zeros but the boundary winding is " +
                           std::to_string(det.boundary_winding));
    return det;
}

/// Sampled boundary condition Re(i U f) = w on the contour, pulled back to
/// the unit circle through the conformal map.
struct RHProblem {
    int n = 0;
    std::vector<Complex> x;       // contour samples gamma0(t_j)
    std::vector<Complex> U;       // coefficient samples
    std::vector<LinearForm> w;    // right side, affine in the unknowns
    std::vector<double> theta0;   // periodic part of arg(iU)
    std::vector<Complex> poles;   // poles of the boundary function, x-plane
    int chi = 0;                  // index: minus the winding of U
};

inline RHProblem build_rh(const TransitionKernel& kernel, const UnknownLayout& layout,
                          const KernelPolynomials& kp, const ConformalPair& map,
                          const std::vector<Complex>& poles) {
    RHProblem rh;
    rh.n = map.n;
    rh.poles = poles;
    rh.x = map.boundary;
    rh.U.resize(rh.n);
    rh.w.resize(rh.n);
    std::vector<Complex> iU(rh.n);
    const bool have_params = static_cast<bool>(map.contour.slit_param_exact);
    for (int j = 0; j < rh.n; ++j) {
        Complex x = rh.x[j];
        // the slit parameter is the well-conditioned coordinate here; the
        // x -> y direction loses half the digits near the real points
        Complex y;
        if (have_params) {
            y = map.contour.slit_param_exact(map.psi[j]);
        } else {
            y = branch_Y0(kp, x);
            if (std::abs(y.imag()) > 1e-7)
                throw NumericError("contour sample does not map to the real slit");
            y = Complex(y.real(), 0.0);
        }
        ABC co = abc(kernel, layout, x, y);
        if (std::abs(co.B) < 1e-12)
            throw NumericError("B vanishes on the contour at sample " + std::to_string(j));
        Complex pref = 1.0;
        for (const Complex& xi : poles) pref *= (x - xi);
        rh.U[j] = co.A / (pref * co.B);
        if (std::abs(rh.U[j]) < 1e-12)
            throw NumericError("U vanishes on the contour at sample " + std::to_string(j));
        rh.w[j] = (co.C * (1.0 / co.B)).imag_part();
        iU[j] = Complex(0, 1) * rh.U[j];
    }
    std::vector<double> theta = unwrap_arg(iU);
    double total = (theta[rh.n - 1] - theta[0]) + std::arg(iU[0] / iU[rh.n - 1]);
    int winding = static_cast<int>(std::lround(total / kTwoPi));
    rh.chi = -winding;
    if (rh.chi > 0)
        throw UnsupportedCaseError("index " + std::to_string(rh.chi) +
                                   " > 0 is outside the supported problem class");
    rh.theta0.resize(rh.n);
    for (int j = 0; j < rh.n; ++j) rh.theta0[j] = theta[j] - winding * map.phi[j];
    return rh;
}

namespace detail {

/// Apply the conjugation operator to a vector of forms, coefficientwise.
inline std::vector<LinearForm> conjugate_forms(const std::vector<LinearForm>& forms) {
    const int n = static_cast<int>(forms.size());
    std::vector<int> keys;
    for (const LinearForm& f : forms)
        for (const auto& [k, c] : f.coeffs())
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    std::vector<LinearForm> out(n);
    std::vector<double> comp(n);
    for (int j = 0; j < n; ++j) comp[j] = forms[j].constant().real();
    std::vector<double> hc = conjugate_function(comp);
    for (int j = 0; j < n; ++j) out[j] = LinearForm(Complex(hc[j], 0));
    for (int key : keys) {
        for (int j = 0; j < n; ++j) {
            auto it = forms[j].coeffs().find(key);
            comp[j] = it == forms[j].coeffs().end() ? 0.0 : it->second.real();
        }
        std::vector<double> h = conjugate_function(comp);
        for (int j = 0; j < n; ++j)
            if (h[j] != 0.0) out[j] += LinearForm::unknown(key, Complex(h[j], 0));
    }
    return out;
}

inline LinearForm schwarz_forms(const std::vector<LinearForm>& forms,
                                const std::vector<Complex>& t, Complex z) {
    const int n = static_cast<int>(forms.size());
    LinearForm acc;
    for (int j = 0; j < n; ++j) acc += forms[j] * ((t[j] + z) / (t[j] - z));
    return acc * Complex(1.0 / n);
}

/// Fourier coefficient (1/n) sum f_j e^{-ik phi_j} of form-valued samples.
inline LinearForm form_fourier_coefficient(const std::vector<LinearForm>& forms,
                                           const std::vector<double>& phi, int k) {
    const int n = static_cast<int>(forms.size());
    LinearForm acc;
    for (int j = 0; j < n; ++j) acc += forms[j] * std::polar(1.0 / n, -k * phi[j]);
    return acc;
}

/// All coefficients 0..kmax at once, one FFT per distinct unknown slot.
inline std::vector<LinearForm> form_fourier_table(const std::vector<LinearForm>& forms,
                                                  int kmax) {
    const int n = static_cast<int>(forms.size());
    std::vector<int> keys;
    for (const LinearForm& f : forms)
        for (const auto& [k, c] : f.coeffs())
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    Eigen::FFT<double> fft;
    std::vector<LinearForm> out(kmax + 1);
    auto accumulate = [&](auto get, auto put) {
        std::vector<Complex> in(n), freq(n);
        for (int j = 0; j < n; ++j) in[j] = get(forms[j]);
        fft.fwd(freq, in);
        for (int k = 0; k <= kmax && k < n; ++k) put(k, freq[k] / static_cast<double>(n));
    };
    accumulate([&](const LinearForm& f) { return f.constant(); },
               [&](int k, Complex v) { out[k] += LinearForm(v); });
    for (int key : keys)
        accumulate(
            [&](const LinearForm& f) {
                auto it = f.coeffs().find(key);
                return it == f.coeffs().end() ? Complex(0) : it->second;
            },
            [&](int k, Complex v) {
                if (v != Complex(0)) out[k] += LinearForm::unknown(key, v);
            });
    return out;
}

}  // namespace detail

/// Solution operator of the boundary-value problem: the boundary generating
/// functions as affine expressions in the unknowns and the constant slot.
class BoundaryEvaluators {
public:
    BoundaryEvaluators(TransitionKernel kernel, UnknownLayout layout, KernelPolynomials kp,
                       ConformalPair map, RHProblem rh)
        : kernel_(std::move(kernel)),
          layout_(layout),
          kp_(kp),
          map_(std::move(map)),
          rh_(std::move(rh)) {
        const int n = rh_.n;
        // sigma0 = Schwarz integral of -theta0: boundary imaginary part
        minus_theta0_.resize(n);
        for (int j = 0; j < n; ++j) minus_theta0_[j] = -rh_.theta0[j];
        omega1_ = conjugate_function(minus_theta0_);
        density_.resize(n);
        for (int j = 0; j < n; ++j)
            density_[j] = rh_.w[j] * Complex(std::exp(omega1_[j]) / std::abs(rh_.U[j]), 0);
        hilbert_density_ = detail::conjugate_forms(density_);
        sigma0_series_ = FourierSeries::from_samples(minus_theta0_);
        std::vector<LinearForm> table = detail::form_fourier_table(density_, n / 2 - 1);
        density_c0_ = table[0];
        for (int m = 1; m < n / 2; ++m) density_series_.push_back(table[m] * 2.0);
        if (rh_.chi < 0) {
            solvability_.push_back(LinearForm::unknown(layout_.constant_index()));
            for (int k = 0; k <= -rh_.chi - 1; ++k) solvability_.push_back(table[k]);
            for (int k = 0; k - rh_.chi < n / 2 && k <= 96; ++k)
                series_.push_back(table[k - rh_.chi] * 2.0);
        }
    }

    int chi() const { return rh_.chi; }
    const RHProblem& problem() const { return rh_; }
    const ConformalPair& map() const { return map_; }
    const std::vector<LinearForm>& solvability_rows() const { return solvability_; }
    const std::vector<double>& omega1() const { return omega1_; }

    /// f(gamma0(z)) for z in the closed disc: pole factors times g0.
    LinearForm disc_function(Complex z) const {
        Complex sigma = sigma0(z);
        if (rh_.chi < 0 && std::abs(z) < 0.25) {
            // series form with the constrained singular terms dropped
            LinearForm acc;
            Complex zp = 1.0;
            for (const LinearForm& coeff : series_) {
                acc += coeff * zp;
                zp *= z;
            }
            return acc * std::exp(Complex(0, 1) * sigma);
        }
        LinearForm bracket = LinearForm::unknown(layout_.constant_index(), Complex(0, 1));
        bracket += density_c0_;
        LinearForm tail;
        for (std::size_t m = density_series_.size(); m-- > 0;)
            tail = tail * z + density_series_[m];
        bracket += tail * z;
        Complex factor = std::exp(Complex(0, 1) * sigma) * std::pow(z, rh_.chi);
        return bracket * factor;
    }

    /// Boundary values of the disc function at grid point j (Plemelj form).
    LinearForm disc_function_boundary(int j) const {
        Complex sigma(minus_theta0_[j], omega1_[j]);
        LinearForm bracket = LinearForm::unknown(layout_.constant_index(), Complex(0, 1));
        bracket += density_[j];
        bracket += hilbert_density_[j] * Complex(0, 1);
        Complex factor = std::exp(Complex(0, 1) * sigma) * std::pow(map_.t[j], rh_.chi);
        return bracket * factor;
    }

    /// g0 inside the contour interior; points of the unit disc outside it
    /// are reached through the kernel-relation continuation.
    LinearForm g0(Complex x, int depth = 0) const {
        // closed region: boundary targets are fine for the truncated series
        if (map_.contour.contains(x, -1e-7)) {
            Complex z = map_.inverse(x);
            if (std::abs(z) > 1.0) z /= std::abs(z);
            LinearForm f = disc_function(z);
            Complex pref = 1.0;
            for (const Complex& xi : rh_.poles) pref *= (x - xi);
            return f * (1.0 / pref);
        }
        if (depth >= 2) throw NumericError("g0 evaluation left the contour interior");
        Complex y = branch_Y0(kp_, x);
        if (!map_.contour.contains(branch_X0(kp_, y), 1e-9))
            throw NumericError(
                "g0 continuation is circular here: the small branch returns outside");
        ABC co = abc(kernel_, layout_, x, y);
        if (std::abs(co.A) < 1e-12)
            throw NumericError("continuation formula degenerate: A vanishes");
        LinearForm h = h0(y, depth + 1);
        return (co.B * h + co.C) * (-1.0 / co.A);
    }

    /// h0 on the closed unit y-disc through the kernel relation.
    LinearForm h0(Complex y, int depth = 0) const {
        Complex x0 = branch_X0(kp_, y);
        ABC co = abc(kernel_, layout_, x0, y);
        if (std::abs(co.B) < 1e-12)
            throw NumericError("B vanishes in the h0 relation");
        LinearForm g = g0(x0, depth);
        return (co.A * g + co.C) * (-1.0 / co.B);
    }

    Complex sigma0(Complex z) const { return sigma0_series_.eval(z); }

private:
    TransitionKernel kernel_;
    UnknownLayout layout_;
    KernelPolynomials kp_;
    ConformalPair map_;
    RHProblem rh_;
    std::vector<double> minus_theta0_, omega1_;
    std::vector<LinearForm> density_;          // e^{omega1} w / |U| on the grid
    std::vector<LinearForm> hilbert_density_;  // its conjugate function
    FourierSeries sigma0_series_;
    LinearForm density_c0_;                    // Fourier data of the density
    std::vector<LinearForm> density_series_;   // 2 delta_hat(m), m = 1..n/2-1
    std::vector<LinearForm> series_;           // regular Taylor part, chi < 0
    std::vector<LinearForm> solvability_;
};

inline BoundaryEvaluators rh_solve(const TransitionKernel& kernel, const UnknownLayout& layout,
                                   const KernelPolynomials& kp, const ConformalPair& map,
                                   const RHProblem& rh) {
    return BoundaryEvaluators(kernel, layout, kp, map, rh);
}

}  // namespace qpwalk
