#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpwalk/bvp.hpp"
#include "qpwalk/ergodicity.hpp"
#include "qpwalk/model_io.hpp"

namespace qpwalk {

struct SolveConfig {
    int contour_points = 2048;
    double theodorsen_tol = 1e-10;
    int theodorsen_max_iter = 400;
    double derivative_radius_cap = 0.5;
    int derivative_samples = 64;
    int window = 40;            // coefficient window kept for evaluation
    double tail_tol = 1e-8;
    double residual_abort = 1e-6;
    double negative_mass_abort = 1e-8;
    std::vector<double> limit_radii{0.9, 0.95, 0.975, 0.9875, 0.99375};
};

/// One affine equation with provenance.
struct SystemRow {
    LinearForm form;  // the equation reads form = 0
    std::string tag;
};

struct AssembledSystem {
    UnknownLayout layout;
    std::vector<SystemRow> rows;
};

/// Equilibrium equations of the inner region: one row per state of S0, all
/// referenced probabilities staying inside the unknown grid.
inline std::vector<SystemRow> balance_rows(const TransitionKernel& k,
                                           const UnknownLayout& layout) {
    std::vector<SystemRow> rows;
    for (int n1 = 0; n1 < k.split.N1; ++n1)
        for (int n2 = 0; n2 < k.split.N2; ++n2) {
            LinearForm row = LinearForm::unknown(layout.pi_index(n1, n2), -1.0);
            for (int i = -1; i <= 1; ++i)
                for (int j = -1; j <= 1; ++j) {
                    int s1 = n1 - i, s2 = n2 - j;
                    if (s1 < 0 || s2 < 0) continue;
                    row += LinearForm::unknown(layout.pi_index(s1, s2),
                                               k.p(i, j, {s1, s2}));
                }
            rows.push_back({row, "balance(" + std::to_string(n1) + "," +
                                     std::to_string(n2) + ")"});
        }
    return rows;
}

namespace detail {

/// Neville extrapolation to h = 0 for form-valued samples.
inline LinearForm extrapolate_forms(std::vector<double> h, std::vector<LinearForm> v) {
    const int n = static_cast<int>(h.size());
    for (int level = 1; level < n; ++level)
        for (int i = 0; i < n - level; ++i) {
            double denom = h[i + level] - h[i];
            v[i] = v[i] * (h[i + level] / denom) - v[i + 1] * (h[i] / denom);
        }
    return v[0];
}

/// Taylor coefficients 1..levels of the shifted strip combination
/// x^n g_n(x) sampled on a circle of radius r0; coefficient n equals
/// pi at the strip foot of level n.
inline std::vector<LinearForm> strip_foot_coefficients(
    const TransitionKernel& k, const PiIndexer& pi, const BoundaryEvaluators& ev,
    bool transposed_side, double r0, int samples) {
    const int levels = k.split.N2;
    std::vector<std::vector<LinearForm>> per_level(levels + 1,
                                                   std::vector<LinearForm>(samples));
    for (int s = 0; s < samples; ++s) {
        Complex x = std::polar(r0, kTwoPi * s / samples);
        RecursionTables tab = recursions(k, pi, x, RecursionVariant::Psi0);
        LinearForm g0 = transposed_side ? ev.h0(x) : ev.g0(x);
        for (int n = 1; n <= levels; ++n) per_level[n][s] = tab.combination(n, g0);
    }
    std::vector<LinearForm> coeff(levels + 1);
    for (int n = 1; n <= levels; ++n) {
        LinearForm acc;
        for (int s = 0; s < samples; ++s)
            acc += per_level[n][s] * std::polar(1.0 / samples, -kTwoPi * n * s / samples);
        coeff[n] = acc * Complex(std::pow(r0, -n));
    }
    return coeff;
}

/// Radius for coefficient extraction: half the closest divisor zero with
/// the configured cap, kept inside the mapped region.
inline double derivative_radius(const TransitionKernel& k, const SolveConfig& cfg,
                                double contour_min_radius) {
    double nearest = 1.0;
    for (int n = 1; n <= k.split.N2; ++n) {
        const JumpDistribution& d = k.jump_distribution({k.split.N1, n});
        if (d(1, -1) > 0 && d(0, -1) > 0)
            nearest = std::min(nearest, d(0, -1) / d(1, -1));
    }
    double r0 = 0.5 * std::min(1.0, nearest);
    r0 = std::min(r0, cfg.derivative_radius_cap);
    r0 = std::min(r0, 0.9 * contour_min_radius);
    return r0;
}

/// Largest radius not above `want` whose y-circle keeps the small x-branch
/// inside the mapped region, so h0 never needs the circular continuation.
inline double safe_image_radius(const KernelPolynomials& kp, const ContourData& cd,
                                double want) {
    for (double r = want; r > 0.02; r *= 0.85) {
        bool ok = true;
        for (int s = 0; s < 96 && ok; ++s)
            ok = cd.contains(branch_X0(kp, std::polar(r, kTwoPi * s / 96)), 1e-6);
        if (ok) return r;
    }
    throw NumericError("no evaluation radius keeps the small branch inside the region");
}

}  // namespace detail

/// Rows tying the strip-foot probabilities to the boundary functions:
/// pi(N1, n2) equals the n2-th Taylor coefficient of x^{n2} g_{n2}(x),
/// extracted on a small circle; mirrored for the other strip.
inline std::vector<SystemRow> derivative_rows(const TransitionKernel& k,
                                              const UnknownLayout& layout,
                                              const BoundaryEvaluators& ev, double r0x,
                                              double r0y, int samples) {
    std::vector<SystemRow> rows;
    PiIndexer pi{layout, false}, pit{layout, true};
    std::vector<LinearForm> horiz =
        detail::strip_foot_coefficients(k, pi, ev, false, r0x, samples);
    for (int n2 = 1; n2 <= k.split.N2; ++n2) {
        LinearForm row = LinearForm::unknown(layout.pi_index(k.split.N1, n2)) - horiz[n2];
        rows.push_back({row, "derivative(1," + std::to_string(n2) + ")"});
    }
    TransitionKernel kt = k.transposed();
    std::vector<LinearForm> vert =
        detail::strip_foot_coefficients(kt, pit, ev, true, r0y, samples);
    for (int n1 = 1; n1 <= k.split.N1; ++n1) {
        LinearForm row = LinearForm::unknown(layout.pi_index(n1, k.split.N2)) - vert[n1];
        rows.push_back({row, "derivative(2," + std::to_string(n1) + ")"});
    }
    return rows;
}

/// The value h0(0) cannot be read off directly: the kernel relation behind
/// h0 degenerates at y = 0 (the strip coefficients have a pole there). The
/// zeroth Taylor coefficient on a small circle gives the same number.
inline LinearForm h0_at_zero(const BoundaryEvaluators& ev, double r, int samples) {
    LinearForm mean;
    for (int s = 0; s < samples; ++s)
        mean += ev.h0(std::polar(r, kTwoPi * s / samples)) * Complex(1.0 / samples);
    return mean;
}

inline std::vector<SystemRow> point_rows(const TransitionKernel& k,
                                         const UnknownLayout& layout,
                                         const BoundaryEvaluators& ev, double r0y,
                                         int samples) {
    std::vector<SystemRow> rows;
    rows.push_back({LinearForm::unknown(layout.pi_index(k.split.N1, 0)) - ev.g0(0.0),
                    "point(g0-at-0)"});
    rows.push_back({LinearForm::unknown(layout.pi_index(0, k.split.N2)) -
                        h0_at_zero(ev, r0y, samples),
                    "point(h0-at-0)"});
    return rows;
}

/// Total-mass row: inner grid plus both strip sums at 1 plus the tail
/// function at (1,1), the latter two through radial limits.
inline SystemRow normalization_row(const TransitionKernel& k, const UnknownLayout& layout,
                                   const BoundaryEvaluators& ev, const SolveConfig& cfg) {
    PiIndexer pi{layout, false}, pit{layout, true};
    TransitionKernel kt = k.transposed();
    KernelPolynomials kp = kernel_coeffs(k);
    LinearForm row;
    // h0 at 1 is a radial limit either way: the kernel relation behind it
    // degenerates at (1,1), where both A and B vanish
    std::vector<double> hs;
    std::vector<LinearForm> h0_samples;
    for (double r : cfg.limit_radii) {
        hs.push_back(1.0 - r);
        h0_samples.push_back(ev.h0(Complex(r, 0)));
    }
    LinearForm h0_at_one = detail::extrapolate_forms(hs, h0_samples);
    // strip sums at 1: direct when 1 is interior, radial limits otherwise
    const bool at_one = ev.map().contour.contains(1.0, 1e-3);
    auto strip_total = [&](double r, const LinearForm& g0, const LinearForm& h0) {
        LinearForm total;
        RecursionTables horiz = recursions(k, pi, r, RecursionVariant::General);
        RecursionTables vert = recursions(kt, pit, r, RecursionVariant::General);
        for (int n2 = 0; n2 < k.split.N2; ++n2) total += horiz.combination(n2, g0);
        for (int n1 = 0; n1 < k.split.N1; ++n1) total += vert.combination(n1, h0);
        return total;
    };
    if (at_one) {
        row += strip_total(1.0, ev.g0(Complex(1.0, 0)), h0_at_one);
    } else {
        std::vector<LinearForm> samples;
        for (double r : cfg.limit_radii)
            samples.push_back(strip_total(r, ev.g0(Complex(r, 0)), ev.h0(Complex(r, 0))));
        row += detail::extrapolate_forms(hs, samples);
    }
    // the tail value at (1,1) is a genuine limit: the kernel vanishes there
    {
        std::vector<double> hs;
        std::vector<LinearForm> samples;
        for (double r : cfg.limit_radii) {
            ABC co = abc(k, layout, r, r);
            Complex R = kp.R(r, r);
            if (std::abs(R) < 1e-14)
                throw NumericError("kernel vanishes at the radial-limit sample");
            LinearForm g0 = ev.g0(Complex(r, 0));
            LinearForm h0 = ev.h0(Complex(r, 0));
            hs.push_back(1.0 - r);
            samples.push_back((co.A * g0 + co.B * h0 + co.C) * (1.0 / R));
        }
        row += detail::extrapolate_forms(hs, samples);
    }
    for (int n1 = 0; n1 < k.split.N1; ++n1)
        for (int n2 = 0; n2 < k.split.N2; ++n2)
            row += LinearForm::unknown(layout.pi_index(n1, n2));
    row += LinearForm(Complex(-1.0));
    return {row, "normalization"};
}

struct StationarySolution {
    UnknownLayout layout;
    std::vector<double> u;  // resolved boundary grid plus the solve constant
    double residual_max = 0;
    int chi = 0;
    std::vector<Complex> poles;
    double r0x = 0, r0y = 0;
    int negative_clamped = 0;
    std::string model_hash;
    AssembledSystem system;
    std::shared_ptr<BoundaryEvaluators> ev;
    TransitionKernel kernel;

    // resolved coefficient tables: strips and the tail window
    int window = 0;
    double torus_rx = 0, torus_ry = 0;
    std::vector<std::vector<double>> s1_rows;  // [n2][k]: pi(N1+1+k, n2)
    std::vector<std::vector<double>> s2_rows;  // [n1][k]: pi(n1, N2+1+k)
    std::vector<std::vector<double>> s3_grid;  // [k1][k2]: pi(N1+1+k1, N2+1+k2)

    double pi(int n1, int n2) const {
        const int N1 = layout.N1, N2 = layout.N2;
        if (n1 <= N1 && n2 <= N2) return u[layout.pi_index(n1, n2)];
        if (n2 <= N2) {
            int k = n1 - N1 - 1;
            if (n2 < static_cast<int>(s1_rows.size()) &&
                k < static_cast<int>(s1_rows[n2].size()))
                return s1_rows[n2][k];
        } else if (n1 <= N1) {
            int k = n2 - N2 - 1;
            if (n1 < static_cast<int>(s2_rows.size()) &&
                k < static_cast<int>(s2_rows[n1].size()))
                return s2_rows[n1][k];
        } else {
            int k1 = n1 - N1 - 1, k2 = n2 - N2 - 1;
            if (k1 < static_cast<int>(s3_grid.size()) &&
                k2 < static_cast<int>(s3_grid[k1].size()))
                return s3_grid[k1][k2];
        }
        throw ValidationError("state outside the evaluated window");
    }
};

inline double evaluate_pi(const StationarySolution& sol, int n1, int n2) {
    return sol.pi(n1, n2);
}

namespace detail {

// evaluation noise of the resolved boundary functions; extracted
// coefficients below floor = noise / r^k are indistinguishable from zero
constexpr double kSampleNoise = 1e-11;

inline void resolve_windows(StationarySolution& sol, const SolveConfig& cfg,
                            const KernelPolynomials& kp) {
    const TransitionKernel& k = sol.kernel;
    const int N1 = k.split.N1, N2 = k.split.N2;
    const int W = cfg.window;
    sol.window = W;
    const int m = std::max(64, 2 * W + 8);
    PiIndexer pi{sol.layout, false}, pit{sol.layout, true};
    TransitionKernel kt = k.transposed();

    // strip rows from the general tables on a mid-size circle
    auto strip = [&](const TransitionKernel& kk, const PiIndexer& idx, bool tside,
                     double r) {
        std::vector<std::vector<Complex>> samples(kk.split.N2 + 1,
                                                  std::vector<Complex>(m));
        for (int s = 0; s < m; ++s) {
            Complex x = std::polar(r, kTwoPi * s / m);
            RecursionTables tab = recursions(kk, idx, x, RecursionVariant::General);
            Complex g0 = (tside ? sol.ev->h0(x) : sol.ev->g0(x)).eval(sol.u);
            for (int n = 0; n <= kk.split.N2; ++n)
                samples[n][s] = tab.e[n] * g0 + tab.t[n].eval(sol.u);
        }
        std::vector<std::vector<double>> rows(kk.split.N2 + 1);
        for (int n = 0; n <= kk.split.N2; ++n) {
            std::vector<Complex> coeff = circle_coefficients(samples[n], r, W + 1);
            rows[n].resize(W);
            for (int c = 1; c <= W; ++c) {
                double floor = kSampleNoise / std::pow(r, c);
                double v = coeff[c].real();
                rows[n][c - 1] = std::abs(v) <= floor ? 0.0 : v;
            }
        }
        return rows;
    };
    double min_radius = 1.0;
    for (double r : sol.ev->map().contour.rho) min_radius = std::min(min_radius, r);
    double rs = std::min(0.55, 0.9 * min_radius);
    double rs_t = detail::safe_image_radius(kp, sol.ev->map().contour, rs);
    sol.s1_rows = strip(k, pi, false, rs);
    sol.s2_rows = strip(kt, pit, true, rs_t);
    (void)0;

    // tail grid through the functional equation on a safe torus; the
    // x-radius is bounded by the mapped region, the y-radius additionally
    // by where h0's argument stays inside it
    double rtx = rs;
    double rty = detail::safe_image_radius(kp, sol.ev->map().contour, std::min(0.6, rs));
    for (; rtx > 0.15; rtx *= 0.85) {
        double worst = 1e300;
        for (int a = 0; a < 32; ++a)
            for (int b = 0; b < 32; ++b)
                worst = std::min(worst, std::abs(kp.R(std::polar(rtx, kTwoPi * a / 32),
                                                      std::polar(rty, kTwoPi * b / 32))));
        if (worst > 5e-3) break;
    }
    std::vector<Complex> g0v(m), h0v(m);
    for (int s = 0; s < m; ++s) {
        g0v[s] = sol.ev->g0(std::polar(rtx, kTwoPi * s / m)).eval(sol.u);
        h0v[s] = sol.ev->h0(std::polar(rty, kTwoPi * s / m)).eval(sol.u);
    }
    Eigen::MatrixXcd tail(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            Complex x = std::polar(rtx, kTwoPi * a / m), y = std::polar(rty, kTwoPi * b / m);
            ABC co = abc(k, sol.layout, x, y);
            tail(a, b) =
                (co.A * g0v[a] + co.B * h0v[b] + co.C.eval(sol.u)) / kp.R(x, y);
        }
    // two-dimensional coefficient extraction
    Eigen::MatrixXcd f1(m, m);
    Eigen::FFT<double> fft;
    for (int a = 0; a < m; ++a) {
        std::vector<Complex> in(m), out(m);
        for (int b = 0; b < m; ++b) in[b] = tail(a, b);
        fft.fwd(out, in);
        for (int b = 0; b < m; ++b) f1(a, b) = out[b] / static_cast<double>(m);
    }
    sol.s3_grid.assign(W, std::vector<double>(W, 0.0));
    for (int k2 = 0; k2 < W; ++k2) {
        std::vector<Complex> in(m), out(m);
        for (int a = 0; a < m; ++a) in[a] = f1(a, k2 + 1);
        fft.fwd(out, in);
        for (int k1 = 0; k1 < W; ++k1) {
            double v = (out[k1 + 1] / static_cast<double>(m)).real() /
                       (std::pow(rtx, k1 + 1) * std::pow(rty, k2 + 1));
            double floor =
                kSampleNoise / (std::pow(rtx, k1 + 1) * std::pow(rty, k2 + 1));
            sol.s3_grid[k1][k2] = std::abs(v) <= floor ? 0.0 : v;
        }
    }
}

}  // namespace detail

/// End-to-end analytic solve.
inline StationarySolution solve_stationary(const Model& model, const SolveConfig& cfg = {}) {
    const TransitionKernel& k = model.kernel;
    ValidationReport rep = validate(k, ValidateMode::Analytic);
    if (!rep.ok()) {
        std::string msg = "analytic validation failed:";
        for (const auto& issue : rep.issues) msg += " [" + issue.code + "] " + issue.message;
        throw ValidationError(msg);
    }
    if (classify(k) != Classification::Ergodic)
        throw NotPositiveRecurrentError("walk is not ergodic; no stationary distribution");

    UnknownLayout layout{k.split.N1, k.split.N2};
    KernelPolynomials kp = kernel_coeffs(k);
    ContourData cd = contour(kp, Contour::M, cfg.contour_points);
    ConformalPair map = theodorsen(cd, cfg.theodorsen_tol, cfg.theodorsen_max_iter);
    auto lambdaA = [&](Complex x) { return abc(k, layout, x, branch_Y0(kp, x)).A; };
    PoleDetection det = detect_poles(lambdaA, cd);
    RHProblem rh = build_rh(k, layout, kp, map, det.poles);
    auto ev = std::make_shared<BoundaryEvaluators>(k, layout, kp, map, rh);

    double min_radius = *std::min_element(cd.rho.begin(), cd.rho.end());
    double r0x = detail::derivative_radius(k, cfg, min_radius);
    double r0y = detail::derivative_radius(k.transposed(), cfg, 1.0);
    r0y = detail::safe_image_radius(kp, cd, r0y);

    AssembledSystem sys;
    sys.layout = layout;
    for (auto& row : balance_rows(k, layout)) sys.rows.push_back(std::move(row));
    for (auto& row : point_rows(k, layout, *ev, r0y, cfg.derivative_samples))
        sys.rows.push_back(std::move(row));
    for (auto& row :
         derivative_rows(k, layout, *ev, r0x, r0y, cfg.derivative_samples))
        sys.rows.push_back(std::move(row));
    sys.rows.push_back(normalization_row(k, layout, *ev, cfg));
    int r_index = 0;
    for (const LinearForm& form : ev->solvability_rows())
        sys.rows.push_back({form, "solvability(" + std::to_string(r_index++) + ")"});

    // stacked real least squares with row equilibration
    const int n = layout.count();
    std::vector<std::pair<Eigen::RowVectorXd, double>> real_rows;
    for (const SystemRow& row : sys.rows) {
        double full_scale = std::abs(row.form.constant());
        for (const auto& [idx, c] : row.form.coeffs()) full_scale += std::abs(c);
        for (int part = 0; part < 2; ++part) {
            Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(n);
            LinearForm f = part == 0 ? row.form.real_part() : row.form.imag_part();
            for (const auto& [idx, c] : f.coeffs()) a(idx) = c.real();
            double b = -f.constant().real();
            double norm = a.norm();
            // drop parts that vanish by conjugate symmetry: equilibrating
            // them would turn cancellation roundoff into loud constraints
            if (norm + std::abs(b) < std::max(1e-9 * full_scale, 1e-10)) continue;
            real_rows.emplace_back(a / norm, b / norm);
        }
    }
    Eigen::MatrixXd A(real_rows.size(), n);
    Eigen::VectorXd b(real_rows.size());
    for (std::size_t i = 0; i < real_rows.size(); ++i) {
        A.row(i) = real_rows[i].first;
        b(i) = real_rows[i].second;
    }
    Eigen::VectorXd x = A.colPivHouseholderQr().solve(b);
    double residual = (A * x - b).cwiseAbs().maxCoeff();

    StationarySolution sol;
    sol.layout = layout;
    sol.kernel = k;
    sol.model_hash = model.hash;
    sol.u.assign(x.data(), x.data() + n);
    sol.residual_max = residual;
    sol.chi = rh.chi;
    sol.poles = rh.poles;
    sol.r0x = r0x;
    sol.r0y = r0y;
    sol.ev = ev;
    sol.system = sys;
    if (residual > cfg.residual_abort)
        throw NumericError("assembled system residual " + std::to_string(residual) +
                           " exceeds the abort threshold");
    for (int n1 = 0; n1 <= layout.N1; ++n1)
        for (int n2 = 0; n2 <= layout.N2; ++n2) {
            double& v = sol.u[layout.pi_index(n1, n2)];
            if (v < 0) {
                if (v < -cfg.negative_mass_abort)
                    throw NumericError("resolved mass pi(" + std::to_string(n1) + "," +
                                       std::to_string(n2) + ") = " + std::to_string(v) +
                                       " is negative beyond tolerance");
                v = 0.0;
                ++sol.negative_clamped;
            }
        }
    detail::resolve_windows(sol, cfg, kp);
    return sol;
}

struct Metrics {
    double mean_q1 = 0, mean_q2 = 0, total = 0;
    double tail_bound = 0;   // error bar from the geometric tail
    double window_mass = 0;  // probability captured by the window
};

inline Metrics metrics(const StationarySolution& sol, int window, double tail_tol) {
    Metrics m;
    const int W = std::min(window, sol.window + std::min(sol.layout.N1, sol.layout.N2));
    std::vector<double> diag(W + 1, 0.0);
    for (int d = 0; d <= W; ++d)
        for (int n1 = 0; n1 <= d; ++n1) {
            double p = sol.pi(n1, d - n1);
            diag[d] += p;
            m.mean_q1 += n1 * p;
            m.mean_q2 += (d - n1) * p;
            m.window_mass += p;
        }
    m.total = m.mean_q1 + m.mean_q2;
    // geometric tail estimate from the last reliable diagonals
    int d = W;
    while (d > 1 && !(diag[d] > 1e-13 && diag[d - 1] > 1e-13)) --d;
    double q = d > 1 ? std::min(diag[d] / diag[d - 1], 0.95) : 0.0;
    double tail_mass = diag[d] * q / (1 - q);
    m.tail_bound = tail_mass * d + diag[d] * q / ((1 - q) * (1 - q));
    if (m.tail_bound > tail_tol)
        throw NumericError("tail bound " + std::to_string(m.tail_bound) +
                           " exceeds the requested tolerance; enlarge the window");
    return m;
}

}  // namespace qpwalk
