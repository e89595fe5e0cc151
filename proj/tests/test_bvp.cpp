#include <catch2/catch_amalgamated.hpp>

#include "qpwalk/bvp.hpp"
#include "qpwalk/model_io.hpp"
#include "qpwalk/rng.hpp"

using namespace qpwalk;

namespace {

ContourData circle_contour(double r, int n) {
    ContourData cd;
    cd.which = Contour::M;
    cd.phi = uniform_angles(n);
    cd.rho.assign(n, r);
    cd.points.resize(n);
    for (int j = 0; j < n; ++j) cd.points[j] = std::polar(r, cd.phi[j]);
    cd.extreme_right = r;
    cd.extreme_left = -r;
    cd.relation = [r](double) { return r * r; };
    cd.radius_exact = [r](double) { return r; };
    return cd;
}

struct BvpFixture {
    Model model = make_symmetric_aloha(0.2, 0.6, 2, 2);
    UnknownLayout layout{2, 2};
    KernelPolynomials kp = kernel_coeffs(model.kernel);
    ContourData cd = contour(kp, Contour::M, 512);
    ConformalPair map = theodorsen(cd, 1e-10, 400);
};

}  // namespace

TEST_CASE("circle maps by pure scaling") {
    ConformalPair map = theodorsen(circle_contour(0.7, 128), 1e-12);
    SplitMix64 rng(3);
    for (int t = 0; t < 30; ++t) {
        Complex z = std::polar(rng.next_double() * 0.95, kTwoPi * rng.next_double());
        CHECK(std::abs(map.forward(z) - 0.7 * z) < 1e-12);
    }
    for (int j = 0; j < map.n; ++j) CHECK(map.psi[j] == Catch::Approx(map.phi[j]).margin(1e-12));
}

TEST_CASE("conformal map of the egg-shaped contour") {
    BvpFixture fx;
    const ConformalPair& map = fx.map;
    SECTION("normalization and conjugate symmetry") {
        CHECK(std::abs(map.forward(0.0)) == 0.0);
        SplitMix64 rng(4);
        for (int t = 0; t < 20; ++t) {
            Complex z = std::polar(0.9 * rng.next_double(), kTwoPi * rng.next_double());
            CHECK(std::abs(map.forward(std::conj(z)) - std::conj(map.forward(z))) < 1e-10);
        }
    }
    SECTION("boundary points land on the contour") {
        for (int j = 0; j < map.n; j += 7) {
            Complex x = map.boundary[j];
            CHECK(std::abs(std::norm(x) - fx.cd.relation(x.real())) < 1e-6);
        }
    }
    SECTION("residual decreases monotonically after the opening sweeps") {
        for (std::size_t i = 5; i + 1 < map.residual_history.size(); ++i)
            CHECK(map.residual_history[i + 1] <= map.residual_history[i] * (1 + 1e-9));
    }
    SECTION("grid refinement stability") {
        ConformalPair fine = theodorsen(contour(fx.kp, Contour::M, 1024), 1e-10, 400);
        SplitMix64 rng(5);
        for (int t = 0; t < 50; ++t) {
            Complex z = std::polar(0.8 * rng.next_double(), kTwoPi * rng.next_double());
            CHECK(std::abs(map.forward(z) - fine.forward(z)) < 1e-7);
        }
    }
    SECTION("inverse composes to the identity") {
        SplitMix64 rng(6);
        int done = 0;
        for (int t = 0; t < 50; ++t) {
            Complex z = std::polar(0.9 * rng.next_double(), kTwoPi * rng.next_double());
            Complex x = map.forward(z);
            CHECK(std::abs(map.inverse(x) - z) < 1e-8);
            ++done;
        }
        CHECK(done == 50);
    }
}

TEST_CASE("pole detection by the argument principle") {
    BvpFixture fx;
    SECTION("a function without zeros gives an empty list") {
        PoleDetection det = detect_poles([](Complex x) { return x - 5.0; }, fx.cd);
        CHECK(det.boundary_winding == 0);
        CHECK(det.poles.empty());
        CHECK_FALSE(det.lune_empty);
    }
    SECTION("a planted zero inside the lune is found") {
        Complex xi(1.05, 0.02);
        PoleDetection det = detect_poles([xi](Complex x) { return x - xi; }, fx.cd);
        CHECK(det.boundary_winding == 1);
        REQUIRE(det.poles.size() == 1);
        CHECK(std::abs(det.poles[0] - xi) < 1e-7);
    }
    SECTION("multiplicities add up for a double zero") {
        Complex xi(1.04, 0.0);
        PoleDetection det =
            detect_poles([xi](Complex x) { return (x - xi) * (x - xi); }, fx.cd);
        CHECK(det.boundary_winding == 2);
    }
}

TEST_CASE("boundary problem of the light symmetric network") {
    BvpFixture fx;
    auto lambdaA = [&](Complex x) {
        return abc(fx.model.kernel, fx.layout, x, branch_Y0(fx.kp, x)).A;
    };
    PoleDetection det = detect_poles(lambdaA, fx.cd);
    RHProblem rh = build_rh(fx.model.kernel, fx.layout, fx.kp, fx.map, det.poles);
    INFO("index " << rh.chi << ", poles " << det.poles.size());
    CHECK(rh.chi <= 0);
    SECTION("index of this model, frozen from the first run") {
        CHECK(rh.chi == -2);
        CHECK(det.poles.empty());
    }
    SECTION("index is stable under grid refinement") {
        ConformalPair map768 = theodorsen(contour(fx.kp, Contour::M, 768), 1e-10, 400);
        RHProblem rh768 = build_rh(fx.model.kernel, fx.layout, fx.kp, map768, det.poles);
        CHECK(rh768.chi == rh.chi);
    }
    SECTION("conjugate symmetry of the coefficient samples") {
        for (int j = 1; j < rh.n / 2; j += 5)
            CHECK(std::abs(rh.U[rh.n - j] - std::conj(rh.U[j])) < 1e-8);
    }
    SECTION("affine right side vanishes with the unknowns") {
        std::vector<double> zeros(fx.layout.count(), 0.0);
        for (int j = 0; j < rh.n; j += 17) CHECK(std::abs(rh.w[j].eval(zeros)) == 0.0);
    }

    BoundaryEvaluators ev = rh_solve(fx.model.kernel, fx.layout, fx.kp, fx.map, rh);
    SECTION("boundary condition holds for any unknown vector") {
        SplitMix64 rng(8);
        std::vector<double> u(fx.layout.count());
        for (double& v : u) v = rng.next_double();
        double worst = 0;
        for (int j = 0; j < rh.n; ++j) {
            Complex f = ev.disc_function_boundary(j).eval(u);
            double resid = std::abs((Complex(0, 1) * rh.U[j] * f).real() - rh.w[j].eval(u));
            worst = std::max(worst, resid);
        }
        CHECK(worst < 1e-8);
    }
    SECTION("homogeneous part has the pure rotation structure") {
        // away from the origin (the series region excludes the constrained
        // constant), the constant slot contributes i e^{i sigma0} z^chi
        std::vector<double> u(fx.layout.count(), 0.0);
        u[fx.layout.constant_index()] = 1.0;
        SplitMix64 rng(9);
        for (int t = 0; t < 10; ++t) {
            Complex z = std::polar(0.3 + 0.5 * rng.next_double(), kTwoPi * rng.next_double());
            Complex expect = Complex(0, 1) * std::exp(Complex(0, 1) * ev.sigma0(z)) *
                             std::pow(z, rh.chi);
            CHECK(std::abs(ev.disc_function(z).eval(u) - expect) < 1e-12);
        }
    }
    SECTION("g0 is real on the real segment for real unknowns") {
        SplitMix64 rng(10);
        std::vector<double> u(fx.layout.count());
        for (double& v : u) v = rng.next_double();
        for (double x : {0.0, 0.2, 0.45, 0.7, 0.9}) {
            Complex val = ev.g0(Complex(x, 0)).eval(u);
            CHECK(std::abs(val.imag()) < 1e-8 * (1 + std::abs(val)));
        }
    }
    SECTION("h0 keeps the affine structure") {
        LinearForm h = ev.h0(Complex(0.3, 0.1));
        std::vector<double> u1(fx.layout.count(), 0.0), u2(fx.layout.count(), 0.0);
        u1[0] = 1.0;
        u2[0] = 2.0;
        Complex v0 = h.eval(std::vector<double>(fx.layout.count(), 0.0));
        CHECK(std::abs(h.eval(u2) - v0 - 2.0 * (h.eval(u1) - v0)) < 1e-12);
    }
}
