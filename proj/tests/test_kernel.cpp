#include <catch2/catch_amalgamated.hpp>

#include "qpwalk/kernel.hpp"
#include "qpwalk/model_io.hpp"
#include "qpwalk/rng.hpp"

using namespace qpwalk;

namespace {

KernelPolynomials symmetric_tail(double lambda = 0.2, double a = 0.6) {
    return kernel_coeffs(make_symmetric_aloha(lambda, a, 2, 2).kernel);
}

// A tail law with south-west jumps and negative drifts, for the general case.
KernelPolynomials southwest_tail() {
    JumpDistribution d;
    d.at(-1, -1) = 0.20;
    d.at(-1, 0) = 0.15;
    d.at(0, -1) = 0.15;
    d.at(0, 0) = 0.20;
    d.at(1, 0) = 0.08;
    d.at(0, 1) = 0.08;
    d.at(1, 1) = 0.04;
    d.at(-1, 1) = 0.05;
    d.at(1, -1) = 0.05;
    return {d};
}

Complex random_point(SplitMix64& rng, double scale = 1.5) {
    return {scale * (2 * rng.next_double() - 1), scale * (2 * rng.next_double() - 1)};
}

}  // namespace

TEST_CASE("both quadratic readings of the kernel agree") {
    SplitMix64 rng(101);
    for (const KernelPolynomials& kp : {symmetric_tail(), southwest_tail()}) {
        for (int t = 0; t < 100; ++t) {
            Complex x = random_point(rng), y = random_point(rng);
            Complex via_y = kp.hat_a(x) * y * y + kp.hat_b(x) * y + kp.hat_c(x);
            Complex via_x = kp.a(y) * x * x + kp.b(y) * x + kp.c(y);
            Complex direct = kp.R(x, y);
            CHECK(std::abs(via_y - direct) < 1e-12);
            CHECK(std::abs(via_x - direct) < 1e-12);
        }
        CHECK(std::abs(kp.R(1, 1)) < 1e-12);
    }
    CHECK(std::abs(symmetric_tail().R(0, 0)) < 1e-15);  // no south-west jumps
    CHECK(std::abs(southwest_tail().R(0, 0) + 0.20) < 1e-15);
}

TEST_CASE("network tail kernel matches its product closed form") {
    const double lam = 0.2, a = 0.6;
    KernelPolynomials kp = symmetric_tail(lam, a);
    SplitMix64 rng(55);
    for (int t = 0; t < 20; ++t) {
        Complex x = random_point(rng), y = random_point(rng);
        Complex D = (1 - lam + lam * x) * (1 - lam + lam * y);
        Complex closed =
            x * y - D * (x * y + a * (1 - a) * y * (1.0 - x) + (1 - a) * a * x * (1.0 - y));
        CHECK(std::abs(kp.R(x, y) - closed) < 1e-12);
    }
}

TEST_CASE("branch points split across the unit circle") {
    for (Axis axis : {Axis::X, Axis::Y}) {
        for (const KernelPolynomials& kp : {symmetric_tail(), southwest_tail()}) {
            BranchPointSet bp = branch_points(kp, axis);
            CHECK(std::abs(bp.D(bp.b1)) < 1e-10);
            CHECK(std::abs(bp.D(bp.b2)) < 1e-10);
            CHECK(std::abs(bp.D(bp.b3)) < 1e-10);
            if (!bp.b4_infinite) CHECK(std::abs(bp.D(bp.b4)) < 1e-10);
            CHECK(std::abs(bp.b1) < 1.0);
            CHECK(std::abs(bp.b2) < 1.0);
            CHECK(std::abs(bp.b3) > 1.0);
            if (!bp.b4_infinite) CHECK(std::abs(bp.b4) > 1.0);
            CHECK(bp.b1 <= bp.b2);
            CHECK(bp.b2 < std::abs(bp.b3));  // outer pair may sit across infinity
            // strictly negative discriminant inside the inner slit
            for (int i = 1; i <= 20; ++i) {
                double t = bp.b1 + (bp.b2 - bp.b1) * i / 21.0;
                CHECK(bp.D(t) < 0);
            }
        }
    }
}

TEST_CASE("small branch properties") {
    KernelPolynomials kp = symmetric_tail();
    REQUIRE(kp.gamma() < 0);
    CHECK(std::abs(branch_X0(kp, 1.0) - 1.0) < 1e-10);
    SECTION("X0 maps the unit circle strictly inside away from 1") {
        for (int j = 1; j < 64; ++j) {
            Complex y = std::polar(1.0, kTwoPi * j / 64);
            Complex x0 = branch_X0(kp, y);
            CHECK(std::abs(x0) < 1.0);
            CHECK(std::abs(kp.R(x0, y)) < 1e-12);
        }
    }
    SECTION("Y0 after X0 returns the slit parameter") {
        BranchPointSet bpy = branch_points(kp, Axis::Y);
        for (int i = 1; i <= 9; ++i) {
            double y = bpy.b1 + (bpy.b2 - bpy.b1) * i / 10.0;
            Complex x = branch_X0(kp, y);
            CHECK(std::abs(branch_Y0(kp, x) - y) < 1e-10);
        }
    }
    SECTION("roots solve the quadratic everywhere off the slits") {
        SplitMix64 rng(9);
        for (int t = 0; t < 50; ++t) {
            Complex x = random_point(rng, 0.9);
            auto [y0, y1] = branch_Y(kp, x);
            CHECK(std::abs(kp.R(x, y0)) < 1e-11);
            CHECK(std::abs(kp.R(x, y1)) < 1e-11);
            CHECK(std::abs(y0) <= std::abs(y1) + 1e-12);
        }
    }
}

TEST_CASE("contour M satisfies its certificates") {
    KernelPolynomials kp = symmetric_tail();
    ContourData cd = contour(kp, Contour::M, 256);
    BranchPointSet bpy = branch_points(kp, Axis::Y);
    double beta0 = std::sqrt((kp.c(bpy.b2) / kp.a(bpy.b2)).real());
    double beta1 = -std::sqrt((kp.c(bpy.b1) / kp.a(bpy.b1)).real());
    CHECK(cd.extreme_right == Catch::Approx(beta0).margin(1e-10));
    CHECK(cd.extreme_left == Catch::Approx(beta1).margin(1e-10));
    const int n = static_cast<int>(cd.points.size());
    for (int j = 1; j < n; ++j) CHECK(cd.rho[j] == Catch::Approx(cd.rho[n - j]).margin(0.0));
    for (int j = 0; j < n; ++j) {
        double m = cd.relation(cd.points[j].real());
        CHECK(std::abs(std::norm(cd.points[j]) - m) < 1e-8);
        CHECK(cd.rho[j] > 0);
    }
    CHECK(winding_number(cd.points) == 1);
    SECTION("contour points are kernel zeros paired with the slit") {
        for (int j = 0; j < n; j += 16) {
            Complex y = branch_Y0(kp, cd.points[j]);
            CHECK(std::abs(y.imag()) < 1e-9);
            CHECK(y.real() >= bpy.b1 - 1e-9);
            CHECK(y.real() <= bpy.b2 + 1e-9);
            CHECK(std::abs(kp.R(cd.points[j], y)) < 1e-10);
        }
    }
}

TEST_CASE("modulus relation is monotone and invertible on the inner slit") {
    KernelPolynomials kp = symmetric_tail();
    BranchPointSet bpx = branch_points(kp, Axis::X);
    auto k_of_x = [&](double x) { return (kp.hat_c(x) / kp.hat_a(x)).real(); };
    double prev = k_of_x(1e-6);
    for (int i = 1; i <= 40; ++i) {
        double x = 1e-6 + (bpx.b2 - 1e-6) * i / 40.0;
        double cur = k_of_x(x);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
    }
    for (int i = 1; i <= 9; ++i) {
        double x = bpx.b1 + (bpx.b2 - bpx.b1) * i / 10.0;
        double k2 = k_of_x(x);
        CHECK(slit_parameter_from_modulus(kp, k2, bpx.b1, bpx.b2) ==
              Catch::Approx(x).margin(1e-9));
    }
}

TEST_CASE("contour L mirrors M through the transposed walk") {
    KernelPolynomials kp = kernel_coeffs(make_stability_aloha(0.2, 0.05, 0.05).kernel);
    ContourData l = contour(kp, Contour::L, 128);
    ContourData m_of_t = contour(kp.transposed(), Contour::M, 128);
    for (std::size_t j = 0; j < l.points.size(); ++j)
        CHECK(std::abs(l.points[j] - m_of_t.points[j]) < 1e-12);
    BranchPointSet bpx = branch_points(kp, Axis::X);
    CHECK(l.extreme_right ==
          Catch::Approx(std::sqrt((kp.hat_c(bpx.b2) / kp.hat_a(bpx.b2)).real())).margin(1e-10));
}

TEST_CASE("general zeros: count, symmetry, and the traced curves") {
    KernelPolynomials kp = southwest_tail();
    GeneralZeroTrace tr = general_zeros(kp, 128);
    CHECK(std::abs(tr.g[0] - 1.0) < 1e-10);  // g(1) = 1
    for (int j = 0; j < 128; ++j) {
        Complex s = tr.s[j], g = tr.g[j];
        CHECK(std::abs(g) <= 1.0 + 1e-9);
        CHECK(std::abs(g * g - kp.psi(g * s, g / s)) < 1e-10);
        // if g(s) is a zero, so is -g(-s)
        Complex ms = -s, mg = -g;
        CHECK(std::abs(mg * mg - kp.psi(mg * ms, mg / ms)) < 1e-10);
    }
    CHECK(std::abs(winding_number(tr.s1)) == 1);  // 0 lies strictly inside S1
    CHECK(std::abs(winding_number(tr.s2)) == 1);
    SECTION("rejects a no-south-west tail") {
        CHECK_THROWS_AS(general_zeros(symmetric_tail(), 16), ValidationError);
    }
}
