#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>

namespace qpwalk {

using Complex = std::complex<double>;

/// Index map for the unknowns of the analytic solve: the boundary grid
/// pi(n1, n2), n1 <= N1, n2 <= N2, plus one slot for the solve constant.
struct UnknownLayout {
    int N1 = 1, N2 = 1;

    int count() const { return (N1 + 1) * (N2 + 1) + 1; }
    int pi_index(int n1, int n2) const { return n1 * (N2 + 1) + n2; }
    int constant_index() const { return (N1 + 1) * (N2 + 1); }

    std::string hash() const {
        std::string desc = "pi_grid:" + std::to_string(N1 + 1) + "x" + std::to_string(N2 + 1) +
                           ";row_major;K:last";
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : desc) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

/// Expression affine in the unknown vector: constant + sum coeff_k * u_k.
/// Closed under addition and scaling, which is all the pipeline needs to
/// keep boundary probabilities symbolic until the final solve.
class LinearForm {
public:
    LinearForm() = default;
    explicit LinearForm(Complex constant) : constant_(constant) {}

    static LinearForm unknown(int index, Complex coeff = 1.0) {
        LinearForm f;
        f.coeffs_[index] = coeff;
        return f;
    }

    Complex constant() const { return constant_; }
    const std::map<int, Complex>& coeffs() const { return coeffs_; }
    bool is_constant() const { return coeffs_.empty(); }

    Complex eval(std::span<const double> u) const {
        Complex acc = constant_;
        for (const auto& [k, c] : coeffs_) acc += c * u[static_cast<std::size_t>(k)];
        return acc;
    }

    LinearForm& operator+=(const LinearForm& o) {
        constant_ += o.constant_;
        for (const auto& [k, c] : o.coeffs_) coeffs_[k] += c;
        return *this;
    }
    LinearForm& operator-=(const LinearForm& o) {
        constant_ -= o.constant_;
        for (const auto& [k, c] : o.coeffs_) coeffs_[k] -= c;
        return *this;
    }
    LinearForm& operator*=(Complex s) {
        constant_ *= s;
        for (auto& [k, c] : coeffs_) c *= s;
        return *this;
    }
    friend LinearForm operator+(LinearForm a, const LinearForm& b) { return a += b; }
    friend LinearForm operator-(LinearForm a, const LinearForm& b) { return a -= b; }
    friend LinearForm operator*(LinearForm a, Complex s) { return a *= s; }
    friend LinearForm operator*(Complex s, LinearForm a) { return a *= s; }

    /// Coefficient-wise real and imaginary parts: Re/Im of eval at any real
    /// unknown vector equal the eval of these forms.
    LinearForm real_part() const {
        LinearForm f(Complex(constant_.real(), 0));
        for (const auto& [k, c] : coeffs_)
            if (c.real() != 0) f.coeffs_[k] = Complex(c.real(), 0);
        return f;
    }
    LinearForm imag_part() const {
        LinearForm f(Complex(constant_.imag(), 0));
        for (const auto& [k, c] : coeffs_)
            if (c.imag() != 0) f.coeffs_[k] = Complex(c.imag(), 0);
        return f;
    }

private:
    Complex constant_{0.0};
    std::map<int, Complex> coeffs_;
};

}  // namespace qpwalk
