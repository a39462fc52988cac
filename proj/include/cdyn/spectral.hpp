#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cdyn/field.hpp"

namespace cdyn {

using cplx = std::complex<double>;

/// Fourier coefficients of a Field in standard FFT order: index i along an
/// axis holds wavenumber i for i < H/2 and i - H otherwise.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(std::size_t size) : size_(size), coeffs_(size * size) {}

    std::size_t size() const noexcept { return size_; }

    cplx operator()(std::size_t row, std::size_t col) const { return coeffs_[row * size_ + col]; }
    cplx& operator()(std::size_t row, std::size_t col) { return coeffs_[row * size_ + col]; }

    std::span<const cplx> coeffs() const noexcept { return coeffs_; }
    std::span<cplx> coeffs() noexcept { return coeffs_; }

private:
    std::size_t size_ = 0;
    std::vector<cplx> coeffs_;
};

/// Signed wavenumber of FFT index i on an axis of length n.
constexpr long wavenumber(std::size_t i, std::size_t n) noexcept {
    return i < n / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

/// FFT index of the mode -k along an axis of length n.
constexpr std::size_t mirror_index(std::size_t i, std::size_t n) noexcept { return (n - i) % n; }

/// In-place radix-2 complex DFT along one axis; `inverse` flips the exponent sign
/// without applying any 1/n factor.
void fft1d(std::span<cplx> data, bool inverse);

/// Unnormalized forward transform: F[k] = sum_x f[x] exp(-2 pi i k.x / H).
SpectralField fft2(const Field& f);

/// Inverse of fft2 (applies 1/H^2) returning the complex result.
std::vector<cplx> ifft2_complex(const SpectralField& s);

/// Inverse of fft2, keeping the real part. The imaginary residue of a
/// conjugate-symmetric spectrum is rounding noise.
Field ifft2(const SpectralField& s);

/// Largest imaginary magnitude produced by the inverse transform.
double max_imag_residue(const SpectralField& s);

}  // namespace cdyn
