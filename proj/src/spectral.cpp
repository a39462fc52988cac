#include "cdyn/spectral.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "cdyn/error.hpp"

namespace cdyn {

namespace {

struct Plan {
    std::size_t n = 0;
    std::vector<std::size_t> bitrev;
    // Stage twiddles laid out contiguously: stage of length len occupies
    // [len/2 - 1, len - 1) holding exp(-+2 pi i k / len), k < len/2.
    std::vector<cplx> forward;
    std::vector<cplx> backward;
};

const Plan& plan_for(std::size_t n) {
    thread_local std::map<std::size_t, Plan> cache;
    thread_local const Plan* last = nullptr;
    if (last && last->n == n) return *last;
    auto it = cache.find(n);
    if (it == cache.end()) {
        Plan p;
        p.n = n;
        p.bitrev.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            p.bitrev[i] = r;
        }
        p.forward.resize(n > 1 ? n - 1 : 0);
        p.backward.resize(p.forward.size());
        for (std::size_t len = 2; len <= n; len <<= 1) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                // Same angle the full-length table would give at index k * n / len.
                const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * (n / len)) /
                                     static_cast<double>(n);
                p.forward[len / 2 - 1 + k] = {std::cos(angle), std::sin(angle)};
                p.backward[len / 2 - 1 + k] = std::conj(p.forward[len / 2 - 1 + k]);
            }
        }
        it = cache.emplace(n, std::move(p)).first;
    }
    last = &it->second;
    return *last;
}

void transform_2d(std::span<cplx> data, std::size_t n, bool inverse) {
    std::vector<cplx> column(n);
    for (std::size_t r = 0; r < n; ++r) fft1d(data.subspan(r * n, n), inverse);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) column[r] = data[r * n + c];
        fft1d(column, inverse);
        for (std::size_t r = 0; r < n; ++r) data[r * n + c] = column[r];
    }
}

}  // namespace

void fft1d(std::span<cplx> data, bool inverse) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n)) fail(ErrorKind::Invalid, "fft length must be a power of two, got " + std::to_string(n));
    if (n == 1) return;
    const Plan& p = plan_for(n);
    for (std::size_t i = 0; i < n; ++i)
        if (i < p.bitrev[i]) std::swap(data[i], data[p.bitrev[i]]);

    // Plain real arithmetic; identical results to std::complex products.
    double* d = reinterpret_cast<double*>(data.data());
    const cplx* table = inverse ? p.backward.data() : p.forward.data();
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const cplx* tw = table + half - 1;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const double wr = tw[k].real(), wi = tw[k].imag();
                double* a = d + 2 * (start + k);
                double* b = d + 2 * (start + k + half);
                const double br = b[0] * wr - b[1] * wi;
                const double bi = b[0] * wi + b[1] * wr;
                b[0] = a[0] - br;
                b[1] = a[1] - bi;
                a[0] += br;
                a[1] += bi;
            }
        }
    }
}

SpectralField fft2(const Field& f) {
    const std::size_t n = f.size();
    require(is_power_of_two(n), "fft2 requires a power-of-two grid");
    SpectralField s(n);
    auto out = s.coeffs();
    const auto in = f.values();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i];
    transform_2d(out, n, false);
    return s;
}

std::vector<cplx> ifft2_complex(const SpectralField& s) {
    const std::size_t n = s.size();
    require(is_power_of_two(n), "ifft2 requires a power-of-two grid");
    std::vector<cplx> data(s.coeffs().begin(), s.coeffs().end());
    transform_2d(data, n, true);
    const double scale = 1.0 / static_cast<double>(n * n);
    for (auto& v : data) v *= scale;
    return data;
}

Field ifft2(const SpectralField& s) {
    const auto data = ifft2_complex(s);
    std::vector<double> values(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) values[i] = data[i].real();
    return Field(s.size(), std::move(values));
}

double max_imag_residue(const SpectralField& s) {
    double worst = 0.0;
    for (const auto& v : ifft2_complex(s)) worst = std::max(worst, std::abs(v.imag()));
    return worst;
}

}  // namespace cdyn
