////////////////////////////////////////////////////////////////////////////////
// fft.hpp
////////////////////////////////////////////////////////////////////////////////
// Thin FFTW wrapper for the periodic (spectral) grids: real-to-complex
// transforms in 1D/2D with a process-wide plan cache. Planning is serialized
// behind a mutex (the FFTW planner is not thread safe); execution uses the
// new-array interface on fftw_malloc'd buffers so concurrent column solves
// can transform independently.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_FFT_HPP
#define HYDROHOM_FFT_HPP

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "hydrohom/grid.hpp"

namespace hydrohom {
namespace fft {

struct PlanKey {
    int n0, n1;
    bool forward;
    auto operator<=>(const PlanKey&) const = default;
};

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

inline fftw_plan get_plan(int n0, int n1, bool forward) {
    static std::map<PlanKey, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto it = cache.find({n0, n1, forward});
    if (it != cache.end()) return it->second;

    const std::size_t nreal = static_cast<std::size_t>(n0) * n1;
    const std::size_t ncplx = static_cast<std::size_t>(n0) * (n1 / 2 + 1);
    double* rbuf = fftw_alloc_real(nreal);
    fftw_complex* cbuf = fftw_alloc_complex(ncplx);
    fftw_plan p;
    if (n0 == 1) {
        p = forward ? fftw_plan_dft_r2c_1d(n1, rbuf, cbuf, FFTW_ESTIMATE)
                    : fftw_plan_dft_c2r_1d(n1, cbuf, rbuf, FFTW_ESTIMATE);
    } else {
        p = forward ? fftw_plan_dft_r2c_2d(n0, n1, rbuf, cbuf, FFTW_ESTIMATE)
                    : fftw_plan_dft_c2r_2d(n0, n1, cbuf, rbuf, FFTW_ESTIMATE);
    }
    fftw_free(rbuf);
    fftw_free(cbuf);
    cache.emplace(PlanKey{n0, n1, forward}, p);
    return p;
}

template <typename T>
struct Buf {
    T* p = nullptr;
    std::size_t n = 0;
    explicit Buf(std::size_t n_) : n(n_) {
        p = static_cast<T*>(fftw_malloc(sizeof(T) * n_));
    }
    ~Buf() { fftw_free(p); }
    Buf(const Buf&) = delete;
    Buf& operator=(const Buf&) = delete;
};

// Half-complex spectrum of a real field on a periodic grid. Rows follow axis
// 0 (full range, signed wavenumbers); axis 1 is stored halved, 0..n1/2.
struct Spectrum {
    int n0 = 1, n1 = 0; // real-space dims; for 1D grids n0 == 1, n1 == n
    std::vector<std::complex<double>> c;

    int cols() const { return n1 / 2 + 1; }
    std::complex<double>& at(int k0, int k1) { return c[static_cast<std::size_t>(k0) * cols() + k1]; }
    std::complex<double> at(int k0, int k1) const { return c[static_cast<std::size_t>(k0) * cols() + k1]; }
};

// Layout note: FieldArray planes are indexed grid.index(i0, i1) = i0*n[1]+i1,
// which matches FFTW's row-major (n[0], n[1]) convention; 1D grids transform
// along their only axis.
inline Spectrum forward(const Grid& g, std::span<const double> plane) {
    const int n0 = (g.dim == 2) ? g.n[0] : 1;
    const int n1 = (g.dim == 2) ? g.n[1] : g.n[0];
    Spectrum s;
    s.n0 = n0;
    s.n1 = n1;
    s.c.resize(static_cast<std::size_t>(n0) * (n1 / 2 + 1));
    Buf<double> rbuf(plane.size());
    std::copy(plane.begin(), plane.end(), rbuf.p);
    Buf<fftw_complex> cbuf(s.c.size());
    fftw_execute_dft_r2c(get_plan(n0, n1, true), rbuf.p, cbuf.p);
    for (std::size_t i = 0; i < s.c.size(); ++i) s.c[i] = {cbuf.p[i][0], cbuf.p[i][1]};
    return s;
}

// Inverse transform, normalized so inverse(forward(f)) == f.
inline void inverse(const Spectrum& s, std::span<double> out) {
    Buf<fftw_complex> cbuf(s.c.size());
    for (std::size_t i = 0; i < s.c.size(); ++i) {
        cbuf.p[i][0] = s.c[i].real();
        cbuf.p[i][1] = s.c[i].imag();
    }
    Buf<double> rbuf(out.size());
    fftw_execute_dft_c2r(get_plan(s.n0, s.n1, false), cbuf.p, rbuf.p);
    const double scale = 1.0 / (static_cast<double>(s.n0) * s.n1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rbuf.p[i] * scale;
}

// Signed wavenumber 2*pi*k/L for row/column index, with the Nyquist
// derivative multiplier set to zero (the symmetric convention for real
// fields on even grids).
inline double wavenumber(int k, int n, double len) {
    if (n % 2 == 0 && k == n / 2) return 0.0;
    const int s = (k <= n / 2) ? k : k - n;
    return 2.0 * M_PI * s / len;
}

} // namespace fft
} // namespace hydrohom

#endif
