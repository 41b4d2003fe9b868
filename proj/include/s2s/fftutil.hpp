#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

// Thin RAII wrappers over FFTW. Plan creation/destruction is serialized by a
// process-wide mutex (FFTW planning is not thread-safe); execution is.

namespace s2s::fft {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Fft1d {
public:
    Fft1d(int n, int sign) : n_(n) {
        buf_in_ = fftw_alloc_complex(n);
        buf_out_ = fftw_alloc_complex(n);
        std::lock_guard<std::mutex> lk(planner_mutex());
        plan_ = fftw_plan_dft_1d(n, buf_in_, buf_out_, sign, FFTW_ESTIMATE);
        if (!plan_) throw std::runtime_error("fftw plan failed");
    }
    ~Fft1d() {
        std::lock_guard<std::mutex> lk(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_in_);
        fftw_free(buf_out_);
    }
    Fft1d(const Fft1d&) = delete;
    Fft1d& operator=(const Fft1d&) = delete;

    int size() const { return n_; }
    std::complex<double>* in() { return reinterpret_cast<std::complex<double>*>(buf_in_); }
    const std::complex<double>* out() const { return reinterpret_cast<const std::complex<double>*>(buf_out_); }
    void run() { fftw_execute(plan_); }

private:
    int n_;
    fftw_complex* buf_in_;
    fftw_complex* buf_out_;
    fftw_plan plan_;
};

class Fft2d {
public:
    Fft2d(int w, int h, int sign) : w_(w), h_(h) {
        buf_in_ = fftw_alloc_complex(static_cast<std::size_t>(w) * h);
        buf_out_ = fftw_alloc_complex(static_cast<std::size_t>(w) * h);
        std::lock_guard<std::mutex> lk(planner_mutex());
        plan_ = fftw_plan_dft_2d(h, w, buf_in_, buf_out_, sign, FFTW_ESTIMATE);
        if (!plan_) throw std::runtime_error("fftw plan failed");
    }
    ~Fft2d() {
        std::lock_guard<std::mutex> lk(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_in_);
        fftw_free(buf_out_);
    }
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    std::complex<double>* in() { return reinterpret_cast<std::complex<double>*>(buf_in_); }
    const std::complex<double>* out() const { return reinterpret_cast<const std::complex<double>*>(buf_out_); }
    void run() { fftw_execute(plan_); }

private:
    int w_, h_;
    fftw_complex* buf_in_;
    fftw_complex* buf_out_;
    fftw_plan plan_;
};

// Analytic-signal magnitude of one real line: zero the negative frequencies,
// double the positive ones, keep DC and (even n) Nyquist.
inline void hilbert_envelope_line(Fft1d& fwd, Fft1d& inv, const double* x, int n, double* env) {
    auto* in = fwd.in();
    for (int i = 0; i < n; ++i) in[i] = {x[i], 0.0};
    fwd.run();
    auto* spec = inv.in();
    const auto* f = fwd.out();
    const int half = n / 2;
    spec[0] = f[0];
    for (int k = 1; k < half; ++k) spec[k] = 2.0 * f[k];
    if (n % 2 == 0)
        spec[half] = f[half];
    else
        spec[half] = 2.0 * f[half];
    for (int k = half + 1; k < n; ++k) spec[k] = 0.0;
    inv.run();
    const auto* a = inv.out();
    const double scale = 1.0 / n;
    for (int i = 0; i < n; ++i) env[i] = std::abs(a[i]) * scale;
}

// Full (zero-padded) linear convolution via FFT: out is (aw+bw-1) x (ah+bh-1).
inline std::vector<double> conv2_full(const std::vector<double>& a, int aw, int ah,
                                      const std::vector<double>& b, int bw, int bh,
                                      int* ow, int* oh) {
    const int w = aw + bw - 1, h = ah + bh - 1;
    Fft2d fa(w, h, FFTW_FORWARD), fb(w, h, FFTW_FORWARD), fi(w, h, FFTW_BACKWARD);
    auto load = [&](Fft2d& f, const std::vector<double>& src, int sw, int sh) {
        auto* in = f.in();
        std::memset(reinterpret_cast<void*>(in), 0, sizeof(std::complex<double>) * w * h);
        for (int y = 0; y < sh; ++y)
            for (int x = 0; x < sw; ++x) in[static_cast<std::size_t>(y) * w + x] = {src[static_cast<std::size_t>(y) * sw + x], 0.0};
        f.run();
    };
    load(fa, a, aw, ah);
    load(fb, b, bw, bh);
    auto* prod = fi.in();
    const auto* pa = fa.out();
    const auto* pb = fb.out();
    const std::size_t total = static_cast<std::size_t>(w) * h;
    for (std::size_t i = 0; i < total; ++i) prod[i] = pa[i] * pb[i];
    fi.run();
    std::vector<double> out(total);
    const auto* res = fi.out();
    const double scale = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < total; ++i) out[i] = res[i].real() * scale;
    *ow = w;
    *oh = h;
    return out;
}

}
