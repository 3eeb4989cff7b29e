#include "wavelet.hpp"

#include <cmath>

namespace dyadlens {

namespace {

#include "wavelet_tables.inc"

inline constexpr double kHaar[2] = {0.70710678118654752440, 0.70710678118654752440};

// symmetric (half-sample fold) extension, valid for any offset
inline double sym_at(std::span<const double> x, int64_t p) {
    const int64_t n = static_cast<int64_t>(x.size());
    int64_t m = p % (2 * n);
    if (m < 0) m += 2 * n;
    if (m >= n) m = 2 * n - 1 - m;
    return x[static_cast<size_t>(m)];
}

}  // namespace

std::span<const double> scaling_filter(WaveletKind w) {
    switch (w) {
        case WaveletKind::sym16: return {kSym16, 32};
        case WaveletKind::sym8: return {kSym8, 16};
        case WaveletKind::sym4: return {kSym4, 8};
        case WaveletKind::haar: return {kHaar, 2};
    }
    fail(Err::internal, "bad wavelet kind");
}

WaveletKind wavelet_by_name(const std::string& name) {
    if (name == "sym16") return WaveletKind::sym16;
    if (name == "sym8") return WaveletKind::sym8;
    if (name == "sym4") return WaveletKind::sym4;
    if (name == "haar") return WaveletKind::haar;
    fail(Err::bad_arg, "unknown wavelet: " + name);
}

const char* wavelet_name(WaveletKind w) {
    switch (w) {
        case WaveletKind::sym16: return "sym16";
        case WaveletKind::sym8: return "sym8";
        case WaveletKind::sym4: return "sym4";
        case WaveletKind::haar: return "haar";
    }
    return "?";
}

DwtResult dwt_single(std::span<const double> x, WaveletKind w) {
    if (x.empty()) fail(Err::empty, "dwt of empty signal");
    const auto h = scaling_filter(w);
    const int64_t len = static_cast<int64_t>(h.size());
    const int64_t n = static_cast<int64_t>(x.size());
    const int64_t out_len = (n + len - 1) / 2;

    // analysis filters: low = reversed scaling filter, high = its QMF
    std::vector<double> lo(h.size()), hi(h.size());
    for (int64_t k = 0; k < len; ++k) {
        lo[static_cast<size_t>(k)] = h[static_cast<size_t>(len - 1 - k)];
        hi[static_cast<size_t>(k)] =
            ((k & 1) ? -1.0 : 1.0) * h[static_cast<size_t>(len - 1 - k)];
    }

    DwtResult r;
    r.approx.resize(static_cast<size_t>(out_len));
    r.detail.resize(static_cast<size_t>(out_len));
    for (int64_t i = 0; i < out_len; ++i) {
        const int64_t base = 1 + 2 * i - (len - 1);
        double a = 0.0, d = 0.0;
        for (int64_t k = 0; k < len; ++k) {
            const double v = sym_at(x, base + k);
            a += v * lo[static_cast<size_t>(k)];
            d += v * hi[static_cast<size_t>(k)];
        }
        r.approx[static_cast<size_t>(i)] = a;
        r.detail[static_cast<size_t>(i)] = d;
    }
    return r;
}

}  // namespace dyadlens
