#pragma once

#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace dyadlens {

enum class WaveletKind { sym16, sym8, sym4, haar };

WaveletKind wavelet_by_name(const std::string& name);
const char* wavelet_name(WaveletKind w);

struct DwtResult {
    std::vector<double> approx;
    std::vector<double> detail;
};

// One-level DWT with symmetric (fold) boundary extension. Output length is
// floor((n + filter_len - 1) / 2). A constant input yields a flat detail band
// (every coefficient identical up to rounding).
DwtResult dwt_single(std::span<const double> x, WaveletKind w);

std::span<const double> scaling_filter(WaveletKind w);

}  // namespace dyadlens
