#pragma once

#include <span>
#include <vector>

#include "session.hpp"
#include "types.hpp"
#include "wavelet.hpp"

namespace dyadlens {

// ---------------------------------------------------------------------------
// Pupil preprocessing
// ---------------------------------------------------------------------------

// Linearly interpolates invalid runs whose flanking valid samples are at most
// max_gap_ms apart; longer runs and unflanked leading/trailing invalids are
// left untouched.
std::vector<PupilSample> clean_pupil(std::span<const PupilSample> in,
                                     int64_t max_gap_ms = 500);

// Uniform resampling of the valid samples in [t0, t1) at rate_hz, linear
// interpolation between valid neighbours. Requires >= min_valid valid
// samples. The grid is truncated to the valid-coverage interval.
std::vector<double> resample_uniform(std::span<const PupilSample> in, double rate_hz,
                                     int64_t t0_ms, int64_t t1_ms, int min_valid = 8);

// ---------------------------------------------------------------------------
// Index of pupillary activity
// ---------------------------------------------------------------------------

struct IpaOptions {
    WaveletKind wavelet = WaveletKind::sym16;
    double window_s = 10.0;  // normalization denominator
    int min_valid = 8;
};

// Counts above-threshold modulus maxima of the one-level wavelet detail band,
// normalized per second. Threshold is the universal threshold
// sigma * sqrt(2 ln n) with sigma estimated from the detail coefficients by
// median absolute deviation / 0.6745.
double ipa_from_signal(std::span<const double> uniform_signal, double window_s,
                       WaveletKind wavelet = WaveletKind::sym16);

// IPA of one pupil window (cleaned samples in [t0, t1), resampled at rate_hz).
double ipa(std::span<const PupilSample> cleaned, double rate_hz, int64_t t0_ms,
           int64_t t1_ms, const IpaOptions& opt = {});

// ---------------------------------------------------------------------------
// Mental-effort series
// ---------------------------------------------------------------------------

struct MeOptions {
    IpaOptions ipa;
    int64_t ipa_window_ms = 10000;
    int64_t step_ms = 1000;
};

// Sliding-window IPA over the whole session [0, duration); value at t covers
// [t, t + ipa_window). Windows with too few valid samples are skipped.
MetricSeries me_series(const DyadSession& s, Participant p, const MeOptions& opt = {});

// ---------------------------------------------------------------------------
// Joint mental effort
// ---------------------------------------------------------------------------

// Cross-recurrence rate at radius 0, delay 1, embedding 1:
// |{(i,j): a_i == b_j}| / n^2.
double crqa_rr(std::span<const int> a, std::span<const int> b);

// Rank-quantile binning into n_bins integers [0, n_bins) using the value's
// rank within the reference distribution. Ties share a bin.
std::vector<int> quantile_bins(std::span<const double> values,
                               std::span<const double> reference, int n_bins);

enum class JmeMethod { crqa, cosine };

struct JmeOptions {
    int64_t window_ms = 10000;
    JmeMethod method = JmeMethod::crqa;
    int n_bins = 21;
    MeOptions me;
};

// JME per non-overlapping window over [span_start, span_end). Windows missing
// the full complement of ME samples on either side are skipped. Bin edges are
// fit per participant on the full-session ME distribution.
MetricSeries jme_series_span(const DyadSession& s, const JmeOptions& opt,
                             int64_t span_start_ms, int64_t span_end_ms);
MetricSeries jme_series(const DyadSession& s, const JmeOptions& opt = {});

// Cosine of two non-negative vectors, 0 if either is all-zero.
double cosine_vec(std::span<const double> a, std::span<const double> b);

}  // namespace dyadlens
