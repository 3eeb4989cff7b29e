#include "effort.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace dyadlens {

std::vector<PupilSample> clean_pupil(std::span<const PupilSample> in, int64_t max_gap_ms) {
    std::vector<PupilSample> out(in.begin(), in.end());
    const size_t n = out.size();
    size_t i = 0;
    while (i < n) {
        if (out[i].valid) {
            ++i;
            continue;
        }
        const size_t run_start = i;
        while (i < n && !out[i].valid) ++i;
        const size_t run_end = i;  // one past the run
        if (run_start == 0 || run_end == n) continue;  // unflanked
        const PupilSample& left = out[run_start - 1];
        const PupilSample& right = out[run_end];
        const int64_t gap = right.t_ms - left.t_ms;
        if (gap > max_gap_ms || gap <= 0) continue;
        for (size_t k = run_start; k < run_end; ++k) {
            const double f = static_cast<double>(out[k].t_ms - left.t_ms) /
                             static_cast<double>(gap);
            out[k].d_mm = left.d_mm + f * (right.d_mm - left.d_mm);
            out[k].valid = true;
        }
    }
    return out;
}

std::vector<double> resample_uniform(std::span<const PupilSample> in, double rate_hz,
                                     int64_t t0_ms, int64_t t1_ms, int min_valid) {
    if (rate_hz <= 0.0) fail(Err::bad_arg, "rate_hz must be positive");
    std::vector<const PupilSample*> valid;
    valid.reserve(in.size());
    for (const PupilSample& s : in) {
        if (s.valid && s.t_ms >= t0_ms && s.t_ms < t1_ms) valid.push_back(&s);
    }
    if (static_cast<int>(valid.size()) < min_valid)
        fail(Err::too_few_samples,
             "window has " + std::to_string(valid.size()) + " valid samples, need " +
                 std::to_string(min_valid));

    const double t_first = static_cast<double>(valid.front()->t_ms);
    const double t_last = static_cast<double>(valid.back()->t_ms);
    const double step_ms = 1000.0 / rate_hz;
    const int64_t n_grid =
        static_cast<int64_t>(std::floor((t_last - t_first) / step_ms)) + 1;

    std::vector<double> out;
    out.reserve(static_cast<size_t>(n_grid));
    size_t j = 0;
    for (int64_t i = 0; i < n_grid; ++i) {
        const double t = t_first + static_cast<double>(i) * step_ms;
        while (j + 1 < valid.size() && static_cast<double>(valid[j + 1]->t_ms) <= t) ++j;
        if (j + 1 >= valid.size()) {
            out.push_back(valid[j]->d_mm);
            continue;
        }
        const double ta = static_cast<double>(valid[j]->t_ms);
        const double tb = static_cast<double>(valid[j + 1]->t_ms);
        const double f = tb > ta ? (t - ta) / (tb - ta) : 0.0;
        out.push_back(valid[j]->d_mm + f * (valid[j + 1]->d_mm - valid[j]->d_mm));
    }
    return out;
}

namespace {

double median_of(std::vector<double> v) {
    const size_t n = v.size();
    if (n == 0) return 0.0;
    std::sort(v.begin(), v.end());
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double ipa_from_signal(std::span<const double> x, double window_s, WaveletKind wavelet) {
    if (window_s <= 0.0) fail(Err::bad_arg, "window_s must be positive");
    if (x.size() < 2) return 0.0;
    const DwtResult dwt = dwt_single(x, wavelet);
    const std::vector<double>& d = dwt.detail;
    const size_t n = d.size();
    if (n < 3) return 0.0;

    // modulus maxima: |d_i| >= both neighbours, strictly above at least one
    std::vector<double> maxima;
    std::vector<double> absd(n);
    for (size_t i = 0; i < n; ++i) absd[i] = std::fabs(d[i]);
    for (size_t i = 0; i < n; ++i) {
        const double ll = i > 0 ? absd[i - 1] : absd[i];
        const double rr = i + 1 < n ? absd[i + 1] : absd[i];
        const double v = absd[i];
        if (ll <= v && v >= rr && (ll < v || v > rr)) maxima.push_back(v);
    }
    if (maxima.empty()) return 0.0;

    // universal threshold, sigma from MAD of the detail band
    std::vector<double> dev(n);
    const double med = median_of(std::vector<double>(d.begin(), d.end()));
    for (size_t i = 0; i < n; ++i) dev[i] = std::fabs(d[i] - med);
    const double sigma = median_of(std::move(dev)) / 0.6745;
    const double lambda = sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));

    size_t count = 0;
    for (double m : maxima)
        if (m > lambda) ++count;
    return static_cast<double>(count) / window_s;
}

double ipa(std::span<const PupilSample> cleaned, double rate_hz, int64_t t0_ms,
           int64_t t1_ms, const IpaOptions& opt) {
    const std::vector<double> sig =
        resample_uniform(cleaned, rate_hz, t0_ms, t1_ms, opt.min_valid);
    const double window_s = opt.window_s > 0.0
                                ? opt.window_s
                                : static_cast<double>(t1_ms - t0_ms) / 1000.0;
    return ipa_from_signal(sig, window_s, opt.wavelet);
}

MetricSeries me_series(const DyadSession& s, Participant p, const MeOptions& opt) {
    if (opt.step_ms <= 0 || opt.ipa_window_ms <= 0)
        fail(Err::bad_arg, "me window and step must be positive");
    const std::vector<PupilSample> cleaned = clean_pupil(
        {s.streams(p).pupil.data(), s.streams(p).pupil.size()});
    MetricSeries out;
    out.name = p == Participant::a ? "ME_A" : "ME_B";
    out.window_ms = opt.ipa_window_ms;

    IpaOptions iopt = opt.ipa;
    iopt.window_s = static_cast<double>(opt.ipa_window_ms) / 1000.0;

    const int64_t last_start = s.meta.duration_ms - opt.ipa_window_ms;
    for (int64_t t = 0; t <= last_start; t += opt.step_ms) {
        const auto window = slice_range(cleaned, t, t + opt.ipa_window_ms);
        double v = 0.0;
        try {
            v = ipa(window, s.meta.pupil_rate_hz, t, t + opt.ipa_window_ms, iopt);
        } catch (const DlError& e) {
            if (e.code() == Err::too_few_samples) continue;  // window skipped
            throw;
        }
        out.start_ms.push_back(t);
        out.value.push_back(v);
    }
    return out;
}

double crqa_rr(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size())
        fail(Err::length_mismatch, "crqa windows differ in length");
    if (a.empty()) fail(Err::empty, "crqa of empty windows");
    std::unordered_map<int, int64_t> count_a;
    for (int v : a) ++count_a[v];
    std::unordered_map<int, int64_t> count_b;
    for (int v : b) ++count_b[v];
    int64_t matches = 0;
    for (const auto& [v, ca] : count_a) {
        auto it = count_b.find(v);
        if (it != count_b.end()) matches += ca * it->second;
    }
    const double n = static_cast<double>(a.size());
    return static_cast<double>(matches) / (n * n);
}

std::vector<int> quantile_bins(std::span<const double> values,
                               std::span<const double> reference, int n_bins) {
    if (n_bins < 2) fail(Err::bad_arg, "n_bins must be >= 2");
    if (reference.empty()) fail(Err::empty, "empty reference distribution");
    std::vector<double> sorted(reference.begin(), reference.end());
    std::sort(sorted.begin(), sorted.end());
    const int64_t n = static_cast<int64_t>(sorted.size());
    std::vector<int> bins;
    bins.reserve(values.size());
    for (double v : values) {
        const int64_t rank =
            std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        int b = static_cast<int>((rank * n_bins) / n);
        b = std::min(b, n_bins - 1);
        bins.push_back(b);
    }
    return bins;
}

double cosine_vec(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(Err::length_mismatch, "cosine of unequal vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    double r = (dot * dot) / (na * nb);
    r = std::clamp(r, 0.0, 1.0);
    return std::sqrt(r);
}

MetricSeries jme_series_span(const DyadSession& s, const JmeOptions& opt,
                             int64_t span_start_ms, int64_t span_end_ms) {
    if (opt.window_ms % opt.me.step_ms != 0)
        fail(Err::bad_arg, "jme window must be a multiple of the me step");
    const MetricSeries me_a = me_series(s, Participant::a, opt.me);
    const MetricSeries me_b = me_series(s, Participant::b, opt.me);
    const size_t k = static_cast<size_t>(opt.window_ms / opt.me.step_ms);

    const std::vector<int> bins_a = quantile_bins(me_a.value, me_a.value, opt.n_bins);
    const std::vector<int> bins_b = quantile_bins(me_b.value, me_b.value, opt.n_bins);

    MetricSeries out;
    out.name = "JME";
    out.window_ms = opt.window_ms;

    auto window_indices = [&](const MetricSeries& me, int64_t t0, int64_t t1,
                              std::vector<size_t>& idx) {
        idx.clear();
        auto lo = std::lower_bound(me.start_ms.begin(), me.start_ms.end(), t0);
        for (auto it = lo; it != me.start_ms.end() && *it < t1; ++it)
            idx.push_back(static_cast<size_t>(it - me.start_ms.begin()));
    };

    std::vector<size_t> ia, ib;
    for (int64_t t : window_starts(span_start_ms, span_end_ms, opt.window_ms)) {
        window_indices(me_a, t, t + opt.window_ms, ia);
        window_indices(me_b, t, t + opt.window_ms, ib);
        if (ia.size() != k || ib.size() != k) continue;  // incomplete window
        double v = 0.0;
        if (opt.method == JmeMethod::crqa) {
            std::vector<int> wa, wb;
            wa.reserve(k);
            wb.reserve(k);
            for (size_t i : ia) wa.push_back(bins_a[i]);
            for (size_t i : ib) wb.push_back(bins_b[i]);
            v = crqa_rr(wa, wb);
        } else {
            std::vector<double> wa, wb;
            wa.reserve(k);
            wb.reserve(k);
            for (size_t i : ia) wa.push_back(me_a.value[i]);
            for (size_t i : ib) wb.push_back(me_b.value[i]);
            v = cosine_vec(wa, wb);
        }
        out.start_ms.push_back(t);
        out.value.push_back(v);
    }
    return out;
}

MetricSeries jme_series(const DyadSession& s, const JmeOptions& opt) {
    return jme_series_span(s, opt, s.meta.calibration_end_ms, s.meta.duration_ms);
}

}  // namespace dyadlens
