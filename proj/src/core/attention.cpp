#include "attention.hpp"

#include <algorithm>
#include <cmath>

namespace dyadlens {

std::optional<Cell> gaze_to_cell(const GazeSample& g, const ViewportState& v,
                                 double screen_h_px, const GridSpec& spec) {
    if (!g.valid) return std::nullopt;
    const double y_px = g.y_pct * screen_h_px;
    const double codeline =
        v.first_visible_line + (y_px - v.top_offset_px) / v.line_height_px;
    if (codeline < 0.0) return std::nullopt;
    const int row = static_cast<int>(std::floor(codeline / spec.row_lines));
    if (spec.max_rows > 0 && row >= spec.max_rows) return std::nullopt;
    int col = static_cast<int>(std::floor(g.x_pct * spec.n_cols));
    col = std::min(col, spec.n_cols - 1);
    col = std::max(col, 0);
    return Cell{row, col};
}

AttentionHistogram build_histogram(std::span<const GazeSample> gaze,
                                   std::span<const ViewportState> viewport,
                                   double screen_h_px, const GridSpec& spec,
                                   int64_t window_start_ms) {
    AttentionHistogram h;
    h.window_start_ms = window_start_ms;
    if (viewport.empty()) return h;
    size_t vi = 0;
    for (const GazeSample& g : gaze) {
        while (vi + 1 < viewport.size() && viewport[vi + 1].t_ms <= g.t_ms) ++vi;
        // before the first state the first state applies
        const ViewportState& v = viewport[vi];
        if (auto cell = gaze_to_cell(g, v, screen_h_px, spec)) {
            ++h.counts[*cell];
            ++h.total;
        }
    }
    return h;
}

double cosine_sim(const AttentionHistogram& h1, const AttentionHistogram& h2) {
    if (h1.total == 0 || h2.total == 0) return 0.0;
    double dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (const auto& [cell, c] : h1.counts) {
        const double v = static_cast<double>(c);
        n1 += v * v;
        auto it = h2.counts.find(cell);
        if (it != h2.counts.end()) dot += v * static_cast<double>(it->second);
    }
    for (const auto& [cell, c] : h2.counts) {
        const double v = static_cast<double>(c);
        n2 += v * v;
    }
    if (n1 == 0.0 || n2 == 0.0) return 0.0;
    // (dot*dot)/(n1*n2) keeps identical histograms at exactly 1.0
    double r = (dot * dot) / (n1 * n2);
    r = std::clamp(r, 0.0, 1.0);
    return std::sqrt(r);
}

MetricSeries jva_series_span(const DyadSession& s, const JvaOptions& opt,
                             int64_t span_start_ms, int64_t span_end_ms) {
    MetricSeries out;
    out.name = "JVA";
    out.window_ms = opt.window_ms;
    for (int64_t t : window_starts(span_start_ms, span_end_ms, opt.window_ms)) {
        const auto ga = slice_range(s.a.gaze, t, t + opt.window_ms);
        const auto gb = slice_range(s.b.gaze, t, t + opt.window_ms);
        // viewport state lookup needs states up to the window, so pass the
        // whole per-participant viewport stream
        const AttentionHistogram ha = build_histogram(
            ga, {s.a.viewport.data(), s.a.viewport.size()}, s.meta.screen_h_px,
            opt.grid, t);
        const AttentionHistogram hb = build_histogram(
            gb, {s.b.viewport.data(), s.b.viewport.size()}, s.meta.screen_h_px,
            opt.grid, t);
        out.start_ms.push_back(t);
        out.value.push_back(cosine_sim(ha, hb));
    }
    return out;
}

MetricSeries jva_series(const DyadSession& s, const JvaOptions& opt) {
    return jva_series_span(s, opt, s.meta.calibration_end_ms, s.meta.duration_ms);
}

}  // namespace dyadlens
