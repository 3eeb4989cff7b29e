#pragma once

#include <map>
#include <optional>
#include <span>

#include "session.hpp"
#include "types.hpp"

namespace dyadlens {

// Document-anchored attention grid: rows span row_lines code lines each,
// columns split the screen into n_cols equal horizontal bands.
struct GridSpec {
    int row_lines = 6;
    int n_cols = 10;
    int max_rows = 0;  // > 0 caps the row index; gaze past the cap is unmappable
};

struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

// Maps a gaze sample through the viewport into a document cell. Invalid
// samples and positions above the document map to nullopt. Scrolling moves
// first_visible_line, not the cell a code line belongs to.
std::optional<Cell> gaze_to_cell(const GazeSample& g, const ViewportState& v,
                                 double screen_h_px, const GridSpec& spec);

struct AttentionHistogram {
    std::map<Cell, int64_t> counts;
    int64_t total = 0;
    int64_t window_start_ms = 0;
};

// Accumulates one participant's window of gaze through the viewport states
// in effect at each sample (latest state with t_ms <= sample time; before the
// first state, that first state applies). Unmappable samples are skipped.
AttentionHistogram build_histogram(std::span<const GazeSample> gaze,
                                   std::span<const ViewportState> viewport,
                                   double screen_h_px, const GridSpec& spec,
                                   int64_t window_start_ms);

// Cosine similarity over the union of occupied cells; 0 when either histogram
// is empty. Identical histograms give exactly 1.0.
double cosine_sim(const AttentionHistogram& h1, const AttentionHistogram& h2);

struct JvaOptions {
    GridSpec grid;
    int64_t window_ms = 30000;
};

// JVA per non-overlapping window across [calibration_end, duration).
MetricSeries jva_series(const DyadSession& s, const JvaOptions& opt);

// Same, over an arbitrary span (used for calibration baselines).
MetricSeries jva_series_span(const DyadSession& s, const JvaOptions& opt,
                             int64_t span_start_ms, int64_t span_end_ms);

}  // namespace dyadlens
