#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "core/attention.hpp"
#include "core/synth.hpp"
#include "helpers.hpp"

using namespace dyadlens;

namespace {

GazeSample at_line(int64_t t_ms, double line, double col_frac, const ViewportState& v,
                   double screen_h = 1080.0) {
    const double y_px = v.top_offset_px + (line - v.first_visible_line) * v.line_height_px;
    return {t_ms, col_frac, y_px / screen_h, true};
}

// Both participants walk the same pseudo-random document lines; participant B
// scrolls by `shift` lines mid-window with gaze y compensated, so the document
// cells hit are identical.
DyadSession scrolled_pair(double shift) {
    DyadSession s = testutil::calm_session(120000, 30000, 20.0);
    const int64_t scroll_at = 65000;  // mid-window
    s.b.viewport.clear();
    s.b.viewport.push_back({0, 0.0, 20.0, 80.0});
    s.b.viewport.push_back({scroll_at, shift, 20.0, 80.0});
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> pick_line(8.0, 40.0);
    std::uniform_real_distribution<double> pick_col(0.05, 0.95);
    for (size_t i = 0; i < s.a.gaze.size(); ++i) {
        const int64_t t = s.a.gaze[i].t_ms;
        const double line = pick_line(rng);
        const double col = pick_col(rng);
        const ViewportState va = s.a.viewport.front();
        const ViewportState vb = t >= scroll_at ? s.b.viewport[1] : s.b.viewport[0];
        s.a.gaze[i] = at_line(t, line, col, va);
        s.b.gaze[i] = at_line(t, line, col, vb);
    }
    return s;
}

}  // namespace

TEST_SUITE("attention") {
    TEST_CASE("gaze maps through the viewport into document cells") {
        const GridSpec spec;
        const ViewportState v{0, 0.0, 20.0, 80.0};
        const double h = 1080.0;

        auto cell = gaze_to_cell({0, 0.05, 80.0 / h, true}, v, h, spec);
        REQUIRE(cell.has_value());
        CHECK(cell->row == 0);
        CHECK(cell->col == 0);

        cell = gaze_to_cell({0, 0.999, (80.0 + 6 * 20.0) / h, true}, v, h, spec);
        REQUIRE(cell.has_value());
        CHECK(cell->row == 1);
        CHECK(cell->col == 9);

        const ViewportState scrolled{0, 12.0, 20.0, 80.0};
        cell = gaze_to_cell({0, 0.5, 80.0 / h, true}, scrolled, h, spec);
        REQUIRE(cell.has_value());
        CHECK(cell->row == 2);

        CHECK_FALSE(gaze_to_cell({0, 0.5, 70.0 / h, true}, v, h, spec).has_value());
        CHECK_FALSE(gaze_to_cell({0, 0.5, 0.5, false}, v, h, spec).has_value());

        GridSpec capped;
        capped.max_rows = 2;
        cell = gaze_to_cell({0, 0.5, (80.0 + 13 * 20.0) / h, true}, v, h, capped);
        CHECK_FALSE(cell.has_value());
    }

    TEST_CASE("histogram uses the viewport state in effect per sample") {
        std::vector<GazeSample> gaze;
        std::vector<ViewportState> vp = {{0, 0.0, 20.0, 80.0}, {1000, 6.0, 20.0, 80.0}};
        const double h = 1080.0;
        gaze.push_back({500, 0.05, 80.0 / h, true});   // line 0 -> row 0
        gaze.push_back({1500, 0.05, 80.0 / h, true});  // line 6 -> row 1
        const auto hist = build_histogram(gaze, vp, h, {}, 0);
        CHECK(hist.total == 2);
        CHECK(hist.counts.at(Cell{0, 0}) == 1);
        CHECK(hist.counts.at(Cell{1, 0}) == 1);
    }

    TEST_CASE("cosine similarity endpoints") {
        AttentionHistogram h1, h2;
        h1.counts[{0, 0}] = 4;
        h1.counts[{1, 2}] = 3;
        h1.total = 7;
        h2 = h1;
        CHECK(cosine_sim(h1, h2) == 1.0);
        AttentionHistogram h3;
        h3.counts[{5, 5}] = 9;
        h3.total = 9;
        CHECK(cosine_sim(h1, h3) == 0.0);
        CHECK(cosine_sim(h1, {}) == 0.0);
    }

    TEST_CASE("perfect sharing yields exactly 1.0 per window") {
        SynthConfig cfg;
        cfg.seed = 77;
        cfg.duration_s = 300;
        cfg.shared_focus_p = 1.0;
        cfg.gaze_jitter = 0.0;
        const DyadSession s = gen_dyad(cfg);
        const MetricSeries jva = jva_series(s, {});
        REQUIRE(jva.size() > 0);
        for (double v : jva.value) CHECK(v == 1.0);
    }

    TEST_CASE("jva is invariant to scrolling") {
        const MetricSeries base = jva_series(scrolled_pair(0.0), {.grid = {}, .window_ms = 10000});
        const MetricSeries moved = jva_series(scrolled_pair(7.0), {.grid = {}, .window_ms = 10000});
        REQUIRE(base.size() == moved.size());
        REQUIRE(base.size() > 0);
        for (size_t i = 0; i < base.size(); ++i)
            CHECK(std::fabs(base.value[i] - moved.value[i]) < 1e-12);
        for (double v : base.value) CHECK(v == doctest::Approx(1.0));
    }

    TEST_CASE("disjoint columns score zero") {
        DyadSession s = testutil::calm_session(90000, 30000, 20.0);
        const ViewportState v = s.a.viewport.front();
        for (size_t i = 0; i < s.a.gaze.size(); ++i) {
            const int64_t t = s.a.gaze[i].t_ms;
            s.a.gaze[i] = at_line(t, 4.0, 0.05, v);
            s.b.gaze[i] = at_line(t, 4.0, 0.95, v);
        }
        const MetricSeries jva = jva_series(s, {});
        REQUIRE(jva.size() == 2);
        CHECK(jva.value[0] == 0.0);
        CHECK(jva.value[1] == 0.0);
    }

    TEST_CASE("series spans the task segment on the window grid") {
        SynthConfig cfg;
        cfg.seed = 3;
        cfg.duration_s = 240;
        const DyadSession s = gen_dyad(cfg);
        const MetricSeries jva = jva_series(s, {.grid = {}, .window_ms = 30000});
        REQUIRE(jva.size() == 5);
        CHECK(jva.start_ms.front() == 90000);
        CHECK(jva.start_ms.back() == 210000);
        CHECK(jva.window_ms == 30000);
        CHECK(jva.name == "JVA");
        for (double v : jva.value) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
