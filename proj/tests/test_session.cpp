#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <sstream>

#include "core/error.hpp"
#include "core/session.hpp"
#include "core/synth.hpp"
#include "helpers.hpp"

using namespace dyadlens;

namespace {

Err code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const DlError& e) {
        return e.code();
    }
    return Err::ok;
}

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const DlError& e) {
        return e.what();
    }
    return "";
}

const char* kMiniSession =
    R"({"type":"meta","session_id":"s","dyad_id":"d","calibration_end_ms":1000,"duration_ms":3000,"screen_w_px":1920,"screen_h_px":1080,"gaze_rate_hz":10,"pupil_rate_hz":10,"bugs_solved":1}
{"type":"gaze","p":"A","t_ms":0,"x":0.5,"y":0.5,"valid":true}
{"type":"gaze","p":"B","t_ms":0,"x":0.5,"y":0.5,"valid":true}
{"type":"pupil","p":"A","t_ms":0,"d_mm":4.0,"valid":true}
{"type":"pupil","p":"B","t_ms":0,"d_mm":4.0,"valid":true}
{"type":"viewport","p":"A","t_ms":0,"first_visible_line":0,"line_height_px":20,"top_offset_px":80}
{"type":"viewport","p":"B","t_ms":0,"first_visible_line":0,"line_height_px":20,"top_offset_px":80}
)";

}  // namespace

TEST_SUITE("session") {
    TEST_CASE("text round trip is stable") {
        SynthConfig cfg;
        cfg.seed = 5;
        cfg.duration_s = 120;
        const DyadSession s = gen_dyad(cfg);
        const std::string once = session_to_text(s);
        const DyadSession back = parse_session_text(once);
        CHECK(session_to_text(back) == once);
        CHECK(back.meta.session_id == s.meta.session_id);
        CHECK(back.a.gaze.size() == s.a.gaze.size());
        CHECK(back.b.pupil.size() == s.b.pupil.size());
    }

    TEST_CASE("file round trip is byte stable") {
        SynthConfig cfg;
        cfg.seed = 6;
        cfg.duration_s = 90;
        cfg.calibration_s = 30;
        const DyadSession s = gen_dyad(cfg);
        const auto path = std::filesystem::temp_directory_path() / "dl_roundtrip.jsonl";
        save_session(s, path.string());
        const DyadSession back = load_session(path.string());
        CHECK(session_to_text(back) == session_to_text(s));
        std::filesystem::remove(path);
    }

    TEST_CASE("meta must come first") {
        CHECK(code_of([] {
            parse_session_text(R"({"type":"gaze","p":"A","t_ms":0,"x":0.5,"y":0.5,"valid":true})");
        }) == Err::missing_meta);
        CHECK(code_of([] { parse_session_text(""); }) == Err::missing_meta);
    }

    TEST_CASE("schema errors carry the line number") {
        std::string text = kMiniSession;
        text += R"({"type":"gaze","p":"A","t_ms":100,"x":1.5,"y":0.5,"valid":true})";
        text += "\n";
        const auto msg = message_of([&] { parse_session_text(text); });
        CHECK(msg.find("line 8") != std::string::npos);
        CHECK(code_of([&] { parse_session_text(text); }) == Err::schema);

        std::string bad_type = kMiniSession;
        bad_type += R"({"type":"novel","p":"A","t_ms":100})";
        bad_type += "\n";
        CHECK(message_of([&] { parse_session_text(bad_type); }).find("line 8") !=
              std::string::npos);
    }

    TEST_CASE("broken json reports a parse error") {
        std::string text = kMiniSession;
        text += "{not json\n";
        CHECK(code_of([&] { parse_session_text(text); }) == Err::parse);
        CHECK(message_of([&] { parse_session_text(text); }).find("line 8") !=
              std::string::npos);
    }

    TEST_CASE("streams for both participants are required") {
        std::string only_a;
        std::istringstream in(kMiniSession);
        std::string line;
        while (std::getline(in, line))
            if (line.find("\"B\"") == std::string::npos) only_a += line + "\n";
        CHECK(code_of([&] { parse_session_text(only_a); }) == Err::empty_stream);
    }

    TEST_CASE("implausible pupil diameters are kept but invalidated") {
        std::string text = kMiniSession;
        text += R"({"type":"pupil","p":"A","t_ms":100,"d_mm":0.4,"valid":true})";
        text += "\n";
        text += R"({"type":"pupil","p":"A","t_ms":200,"d_mm":11.2,"valid":true})";
        text += "\n";
        const DyadSession s = parse_session_text(text);
        REQUIRE(s.a.pupil.size() == 3);
        CHECK(s.a.pupil[1].d_mm == doctest::Approx(0.4));
        CHECK_FALSE(s.a.pupil[1].valid);
        CHECK_FALSE(s.a.pupil[2].valid);
    }

    TEST_CASE("streams are sorted after parsing") {
        std::string text = kMiniSession;
        text += R"({"type":"gaze","p":"A","t_ms":500,"x":0.1,"y":0.1,"valid":true})";
        text += "\n";
        text += R"({"type":"gaze","p":"A","t_ms":250,"x":0.2,"y":0.2,"valid":true})";
        text += "\n";
        const DyadSession s = parse_session_text(text);
        REQUIRE(s.a.gaze.size() == 3);
        CHECK(s.a.gaze[1].t_ms == 250);
        CHECK(s.a.gaze[2].t_ms == 500);
    }

    TEST_CASE("validation passes a clean synthetic session") {
        SynthConfig cfg;
        cfg.seed = 11;
        cfg.duration_s = 180;
        const DyadSession s = gen_dyad(cfg);
        CHECK(validate_session(s).empty());
    }

    TEST_CASE("validation flags gaps, dropouts, and short calibration") {
        DyadSession s = testutil::calm_session(120000, 20000);
        for (size_t i = 0; i < s.a.pupil.size(); i += 3) s.a.pupil[i].valid = false;
        auto& gaze = s.b.gaze;
        gaze.erase(std::remove_if(gaze.begin(), gaze.end(),
                                  [](const GazeSample& g) {
                                      return g.t_ms >= 40000 && g.t_ms < 43000;
                                  }),
                   gaze.end());
        const auto issues = validate_session(s);
        auto has = [&](IssueKind k) {
            return std::any_of(issues.begin(), issues.end(),
                               [&](const Issue& i) { return i.kind == k; });
        };
        CHECK(has(IssueKind::low_valid));
        CHECK(has(IssueKind::gap));
        CHECK(has(IssueKind::short_calibration));
        CHECK(std::none_of(issues.begin(), issues.end(),
                           [](const Issue& i) { return i.fatal; }));
        const auto gap = std::find_if(issues.begin(), issues.end(), [](const Issue& i) {
            return i.kind == IssueKind::gap;
        });
        REQUIRE(gap != issues.end());
        CHECK(gap->participant == Participant::b);
        CHECK(gap->stream == "gaze");
        CHECK(gap->span_start_ms < gap->span_end_ms);
    }

    TEST_CASE("decreasing timestamps are fatal") {
        DyadSession s = testutil::calm_session();
        std::swap(s.a.gaze[10].t_ms, s.a.gaze[11].t_ms);
        const auto issues = validate_session(s);
        CHECK(std::any_of(issues.begin(), issues.end(), [](const Issue& i) {
            return i.kind == IssueKind::non_monotonic && i.fatal;
        }));
    }

    TEST_CASE("windowing covers the task span without overlap") {
        const DyadSession s = testutil::calm_session(300000, 60000);
        const auto wins = gaze_windows(s, 30000);
        REQUIRE(wins.size() == 8);
        CHECK(wins.front().start_ms == 60000);
        CHECK(wins.back().end_ms == 300000);
        for (size_t i = 1; i < wins.size(); ++i)
            CHECK(wins[i].start_ms == wins[i - 1].end_ms);
        for (const auto& w : wins) {
            for (const auto& g : w.a) {
                CHECK(g.t_ms >= w.start_ms);
                CHECK(g.t_ms < w.end_ms);
            }
        }
    }

    TEST_CASE("window longer than the task span is rejected") {
        const DyadSession s = testutil::calm_session(100000, 60000);
        CHECK(code_of([&] { gaze_windows(s, 50000); }) == Err::window_too_long);
        CHECK(code_of([&] { pupil_windows(s, 0); }) == Err::bad_arg);
    }

    TEST_CASE("window starts truncate the ragged tail") {
        const auto starts = window_starts(90000, 600000, 30000);
        REQUIRE(starts.size() == 17);
        CHECK(starts.front() == 90000);
        CHECK(starts.back() == 570000);
        CHECK(window_starts(0, 29999, 30000).empty());
    }

    TEST_CASE("slice_range bounds are half open") {
        const DyadSession s = testutil::calm_session(60000, 30000, 10.0);
        const auto sl = slice_range(s.a.gaze, 1000, 1300);
        REQUIRE(sl.size() == 3);
        CHECK(sl.front().t_ms == 1000);
        CHECK(sl.back().t_ms == 1200);
        CHECK(slice_range(s.a.gaze, 59901, 59950).empty());
    }
}
