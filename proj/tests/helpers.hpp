#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/types.hpp"

#ifndef TESTS_DATA_DIR
#define TESTS_DATA_DIR "tests/data"
#endif

namespace testutil {

inline nlohmann::json load_fixture(const std::string& name) {
    const std::string path = std::string(TESTS_DATA_DIR) + "/" + name;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("fixture not found: " + path);
    return nlohmann::json::parse(in);
}

// A flat session: constant pupil, fixed gaze point, one viewport state.
// Constant pupil means a flat wavelet detail band, so every effort window
// reads exactly zero.
inline dyadlens::DyadSession calm_session(int64_t duration_ms = 300000,
                                          int64_t calibration_ms = 60000,
                                          double rate_hz = 20.0) {
    dyadlens::DyadSession s;
    s.meta.session_id = "calm-s1";
    s.meta.dyad_id = "calm";
    s.meta.calibration_end_ms = calibration_ms;
    s.meta.duration_ms = duration_ms;
    s.meta.screen_w_px = 1920;
    s.meta.screen_h_px = 1080;
    s.meta.gaze_rate_hz = rate_hz;
    s.meta.pupil_rate_hz = rate_hz;
    s.meta.bugs_solved = 5;
    const int64_t step = static_cast<int64_t>(1000.0 / rate_hz);
    for (dyadlens::Participant p : {dyadlens::Participant::a, dyadlens::Participant::b}) {
        auto& st = s.streams(p);
        st.viewport.push_back({0, 0, 20.0, 80.0});
        for (int64_t t = 0; t < duration_ms; t += step) {
            st.gaze.push_back({t, 0.5, 0.5, true});
            st.pupil.push_back({t, 4.5, true});
        }
    }
    return s;
}

}  // namespace testutil
