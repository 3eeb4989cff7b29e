#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dyadlens {

enum class Participant : int { a = 0, b = 1 };

inline char participant_letter(Participant p) { return p == Participant::a ? 'A' : 'B'; }

struct SessionMeta {
    std::string session_id;
    std::string dyad_id;
    int64_t calibration_end_ms = 0;
    int64_t duration_ms = 0;
    double screen_w_px = 0.0;
    double screen_h_px = 0.0;
    double gaze_rate_hz = 0.0;
    double pupil_rate_hz = 0.0;
    int bugs_solved = 0;
};

struct GazeSample {
    int64_t t_ms = 0;
    double x_pct = 0.0;  // fraction of screen width in [0, 1]
    double y_pct = 0.0;  // fraction of screen height in [0, 1]
    bool valid = true;
};

struct PupilSample {
    int64_t t_ms = 0;
    double d_mm = 0.0;
    bool valid = true;
};

struct ViewportState {
    int64_t t_ms = 0;
    double first_visible_line = 0.0;
    double line_height_px = 0.0;
    double top_offset_px = 0.0;
};

struct ParticipantStreams {
    std::vector<GazeSample> gaze;
    std::vector<PupilSample> pupil;
    std::vector<ViewportState> viewport;
};

struct DyadSession {
    SessionMeta meta;
    ParticipantStreams a;
    ParticipantStreams b;

    const ParticipantStreams& streams(Participant p) const {
        return p == Participant::a ? a : b;
    }
    ParticipantStreams& streams(Participant p) {
        return p == Participant::a ? a : b;
    }
};

struct MetricSeries {
    std::string name;       // JVA, ME_A, ME_B, JME
    int64_t window_ms = 0;  // aggregation window
    std::vector<int64_t> start_ms;
    std::vector<double> value;

    size_t size() const { return start_ms.size(); }
};

// One aligned measurement window of all four metrics.
struct MetricFrame {
    int64_t start_ms = 0;
    int64_t window_ms = 0;
    double jva = 0.0;
    double jme = 0.0;
    double me_a = 0.0;
    double me_b = 0.0;
};

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

struct Baselines {
    MeanSd jva;
    MeanSd jme;
    MeanSd me_a;
    MeanSd me_b;
    int64_t window_ms = 0;
    int n_windows = 0;
};

enum class Level : int { low = 0, avg = 1, high = 2 };

const char* level_name(Level v);  // "L", "AVG", "H"

struct DyadState {
    Level jva = Level::low;  // joint measures only ever H or L
    Level jme = Level::low;
    Level me_a = Level::avg;
    Level me_b = Level::avg;
};

}  // namespace dyadlens
