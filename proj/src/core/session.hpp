#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "types.hpp"

namespace dyadlens {

// ---------------------------------------------------------------------------
// JSONL session storage
// ---------------------------------------------------------------------------

// Reads a JSONL session stream. The first record must be the meta record;
// schema violations report the offending line number. Streams are sorted by
// timestamp after loading. Pupil diameters outside the 1.0-10.0 mm
// plausibility band are kept but forced invalid.
DyadSession parse_session(std::istream& in);
DyadSession parse_session_text(const std::string& text);
DyadSession load_session(const std::string& path);

// Writes the meta record followed by every sample, one JSON object per line.
// Output is deterministic for a given session.
void serialize_session(const DyadSession& s, std::ostream& out);
std::string session_to_text(const DyadSession& s);
void save_session(const DyadSession& s, const std::string& path);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class IssueKind {
    gap,              // > 1 s between consecutive samples in a stream
    low_valid,        // valid fraction < 0.75
    short_calibration,// calibration segment < 30 s
    non_monotonic,    // timestamps decrease (fatal)
};

struct Issue {
    IssueKind kind;
    bool fatal = false;
    Participant participant = Participant::a;
    std::string stream;  // "gaze" | "pupil" | "viewport" | "session"
    int64_t span_start_ms = 0;
    int64_t span_end_ms = 0;
    std::string message;
};

std::vector<Issue> validate_session(const DyadSession& s);

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

enum class Channel { gaze, pupil };

template <typename T>
struct WindowSlice {
    int64_t start_ms = 0;
    int64_t end_ms = 0;
    std::span<const T> a;
    std::span<const T> b;
};

// Non-overlapping [start, start + window) windows covering
// [calibration_end_ms, duration_ms). Throws Err::window_too_long when not a
// single window fits.
std::vector<WindowSlice<GazeSample>> gaze_windows(const DyadSession& s, int64_t window_ms);
std::vector<WindowSlice<PupilSample>> pupil_windows(const DyadSession& s, int64_t window_ms);

// Window starts for an arbitrary [span_start, span_end) range.
std::vector<int64_t> window_starts(int64_t span_start_ms, int64_t span_end_ms,
                                   int64_t window_ms);

// Subrange of samples with start <= t_ms < end (samples must be sorted).
template <typename T>
std::span<const T> slice_range(const std::vector<T>& samples, int64_t start_ms,
                               int64_t end_ms);

}  // namespace dyadlens
