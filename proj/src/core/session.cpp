#include "session.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dyadlens {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_fail(size_t line_no, const std::string& what) {
    fail(Err::schema, "line " + std::to_string(line_no) + ": " + what);
}

double need_number(const json& j, const char* key, size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number())
        schema_fail(line_no, std::string(key) + " missing or not a number");
    return it->get<double>();
}

int64_t need_int(const json& j, const char* key, size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer())
        schema_fail(line_no, std::string(key) + " missing or not an integer");
    return it->get<int64_t>();
}

std::string need_string(const json& j, const char* key, size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        schema_fail(line_no, std::string(key) + " missing or not a string");
    return it->get<std::string>();
}

bool need_bool(const json& j, const char* key, size_t line_no) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_boolean())
        schema_fail(line_no, std::string(key) + " missing or not a bool");
    return it->get<bool>();
}

Participant need_participant(const json& j, size_t line_no) {
    const std::string p = need_string(j, "p", line_no);
    if (p == "A") return Participant::a;
    if (p == "B") return Participant::b;
    schema_fail(line_no, "p must be \"A\" or \"B\"");
}

// Shortest round-trip double formatting.
std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json number_or_int(double v) {
    if (v == static_cast<int64_t>(v) && std::abs(v) < 9.0e15)
        return json(static_cast<int64_t>(v));
    return json(v);
}

template <typename T>
void sort_by_time(std::vector<T>& v) {
    std::stable_sort(v.begin(), v.end(),
                     [](const T& x, const T& y) { return x.t_ms < y.t_ms; });
}

}  // namespace

DyadSession parse_session(std::istream& in) {
    DyadSession s;
    bool have_meta = false;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(Err::parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.is_object()) schema_fail(line_no, "record is not a JSON object");
        const std::string type = need_string(rec, "type", line_no);

        if (type == "meta") {
            if (have_meta) schema_fail(line_no, "duplicate meta record");
            SessionMeta& m = s.meta;
            m.session_id = need_string(rec, "session_id", line_no);
            m.dyad_id = need_string(rec, "dyad_id", line_no);
            m.calibration_end_ms = need_int(rec, "calibration_end_ms", line_no);
            m.duration_ms = need_int(rec, "duration_ms", line_no);
            m.screen_w_px = need_number(rec, "screen_w_px", line_no);
            m.screen_h_px = need_number(rec, "screen_h_px", line_no);
            m.gaze_rate_hz = need_number(rec, "gaze_rate_hz", line_no);
            m.pupil_rate_hz = need_number(rec, "pupil_rate_hz", line_no);
            m.bugs_solved = static_cast<int>(need_int(rec, "bugs_solved", line_no));
            if (m.calibration_end_ms <= 0)
                schema_fail(line_no, "calibration_end_ms must be > 0");
            if (m.duration_ms <= m.calibration_end_ms)
                schema_fail(line_no, "duration_ms must exceed calibration_end_ms");
            if (m.screen_w_px <= 0 || m.screen_h_px <= 0)
                schema_fail(line_no, "screen dimensions must be positive");
            if (m.gaze_rate_hz <= 0 || m.pupil_rate_hz <= 0)
                schema_fail(line_no, "sampling rates must be positive");
            have_meta = true;
            continue;
        }
        if (!have_meta)
            fail(Err::missing_meta,
                 "line " + std::to_string(line_no) + ": first record must be meta");

        ParticipantStreams& ps = s.streams(need_participant(rec, line_no));
        const int64_t t = need_int(rec, "t_ms", line_no);
        if (t < 0) schema_fail(line_no, "t_ms must be >= 0");

        if (type == "gaze") {
            GazeSample g;
            g.t_ms = t;
            g.x_pct = need_number(rec, "x", line_no);
            g.y_pct = need_number(rec, "y", line_no);
            g.valid = need_bool(rec, "valid", line_no);
            if (g.valid && (g.x_pct < 0.0 || g.x_pct > 1.0 || g.y_pct < 0.0 || g.y_pct > 1.0))
                schema_fail(line_no, "gaze coordinates outside [0, 1]");
            ps.gaze.push_back(g);
        } else if (type == "pupil") {
            PupilSample p;
            p.t_ms = t;
            p.d_mm = need_number(rec, "d_mm", line_no);
            p.valid = need_bool(rec, "valid", line_no);
            if (p.valid && (p.d_mm < 1.0 || p.d_mm > 10.0)) p.valid = false;
            ps.pupil.push_back(p);
        } else if (type == "viewport") {
            ViewportState v;
            v.t_ms = t;
            v.first_visible_line = need_number(rec, "first_visible_line", line_no);
            v.line_height_px = need_number(rec, "line_height_px", line_no);
            v.top_offset_px = need_number(rec, "top_offset_px", line_no);
            if (v.first_visible_line < 0) schema_fail(line_no, "first_visible_line < 0");
            if (v.line_height_px <= 0) schema_fail(line_no, "line_height_px must be > 0");
            if (v.top_offset_px < 0) schema_fail(line_no, "top_offset_px < 0");
            ps.viewport.push_back(v);
        } else {
            schema_fail(line_no, "unknown record type: " + type);
        }
    }
    if (!have_meta) fail(Err::missing_meta, "no meta record found");
    for (Participant p : {Participant::a, Participant::b}) {
        ParticipantStreams& ps = s.streams(p);
        const char letter = participant_letter(p);
        if (ps.gaze.empty())
            fail(Err::empty_stream, std::string("no gaze samples for ") + letter);
        if (ps.pupil.empty())
            fail(Err::empty_stream, std::string("no pupil samples for ") + letter);
        if (ps.viewport.empty())
            fail(Err::empty_stream, std::string("no viewport states for ") + letter);
        sort_by_time(ps.gaze);
        sort_by_time(ps.pupil);
        sort_by_time(ps.viewport);
    }
    return s;
}

DyadSession parse_session_text(const std::string& text) {
    std::istringstream in(text);
    return parse_session(in);
}

DyadSession load_session(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Err::io, "cannot open " + path);
    return parse_session(in);
}

void serialize_session(const DyadSession& s, std::ostream& out) {
    const SessionMeta& m = s.meta;
    json meta;
    meta["type"] = "meta";
    meta["session_id"] = m.session_id;
    meta["dyad_id"] = m.dyad_id;
    meta["calibration_end_ms"] = m.calibration_end_ms;
    meta["duration_ms"] = m.duration_ms;
    meta["screen_w_px"] = number_or_int(m.screen_w_px);
    meta["screen_h_px"] = number_or_int(m.screen_h_px);
    meta["gaze_rate_hz"] = number_or_int(m.gaze_rate_hz);
    meta["pupil_rate_hz"] = number_or_int(m.pupil_rate_hz);
    meta["bugs_solved"] = m.bugs_solved;
    out << meta.dump() << '\n';

    for (Participant p : {Participant::a, Participant::b}) {
        const ParticipantStreams& ps = s.streams(p);
        const std::string letter(1, participant_letter(p));
        for (const GazeSample& g : ps.gaze) {
            out << "{\"type\":\"gaze\",\"p\":\"" << letter << "\",\"t_ms\":" << g.t_ms
                << ",\"x\":" << fmt_double(g.x_pct) << ",\"y\":" << fmt_double(g.y_pct)
                << ",\"valid\":" << (g.valid ? "true" : "false") << "}\n";
        }
        for (const PupilSample& d : ps.pupil) {
            out << "{\"type\":\"pupil\",\"p\":\"" << letter << "\",\"t_ms\":" << d.t_ms
                << ",\"d_mm\":" << fmt_double(d.d_mm)
                << ",\"valid\":" << (d.valid ? "true" : "false") << "}\n";
        }
        for (const ViewportState& v : ps.viewport) {
            out << "{\"type\":\"viewport\",\"p\":\"" << letter << "\",\"t_ms\":" << v.t_ms
                << ",\"first_visible_line\":" << fmt_double(v.first_visible_line)
                << ",\"line_height_px\":" << fmt_double(v.line_height_px)
                << ",\"top_offset_px\":" << fmt_double(v.top_offset_px) << "}\n";
        }
    }
}

std::string session_to_text(const DyadSession& s) {
    std::ostringstream out;
    serialize_session(s, out);
    return out.str();
}

void save_session(const DyadSession& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Err::io, "cannot write " + path);
    serialize_session(s, out);
}

namespace {

template <typename T>
void check_stream(const std::vector<T>& v, Participant p, const char* stream,
                  bool check_gaps, std::vector<Issue>& issues) {
    for (size_t i = 1; i < v.size(); ++i) {
        if (v[i].t_ms < v[i - 1].t_ms) {
            issues.push_back({IssueKind::non_monotonic, true, p, stream,
                              v[i - 1].t_ms, v[i].t_ms,
                              std::string(stream) + " timestamps decrease"});
            break;
        }
    }
    if (!check_gaps) return;
    for (size_t i = 1; i < v.size(); ++i) {
        const int64_t gap = v[i].t_ms - v[i - 1].t_ms;
        if (gap > 1000) {
            issues.push_back({IssueKind::gap, false, p, stream, v[i - 1].t_ms,
                              v[i].t_ms,
                              std::string(stream) + " gap of " + std::to_string(gap) + " ms"});
        }
    }
}

template <typename T>
void check_valid_fraction(const std::vector<T>& v, Participant p, const char* stream,
                          std::vector<Issue>& issues) {
    if (v.empty()) return;
    size_t n_valid = 0;
    for (const T& s : v) n_valid += s.valid ? 1 : 0;
    const double frac = static_cast<double>(n_valid) / static_cast<double>(v.size());
    if (frac < 0.75) {
        char buf[64];
        snprintf(buf, sizeof buf, "valid fraction %.3f < 0.75", frac);
        issues.push_back({IssueKind::low_valid, false, p, stream, v.front().t_ms,
                          v.back().t_ms, buf});
    }
}

}  // namespace

std::vector<Issue> validate_session(const DyadSession& s) {
    std::vector<Issue> issues;
    for (Participant p : {Participant::a, Participant::b}) {
        const ParticipantStreams& ps = s.streams(p);
        check_stream(ps.gaze, p, "gaze", true, issues);
        check_stream(ps.pupil, p, "pupil", true, issues);
        check_stream(ps.viewport, p, "viewport", false, issues);
        check_valid_fraction(ps.gaze, p, "gaze", issues);
        check_valid_fraction(ps.pupil, p, "pupil", issues);
    }
    if (s.meta.calibration_end_ms < 30000) {
        issues.push_back({IssueKind::short_calibration, false, Participant::a, "session",
                          0, s.meta.calibration_end_ms,
                          "calibration segment shorter than 30 s"});
    }
    return issues;
}

std::vector<int64_t> window_starts(int64_t span_start_ms, int64_t span_end_ms,
                                   int64_t window_ms) {
    if (window_ms <= 0) fail(Err::bad_arg, "window must be positive");
    const int64_t span = span_end_ms - span_start_ms;
    if (span < window_ms)
        fail(Err::window_too_long,
             "window of " + std::to_string(window_ms) + " ms exceeds span of " +
                 std::to_string(span) + " ms");
    std::vector<int64_t> starts;
    starts.reserve(static_cast<size_t>(span / window_ms));
    for (int64_t t = span_start_ms; t + window_ms <= span_end_ms; t += window_ms)
        starts.push_back(t);
    return starts;
}

template <typename T>
std::span<const T> slice_range(const std::vector<T>& samples, int64_t start_ms,
                               int64_t end_ms) {
    auto lo = std::lower_bound(samples.begin(), samples.end(), start_ms,
                               [](const T& s, int64_t t) { return s.t_ms < t; });
    auto hi = std::lower_bound(lo, samples.end(), end_ms,
                               [](const T& s, int64_t t) { return s.t_ms < t; });
    return {&*samples.begin() + (lo - samples.begin()),
            static_cast<size_t>(hi - lo)};
}

template std::span<const GazeSample> slice_range(const std::vector<GazeSample>&, int64_t, int64_t);
template std::span<const PupilSample> slice_range(const std::vector<PupilSample>&, int64_t, int64_t);
template std::span<const ViewportState> slice_range(const std::vector<ViewportState>&, int64_t, int64_t);

namespace {

template <typename T>
std::vector<WindowSlice<T>> make_windows(const DyadSession& s,
                                         const std::vector<T>& a,
                                         const std::vector<T>& b,
                                         int64_t window_ms) {
    std::vector<WindowSlice<T>> out;
    for (int64_t t : window_starts(s.meta.calibration_end_ms, s.meta.duration_ms, window_ms)) {
        WindowSlice<T> w;
        w.start_ms = t;
        w.end_ms = t + window_ms;
        w.a = slice_range(a, t, t + window_ms);
        w.b = slice_range(b, t, t + window_ms);
        out.push_back(w);
    }
    return out;
}

}  // namespace

std::vector<WindowSlice<GazeSample>> gaze_windows(const DyadSession& s, int64_t window_ms) {
    return make_windows(s, s.a.gaze, s.b.gaze, window_ms);
}

std::vector<WindowSlice<PupilSample>> pupil_windows(const DyadSession& s, int64_t window_ms) {
    return make_windows(s, s.a.pupil, s.b.pupil, window_ms);
}

const char* err_name(Err e) {
    switch (e) {
        case Err::ok: return "ok";
        case Err::io: return "io";
        case Err::parse: return "parse";
        case Err::schema: return "schema";
        case Err::missing_meta: return "missing_meta";
        case Err::empty_stream: return "empty_stream";
        case Err::window_too_long: return "window_too_long";
        case Err::too_few_samples: return "too_few_samples";
        case Err::length_mismatch: return "length_mismatch";
        case Err::empty: return "empty";
        case Err::alignment: return "alignment";
        case Err::too_short: return "too_short";
        case Err::degenerate_series: return "degenerate_series";
        case Err::insufficient_history: return "insufficient_history";
        case Err::bad_table: return "bad_table";
        case Err::no_match: return "no_match";
        case Err::out_of_order: return "out_of_order";
        case Err::short_calibration: return "short_calibration";
        case Err::zero_variance: return "zero_variance";
        case Err::too_few_groups: return "too_few_groups";
        case Err::too_few_values: return "too_few_values";
        case Err::domain: return "domain";
        case Err::bad_arg: return "bad_arg";
        case Err::usage: return "usage";
        case Err::internal: return "internal";
    }
    return "unknown";
}

const char* level_name(Level v) {
    switch (v) {
        case Level::low: return "L";
        case Level::avg: return "AVG";
        case Level::high: return "H";
    }
    return "?";
}

}  // namespace dyadlens
