#include "feedback.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace dyadlens {

namespace {

constexpr char kBuiltinTable[] =
    "scenario,jva,jme,me1,me2,a1,a2,a3,a4,a5\n"
    "1,H,H,H,H,0,1,0,0,1\n"
    "2,H,H,AVG,AVG,1,0,0,0,0\n"
    "3,H,H,L,L,0,1,0,0,0\n"
    "4,H,L,H,H,0,1,0,1,1\n"
    "5,H,L,H,L,0,0,0,1,0\n"
    "6,H,L,L,L,0,0,0,1,0\n"
    "7,H,L,AVG,H,0,0,0,1,0\n"
    "8,H,L,L,L,0,0,0,1,0\n"
    "9,H,L,L,L,0,0,0,1,0\n"
    "10,H,L,H,H,0,0,0,1,0\n"
    "11,H,L,L,L,0,1,0,1,0\n"
    "12,L,H,L,L,0,1,1,0,1\n"
    "13,L,H,L,L,0,0,1,0,0\n"
    "14,L,H,L,L,0,1,1,0,0\n"
    "15,L,L,H,H,0,1,1,1,1\n"
    "16,L,L,H,AVG,0,0,1,1,0\n"
    "17,L,L,H,L,0,1,1,1,0\n"
    "18,L,L,AVG,H,0,0,1,1,0\n"
    "19,L,L,AVG,AVG,0,0,1,1,0\n"
    "20,L,L,L,H,0,1,1,1,0\n"
    "21,L,L,L,L,0,0,1,1,0\n"
    "22,L,L,L,L,0,1,1,1,0\n";

Level parse_joint_level(const std::string& s, int row) {
    if (s == "H") return Level::high;
    if (s == "L") return Level::low;
    fail(Err::bad_table, "row " + std::to_string(row) + ": joint level must be H or L");
}

Level parse_me_level(const std::string& s, int row) {
    if (s == "H") return Level::high;
    if (s == "L") return Level::low;
    if (s == "AVG") return Level::avg;
    fail(Err::bad_table, "row " + std::to_string(row) + ": ME level must be H, AVG or L");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

ScenarioTable parse_scenario_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) fail(Err::bad_table, "empty scenario table");
    {
        const auto header = split_csv_line(line);
        const std::vector<std::string> want = {"scenario", "jva", "jme", "me1",
                                               "me2", "a1", "a2", "a3", "a4", "a5"};
        if (header != want)
            fail(Err::bad_table, "unexpected header: " + line);
    }
    ScenarioTable t;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10)
            fail(Err::bad_table, "expected 10 fields, got " + std::to_string(f.size()));
        ScenarioRow r;
        r.id = std::atoi(f[0].c_str());
        r.jva = parse_joint_level(f[1], r.id);
        r.jme = parse_joint_level(f[2], r.id);
        r.me1 = parse_me_level(f[3], r.id);
        r.me2 = parse_me_level(f[4], r.id);
        for (int a = 0; a < 5; ++a) {
            const std::string& v = f[static_cast<size_t>(5 + a)];
            if (v != "0" && v != "1")
                fail(Err::bad_table,
                     "row " + std::to_string(r.id) + ": action flags must be 0 or 1");
            r.actions[a] = v == "1";
        }
        t.rows.push_back(r);
    }
    if (t.rows.size() != 22)
        fail(Err::bad_table,
             "expected 22 scenario rows, got " + std::to_string(t.rows.size()));
    for (size_t i = 0; i < t.rows.size(); ++i) {
        if (t.rows[i].id != static_cast<int>(i) + 1)
            fail(Err::bad_table, "scenario ids must run 1..22 in order");
    }
    return t;
}

std::string pattern_key(Level jva, Level jme, Level me1, Level me2) {
    std::string s;
    s += level_name(jva);
    s += ',';
    s += level_name(jme);
    s += ',';
    s += level_name(me1);
    s += ',';
    s += level_name(me2);
    return s;
}

int me_distance(Level a, Level b) {
    if (a == b) return 0;
    if (a == Level::avg || b == Level::avg) return 1;
    return 2;
}

std::vector<Action> row_actions(const ScenarioRow& r) {
    std::vector<Action> out;
    for (int a = 0; a < 5; ++a)
        if (r.actions[a]) out.push_back(static_cast<Action>(a));
    return out;
}

}  // namespace

const char* action_name(Action a) {
    switch (a) {
        case Action::a1: return "A1";
        case Action::a2: return "A2";
        case Action::a3: return "A3";
        case Action::a4: return "A4";
        case Action::a5: return "A5";
    }
    return "?";
}

const char* builtin_scenario_csv() { return kBuiltinTable; }

ScenarioTable builtin_scenario_table() {
    std::istringstream in(kBuiltinTable);
    return parse_scenario_csv(in);
}

ScenarioTable load_scenario_table(const std::string& path) {
    if (path.empty()) return builtin_scenario_table();
    std::ifstream in(path);
    if (!in) fail(Err::io, "cannot open " + path);
    return parse_scenario_csv(in);
}

std::vector<TableAuditGroup> audit_scenario_table(const ScenarioTable& t) {
    std::vector<TableAuditGroup> out;
    std::vector<std::string> keys;
    for (const ScenarioRow& r : t.rows)
        keys.push_back(pattern_key(r.jva, r.jme, r.me1, r.me2));
    std::vector<bool> seen(t.rows.size(), false);
    for (size_t i = 0; i < t.rows.size(); ++i) {
        if (seen[i]) continue;
        TableAuditGroup g;
        g.pattern = keys[i];
        g.row_ids.push_back(t.rows[i].id);
        for (size_t j = i + 1; j < t.rows.size(); ++j) {
            if (keys[j] != keys[i]) continue;
            seen[j] = true;
            g.row_ids.push_back(t.rows[j].id);
            if (!std::equal(std::begin(t.rows[i].actions), std::end(t.rows[i].actions),
                            std::begin(t.rows[j].actions)))
                g.conflicting = true;
        }
        if (g.row_ids.size() > 1) out.push_back(std::move(g));
    }
    return out;
}

MatchResult match_scenario(const DyadState& state, const ScenarioTable& t) {
    if (t.rows.empty()) fail(Err::no_match, "scenario table is empty");

    auto exact = [&](Level me_a, Level me_b) -> const ScenarioRow* {
        for (const ScenarioRow& r : t.rows) {
            if (r.jva == state.jva && r.jme == state.jme && r.me1 == me_a &&
                r.me2 == me_b)
                return &r;
        }
        return nullptr;
    };

    if (const ScenarioRow* r = exact(state.me_a, state.me_b))
        return {row_actions(*r), r->id, false};

    // AVG slots remapped, trying L before H
    const bool avg_a = state.me_a == Level::avg;
    const bool avg_b = state.me_b == Level::avg;
    if (avg_a || avg_b) {
        const Level tries[2] = {Level::low, Level::high};
        for (Level la : tries) {
            for (Level lb : tries) {
                const Level ma = avg_a ? la : state.me_a;
                const Level mb = avg_b ? lb : state.me_b;
                if (const ScenarioRow* r = exact(ma, mb))
                    return {row_actions(*r), r->id, true};
                if (!avg_b) break;  // inner loop vacuous
            }
            if (!avg_a) break;
        }
    }

    // nearest row by ME distance, preferring the same joint block
    const ScenarioRow* best = nullptr;
    int best_d = 0;
    for (bool same_block_only : {true, false}) {
        for (const ScenarioRow& r : t.rows) {
            if (same_block_only && (r.jva != state.jva || r.jme != state.jme)) continue;
            int d = me_distance(r.me1, state.me_a) + me_distance(r.me2, state.me_b);
            if (!same_block_only)
                d += 2 * ((r.jva != state.jva) + (r.jme != state.jme));
            if (!best || d < best_d) {
                best = &r;
                best_d = d;
            }
        }
        if (best) break;
    }
    return {row_actions(*best), best->id, true};
}

std::vector<MetricFrame> compute_frames(const DyadSession& s, const FrameOptions& opt,
                                        int64_t span_start_ms, int64_t span_end_ms) {
    JvaOptions jopt{opt.grid, opt.window_ms};
    const MetricSeries jva = jva_series_span(s, jopt, span_start_ms, span_end_ms);

    JmeOptions jme_opt;
    jme_opt.window_ms = opt.window_ms;
    jme_opt.method = opt.jme_method;
    jme_opt.n_bins = opt.n_bins;
    jme_opt.me = opt.me;
    jme_opt.me.ipa_window_ms = opt.window_ms;  // frame ME covers the frame window
    const MetricSeries jme = jme_series_span(s, jme_opt, span_start_ms, span_end_ms);

    MeOptions me_opt = jme_opt.me;
    me_opt.step_ms = me_opt.ipa_window_ms;  // only frame-aligned values needed
    const MetricSeries me_a = me_series(s, Participant::a, me_opt);
    const MetricSeries me_b = me_series(s, Participant::b, me_opt);

    auto value_at = [](const MetricSeries& m, int64_t t, double& out) {
        auto it = std::lower_bound(m.start_ms.begin(), m.start_ms.end(), t);
        if (it == m.start_ms.end() || *it != t) return false;
        out = m.value[static_cast<size_t>(it - m.start_ms.begin())];
        return true;
    };

    std::vector<MetricFrame> frames;
    for (size_t i = 0; i < jva.size(); ++i) {
        MetricFrame f;
        f.start_ms = jva.start_ms[i];
        f.window_ms = opt.window_ms;
        f.jva = jva.value[i];
        if (!value_at(jme, f.start_ms, f.jme)) continue;
        if (!value_at(me_a, f.start_ms, f.me_a)) continue;
        if (!value_at(me_b, f.start_ms, f.me_b)) continue;
        frames.push_back(f);
    }
    return frames;
}

std::vector<MetricFrame> compute_frames(const DyadSession& s, const FrameOptions& opt) {
    return compute_frames(s, opt, s.meta.calibration_end_ms, s.meta.duration_ms);
}

namespace {

MeanSd mean_sd(const std::vector<double>& v) {
    MeanSd out;
    const double n = static_cast<double>(v.size());
    for (double x : v) out.mean += x;
    out.mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(var / n);  // population
    return out;
}

}  // namespace

Baselines compute_baselines(const DyadSession& s, const FrameOptions& opt) {
    if (s.meta.calibration_end_ms < 30000)
        fail(Err::short_calibration, "calibration segment shorter than 30 s");
    const std::vector<MetricFrame> frames =
        compute_frames(s, opt, 0, s.meta.calibration_end_ms);
    if (frames.size() < 3)
        fail(Err::short_calibration,
             "calibration yields " + std::to_string(frames.size()) +
                 " usable windows, need 3");
    std::vector<double> jva, jme, me_a, me_b;
    for (const MetricFrame& f : frames) {
        jva.push_back(f.jva);
        jme.push_back(f.jme);
        me_a.push_back(f.me_a);
        me_b.push_back(f.me_b);
    }
    Baselines b;
    b.jva = mean_sd(jva);
    b.jme = mean_sd(jme);
    b.me_a = mean_sd(me_a);
    b.me_b = mean_sd(me_b);
    b.window_ms = opt.window_ms;
    b.n_windows = static_cast<int>(frames.size());
    return b;
}

Level discretize_me(double value, const MeanSd& base) {
    if (value > base.mean + 2.0 * base.sd) return Level::high;
    if (value < base.mean - 2.0 * base.sd) return Level::low;
    return Level::avg;
}

Level binarize_joint(double value, double mean) {
    return value >= mean ? Level::high : Level::low;
}

DyadState discretize_frame(const MetricFrame& f, const Baselines& base) {
    DyadState st;
    st.jva = binarize_joint(f.jva, base.jva.mean);
    st.jme = binarize_joint(f.jme, base.jme.mean);
    st.me_a = discretize_me(f.me_a, base.me_a);
    st.me_b = discretize_me(f.me_b, base.me_b);
    return st;
}

DyadState discretize_forecast(const ForecastFrame& f, const Baselines& base) {
    DyadState st;
    st.jva = binarize_joint(f.jva, base.jva.mean);
    st.jme = binarize_joint(f.jme, base.jme.mean);
    st.me_a = discretize_me(f.me_a, base.me_a);
    st.me_b = discretize_me(f.me_b, base.me_b);
    return st;
}

namespace {

bool state_equal(const DyadState& a, const DyadState& b) {
    return a.jva == b.jva && a.jme == b.jme && a.me_a == b.me_a && a.me_b == b.me_b;
}

// shared emission path: scenario match, A5 gate, per-action cooldowns
std::optional<FeedbackEvent> build_event(const DyadState& state,
                                         const ScenarioTable& table,
                                         const EnginePolicy& policy, int64_t t_ms,
                                         FeedbackMode mode, bool a5_persisted,
                                         int64_t action_last_ms[5]) {
    const MatchResult match = match_scenario(state, table);
    FeedbackEvent ev;
    ev.t_ms = t_ms;
    ev.mode = mode;
    ev.state = state;
    ev.row_id = match.row_id;
    ev.fallback = match.fallback;
    for (Action a : match.actions) {
        const int idx = static_cast<int>(a);
        if (a == Action::a5 && !a5_persisted) {
            ev.suppressed.push_back({a, "persistence"});
            continue;
        }
        if (action_last_ms[idx] >= 0 && t_ms - action_last_ms[idx] < policy.cooldown_ms) {
            ev.suppressed.push_back({a, "cooldown"});
            continue;
        }
        ev.actions.push_back(a);
    }
    if (ev.actions.empty()) return std::nullopt;
    for (Action a : ev.actions) action_last_ms[static_cast<int>(a)] = t_ms;
    return ev;
}

}  // namespace

ReactiveEngine::ReactiveEngine(const Baselines& base, const ScenarioTable& table,
                               const EnginePolicy& policy)
    : base_(base), table_(&table), policy_(policy) {}

std::optional<FeedbackEvent> ReactiveEngine::step(const MetricFrame& frame) {
    if (frame.start_ms <= last_start_ms_)
        fail(Err::out_of_order, "frame at " + std::to_string(frame.start_ms) +
                                    " does not advance past " +
                                    std::to_string(last_start_ms_));
    last_start_ms_ = frame.start_ms;
    const int64_t t = frame.start_ms + frame.window_ms;  // metrics available here

    auto out_of_band = [](double v, const MeanSd& b) {
        return v > b.mean + 2.0 * b.sd || v < b.mean - 2.0 * b.sd;
    };
    bool out[4] = {
        out_of_band(frame.me_a, base_.me_a),
        out_of_band(frame.me_b, base_.me_b),
        policy_.joint_in_trigger && out_of_band(frame.jva, base_.jva),
        policy_.joint_in_trigger && out_of_band(frame.jme, base_.jme),
    };
    bool crossing = false, any_out = false;
    for (int i = 0; i < 4; ++i) {
        crossing |= out[i] && !prev_out_[i];
        any_out |= out[i];
        prev_out_[i] = out[i];
    }

    const DyadState state = discretize_frame(frame, base_);

    // A5 persistence clock: both MEs continuously away from AVG
    const bool extreme = state.me_a != Level::avg && state.me_b != Level::avg;
    if (extreme && extreme_since_ms_ < 0) extreme_since_ms_ = frame.start_ms;
    if (!extreme) extreme_since_ms_ = -1;
    const bool persisted =
        extreme && (t - extreme_since_ms_) >= policy_.persistence_ms;

    const bool refire =
        any_out && (last_emit_ms_ < 0 || t - last_emit_ms_ >= policy_.cooldown_ms);
    if (!crossing && !refire) return std::nullopt;

    auto ev = build_event(state, *table_, policy_, t, FeedbackMode::reactive,
                          persisted, action_last_ms_);
    if (ev) last_emit_ms_ = t;
    return ev;
}

ProactiveEngine::ProactiveEngine(const Baselines& base, const ScenarioTable& table,
                                 const EnginePolicy& policy)
    : base_(base), table_(&table), policy_(policy) {}

std::optional<FeedbackEvent> ProactiveEngine::step(const ForecastFrame& forecast) {
    if (forecast.issue_ms <= last_issue_ms_)
        fail(Err::out_of_order, "forecast at " + std::to_string(forecast.issue_ms) +
                                    " does not advance past " +
                                    std::to_string(last_issue_ms_));
    last_issue_ms_ = forecast.issue_ms;
    const int64_t t = forecast.issue_ms;

    const DyadState state = discretize_forecast(forecast, base_);

    const bool extreme = state.me_a != Level::avg && state.me_b != Level::avg;
    if (extreme && extreme_since_ms_ < 0) extreme_since_ms_ = t;
    if (!extreme) extreme_since_ms_ = -1;
    const bool persisted =
        extreme && (t - extreme_since_ms_) >= policy_.persistence_ms;

    for (const DyadState& want : policy_.desired) {
        if (state_equal(state, want)) return std::nullopt;
    }

    auto ev = build_event(state, *table_, policy_, t, FeedbackMode::proactive,
                          persisted, action_last_ms_);
    if (ev) last_emit_ms_ = t;
    return ev;
}

std::vector<FeedbackEvent> run_feedback(const DyadSession& s, const ScenarioTable& table,
                                        const FeedbackRunOptions& opt,
                                        const Forecaster* forecaster) {
    if (opt.proactive && forecaster == nullptr)
        fail(Err::bad_arg, "proactive mode requires a forecaster");

    const Baselines base = compute_baselines(s, opt.frames);
    const std::vector<MetricFrame> frames = compute_frames(s, opt.frames);

    std::vector<FeedbackEvent> events;
    if (opt.reactive) {
        ReactiveEngine engine(base, table, opt.policy);
        for (const MetricFrame& f : frames) {
            if (auto ev = engine.step(f)) events.push_back(*ev);
        }
    }
    if (opt.proactive) {
        ProactiveEngine engine(base, table, opt.policy);
        // Forecast history reaches back into the calibration segment so the
        // first task windows already have enough lags; forecasts are issued
        // only once the latest window lies in the task segment.
        const std::vector<MetricFrame> hist =
            compute_frames(s, opt.frames, 0, s.meta.duration_ms);
        const size_t k = static_cast<size_t>(forecaster->config().lags);
        for (size_t i = 0; i < hist.size(); ++i) {
            if (i + 1 < k) continue;
            if (hist[i].start_ms + hist[i].window_ms <= s.meta.calibration_end_ms) continue;
            ForecastFrame fc;
            try {
                fc = forecaster->predict({hist.data(), i + 1});
            } catch (const DlError& e) {
                if (e.code() == Err::insufficient_history) continue;  // gap
                throw;
            }
            if (auto ev = engine.step(fc)) events.push_back(*ev);
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const FeedbackEvent& a, const FeedbackEvent& b) {
                         if (a.t_ms != b.t_ms) return a.t_ms < b.t_ms;
                         return static_cast<int>(a.mode) < static_cast<int>(b.mode);
                     });
    return events;
}

std::string events_to_jsonl(const std::vector<FeedbackEvent>& events) {
    std::string out;
    for (const FeedbackEvent& ev : events) {
        nlohmann::ordered_json j;
        j["t_ms"] = ev.t_ms;
        j["mode"] = ev.mode == FeedbackMode::reactive ? "REACTIVE" : "PROACTIVE";
        j["state"] = {{"jva", level_name(ev.state.jva)},
                      {"jme", level_name(ev.state.jme)},
                      {"me_a", level_name(ev.state.me_a)},
                      {"me_b", level_name(ev.state.me_b)}};
        nlohmann::ordered_json actions = nlohmann::ordered_json::array();
        for (Action a : ev.actions) actions.push_back(action_name(a));
        j["actions"] = actions;
        j["row"] = ev.row_id;
        nlohmann::ordered_json sup = nlohmann::ordered_json::array();
        for (const SuppressedAction& s : ev.suppressed)
            sup.push_back({{"action", action_name(s.action)}, {"reason", s.reason}});
        j["suppressed"] = sup;
        if (ev.fallback) j["fallback"] = true;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace dyadlens
