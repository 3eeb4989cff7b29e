#include <dyadlens/dyadlens.h>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/attention.hpp"
#include "core/causality.hpp"
#include "core/effort.hpp"
#include "core/episodes.hpp"
#include "core/error.hpp"
#include "core/feedback.hpp"
#include "core/forecast.hpp"
#include "core/session.hpp"
#include "core/stats.hpp"
#include "core/synth.hpp"

using namespace dyadlens;
using nlohmann::json;
using nlohmann::ordered_json;

struct dl_session {
    DyadSession s;
};
struct dl_series {
    MetricSeries s;
};
struct dl_table {
    ScenarioTable t;
};
struct dl_forecaster {
    Forecaster f;
};

namespace {

thread_local std::string t_error;

dl_status map_err(Err e) {
    switch (e) {
        case Err::ok: return DL_OK;
        case Err::io: return DL_ERR_IO;
        case Err::parse: return DL_ERR_PARSE;
        case Err::schema:
        case Err::missing_meta:
        case Err::bad_table: return DL_ERR_SCHEMA;
        case Err::bad_arg:
        case Err::usage: return DL_ERR_ARG;
        case Err::no_match: return DL_ERR_NO_MATCH;
        case Err::internal: return DL_ERR_INTERNAL;
        default: return DL_ERR_DATA;
    }
}

template <typename F>
dl_status guard(F&& fn) {
    try {
        fn();
        t_error.clear();
        return DL_OK;
    } catch (const DlError& e) {
        t_error = e.what();
        return map_err(e.code());
    } catch (const json::exception& e) {
        t_error = e.what();
        return DL_ERR_PARSE;
    } catch (const std::exception& e) {
        t_error = e.what();
        return DL_ERR_INTERNAL;
    } catch (...) {
        t_error = "unknown error";
        return DL_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (p == nullptr) fail(Err::bad_arg, std::string(what) + " must not be null");
}

// Released by dl_string_free.
char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p == nullptr) fail(Err::internal, "out of memory");
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

std::string opt_text(const char* s, const char* fallback) {
    return (s == nullptr || *s == '\0') ? fallback : s;
}

JmeMethod jme_method_from(const std::string& name) {
    if (name == "crqa") return JmeMethod::crqa;
    if (name == "cosine") return JmeMethod::cosine;
    fail(Err::bad_arg, "unknown jme method: " + name);
}

Level level_from(std::string name) {
    for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (name == "L" || name == "LOW") return Level::low;
    if (name == "AVG" || name == "A") return Level::avg;
    if (name == "H" || name == "HIGH") return Level::high;
    fail(Err::bad_arg, "unknown level: " + name);
}

const char* issue_kind_name(IssueKind k) {
    switch (k) {
        case IssueKind::gap: return "gap";
        case IssueKind::low_valid: return "low_valid";
        case IssueKind::short_calibration: return "short_calibration";
        case IssueKind::non_monotonic: return "non_monotonic";
    }
    return "?";
}

json parse_object(const char* text, const char* what) {
    json j = json::parse(opt_text(text, "{}"));
    if (!j.is_object()) fail(Err::bad_arg, std::string(what) + " must be a JSON object");
    return j;
}

std::vector<std::vector<MetricFrame>> session_frames(const dl_session* const* sessions,
                                                     size_t n, const FrameOptions& fo) {
    need(sessions, "sessions");
    std::vector<std::vector<MetricFrame>> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        need(sessions[i], "sessions[i]");
        const DyadSession& s = sessions[i]->s;
        out.push_back(compute_frames(s, fo, 0, s.meta.duration_ms));
    }
    return out;
}

}  // namespace

extern "C" {

const char* dl_version(void) { return "0.1.0"; }

const char* dl_last_error(void) { return t_error.c_str(); }

void dl_string_free(char* s) { std::free(s); }

/* ---- sessions ---------------------------------------------------------- */

dl_status dl_session_open(const char* path, dl_session** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new dl_session{load_session(path)};
    });
}

dl_status dl_session_parse(const char* text, dl_session** out) {
    return guard([&] {
        need(text, "text");
        need(out, "out");
        *out = new dl_session{parse_session_text(text)};
    });
}

dl_status dl_session_save(const dl_session* s, const char* path) {
    return guard([&] {
        need(s, "session");
        need(path, "path");
        save_session(s->s, path);
    });
}

void dl_session_free(dl_session* s) { delete s; }

dl_status dl_session_meta_json(const dl_session* s, char** out_json) {
    return guard([&] {
        need(s, "session");
        need(out_json, "out_json");
        const SessionMeta& m = s->s.meta;
        ordered_json j;
        j["session_id"] = m.session_id;
        j["dyad_id"] = m.dyad_id;
        j["calibration_end_ms"] = m.calibration_end_ms;
        j["duration_ms"] = m.duration_ms;
        j["screen_w_px"] = m.screen_w_px;
        j["screen_h_px"] = m.screen_h_px;
        j["gaze_rate_hz"] = m.gaze_rate_hz;
        j["pupil_rate_hz"] = m.pupil_rate_hz;
        j["bugs_solved"] = m.bugs_solved;
        for (Participant p : {Participant::a, Participant::b}) {
            const ParticipantStreams& st = s->s.streams(p);
            ordered_json c;
            c["gaze"] = st.gaze.size();
            c["pupil"] = st.pupil.size();
            c["viewport"] = st.viewport.size();
            j["samples"][std::string(1, participant_letter(p))] = c;
        }
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

dl_status dl_session_validate_json(const dl_session* s, char** out_json) {
    return guard([&] {
        need(s, "session");
        need(out_json, "out_json");
        const std::vector<Issue> issues = validate_session(s->s);
        ordered_json j;
        bool fatal = false;
        j["issues"] = json::array();
        for (const Issue& is : issues) {
            fatal = fatal || is.fatal;
            ordered_json r;
            r["kind"] = issue_kind_name(is.kind);
            r["fatal"] = is.fatal;
            r["participant"] = std::string(1, participant_letter(is.participant));
            r["stream"] = is.stream;
            r["span_start_ms"] = is.span_start_ms;
            r["span_end_ms"] = is.span_end_ms;
            r["message"] = is.message;
            j["issues"].push_back(std::move(r));
        }
        j["fatal"] = fatal;
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

dl_status dl_simulate(const char* config_json, dl_session** out, char** out_truth_json) {
    return guard([&] {
        need(out, "out");
        const SynthConfig cfg = synth_config_from_json(opt_text(config_json, "{}"));
        GroundTruth truth;
        auto* h = new dl_session{gen_dyad(cfg, &truth)};
        if (out_truth_json != nullptr) {
            try {
                *out_truth_json = dup_string(truth_to_json(truth));
            } catch (...) {
                delete h;
                throw;
            }
        }
        *out = h;
    });
}

/* ---- metric series ----------------------------------------------------- */

dl_status dl_jva_series(const dl_session* s, int64_t window_ms, dl_series** out) {
    return guard([&] {
        need(s, "session");
        need(out, "out");
        JvaOptions opt;
        if (window_ms > 0) opt.window_ms = window_ms;
        *out = new dl_series{jva_series(s->s, opt)};
    });
}

dl_status dl_me_series(const dl_session* s, int participant, dl_series** out) {
    return guard([&] {
        need(s, "session");
        need(out, "out");
        if (participant != 0 && participant != 1)
            fail(Err::bad_arg, "participant must be 0 (A) or 1 (B)");
        const Participant p = participant == 0 ? Participant::a : Participant::b;
        *out = new dl_series{me_series(s->s, p)};
    });
}

dl_status dl_jme_series(const dl_session* s, int64_t window_ms, const char* method,
                        dl_series** out) {
    return guard([&] {
        need(s, "session");
        need(out, "out");
        JmeOptions opt;
        if (window_ms > 0) opt.window_ms = window_ms;
        opt.method = jme_method_from(opt_text(method, "crqa"));
        *out = new dl_series{jme_series(s->s, opt)};
    });
}

size_t dl_series_len(const dl_series* s) { return s == nullptr ? 0 : s->s.size(); }

const char* dl_series_name(const dl_series* s) {
    return s == nullptr ? "" : s->s.name.c_str();
}

int64_t dl_series_window_ms(const dl_series* s) {
    return s == nullptr ? 0 : s->s.window_ms;
}

const int64_t* dl_series_starts(const dl_series* s) {
    return s == nullptr ? nullptr : s->s.start_ms.data();
}

const double* dl_series_values(const dl_series* s) {
    return s == nullptr ? nullptr : s->s.value.data();
}

dl_status dl_series_csv(const dl_series* s, char** out_csv) {
    return guard([&] {
        need(s, "series");
        need(out_csv, "out_csv");
        std::string csv = "start_ms," + s->s.name + "\n";
        char buf[64];
        for (size_t i = 0; i < s->s.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%lld,%.10g\n",
                          static_cast<long long>(s->s.start_ms[i]), s->s.value[i]);
            csv += buf;
        }
        *out_csv = dup_string(csv);
    });
}

void dl_series_free(dl_series* s) { delete s; }

/* ---- session analyses -------------------------------------------------- */

dl_status dl_episodes_json(const dl_session* s, int64_t window_ms, const char* jme_method,
                           char** out_json) {
    return guard([&] {
        need(s, "session");
        need(out_json, "out_json");
        JmeOptions jme_opt;
        if (window_ms > 0) jme_opt.window_ms = window_ms;
        jme_opt.method = jme_method_from(opt_text(jme_method, "crqa"));
        const MetricSeries jme = jme_series(s->s, jme_opt);
        const MetricSeries jva = jva_series(s->s, {.grid = {}, .window_ms = jme_opt.window_ms});
        const std::vector<Episode> eps = classify_episodes(jme, jva);
        const EpisodeProportions props = episode_proportions(eps);
        ordered_json j;
        j["window_ms"] = jme_opt.window_ms;
        j["jme_method"] = jme_opt.method == JmeMethod::crqa ? "crqa" : "cosine";
        j["n"] = eps.size();
        j["episodes"] = json::array();
        for (const Episode& e : eps)
            j["episodes"].push_back({{"start_ms", e.window_start_ms},
                                     {"type", episode_name(e.type)}});
        for (EpisodeType t : {EpisodeType::hh, EpisodeType::hl, EpisodeType::lh, EpisodeType::ll})
            j["proportions"][episode_name(t)] = props[t];
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

dl_status dl_causality_json(const dl_session* s, int max_lag, const char* jme_method,
                            char** out_json) {
    return guard([&] {
        need(s, "session");
        need(out_json, "out_json");
        JmeOptions jme_opt;
        jme_opt.method = jme_method_from(opt_text(jme_method, "cosine"));
        const CausalityResult r =
            session_causality(s->s, max_lag > 0 ? max_lag : 10, jme_opt);
        ordered_json j;
        j["dyad_id"] = s->s.meta.dyad_id;
        j["eta2_xy"] = r.eta2_xy;
        j["eta2_yx"] = r.eta2_yx;
        j["eta2_corr"] = r.eta2_corr;
        j["effect_size"] = r.effect;
        j["significance"] = r.significance;
        j["lag"] = r.lag;
        j["quadrant"] = r.quadrant;
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

/* ---- scenario table and feedback --------------------------------------- */

dl_status dl_table_load(const char* path, dl_table** out) {
    return guard([&] {
        need(out, "out");
        const std::string p = opt_text(path, "");
        *out = new dl_table{p.empty() ? builtin_scenario_table() : load_scenario_table(p)};
    });
}

void dl_table_free(dl_table* t) { delete t; }

dl_status dl_table_audit_json(const dl_table* t, char** out_json) {
    return guard([&] {
        need(t, "table");
        need(out_json, "out_json");
        const std::vector<TableAuditGroup> groups = audit_scenario_table(t->t);
        ordered_json j;
        j["n_rows"] = t->t.rows.size();
        j["duplicate_patterns"] = json::array();
        bool any_conflict = false;
        for (const TableAuditGroup& g : groups) {
            any_conflict = any_conflict || g.conflicting;
            j["duplicate_patterns"].push_back({{"pattern", g.pattern},
                                               {"row_ids", g.row_ids},
                                               {"conflicting", g.conflicting}});
        }
        j["conflicting"] = any_conflict;
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

dl_status dl_table_match_json(const dl_table* t, const char* state_json, char** out_json) {
    return guard([&] {
        need(t, "table");
        need(state_json, "state_json");
        need(out_json, "out_json");
        const json in = parse_object(state_json, "state");
        DyadState st;
        for (const auto& [key, val] : in.items()) {
            if (!val.is_string()) fail(Err::bad_arg, "state values must be strings");
            const Level lv = level_from(val.get<std::string>());
            if (key == "jva") st.jva = lv;
            else if (key == "jme") st.jme = lv;
            else if (key == "me_a" || key == "me1") st.me_a = lv;
            else if (key == "me_b" || key == "me2") st.me_b = lv;
            else fail(Err::bad_arg, "unknown state key: " + key);
        }
        const MatchResult r = match_scenario(st, t->t);
        ordered_json j;
        j["actions"] = json::array();
        for (Action a : r.actions) j["actions"].push_back(action_name(a));
        j["row_id"] = r.row_id;
        j["fallback"] = r.fallback;
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

dl_status dl_feedback_run(const dl_session* s, const dl_table* t, const char* options_json,
                          const dl_forecaster* forecaster, char** out_jsonl) {
    return guard([&] {
        need(s, "session");
        need(t, "table");
        need(out_jsonl, "out_jsonl");
        FeedbackRunOptions opt;
        const json in = parse_object(options_json, "options");
        for (const auto& [key, val] : in.items()) {
            try {
                if (key == "window_ms") opt.frames.window_ms = val.get<int64_t>();
                else if (key == "jme_method")
                    opt.frames.jme_method = jme_method_from(val.get<std::string>());
                else if (key == "n_bins") opt.frames.n_bins = val.get<int>();
                else if (key == "cooldown_ms") opt.policy.cooldown_ms = val.get<int64_t>();
                else if (key == "persistence_ms") opt.policy.persistence_ms = val.get<int64_t>();
                else if (key == "joint_in_trigger")
                    opt.policy.joint_in_trigger = val.get<bool>();
                else if (key == "reactive") opt.reactive = val.get<bool>();
                else if (key == "proactive") opt.proactive = val.get<bool>();
                else fail(Err::bad_arg, "unknown option: " + key);
            } catch (const json::exception&) {
                fail(Err::bad_arg, "option has the wrong type: " + key);
            }
        }
        if (opt.proactive && forecaster == nullptr)
            fail(Err::bad_arg, "proactive mode needs a forecaster");
        const std::vector<FeedbackEvent> events =
            run_feedback(s->s, t->t, opt, forecaster == nullptr ? nullptr : &forecaster->f);
        *out_jsonl = dup_string(events_to_jsonl(events));
    });
}

/* ---- forecasting -------------------------------------------------------- */

dl_status dl_forecaster_fit(const dl_session* const* sessions, size_t n,
                            const char* config_json, dl_forecaster** out) {
    return guard([&] {
        need(out, "out");
        ForecastConfig cfg;
        const json in = parse_object(config_json, "config");
        for (const auto& [key, val] : in.items()) {
            try {
                if (key == "lags") cfg.lags = val.get<int>();
                else if (key == "horizon_windows") cfg.horizon_windows = val.get<int>();
                else if (key == "ridge_lambda") cfg.ridge_lambda = val.get<double>();
                else if (key == "window_ms") cfg.window_ms = val.get<int64_t>();
                else fail(Err::bad_arg, "unknown config key: " + key);
            } catch (const json::exception&) {
                fail(Err::bad_arg, "config key has the wrong type: " + key);
            }
        }
        FrameOptions fo;
        fo.window_ms = cfg.window_ms;
        *out = new dl_forecaster{Forecaster::fit(session_frames(sessions, n, fo), cfg)};
    });
}

dl_status dl_forecaster_from_json(const char* text, dl_forecaster** out) {
    return guard([&] {
        need(text, "text");
        need(out, "out");
        *out = new dl_forecaster{Forecaster::from_json(text)};
    });
}

dl_status dl_forecaster_to_json(const dl_forecaster* f, char** out_json) {
    return guard([&] {
        need(f, "forecaster");
        need(out_json, "out_json");
        *out_json = dup_string(f->f.to_json());
    });
}

dl_status dl_forecaster_eval_json(const dl_forecaster* f, const dl_session* const* sessions,
                                  size_t n, char** out_json) {
    return guard([&] {
        need(f, "forecaster");
        need(out_json, "out_json");
        FrameOptions fo;
        fo.window_ms = f->f.config().window_ms;
        const Forecaster::Eval ev = f->f.evaluate(session_frames(sessions, n, fo));
        const auto metric_json = [](const Forecaster::MetricEval& m) {
            return ordered_json{{"mae", m.mae},
                                {"mae_persistence", m.mae_persistence},
                                {"skill", m.skill},
                                {"n", m.n}};
        };
        ordered_json j;
        j["model_id"] = f->f.model_id();
        static const char* kMetric[4] = {"jva", "jme", "me_a", "me_b"};
        for (int i = 0; i < 4; ++i) j["per_metric"][kMetric[i]] = metric_json(ev.per_metric[i]);
        j["overall"] = metric_json(ev.overall);
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

void dl_forecaster_free(dl_forecaster* f) { delete f; }

/* ---- statistics --------------------------------------------------------- */

dl_status dl_f_cdf(double x, double df1, double df2, double* out) {
    return guard([&] {
        need(out, "out");
        *out = f_cdf(x, df1, df2);
    });
}

dl_status dl_anova_json(const char* kind, const char* groups_json, char** out_json) {
    return guard([&] {
        need(groups_json, "groups_json");
        need(out_json, "out_json");
        const json in = json::parse(groups_json);
        if (!in.is_array()) fail(Err::bad_arg, "groups must be a JSON array of arrays");
        std::vector<std::vector<double>> groups;
        for (const auto& g : in) {
            if (!g.is_array()) fail(Err::bad_arg, "groups must be a JSON array of arrays");
            groups.push_back(g.get<std::vector<double>>());
        }
        const std::string k = opt_text(kind, "anova");
        AnovaResult r;
        if (k == "anova") r = one_way_anova(groups);
        else if (k == "welch") r = welch_anova(groups);
        else if (k == "levene") r = levene_bf(groups);
        else fail(Err::bad_arg, "unknown test kind: " + k);
        ordered_json j;
        j["kind"] = k;
        j["f"] = r.f;
        j["df1"] = r.df1;
        j["df2"] = r.df2;
        j["p"] = r.p;
        *out_json = dup_string(j.dump(2) + "\n");
    });
}

dl_status dl_bonferroni(const double* p, size_t n, int m, double* out) {
    return guard([&] {
        need(p, "p");
        need(out, "out");
        const std::vector<double> adj = bonferroni_adjust({p, n}, m > 0 ? m : 0);
        std::memcpy(out, adj.data(), n * sizeof(double));
    });
}

}  // extern "C"
