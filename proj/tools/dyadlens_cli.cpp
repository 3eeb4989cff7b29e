// dyadlens command-line front end. Talks to the library exclusively through
// the public C API; everything here is argument plumbing and file output.

#include <dyadlens/dyadlens.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

[[noreturn]] void die(int code, const std::string& msg) {
    std::fprintf(stderr, "dyadlens: %s\n", msg.c_str());
    std::exit(code);
}

int status_exit_code(dl_status st) { return st == DL_ERR_ARG ? kExitUsage : kExitData; }

void check(dl_status st, const std::string& context) {
    if (st == DL_OK) return;
    die(status_exit_code(st), context + ": " + dl_last_error());
}

// Takes ownership of an API string.
std::string take(char* p) {
    std::string s = p == nullptr ? "" : p;
    dl_string_free(p);
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) die(kExitData, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) die(kExitData, "cannot write " + path);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) die(kExitData, "cannot create directory " + dir + ": " + ec.message());
}

// "out/dyad-0001.session.jsonl" -> "dyad-0001"
std::string input_stem(const std::string& path) {
    std::string name = fs::path(path).filename().string();
    for (const char* suffix : {".jsonl", ".session"}) {
        const size_t n = std::strlen(suffix);
        if (name.size() > n && name.compare(name.size() - n, n, suffix) == 0)
            name.resize(name.size() - n);
    }
    return name;
}

struct SessionHandle {
    dl_session* s = nullptr;

    explicit SessionHandle(const std::string& path) {
        check(dl_session_open(path.c_str(), &s), path);
    }
    SessionHandle(const SessionHandle&) = delete;
    SessionHandle& operator=(const SessionHandle&) = delete;
    ~SessionHandle() { dl_session_free(s); }
};

int64_t window_ms_of(double seconds) { return static_cast<int64_t>(std::llround(seconds * 1000.0)); }

// Defaults that a JSON config file (DYADLENS_CONFIG or --config) may override;
// explicit flags win over the file.
struct Defaults {
    json simulate = json::object();
    double window_jva_s = 30.0;
    double window_jme_s = 10.0;
    std::string jme_method = "crqa";
    int max_lag = 10;
    double cooldown_s = 30.0;
    double persistence_s = 60.0;
    std::string feedback_mode = "reactive";
    std::string table;
};

Defaults load_defaults(const std::string& path) {
    Defaults d;
    json j;
    try {
        j = json::parse(slurp(path));
    } catch (const json::exception& e) {
        die(kExitData, path + ": " + e.what());
    }
    if (!j.is_object()) die(kExitData, path + ": config must be a JSON object");
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "simulate") {
                if (!val.is_object()) die(kExitData, path + ": simulate must be an object");
                d.simulate = val;
            } else if (key == "window_jva_s") d.window_jva_s = val.get<double>();
            else if (key == "window_jme_s") d.window_jme_s = val.get<double>();
            else if (key == "jme_method") d.jme_method = val.get<std::string>();
            else if (key == "max_lag") d.max_lag = val.get<int>();
            else if (key == "cooldown_s") d.cooldown_s = val.get<double>();
            else if (key == "persistence_s") d.persistence_s = val.get<double>();
            else if (key == "feedback_mode") d.feedback_mode = val.get<std::string>();
            else if (key == "table") d.table = val.get<std::string>();
            else die(kExitData, path + ": unknown config key: " + key);
        } catch (const json::exception&) {
            die(kExitData, path + ": config key has the wrong type: " + key);
        }
    }
    return d;
}

std::string series_csv(dl_series* s) {
    char* csv = nullptr;
    check(dl_series_csv(s, &csv), "series csv");
    return take(csv);
}

double series_mean_from(dl_series* s, int64_t min_start_ms) {
    const size_t n = dl_series_len(s);
    const int64_t* starts = dl_series_starts(s);
    const double* vals = dl_series_values(s);
    double sum = 0.0;
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        if (starts[i] < min_start_ms) continue;
        sum += vals[i];
        ++k;
    }
    return k == 0 ? 0.0 : sum / static_cast<double>(k);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pair-programming dyad metrics: synthesis, analysis, and feedback replay"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --config appear after the subcommand name
    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file with defaults (env DYADLENS_CONFIG otherwise)");

    // simulate ------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Generate synthetic dyad sessions");
    uint64_t sim_seed = 1;
    std::string sim_mode = "steady";
    double sim_duration = 600.0, sim_calibration = 90.0;
    double sim_focus = 0.75, sim_kappa = 0.0, sim_me_base = 0.45;
    double sim_noise = 0.004, sim_jitter = 1.0;
    std::string sim_dyad_id;
    int sim_n = 1;
    std::string sim_out;
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "Base RNG seed");
    auto* sim_mode_opt =
        sim->add_option("--mode", sim_mode, "Generator regime")
            ->check(CLI::IsMember({"steady", "coupled", "reverse", "correlated", "uncoupled", "drift"}));
    auto* sim_dur_opt = sim->add_option("--duration-s", sim_duration, "Session length in seconds");
    auto* sim_cal_opt =
        sim->add_option("--calibration-s", sim_calibration, "Calibration segment in seconds");
    auto* sim_focus_opt =
        sim->add_option("--shared-focus", sim_focus, "Shared gaze probability in [0,1]");
    auto* sim_kappa_opt = sim->add_option("--kappa", sim_kappa, "Effort coupling weight in [0,1)");
    auto* sim_base_opt = sim->add_option("--me-base", sim_me_base, "Baseline effort level in (0,1)");
    auto* sim_noise_opt = sim->add_option("--noise-sd", sim_noise, "Pupil sensor noise (mm)");
    auto* sim_jitter_opt = sim->add_option("--gaze-jitter", sim_jitter, "Within-cell gaze scatter");
    auto* sim_id_opt = sim->add_option("--dyad-id", sim_dyad_id, "Dyad identifier (single-dyad runs)");
    sim->add_option("--n", sim_n, "Number of dyads (seeds seed..seed+n-1)")
        ->check(CLI::PositiveNumber);
    sim->add_option("-o,--out", sim_out, "Output directory")->required();

    // analyze -------------------------------------------------------------
    auto* ana = app.add_subcommand("analyze", "Write metric series CSVs for sessions");
    std::vector<std::string> ana_inputs;
    double ana_wjva = -1.0, ana_wjme = -1.0;
    std::string ana_method;
    std::string ana_out;
    ana->add_option("sessions", ana_inputs, "Session JSONL files")->required()->expected(-1);
    ana->add_option("--window-jva", ana_wjva, "Attention window in seconds");
    ana->add_option("--window-jme", ana_wjme, "Joint-effort window in seconds");
    ana->add_option("--jme-method", ana_method, "Joint-effort readout")
        ->check(CLI::IsMember({"crqa", "cosine"}));
    ana->add_option("-o,--out", ana_out, "Output directory")->required();

    // episodes ------------------------------------------------------------
    auto* epi = app.add_subcommand("episodes", "Classify effort/attention episodes");
    std::vector<std::string> epi_inputs;
    double epi_wjme = -1.0;
    std::string epi_method;
    std::string epi_out;
    epi->add_option("sessions", epi_inputs, "Session JSONL files")->required()->expected(-1);
    epi->add_option("--window-jme", epi_wjme, "Shared window in seconds");
    epi->add_option("--jme-method", epi_method, "Joint-effort readout")
        ->check(CLI::IsMember({"crqa", "cosine"}));
    epi->add_option("-o,--out", epi_out, "Output directory")->required();

    // causality -----------------------------------------------------------
    auto* cau = app.add_subcommand("causality", "Lagged effort/attention analysis over a cohort");
    std::vector<std::string> cau_inputs;
    int cau_max_lag = -1;
    std::string cau_method;
    std::string cau_out;
    cau->add_option("sessions", cau_inputs, "Session JSONL files")->required()->expected(-1);
    auto* cau_lag_opt = cau->add_option("--max-lag", cau_max_lag, "Largest lag to consider");
    cau->add_option("--jme-method", cau_method, "Joint-effort readout")
        ->check(CLI::IsMember({"crqa", "cosine"}));
    cau->add_option("-o,--out", cau_out, "Output directory")->required();

    // feedback ------------------------------------------------------------
    auto* fbk = app.add_subcommand("feedback", "Replay the feedback engines over a session");
    std::vector<std::string> fbk_inputs;
    std::string fbk_mode;
    std::string fbk_model, fbk_table, fbk_out;
    double fbk_cooldown = -1.0, fbk_persistence = -1.0, fbk_wjme = -1.0;
    std::string fbk_method;
    fbk->add_option("sessions", fbk_inputs, "Session JSONL files")->required()->expected(-1);
    auto* fbk_mode_opt = fbk->add_option("--mode", fbk_mode, "Engine selection")
                             ->check(CLI::IsMember({"reactive", "proactive", "both"}));
    fbk->add_option("--model", fbk_model, "Forecaster model JSON (proactive modes)");
    auto* fbk_table_opt = fbk->add_option("--table", fbk_table, "Scenario table CSV (built-in otherwise)");
    auto* fbk_cd_opt = fbk->add_option("--cooldown-s", fbk_cooldown, "Per-action cooldown in seconds");
    auto* fbk_ps_opt =
        fbk->add_option("--persistence-s", fbk_persistence, "Escalation persistence in seconds");
    fbk->add_option("--window-jme", fbk_wjme, "Metric frame window in seconds");
    fbk->add_option("--jme-method", fbk_method, "Joint-effort readout")
        ->check(CLI::IsMember({"crqa", "cosine"}));
    fbk->add_option("-o,--out", fbk_out, "Output directory (stdout otherwise)");

    // forecast ------------------------------------------------------------
    auto* fct = app.add_subcommand("forecast", "Train or evaluate the metric forecaster");
    fct->require_subcommand(1);
    auto* fct_train = fct->add_subcommand("train", "Fit a model on training sessions");
    std::vector<std::string> train_inputs;
    int train_lags = 6, train_horizon = 3;
    double train_lambda = 1.0, train_wjme = -1.0;
    std::string train_out;
    fct_train->add_option("sessions", train_inputs, "Training session JSONL files")
        ->required()
        ->expected(-1);
    fct_train->add_option("--lags", train_lags, "Autoregressive feature depth");
    fct_train->add_option("--horizon", train_horizon, "Forecast horizon in windows");
    fct_train->add_option("--lambda", train_lambda, "Ridge penalty");
    fct_train->add_option("--window-jme", train_wjme, "Metric frame window in seconds");
    fct_train->add_option("-o,--out", train_out, "Output directory")->required();
    auto* fct_eval = fct->add_subcommand("eval", "Score a model against held-out sessions");
    std::vector<std::string> eval_inputs;
    std::string eval_model, eval_out;
    fct_eval->add_option("sessions", eval_inputs, "Held-out session JSONL files")
        ->required()
        ->expected(-1);
    fct_eval->add_option("--model", eval_model, "Forecaster model JSON")->required();
    fct_eval->add_option("-o,--out", eval_out, "Output directory (stdout otherwise)");

    // compare -------------------------------------------------------------
    auto* cmp = app.add_subcommand("compare", "Group statistics across session cohorts");
    std::vector<std::string> cmp_dirs;
    double cmp_wjva = -1.0, cmp_wjme = -1.0;
    std::string cmp_method;
    std::string cmp_out;
    cmp->add_option("cohorts", cmp_dirs, "Directories of session JSONL files, one per group")
        ->required()
        ->expected(-1);
    cmp->add_option("--window-jva", cmp_wjva, "Attention window in seconds");
    cmp->add_option("--window-jme", cmp_wjme, "Joint-effort window in seconds");
    cmp->add_option("--jme-method", cmp_method, "Joint-effort readout")
        ->check(CLI::IsMember({"crqa", "cosine"}));
    cmp->add_option("-o,--out", cmp_out, "Output directory (stdout otherwise)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    if (config_path.empty()) {
        if (const char* env = std::getenv("DYADLENS_CONFIG"); env != nullptr && *env != '\0')
            config_path = env;
    }
    Defaults d;
    if (!config_path.empty()) d = load_defaults(config_path);

    const double wjva_s = ana_wjva > 0 ? ana_wjva : (cmp_wjva > 0 ? cmp_wjva : d.window_jva_s);
    auto pick_wjme = [&](double flag) { return flag > 0 ? flag : d.window_jme_s; };
    auto pick_method = [&](const std::string& flag) { return flag.empty() ? d.jme_method : flag; };

    if (*sim) {
        ensure_dir(sim_out);
        json base = d.simulate;
        auto set_if = [&base](const CLI::Option* opt, const char* key, auto value) {
            if (opt->count() > 0) base[key] = value;
        };
        set_if(sim_mode_opt, "mode", sim_mode);
        set_if(sim_dur_opt, "duration_s", sim_duration);
        set_if(sim_cal_opt, "calibration_s", sim_calibration);
        set_if(sim_focus_opt, "shared_focus_p", sim_focus);
        set_if(sim_kappa_opt, "coupling_kappa", sim_kappa);
        set_if(sim_base_opt, "me_base", sim_me_base);
        set_if(sim_noise_opt, "noise_sd", sim_noise);
        set_if(sim_jitter_opt, "gaze_jitter", sim_jitter);
        uint64_t base_seed = sim_seed;
        if (sim_seed_opt->count() == 0 && base.contains("seed"))
            base_seed = base["seed"].get<uint64_t>();
        std::string single_id = "dyad-0001";
        if (sim_id_opt->count() > 0) single_id = sim_dyad_id;
        else if (base.contains("dyad_id")) single_id = base["dyad_id"].get<std::string>();
        for (int i = 0; i < sim_n; ++i) {
            json cfg = base;
            cfg["seed"] = base_seed + static_cast<uint64_t>(i);
            char numbered[32];
            std::snprintf(numbered, sizeof numbered, "dyad-%04d", i + 1);
            cfg["dyad_id"] = sim_n > 1 ? numbered : single_id.c_str();
            const std::string cfg_text = cfg.dump();
            dl_session* s = nullptr;
            char* truth = nullptr;
            check(dl_simulate(cfg_text.c_str(), &s, &truth), "simulate");
            const std::string id = cfg["dyad_id"].get<std::string>();
            const std::string session_path = (fs::path(sim_out) / (id + ".session.jsonl")).string();
            const std::string truth_path = (fs::path(sim_out) / (id + ".truth.json")).string();
            const dl_status st = dl_session_save(s, session_path.c_str());
            if (st != DL_OK) {
                const std::string msg = dl_last_error();
                dl_session_free(s);
                dl_string_free(truth);
                die(status_exit_code(st), session_path + ": " + msg);
            }
            spill(truth_path, take(truth));
            dl_session_free(s);
            std::printf("wrote %s\n", session_path.c_str());
        }
        return 0;
    }

    if (*ana) {
        ensure_dir(ana_out);
        const int64_t wjva = window_ms_of(wjva_s);
        const int64_t wjme = window_ms_of(pick_wjme(ana_wjme));
        const std::string method = pick_method(ana_method);
        for (const std::string& path : ana_inputs) {
            SessionHandle h(path);
            const std::string stem = input_stem(path);
            dl_series* jva = nullptr;
            check(dl_jva_series(h.s, wjva, &jva), path);
            spill((fs::path(ana_out) / (stem + ".jva.csv")).string(), series_csv(jva));
            dl_series_free(jva);
            for (int part = 0; part < 2; ++part) {
                dl_series* me = nullptr;
                check(dl_me_series(h.s, part, &me), path);
                const std::string name = part == 0 ? ".me_a.csv" : ".me_b.csv";
                spill((fs::path(ana_out) / (stem + name)).string(), series_csv(me));
                dl_series_free(me);
            }
            dl_series* jme = nullptr;
            check(dl_jme_series(h.s, wjme, method.c_str(), &jme), path);
            spill((fs::path(ana_out) / (stem + ".jme.csv")).string(), series_csv(jme));
            dl_series_free(jme);
            std::printf("wrote %s/%s.{jva,me_a,me_b,jme}.csv\n", ana_out.c_str(), stem.c_str());
        }
        return 0;
    }

    if (*epi) {
        ensure_dir(epi_out);
        const int64_t wjme = window_ms_of(pick_wjme(epi_wjme));
        const std::string method = pick_method(epi_method);
        for (const std::string& path : epi_inputs) {
            SessionHandle h(path);
            char* out = nullptr;
            check(dl_episodes_json(h.s, wjme, method.c_str(), &out), path);
            const json rep = json::parse(take(out));
            std::string csv = "start_ms,type\n";
            for (const auto& e : rep["episodes"])
                csv += std::to_string(e["start_ms"].get<int64_t>()) + "," +
                       e["type"].get<std::string>() + "\n";
            const std::string stem = input_stem(path);
            spill((fs::path(epi_out) / (stem + ".episodes.csv")).string(), csv);
            ordered_json props;
            props["window_ms"] = rep["window_ms"];
            props["jme_method"] = rep["jme_method"];
            props["n"] = rep["n"];
            props["proportions"] = rep["proportions"];
            spill((fs::path(epi_out) / (stem + ".proportions.json")).string(),
                  props.dump(2) + "\n");
            std::printf("wrote %s/%s.episodes.csv\n", epi_out.c_str(), stem.c_str());
        }
        return 0;
    }

    if (*cau) {
        ensure_dir(cau_out);
        const int max_lag = cau_lag_opt->count() > 0 ? cau_max_lag : d.max_lag;
        const std::string method = cau_method.empty() ? "cosine" : cau_method;
        std::string scatter = "dyad_id,significance,effect_size,quadrant,lag\n";
        int counts[4] = {0, 0, 0, 0};
        ordered_json dyads = json::array();
        for (const std::string& path : cau_inputs) {
            SessionHandle h(path);
            char* out = nullptr;
            check(dl_causality_json(h.s, max_lag, method.c_str(), &out), path);
            const ordered_json r = ordered_json::parse(take(out));
            char row[256];
            std::snprintf(row, sizeof row, "%s,%.10g,%.10g,%d,%d\n",
                          r["dyad_id"].get<std::string>().c_str(),
                          r["significance"].get<double>(), r["effect_size"].get<double>(),
                          r["quadrant"].get<int>(), r["lag"].get<int>());
            scatter += row;
            counts[r["quadrant"].get<int>() - 1]++;
            dyads.push_back(r);
        }
        spill((fs::path(cau_out) / "scatter.csv").string(), scatter);
        ordered_json summary;
        summary["n"] = cau_inputs.size();
        summary["max_lag"] = max_lag;
        summary["jme_method"] = method;
        summary["quadrant_counts"] = {{"I", counts[0]}, {"II", counts[1]},
                                      {"III", counts[2]}, {"IV", counts[3]}};
        summary["dyads"] = dyads;
        spill((fs::path(cau_out) / "quadrants.json").string(), summary.dump(2) + "\n");
        std::printf("wrote %s/scatter.csv and %s/quadrants.json\n", cau_out.c_str(),
                    cau_out.c_str());
        return 0;
    }

    if (*fbk) {
        const std::string mode = fbk_mode_opt->count() > 0 ? fbk_mode : d.feedback_mode;
        const std::string table_path = fbk_table_opt->count() > 0 ? fbk_table : d.table;
        dl_table* table = nullptr;
        check(dl_table_load(table_path.empty() ? nullptr : table_path.c_str(), &table),
              table_path.empty() ? "built-in table" : table_path);
        dl_forecaster* model = nullptr;
        if (mode != "reactive") {
            if (fbk_model.empty()) {
                dl_table_free(table);
                die(kExitUsage, "--mode " + mode + " requires --model");
            }
            check(dl_forecaster_from_json(slurp(fbk_model).c_str(), &model), fbk_model);
        }
        json opts;
        opts["reactive"] = mode != "proactive";
        opts["proactive"] = mode != "reactive";
        opts["cooldown_ms"] =
            window_ms_of(fbk_cd_opt->count() > 0 ? fbk_cooldown : d.cooldown_s);
        opts["persistence_ms"] =
            window_ms_of(fbk_ps_opt->count() > 0 ? fbk_persistence : d.persistence_s);
        if (fbk_wjme > 0) opts["window_ms"] = window_ms_of(fbk_wjme);
        opts["jme_method"] = pick_method(fbk_method);
        if (!fbk_out.empty()) ensure_dir(fbk_out);
        for (const std::string& path : fbk_inputs) {
            SessionHandle h(path);
            char* events = nullptr;
            const dl_status st =
                dl_feedback_run(h.s, table, opts.dump().c_str(), model, &events);
            if (st != DL_OK) {
                const std::string msg = dl_last_error();
                dl_table_free(table);
                dl_forecaster_free(model);
                die(status_exit_code(st), path + ": " + msg);
            }
            const std::string text = take(events);
            if (fbk_out.empty()) {
                std::fputs(text.c_str(), stdout);
            } else {
                const std::string stem = input_stem(path);
                spill((fs::path(fbk_out) / (stem + ".events.jsonl")).string(), text);
                std::printf("wrote %s/%s.events.jsonl\n", fbk_out.c_str(), stem.c_str());
            }
        }
        dl_table_free(table);
        dl_forecaster_free(model);
        return 0;
    }

    if (*fct_train) {
        ensure_dir(train_out);
        std::vector<SessionHandle*> handles;
        std::vector<const dl_session*> sessions;
        for (const std::string& path : train_inputs) {
            handles.push_back(new SessionHandle(path));
            sessions.push_back(handles.back()->s);
        }
        json cfg;
        cfg["lags"] = train_lags;
        cfg["horizon_windows"] = train_horizon;
        cfg["ridge_lambda"] = train_lambda;
        if (train_wjme > 0) cfg["window_ms"] = window_ms_of(train_wjme);
        dl_forecaster* model = nullptr;
        check(dl_forecaster_fit(sessions.data(), sessions.size(), cfg.dump().c_str(), &model),
              "forecast train");
        char* mj = nullptr;
        check(dl_forecaster_to_json(model, &mj), "forecast train");
        const std::string model_path = (fs::path(train_out) / "model.json").string();
        spill(model_path, take(mj));
        char* ev = nullptr;
        check(dl_forecaster_eval_json(model, sessions.data(), sessions.size(), &ev),
              "forecast train");
        spill((fs::path(train_out) / "train_skill.json").string(), take(ev));
        dl_forecaster_free(model);
        for (SessionHandle* h : handles) delete h;
        std::printf("wrote %s\n", model_path.c_str());
        return 0;
    }

    if (*fct_eval) {
        dl_forecaster* model = nullptr;
        check(dl_forecaster_from_json(slurp(eval_model).c_str(), &model), eval_model);
        std::vector<SessionHandle*> handles;
        std::vector<const dl_session*> sessions;
        for (const std::string& path : eval_inputs) {
            handles.push_back(new SessionHandle(path));
            sessions.push_back(handles.back()->s);
        }
        char* ev = nullptr;
        const dl_status st =
            dl_forecaster_eval_json(model, sessions.data(), sessions.size(), &ev);
        if (st != DL_OK) {
            const std::string msg = dl_last_error();
            dl_forecaster_free(model);
            die(status_exit_code(st), "forecast eval: " + msg);
        }
        const std::string report = take(ev);
        if (eval_out.empty()) {
            std::fputs(report.c_str(), stdout);
        } else {
            ensure_dir(eval_out);
            spill((fs::path(eval_out) / "skill.json").string(), report);
            std::printf("wrote %s/skill.json\n", eval_out.c_str());
        }
        dl_forecaster_free(model);
        for (SessionHandle* h : handles) delete h;
        return 0;
    }

    if (*cmp) {
        const int64_t wjva = window_ms_of(wjva_s);
        const int64_t wjme = window_ms_of(pick_wjme(cmp_wjme));
        const std::string method = pick_method(cmp_method);
        static const char* kMetrics[5] = {"jva", "jme", "me_a", "me_b", "bugs_solved"};
        ordered_json groups = json::array();
        std::vector<std::vector<std::vector<double>>> values(5);  // metric -> group -> sessions
        for (const std::string& dir : cmp_dirs) {
            std::vector<std::string> files;
            std::error_code ec;
            for (const auto& entry : fs::directory_iterator(dir, ec))
                if (entry.path().extension() == ".jsonl") files.push_back(entry.path().string());
            if (ec) die(kExitData, dir + ": " + ec.message());
            if (files.empty()) die(kExitData, dir + ": no session files");
            std::sort(files.begin(), files.end());
            std::vector<std::vector<double>> group(5);
            for (const std::string& path : files) {
                SessionHandle h(path);
                char* mj = nullptr;
                check(dl_session_meta_json(h.s, &mj), path);
                const json meta = json::parse(take(mj));
                const int64_t cal_end = meta["calibration_end_ms"].get<int64_t>();
                dl_series* jva = nullptr;
                check(dl_jva_series(h.s, wjva, &jva), path);
                group[0].push_back(series_mean_from(jva, 0));
                dl_series_free(jva);
                dl_series* jme = nullptr;
                check(dl_jme_series(h.s, wjme, method.c_str(), &jme), path);
                group[1].push_back(series_mean_from(jme, 0));
                dl_series_free(jme);
                for (int part = 0; part < 2; ++part) {
                    dl_series* me = nullptr;
                    check(dl_me_series(h.s, part, &me), path);
                    group[2 + part].push_back(series_mean_from(me, cal_end));
                    dl_series_free(me);
                }
                group[4].push_back(meta["bugs_solved"].get<double>());
            }
            ordered_json g;
            g["name"] = fs::path(dir).filename().string();
            g["n"] = files.size();
            for (int m = 0; m < 5; ++m) {
                double sum = 0.0;
                for (double v : group[m]) sum += v;
                g["means"][kMetrics[m]] = sum / static_cast<double>(group[m].size());
                values[m].push_back(group[m]);
            }
            groups.push_back(g);
        }
        ordered_json tests;
        std::vector<double> anova_p;
        for (int m = 0; m < 5; ++m) {
            const json groups_json = values[m];
            ordered_json per;
            for (const char* kind : {"anova", "welch", "levene"}) {
                char* out = nullptr;
                check(dl_anova_json(kind, groups_json.dump().c_str(), &out),
                      std::string("compare ") + kMetrics[m]);
                per[kind] = ordered_json::parse(take(out));
            }
            anova_p.push_back(per["anova"]["p"].get<double>());
            tests[kMetrics[m]] = per;
        }
        std::vector<double> adjusted(anova_p.size());
        check(dl_bonferroni(anova_p.data(), anova_p.size(), 0, adjusted.data()), "compare");
        for (size_t m = 0; m < adjusted.size(); ++m)
            tests[kMetrics[m]]["anova"]["p_bonferroni"] = adjusted[m];
        ordered_json report;
        report["groups"] = groups;
        report["tests"] = tests;
        const std::string text = report.dump(2) + "\n";
        if (cmp_out.empty()) {
            std::fputs(text.c_str(), stdout);
        } else {
            ensure_dir(cmp_out);
            spill((fs::path(cmp_out) / "compare.json").string(), text);
            std::printf("wrote %s/compare.json\n", cmp_out.c_str());
        }
        return 0;
    }

    return kExitUsage;
}
