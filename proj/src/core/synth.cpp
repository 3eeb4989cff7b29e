#include "synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace dyadlens {

namespace {

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// Stationary unit-variance AR(1) path.
std::vector<double> ar1_path(Rng& rng, double phi, size_t n) {
    std::vector<double> u(n);
    if (n == 0) return u;
    const double innov = std::sqrt(std::max(0.0, 1.0 - phi * phi));
    u[0] = rng.normal();
    for (size_t i = 1; i < n; ++i) u[i] = phi * u[i - 1] + innov * rng.normal();
    return u;
}

struct BlinkSpan {
    int64_t start_ms;
    int64_t end_ms;
};

std::vector<BlinkSpan> blink_schedule(Rng& rng, const SynthConfig& cfg, int64_t dur_ms) {
    std::vector<BlinkSpan> out;
    double t = 1000.0 * (cfg.blink_gap_s_min +
                         rng.uniform() * (cfg.blink_gap_s_max - cfg.blink_gap_s_min));
    while (t < static_cast<double>(dur_ms)) {
        const double len = cfg.blink_len_ms_min +
                           rng.uniform() * (cfg.blink_len_ms_max - cfg.blink_len_ms_min);
        out.push_back({static_cast<int64_t>(t), static_cast<int64_t>(t + len)});
        t += len + 1000.0 * (cfg.blink_gap_s_min +
                             rng.uniform() * (cfg.blink_gap_s_max - cfg.blink_gap_s_min));
    }
    return out;
}

// Per-second plan of both efforts and the shared-focus probability, stepped
// in effort blocks. Steady mode follows the documented latent structure
// (B tracks A's previous block with weight coupling_kappa). The causality
// modes put the pair in lockstep on one shared level path and stagger that
// path against the gaze-share schedule by one block, in the direction the
// mode names.
struct LatentPlan {
    std::vector<double> e_a;
    std::vector<double> e_b;
    std::vector<double> p_share;
};

LatentPlan gen_latents(const SynthConfig& cfg, size_t n_sec, size_t cal_sec) {
    Rng rng_drv(cfg.seed + 10);
    Rng rng_a(cfg.seed + 12);
    Rng rng_b(cfg.seed + 13);

    const size_t block_s = static_cast<size_t>(cfg.effort_window_s);
    const size_t n_blk = n_sec / block_s + 3;
    const auto drv = ar1_path(rng_drv, cfg.phi, n_blk);
    const auto own_a = ar1_path(rng_a, cfg.phi, n_blk);
    const auto own_b = ar1_path(rng_b, cfg.phi, n_blk);
    // Steady mode runs the latent efforts per second: the effort estimator
    // integrates over whole blocks, so only sub-block variation leaves a
    // trace that scale-free readouts of the two series can compare.
    constexpr double kSecondPhi = 0.92;
    Rng rng_sa(cfg.seed + 14);
    Rng rng_sb(cfg.seed + 15);
    const auto sec_a = ar1_path(rng_sa, kSecondPhi, n_sec + 2);
    const auto sec_b = ar1_path(rng_sb, kSecondPhi, n_sec + 2);

    const double b0 = std::log(cfg.me_base / (1.0 - cfg.me_base));
    auto squash = [&](double u) { return 1.0 / (1.0 + std::exp(-(cfg.effort_gain * u + b0))); };
    auto sig01 = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };

    const double kap = cfg.coupling_kappa;
    const double knorm = std::sqrt(kap * kap + (1.0 - kap) * (1.0 - kap));

    LatentPlan plan;
    plan.e_a.resize(n_sec);
    plan.e_b.resize(n_sec);
    plan.p_share.resize(n_sec);

    for (size_t s = 0; s < n_sec; ++s) {
        const bool task = s >= cal_sec;
        // Attention blocks sit on the plain grid (+1 so the lagged block
        // always exists). Effort blocks are shifted by half a block because
        // the effort estimator integrates forward; with this offset a given
        // block index carries the same measurement window in both readouts.
        const size_t ka = s / block_s + 1;
        const size_t ke = (s + block_s / 2) / block_s;
        double u_a = 0.0;
        double u_b = 0.0;
        double p = 0.0;
        if (!task) {
            // Resting baseline: quiet, independent, no shared focus.
            u_a = 0.35 * sec_a[s + 1];
            u_b = 0.35 * sec_b[s + 1];
        } else {
            switch (cfg.mode) {
                case SynthMode::steady:
                    u_a = sec_a[s + 1];
                    u_b = (kap * sec_a[s] + (1.0 - kap) * sec_b[s + 1]) / knorm;
                    p = cfg.shared_focus_p;
                    break;
                case SynthMode::coupled:
                    u_a = drv[ke] + 0.08 * own_a[ke];
                    u_b = drv[ke] + 0.08 * own_b[ke];
                    p = 0.05 + 0.90 * sig01(1.3 * drv[ka - 1]);
                    break;
                case SynthMode::reverse:
                    u_a = drv[ke - 1] + 0.08 * own_a[ke];
                    u_b = drv[ke - 1] + 0.08 * own_b[ke];
                    p = 0.05 + 0.90 * sig01(1.3 * drv[ka]);
                    break;
                case SynthMode::correlated:
                    u_a = drv[ke] + 0.08 * own_a[ke];
                    u_b = drv[ke] + 0.08 * own_b[ke];
                    p = 0.05 + 0.90 * sig01(1.3 * drv[ka]);
                    break;
                case SynthMode::drift:
                    u_a = own_a[ke];
                    u_b = own_b[ke];
                    p = cfg.shared_focus_p;
                    break;
            }
        }
        if (cfg.mode == SynthMode::drift && task) {
            const double since = static_cast<double>(s - cal_sec) - cfg.drift_hold_s;
            const double span =
                static_cast<double>(n_sec - cal_sec) - cfg.drift_hold_s;
            const double frac = clampd(since / std::max(1.0, span), 0.0, 1.0);
            const double level = cfg.drift_low + (cfg.drift_high - cfg.drift_low) * frac;
            plan.e_a[s] = clampd(level + 0.05 * u_a, 0.01, 0.99);
            plan.e_b[s] = clampd(level + 0.05 * u_b, 0.01, 0.99);
        } else {
            plan.e_a[s] = squash(u_a);
            plan.e_b[s] = squash(u_b);
        }
        plan.p_share[s] = p;
    }
    return plan;
}

std::vector<ViewportState> gen_viewport(const SynthConfig& cfg, int64_t dur_ms,
                                        int visible_lines) {
    Rng rng(cfg.seed + 51);
    std::vector<ViewportState> vp;
    const int max_first = std::max(0, cfg.doc_lines - visible_lines);
    int fv = std::min(60, max_first);
    vp.push_back({0, static_cast<double>(fv), cfg.line_height_px, cfg.top_offset_px});
    const int64_t period_ms = static_cast<int64_t>(std::llround(cfg.scroll_period_s)) * 1000;
    for (int64_t t = period_ms; t < dur_ms; t += period_ms) {
        int delta = 0;
        while (delta == 0) delta = static_cast<int>(rng.uniform_int(31)) - 15;
        fv = std::clamp(fv + delta, 0, max_first);
        vp.push_back({t, static_cast<double>(fv), cfg.line_height_px, cfg.top_offset_px});
    }
    return vp;
}

struct CellTarget {
    int line = 0;
    int col = 0;
};

}  // namespace

const char* synth_mode_name(SynthMode m) {
    switch (m) {
        case SynthMode::steady: return "steady";
        case SynthMode::coupled: return "coupled";
        case SynthMode::reverse: return "reverse";
        case SynthMode::correlated: return "correlated";
        case SynthMode::drift: return "drift";
    }
    return "?";
}

SynthMode synth_mode_from(const std::string& name) {
    if (name == "static" || name == "steady") return SynthMode::steady;
    if (name == "coupled") return SynthMode::coupled;
    if (name == "reverse") return SynthMode::reverse;
    if (name == "correlated" || name == "uncoupled") return SynthMode::correlated;
    if (name == "drift") return SynthMode::drift;
    fail(Err::bad_arg, "unknown synth mode: " + name);
}

std::string truth_to_json(const GroundTruth& t) {
    nlohmann::ordered_json j;
    j["mode"] = synth_mode_name(t.mode);
    j["seed"] = t.seed;
    j["coupling_kappa"] = t.coupling_kappa;
    j["shared_focus_p"] = t.shared_focus_p;
    j["lag_s"] = t.lag_s;
    j["planted_direction"] = t.planted_direction;
    j["attention_link"] = t.attention_link;
    j["quadrants"] = t.quadrants;
    j["effort_a"] = t.effort_a;
    j["effort_b"] = t.effort_b;
    return j.dump(2) + "\n";
}

SynthConfig synth_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Err::bad_arg, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(Err::bad_arg, "config must be a JSON object");

    SynthConfig cfg;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "seed") cfg.seed = val.get<uint64_t>();
            else if (key == "mode") cfg.mode = synth_mode_from(val.get<std::string>());
            else if (key == "dyad_id") cfg.dyad_id = val.get<std::string>();
            else if (key == "duration_s") cfg.duration_s = val.get<double>();
            else if (key == "calibration_s") cfg.calibration_s = val.get<double>();
            else if (key == "gaze_rate_hz") cfg.gaze_rate_hz = val.get<double>();
            else if (key == "pupil_rate_hz") cfg.pupil_rate_hz = val.get<double>();
            else if (key == "screen_w_px") cfg.screen_w_px = val.get<double>();
            else if (key == "screen_h_px") cfg.screen_h_px = val.get<double>();
            else if (key == "shared_focus_p") cfg.shared_focus_p = val.get<double>();
            else if (key == "gaze_jitter") cfg.gaze_jitter = val.get<double>();
            else if (key == "effort_window_s") cfg.effort_window_s = val.get<int>();
            else if (key == "phi") cfg.phi = val.get<double>();
            else if (key == "coupling_kappa") cfg.coupling_kappa = val.get<double>();
            else if (key == "me_base") cfg.me_base = val.get<double>();
            else if (key == "effort_gain") cfg.effort_gain = val.get<double>();
            else if (key == "drift_low") cfg.drift_low = val.get<double>();
            else if (key == "drift_high") cfg.drift_high = val.get<double>();
            else if (key == "drift_hold_s") cfg.drift_hold_s = val.get<double>();
            else if (key == "base_mm_a") cfg.base_mm_a = val.get<double>();
            else if (key == "base_mm_b") cfg.base_mm_b = val.get<double>();
            else if (key == "burst_amp_mm") cfg.burst_amp_mm = val.get<double>();
            else if (key == "impulse_rate_min_hz") cfg.impulse_rate_min_hz = val.get<double>();
            else if (key == "impulse_rate_span_hz") cfg.impulse_rate_span_hz = val.get<double>();
            else if (key == "noise_sd") cfg.noise_sd = val.get<double>();
            else if (key == "blink_gap_s_min") cfg.blink_gap_s_min = val.get<double>();
            else if (key == "blink_gap_s_max") cfg.blink_gap_s_max = val.get<double>();
            else if (key == "blink_len_ms_min") cfg.blink_len_ms_min = val.get<double>();
            else if (key == "blink_len_ms_max") cfg.blink_len_ms_max = val.get<double>();
            else if (key == "doc_lines") cfg.doc_lines = val.get<int>();
            else if (key == "line_height_px") cfg.line_height_px = val.get<double>();
            else if (key == "top_offset_px") cfg.top_offset_px = val.get<double>();
            else if (key == "scroll_period_s") cfg.scroll_period_s = val.get<double>();
            else fail(Err::bad_arg, "unknown config key: " + key);
        } catch (const nlohmann::json::exception&) {
            fail(Err::bad_arg, "config key has the wrong type: " + key);
        }
    }
    return cfg;
}

DyadSession gen_dyad(const SynthConfig& cfg, GroundTruth* truth) {
    if (cfg.duration_s < 60.0) fail(Err::bad_arg, "duration must be at least 60 s");
    if (cfg.duration_s <= cfg.calibration_s)
        fail(Err::bad_arg, "duration must exceed the calibration segment");
    if (cfg.calibration_s < 30.0) fail(Err::bad_arg, "calibration must be at least 30 s");
    if (cfg.gaze_rate_hz <= 0.0 || cfg.pupil_rate_hz <= 0.0)
        fail(Err::bad_arg, "sampling rates must be positive");
    if (cfg.effort_window_s <= 0 || static_cast<double>(cfg.effort_window_s) > cfg.calibration_s)
        fail(Err::bad_arg, "effort_window_s must be positive and fit the calibration");
    if (cfg.me_base <= 0.0 || cfg.me_base >= 1.0)
        fail(Err::bad_arg, "me_base must lie in (0, 1)");
    if (cfg.coupling_kappa < 0.0 || cfg.coupling_kappa >= 1.0)
        fail(Err::bad_arg, "coupling_kappa must lie in [0, 1)");
    if (cfg.shared_focus_p < 0.0 || cfg.shared_focus_p > 1.0)
        fail(Err::bad_arg, "shared_focus_p must lie in [0, 1]");

    const int64_t dur_ms = static_cast<int64_t>(std::llround(cfg.duration_s * 1000.0));
    const int64_t cal_ms = static_cast<int64_t>(std::llround(cfg.calibration_s * 1000.0));
    const size_t n_sec = static_cast<size_t>((dur_ms + 999) / 1000);
    const size_t cal_sec = static_cast<size_t>(cal_ms / 1000);

    const auto plan = gen_latents(cfg, n_sec, cal_sec);

    DyadSession s;
    s.meta.session_id = cfg.dyad_id + "-s1";
    s.meta.dyad_id = cfg.dyad_id;
    s.meta.calibration_end_ms = cal_ms;
    s.meta.duration_ms = dur_ms;
    s.meta.screen_w_px = cfg.screen_w_px;
    s.meta.screen_h_px = cfg.screen_h_px;
    s.meta.gaze_rate_hz = cfg.gaze_rate_hz;
    s.meta.pupil_rate_hz = cfg.pupil_rate_hz;

    const int visible_lines = static_cast<int>(
        (cfg.screen_h_px - cfg.top_offset_px) / cfg.line_height_px);
    if (visible_lines < 12) fail(Err::bad_arg, "viewport shows too few lines");

    const auto viewport = gen_viewport(cfg, dur_ms, visible_lines);
    s.a.viewport = viewport;
    s.b.viewport = viewport;

    // Per-second gaze targets.
    Rng rng_choice(cfg.seed + 21);
    std::vector<CellTarget> target_a(n_sec), target_b(n_sec);
    {
        size_t vi = 0;
        for (size_t sec = 0; sec < n_sec; ++sec) {
            const int64_t t_ms = static_cast<int64_t>(sec) * 1000;
            while (vi + 1 < viewport.size() && viewport[vi + 1].t_ms <= t_ms) ++vi;
            const int fv = static_cast<int>(viewport[vi].first_visible_line);
            const int lo = fv + 2;
            const int hi = fv + visible_lines - 4;
            auto pick = [&]() -> CellTarget {
                return {lo + static_cast<int>(rng_choice.uniform_int(
                                 static_cast<uint64_t>(hi - lo + 1))),
                        static_cast<int>(rng_choice.uniform_int(10))};
            };
            const CellTarget shared = pick();
            const bool joint = rng_choice.uniform() < plan.p_share[sec];
            if (joint) {
                target_a[sec] = shared;
                target_b[sec] = shared;
            } else {
                target_a[sec] = pick();
                target_b[sec] = pick();
            }
        }
    }

    auto gen_gaze = [&](const std::vector<CellTarget>& target, uint64_t seed_off) {
        Rng rng(cfg.seed + seed_off);
        std::vector<GazeSample> gaze;
        gaze.reserve(static_cast<size_t>(cfg.duration_s * cfg.gaze_rate_hz) + 8);
        size_t vi = 0;
        for (int64_t i = 0;; ++i) {
            const int64_t t_ms =
                static_cast<int64_t>(std::llround(static_cast<double>(i) * 1000.0 /
                                                  cfg.gaze_rate_hz));
            if (t_ms >= dur_ms) break;
            while (vi + 1 < viewport.size() && viewport[vi + 1].t_ms <= t_ms) ++vi;
            const auto& vp = viewport[vi];
            const auto& tgt = target[static_cast<size_t>(t_ms / 1000)];
            const double j = 0.6 * cfg.gaze_jitter;
            const double line_f = tgt.line + 0.5 + j * (rng.uniform() - 0.5);
            const double x = (tgt.col + 0.5 + j * (rng.uniform() - 0.5)) / 10.0;
            const double y = (vp.top_offset_px +
                              (line_f - vp.first_visible_line) * vp.line_height_px) /
                             cfg.screen_h_px;
            gaze.push_back({t_ms, clampd(x, 0.0, 1.0), clampd(y, 0.0, 1.0), true});
        }
        return gaze;
    };
    s.a.gaze = gen_gaze(target_a, 22);
    s.b.gaze = gen_gaze(target_b, 23);

    auto gen_pupil = [&](const std::vector<double>& e, double base_mm, uint64_t seed_off,
                         uint64_t blink_off) {
        Rng rng(cfg.seed + seed_off);
        Rng rng_blink(cfg.seed + blink_off);
        const auto blinks = blink_schedule(rng_blink, cfg, dur_ms);
        size_t bi = 0;

        const int sps = static_cast<int>(std::llround(cfg.pupil_rate_hz));
        const size_t n_samp = static_cast<size_t>(n_sec) * sps;

        // Samples too close to a blink: an impulse there would be smeared by
        // the gap interpolation downstream, so placement skips past them.
        std::vector<char> blocked(n_samp, 0);
        for (const auto& b : blinks) {
            const int64_t lo = std::max<int64_t>(0, (b.start_ms - 250) * sps / 1000);
            const int64_t hi =
                std::min<int64_t>(static_cast<int64_t>(n_samp), (b.end_ms + 250) * sps / 1000 + 1);
            for (int64_t i = lo; i < hi; ++i) blocked[static_cast<size_t>(i)] = 1;
        }

        // Impulse offsets within each second: evenly spread with a rotating
        // golden-ratio phase, fractional accumulator carrying the remainder
        // across seconds so the per-window count follows the rate smoothly.
        std::vector<char> impulse(n_samp, 0);
        double acc = 0.0;
        for (size_t sec = 0; sec < n_sec; ++sec) {
            acc += cfg.impulse_rate_min_hz + cfg.impulse_rate_span_hz * e[sec];
            const int n_imp = static_cast<int>(acc);
            acc -= n_imp;
            const double phase = sec * 0.618033988749895;
            const double frac = phase - std::floor(phase);
            for (int j = 0; j < n_imp; ++j) {
                // Even sample indices keep the dyadic downsampling phase of
                // every event identical, so each contributes the same maxima
                // count downstream.
                const int pos = (static_cast<int>((j + frac) / n_imp * sps) % sps) & ~1;
                size_t at = sec * sps + pos;
                while (at < n_samp && (blocked[at] || impulse[at])) at += 2;
                if (at < n_samp) impulse[at] = 1;
            }
        }

        std::vector<PupilSample> pupil;
        pupil.reserve(static_cast<size_t>(cfg.duration_s * cfg.pupil_rate_hz) + 8);
        double wander = 0.0;
        double carry = 0.0;
        int64_t imp_idx = 0;
        for (int64_t i = 0;; ++i) {
            const int64_t t_ms =
                static_cast<int64_t>(std::llround(static_cast<double>(i) * 1000.0 /
                                                  cfg.pupil_rate_hz));
            if (t_ms >= dur_ms) break;
            wander = clampd(wander + 0.0015 * rng.normal(), -0.25, 0.25);
            double d = base_mm + wander + cfg.noise_sd * rng.normal() + carry;
            carry = 0.0;
            if (i < static_cast<int64_t>(impulse.size()) && impulse[i]) {
                const double amp = cfg.burst_amp_mm * (1.0 + 0.04 * (rng.uniform() - 0.5));
                const double sgn = (imp_idx++ & 1) ? -1.0 : 1.0;
                d += sgn * amp;
                carry = 0.55 * sgn * amp;
            }
            while (bi < blinks.size() && t_ms >= blinks[bi].end_ms) ++bi;
            const bool valid = !(bi < blinks.size() && t_ms >= blinks[bi].start_ms);
            pupil.push_back({t_ms, d, valid});
        }
        return pupil;
    };
    s.a.pupil = gen_pupil(plan.e_a, cfg.base_mm_a, 31, 41);
    s.b.pupil = gen_pupil(plan.e_b, cfg.base_mm_b, 32, 42);

    s.meta.bugs_solved = static_cast<int>(std::clamp(
        std::lround(2.0 + 7.0 * cfg.shared_focus_p + rng_choice.normal()), 0L, 12L));

    if (truth) {
        truth->mode = cfg.mode;
        truth->seed = cfg.seed;
        truth->coupling_kappa = cfg.coupling_kappa;
        truth->shared_focus_p = cfg.shared_focus_p;
        truth->lag_s = cfg.effort_window_s;
        truth->planted_direction =
            (cfg.mode == SynthMode::steady && cfg.coupling_kappa > 0.0) ? "A_causes_B" : "none";
        switch (cfg.mode) {
            case SynthMode::coupled:
                truth->attention_link = "jme->jva";
                truth->quadrants = {1};
                break;
            case SynthMode::reverse:
                truth->attention_link = "jva->jme";
                truth->quadrants = {4};
                break;
            case SynthMode::correlated:
                truth->attention_link = "none";
                truth->quadrants = {2, 3};
                break;
            default:
                truth->attention_link = "none";
                truth->quadrants = {};
                break;
        }
        truth->effort_a = plan.e_a;
        truth->effort_b = plan.e_b;
    }
    return s;
}

}  // namespace dyadlens
