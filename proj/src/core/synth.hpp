#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace dyadlens {

// Generator regimes for the task phase. The calibration phase is always
// independent gaze and baseline effort.
//
//   steady      constant shared_focus_p; participant B's latent effort
//               follows A's previous-second effort with weight coupling_kappa
//   coupled     the pair works in lockstep and the joint effort level leads
//               the gaze-sharing probability by one block (effort -> attention)
//   reverse     gaze sharing leads the joint effort level (attention -> effort)
//   correlated  effort level and gaze sharing follow the same block (no lead)
//   drift       constant coupling and gaze sharing, efforts ramp upward
enum class SynthMode { steady, coupled, reverse, correlated, drift };

const char* synth_mode_name(SynthMode m);  // "steady", "coupled", ...
SynthMode synth_mode_from(const std::string& name);  // accepts "uncoupled" too

struct SynthConfig {
    uint64_t seed = 1;
    SynthMode mode = SynthMode::steady;
    std::string dyad_id = "dyad-0001";

    double duration_s = 600.0;
    double calibration_s = 90.0;
    double gaze_rate_hz = 60.0;
    double pupil_rate_hz = 60.0;
    double screen_w_px = 1920.0;
    double screen_h_px = 1080.0;

    // Gaze: probability per second that both participants fixate the same
    // document cell (steady/drift modes; block-modulated otherwise), and
    // the within-cell scatter scale (0 = both land on identical points).
    double shared_focus_p = 0.75;
    double gaze_jitter = 1.0;

    // Latent effort layer. The causality modes step it in effort_window_s
    // blocks so planted structure lines up with the analysis windows; the
    // pair shares one level path and the mode decides whether that path or
    // the gaze-share schedule leads by one block. Steady mode instead runs
    // per-second AR(1) paths, with coupling_kappa the weight with which B's
    // level tracks A's previous second.
    int effort_window_s = 10;
    double phi = 0.45;           // block-scale AR(1) coefficient of the level path
    double coupling_kappa = 0.0;
    double me_base = 0.45;       // logistic midpoint of the effort scale
    double effort_gain = 1.5;    // logistic slope
    // Drift mode ramps the latent effort level from drift_low toward
    // drift_high across the task segment (clamped into (0, 1), so targets
    // above 1 steepen the ramp), after an optional flat hold.
    double drift_low = 0.45;
    double drift_high = 1.6;
    double drift_hold_s = 0.0;

    // Pupil synthesis. Effort modulates the rate of isolated high-frequency
    // impulses (deterministic fractional-accumulator placement); the impulse
    // amplitude stays fixed well above the noise floor so the detail-band
    // threshold stays stable.
    double base_mm_a = 4.6;
    double base_mm_b = 4.3;
    double burst_amp_mm = 0.25;
    double impulse_rate_min_hz = 0.25;
    double impulse_rate_span_hz = 1.95;
    double noise_sd = 0.004;     // additive pupil noise, mm
    double blink_gap_s_min = 5.0;
    double blink_gap_s_max = 12.0;
    double blink_len_ms_min = 100.0;
    double blink_len_ms_max = 220.0;

    // Shared document / scrolling.
    int doc_lines = 400;
    double line_height_px = 20.0;
    double top_offset_px = 80.0;
    double scroll_period_s = 45.0;
};

struct GroundTruth {
    SynthMode mode = SynthMode::steady;
    uint64_t seed = 0;
    double coupling_kappa = 0.0;
    double shared_focus_p = 0.0;
    int lag_s = 0;
    std::string planted_direction;  // "A_causes_B" | "none"
    std::string attention_link;     // "jme->jva" | "jva->jme" | "none"
    std::vector<int> quadrants;     // expected quadrant(s); empty = unconstrained
    std::vector<double> effort_a;   // latent per-second efforts in (0,1)
    std::vector<double> effort_b;
};

std::string truth_to_json(const GroundTruth& t);

// Parses a JSON object whose keys mirror the SynthConfig field names
// ("mode" as a string). Unknown keys and type mismatches throw bad_arg.
SynthConfig synth_config_from_json(const std::string& text);

// Deterministic synthetic dyad session. Gaze is always valid; pupil streams
// carry short blink dropouts. Both participants share one scroll timeline
// with at least one scroll event.
DyadSession gen_dyad(const SynthConfig& cfg, GroundTruth* truth = nullptr);

}  // namespace dyadlens
