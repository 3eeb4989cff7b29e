#pragma once

#include <optional>
#include <string>
#include <vector>

#include "attention.hpp"
#include "effort.hpp"
#include "forecast.hpp"
#include "types.hpp"

namespace dyadlens {

// ---------------------------------------------------------------------------
// Scenario table
// ---------------------------------------------------------------------------

enum class Action : int { a1 = 0, a2 = 1, a3 = 2, a4 = 3, a5 = 4 };

const char* action_name(Action a);  // "A1".."A5"

struct ScenarioRow {
    int id = 0;
    Level jva = Level::low;  // H or L only
    Level jme = Level::low;
    Level me1 = Level::avg;
    Level me2 = Level::avg;
    bool actions[5] = {};
};

struct ScenarioTable {
    std::vector<ScenarioRow> rows;
};

// CSV columns: scenario,jva,jme,me1,me2,a1,a2,a3,a4,a5. Exactly 22 rows with
// ids 1..22 in order. An empty path loads the built-in copy.
ScenarioTable load_scenario_table(const std::string& path);
ScenarioTable builtin_scenario_table();
const char* builtin_scenario_csv();

// Input patterns appearing in more than one row; conflicting groups
// prescribe different action sets for the same pattern.
struct TableAuditGroup {
    std::string pattern;  // e.g. "L,L,L,L"
    std::vector<int> row_ids;
    bool conflicting = false;
};

std::vector<TableAuditGroup> audit_scenario_table(const ScenarioTable& t);

struct MatchResult {
    std::vector<Action> actions;
    int row_id = 0;
    bool fallback = false;  // no exact row; matched via remap or nearest row
};

// First matching row wins. States without an exact row fall back to AVG
// remapping (L tried before H), then to the nearest row by ME-level distance
// within the same joint block.
MatchResult match_scenario(const DyadState& state, const ScenarioTable& t);

// ---------------------------------------------------------------------------
// Frames and baselines
// ---------------------------------------------------------------------------

struct FrameOptions {
    GridSpec grid;
    int64_t window_ms = 10000;
    JmeMethod jme_method = JmeMethod::crqa;
    int n_bins = 21;
    MeOptions me;
};

// Aligned per-window metric frames over [span_start, span_end). Windows
// missing any metric (pupil dropouts) are skipped.
std::vector<MetricFrame> compute_frames(const DyadSession& s, const FrameOptions& opt,
                                        int64_t span_start_ms, int64_t span_end_ms);
std::vector<MetricFrame> compute_frames(const DyadSession& s,
                                        const FrameOptions& opt = {});

// Population mean/sd of each metric over the calibration windows.
// Requires a calibration segment of at least 30 s.
Baselines compute_baselines(const DyadSession& s, const FrameOptions& opt = {});

// Three-level 2SD rule for individual measures; degenerate sd = 0 compares
// against the mean directly.
Level discretize_me(double value, const MeanSd& base);

// Joint measures binarize at the calibration mean (H iff value >= mean).
Level binarize_joint(double value, double mean);

DyadState discretize_frame(const MetricFrame& f, const Baselines& base);
DyadState discretize_forecast(const ForecastFrame& f, const Baselines& base);

// ---------------------------------------------------------------------------
// Engines
// ---------------------------------------------------------------------------

enum class FeedbackMode { reactive, proactive };

struct EnginePolicy {
    int64_t cooldown_ms = 30000;     // per action, and event refire while out of band
    int64_t persistence_ms = 60000;  // both MEs continuously extreme before A5
    bool joint_in_trigger = false;   // include JVA/JME bands in the reactive trigger
    // Default desired set mirrors the trigger default: both efforts in band,
    // joint levels free.
    std::vector<DyadState> desired = {
        {Level::high, Level::high, Level::avg, Level::avg},
        {Level::high, Level::low, Level::avg, Level::avg},
        {Level::low, Level::high, Level::avg, Level::avg},
        {Level::low, Level::low, Level::avg, Level::avg}};
};

struct SuppressedAction {
    Action action;
    std::string reason;  // "cooldown" | "persistence"
};

struct FeedbackEvent {
    int64_t t_ms = 0;
    FeedbackMode mode = FeedbackMode::reactive;
    DyadState state;
    std::vector<Action> actions;
    int row_id = 0;
    bool fallback = false;
    std::vector<SuppressedAction> suppressed;
};

// Emits on 2SD band crossings of the trigger measures, refiring every
// cooldown while the signal stays out of band. A5 is withheld until both MEs
// have been non-AVG for persistence_ms. Events whose actions are all
// suppressed are not emitted.
class ReactiveEngine {
  public:
    ReactiveEngine(const Baselines& base, const ScenarioTable& table,
                   const EnginePolicy& policy);

    std::optional<FeedbackEvent> step(const MetricFrame& frame);

  private:
    Baselines base_;
    const ScenarioTable* table_;
    EnginePolicy policy_;
    int64_t last_start_ms_ = -1;
    bool prev_out_[4] = {};
    int64_t last_emit_ms_ = -1;
    int64_t action_last_ms_[5] = {-1, -1, -1, -1, -1};
    int64_t extreme_since_ms_ = -1;
};

// Emits whenever the discretized forecast leaves the desired set.
class ProactiveEngine {
  public:
    ProactiveEngine(const Baselines& base, const ScenarioTable& table,
                    const EnginePolicy& policy);

    std::optional<FeedbackEvent> step(const ForecastFrame& forecast);

  private:
    Baselines base_;
    const ScenarioTable* table_;
    EnginePolicy policy_;
    int64_t last_issue_ms_ = -1;
    int64_t last_emit_ms_ = -1;
    int64_t action_last_ms_[5] = {-1, -1, -1, -1, -1};
    int64_t extreme_since_ms_ = -1;
};

struct FeedbackRunOptions {
    FrameOptions frames;
    EnginePolicy policy;
    bool reactive = true;
    bool proactive = false;
};

// Runs the engines over a session. Proactive mode requires a forecaster.
std::vector<FeedbackEvent> run_feedback(const DyadSession& s, const ScenarioTable& table,
                                        const FeedbackRunOptions& opt,
                                        const Forecaster* forecaster = nullptr);

std::string events_to_jsonl(const std::vector<FeedbackEvent>& events);

}  // namespace dyadlens
