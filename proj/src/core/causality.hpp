#pragma once

#include <span>
#include <string>
#include <vector>

#include "effort.hpp"
#include "types.hpp"

namespace dyadlens {

struct CausalityResult {
    double eta2_xy = 0.0;   // x Granger-causes y
    double eta2_yx = 0.0;   // y Granger-causes x
    double eta2_corr = 0.0; // contemporaneous (squared Pearson)
    double effect = 0.0;    // eta2_xy - eta2_yx
    double significance = 0.0;  // max(eta2_xy, eta2_yx) - eta2_corr
    int lag = 1;
    int quadrant = 1;  // 1..4
};

// Linear detrend then scale to unit population variance.
std::vector<double> detrend_standardize(std::span<const double> v);

// Partial eta^2 of adding x's lags 1..lag to an autoregression of y on its
// own lags (intercept included, tiny ridge jitter for stability).
double eta2_granger(std::span<const double> x, std::span<const double> y, int lag);

// Squared contemporaneous Pearson correlation.
double eta2_contemporaneous(std::span<const double> x, std::span<const double> y);

// effect > 0: quadrant I when significance > 0, II otherwise;
// effect <= 0: quadrant IV when significance > 0, III otherwise.
int quadrant_of(double effect, double significance);

// Shared lag picked by summed two-direction BIC over 1..max_lag, then the
// full result at that lag. Series are detrended and standardized first.
// Requires aligned series of equal length with n > 3*max_lag_effective + 5.
CausalityResult causality_summary(const MetricSeries& x, const MetricSeries& y,
                                  int max_lag = 10);
CausalityResult causality_summary_values(std::span<const double> x,
                                         std::span<const double> y, int max_lag = 10);

// Causality between a session's JME series (x) and its JVA series (y),
// both computed per non-overlapping jme.window_ms window over the task span
// and intersected on window start. Quadrant I reads "joint effort drives
// joint attention", quadrant IV the reverse. The default JME readout here is
// cosine: the session-level lag analysis needs the JME values to track the
// dyad's effort level across windows, and the recurrence readout quantizes
// that level away (it reports bin co-occupancy, not magnitude).
CausalityResult session_causality(const DyadSession& s, int max_lag = 10,
                                  const JmeOptions& jme = {.method = JmeMethod::cosine});

struct DyadCausality {
    std::string dyad_id;
    CausalityResult result;
};

struct QuadrantSummary {
    int counts[4] = {0, 0, 0, 0};
    std::vector<DyadCausality> rows;
};

QuadrantSummary quadrant_summary(std::vector<DyadCausality> rows);

// dyad_id,significance,effect_size,quadrant,lag
std::string scatter_csv(const QuadrantSummary& summary);

}  // namespace dyadlens
