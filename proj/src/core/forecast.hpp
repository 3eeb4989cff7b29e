#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "types.hpp"

namespace dyadlens {

struct ForecastConfig {
    int lags = 6;
    int horizon_windows = 3;
    double ridge_lambda = 1.0;
    int64_t window_ms = 10000;
};

struct ForecastFrame {
    int64_t issue_ms = 0;   // end of the latest window used
    int64_t target_ms = 0;  // start of the predicted window
    double jva = 0.0;
    double jme = 0.0;
    double me_a = 0.0;
    double me_b = 0.0;
};

// Per-metric ridge regression on [k lagged values, rolling mean, rolling sd]
// predicting horizon_windows ahead; intercept unpenalized. A persistence
// forecaster (prediction = last value) is available as a baseline.
class Forecaster {
  public:
    enum class Kind { ridge, persistence };

    static Forecaster fit(const std::vector<std::vector<MetricFrame>>& sessions,
                          const ForecastConfig& cfg = {});
    static Forecaster persistence(const ForecastConfig& cfg = {});
    static Forecaster from_json(const std::string& text);

    std::string to_json() const;
    const std::string& model_id() const { return model_id_; }
    const ForecastConfig& config() const { return cfg_; }

    // Predicts from the trailing lags-many frames of a contiguous history.
    ForecastFrame predict(std::span<const MetricFrame> history) const;

    struct MetricEval {
        double mae = 0.0;
        double mae_persistence = 0.0;
        double skill = 0.0;  // 1 - mae / mae_persistence
        size_t n = 0;
    };
    struct Eval {
        std::array<MetricEval, 4> per_metric{};  // jva, jme, me_a, me_b
        MetricEval overall{};
    };

    Eval evaluate(const std::vector<std::vector<MetricFrame>>& sessions) const;

  private:
    struct Ridge {
        std::vector<double> w;
        double intercept = 0.0;
    };

    double predict_metric(size_t metric, std::span<const double> values) const;

    Kind kind_ = Kind::ridge;
    ForecastConfig cfg_;
    std::array<Ridge, 4> models_{};
    std::string model_id_;
};

// Splits a frame list into maximal runs of consecutive windows.
std::vector<std::span<const MetricFrame>> contiguous_runs(
    std::span<const MetricFrame> frames, int64_t window_ms);

}  // namespace dyadlens
