#include "forecast.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "error.hpp"

namespace dyadlens {

namespace {

using json = nlohmann::ordered_json;

double metric_value(const MetricFrame& f, size_t metric) {
    switch (metric) {
        case 0: return f.jva;
        case 1: return f.jme;
        case 2: return f.me_a;
        default: return f.me_b;
    }
}

double clamp_metric(size_t metric, double v) {
    if (metric <= 1) return std::clamp(v, 0.0, 1.0);  // jva, jme
    return std::max(v, 0.0);                          // me
}

const char* metric_key(size_t metric) {
    switch (metric) {
        case 0: return "jva";
        case 1: return "jme";
        case 2: return "me_a";
        default: return "me_b";
    }
}

// features: [v_i, v_{i-1}, ..., v_{i-k+1}, mean_k, sd_k]
void fill_features(std::span<const double> values, size_t i, int k,
                   std::vector<double>& out) {
    out.clear();
    double sum = 0.0;
    for (int l = 0; l < k; ++l) {
        const double v = values[i - static_cast<size_t>(l)];
        out.push_back(v);
        sum += v;
    }
    const double mean = sum / k;
    double var = 0.0;
    for (int l = 0; l < k; ++l) {
        const double d = values[i - static_cast<size_t>(l)] - mean;
        var += d * d;
    }
    out.push_back(mean);
    out.push_back(std::sqrt(var / k));
}

// ridge with unpenalized intercept via column centering
void ridge_fit(const std::vector<std::vector<double>>& rows,
               const std::vector<double>& targets, double lambda,
               std::vector<double>& w_out, double& intercept_out) {
    const size_t n = rows.size();
    const size_t p = rows.front().size();
    std::vector<double> xmean(p, 0.0);
    double ymean = 0.0;
    for (size_t r = 0; r < n; ++r) {
        for (size_t j = 0; j < p; ++j) xmean[j] += rows[r][j];
        ymean += targets[r];
    }
    for (double& m : xmean) m /= static_cast<double>(n);
    ymean /= static_cast<double>(n);

    std::vector<double> gram(p * p, 0.0);
    std::vector<double> rhs(p, 0.0);
    std::vector<double> xc(p);
    for (size_t r = 0; r < n; ++r) {
        for (size_t j = 0; j < p; ++j) xc[j] = rows[r][j] - xmean[j];
        const double yc = targets[r] - ymean;
        for (size_t i = 0; i < p; ++i) {
            rhs[i] += xc[i] * yc;
            for (size_t j = 0; j <= i; ++j) gram[i * p + j] += xc[i] * xc[j];
        }
    }
    for (size_t i = 0; i < p; ++i) {
        for (size_t j = i + 1; j < p; ++j) gram[i * p + j] = gram[j * p + i];
        gram[i * p + i] += lambda;
    }
    // Cholesky solve
    std::vector<double>& a = gram;
    for (size_t i = 0; i < p; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double sum = a[i * p + j];
            for (size_t m = 0; m < j; ++m) sum -= a[i * p + m] * a[j * p + m];
            if (i == j) {
                if (sum <= 0.0) fail(Err::internal, "ridge gram not positive definite");
                a[i * p + i] = std::sqrt(sum);
            } else {
                a[i * p + j] = sum / a[j * p + j];
            }
        }
    }
    std::vector<double>& b = rhs;
    for (size_t i = 0; i < p; ++i) {
        double sum = b[i];
        for (size_t m = 0; m < i; ++m) sum -= a[i * p + m] * b[m];
        b[i] = sum / a[i * p + i];
    }
    for (size_t ii = p; ii-- > 0;) {
        double sum = b[ii];
        for (size_t m = ii + 1; m < p; ++m) sum -= a[m * p + ii] * b[m];
        b[ii] = sum / a[ii * p + ii];
    }
    w_out = b;
    intercept_out = ymean;
    for (size_t j = 0; j < p; ++j) intercept_out -= b[j] * xmean[j];
}

}  // namespace

std::vector<std::span<const MetricFrame>> contiguous_runs(
    std::span<const MetricFrame> frames, int64_t window_ms) {
    std::vector<std::span<const MetricFrame>> runs;
    size_t begin = 0;
    for (size_t i = 1; i <= frames.size(); ++i) {
        const bool split = i == frames.size() ||
                           frames[i].start_ms != frames[i - 1].start_ms + window_ms;
        if (split) {
            runs.push_back(frames.subspan(begin, i - begin));
            begin = i;
        }
    }
    if (frames.empty()) runs.clear();
    return runs;
}

Forecaster Forecaster::fit(const std::vector<std::vector<MetricFrame>>& sessions,
                           const ForecastConfig& cfg) {
    if (cfg.lags < 1 || cfg.horizon_windows < 1 || cfg.window_ms <= 0)
        fail(Err::bad_arg, "bad forecaster configuration");
    Forecaster f;
    f.kind_ = Kind::ridge;
    f.cfg_ = cfg;

    const size_t k = static_cast<size_t>(cfg.lags);
    const size_t h = static_cast<size_t>(cfg.horizon_windows);

    for (size_t metric = 0; metric < 4; ++metric) {
        std::vector<std::vector<double>> rows;
        std::vector<double> targets;
        std::vector<double> feats;
        for (const auto& session : sessions) {
            for (auto run : contiguous_runs({session.data(), session.size()},
                                            cfg.window_ms)) {
                if (run.size() < k + h) continue;
                std::vector<double> values(run.size());
                for (size_t i = 0; i < run.size(); ++i)
                    values[i] = metric_value(run[i], metric);
                for (size_t i = k - 1; i + h < run.size(); ++i) {
                    fill_features(values, i, cfg.lags, feats);
                    rows.push_back(feats);
                    targets.push_back(values[i + h]);
                }
            }
        }
        if (rows.empty())
            fail(Err::insufficient_history,
                 "no training cohort run reaches lags + horizon windows");
        ridge_fit(rows, targets, cfg.ridge_lambda, f.models_[metric].w,
                  f.models_[metric].intercept);
    }
    f.model_id_ = "ridge_k" + std::to_string(cfg.lags) + "_h" +
                  std::to_string(cfg.horizon_windows);
    return f;
}

Forecaster Forecaster::persistence(const ForecastConfig& cfg) {
    Forecaster f;
    f.kind_ = Kind::persistence;
    f.cfg_ = cfg;
    f.model_id_ = "persistence";
    return f;
}

double Forecaster::predict_metric(size_t metric, std::span<const double> values) const {
    if (kind_ == Kind::persistence) return values.back();
    std::vector<double> feats;
    fill_features(values, values.size() - 1, cfg_.lags, feats);
    const Ridge& m = models_[metric];
    double v = m.intercept;
    for (size_t j = 0; j < m.w.size(); ++j) v += m.w[j] * feats[j];
    return v;
}

ForecastFrame Forecaster::predict(std::span<const MetricFrame> history) const {
    const size_t k = static_cast<size_t>(cfg_.lags);
    if (history.size() < k)
        fail(Err::insufficient_history,
             "need " + std::to_string(k) + " frames, have " +
                 std::to_string(history.size()));
    const auto tail = history.subspan(history.size() - k, k);
    for (size_t i = 1; i < tail.size(); ++i) {
        if (tail[i].start_ms != tail[i - 1].start_ms + cfg_.window_ms)
            fail(Err::insufficient_history, "history windows are not contiguous");
    }
    std::vector<double> values(k);
    ForecastFrame out;
    out.issue_ms = tail.back().start_ms + cfg_.window_ms;
    out.target_ms = tail.back().start_ms +
                    static_cast<int64_t>(cfg_.horizon_windows) * cfg_.window_ms;
    for (size_t metric = 0; metric < 4; ++metric) {
        for (size_t i = 0; i < k; ++i) values[i] = metric_value(tail[i], metric);
        const double v = predict_metric(metric, values);
        const double c = clamp_metric(metric, v);
        switch (metric) {
            case 0: out.jva = c; break;
            case 1: out.jme = c; break;
            case 2: out.me_a = c; break;
            default: out.me_b = c; break;
        }
    }
    return out;
}

Forecaster::Eval Forecaster::evaluate(
    const std::vector<std::vector<MetricFrame>>& sessions) const {
    const size_t k = static_cast<size_t>(cfg_.lags);
    const size_t h = static_cast<size_t>(cfg_.horizon_windows);
    Eval ev;
    double sum_abs[4] = {}, sum_abs_pers[4] = {};
    size_t counts[4] = {};
    for (const auto& session : sessions) {
        for (auto run : contiguous_runs({session.data(), session.size()},
                                        cfg_.window_ms)) {
            if (run.size() < k + h) continue;
            std::vector<double> values(run.size());
            for (size_t metric = 0; metric < 4; ++metric) {
                for (size_t i = 0; i < run.size(); ++i)
                    values[i] = metric_value(run[i], metric);
                for (size_t i = k - 1; i + h < run.size(); ++i) {
                    const double actual = values[i + h];
                    const double pred = clamp_metric(
                        metric, predict_metric(metric, {values.data(), i + 1}));
                    sum_abs[metric] += std::fabs(pred - actual);
                    sum_abs_pers[metric] += std::fabs(values[i] - actual);
                    ++counts[metric];
                }
            }
        }
    }
    double tot = 0.0, tot_pers = 0.0;
    size_t tot_n = 0;
    for (size_t metric = 0; metric < 4; ++metric) {
        MetricEval& m = ev.per_metric[metric];
        m.n = counts[metric];
        if (m.n == 0) fail(Err::insufficient_history, "no evaluable forecast windows");
        m.mae = sum_abs[metric] / static_cast<double>(m.n);
        m.mae_persistence = sum_abs_pers[metric] / static_cast<double>(m.n);
        m.skill = m.mae_persistence > 0.0 ? 1.0 - m.mae / m.mae_persistence : 0.0;
        tot += sum_abs[metric];
        tot_pers += sum_abs_pers[metric];
        tot_n += m.n;
    }
    ev.overall.n = tot_n;
    ev.overall.mae = tot / static_cast<double>(tot_n);
    ev.overall.mae_persistence = tot_pers / static_cast<double>(tot_n);
    ev.overall.skill = ev.overall.mae_persistence > 0.0
                           ? 1.0 - ev.overall.mae / ev.overall.mae_persistence
                           : 0.0;
    return ev;
}

std::string Forecaster::to_json() const {
    json j;
    j["model_id"] = model_id_;
    j["kind"] = kind_ == Kind::persistence ? "persistence" : "ridge";
    j["config"] = {{"lags", cfg_.lags},
                   {"horizon_windows", cfg_.horizon_windows},
                   {"ridge_lambda", cfg_.ridge_lambda},
                   {"window_ms", cfg_.window_ms}};
    if (kind_ == Kind::ridge) {
        json models = json::object();
        for (size_t metric = 0; metric < 4; ++metric) {
            models[metric_key(metric)] = {{"weights", models_[metric].w},
                                          {"intercept", models_[metric].intercept}};
        }
        j["models"] = models;
    }
    return j.dump(2);
}

Forecaster Forecaster::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(Err::parse, std::string("model json: ") + e.what());
    }
    try {
        Forecaster f;
        const std::string kind = j.at("kind").get<std::string>();
        f.kind_ = kind == "persistence" ? Kind::persistence : Kind::ridge;
        const json& c = j.at("config");
        f.cfg_.lags = c.at("lags").get<int>();
        f.cfg_.horizon_windows = c.at("horizon_windows").get<int>();
        f.cfg_.ridge_lambda = c.at("ridge_lambda").get<double>();
        f.cfg_.window_ms = c.at("window_ms").get<int64_t>();
        f.model_id_ = j.at("model_id").get<std::string>();
        if (f.kind_ == Kind::ridge) {
            const json& models = j.at("models");
            const size_t want = static_cast<size_t>(f.cfg_.lags) + 2;
            for (size_t metric = 0; metric < 4; ++metric) {
                const json& m = models.at(metric_key(metric));
                f.models_[metric].w = m.at("weights").get<std::vector<double>>();
                f.models_[metric].intercept = m.at("intercept").get<double>();
                if (f.models_[metric].w.size() != want)
                    fail(Err::schema, "model weight count mismatch");
            }
        }
        return f;
    } catch (const json::exception& e) {
        fail(Err::schema, std::string("model json: ") + e.what());
    }
}

}  // namespace dyadlens
