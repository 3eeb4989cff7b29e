#include "causality.hpp"

#include "attention.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "error.hpp"

namespace dyadlens {

namespace {

// Solves (A + jitter*I) w = b in place via Cholesky; A is symmetric positive
// semi-definite (Gram matrix of the regressors).
std::vector<double> solve_normal(std::vector<double> a, std::vector<double> b,
                                 size_t k, double jitter) {
    for (size_t i = 0; i < k; ++i) a[i * k + i] += jitter;
    // Cholesky: A = L L^T
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double sum = a[i * k + j];
            for (size_t m = 0; m < j; ++m) sum -= a[i * k + m] * a[j * k + m];
            if (i == j) {
                if (sum <= 0.0) fail(Err::degenerate_series, "singular normal equations");
                a[i * k + i] = std::sqrt(sum);
            } else {
                a[i * k + j] = sum / a[j * k + j];
            }
        }
    }
    // forward then backward substitution
    for (size_t i = 0; i < k; ++i) {
        double sum = b[i];
        for (size_t m = 0; m < i; ++m) sum -= a[i * k + m] * b[m];
        b[i] = sum / a[i * k + i];
    }
    for (size_t ii = k; ii-- > 0;) {
        double sum = b[ii];
        for (size_t m = ii + 1; m < k; ++m) sum -= a[m * k + ii] * b[m];
        b[ii] = sum / a[ii * k + ii];
    }
    return b;
}

constexpr double kRidgeJitter = 1e-10;

// Residual sum of squares of regressing targets on the row-major design.
double ols_sse(const std::vector<double>& design, const std::vector<double>& target,
               size_t rows, size_t cols) {
    std::vector<double> gram(cols * cols, 0.0);
    std::vector<double> rhs(cols, 0.0);
    for (size_t r = 0; r < rows; ++r) {
        const double* row = design.data() + r * cols;
        for (size_t i = 0; i < cols; ++i) {
            rhs[i] += row[i] * target[r];
            for (size_t j = 0; j <= i; ++j) gram[i * cols + j] += row[i] * row[j];
        }
    }
    for (size_t i = 0; i < cols; ++i)
        for (size_t j = i + 1; j < cols; ++j) gram[i * cols + j] = gram[j * cols + i];
    const std::vector<double> w = solve_normal(std::move(gram), rhs, cols, kRidgeJitter);
    double sse = 0.0;
    for (size_t r = 0; r < rows; ++r) {
        const double* row = design.data() + r * cols;
        double fit = 0.0;
        for (size_t i = 0; i < cols; ++i) fit += row[i] * w[i];
        const double e = target[r] - fit;
        sse += e * e;
    }
    return sse;
}

// Lagged design for y_t on [1, y lags, optional x lags], rows t = first..n-1.
struct LaggedFit {
    double sse_restricted = 0.0;
    double sse_full = 0.0;
    size_t rows = 0;
};

LaggedFit fit_direction(std::span<const double> x, std::span<const double> y, int lag,
                        size_t first) {
    const size_t n = y.size();
    const size_t rows = n - first;
    const size_t cols_r = 1 + static_cast<size_t>(lag);
    const size_t cols_f = cols_r + static_cast<size_t>(lag);
    std::vector<double> design_r(rows * cols_r);
    std::vector<double> design_f(rows * cols_f);
    std::vector<double> target(rows);
    for (size_t t = first; t < n; ++t) {
        const size_t r = t - first;
        target[r] = y[t];
        design_r[r * cols_r] = 1.0;
        design_f[r * cols_f] = 1.0;
        for (int l = 1; l <= lag; ++l) {
            design_r[r * cols_r + static_cast<size_t>(l)] = y[t - static_cast<size_t>(l)];
            design_f[r * cols_f + static_cast<size_t>(l)] = y[t - static_cast<size_t>(l)];
            design_f[r * cols_f + static_cast<size_t>(lag + l)] =
                x[t - static_cast<size_t>(l)];
        }
    }
    LaggedFit fit;
    fit.rows = rows;
    fit.sse_restricted = ols_sse(design_r, target, rows, cols_r);
    fit.sse_full = ols_sse(design_f, target, rows, cols_f);
    return fit;
}

double eta2_from(const LaggedFit& fit) {
    if (fit.sse_restricted <= 0.0) return 0.0;
    const double e = (fit.sse_restricted - fit.sse_full) / fit.sse_restricted;
    return std::clamp(e, 0.0, 1.0);
}

double bic_term(double sse, size_t rows, size_t params) {
    const double mse = std::max(sse / static_cast<double>(rows), 1e-300);
    return static_cast<double>(rows) * std::log(mse) +
           static_cast<double>(params) * std::log(static_cast<double>(rows));
}

}  // namespace

std::vector<double> detrend_standardize(std::span<const double> v) {
    const size_t n = v.size();
    if (n < 2) fail(Err::too_short, "series too short to standardize");
    // least-squares line fit over t = 0..n-1
    double st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        st += t;
        sv += v[i];
        stt += t * t;
        stv += t * v[i];
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * stt - st * st;
    const double slope = denom != 0.0 ? (dn * stv - st * sv) / denom : 0.0;
    const double intercept = (sv - slope * st) / dn;

    std::vector<double> out(n);
    double var = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out[i] = v[i] - (intercept + slope * static_cast<double>(i));
        var += out[i] * out[i];
    }
    var /= dn;
    if (var < 1e-24) fail(Err::degenerate_series, "series has zero variance after detrend");
    const double inv_sd = 1.0 / std::sqrt(var);
    for (double& x : out) x *= inv_sd;
    return out;
}

double eta2_granger(std::span<const double> x, std::span<const double> y, int lag) {
    if (x.size() != y.size()) fail(Err::length_mismatch, "series lengths differ");
    if (lag < 1) fail(Err::bad_arg, "lag must be >= 1");
    if (y.size() < static_cast<size_t>(3 * lag + 6))
        fail(Err::too_short, "series too short for requested lag");
    return eta2_from(fit_direction(x, y, lag, static_cast<size_t>(lag)));
}

double eta2_contemporaneous(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(Err::length_mismatch, "series lengths differ");
    const size_t n = x.size();
    if (n < 3) fail(Err::too_short, "need at least 3 points");
    double sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) fail(Err::degenerate_series, "constant series");
    const double r2 = (sxy * sxy) / (sxx * syy);
    return std::clamp(r2, 0.0, 1.0);
}

int quadrant_of(double effect, double significance) {
    if (effect > 0.0) return significance > 0.0 ? 1 : 2;
    return significance > 0.0 ? 4 : 3;
}

CausalityResult causality_summary_values(std::span<const double> xs,
                                         std::span<const double> ys, int max_lag) {
    if (xs.size() != ys.size()) fail(Err::length_mismatch, "series lengths differ");
    if (max_lag < 1) fail(Err::bad_arg, "max_lag must be >= 1");
    const size_t n = xs.size();
    // clamp the lag search so every candidate leaves a usable sample
    int lag_cap = max_lag;
    while (lag_cap > 1 && n < static_cast<size_t>(3 * lag_cap + 6)) --lag_cap;
    if (n < static_cast<size_t>(3 * lag_cap + 6))
        fail(Err::too_short, "series too short for causality analysis");

    const std::vector<double> x = detrend_standardize(xs);
    const std::vector<double> y = detrend_standardize(ys);

    // shared lag by summed BIC of both full models on the common sample
    const size_t common_first = static_cast<size_t>(lag_cap);
    int best_lag = 1;
    double best_bic = 0.0;
    for (int lag = 1; lag <= lag_cap; ++lag) {
        const LaggedFit fxy = fit_direction(x, y, lag, common_first);
        const LaggedFit fyx = fit_direction(y, x, lag, common_first);
        const size_t params = 2 * static_cast<size_t>(lag) + 1;
        const double bic = bic_term(fxy.sse_full, fxy.rows, params) +
                           bic_term(fyx.sse_full, fyx.rows, params);
        if (lag == 1 || bic < best_bic) {
            best_bic = bic;
            best_lag = lag;
        }
    }

    CausalityResult r;
    r.lag = best_lag;
    r.eta2_xy = eta2_from(fit_direction(x, y, best_lag, static_cast<size_t>(best_lag)));
    r.eta2_yx = eta2_from(fit_direction(y, x, best_lag, static_cast<size_t>(best_lag)));
    r.eta2_corr = eta2_contemporaneous(x, y);
    r.effect = r.eta2_xy - r.eta2_yx;
    r.significance = std::max(r.eta2_xy, r.eta2_yx) - r.eta2_corr;
    r.quadrant = quadrant_of(r.effect, r.significance);
    return r;
}

CausalityResult causality_summary(const MetricSeries& x, const MetricSeries& y,
                                  int max_lag) {
    if (x.size() != y.size() || x.start_ms != y.start_ms)
        fail(Err::alignment, "causality needs series on a common window grid");
    return causality_summary_values(x.value, y.value, max_lag);
}

QuadrantSummary quadrant_summary(std::vector<DyadCausality> rows) {
    if (rows.empty()) fail(Err::empty, "no causality results to summarize");
    QuadrantSummary s;
    s.rows = std::move(rows);
    for (const DyadCausality& d : s.rows) {
        if (d.result.quadrant < 1 || d.result.quadrant > 4)
            fail(Err::domain, "quadrant out of range");
        ++s.counts[d.result.quadrant - 1];
    }
    return s;
}

namespace {

std::string csv_num(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

CausalityResult session_causality(const DyadSession& s, int max_lag, const JmeOptions& jme) {
    const MetricSeries x = jme_series(s, jme);
    const MetricSeries y = jva_series(s, {.grid = {}, .window_ms = jme.window_ms});
    std::vector<double> xv, yv;
    size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x.start_ms[i] < y.start_ms[j]) {
            ++i;
        } else if (y.start_ms[j] < x.start_ms[i]) {
            ++j;
        } else {
            xv.push_back(x.value[i]);
            yv.push_back(y.value[j]);
            ++i;
            ++j;
        }
    }
    return causality_summary_values(xv, yv, max_lag);
}

std::string scatter_csv(const QuadrantSummary& summary) {
    std::string out = "dyad_id,significance,effect_size,quadrant,lag\n";
    for (const DyadCausality& d : summary.rows) {
        out += d.dyad_id;
        out += ',';
        out += csv_num(d.result.significance);
        out += ',';
        out += csv_num(d.result.effect);
        out += ',';
        out += std::to_string(d.result.quadrant);
        out += ',';
        out += std::to_string(d.result.lag);
        out += '\n';
    }
    return out;
}

}  // namespace dyadlens
