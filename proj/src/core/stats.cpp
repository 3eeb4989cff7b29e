#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "error.hpp"

namespace dyadlens {

namespace {

// Continued fraction for the regularized incomplete beta, modified Lentz.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-15;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    fail(Err::internal, "beta continued fraction did not converge");
}

double betai(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
    // Use the CF on the side where it converges fastest.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    const size_t n = v.size();
    std::sort(v.begin(), v.end());
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void check_groups(std::span<const std::vector<double>> groups, size_t min_per_group) {
    if (groups.size() < 2) fail(Err::too_few_groups, "need at least 2 groups");
    for (const auto& g : groups) {
        if (g.size() < min_per_group)
            fail(Err::too_few_values, "each group needs at least " +
                                          std::to_string(min_per_group) + " values");
    }
}

AnovaResult classical_anova(std::span<const std::vector<double>> groups) {
    check_groups(groups, 2);
    const size_t k = groups.size();
    size_t n_total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        n_total += g.size();
        for (double x : g) grand_sum += x;
    }
    const double grand_mean = grand_sum / static_cast<double>(n_total);

    double ss_between = 0.0;
    double ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        const double dm = m - grand_mean;
        ss_between += static_cast<double>(g.size()) * dm * dm;
        for (double x : g) {
            const double d = x - m;
            ss_within += d * d;
        }
    }
    AnovaResult r;
    r.df1 = static_cast<double>(k - 1);
    r.df2 = static_cast<double>(n_total - k);
    if (ss_within <= 0.0) {
        if (ss_between <= 0.0) {
            r.f = 0.0;
            r.p = 1.0;
            return r;
        }
        r.f = std::numeric_limits<double>::infinity();
        r.p = 0.0;
        return r;
    }
    const double ms_between = ss_between / r.df1;
    const double ms_within = ss_within / r.df2;
    r.f = ms_between / ms_within;
    r.p = 1.0 - f_cdf(r.f, r.df1, r.df2);
    return r;
}

}  // namespace

double f_cdf(double x, double d1, double d2) {
    if (d1 <= 0.0 || d2 <= 0.0) fail(Err::domain, "F degrees of freedom must be positive");
    if (std::isnan(x)) fail(Err::domain, "F cdf argument is NaN");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return betai(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
    return classical_anova(groups);
}

AnovaResult welch_anova(std::span<const std::vector<double>> groups) {
    check_groups(groups, 2);
    const size_t k = groups.size();
    std::vector<double> w(k), m(k);
    for (size_t i = 0; i < k; ++i) {
        const auto& g = groups[i];
        const double n = static_cast<double>(g.size());
        const double mu = mean_of(g);
        double ss = 0.0;
        for (double x : g) {
            const double d = x - mu;
            ss += d * d;
        }
        const double var = ss / (n - 1.0);
        if (var <= 0.0) fail(Err::zero_variance, "welch anova: group has zero variance");
        w[i] = n / var;
        m[i] = mu;
    }
    double w_sum = 0.0;
    for (double wi : w) w_sum += wi;
    double mw = 0.0;
    for (size_t i = 0; i < k; ++i) mw += w[i] * m[i];
    mw /= w_sum;

    double num = 0.0;
    for (size_t i = 0; i < k; ++i) {
        const double d = m[i] - mw;
        num += w[i] * d * d;
    }
    num /= static_cast<double>(k - 1);

    double tail = 0.0;
    for (size_t i = 0; i < k; ++i) {
        const double ni = static_cast<double>(groups[i].size());
        const double u = 1.0 - w[i] / w_sum;
        tail += u * u / (ni - 1.0);
    }
    const double kk = static_cast<double>(k);
    const double denom = 1.0 + 2.0 * (kk - 2.0) / (kk * kk - 1.0) * tail;

    AnovaResult r;
    r.f = num / denom;
    r.df1 = kk - 1.0;
    r.df2 = (kk * kk - 1.0) / (3.0 * tail);
    r.p = 1.0 - f_cdf(r.f, r.df1, r.df2);
    return r;
}

AnovaResult levene_bf(std::span<const std::vector<double>> groups) {
    check_groups(groups, 2);
    std::vector<std::vector<double>> dev(groups.size());
    for (size_t i = 0; i < groups.size(); ++i) {
        const double med = median_of(groups[i]);
        dev[i].reserve(groups[i].size());
        for (double x : groups[i]) dev[i].push_back(std::fabs(x - med));
    }
    return classical_anova(dev);
}

std::vector<double> bonferroni_adjust(std::span<const double> p_values, int m) {
    if (p_values.empty()) return {};
    const double mult = m > 0 ? static_cast<double>(m) : static_cast<double>(p_values.size());
    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values) {
        if (p < 0.0 || p > 1.0) fail(Err::domain, "p value out of [0,1]");
        out.push_back(std::min(1.0, mult * p));
    }
    return out;
}

}  // namespace dyadlens
