#pragma once

#include <span>
#include <vector>

namespace dyadlens {

struct AnovaResult {
    double f = 0.0;
    double df1 = 0.0;
    double df2 = 0.0;
    double p = 1.0;
};

// CDF of the F distribution via the regularized incomplete beta function.
double f_cdf(double x, double d1, double d2);

// Classical one-way fixed-effects ANOVA. Needs >= 2 groups of >= 2 values.
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

// Welch's heteroscedastic ANOVA with Welch-Satterthwaite df2.
// Groups with zero sample variance are rejected.
AnovaResult welch_anova(std::span<const std::vector<double>> groups);

// Brown-Forsythe Levene test: ANOVA on |x - group median|.
AnovaResult levene_bf(std::span<const std::vector<double>> groups);

// p_adj = min(1, m * p); m defaults to the list length.
std::vector<double> bonferroni_adjust(std::span<const double> p_values, int m = 0);

}  // namespace dyadlens
