#pragma once

#include <array>
#include <string>
#include <vector>

#include "types.hpp"

namespace dyadlens {

enum class EpisodeType : int { hh = 0, hl = 1, lh = 2, ll = 3 };

const char* episode_name(EpisodeType t);  // "HH", "HL", "LH", "LL"

struct Episode {
    int64_t window_start_ms = 0;
    EpisodeType type = EpisodeType::ll;
};

// Median-cut classification on aligned JME/JVA windows: the first letter is
// the JME side, the second the JVA side; values above the per-series median
// count as high, ties as low. Series must share window size and phase.
std::vector<Episode> classify_episodes(const MetricSeries& jme, const MetricSeries& jva);

struct EpisodeProportions {
    std::array<double, 4> p{};  // indexed by EpisodeType

    double operator[](EpisodeType t) const { return p[static_cast<size_t>(t)]; }
};

EpisodeProportions episode_proportions(const std::vector<Episode>& episodes);

double median(std::vector<double> values);

}  // namespace dyadlens
