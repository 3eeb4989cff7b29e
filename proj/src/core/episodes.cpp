#include "episodes.hpp"

#include <algorithm>
#include <map>

#include "error.hpp"

namespace dyadlens {

const char* episode_name(EpisodeType t) {
    switch (t) {
        case EpisodeType::hh: return "HH";
        case EpisodeType::hl: return "HL";
        case EpisodeType::lh: return "LH";
        case EpisodeType::ll: return "LL";
    }
    return "?";
}

double median(std::vector<double> values) {
    if (values.empty()) fail(Err::empty, "median of empty set");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<Episode> classify_episodes(const MetricSeries& jme, const MetricSeries& jva) {
    if (jme.window_ms != jva.window_ms)
        fail(Err::alignment, "jme and jva use different window sizes");
    if (jme.size() == 0 || jva.size() == 0)
        fail(Err::empty, "cannot classify empty series");

    // same phase: all window starts congruent modulo the window size
    const int64_t w = jme.window_ms;
    const int64_t phase = ((jme.start_ms.front() % w) + w) % w;
    for (int64_t t : jva.start_ms) {
        if (((t % w) + w) % w != phase)
            fail(Err::alignment, "jme and jva windows are phase-shifted");
    }

    const double med_jme = median(jme.value);
    const double med_jva = median(jva.value);

    std::map<int64_t, double> jva_at;
    for (size_t i = 0; i < jva.size(); ++i) jva_at[jva.start_ms[i]] = jva.value[i];

    std::vector<Episode> out;
    out.reserve(jme.size());
    for (size_t i = 0; i < jme.size(); ++i) {
        auto it = jva_at.find(jme.start_ms[i]);
        if (it == jva_at.end()) continue;  // only windows present on both sides
        const bool jme_high = jme.value[i] > med_jme;
        const bool jva_high = it->second > med_jva;
        EpisodeType t = jme_high ? (jva_high ? EpisodeType::hh : EpisodeType::hl)
                                 : (jva_high ? EpisodeType::lh : EpisodeType::ll);
        out.push_back({jme.start_ms[i], t});
    }
    if (out.empty()) fail(Err::empty, "no aligned windows between jme and jva");
    return out;
}

EpisodeProportions episode_proportions(const std::vector<Episode>& episodes) {
    if (episodes.empty()) fail(Err::empty, "no episodes to aggregate");
    EpisodeProportions out;
    for (const Episode& e : episodes) out.p[static_cast<size_t>(e.type)] += 1.0;
    const double n = static_cast<double>(episodes.size());
    for (double& v : out.p) v /= n;
    return out;
}

}  // namespace dyadlens
