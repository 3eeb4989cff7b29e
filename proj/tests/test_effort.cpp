#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "core/effort.hpp"
#include "core/synth.hpp"
#include "core/wavelet.hpp"
#include "helpers.hpp"

using namespace dyadlens;

TEST_SUITE("wavelet") {
    TEST_CASE("single-level transform matches the frozen reference") {
        const auto fx = testutil::load_fixture("dwt_fixture.json");
        for (const auto& [name, c] : fx.items()) {
            CAPTURE(name);
            const auto x = c["x"].get<std::vector<double>>();
            const auto ca = c["cA"].get<std::vector<double>>();
            const auto cd = c["cD"].get<std::vector<double>>();
            const WaveletKind w =
                name.ends_with("haar") ? WaveletKind::haar : WaveletKind::sym16;
            const DwtResult r = dwt_single(x, w);
            REQUIRE(r.approx.size() == ca.size());
            REQUIRE(r.detail.size() == cd.size());
            for (size_t i = 0; i < ca.size(); ++i) {
                CHECK(r.approx[i] == doctest::Approx(ca[i]).epsilon(1e-9));
                CHECK(r.detail[i] == doctest::Approx(cd[i]).epsilon(1e-9));
            }
        }
    }

    TEST_CASE("constant input gives a flat detail band") {
        const std::vector<double> x(40, 3.7);
        for (WaveletKind w :
             {WaveletKind::sym16, WaveletKind::sym8, WaveletKind::sym4, WaveletKind::haar}) {
            const DwtResult r = dwt_single(x, w);
            for (double d : r.detail) CHECK(std::fabs(d) < 1e-12);
        }
    }

    TEST_CASE("names round trip") {
        for (WaveletKind w :
             {WaveletKind::sym16, WaveletKind::sym8, WaveletKind::sym4, WaveletKind::haar})
            CHECK(wavelet_by_name(wavelet_name(w)) == w);
        CHECK_THROWS_AS((void)wavelet_by_name("sym2"), DlError);
    }
}

TEST_SUITE("pupil preprocessing") {
    TEST_CASE("short invalid runs are interpolated, long ones kept") {
        std::vector<PupilSample> in;
        for (int i = 0; i < 30; ++i)
            in.push_back({i * 100, 4.0 + 0.01 * i, true});
        for (int i = 5; i < 8; ++i) in[i].valid = false;    // 300 ms gap
        for (int i = 15; i < 23; ++i) in[i].valid = false;  // 800 ms gap
        in[0].valid = false;                                // unflanked
        const auto out = clean_pupil(in, 500);
        REQUIRE(out.size() == in.size());
        CHECK_FALSE(out[0].valid);
        for (int i = 5; i < 8; ++i) {
            CHECK(out[i].valid);
            const double expect = 4.04 + (4.08 - 4.04) * (i - 4) / 4.0;
            CHECK(out[i].d_mm == doctest::Approx(expect));
        }
        for (int i = 15; i < 23; ++i) CHECK_FALSE(out[i].valid);
    }

    TEST_CASE("uniform resampling reproduces a line exactly") {
        std::vector<PupilSample> in;
        for (int i = 0; i < 50; ++i) in.push_back({i * 40, 3.0 + 0.002 * i * 40, true});
        const auto grid = resample_uniform(in, 60.0, 0, 2000);
        REQUIRE(grid.size() > 100);
        for (size_t k = 0; k < grid.size(); ++k) {
            const double t = k * 1000.0 / 60.0;
            CHECK(grid[k] == doctest::Approx(3.0 + 0.002 * t).epsilon(1e-9));
        }
    }

    TEST_CASE("too few valid samples is an error") {
        std::vector<PupilSample> in;
        for (int i = 0; i < 5; ++i) in.push_back({i * 100, 4.0, true});
        CHECK_THROWS_AS((void)resample_uniform(in, 60.0, 0, 1000), DlError);
    }
}

TEST_SUITE("effort") {
    TEST_CASE("constant signal has zero activity") {
        const std::vector<double> flat(600, 4.2);
        CHECK(ipa_from_signal(flat, 10.0) == 0.0);
    }

    TEST_CASE("constant pupil gives zero effort everywhere") {
        const DyadSession s = testutil::calm_session(300000, 60000);
        for (Participant p : {Participant::a, Participant::b}) {
            const MetricSeries me = me_series(s, p);
            REQUIRE(me.size() > 200);
            for (double v : me.value) CHECK(v == 0.0);
        }
    }

    TEST_CASE("bursty signal has strictly positive activity") {
        std::vector<double> x(600, 4.0);
        for (size_t i = 30; i < x.size(); i += 60) x[i] += 0.3;
        CHECK(ipa_from_signal(x, 10.0) > 0.0);
    }

    TEST_CASE("me series timing") {
        SynthConfig cfg;
        cfg.seed = 21;
        cfg.duration_s = 120;
        cfg.calibration_s = 30;
        const DyadSession s = gen_dyad(cfg);
        const MetricSeries me = me_series(s, Participant::a);
        CHECK(me.name == "ME_A");
        CHECK(me.window_ms == 10000);
        REQUIRE(me.size() > 0);
        CHECK(me.start_ms.front() == 0);
        for (size_t i = 1; i < me.size(); ++i)
            CHECK(me.start_ms[i] - me.start_ms[i - 1] == 1000);
        CHECK(me.start_ms.back() <= 120000 - 10000);
    }
}

TEST_SUITE("joint effort") {
    TEST_CASE("cross-recurrence rate on enumerable fixtures") {
        const std::vector<int> a{1, 2, 3};
        CHECK(crqa_rr(a, a) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        const std::vector<int> b{3, 2, 1};
        CHECK(crqa_rr(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        const std::vector<int> c{1, 1, 1};
        CHECK(crqa_rr(c, c) == 1.0);
        const std::vector<int> d{4, 5, 6};
        CHECK(crqa_rr(a, d) == 0.0);
        const std::vector<int> e{1, 1, 2, 2};
        const std::vector<int> f{1, 2, 2, 2};
        CHECK(crqa_rr(e, f) == doctest::Approx(8.0 / 16.0).epsilon(1e-15));
    }

    TEST_CASE("quantile bins spread a distinct sample evenly") {
        std::vector<double> ref(210);
        for (size_t i = 0; i < ref.size(); ++i) ref[i] = std::sin(double(i) * 12.9898) * 43758.5;
        const auto bins = quantile_bins(ref, ref, 21);
        std::map<int, int> occupancy;
        for (int b : bins) {
            CHECK(b >= 0);
            CHECK(b < 21);
            occupancy[b]++;
        }
        REQUIRE(occupancy.size() == 21);
        for (const auto& [bin, n] : occupancy) CHECK(n == 10);
    }

    TEST_CASE("ties share a bin") {
        const std::vector<double> ref{1.0, 1.0, 1.0, 2.0, 2.0, 2.0};
        const auto bins = quantile_bins(ref, ref, 3);
        CHECK(bins[0] == bins[1]);
        CHECK(bins[1] == bins[2]);
        CHECK(bins[3] == bins[4]);
        CHECK(bins[0] != bins[3]);
    }

    TEST_CASE("cosine of window vectors") {
        const std::vector<double> a{1.0, 2.0, 3.0};
        CHECK(cosine_vec(a, a) == doctest::Approx(1.0).epsilon(1e-15));
        const std::vector<double> z{0.0, 0.0, 0.0};
        CHECK(cosine_vec(a, z) == 0.0);
        const std::vector<double> x{1.0, 0.0};
        const std::vector<double> y{0.0, 1.0};
        CHECK(cosine_vec(x, y) == 0.0);
    }

    TEST_CASE("jme series covers the task span under both readouts") {
        SynthConfig cfg;
        cfg.seed = 13;
        cfg.duration_s = 300;
        cfg.mode = SynthMode::steady;
        cfg.coupling_kappa = 0.6;
        const DyadSession s = gen_dyad(cfg);
        for (JmeMethod m : {JmeMethod::crqa, JmeMethod::cosine}) {
            const MetricSeries jme = jme_series(s, {.window_ms = 10000, .method = m});
            CHECK(jme.name == "JME");
            REQUIRE(jme.size() == 21);
            CHECK(jme.start_ms.front() == 90000);
            for (double v : jme.value) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }

    TEST_CASE("zero-effort windows are defined") {
        const DyadSession s = testutil::calm_session(200000, 60000);
        const MetricSeries jme = jme_series(s, {});
        REQUIRE(jme.size() == 14);
        for (double v : jme.value) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
