#include "tdvim/corpus.hpp"
#include "tdvim/metrics.hpp"
#include "tdvim/morph.hpp"
#include "tdvim/svs.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace tdvim;

namespace {

AudioSignal noise(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<float> d(-0.5f, 0.5f);
    std::vector<float> v(n);
    for (auto& x : v) x = d(rng);
    return AudioSignal(std::move(v), 16000);
}

TrialTable table(std::size_t morphs, int attempts, int backends) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    TrialTable t;
    for (std::size_t m = 0; m < morphs; ++m) {
        for (int b = 0; b < backends; ++b) {
            for (int a = 1; a <= attempts; ++a) {
                for (const auto c : {Contributor::S1, Contributor::S2}) {
                    TrialRow r;
                    r.morph_id = "m" + std::to_string(m);
                    r.attack_type = kAllFactors[m % kAllFactors.size()];
                    r.attempt = a;
                    r.contributor = c;
                    r.backend = "b" + std::to_string(b);
                    r.score = score(rng);
                    t.rows.push_back(std::move(r));
                }
            }
        }
    }
    return t;
}

}  // namespace

static void BM_Morph(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = noise(rng, n);
    const auto b = noise(rng, n * 9 / 10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(morph(a, b, MorphFactor::M75));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Morph)->Arg(16000)->Arg(48000)->Arg(160000);

static void BM_ReferenceEmbed(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto s = noise(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(reference_embed(s));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ReferenceEmbed)->Arg(16000)->Arg(48000);

static void BM_GeneratePairings(benchmark::State& state) {
    Manifest m;
    for (int s = 0; s < state.range(0); ++s) {
        for (const auto* sentence : {"S1", "S2", "S3"}) {
            RecordingMeta r;
            r.subject_id = "sub" + std::to_string(1000 + s);
            r.device = "Dev";
            r.language = "L";
            r.sentence_id = sentence;
            r.path = r.subject_id + ".wav";
            m.records.push_back(r);
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_pairings(m, {}));
    }
}
BENCHMARK(BM_GeneratePairings)->Arg(5)->Arg(103)->Unit(benchmark::kMillisecond);

static void BM_GmapFull(benchmark::State& state) {
    const auto t = table(static_cast<std::size_t>(state.range(0)), 3, 3);
    const GmapConfig cfg{{{"b0", 0.5}, {"b1", 0.6}, {"b2", 0.7}}, GmapCapacity::Full, {}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(gmap(t, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.rows.size()));
}
BENCHMARK(BM_GmapFull)->Arg(144)->Arg(4096);

static void BM_Eer(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gen(0.7, 0.15);
    std::normal_distribution<double> imp(0.3, 0.15);
    ScoreSet s;
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        s.genuine.push_back(gen(rng));
        s.impostor.push_back(imp(rng));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(eer(s));
        benchmark::DoNotOptimize(threshold_at_fmr(s, 0.001));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 2);
}
BENCHMARK(BM_Eer)->Arg(200)->Arg(20000);
BENCHMARK_MAIN();
