#include "tdvim/corpus.hpp"
#include "tdvim/svs.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

using namespace tdvim;
using namespace std::chrono_literals;
using tdvim::testing::error_kind;
using tdvim::testing::spit;
using tdvim::testing::TempDir;

namespace {

const std::string kData = TDVIM_TEST_DATA_DIR;

std::string stub(const std::string& script) {
    return "/bin/sh " + kData + "/" + script + " {wav}";
}

AudioSignal voiced(int index, const std::string& sentence, std::uint64_t seed = 42) {
    return AudioSignal(synthesize_utterance(make_speaker_profile(index, seed), sentence, 1, SynthConfig{}, seed),
                       16000);
}

const Embedding& as_embedding(const AcquireResult& r) {
    return std::get<Embedding>(r);
}

std::string failure_reason(const AcquireResult& r) {
    return std::holds_alternative<AcquireFailure>(r) ? std::get<AcquireFailure>(r).reason : "<acquired>";
}

}  // namespace

TEST(Cosine, Examples) {
    const Embedding e{"e", {0.3, -1.2, 4.0}};
    EXPECT_NEAR(cosine_similarity(e, e), 1.0, 1e-12);
    EXPECT_EQ(cosine_similarity({"a", {1, 0}}, {"b", {0, 1}}), 0.0);
    // 32 / sqrt(14 * 77)
    EXPECT_NEAR(cosine_similarity({"a", {1, 2, 3}}, {"b", {4, 5, 6}}), 0.974631846, 1e-9);
    EXPECT_EQ(error_kind([] { cosine_similarity({"a", {1, 2}}, {"b", {1, 2, 3}}); }), ErrorKind::DimensionMismatch);
    EXPECT_EQ(error_kind([] { cosine_similarity({"a", {0, 0}}, {"b", {1, 2}}); }), ErrorKind::ZeroVector);
}

TEST(Cosine, SymmetricBoundedScaleInvariant) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> d;
    std::uniform_real_distribution<double> alpha(0.01, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        Embedding a{"a", {}};
        Embedding b{"b", {}};
        for (int i = 0; i < 40; ++i) {
            a.values.push_back(d(rng));
            b.values.push_back(d(rng));
        }
        const double ab = cosine_similarity(a, b);
        EXPECT_EQ(ab, cosine_similarity(b, a));
        EXPECT_GE(ab, -1.0);
        EXPECT_LE(ab, 1.0);
        Embedding scaled = a;
        const double k = alpha(rng);
        for (auto& v : scaled.values) v *= k;
        EXPECT_NEAR(cosine_similarity(scaled, b), ab, 1e-12);
    }
}

TEST(EmbeddingJson, RoundTripAndValidation) {
    const auto e = parse_embedding_json(R"({"id":"t","dim":2,"values":[1.0,0.0]})");
    EXPECT_EQ(e.id, "t");
    EXPECT_EQ(e.values, (std::vector<double>{1.0, 0.0}));
    const Embedding src{"x", {0.1, -2.5, 1e-300}};
    const auto back = parse_embedding_json(embedding_to_json(src));
    EXPECT_EQ(back.id, src.id);
    EXPECT_EQ(back.values, src.values);

    EXPECT_EQ(error_kind([] { parse_embedding_json(R"({"id":"t","dim":3,"values":[1.0,0.0]})"); }),
              ErrorKind::DimensionMismatch);
    EXPECT_EQ(error_kind([] { parse_embedding_json("not json"); }), ErrorKind::ParseError);
    EXPECT_EQ(error_kind([] { parse_embedding_json(R"({"id":"t","values":[1.0]})"); }), ErrorKind::ParseError);
    EXPECT_EQ(error_kind([] { parse_embedding_json(R"({"id":"t","dim":1,"values":["a"]})"); }),
              ErrorKind::ParseError);
    EXPECT_EQ(error_kind([] { parse_embedding_json(R"({"id":"t","dim":0,"values":[]})"); }), ErrorKind::ParseError);
}

TEST(BackendConfig, Parses) {
    const auto ds = parse_backend_config(
        "# comment\n"
        "name=ref;kind=reference;threshold=0.5\n"
        "\n"
        "name=xvec;kind=subprocess;fmr=0.001;timeout_s=5;jobs=2;command=python3 adapter.py {wav} --model a;b\n"
        "name=pre;kind=precomputed;threshold=0.8;dir=emb\n",
        "/base");
    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds[0].kind, BackendKind::Reference);
    EXPECT_EQ(ds[0].threshold, 0.5);
    EXPECT_FALSE(ds[0].fmr_target.has_value());
    EXPECT_EQ(ds[1].kind, BackendKind::Subprocess);
    EXPECT_EQ(ds[1].fmr_target, 0.001);
    EXPECT_EQ(ds[1].command, "python3 adapter.py {wav} --model a;b");
    EXPECT_EQ(ds[1].timeout, 5000ms);
    EXPECT_EQ(ds[1].max_concurrency, 2);
    EXPECT_EQ(ds[2].precomputed_dir, std::filesystem::path("/base/emb"));
}

TEST(BackendConfig, OperatingPointIsOptional) {
    const auto ds = parse_backend_config("name=a;kind=reference\n");
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_FALSE(ds[0].threshold);
    EXPECT_FALSE(ds[0].fmr_target);
}

TEST(BackendConfig, Rejects) {
    for (const auto* text : {
             "kind=reference;threshold=0.5\n",
             "name=a;kind=reference;threshold=0.5;fmr=0.01\n",
             "name=a;kind=reference;threshold=1.5\n",
             "name=a;kind=reference;fmr=1\n",
             "name=a;kind=magic;threshold=0.5\n",
             "name=a;kind=reference;threshold=0.5;colour=red\n",
             "name=a;kind=reference;threshold=x\n",
             "name=a;kind=reference;threshold=0.5\nname=a;kind=reference;threshold=0.6\n",
             "# nothing\n",
         }) {
        EXPECT_EQ(error_kind([&] { parse_backend_config(text); }), ErrorKind::ConfigError) << text;
    }
    EXPECT_EQ(error_kind([] { load_backend_config("/nonexistent/backends.cfg"); }), ErrorKind::ConfigError);
}

TEST(CommandTemplate, Expansion) {
    EXPECT_EQ(expand_command_template("tool --in {wav} -x", "/a b.wav"),
              (std::vector<std::string>{"tool", "--in", "/a b.wav", "-x"}));
    EXPECT_EQ(expand_command_template("sh -c 'cat \"{wav}\"'", "f.wav"),
              (std::vector<std::string>{"sh", "-c", "cat \"f.wav\""}));
    EXPECT_EQ(expand_command_template("tool --in={wav}", "f.wav"), (std::vector<std::string>{"tool", "--in=f.wav"}));
    EXPECT_EQ(error_kind([] { expand_command_template("tool --in x", "f.wav"); }), ErrorKind::ConfigError);
    EXPECT_EQ(error_kind([] { expand_command_template("tool '{wav}", "f.wav"); }), ErrorKind::ConfigError);
}

TEST(ExternalEmbed, ValidStub) {
    const auto r = external_embed(stub("emit_embedding.sh"), "/dev/null");
    ASSERT_TRUE(acquired(r)) << failure_reason(r);
    EXPECT_EQ(as_embedding(r).id, "t");
    EXPECT_EQ(as_embedding(r).values, (std::vector<double>{1.0, 0.0}));
}

TEST(ExternalEmbed, Failures) {
    EXPECT_EQ(failure_reason(external_embed(stub("dim_mismatch.sh"), "x.wav")), "dim mismatch");
    const auto exit3 = failure_reason(external_embed(stub("exit3.sh"), "x.wav"));
    EXPECT_EQ(exit3.rfind("exit 3", 0), 0u) << exit3;
    EXPECT_NE(exit3.find("cannot decode x.wav"), std::string::npos);
    EXPECT_FALSE(acquired(external_embed(stub("garbage.sh"), "x.wav")));
    EXPECT_FALSE(acquired(external_embed("/nonexistent/tool {wav}", "x.wav")));

    const auto start = std::chrono::steady_clock::now();
    EXPECT_EQ(failure_reason(external_embed(stub("hang.sh"), "x.wav", 300ms)), "timeout");
    EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
}

TEST(ExternalEmbed, PythonStubAdapter) {
    TempDir dir;
    write_wav(voiced(0, "S1"), dir / "ok.wav");
    spit(dir / "corrupt.wav", "RIFF garbage");
    const std::string cmd = "python3 " + kData + "/stub_adapter.py {wav}";
    const auto good = external_embed(cmd, dir / "ok.wav");
    ASSERT_TRUE(acquired(good)) << failure_reason(good);
    EXPECT_EQ(as_embedding(good).dim(), 16u);
    const auto again = external_embed(cmd, dir / "ok.wav");
    EXPECT_EQ(as_embedding(again).values, as_embedding(good).values);
    EXPECT_EQ(failure_reason(external_embed(cmd, dir / "corrupt.wav")).rfind("exit 3", 0), 0u);

    // Nothing reaches stdout when the adapter fails.
    const std::string shell = "python3 " + kData + "/stub_adapter.py " + (dir / "corrupt.wav").string() + " 2>/dev/null";
    FILE* pipe = ::popen(shell.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    char buf[64];
    const auto n = std::fread(buf, 1, sizeof(buf), pipe);
    const int status = ::pclose(pipe);
    EXPECT_EQ(n, 0u);
    EXPECT_EQ(WEXITSTATUS(status), 3);
}

TEST(ReferenceBackend, DimensionAndEnergyFloor) {
    VerifierDescriptor d;
    d.name = "ref";
    d.threshold = 0.5;
    const auto b = make_backend(d);
    const auto speech = voiced(0, "S1");
    EXPECT_NEAR(speech.duration_seconds(), 3.0, 1e-9);
    const auto r = b->embed(speech);
    ASSERT_TRUE(acquired(r));
    EXPECT_EQ(as_embedding(r).dim(), 40u);
    EXPECT_EQ(reference_dim(ReferenceConfig{}), 40);

    EXPECT_EQ(failure_reason(b->embed(AudioSignal(std::vector<float>(48000, 0.0f), 16000))), "below energy floor");
    EXPECT_EQ(failure_reason(b->embed(AudioSignal(std::vector<float>(300, 0.5f), 16000))), "too short");
}

TEST(ReferenceEmbed, DeterministicAndGainTolerant) {
    const auto s = voiced(1, "S2");
    const auto a = reference_embed(s);
    const auto b = reference_embed(s);
    EXPECT_EQ(a.values, b.values);

    std::vector<float> half(s.samples().begin(), s.samples().end());
    for (auto& v : half) v *= 0.5f;
    EXPECT_GE(cosine_similarity(a, reference_embed(AudioSignal(half, 16000))), 0.99);
}

TEST(ReferenceEmbed, ThreadIndependent) {
    const auto s = voiced(2, "S1");
    const auto expected = reference_embed(s).values;
    std::vector<std::vector<double>> got(4);
    {
        std::vector<std::jthread> threads;
        for (std::size_t i = 0; i < got.size(); ++i) {
            threads.emplace_back([&, i] { got[i] = reference_embed(s).values; });
        }
    }
    for (const auto& g : got) EXPECT_EQ(g, expected);
}

TEST(ReferenceEmbed, DistinctSpeakersSeparate) {
    const auto a1 = reference_embed(voiced(0, "S1"));
    const auto a2 = reference_embed(voiced(0, "S2"));
    const auto b1 = reference_embed(voiced(2, "S1"));
    const auto b2 = reference_embed(voiced(2, "S2"));
    const double self_a = cosine_similarity(a1, a2);
    const double self_b = cosine_similarity(b1, b2);
    const double cross = cosine_similarity(a1, b1);
    EXPECT_LT(cross, self_a);
    EXPECT_LT(cross, self_b);
}

TEST(PrecomputedBackend, ReadsByStem) {
    TempDir dir;
    spit(dir / "rec1.json", R"({"id":"rec1","dim":3,"values":[1,2,3]})");
    spit(dir / "bad.json", R"({"id":"bad","dim":4,"values":[1,2,3]})");
    VerifierDescriptor d;
    d.name = "pre";
    d.kind = BackendKind::Precomputed;
    d.threshold = 0.5;
    d.precomputed_dir = dir.path();
    const auto b = make_backend(d);
    const AudioSignal dummy({0.1f}, 16000);
    const auto r = b->embed(dummy, "/somewhere/rec1.wav");
    ASSERT_TRUE(acquired(r));
    EXPECT_EQ(as_embedding(r).values, (std::vector<double>{1, 2, 3}));
    EXPECT_FALSE(acquired(b->embed(dummy, "/somewhere/rec2.wav")));
    EXPECT_EQ(failure_reason(b->embed(dummy, "/x/bad.wav")), "dim mismatch");

    d.precomputed_dir.clear();
    EXPECT_EQ(error_kind([&] { make_backend(d); }), ErrorKind::ConfigError);
}

TEST(SubprocessBackend, ConcurrentCallsAndTemplateCheck) {
    VerifierDescriptor d;
    d.name = "sub";
    d.kind = BackendKind::Subprocess;
    d.threshold = 0.5;
    d.max_concurrency = 2;
    d.command = stub("emit_embedding.sh");
    const auto b = make_backend(d);
    std::vector<AcquireResult> results(8, AcquireFailure{});
    {
        std::vector<std::jthread> threads;
        for (std::size_t i = 0; i < results.size(); ++i) {
            threads.emplace_back([&, i] { results[i] = b->embed(AudioSignal({0.1f, 0.2f}, 16000)); });
        }
    }
    for (const auto& r : results) EXPECT_TRUE(acquired(r)) << failure_reason(r);

    d.command = "tool --no-placeholder";
    EXPECT_EQ(error_kind([&] { make_backend(d); }), ErrorKind::ConfigError);
}
