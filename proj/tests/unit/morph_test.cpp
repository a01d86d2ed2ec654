#include "tdvim/morph.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

using namespace tdvim;
using tdvim::testing::error_kind;
using tdvim::testing::slurp;
using tdvim::testing::TempDir;

namespace {

RecordingMeta rec(std::string subject, Gender g, std::string sentence, std::string device = "D",
                  std::string language = "L", int session = 1) {
    RecordingMeta r;
    r.subject_id = std::move(subject);
    r.gender = g;
    r.device = std::move(device);
    r.language = std::move(language);
    r.session = session;
    r.sentence_id = std::move(sentence);
    r.path = "/nowhere/" + r.subject_id + "_" + r.sentence_id + "_" + std::to_string(session) + ".wav";
    return r;
}

Manifest gendered(int females, int males, const std::vector<std::string>& sentences) {
    Manifest m;
    for (const auto& s : sentences) {
        for (int i = 0; i < females; ++i) m.records.push_back(rec("F" + std::to_string(i), Gender::F, s));
        for (int i = 0; i < males; ++i) m.records.push_back(rec("M" + std::to_string(i), Gender::M, s));
    }
    return m;
}

// Independent count: within every cell, n_g (n_g - 1) ordered pairs per gender.
std::size_t brute_force_count(const Manifest& m, GenderMode mode, std::size_t factors) {
    std::map<std::tuple<std::string, std::string, int, std::string>, std::vector<const RecordingMeta*>> cells;
    for (const auto& r : m.records) cells[{r.device, r.language, r.session, r.sentence_id}].push_back(&r);
    std::size_t total = 0;
    for (const auto& [key, rs] : cells) {
        for (const auto* a : rs) {
            for (const auto* b : rs) {
                if (a == b || a->subject_id == b->subject_id || a->gender != b->gender) continue;
                if (mode == GenderMode::FF && a->gender != Gender::F) continue;
                if (mode == GenderMode::MM && a->gender != Gender::M) continue;
                total += factors;
            }
        }
    }
    return total;
}

}  // namespace

TEST(MorphFactor, ProportionsAndParsing) {
    EXPECT_EQ(proportion(MorphFactor::M25), 0.25);
    EXPECT_EQ(proportion(MorphFactor::M100), 1.0);
    EXPECT_EQ(parse_factor("m75"), MorphFactor::M75);
    EXPECT_EQ(parse_factor("50"), MorphFactor::M50);
    EXPECT_EQ(parse_factor("M100"), MorphFactor::M100);
    EXPECT_FALSE(parse_factor("M33").has_value());
    EXPECT_EQ(to_string(MorphFactor::M25), "M25");
}

TEST(SelectPortionLength, Examples) {
    EXPECT_EQ(select_portion_length(100, MorphFactor::M25), 25u);
    EXPECT_EQ(select_portion_length(100, MorphFactor::M100), 100u);
    EXPECT_EQ(select_portion_length(7, MorphFactor::M50), 3u);
    EXPECT_EQ(select_portion_length(7, MorphFactor::M75), 5u);
}

TEST(Morph, PortionAverageExample) {
    const AudioSignal s1({0.2f, 0.4f, 0.6f, 0.8f}, 16000);
    const AudioSignal s2({0.6f, 0.2f, 0.2f, 0.4f}, 16000);
    const auto r = morph(s1, s2, MorphFactor::M50, MorphMode::PortionAverage);
    EXPECT_EQ(r.signal, AudioSignal({0.4f, 0.3f, 0.6f, 0.8f}, 16000));
    EXPECT_EQ(r.p, 2u);
    EXPECT_EQ(r.padded_len, 4u);
}

TEST(Morph, LiteralHalvingExample) {
    const AudioSignal s1({0.2f, 0.4f, 0.6f, 0.8f}, 16000);
    const AudioSignal s2({0.6f, 0.2f, 0.2f, 0.4f}, 16000);
    const auto r = morph(s1, s2, MorphFactor::M50, MorphMode::LiteralHalving);
    EXPECT_EQ(r.signal, AudioSignal({0.4f, 0.3f, 0.3f, 0.4f}, 16000));
}

TEST(Morph, PortionFromOriginalSecondLength) {
    const AudioSignal s1({0.1f, -0.2f, 0.3f, -0.4f}, 16000);
    const AudioSignal s2({0.5f, 0.5f}, 16000);
    const auto r = morph(s1, s2, MorphFactor::M100);
    EXPECT_EQ(r.p, 2u);
    EXPECT_EQ(r.padded_len, 4u);
    EXPECT_EQ(r.signal, AudioSignal({(0.1f + 0.5f) / 2, (-0.2f + 0.5f) / 2, 0.3f, -0.4f}, 16000));
}

TEST(Morph, LongerSecondSignal) {
    const AudioSignal s1({0.4f}, 16000);
    const AudioSignal s2({0.2f, 0.6f, -0.2f, 0.8f}, 16000);
    const auto r = morph(s1, s2, MorphFactor::M75);
    EXPECT_EQ(r.p, 3u);
    EXPECT_EQ(r.signal, AudioSignal({0.3f, 0.3f, -0.1f, 0.0f}, 16000));
}

TEST(Morph, Errors) {
    EXPECT_EQ(error_kind([] { morph(AudioSignal({0.1f}, 16000), AudioSignal({0.1f}, 8000), MorphFactor::M50); }),
              ErrorKind::SampleRateMismatch);
    EXPECT_EQ(error_kind([] { morph(AudioSignal({}, 16000), AudioSignal({0.1f}, 16000), MorphFactor::M50); }),
              ErrorKind::EmptyAudio);
}

TEST(Morph, Properties) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> len(1, 500);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = tdvim::testing::random_signal(rng, len(rng));
        const auto b = tdvim::testing::random_signal(rng, len(rng));
        const auto f = kAllFactors[static_cast<std::size_t>(trial % 4)];
        const auto [pa, pb] = zero_pad_pair(a, b);
        const auto portion = morph(a, b, f, MorphMode::PortionAverage);
        const auto literal = morph(a, b, f, MorphMode::LiteralHalving);
        ASSERT_EQ(portion.p, select_portion_length(b.size(), f));
        ASSERT_EQ(portion.signal.size(), std::max(a.size(), b.size()));
        for (std::size_t i = 0; i < portion.signal.size(); ++i) {
            const float x = pa.samples()[i];
            const float y = pb.samples()[i];
            if (i < portion.p) {
                ASSERT_EQ(portion.signal.samples()[i], (x + y) / 2.0f);
                ASSERT_EQ(literal.signal.samples()[i], (x + y) / 2.0f);
            } else {
                ASSERT_EQ(portion.signal.samples()[i], x);
                ASSERT_EQ(literal.signal.samples()[i], x / 2.0f);
            }
            ASSERT_LE(std::abs(portion.signal.samples()[i]), 1.0f);
            ASSERT_LE(std::abs(literal.signal.samples()[i]), 1.0f);
        }
    }
}

TEST(Morph, SelfMorphIdentity) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = tdvim::testing::random_signal(rng, 1000 + static_cast<std::size_t>(trial));
        EXPECT_EQ(morph(x, x, MorphFactor::M100).signal, x);
    }
}

TEST(MorphId, NamingScheme) {
    MorphSpec s{rec("A", Gender::F, "S2", "iPhone11", "Hindi"), rec("B", Gender::F, "S2", "iPhone11", "Hindi"),
                MorphFactor::M75, MorphMode::PortionAverage};
    EXPECT_EQ(morph_id(s), "A_B_M75_S2_iPhone11_Hindi");
    s.first.session = s.second.session = 2;
    EXPECT_EQ(morph_id(s), "A_B_M75_S2_iPhone11_Hindi_s2");
}

TEST(Pairings, TwoSubjectsOneFactor) {
    const auto m = gendered(2, 0, {"S1"});
    PairingPolicy p;
    p.factors = {MorphFactor::M50};
    const auto specs = generate_pairings(m, p);
    ASSERT_EQ(specs.size(), 2u);
    EXPECT_EQ(specs[0].first.subject_id, "F0");
    EXPECT_EQ(specs[0].second.subject_id, "F1");
    EXPECT_EQ(specs[1].first.subject_id, "F1");
    EXPECT_EQ(specs[1].second.subject_id, "F0");
}

TEST(Pairings, GenderModes) {
    const auto m = gendered(3, 2, {"S1"});
    PairingPolicy p;
    p.factors = {MorphFactor::M100};
    p.gender_mode = GenderMode::FF;
    EXPECT_EQ(generate_pairings(m, p).size(), 6u);
    p.gender_mode = GenderMode::MM;
    EXPECT_EQ(generate_pairings(m, p).size(), 2u);
    p.gender_mode = GenderMode::Combined;
    const auto all = generate_pairings(m, p);
    EXPECT_EQ(all.size(), 8u);
    for (const auto& s : all) {
        EXPECT_EQ(s.first.gender, s.second.gender);
        EXPECT_NE(s.first.subject_id, s.second.subject_id);
    }
}

TEST(Pairings, SixBalancedSubjects) {
    const auto m = gendered(3, 3, {"S1", "S2", "S3"});
    PairingPolicy p;
    EXPECT_EQ(generate_pairings(m, p).size(), 144u);
    p.factors = {MorphFactor::M100};
    EXPECT_EQ(generate_pairings(m, p).size(), 36u);
}

TEST(Pairings, CountLawAgainstBruteForce) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> n(0, 5);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        Manifest m;
        const int females = n(rng);
        const int males = n(rng);
        for (const auto* device : {"D1", "D2"}) {
            for (const auto* sentence : {"S1", "S2"}) {
                for (int i = 0; i < females; ++i) {
                    if (coin(rng)) m.records.push_back(rec("F" + std::to_string(i), Gender::F, sentence, device));
                }
                for (int i = 0; i < males; ++i) {
                    if (coin(rng)) m.records.push_back(rec("M" + std::to_string(i), Gender::M, sentence, device));
                }
            }
        }
        for (const auto mode : {GenderMode::FF, GenderMode::MM, GenderMode::Combined}) {
            PairingPolicy p;
            p.gender_mode = mode;
            p.factors = {MorphFactor::M25, MorphFactor::M100};
            EXPECT_EQ(generate_pairings(m, p).size(), brute_force_count(m, mode, 2));
        }
    }
}

TEST(Pairings, OrderInvariance) {
    auto m = gendered(3, 3, {"S1", "S2"});
    PairingPolicy p;
    const auto reference = generate_pairings(m, p);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 5; ++i) {
        std::shuffle(m.records.begin(), m.records.end(), rng);
        const auto shuffled = generate_pairings(m, p);
        ASSERT_EQ(shuffled.size(), reference.size());
        for (std::size_t k = 0; k < reference.size(); ++k) {
            EXPECT_EQ(morph_id(shuffled[k]), morph_id(reference[k]));
        }
    }
}

TEST(Pairings, SessionFilter) {
    Manifest m;
    for (int session = 1; session <= 2; ++session) {
        m.records.push_back(rec("A", Gender::F, "S1", "D", "L", session));
        m.records.push_back(rec("B", Gender::F, "S1", "D", "L", session));
    }
    PairingPolicy p;
    p.factors = {MorphFactor::M50};
    EXPECT_EQ(generate_pairings(m, p).size(), 4u);
    p.session = 2;
    const auto only = generate_pairings(m, p);
    ASSERT_EQ(only.size(), 2u);
    EXPECT_EQ(only[0].first.session, 2);
}

TEST(BatchMorph, WritesOneFilePerSpecAndRecordsFailures) {
    TempDir dir;
    std::mt19937_64 rng(2);
    Manifest m;
    for (int i = 0; i < 3; ++i) {
        auto r = rec("F" + std::to_string(i), Gender::F, "S1");
        r.path = dir / (r.subject_id + ".wav");
        write_wav(tdvim::testing::random_signal(rng, 800 + 100 * static_cast<std::size_t>(i)), r.path);
        m.records.push_back(r);
    }
    PairingPolicy p;
    p.factors = {MorphFactor::M50};
    const auto specs = generate_pairings(m, p);
    ASSERT_EQ(specs.size(), 6u);

    const auto out = dir / "out";
    const auto ok = batch_morph(specs, out, 3);
    EXPECT_TRUE(ok.ok());
    ASSERT_EQ(ok.records.size(), 6u);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        EXPECT_EQ(ok.records[i].path.filename(), morph_id(specs[i]) + ".wav");
        EXPECT_TRUE(std::filesystem::exists(ok.records[i].path));
        EXPECT_EQ(ok.records[i].p, select_portion_length(read_wav(specs[i].second.path).size(), MorphFactor::M50));
    }

    const auto bytes = slurp(ok.records[0].path);
    const auto again = batch_morph(specs, out, 1);
    EXPECT_EQ(slurp(again.records[0].path), bytes);

    auto broken = specs;
    broken[2].second.path = dir / "missing.wav";
    const auto partial = batch_morph(broken, dir / "partial", 2);
    EXPECT_EQ(partial.records.size(), 5u);
    ASSERT_EQ(partial.failures.size(), 1u);
    EXPECT_EQ(partial.failures[0].index, 2u);
    EXPECT_FALSE(partial.ok());
}

TEST(MorphManifest, RoundTrip) {
    TempDir dir;
    MorphRecord r;
    r.first_subject = "A";
    r.second_subject = "B";
    r.gender_pair = GenderPair::MM;
    r.factor = MorphFactor::M25;
    r.sentence_id = "S1";
    r.device = "D";
    r.language = "L";
    r.session = 1;
    r.p = 10;
    r.padded_len = 40;
    r.path = dir / "wav" / "A_B_M25_S1_D_L.wav";
    write_morph_manifest({r}, dir / "morphs.csv");
    const auto back = load_morph_manifest(dir / "morphs.csv");
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0], r);
    EXPECT_EQ(back[0].id(), "A_B_M25_S1_D_L");
    EXPECT_NE(slurp(dir / "morphs.csv").find(std::string(kMorphManifestHeader)), std::string::npos);
}
