// Harmonic-plus-noise stand-in speakers for desk-scale runs.
//
// Identity lives in f0 and in a fixed set of three formant resonances; the
// utterance "content" is a per-sentence prosodic skeleton (syllable timing,
// loudness, pitch contour, vowel colouring) shared by every speaker.

#include "tdvim/corpus.hpp"

#include "tdvim/audio.hpp"
#include "tdvim/error.hpp"
#include "tdvim/parallel.hpp"
#include "detail/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace tdvim {

namespace {

struct Syllable {
    double start = 0.0;
    double end = 0.0;
    double amplitude = 1.0;
    double pitch_start = 1.0;
    double pitch_end = 1.0;
    std::array<double, 3> vowel{1.0, 1.0, 1.0};
};

constexpr double kLeadSilence = 0.12;
constexpr double kTailSilence = 0.10;
constexpr double kPeak = 0.7;
constexpr std::array<double, 3> kFormantGain{1.0, 0.65, 0.35};
constexpr std::array<double, 3> kFormantBandwidth{90.0, 120.0, 170.0};

double frac(double x) {
    return x - std::floor(x);
}

std::vector<Syllable> sentence_skeleton(std::string_view sentence_id, double duration, std::uint64_t seed) {
    detail::Rng rng(detail::mix_seed(seed, std::string("sentence|") + std::string(sentence_id)));
    std::vector<Syllable> out;
    double t = kLeadSilence;
    while (t < duration - kTailSilence - 0.08) {
        Syllable s;
        s.start = t;
        s.end = std::min(t + rng.uniform(0.14, 0.30), duration - kTailSilence);
        s.amplitude = rng.uniform(0.55, 1.0);
        s.pitch_start = rng.uniform(0.92, 1.10);
        s.pitch_end = rng.uniform(0.85, 1.12);
        for (auto& v : s.vowel) {
            v = rng.uniform(0.90, 1.10);
        }
        out.push_back(s);
        t = s.end + rng.uniform(0.04, 0.12);
    }
    return out;
}

}  // namespace

SynthSpeakerProfile make_speaker_profile(int index, std::uint64_t seed) {
    if (index < 0) {
        throw Error(ErrorKind::InvalidArgument, "speaker index must be non-negative");
    }
    SynthSpeakerProfile p;
    char id[32];
    std::snprintf(id, sizeof id, "spk%03d", index + 1);
    p.subject_id = id;
    p.gender = index % 2 == 0 ? Gender::F : Gender::M;
    p.seed = detail::mix_seed(seed, std::string("speaker|") + p.subject_id);

    // Additive recurrences spread speakers of one gender evenly over the
    // parameter box whatever the corpus size; the seed only shifts the origin.
    detail::Rng rng(p.seed);
    const double k = static_cast<double>(index / 2);
    const double origin = frac(static_cast<double>(seed % 1000003) * 0.0001234567);
    const double u_f0 = frac(origin + k * 0.6180339887498949);
    const double u_f1 = frac(origin + k * 0.4142135623730951 + 0.37);
    const double u_f2 = frac(origin + k * 0.7320508075688772 + 0.11);
    const double u_f3 = frac(origin + k * 0.2360679774997897 + 0.73);

    const bool female = p.gender == Gender::F;
    const double lo = female ? kFemaleF0Min : kMaleF0Min;
    const double hi = female ? kFemaleF0Max : kMaleF0Max;
    p.f0 = lo + (hi - lo) * (0.04 + 0.92 * u_f0);
    const double scale = female ? 1.12 : 1.0;
    p.formants = {scale * (350.0 + 400.0 * u_f1), scale * (1100.0 + 900.0 * u_f2),
                  scale * (2400.0 + 700.0 * u_f3)};
    p.jitter = rng.uniform(0.005, 0.02);
    return p;
}

std::vector<float> synthesize_utterance(const SynthSpeakerProfile& profile, std::string_view sentence_id,
                                        int session, const SynthConfig& config, std::uint64_t seed) {
    const int sr = config.sample_rate;
    const auto n = static_cast<std::size_t>(std::llround(config.duration_s * sr));
    const auto skeleton = sentence_skeleton(sentence_id, config.duration_s, seed);

    detail::Rng session_rng(
        detail::mix_seed(profile.seed, "session|" + std::to_string(session)));
    const double f0 = profile.f0 * (1.0 + 0.015 * std::clamp(session_rng.normal(), -2.0, 2.0));
    std::array<double, 3> formants = profile.formants;
    for (auto& f : formants) {
        f *= 1.0 + 0.01 * std::clamp(session_rng.normal(), -2.0, 2.0);
    }

    detail::Rng rng(detail::mix_seed(
        profile.seed, std::string("utt|") + std::string(sentence_id) + "|" + std::to_string(session)));

    const double nyquist_cap = std::min(0.45 * sr, 5000.0);
    const std::size_t block = static_cast<std::size_t>(sr / 100);
    std::vector<double> voiced(n, 0.0);
    std::vector<double> amps;
    double phase = 0.0;
    double jitter_state = 0.0;

    for (const auto& syl : skeleton) {
        const auto begin = static_cast<std::size_t>(syl.start * sr);
        const auto end = std::min(n, static_cast<std::size_t>(syl.end * sr));
        if (end <= begin) {
            continue;
        }
        const double len = static_cast<double>(end - begin);
        for (std::size_t b0 = begin; b0 < end; b0 += block) {
            const std::size_t b1 = std::min(end, b0 + block);
            jitter_state = 0.7 * jitter_state + 0.3 * std::clamp(rng.normal(), -3.0, 3.0);
            const double u_mid = (static_cast<double>(b0 - begin) + 0.5 * static_cast<double>(b1 - b0)) / len;
            const double contour = syl.pitch_start + (syl.pitch_end - syl.pitch_start) * u_mid;
            const double f = f0 * contour * (1.0 + profile.jitter * jitter_state);

            const int harmonics = std::max(1, static_cast<int>(nyquist_cap / f));
            amps.assign(static_cast<std::size_t>(harmonics), 0.0);
            for (int h = 1; h <= harmonics; ++h) {
                const double fh = h * f;
                double a = 0.02;
                for (std::size_t j = 0; j < 3; ++j) {
                    const double centre = formants[j] * syl.vowel[j];
                    const double d = (fh - centre) / kFormantBandwidth[j];
                    a += kFormantGain[j] / (1.0 + d * d);
                }
                amps[static_cast<std::size_t>(h - 1)] = a / std::pow(static_cast<double>(h), 0.3);
            }

            const double dphi = 2.0 * std::numbers::pi * f / sr;
            for (std::size_t i = b0; i < b1; ++i) {
                phase += dphi;
                if (phase > 2.0 * std::numbers::pi) {
                    phase -= 2.0 * std::numbers::pi;
                }
                const double u = (static_cast<double>(i - begin) + 0.5) / len;
                const double attack = std::min(1.0, u / 0.2);
                const double release = std::min(1.0, (1.0 - u) / 0.3);
                const double env = std::sin(0.5 * std::numbers::pi * std::min(attack, release));
                double v = 0.0;
                for (int h = 1; h <= harmonics; ++h) {
                    v += amps[static_cast<std::size_t>(h - 1)] * std::sin(h * phase);
                }
                voiced[i] = syl.amplitude * env * env * v;
            }
        }
    }

    double peak = 0.0;
    for (const double v : voiced) {
        peak = std::max(peak, std::abs(v));
    }
    const double gain = peak > 0.0 ? kPeak / peak : 0.0;
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = gain * voiced[i] + config.noise_floor * std::clamp(rng.normal(), -4.0, 4.0);
        out[i] = static_cast<float>(std::clamp(s, -1.0, 1.0));
    }
    return out;
}

Manifest synth_corpus(int n_speakers, const std::vector<std::string>& sentences, const SynthConfig& config,
                      std::uint64_t seed, const std::filesystem::path& out_dir, int jobs) {
    if (n_speakers < 2) {
        throw Error(ErrorKind::ConfigError, "at least 2 speakers are required, got " + std::to_string(n_speakers));
    }
    if (sentences.empty()) {
        throw Error(ErrorKind::ConfigError, "at least one sentence is required");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
    }

    std::vector<SynthSpeakerProfile> speakers;
    for (int i = 0; i < n_speakers; ++i) {
        speakers.push_back(make_speaker_profile(i, seed));
    }

    Manifest m;
    m.name = "synthetic";
    for (const auto& spk : speakers) {
        for (int session = 1; session <= config.sessions; ++session) {
            for (const auto& sentence : sentences) {
                RecordingMeta r;
                r.subject_id = spk.subject_id;
                r.gender = spk.gender;
                r.device = config.device;
                r.language = config.language;
                r.session = session;
                r.sentence_id = sentence;
                r.path = out_dir / (spk.subject_id + "_" + sentence + "_sess" + std::to_string(session) + ".wav");
                r.sample_rate = config.sample_rate;
                m.records.push_back(std::move(r));
            }
        }
    }

    const std::size_t per_speaker = m.records.size() / speakers.size();
    parallel_for(m.records.size(), jobs, [&](std::size_t i) {
        const auto& r = m.records[i];
        const auto& spk = speakers[i / per_speaker];
        AudioSignal sig(synthesize_utterance(spk, r.sentence_id, r.session, config, seed), config.sample_rate);
        write_wav(sig, r.path);
    });
    return m;
}

}  // namespace tdvim
