#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tdvim {

enum class Gender { F, M };

std::string_view to_string(Gender g);
std::optional<Gender> parse_gender(std::string_view text);

struct RecordingMeta {
    std::string subject_id;
    Gender gender = Gender::F;
    std::string device;
    std::string language;
    int session = 1;
    std::string sentence_id;
    std::filesystem::path path;
    int sample_rate = 16000;

    friend bool operator==(const RecordingMeta&, const RecordingMeta&) = default;
};

struct Manifest {
    std::string name;
    std::vector<RecordingMeta> records;
};

inline constexpr std::string_view kManifestHeader =
    "subject_id,gender,device,language,session,sentence_id,path,sample_rate";

/// Parses a manifest CSV. Relative paths are resolved against the directory
/// holding the manifest. Row order is preserved.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view csv_text, const std::filesystem::path& base_dir,
                        std::string name = {});

/// Writes a manifest CSV. Paths under the manifest's directory are stored
/// relative to it so an output tree can be moved without breaking references.
void write_manifest(const Manifest& m, const std::filesystem::path& path);

struct SampleRateConflict {
    std::string device;
    std::string language;
    std::vector<int> rates;
};

struct ValidationReport {
    bool usable = true;
    std::vector<std::filesystem::path> missing_files;
    std::vector<SampleRateConflict> sample_rate_conflicts;
    std::vector<std::string> unpairable_subjects;
    std::vector<std::string> notes;

    bool clean() const {
        return usable && missing_files.empty() && sample_rate_conflicts.empty() &&
               unpairable_subjects.empty();
    }
};

ValidationReport validate_manifest(const Manifest& m);

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthConfig {
    double duration_s = 3.0;
    int sample_rate = 16000;
    double noise_floor = 0.01;
    int sessions = 1;
    std::string device = "SynthDevice";
    std::string language = "Synthetic";
};

/// Reads a flat key=value file ('#' starts a comment). Unknown keys and
/// out-of-range values raise ConfigError.
SynthConfig load_synth_config(const std::filesystem::path& path);
SynthConfig parse_synth_config(std::string_view text);

struct SynthSpeakerProfile {
    std::string subject_id;
    Gender gender = Gender::F;
    double f0 = 0.0;
    std::array<double, 3> formants{};
    double jitter = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr double kFemaleF0Min = 165.0;
inline constexpr double kFemaleF0Max = 255.0;
inline constexpr double kMaleF0Min = 85.0;
inline constexpr double kMaleF0Max = 155.0;

/// Speaker `index` (0-based) of a corpus built with `seed`. Even indices are
/// female, odd indices male.
SynthSpeakerProfile make_speaker_profile(int index, std::uint64_t seed);

/// Renders one utterance. Fully determined by (profile, sentence_id,
/// session, config, corpus seed).
std::vector<float> synthesize_utterance(const SynthSpeakerProfile& profile,
                                        std::string_view sentence_id, int session,
                                        const SynthConfig& config, std::uint64_t seed);

/// Writes n_speakers x |sentences| x config.sessions WAV files into out_dir
/// and returns the manifest describing them (not yet written to disk).
Manifest synth_corpus(int n_speakers, const std::vector<std::string>& sentences,
                      const SynthConfig& config, std::uint64_t seed,
                      const std::filesystem::path& out_dir, int jobs = 1);

}  // namespace tdvim
