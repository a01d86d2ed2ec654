#pragma once

#include "tdvim/audio.hpp"
#include "tdvim/corpus.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tdvim {

/// Share of the second contributor's signal averaged into the first.
enum class MorphFactor { M25, M50, M75, M100 };

inline constexpr std::array<MorphFactor, 4> kAllFactors{MorphFactor::M25, MorphFactor::M50, MorphFactor::M75,
                                                        MorphFactor::M100};

double proportion(MorphFactor f) noexcept;
std::string_view to_string(MorphFactor f) noexcept;
/// Accepts "M25", "m25", "25" and the same for 50/75/100.
std::optional<MorphFactor> parse_factor(std::string_view text);

enum class MorphMode {
    /// Average inside the selected prefix, pass the first signal through after it.
    PortionAverage,
    /// Average inside the prefix, halve the first signal after it.
    LiteralHalving,
};

std::string_view to_string(MorphMode m) noexcept;

enum class GenderPair { FF, MM };

std::string_view to_string(GenderPair g) noexcept;
std::optional<GenderPair> parse_gender_pair(std::string_view text);

struct MorphSpec {
    RecordingMeta first;   // full-signal contributor
    RecordingMeta second;  // portion-selected contributor
    MorphFactor factor = MorphFactor::M100;
    MorphMode mode = MorphMode::PortionAverage;

    GenderPair gender_pair() const { return first.gender == Gender::F ? GenderPair::FF : GenderPair::MM; }
};

/// {first}_{second}_{factor}_{sentence}_{device}_{language}, with a
/// _s{session} suffix for sessions other than 1.
std::string morph_id(const MorphSpec& spec);

struct MorphRecord {
    std::string first_subject;
    std::string second_subject;
    GenderPair gender_pair = GenderPair::FF;
    MorphFactor factor = MorphFactor::M100;
    std::string sentence_id;
    std::string device;
    std::string language;
    int session = 1;
    std::size_t p = 0;
    std::size_t padded_len = 0;
    std::filesystem::path path;

    std::string id() const { return path.stem().string(); }
    friend bool operator==(const MorphRecord&, const MorphRecord&) = default;
};

/// p = floor(n2 * proportion), computed in exact integer arithmetic.
std::size_t select_portion_length(std::size_t n2, MorphFactor factor);

struct MorphResult {
    AudioSignal signal;
    std::size_t p = 0;
    std::size_t padded_len = 0;
};

/// Time-domain morph of s1 (full) with the leading portion of s2.
MorphResult morph(const AudioSignal& s1, const AudioSignal& s2, MorphFactor factor,
                  MorphMode mode = MorphMode::PortionAverage);

enum class GenderMode { FF, MM, Combined };

std::optional<GenderMode> parse_gender_mode(std::string_view text);

struct PairingPolicy {
    GenderMode gender_mode = GenderMode::Combined;
    std::vector<MorphFactor> factors{kAllFactors.begin(), kAllFactors.end()};
    MorphMode mode = MorphMode::PortionAverage;
    /// Restrict morph generation to one recording session; nullopt uses all.
    std::optional<int> session;
};

/// All ordered same-gender pairs per (device, language, session, sentence)
/// cell, crossed with every factor. Output order is canonical: cells sorted,
/// then first subject, second subject, factor.
std::vector<MorphSpec> generate_pairings(const Manifest& m, const PairingPolicy& policy);

struct MorphFailure {
    std::size_t index = 0;
    std::string morph_id;
    std::string message;
};

struct BatchMorphResult {
    std::vector<MorphRecord> records;  // in spec order, failed items omitted
    std::vector<MorphFailure> failures;

    bool ok() const { return failures.empty(); }
};

/// Writes one WAV per spec into out_dir. Per-item failures are collected
/// instead of aborting the batch.
BatchMorphResult batch_morph(const std::vector<MorphSpec>& specs, const std::filesystem::path& out_dir,
                             int jobs = 1);

inline constexpr std::string_view kMorphManifestHeader =
    "first_subject,second_subject,gender_pair,factor,sentence_id,device,language,session,p,padded_len,path";

void write_morph_manifest(const std::vector<MorphRecord>& records, const std::filesystem::path& path);
std::vector<MorphRecord> load_morph_manifest(const std::filesystem::path& path);

}  // namespace tdvim
