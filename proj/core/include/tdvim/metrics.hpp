#pragma once

#include "tdvim/morph.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tdvim {

// ---------------------------------------------------------------------------
// Verification error rates

struct ScoreSet {
    std::vector<double> genuine;
    std::vector<double> impostor;
};

struct ErrorRates {
    double fmr = 0.0;   // fraction of impostor scores >= t
    double fnmr = 0.0;  // fraction of genuine scores < t
};

ErrorRates fmr_fnmr(const ScoreSet& s, double threshold);

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

/// Sweeps every distinct score and every midpoint between consecutive
/// distinct scores; picks the threshold minimizing |FMR - FNMR| (lowest on
/// ties) and reports (FMR + FNMR) / 2 there.
EerResult eer(const ScoreSet& s);

/// Smallest threshold t with FMR(t) <= target_fmr. Empirical FMR only
/// changes at impostor scores, so t is the next representable double above
/// the impostor score that must be excluded.
double threshold_at_fmr(const ScoreSet& s, double target_fmr);

// ---------------------------------------------------------------------------
// Trial tables

enum class Contributor { S1, S2 };

std::string_view to_string(Contributor c) noexcept;

struct TrialRow {
    std::string morph_id;
    MorphFactor attack_type = MorphFactor::M100;
    int attempt = 1;
    Contributor contributor = Contributor::S1;
    std::string backend;
    std::optional<double> score;  // nullopt marks an acquire failure
    std::string device;
    std::string language;
    GenderPair gender_pair = GenderPair::FF;

    friend bool operator==(const TrialRow&, const TrialRow&) = default;
};

struct TrialTable {
    std::vector<TrialRow> rows;

    std::vector<std::string> backends() const;  // sorted, unique
    std::vector<MorphFactor> attack_types() const;
};

/// Orders rows by (morph_id, backend, attempt, contributor).
void sort_canonical(TrialTable& t);

inline constexpr std::string_view kTrialTableHeader =
    "morph_id,attack_type,attempt,contributor,backend,score,device,language,gender_pair";

/// Scores use the shortest round-trip decimal form; an empty cell marks an
/// acquire failure.
std::string trial_table_to_csv(const TrialTable& t);
TrialTable trial_table_from_csv(std::string_view text);
void write_trial_table(const TrialTable& t, const std::filesystem::path& path);
TrialTable load_trial_table(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Morph vulnerability

using Thresholds = std::map<std::string, double, std::less<>>;

/// Per morph, each contributor's best score across attempts must exceed the
/// threshold. Single-backend tables only. Percentage.
double mmpmr(const TrialTable& t, const Thresholds& thresholds);

/// Over all (morph, attempt) pairs, both contributors must exceed the
/// threshold in that same attempt. Single-backend tables only. Percentage.
double fmmpmr(const TrialTable& t, const Thresholds& thresholds);

struct MapMatrix {
    std::vector<std::string> backends;       // sorted names of the systems involved
    std::vector<std::vector<double>> cells;  // [r-1][c-1], percentages
};

/// cells[r-1][c-1]: share of morphs that, in at least r attempts, fool at
/// least c backends (an attempt fools a backend when both contributors
/// exceed its threshold).
MapMatrix map_matrix(const TrialTable& t, const Thresholds& thresholds);

enum class GmapCapacity { MultiProbe, MultiProbeMultiSvs, Full };

std::string_view to_string(GmapCapacity c) noexcept;

struct GmapConfig {
    Thresholds thresholds;
    GmapCapacity capacity = GmapCapacity::Full;
    /// Attack types averaged by the Full capacity; empty selects every type in the table.
    std::vector<MorphFactor> attack_types;
};

/// Failure-to-acquire rate for one attempt on one backend: failed rows over all rows.
double ftar(const TrialTable& t, std::string_view backend, int attempt);

/// Generalized morphing attack potential, percentage.
///  - MultiProbe: single backend; mean over (morph, attempt) of the success
///    indicator weighted by (1 - FTAR(attempt, backend)).
///  - MultiProbeMultiSvs: minimum of the MultiProbe value over backends.
///  - Full: mean of MultiProbeMultiSvs over attack types.
double gmap(const TrialTable& t, const GmapConfig& cfg);

}  // namespace tdvim
