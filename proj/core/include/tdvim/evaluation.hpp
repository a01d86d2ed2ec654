#pragma once

#include "tdvim/corpus.hpp"
#include "tdvim/metrics.hpp"
#include "tdvim/morph.hpp"
#include "tdvim/svs.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace tdvim {

using BackendSet = std::vector<std::shared_ptr<const VerifierBackend>>;

BackendSet make_backends(const std::vector<VerifierDescriptor>& descriptors);

/// Embeds each file once, in parallel; result i belongs to paths[i]. Files
/// that cannot be read become acquire failures.
std::vector<AcquireResult> embed_files(const VerifierBackend& backend,
                                       const std::vector<std::filesystem::path>& paths, int jobs);

// ---------------------------------------------------------------------------
// Baseline verification

struct BaselineGrouping {
    bool by_device = true;
    bool by_language = true;
};

struct BaselineGroup {
    std::string device;    // "*" when not grouped by device
    std::string language;  // "*" when not grouped by language
    std::size_t subjects = 0;
    ScoreSet scores;
    EerResult eer;
    double threshold_at_target_fmr = 0.0;
    std::size_t skipped_pairs = 0;  // pairs involving an acquire failure
};

struct BaselineResult {
    std::string backend;
    double target_fmr = 0.001;
    std::vector<BaselineGroup> groups;
    ScoreSet pooled;
    double pooled_threshold_at_target_fmr = 0.0;
};

/// Genuine scores: every within-subject pair of recordings in a group.
/// Impostor scores: every cross-subject pair. Throws InsufficientData naming
/// the group when it has fewer than 2 subjects or a subject with fewer than
/// 2 recordings.
BaselineResult run_baseline(const Manifest& m, const VerifierBackend& backend, const BaselineGrouping& grouping = {},
                            double target_fmr = 0.001, int jobs = 1);

// ---------------------------------------------------------------------------
// Vulnerability protocol

enum class ProbeMode { TextDependent, TextIndependent };

struct ProtocolConfig {
    ProbeMode mode = ProbeMode::TextDependent;
    int attempts = 3;
    std::vector<VerifierDescriptor> backends;
    int jobs = 1;
};

struct Exclusion {
    std::string morph_id;
    std::string contributor;  // subject id lacking probes
    std::string reason;
};

struct VulnerabilityResult {
    TrialTable table;
    std::vector<Exclusion> exclusions;
    std::vector<std::string> notes;
};

/// Enrolls each morph and probes both contributors `attempts` times on every
/// backend. Text-dependent probes use the morph's sentence, text-independent
/// probes every other sentence; when fewer distinct recordings than attempts
/// exist they are reused cyclically and a note is logged. A morph with a
/// contributor lacking probes is excluded (no rows) and reported.
VulnerabilityResult run_vulnerability(const std::vector<MorphRecord>& morphs, const Manifest& corpus,
                                      const ProtocolConfig& cfg, const BackendSet& backends);

/// Convenience overload building backends from cfg.backends.
VulnerabilityResult run_vulnerability(const std::vector<MorphRecord>& morphs, const Manifest& corpus,
                                      const ProtocolConfig& cfg);

void write_exclusions(const std::vector<Exclusion>& exclusions, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Score histograms

struct HistogramSeries {
    std::string name;
    std::vector<std::size_t> counts;
    std::size_t total() const;
};

struct Histogram {
    std::vector<double> edges;  // bins + 1 edges spanning [-1, 1]
    std::vector<HistogramSeries> series;
};

/// Six series over identical edges: genuine, impostor, M25, M50, M75, M100
/// (morph-vs-contributor scores). Scores outside [-1, 1] are clamped into
/// the end bins; acquire failures are not binned.
Histogram histogram_data(const ScoreSet& baseline, const TrialTable& trials, int bins);

std::string histogram_to_csv(const Histogram& h);

}  // namespace tdvim
