#pragma once

#include "tdvim/corpus.hpp"
#include "tdvim/evaluation.hpp"
#include "tdvim/morph.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tdvim {

struct SynthRequest {
    int speakers = 6;
    std::vector<std::string> sentences{"S1", "S2", "S3"};
    SynthConfig config;
    std::uint64_t seed = 42;
    std::filesystem::path out;
    int jobs = 1;
};

/// Writes `out/wav/*.wav` and `out/manifest.csv`; returns the manifest path.
std::filesystem::path run_synth(const SynthRequest& req);

struct MorphRequest {
    std::filesystem::path manifest;
    PairingPolicy policy;
    std::filesystem::path out;
    int jobs = 1;
};

struct MorphRunSummary {
    std::filesystem::path manifest;
    std::size_t morphs = 0;
    std::size_t failures = 0;
};

/// Writes `out/wav/*.wav` and `out/morphs.csv`. Per-item failures are logged
/// to `out/morph_failures.csv`. Throws ConfigError when no pair can be formed.
MorphRunSummary run_morph(const MorphRequest& req);

struct EvaluateRequest {
    std::filesystem::path corpus;
    std::filesystem::path morphs;
    std::filesystem::path backends;
    ProbeMode mode = ProbeMode::TextDependent;
    int attempts = 3;
    double target_fmr = 0.001;
    int bins = 40;
    std::filesystem::path out;
    int jobs = 1;
};

struct EvaluateSummary {
    std::vector<std::filesystem::path> outputs;  // in write order
    std::vector<std::string> notes;
    std::size_t trials = 0;
    std::size_t exclusions = 0;
};

/// Baseline, vulnerability run, metrics and reports. Outputs go to `out/`.
EvaluateSummary run_evaluate(const EvaluateRequest& req);

}  // namespace tdvim
