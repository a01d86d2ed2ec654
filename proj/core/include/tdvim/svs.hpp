#pragma once

#include "tdvim/audio.hpp"
#include "tdvim/features.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tdvim {

struct Embedding {
    std::string id;
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
};

/// Parses {"id": string, "dim": integer, "values": [numbers]}. Throws
/// Error(DimensionMismatch) when dim disagrees with the number of values and
/// Error(ParseError) for any other malformed document.
Embedding parse_embedding_json(std::string_view text);
std::string embedding_to_json(const Embedding& e);

struct AcquireFailure {
    std::string reason;
};

using AcquireResult = std::variant<Embedding, AcquireFailure>;

inline bool acquired(const AcquireResult& r) { return std::holds_alternative<Embedding>(r); }

enum class BackendKind { Reference, Precomputed, Subprocess };

std::string_view to_string(BackendKind k) noexcept;

struct VerifierDescriptor {
    std::string name;
    BackendKind kind = BackendKind::Reference;
    /// Fixed operating threshold; when absent, a threshold is derived from
    /// baseline impostor scores at fmr_target (or the run's default target).
    std::optional<double> threshold;
    std::optional<double> fmr_target;
    /// Subprocess argv template containing a {wav} placeholder.
    std::string command;
    /// Precomputed backends read {precomputed_dir}/{wav stem}.json.
    std::filesystem::path precomputed_dir;
    std::chrono::milliseconds timeout{30'000};
    int max_concurrency = 4;
    ReferenceConfig reference{};
};

/// Parses the backend config format: one backend per line,
/// `name=...;kind=reference|precomputed|subprocess;threshold=0.5|fmr=0.001;command=...`.
/// `command` consumes the rest of its line so it may contain ';'. Also
/// accepts dir=, timeout_s=, jobs=. Relative dirs resolve against base_dir.
std::vector<VerifierDescriptor> parse_backend_config(std::string_view text,
                                                     const std::filesystem::path& base_dir = {});
std::vector<VerifierDescriptor> load_backend_config(const std::filesystem::path& path);

/// Embed-or-fail contract shared by every verifier. Implementations must be
/// safe to call concurrently on distinct signals.
class VerifierBackend {
public:
    virtual ~VerifierBackend() = default;

    const VerifierDescriptor& descriptor() const noexcept { return desc_; }

    /// `source` is the file the signal was read from, when there is one.
    /// Ordinary bad audio yields AcquireFailure; only misconfiguration throws.
    virtual AcquireResult embed(const AudioSignal& signal, const std::filesystem::path& source = {}) const = 0;

protected:
    explicit VerifierBackend(VerifierDescriptor desc) : desc_(std::move(desc)) {}

private:
    VerifierDescriptor desc_;
};

/// Throws Error(ConfigError) for inconsistent descriptors.
std::unique_ptr<VerifierBackend> make_backend(const VerifierDescriptor& desc);

/// Dimension of reference embeddings: mean and standard deviation of each cepstral coefficient.
inline int reference_dim(const ReferenceConfig& cfg) { return 2 * cfg.n_ceps; }

/// Spectral embedding: framed log-mel cepstra pooled by mean and standard
/// deviation. Throws Error(TooShort) below 3 frames.
Embedding reference_embed(const AudioSignal& signal, const ReferenceConfig& cfg = {});

/// Runs `command_template` with {wav} replaced by wav_path and parses stdout
/// as an Embedding document.
AcquireResult external_embed(std::string_view command_template, const std::filesystem::path& wav_path,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds{30'000});

/// Splits an argv template on whitespace (single and double quotes group).
/// Throws Error(ConfigError) if no argument carries a {wav} placeholder.
std::vector<std::string> expand_command_template(std::string_view command_template, std::string_view wav_path);

/// dot(a, b) / (|a| |b|), clamped to [-1, 1].
double cosine_similarity(const Embedding& a, const Embedding& b);

}  // namespace tdvim
