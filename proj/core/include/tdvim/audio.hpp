#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace tdvim {

/// Mono waveform with samples normalized to [-1, 1].
///
/// Samples are stored as 32-bit floats; every morph operation runs at this
/// precision and quantization only happens when a signal is written to disk.
class AudioSignal {
public:
    AudioSignal() = default;

    /// Throws Error(InvalidArgument) if sample_rate <= 0 or any sample is
    /// non-finite or outside [-1, 1].
    AudioSignal(std::vector<float> samples, int sample_rate);

    std::span<const float> samples() const noexcept { return samples_; }
    int sample_rate() const noexcept { return sample_rate_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    double duration_seconds() const noexcept {
        return sample_rate_ > 0 ? static_cast<double>(samples_.size()) / sample_rate_ : 0.0;
    }

    friend bool operator==(const AudioSignal&, const AudioSignal&) = default;

private:
    std::vector<float> samples_;
    int sample_rate_ = 1;
};

/// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float data.
/// 16-bit values are divided by 32768.
AudioSignal read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Round trip error is at most 1/32768 per sample.
void write_wav(const AudioSignal& signal, const std::filesystem::path& path);

/// Encodes the WAV byte image that write_wav puts on disk.
std::vector<unsigned char> encode_wav16(const AudioSignal& signal);

std::size_t length_difference(const AudioSignal& a, const AudioSignal& b) noexcept;

/// Extends the shorter signal with trailing zeros so both have length
/// max(N1, N2). The longer signal is returned unchanged.
std::pair<AudioSignal, AudioSignal> zero_pad_pair(const AudioSignal& a, const AudioSignal& b);

}  // namespace tdvim
