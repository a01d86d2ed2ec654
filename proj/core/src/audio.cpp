#include "tdvim/audio.hpp"

#include "tdvim/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace tdvim {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
}

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) {
        out.push_back(static_cast<unsigned char>((v >> shift) & 0xFF));
    }
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

struct FormatChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

}  // namespace

AudioSignal::AudioSignal(std::vector<float> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (sample_rate_ <= 0) {
        throw Error(ErrorKind::InvalidArgument,
                    "sample rate must be positive, got " + std::to_string(sample_rate_));
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const float s = samples_[i];
        if (!std::isfinite(s) || s < -1.0f || s > 1.0f) {
            throw Error(ErrorKind::InvalidArgument,
                        "sample " + std::to_string(i) + " outside [-1, 1]");
        }
    }
}

AudioSignal read_wav(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(ErrorKind::MissingFile, path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error(ErrorKind::UnsupportedEncoding, path.string() + " is not a RIFF/WAVE file");
    }

    FormatChunk fmt;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t available = bytes.size() - body;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || size > available) {
                throw Error(ErrorKind::UnsupportedEncoding, "malformed fmt chunk in " + path.string());
            }
            const unsigned char* f = bytes.data() + body;
            fmt.format = le16(f);
            fmt.channels = le16(f + 2);
            fmt.sample_rate = le32(f + 4);
            fmt.bits = le16(f + 14);
            if (fmt.format == kFormatExtensible) {
                if (size < 40) {
                    throw Error(ErrorKind::UnsupportedEncoding,
                                "truncated WAVE_FORMAT_EXTENSIBLE header in " + path.string());
                }
                // First two bytes of the sub-format GUID carry the real format tag.
                fmt.format = le16(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            // Tolerate writers that leave a bogus size on the final chunk.
            data_size = std::min<std::size_t>(size, available);
            have_data = true;
        }
        pos = body + size + (size & 1u);
    }

    if (!have_fmt || !have_data) {
        throw Error(ErrorKind::UnsupportedEncoding, "missing fmt or data chunk in " + path.string());
    }
    if (fmt.channels != 1) {
        throw Error(ErrorKind::UnsupportedEncoding,
                    path.string() + " has " + std::to_string(fmt.channels) +
                        " channels; only mono is supported");
    }
    if (fmt.sample_rate == 0 || fmt.sample_rate > 1'000'000) {
        throw Error(ErrorKind::UnsupportedEncoding, "bad sample rate in " + path.string());
    }

    std::vector<float> samples;
    if (fmt.format == kFormatPcm && fmt.bits == 16) {
        samples.resize(data_size / 2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto raw = static_cast<std::int16_t>(le16(data + 2 * i));
            samples[i] = static_cast<float>(raw) / 32768.0f;
        }
    } else if (fmt.format == kFormatFloat && fmt.bits == 32) {
        samples.resize(data_size / 4);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const std::uint32_t bits = le32(data + 4 * i);
            float v;
            std::memcpy(&v, &bits, sizeof v);
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::UnsupportedEncoding,
                            "non-finite float sample in " + path.string());
            }
            samples[i] = std::clamp(v, -1.0f, 1.0f);
        }
    } else {
        throw Error(ErrorKind::UnsupportedEncoding,
                    path.string() + ": format tag " + std::to_string(fmt.format) + " with " +
                        std::to_string(fmt.bits) + " bits is not supported");
    }

    if (samples.empty()) {
        throw Error(ErrorKind::EmptyAudio, path.string());
    }
    return AudioSignal(std::move(samples), static_cast<int>(fmt.sample_rate));
}

std::vector<unsigned char> encode_wav16(const AudioSignal& signal) {
    const auto n = static_cast<std::uint32_t>(signal.size());
    const std::uint32_t data_bytes = n * 2;
    const auto rate = static_cast<std::uint32_t>(signal.sample_rate());

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, kFormatPcm);
    put16(out, 1);
    put32(out, rate);
    put32(out, rate * 2);
    put16(out, 2);
    put16(out, 16);
    put_tag(out, "data");
    put32(out, data_bytes);
    for (const float s : signal.samples()) {
        const long q = std::lround(static_cast<double>(s) * 32768.0);
        const auto clamped = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
        put16(out, static_cast<std::uint16_t>(clamped));
    }
    return out;
}

void write_wav(const AudioSignal& signal, const std::filesystem::path& path) {
    if (signal.empty()) {
        throw Error(ErrorKind::EmptyAudio, "refusing to write empty signal to " + path.string());
    }
    const auto bytes = encode_wav16(signal);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
    }
}

std::size_t length_difference(const AudioSignal& a, const AudioSignal& b) noexcept {
    return a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
}

std::pair<AudioSignal, AudioSignal> zero_pad_pair(const AudioSignal& a, const AudioSignal& b) {
    if (a.sample_rate() != b.sample_rate()) {
        throw Error(ErrorKind::SampleRateMismatch,
                    std::to_string(a.sample_rate()) + " Hz vs " + std::to_string(b.sample_rate()) + " Hz");
    }
    const std::size_t len = std::max(a.size(), b.size());
    auto pad = [len](const AudioSignal& s) {
        if (s.size() == len) {
            return s;
        }
        std::vector<float> padded(s.samples().begin(), s.samples().end());
        padded.resize(len, 0.0f);
        return AudioSignal(std::move(padded), s.sample_rate());
    };
    return {pad(a), pad(b)};
}

}  // namespace tdvim
