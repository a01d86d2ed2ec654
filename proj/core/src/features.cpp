#include "tdvim/features.hpp"

#include "tdvim/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace tdvim {

namespace {

double hz_to_mel(double hz) {
    return 1127.0 * std::log(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
    return 700.0 * (std::exp(mel / 1127.0) - 1.0);
}

}  // namespace

void fft_inplace(std::span<std::complex<double>> data) {
    const std::size_t n = data.size();
    if (n <= 1) {
        return;
    }
    if (!std::has_single_bit(n)) {
        throw Error(ErrorKind::InvalidArgument, "FFT size must be a power of two");
    }
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(data[i], data[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> step(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = data[i + k];
                const auto v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= step;
            }
        }
    }
}

MelFilterbank::MelFilterbank(int n_mels, std::size_t fft_size, int sample_rate, double low_hz, double high_hz) {
    if (n_mels < 1 || fft_size < 2 || sample_rate <= 0) {
        throw Error(ErrorKind::ConfigError, "invalid mel filterbank geometry");
    }
    const double nyquist = 0.5 * sample_rate;
    if (high_hz <= 0.0 || high_hz > nyquist) {
        high_hz = nyquist;
    }
    if (low_hz < 0.0 || low_hz >= high_hz) {
        throw Error(ErrorKind::ConfigError, "mel filterbank low edge must lie below the high edge");
    }
    const double mel_lo = hz_to_mel(low_hz);
    const double mel_hi = hz_to_mel(high_hz);
    const double mel_step = (mel_hi - mel_lo) / (n_mels + 1);
    const std::size_t bins = fft_size / 2 + 1;
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);

    filters_.resize(static_cast<std::size_t>(n_mels));
    for (int m = 0; m < n_mels; ++m) {
        const double left = mel_lo + m * mel_step;
        const double centre = left + mel_step;
        const double right = centre + mel_step;
        auto& f = filters_[static_cast<std::size_t>(m)];
        bool started = false;
        for (std::size_t b = 0; b < bins; ++b) {
            const double mel = hz_to_mel(static_cast<double>(b) * bin_hz);
            double w = 0.0;
            if (mel > left && mel <= centre) {
                w = (mel - left) / (centre - left);
            } else if (mel > centre && mel < right) {
                w = (right - mel) / (right - centre);
            }
            if (w > 0.0) {
                if (!started) {
                    f.first_bin = b;
                    started = true;
                }
                f.weights.resize(b - f.first_bin + 1, 0.0);
                f.weights.back() = w;
            }
        }
        if (!started) {
            // Narrow low-frequency bands can fall between bins; give them the nearest bin.
            const double hz = mel_to_hz(centre);
            f.first_bin = std::min(bins - 1, static_cast<std::size_t>(std::lround(hz / bin_hz)));
            f.weights = {1.0};
        }
    }
}

std::vector<double> MelFilterbank::apply(std::span<const double> power_spectrum) const {
    std::vector<double> out(filters_.size(), 0.0);
    for (std::size_t m = 0; m < filters_.size(); ++m) {
        const auto& f = filters_[m];
        double acc = 0.0;
        for (std::size_t k = 0; k < f.weights.size() && f.first_bin + k < power_spectrum.size(); ++k) {
            acc += f.weights[k] * power_spectrum[f.first_bin + k];
        }
        out[m] = acc;
    }
    return out;
}

std::vector<double> dct_ii(std::span<const double> input, int n_ceps) {
    const auto n = static_cast<double>(input.size());
    std::vector<double> out(static_cast<std::size_t>(n_ceps), 0.0);
    for (int k = 0; k < n_ceps; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < input.size(); ++i) {
            acc += input[i] * std::cos(std::numbers::pi * k * (static_cast<double>(i) + 0.5) / n);
        }
        const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        out[static_cast<std::size_t>(k)] = scale * acc;
    }
    return out;
}

std::vector<std::vector<double>> cepstral_frames(const AudioSignal& signal, const ReferenceConfig& cfg) {
    if (cfg.n_ceps < 1 || cfg.n_ceps > cfg.n_mels || cfg.frame_ms <= 0.0 || cfg.hop_ms <= 0.0) {
        throw Error(ErrorKind::ConfigError, "invalid reference verifier configuration");
    }
    const int sr = signal.sample_rate();
    const auto frame_len = static_cast<std::size_t>(std::lround(cfg.frame_ms * 1e-3 * sr));
    const auto hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * 1e-3 * sr));
    if (frame_len < 2 || hop < 1) {
        throw Error(ErrorKind::ConfigError, "frame geometry too small for sample rate");
    }
    if (signal.size() < frame_len + 2 * hop) {
        throw Error(ErrorKind::TooShort, "signal of " + std::to_string(signal.size()) +
                                             " samples is shorter than 3 frames");
    }
    const std::size_t n_frames = 1 + (signal.size() - frame_len) / hop;
    const std::size_t fft_size = std::bit_ceil(frame_len);
    const MelFilterbank bank(cfg.n_mels, fft_size, sr, cfg.low_hz, cfg.high_hz);

    std::vector<double> window(frame_len);
    for (std::size_t i = 0; i < frame_len; ++i) {
        window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                           static_cast<double>(frame_len - 1));
    }

    const auto x = signal.samples();
    std::vector<std::vector<double>> frames;
    frames.reserve(n_frames);
    std::vector<std::complex<double>> buf(fft_size);
    std::vector<double> power(fft_size / 2 + 1);
    std::vector<double> frame(frame_len);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t start = f * hop;
        double mean = 0.0;
        for (std::size_t i = 0; i < frame_len; ++i) {
            frame[i] = x[start + i];
            mean += frame[i];
        }
        mean /= static_cast<double>(frame_len);
        for (auto& v : frame) {
            v -= mean;
        }
        for (std::size_t i = frame_len - 1; i > 0; --i) {
            frame[i] -= cfg.preemphasis * frame[i - 1];
        }
        frame[0] -= cfg.preemphasis * frame[0];
        std::fill(buf.begin(), buf.end(), std::complex<double>{});
        for (std::size_t i = 0; i < frame_len; ++i) {
            buf[i] = frame[i] * window[i];
        }
        fft_inplace(buf);
        for (std::size_t k = 0; k < power.size(); ++k) {
            power[k] = std::norm(buf[k]);
        }
        auto mel = bank.apply(power);
        for (auto& e : mel) {
            e = std::log(std::max(e, 1e-10));
        }
        frames.push_back(dct_ii(mel, cfg.n_ceps));
    }
    return frames;
}

}  // namespace tdvim
