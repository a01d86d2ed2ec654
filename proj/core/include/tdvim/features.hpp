#pragma once

#include "tdvim/audio.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tdvim {

struct ReferenceConfig {
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    int n_mels = 26;
    int n_ceps = 20;
    double low_hz = 20.0;
    double high_hz = 0.0;  // 0 selects the Nyquist frequency
    double preemphasis = 0.97;
    double energy_floor = 1e-6;  // mean squared amplitude below which acquisition fails
};

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::span<std::complex<double>> data);

/// Triangular filters on the mel scale over the positive half of an FFT.
class MelFilterbank {
public:
    MelFilterbank(int n_mels, std::size_t fft_size, int sample_rate, double low_hz, double high_hz);

    std::size_t size() const noexcept { return filters_.size(); }

    /// power_spectrum holds fft_size/2 + 1 bins.
    std::vector<double> apply(std::span<const double> power_spectrum) const;

private:
    struct Filter {
        std::size_t first_bin = 0;
        std::vector<double> weights;
    };
    std::vector<Filter> filters_;
};

/// Orthonormal DCT-II rows 0..n_ceps-1 applied to a log-mel vector.
std::vector<double> dct_ii(std::span<const double> input, int n_ceps);

/// Frame-level cepstra: one row of n_ceps coefficients per frame.
std::vector<std::vector<double>> cepstral_frames(const AudioSignal& signal, const ReferenceConfig& cfg);

}  // namespace tdvim
