// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/dsp.hpp"

#include <cmath>
#include <complex>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "lova/errors.hpp"

namespace lova {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

Waveform resample(const Waveform& audio, int target_rate) {
    if (audio.rate <= 0 || target_rate <= 0) throw InvalidArgument("resample: rates must be positive");
    if (audio.rate == target_rate) return audio;

    const long long in_rate = audio.rate, out_rate = target_rate;
    const long long g = std::gcd(in_rate, out_rate);
    const long long up = out_rate / g, down = in_rate / g;  // output n sits at input n * down / up

    constexpr double kZeroCrossings = 16.0;
    constexpr double kRolloff = 0.95;
    constexpr double kBeta = 8.6;
    const double cutoff = kRolloff * 0.5 * std::min(1.0, static_cast<double>(out_rate) / in_rate);
    const int half = static_cast<int>(std::ceil(kZeroCrossings / (2.0 * cutoff)));

    // One normalized kernel per fractional phase p / up.
    std::vector<std::vector<double>> kernels(static_cast<std::size_t>(up));
    for (long long p = 0; p < up; ++p) {
        const double frac = static_cast<double>(p) / up;
        auto& k = kernels[static_cast<std::size_t>(p)];
        k.resize(static_cast<std::size_t>(2 * half + 1));
        double total = 0.0;
        for (int j = -half; j <= half; ++j) {
            const double d = static_cast<double>(j) - frac;
            const double r = d / (half + 1);
            const double w = std::abs(r) < 1.0 ? bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / bessel_i0(kBeta) : 0.0;
            const double v = 2.0 * cutoff * sinc(2.0 * cutoff * d) * w;
            k[static_cast<std::size_t>(j + half)] = v;
            total += v;
        }
        for (double& v : k) v /= total;
    }

    const Eigen::Index n_in = audio.num_samples();
    const auto n_out = static_cast<Eigen::Index>(std::llround(static_cast<double>(n_in) * out_rate / in_rate));
    Waveform out;
    out.rate = target_rate;
    out.samples = Matrix::Zero(n_out, audio.channels());
    for (Eigen::Index n = 0; n < n_out; ++n) {
        const long long num = static_cast<long long>(n) * down;
        const long long base = num / up;
        const auto& k = kernels[static_cast<std::size_t>(num % up)];
        for (int j = -half; j <= half; ++j) {
            const long long idx = base + j;
            if (idx < 0 || idx >= n_in) continue;
            out.samples.row(n) += k[static_cast<std::size_t>(j + half)] * audio.samples.row(idx);
        }
    }
    return out;
}

int MelConfig::frame_length() const { return static_cast<int>(std::lround(frame_seconds * rate)); }
int MelConfig::hop_length() const { return static_cast<int>(std::lround(hop_seconds * rate)); }

int MelConfig::fft_size() const {
    int n = 1;
    while (n < frame_length()) n *= 2;
    return n;
}

Matrix mel_filterbank(const MelConfig& c) {
    const int bins = c.fft_size() / 2 + 1;
    const double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(c.rate / 2.0);
    std::vector<double> edges(static_cast<std::size_t>(c.bands) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (c.bands + 1));
    Matrix fb = Matrix::Zero(c.bands, bins);
    for (int b = 0; b < c.bands; ++b) {
        const double lo = edges[static_cast<std::size_t>(b)], mid = edges[static_cast<std::size_t>(b) + 1],
                     hi = edges[static_cast<std::size_t>(b) + 2];
        for (int k = 0; k < bins; ++k) {
            const double hz = static_cast<double>(k) * c.rate / c.fft_size();
            if (hz > lo && hz < hi) fb(b, k) = hz <= mid ? (hz - lo) / (mid - lo) : (hi - hz) / (hi - mid);
        }
    }
    return fb;
}

Matrix log_mel(const Eigen::VectorXd& signal, const MelConfig& c) {
    const int win = c.frame_length(), hop = c.hop_length(), nfft = c.fft_size();
    if (win < 1 || hop < 1) throw InvalidArgument("log_mel: frame and hop must be at least one sample");
    const Eigen::Index n = signal.size();
    const Eigen::Index frames = n <= win ? 1 : 1 + (n - win) / hop;

    std::vector<double> window(static_cast<std::size_t>(win));
    for (int i = 0; i < win; ++i) window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / win);

    const Matrix fb = mel_filterbank(c);
    const int bins = nfft / 2 + 1;
    Eigen::FFT<double> fft;
    std::vector<double> buf(static_cast<std::size_t>(nfft));
    std::vector<std::complex<double>> spec;
    Eigen::VectorXd power(bins);
    Matrix out(frames, c.bands);
    for (Eigen::Index f = 0; f < frames; ++f) {
        std::fill(buf.begin(), buf.end(), 0.0);
        for (int i = 0; i < win; ++i) {
            const Eigen::Index s = f * hop + i;
            if (s < n) buf[static_cast<std::size_t>(i)] = signal(s) * window[static_cast<std::size_t>(i)];
        }
        fft.fwd(spec, buf);
        for (int k = 0; k < bins; ++k) power(k) = std::norm(spec[static_cast<std::size_t>(k)]);
        const Eigen::VectorXd mel = fb * power;
        for (int b = 0; b < c.bands; ++b) out(f, b) = std::log(mel(b) + c.floor);
    }
    return out;
}

Eigen::VectorXd mono(const Waveform& audio) {
    if (audio.channels() == 1) return audio.samples.col(0);
    return audio.samples.rowwise().mean();
}

}  // namespace lova
