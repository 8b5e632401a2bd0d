// Copyright (C) 2026 The lova Authors
// SPDX-License-Identifier: Apache-2.0

#include "lova/wav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "lova/errors.hpp"

namespace lova {
namespace {

void put_u16(std::vector<char>& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_wav(const std::filesystem::path& path, const Waveform& audio, WavEncoding encoding) {
    const auto channels = static_cast<std::uint16_t>(audio.channels());
    if (channels < 1 || channels > 2) throw InvalidArgument("write_wav: only mono/stereo supported");
    const bool is_float = encoding == WavEncoding::float32;
    const std::uint16_t bits = is_float ? 32 : 16;
    const std::uint32_t block = channels * bits / 8;
    const auto frames = static_cast<std::uint32_t>(audio.num_samples());
    const std::uint32_t data_bytes = frames * block;

    std::vector<char> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, is_float ? 3 : 1);
    put_u16(out, channels);
    put_u32(out, static_cast<std::uint32_t>(audio.rate));
    put_u32(out, static_cast<std::uint32_t>(audio.rate) * block);
    put_u16(out, static_cast<std::uint16_t>(block));
    put_u16(out, bits);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (std::uint32_t i = 0; i < frames; ++i) {
        for (std::uint16_t c = 0; c < channels; ++c) {
            double v = audio.samples(i, c);
            v = std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : 0.0;
            if (is_float) {
                const float f = static_cast<float>(v);
                std::uint32_t bitsv;
                std::memcpy(&bitsv, &f, 4);
                put_u32(out, bitsv);
            } else {
                const auto q = static_cast<std::int16_t>(std::lround(v * 32767.0));
                put_u16(out, static_cast<std::uint16_t>(q));
            }
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw IoError("not a RIFF/WAVE file: " + path.string());

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_bytes = 0;
    std::size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const unsigned char* chunk = buf.data() + pos;
        const std::uint32_t size = get_u32(chunk + 4);
        if (pos + 8 + size > buf.size()) throw IoError("truncated chunk in " + path.string());
        if (std::memcmp(chunk, "fmt ", 4) == 0 && size >= 16) {
            format = get_u16(chunk + 8);
            channels = get_u16(chunk + 10);
            rate = get_u32(chunk + 12);
            bits = get_u16(chunk + 22);
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_bytes = size;
        }
        pos += 8 + size + (size & 1u);
    }
    const bool pcm16 = format == 1 && bits == 16;
    const bool float32 = format == 3 && bits == 32;
    if (!data || channels < 1 || channels > 2 || !(pcm16 || float32))
        throw IoError("unsupported WAVE encoding in " + path.string());

    const std::uint32_t block = channels * bits / 8u;
    const std::uint32_t frames = data_bytes / block;
    Waveform w;
    w.rate = static_cast<int>(rate);
    w.samples.resize(frames, channels);
    for (std::uint32_t i = 0; i < frames; ++i)
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* p = data + i * block + c * (bits / 8u);
            if (float32) {
                const std::uint32_t b = get_u32(p);
                float v;
                std::memcpy(&v, &b, 4);
                w.samples(i, c) = v;
            } else {
                w.samples(i, c) = static_cast<std::int16_t>(get_u16(p)) / 32767.0;
            }
        }
    return w;
}

}  // namespace lova
