#pragma once

// Minimal RIFF/WAVE support: mono PCM 16-bit and IEEE float 32-bit.

#include "fluidlab/core.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

namespace fluidlab {

enum class WavEncoding { pcm16, float32 };

struct WavData {
    int sample_rate = 0;
    std::vector<double> samples; // normalized to [-1, 1]
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p)
{
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p)
{
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

inline void put_u16le(std::vector<unsigned char>& out, std::uint16_t v)
{
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

} // namespace detail

/// Parses an in-memory WAV image. `what` names the source in diagnostics.
inline WavData parse_wav(std::span<const unsigned char> bytes, const std::string& what = "wav")
{
    using detail::read_u16le;
    using detail::read_u32le;
    auto fail = [&](const std::string& m) { throw ValidationError(what + ": malformed RIFF header: " + m); };

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        fail("missing RIFF/WAVE tag");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::span<const unsigned char> payload;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        const std::uint32_t size = read_u32le(hdr + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            // Tolerate a data chunk whose declared size overruns the file
            // (common with streamed writers); everything else is an error.
            if (std::memcmp(hdr, "data", 4) != 0)
                fail("chunk overruns file");
        }
        const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (avail < 16)
                fail("fmt chunk too short");
            const unsigned char* f = bytes.data() + body;
            format = read_u16le(f);
            channels = read_u16le(f + 2);
            rate = read_u32le(f + 4);
            bits = read_u16le(f + 14);
            if (format == 0xFFFE && avail >= 26)
                format = read_u16le(f + 24); // extensible: sub-format GUID prefix
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            payload = bytes.subspan(body, avail);
            have_data = true;
        }
        pos = body + size + (size & 1u);
    }
    if (!have_fmt)
        fail("no fmt chunk");
    if (!have_data)
        fail("no data chunk");
    if (channels != 1)
        fail("expected mono, got " + std::to_string(channels) + " channels");
    if (rate == 0)
        fail("zero sample rate");

    WavData out;
    out.sample_rate = static_cast<int>(rate);
    if (format == 1 && bits == 16) {
        const std::size_t n = payload.size() / 2;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto s = static_cast<std::int16_t>(read_u16le(payload.data() + 2 * i));
            out.samples[i] = static_cast<double>(s) / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t n = payload.size() / 4;
        out.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t u = read_u32le(payload.data() + 4 * i);
            float f;
            std::memcpy(&f, &u, 4);
            out.samples[i] = std::clamp(static_cast<double>(f), -1.0, 1.0);
        }
    } else {
        fail("unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) +
             " bits); expected PCM 16-bit or float 32-bit");
    }
    return out;
}

inline WavData read_wav(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_wav(bytes, path.string());
}

inline std::vector<unsigned char> encode_wav(std::span<const double> samples, int sample_rate,
                                             WavEncoding enc = WavEncoding::pcm16)
{
    using detail::put_u16le;
    using detail::put_u32le;
    const std::uint16_t bits = enc == WavEncoding::pcm16 ? 16 : 32;
    const std::uint16_t block = bits / 8;
    const auto data_size = static_cast<std::uint32_t>(samples.size() * block);

    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    for (char c : std::string("RIFF"))
        out.push_back(static_cast<unsigned char>(c));
    put_u32le(out, 36 + data_size);
    for (char c : std::string("WAVEfmt "))
        out.push_back(static_cast<unsigned char>(c));
    put_u32le(out, 16);
    put_u16le(out, enc == WavEncoding::pcm16 ? 1 : 3);
    put_u16le(out, 1);
    put_u32le(out, static_cast<std::uint32_t>(sample_rate));
    put_u32le(out, static_cast<std::uint32_t>(sample_rate) * block);
    put_u16le(out, block);
    put_u16le(out, bits);
    for (char c : std::string("data"))
        out.push_back(static_cast<unsigned char>(c));
    put_u32le(out, data_size);
    for (double s : samples) {
        const double x = std::clamp(s, -1.0, 1.0);
        if (enc == WavEncoding::pcm16) {
            const long q = std::clamp(std::lround(x * 32768.0), -32768L, 32767L);
            put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
        } else {
            const float f = static_cast<float>(x);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            put_u32le(out, u);
        }
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate,
                      WavEncoding enc = WavEncoding::pcm16)
{
    const auto bytes = encode_wav(samples, sample_rate, enc);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace fluidlab
