#include "sfi_lee/wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace sfi {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

struct Format {
    std::uint16_t tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
};

}  // namespace

Signal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw WavError(WavError::Kind::Io, "cannot open '" + path + "'");
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto header_error = [&](const std::string& msg) { return WavError(WavError::Kind::Header, path + ": " + msg); };

    if (bytes.size() < 12) throw header_error("truncated before the RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw header_error("not a RIFF/WAVE file");
    }

    Format fmt;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || body + size > bytes.size()) throw header_error("truncated 'fmt ' chunk");
            const unsigned char* f = bytes.data() + body;
            fmt.tag = le16(f);
            fmt.channels = le16(f + 2);
            fmt.rate = le32(f + 4);
            fmt.bits = le16(f + 14);
            if (fmt.tag == kFormatExtensible) {
                if (size < 40) throw header_error("truncated extensible 'fmt ' chunk");
                fmt.tag = le16(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw header_error("'data' chunk before 'fmt ' chunk");
            if (body + size > bytes.size()) throw header_error("truncated 'data' chunk");
            data = bytes.data() + body;
            data_size = size;
            break;
        }
        pos = body + size + (size & 1u);
    }
    if (!have_fmt) throw header_error("missing 'fmt ' chunk");
    if (data == nullptr) throw header_error("missing 'data' chunk");
    if (fmt.channels == 0 || fmt.rate == 0) throw header_error("zero channels or sample rate");

    const bool pcm16 = fmt.tag == kFormatPcm && fmt.bits == 16;
    const bool pcm24 = fmt.tag == kFormatPcm && fmt.bits == 24;
    const bool f32 = fmt.tag == kFormatFloat && fmt.bits == 32;
    if (!pcm16 && !pcm24 && !f32) {
        throw WavError(WavError::Kind::Codec, path + ": unsupported codec (format tag " + std::to_string(fmt.tag) +
                                                  ", " + std::to_string(fmt.bits) + " bits)");
    }

    const std::size_t width = fmt.bits / 8;
    const std::size_t frame = width * fmt.channels;
    const std::size_t frames = data_size / frame;
    Signal s;
    s.sample_rate = fmt.rate;
    s.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < fmt.channels; ++c) {
            const unsigned char* p = data + i * frame + c * width;
            double v;
            if (pcm16) {
                v = static_cast<std::int16_t>(le16(p)) / 32768.0;
            } else if (pcm24) {
                std::int32_t raw = std::int32_t(p[0]) | std::int32_t(p[1]) << 8 | std::int32_t(p[2]) << 16;
                if (raw & 0x800000) raw -= 0x1000000;
                v = raw / 8388608.0;
            } else {
                v = std::bit_cast<float>(le32(p));
            }
            acc += v;
        }
        s.samples[i] = fmt.channels == 1 ? acc : acc / fmt.channels;
    }
    return s;
}

void write_wav(const std::string& path, const Signal& s) {
    if (!(s.sample_rate > 0.0) || s.sample_rate > 4294967295.0 || s.sample_rate != std::floor(s.sample_rate)) {
        throw DataError("write_wav: sample rate must be a positive integer");
    }
    const std::uint32_t data_size = static_cast<std::uint32_t>(s.samples.size() * 4);
    std::vector<unsigned char> out;
    out.reserve(44 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put32(out, 36 + data_size);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put32(out, 16);
    put16(out, kFormatFloat);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(s.sample_rate));
    put32(out, static_cast<std::uint32_t>(s.sample_rate) * 4);
    put16(out, 4);
    put16(out, 32);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put32(out, data_size);
    for (double v : s.samples) put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw WavError(WavError::Kind::Io, "cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw WavError(WavError::Kind::Io, "write failed for '" + path + "'");
}

}  // namespace sfi
