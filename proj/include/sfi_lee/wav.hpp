#pragma once

// RIFF/WAVE reading and writing.
//
// Reads PCM 16/24-bit and 32-bit float, any channel count (averaged to
// mono). Writes mono 32-bit float.

#include "sfi_lee/tensor.hpp"

#include <string>

namespace sfi {

class WavError : public DataError {
public:
    enum class Kind { Io, Header, Codec };
    WavError(Kind kind, const std::string& msg) : DataError(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

Signal read_wav(const std::string& path);
void write_wav(const std::string& path, const Signal& s);

}  // namespace sfi
