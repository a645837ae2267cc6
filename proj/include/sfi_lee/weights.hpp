#pragma once

// Weight bundles and the `.sfw` container.
//
// Layout (all integers 64-bit little-endian unless noted):
//   magic "SFW\0" | u32 version | u64 seed | f64 trained_rate
//   | u64 len + bytes spec_hash | u64 tensor_count
//   | per tensor: u64 len + bytes name, u64 ndim, u64 dims[ndim]
//   | payloads in directory order, f32 little-endian

#include "sfi_lee/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sfi {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> values;

    std::size_t element_count() const;
};

struct WeightBundle {
    std::vector<NamedTensor> tensors;
    std::uint64_t seed = 0;
    std::string spec_hash;
    double trained_rate = 0.0;

    const NamedTensor* find(const std::string& name) const;
    NamedTensor* find(const std::string& name);
    /// Throws WeightFileError(MissingTensor) when absent.
    const NamedTensor& get(const std::string& name) const;
    NamedTensor& get(const std::string& name);

    bool operator==(const WeightBundle&) const = default;
};

inline bool operator==(const NamedTensor& a, const NamedTensor& b) {
    return a.name == b.name && a.shape == b.shape && a.values == b.values;
}

class WeightFileError : public DataError {
public:
    enum class Kind { Format, Version, MissingTensor, ShapeMismatch, Io };

    WeightFileError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Expected tensor name and shape, used to validate loaded bundles.
struct TensorShape {
    std::string name;
    std::vector<std::size_t> shape;
};

void validate_bundle(const WeightBundle& bundle, const std::vector<TensorShape>& expected);

void save_weights(const std::filesystem::path& path, const WeightBundle& bundle);
WeightBundle load_weights(const std::filesystem::path& path);

}  // namespace sfi
