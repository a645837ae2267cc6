#pragma once

// Separation datasets: mixtures with their per-source references.

#include "sfi_lee/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sfi {

enum class SourceRecipe { HarmonicStack, FilteredNoise, AMTone };

std::string to_string(SourceRecipe r);
SourceRecipe recipe_from_string(const std::string& name);

struct SourceSpec {
    SourceRecipe recipe = SourceRecipe::HarmonicStack;
    double f_lo = 110.0;   ///< fundamental (stack), band edge (noise) or carrier (AM) lower bound, Hz
    double f_hi = 220.0;   ///< upper bound of the same quantity
    double max_hz = 1200.0;  ///< harmonic stack: no partial at or above this
    double gain = 1.0;
};

/// Scenes are defined in continuous time, so the same seed renders the same
/// scene at any rate.
struct SyntheticSceneSpec {
    std::vector<SourceSpec> sources;
    double duration = 5.0;
    double rate = 32000.0;
    std::uint64_t seed = 0;

    /// Two sources split around 1.5 kHz: a harmonic stack and band noise.
    static SyntheticSceneSpec two_band();
    void validate() const;
};

struct Track {
    std::string name;
    Signal mixture;
    std::vector<Signal> references;
    std::string metadata;  ///< JSON object describing the drawn parameters
};

struct Dataset {
    std::vector<Track> tracks;
    double rate = 0.0;
    /// Present for synthetic datasets; used to re-render at other rates.
    std::optional<SyntheticSceneSpec> synthetic;
    std::size_t synthetic_count = 0;
};

Dataset make_synthetic_dataset(const SyntheticSceneSpec& spec, std::size_t count);

/// Directory layout: <dir>/<track>/mixture.wav plus one or more
/// <dir>/<track>/source*.wav references, tracks in name order.
Dataset load_directory_dataset(const std::string& dir);

/// Re-renders a synthetic dataset at `rate`, or resamples every signal.
Dataset dataset_at_rate(const Dataset& ds, double rate);

struct Segment {
    std::string track;
    Signal mixture;
    std::vector<Signal> references;
};

struct SegmentSet {
    std::vector<Segment> segments;
    std::vector<std::string> skipped;  ///< tracks shorter than the segment length
    double rate = 0.0;
};

/// One leading segment of `seconds` per track; shorter tracks are skipped.
SegmentSet extract_segments(const Dataset& ds, double seconds = 5.0);

/// Mixtures of every segment as one-row tensors.
std::vector<Tensor> mixture_tensors(const SegmentSet& set);

}  // namespace sfi
