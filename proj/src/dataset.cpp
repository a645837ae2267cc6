#include "sfi_lee/dataset.hpp"

#include "sfi_lee/resampler.hpp"
#include "sfi_lee/wav.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>

namespace sfi {

namespace {

constexpr double kTargetRms = 0.1;
constexpr std::size_t kNoisePartials = 64;

struct Partial {
    double freq;
    double amp;
    double phase;
};

// Continuous-time description of one drawn source.
struct SourceDraw {
    std::vector<Partial> partials;
    double am_freq = 0.0;
    double am_depth = 0.0;
    double am_phase = 0.0;
    double scale = 1.0;
};

SourceDraw draw_source(const SourceSpec& s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    SourceDraw d;
    switch (s.recipe) {
        case SourceRecipe::HarmonicStack: {
            const double f0 = between(s.f_lo, s.f_hi);
            for (int k = 1; k * f0 < s.max_hz; ++k) {
                d.partials.push_back({k * f0, 1.0 / k, phase(rng)});
            }
            break;
        }
        case SourceRecipe::FilteredNoise: {
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t k = 0; k < kNoisePartials; ++k) {
                const double f = between(s.f_lo, s.f_hi);
                d.partials.push_back({f, std::abs(normal(rng)), phase(rng)});
            }
            break;
        }
        case SourceRecipe::AMTone: {
            d.partials.push_back({between(s.f_lo, s.f_hi), 1.0, phase(rng)});
            d.am_freq = between(1.0, 6.0);
            d.am_depth = between(0.3, 0.9);
            d.am_phase = phase(rng);
            break;
        }
    }
    double power = 0.0;
    for (const auto& p : d.partials) power += 0.5 * p.amp * p.amp;
    power *= 1.0 + 0.5 * d.am_depth * d.am_depth;
    d.scale = power > 0.0 ? s.gain * kTargetRms / std::sqrt(power) : 0.0;
    return d;
}

Signal render(const SourceDraw& d, double duration, double rate) {
    Signal s;
    s.sample_rate = rate;
    s.samples.resize(static_cast<std::size_t>(std::llround(duration * rate)));
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t n = 0; n < s.samples.size(); ++n) {
        const double t = static_cast<double>(n) / rate;
        double acc = 0.0;
        for (const auto& p : d.partials) acc += p.amp * std::sin(two_pi * p.freq * t + p.phase);
        const double env = 1.0 + d.am_depth * std::sin(two_pi * d.am_freq * t + d.am_phase);
        s.samples[n] = d.scale * env * acc;
    }
    return s;
}

nlohmann::json draw_json(const SourceSpec& s, const SourceDraw& d) {
    nlohmann::json j;
    j["recipe"] = to_string(s.recipe);
    j["gain"] = s.gain;
    j["scale"] = d.scale;
    std::vector<double> freqs;
    for (const auto& p : d.partials) freqs.push_back(p.freq);
    j["frequencies_hz"] = freqs;
    if (s.recipe == SourceRecipe::AMTone) {
        j["am_hz"] = d.am_freq;
        j["am_depth"] = d.am_depth;
    }
    return j;
}

Signal sum_of(const std::vector<Signal>& refs, double rate) {
    Signal mix;
    mix.sample_rate = rate;
    mix.samples.assign(refs.empty() ? 0 : refs.front().samples.size(), 0.0);
    for (const auto& r : refs) {
        for (std::size_t i = 0; i < mix.samples.size(); ++i) mix.samples[i] += r.samples[i];
    }
    return mix;
}

}  // namespace

std::string to_string(SourceRecipe r) {
    switch (r) {
        case SourceRecipe::HarmonicStack: return "harmonic";
        case SourceRecipe::FilteredNoise: return "noise";
        case SourceRecipe::AMTone: return "am";
    }
    return "?";
}

SourceRecipe recipe_from_string(const std::string& name) {
    for (auto r : {SourceRecipe::HarmonicStack, SourceRecipe::FilteredNoise, SourceRecipe::AMTone}) {
        if (to_string(r) == name) return r;
    }
    throw ConfigError("unknown source recipe '" + name + "'");
}

SyntheticSceneSpec SyntheticSceneSpec::two_band() {
    SyntheticSceneSpec s;
    s.sources.push_back({SourceRecipe::HarmonicStack, 110.0, 220.0, 1200.0, 1.0});
    s.sources.push_back({SourceRecipe::FilteredNoise, 1800.0, 3000.0, 3000.0, 1.0});
    return s;
}

void SyntheticSceneSpec::validate() const {
    if (sources.empty()) throw ConfigError("synthetic scene needs at least one source");
    if (!(duration > 0.0)) throw ConfigError("synthetic scene duration must be positive");
    if (!(rate > 0.0)) throw ConfigError("synthetic scene rate must be positive");
    for (const auto& s : sources) {
        if (!(s.f_lo > 0.0) || s.f_hi < s.f_lo) throw ConfigError("source frequency range must satisfy 0 < lo <= hi");
        double top = s.f_hi;
        if (s.recipe == SourceRecipe::HarmonicStack) top = s.max_hz;
        if (s.recipe == SourceRecipe::AMTone) top = s.f_hi + 6.0;
        if (top >= 0.4 * rate) {
            throw ConfigError("source content up to " + std::to_string(top) + " Hz is not below 0.4 * rate");
        }
    }
}

Dataset make_synthetic_dataset(const SyntheticSceneSpec& spec, std::size_t count) {
    spec.validate();
    Dataset ds;
    ds.rate = spec.rate;
    ds.synthetic = spec;
    ds.synthetic_count = count;
    for (std::size_t i = 0; i < count; ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(i)};
        std::mt19937_64 rng(seq);
        Track t;
        t.name = "scene" + std::to_string(i);
        nlohmann::json meta;
        meta["scene"] = i;
        meta["seed"] = spec.seed;
        meta["duration_s"] = spec.duration;
        for (const auto& s : spec.sources) {
            const SourceDraw d = draw_source(s, rng);
            t.references.push_back(render(d, spec.duration, spec.rate));
            meta["sources"].push_back(draw_json(s, d));
        }
        t.mixture = sum_of(t.references, spec.rate);
        t.metadata = meta.dump();
        ds.tracks.push_back(std::move(t));
    }
    return ds;
}

Dataset load_directory_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("dataset directory '" + dir + "' does not exist");
    std::vector<fs::path> tracks;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) tracks.push_back(e.path());
    }
    std::sort(tracks.begin(), tracks.end());
    Dataset ds;
    for (const auto& p : tracks) {
        if (!fs::exists(p / "mixture.wav")) continue;
        Track t;
        t.name = p.filename().string();
        t.mixture = read_wav((p / "mixture.wav").string());
        std::vector<fs::path> refs;
        for (const auto& e : fs::directory_iterator(p)) {
            const auto name = e.path().filename().string();
            if (name.rfind("source", 0) == 0 && e.path().extension() == ".wav") refs.push_back(e.path());
        }
        std::sort(refs.begin(), refs.end());
        if (refs.empty()) throw DataError("track '" + t.name + "' has no source*.wav references");
        for (const auto& r : refs) {
            Signal s = read_wav(r.string());
            if (s.sample_rate != t.mixture.sample_rate || s.length() != t.mixture.length()) {
                throw DataError("reference '" + r.string() + "' does not match its mixture in rate or length");
            }
            t.references.push_back(std::move(s));
        }
        if (ds.rate == 0.0) ds.rate = t.mixture.sample_rate;
        if (t.mixture.sample_rate != ds.rate) throw DataError("tracks in '" + dir + "' have different rates");
        ds.tracks.push_back(std::move(t));
    }
    if (ds.tracks.empty()) throw DataError("no tracks with mixture.wav under '" + dir + "'");
    return ds;
}

Dataset dataset_at_rate(const Dataset& ds, double rate) {
    if (!(rate > 0.0)) throw DataError("rate must be positive");
    if (ds.synthetic) {
        SyntheticSceneSpec spec = *ds.synthetic;
        spec.rate = rate;
        return make_synthetic_dataset(spec, ds.synthetic_count);
    }
    Dataset out;
    out.rate = rate;
    for (const auto& t : ds.tracks) {
        Track r;
        r.name = t.name;
        r.metadata = t.metadata;
        r.mixture = resample_to_rate(t.mixture, rate);
        for (const auto& s : t.references) r.references.push_back(resample_to_rate(s, rate, {}, r.mixture.length()));
        out.tracks.push_back(std::move(r));
    }
    return out;
}

SegmentSet extract_segments(const Dataset& ds, double seconds) {
    if (ds.tracks.empty()) throw DataError("dataset is empty");
    if (!(seconds > 0.0)) throw ConfigError("segment length must be positive");
    const auto n = static_cast<std::size_t>(std::llround(seconds * ds.rate));
    SegmentSet set;
    set.rate = ds.rate;
    for (const auto& t : ds.tracks) {
        if (t.mixture.length() < n) {
            std::cerr << "warning: track '" << t.name << "' shorter than " << seconds << " s, skipped\n";
            set.skipped.push_back(t.name);
            continue;
        }
        Segment s;
        s.track = t.name;
        s.mixture.sample_rate = ds.rate;
        s.mixture.samples.assign(t.mixture.samples.begin(), t.mixture.samples.begin() + n);
        for (const auto& r : t.references) {
            Signal c;
            c.sample_rate = ds.rate;
            c.samples.assign(r.samples.begin(), r.samples.begin() + n);
            s.references.push_back(std::move(c));
        }
        set.segments.push_back(std::move(s));
    }
    return set;
}

std::vector<Tensor> mixture_tensors(const SegmentSet& set) {
    std::vector<Tensor> out;
    for (const auto& s : set.segments) out.push_back(to_tensor(s.mixture));
    return out;
}

}  // namespace sfi
