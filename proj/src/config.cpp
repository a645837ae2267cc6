#include "sfi_lee/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sfi {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

std::size_t parse_count(const std::string& v) {
    const double d = parse_number(v);
    if (d < 0.0 || d != std::floor(d)) throw ConfigError("expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(d);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected a boolean, got '" + v + "'");
}

template <typename E>
E pick(const std::string& v, std::initializer_list<std::pair<const char*, E>> options) {
    std::string names;
    for (const auto& [name, e] : options) {
        if (v == name) return e;
        names += std::string(names.empty() ? "" : ", ") + name;
    }
    throw ConfigError("expected one of {" + names + "}, got '" + v + "'");
}

SourceSpec parse_source(const std::string& text) {
    const auto f = split(text, ':');
    if (f.size() != 5) throw ConfigError("source '" + text + "' must be recipe:lo:hi:max_hz:gain");
    SourceSpec s;
    s.recipe = recipe_from_string(f[0]);
    s.f_lo = parse_number(f[1]);
    s.f_hi = parse_number(f[2]);
    s.max_hz = parse_number(f[3]);
    s.gain = parse_number(f[4]);
    return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct Key {
    std::string doc;
    Setter set;
};

const std::map<std::string, Key>& key_table() {
    static const std::map<std::string, Key> table = {
        {"experiment", {"experiment id written to every report row", [](auto& c, auto& v) { c.experiment_id = v; }}},
        {"model.id", {"model identifier", [](auto& c, auto& v) { c.model.id = v; }}},
        {"model.filters", {"mgf | learned", [](auto& c, auto& v) {
             c.model.encoder.filter_source = pick<FilterSource>(v, {{"mgf", FilterSource::MGF}, {"learned", FilterSource::Learned}});
         }}},
        {"model.encoder_init", {"learned filters: random | orthogonal", [](auto& c, auto& v) {
             c.model.encoder.init = pick<EncoderInit>(v, {{"random", EncoderInit::Random}, {"orthogonal", EncoderInit::Orthogonal}});
         }}},
        {"model.channels", {"encoder channels C", [](auto& c, auto& v) { c.model.encoder.channels = parse_count(v); }}},
        {"model.kernel", {"filter length K in samples", [](auto& c, auto& v) { c.model.encoder.kernel = parse_count(v); }}},
        {"model.hop", {"hop H in samples", [](auto& c, auto& v) { c.model.encoder.hop = parse_count(v); }}},
        {"model.nonlinearity", {"encoder output: none | relu", [](auto& c, auto& v) {
             c.model.encoder.nonlinearity = pick<Nonlinearity>(v, {{"none", Nonlinearity::None}, {"relu", Nonlinearity::ReLU}});
         }}},
        {"model.trained_rate", {"trained sampling rate in Hz", [](auto& c, auto& v) { c.model.trained_rate = parse_number(v); }}},
        {"model.mask", {"tcn | linear", [](auto& c, auto& v) {
             c.model.mask.kind = pick<MaskKind>(v, {{"tcn", MaskKind::TCN}, {"linear", MaskKind::Linear}});
         }}},
        {"model.mask_init", {"random | band_split", [](auto& c, auto& v) {
             c.model.mask.init = pick<MaskInit>(v, {{"random", MaskInit::Random}, {"band_split", MaskInit::BandSplit}});
         }}},
        {"model.blocks", {"mask blocks", [](auto& c, auto& v) { c.model.mask.blocks = parse_count(v); }}},
        {"model.hidden", {"mask hidden channels", [](auto& c, auto& v) { c.model.mask.hidden = parse_count(v); }}},
        {"model.sources", {"number of sources S", [](auto& c, auto& v) { c.model.mask.sources = parse_count(v); }}},
        {"model.weight_scale", {"std multiplier of random mask weights", [](auto& c, auto& v) { c.model.mask.weight_scale = parse_number(v); }}},
        {"model.split_hz", {"band-split mask boundary in Hz", [](auto& c, auto& v) { c.model.mask.split_hz = parse_number(v); }}},
        {"model.split_gain", {"band-split mask bias magnitude", [](auto& c, auto& v) { c.model.mask.split_gain = parse_number(v); }}},
        {"model.sigma_init", {"sigma of a single model (rad/s, pi suffix allowed)", [](auto& c, auto& v) { c.model.sigma_init = parse_number(v); }}},
        {"test_rates", {"evaluation rates in Hz", [](auto& c, auto& v) { c.test_rates = parse_number_list(v); }}},
        {"sigma_grid", {"sigma_init values for the sweep", [](auto& c, auto& v) { c.sigma_grid = parse_number_list(v); }}},
        {"seeds", {"number of seeds, 0..n-1", [](auto& c, auto& v) { c.seeds = parse_count(v); }}},
        {"segment_seconds", {"leading segment length per track", [](auto& c, auto& v) { c.segment_seconds = parse_number(v); }}},
        {"window", {"resampling kernel support L", [](auto& c, auto& v) { c.window.support = static_cast<int>(parse_count(v)); }}},
        {"estimator", {"linearized | fd", [](auto& c, auto& v) {
             c.lie.estimator = pick<Estimator>(v, {{"linearized", Estimator::Linearized}, {"fd", Estimator::CentralFD}});
         }}},
        {"r_step", {"finite-difference step in r", [](auto& c, auto& v) { c.lie.r_step = parse_number(v); }}},
        {"richardson", {"Richardson extrapolation for fd", [](auto& c, auto& v) { c.lie.richardson = parse_bool(v); }}},
        {"jvp_eps", {"relative step of Jacobian-vector products", [](auto& c, auto& v) { c.lie.jvp_eps = parse_number(v); }}},
        {"dataset.dir", {"directory of tracks; unset for synthetic scenes", [](auto& c, auto& v) { c.dataset_dir = v; }}},
        {"dataset.scenes", {"number of synthetic scenes", [](auto& c, auto& v) { c.scenes = parse_count(v); }}},
        {"dataset.duration", {"synthetic scene duration in seconds", [](auto& c, auto& v) { c.synthetic.duration = parse_number(v); }}},
        {"dataset.seed", {"synthetic scene seed", [](auto& c, auto& v) { c.synthetic.seed = parse_count(v); }}},
        {"dataset.sources", {"recipe:lo:hi:max_hz:gain, comma-separated", [](auto& c, auto& v) {
             c.synthetic.sources.clear();
             for (const auto& s : split(v, ',')) c.synthetic.sources.push_back(parse_source(s));
         }}},
        {"knob.lambdas", {"perturbation strengths", [](auto& c, auto& v) { c.lambdas = parse_number_list(v); }}},
        {"knob.period_frames", {"perturbation period T0 in frames", [](auto& c, auto& v) { c.period_frames = parse_number(v); }}},
        {"knob.seed", {"model seed of the knob experiment", [](auto& c, auto& v) { c.knob_seed = parse_count(v); }}},
        {"metrics_at_test_rates", {"also compute metrics at the test rates", [](auto& c, auto& v) { c.metrics_at_test_rates = parse_bool(v); }}},
        {"output_dir", {"report directory", [](auto& c, auto& v) { c.output_dir = v; }}},
    };
    return table;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
    for (int k = 1; k <= 10; ++k) sigma_grid.push_back(10.0 * k * std::numbers::pi);
}

void ExperimentConfig::validate() const {
    model.validate();
    if (test_rates.empty()) throw ConfigError("test_rates is empty");
    for (double r : test_rates) {
        if (!(r > 0.0)) throw ConfigError("test rates must be positive");
    }
    if (sigma_grid.empty()) throw ConfigError("sigma_grid is empty");
    for (double s : sigma_grid) {
        if (!(s > 0.0)) throw ConfigError("sigma values must be positive");
    }
    if (seeds < 1) throw ConfigError("seeds must be at least 1");
    if (!(segment_seconds > 0.0)) throw ConfigError("segment_seconds must be positive");
    try {
        window.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(lie.r_step > 0.0) || !(lie.jvp_eps > 0.0)) throw ConfigError("r_step and jvp_eps must be positive");
    for (double l : lambdas) {
        if (!(l >= 0.0)) throw ConfigError("knob lambdas must be non-negative");
    }
    if (!(period_frames > 0.0)) throw ConfigError("knob.period_frames must be positive");
    if (dataset_dir.empty()) {
        if (scenes < 1) throw ConfigError("dataset.scenes must be at least 1");
        SyntheticSceneSpec s = synthetic;
        for (double r : test_rates) {
            s.rate = r;
            s.validate();
        }
        s.rate = model.trained_rate;
        s.validate();
    }
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
    static const auto keys = [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [k, v] : key_table()) out.emplace_back(k, v.doc);
        return out;
    }();
    return keys;
}

double parse_number(const std::string& text) {
    std::string t = trim(text);
    double factor = 1.0;
    if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
        factor = std::numbers::pi;
        t = trim(t.substr(0, t.size() - 2));
        if (t.empty()) t = "1";
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + text + "'");
    }
    if (used != t.size() || !std::isfinite(v)) throw ConfigError("not a number: '" + text + "'");
    return v * factor;
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split(text, ',')) {
        if (item.empty()) throw ConfigError("empty item in list '" + text + "'");
        if (item.find(':') == std::string::npos) {
            out.push_back(parse_number(item));
            continue;
        }
        const auto r = split(item, ':');
        if (r.size() != 3) throw ConfigError("range '" + item + "' must be start:stop:step");
        const double a = parse_number(r[0]);
        const double b = parse_number(r[1]);
        const double step = parse_number(r[2]);
        if (!(step > 0.0) || b < a) throw ConfigError("range '" + item + "' needs step > 0 and stop >= start");
        const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    }
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& table = key_table();
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "repeated key '" + key + "'");
        try {
            it->second.set(c, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        } catch (const DataError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    c.synthetic.rate = c.model.trained_rate;
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace sfi
