#include "sfi_lee/weights.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

namespace sfi {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'W', '\0'};
constexpr std::uint64_t kMaxCount = 1u << 24;

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

class Writer {
public:
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
    void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
    void bytes(const std::string& s) {
        u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    const std::vector<char>& buffer() const { return buf_; }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::vector<char> buf_;
};

class Reader {
public:
    explicit Reader(std::vector<char> data) : data_(std::move(data)) {}

    std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get_le(4, what)); }
    std::uint64_t u64(const char* what) { return get_le(8, what); }
    double f64(const char* what) { return std::bit_cast<double>(get_le(8, what)); }
    float f32(const char* what) { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4, what))); }
    std::string bytes(const char* what) {
        const std::uint64_t n = u64(what);
        need(n, what);
        std::string s(data_.begin() + static_cast<long>(pos_), data_.begin() + static_cast<long>(pos_ + n));
        pos_ += n;
        return s;
    }
    void raw(char* out, std::size_t n, const char* what) {
        need(n, what);
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }
    bool at_end() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::uint64_t n, const char* what) {
        if (n > data_.size() - pos_) {
            throw WeightFileError(WeightFileError::Kind::Format,
                                  std::string("weight file truncated while reading ") + what);
        }
    }
    std::uint64_t get_le(int n, const char* what) {
        need(static_cast<std::uint64_t>(n), what);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::vector<char> data_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t NamedTensor::element_count() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

const NamedTensor* WeightBundle::find(const std::string& name) const {
    auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& t) { return t.name == name; });
    return it == tensors.end() ? nullptr : &*it;
}

NamedTensor* WeightBundle::find(const std::string& name) {
    return const_cast<NamedTensor*>(std::as_const(*this).find(name));
}

const NamedTensor& WeightBundle::get(const std::string& name) const {
    if (const auto* t = find(name)) return *t;
    throw WeightFileError(WeightFileError::Kind::MissingTensor, "missing tensor '" + name + "'");
}

NamedTensor& WeightBundle::get(const std::string& name) {
    return const_cast<NamedTensor&>(std::as_const(*this).get(name));
}

void validate_bundle(const WeightBundle& bundle, const std::vector<TensorShape>& expected) {
    for (const auto& e : expected) {
        const NamedTensor& t = bundle.get(e.name);
        if (t.shape != e.shape) {
            throw WeightFileError(WeightFileError::Kind::ShapeMismatch,
                                  "tensor '" + e.name + "' has shape " + shape_str(t.shape) + ", expected " +
                                      shape_str(e.shape));
        }
        if (t.values.size() != t.element_count()) {
            throw WeightFileError(WeightFileError::Kind::ShapeMismatch,
                                  "tensor '" + e.name + "' payload size does not match its shape");
        }
    }
}

void save_weights(const std::filesystem::path& path, const WeightBundle& bundle) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kWeightFormatVersion);
    w.u64(bundle.seed);
    w.f64(bundle.trained_rate);
    w.bytes(bundle.spec_hash);
    w.u64(bundle.tensors.size());
    for (const auto& t : bundle.tensors) {
        if (t.values.size() != t.element_count()) {
            throw WeightFileError(WeightFileError::Kind::ShapeMismatch,
                                  "tensor '" + t.name + "' payload size does not match its shape");
        }
        w.bytes(t.name);
        w.u64(t.shape.size());
        for (auto d : t.shape) w.u64(d);
    }
    for (const auto& t : bundle.tensors) {
        for (float v : t.values) w.f32(v);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw WeightFileError(WeightFileError::Kind::Io, "cannot open '" + path.string() + "' for writing");
    }
    const auto& buf = w.buffer();
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw WeightFileError(WeightFileError::Kind::Io, "write failed for '" + path.string() + "'");
    }
}

WeightBundle load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw WeightFileError(WeightFileError::Kind::Io, "cannot open '" + path.string() + "'");
    }
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(data));

    char magic[4];
    r.raw(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw WeightFileError(WeightFileError::Kind::Format, "'" + path.string() + "' is not an .sfw weight file");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kWeightFormatVersion) {
        throw WeightFileError(WeightFileError::Kind::Version,
                              "unsupported weight file version " + std::to_string(version) + " (expected " +
                                  std::to_string(kWeightFormatVersion) + ")");
    }
    WeightBundle b;
    b.seed = r.u64("seed");
    b.trained_rate = r.f64("trained rate");
    b.spec_hash = r.bytes("spec hash");
    const std::uint64_t count = r.u64("tensor count");
    if (count > kMaxCount) {
        throw WeightFileError(WeightFileError::Kind::Format, "implausible tensor count " + std::to_string(count));
    }
    b.tensors.resize(count);
    for (auto& t : b.tensors) {
        t.name = r.bytes("tensor name");
        const std::uint64_t ndim = r.u64("tensor rank");
        if (ndim > 8) {
            throw WeightFileError(WeightFileError::Kind::Format, "tensor '" + t.name + "' has implausible rank");
        }
        t.shape.resize(ndim);
        for (auto& d : t.shape) d = r.u64("tensor dims");
    }
    for (auto& t : b.tensors) {
        std::uint64_t n = 1;
        for (auto d : t.shape) {
            if (d != 0 && n > r.remaining() / d) n = r.remaining() + 1;
            else n *= d;
        }
        if (n > r.remaining() / 4) {
            throw WeightFileError(WeightFileError::Kind::Format,
                                  "weight file truncated while reading tensor payload of '" + t.name + "'");
        }
        t.values.resize(t.element_count());
        for (auto& v : t.values) v = r.f32("tensor payload");
    }
    if (!r.at_end()) {
        throw WeightFileError(WeightFileError::Kind::Format, "trailing bytes after tensor payloads");
    }
    return b;
}

}  // namespace sfi
