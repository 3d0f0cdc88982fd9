#include "imcguard/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace imcguard {

namespace {

class Writer {
  public:
    explicit Writer(std::ostream &os) : os_(os) {}

    void bytes(std::string_view s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }
    void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
    void i8(std::int64_t v) { u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(v))); }

  private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i)
            os_.put(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    std::ostream &os_;
};

class Reader {
  public:
    explicit Reader(std::istream &is) : is_(is) {}

    void expect_magic(std::string_view magic) {
        std::string buf(magic.size(), '\0');
        is_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!is_ || buf != magic)
            throw Error("bad container magic, expected " + std::string(magic));
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(le(4))); }
    double f64() { return std::bit_cast<double>(le(8)); }
    std::int64_t i8() { return static_cast<std::int8_t>(u8()); }

  private:
    std::uint64_t le(int n) {
        std::array<unsigned char, 8> buf{};
        is_.read(reinterpret_cast<char *>(buf.data()), n);
        if (!is_)
            throw Error("truncated container");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(buf[static_cast<std::size_t>(i)]) << (8 * i);
        return v;
    }
    std::istream &is_;
};

void check_version(std::uint32_t v) {
    if (v != kContainerVersion)
        throw Error("unsupported container version " + std::to_string(v));
}

template <typename F> auto with_path(const std::string &path, F &&f) {
    try {
        return f();
    } catch (const IoError &) {
        throw;
    } catch (const Error &e) {
        throw IoError(path, e.what());
    }
}

} // namespace

void write_model(std::ostream &os, const ModelSpec &model) {
    model.validate();
    Writer w(os);
    w.bytes(kModelMagic);
    w.u32(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(model.activation_bits));
    w.u32(static_cast<std::uint32_t>(model.layers.size()));
    for (const auto &l : model.layers) {
        if (l.weights.bits > 8)
            throw ConfigError("model container stores weights as int8; got " + std::to_string(l.weights.bits) + " bits");
        w.u8(static_cast<std::uint8_t>(l.kind));
        w.u8(l.relu ? 1 : 0);
        w.u16(0);
        w.u32(static_cast<std::uint32_t>(l.weights.bits));
        w.i32(l.shift);
        w.f64(l.weights.scale);
        w.u32(static_cast<std::uint32_t>(l.weights.rows()));
        w.u32(static_cast<std::uint32_t>(l.weights.cols()));
        const bool conv = l.kind == LayerKind::conv;
        w.u32(static_cast<std::uint32_t>(conv ? l.kernel : 0));
        w.u32(static_cast<std::uint32_t>(conv ? l.in_depth : 0));
        w.u32(static_cast<std::uint32_t>(conv ? l.in_h : 0));
        w.u32(static_cast<std::uint32_t>(conv ? l.in_w : 0));
        for (auto v : l.weights.values.data)
            w.i8(v);
    }
    if (!os)
        throw Error("write failed");
}

ModelSpec read_model(std::istream &is) {
    Reader r(is);
    r.expect_magic(kModelMagic);
    check_version(r.u32());
    ModelSpec m;
    m.activation_bits = static_cast<int>(r.u32());
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        LayerSpec l;
        const std::uint8_t kind = r.u8();
        if (kind > 1)
            throw Error("unknown layer kind " + std::to_string(kind));
        l.kind = static_cast<LayerKind>(kind);
        l.relu = r.u8() != 0;
        r.u16();
        const auto bits = static_cast<int>(r.u32());
        l.shift = r.i32();
        const double scale = r.f64();
        const std::size_t rows = r.u32(), cols = r.u32();
        l.kernel = r.u32();
        l.in_depth = r.u32();
        l.in_h = r.u32();
        l.in_w = r.u32();
        if (rows == 0 || cols == 0 || rows * cols > (std::size_t{1} << 28))
            throw Error("implausible weight matrix size");
        std::vector<std::int32_t> vals(rows * cols);
        for (auto &v : vals)
            v = static_cast<std::int32_t>(r.i8());
        l.weights = QuantizedMatrix(Matrix<std::int32_t>(rows, cols, std::move(vals)), bits, scale);
        if (l.kind == LayerKind::dense) {
            l.in_features = rows;
            l.out_features = cols;
        } else {
            l.out_depth = cols;
        }
        m.layers.push_back(std::move(l));
    }
    m.validate();
    return m;
}

void write_dataset(std::ostream &os, const Dataset &data) {
    Writer w(os);
    w.bytes(kDatasetMagic);
    w.u32(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(data.activation_bits));
    w.u32(static_cast<std::uint32_t>(data.size()));
    w.u32(static_cast<std::uint32_t>(data.feature_len));
    w.u32(static_cast<std::uint32_t>(data.num_classes));
    if (data.labels.size() != data.samples.size())
        throw DimensionError("dataset label count does not match sample count");
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.samples[i].size() != data.feature_len)
            throw DimensionError("dataset sample has the wrong feature length");
        w.u32(data.labels[i]);
        for (auto v : data.samples[i].values)
            w.i8(v);
    }
    if (!os)
        throw Error("write failed");
}

Dataset read_dataset(std::istream &is) {
    Reader r(is);
    r.expect_magic(kDatasetMagic);
    check_version(r.u32());
    Dataset d;
    d.activation_bits = static_cast<int>(r.u32());
    if (d.activation_bits < 2 || d.activation_bits > 8)
        throw Error("dataset activation_bits must be in [2, 8]");
    const std::uint32_t count = r.u32();
    d.feature_len = r.u32();
    d.num_classes = r.u32();
    if (d.feature_len == 0 || d.feature_len > (std::size_t{1} << 24))
        throw Error("implausible feature length");
    d.samples.reserve(count);
    d.labels.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t label = r.u32();
        if (label >= d.num_classes)
            throw Error("label " + std::to_string(label) + " outside class range");
        std::vector<acc_t> f(d.feature_len);
        for (auto &v : f)
            v = r.i8();
        d.labels.push_back(label);
        d.samples.emplace_back(std::move(f), d.activation_bits);
    }
    return d;
}

void save_model(const std::string &path, const ModelSpec &model) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError(path, "cannot open for writing");
    with_path(path, [&] { write_model(os, model); });
}

ModelSpec load_model(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError(path, "cannot open model file");
    return with_path(path, [&] { return read_model(is); });
}

void save_dataset(const std::string &path, const Dataset &data) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError(path, "cannot open for writing");
    with_path(path, [&] { write_dataset(os, data); });
}

Dataset load_dataset(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError(path, "cannot open dataset file");
    return with_path(path, [&] { return read_dataset(is); });
}

} // namespace imcguard
