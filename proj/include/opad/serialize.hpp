#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "opad/types.hpp"

namespace opad {

// Little-endian binary writer/reader used by the dataset container and the
// model checkpoints. Round-trips are bit-exact.
class BinWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    void vec(const Vec& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void ids(const std::vector<int>& v) {
        u64(v.size());
        for (int x : v) i32(x);
    }

    const std::vector<char>& bytes() const { return bytes_; }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + path);
        out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
        if (!out) throw IoError("write failed: " + path);
    }

private:
    std::vector<char> bytes_;
};

class BinReader {
public:
    explicit BinReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

    static BinReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open for reading: " + path);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        return BinReader(std::move(bytes));
    }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    void raw(char* p, std::size_t n) {
        if (pos_ + n > bytes_.size()) throw IoError("truncated binary stream");
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }
    Vec vec() {
        Vec v(u64());
        for (double& x : v) x = f64();
        return v;
    }
    std::vector<int> ids() {
        std::vector<int> v(u64());
        for (int& x : v) x = i32();
        return v;
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    unsigned char byte() {
        if (pos_ >= bytes_.size()) throw IoError("truncated binary stream");
        return static_cast<unsigned char>(bytes_[pos_++]);
    }

    std::vector<char> bytes_;
    std::size_t pos_ = 0;
};

namespace detail {
constexpr char kDatasetMagic[8] = {'O', 'P', 'A', 'D', 'D', 'S', '1', '\0'};

inline void write_entity(BinWriter& w, const EntityAnnotation& e) {
    w.u32(static_cast<std::uint32_t>(e.class_id));
    w.u32(static_cast<std::uint32_t>(e.kind));
    if (std::holds_alternative<Box>(e.geometry)) {
        const Box& b = std::get<Box>(e.geometry);
        w.u32(0);
        w.f64(b.x0);
        w.f64(b.y0);
        w.f64(b.x1);
        w.f64(b.y1);
    } else {
        const Span& s = std::get<Span>(e.geometry);
        w.u32(1);
        w.i32(s.start);
        w.i32(s.end);
    }
}

inline EntityAnnotation read_entity(BinReader& r) {
    EntityAnnotation e;
    e.class_id = static_cast<int>(r.u32());
    e.kind = static_cast<LabelKind>(r.u32());
    if (r.u32() == 0) {
        Box b;
        b.x0 = r.f64();
        b.y0 = r.f64();
        b.x1 = r.f64();
        b.y1 = r.f64();
        e.geometry = b;
    } else {
        Span s;
        s.start = r.i32();
        s.end = r.i32();
        e.geometry = s;
    }
    return e;
}
}  // namespace detail

inline std::vector<char> dataset_to_bytes(const Dataset& d) {
    BinWriter w;
    w.raw(detail::kDatasetMagic, 8);
    w.u32(static_cast<std::uint32_t>(d.task));
    w.u32(static_cast<std::uint32_t>(d.n_classes));
    w.u32(static_cast<std::uint32_t>(d.feature_dim));
    w.u32(static_cast<std::uint32_t>(d.max_len));
    w.u64(d.seed);
    w.ids(d.train_ids);
    w.ids(d.val_ids);
    w.ids(d.test_ids);
    w.u64(d.samples.size());
    for (const Sample& s : d.samples) {
        w.i32(s.id);
        w.u64(s.entities.size());
        for (const auto& e : s.entities) detail::write_entity(w, e);
        w.u64(s.proposals.size());
        for (const auto& p : s.proposals) {
            w.f64(p.box.x0);
            w.f64(p.box.y0);
            w.f64(p.box.x1);
            w.f64(p.box.y1);
            w.vec(p.features);
        }
        w.u64(s.token_features.size());
        for (const auto& t : s.token_features) w.vec(t);
    }
    return w.bytes();
}

inline Dataset dataset_from_bytes(std::vector<char> bytes) {
    BinReader r(std::move(bytes));
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, detail::kDatasetMagic, 8) != 0)
        throw IoError("not an OPAD dataset file");
    Dataset d;
    d.task = static_cast<TaskKind>(r.u32());
    d.n_classes = static_cast<int>(r.u32());
    d.feature_dim = static_cast<int>(r.u32());
    d.max_len = static_cast<int>(r.u32());
    d.seed = r.u64();
    d.train_ids = r.ids();
    d.val_ids = r.ids();
    d.test_ids = r.ids();
    d.samples.resize(r.u64());
    for (Sample& s : d.samples) {
        s.id = r.i32();
        s.entities.resize(r.u64());
        for (auto& e : s.entities) e = detail::read_entity(r);
        s.proposals.resize(r.u64());
        for (auto& p : s.proposals) {
            p.box.x0 = r.f64();
            p.box.y0 = r.f64();
            p.box.x1 = r.f64();
            p.box.y1 = r.f64();
            p.features = r.vec();
        }
        s.token_features.resize(r.u64());
        for (auto& t : s.token_features) t = r.vec();
    }
    if (!r.at_end()) throw IoError("trailing bytes in dataset file");
    return d;
}

inline void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    auto bytes = dataset_to_bytes(d);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return dataset_from_bytes(std::move(bytes));
}

}  // namespace opad
