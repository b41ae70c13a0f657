#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "convgrid/conv.hpp"
#include "convgrid/dataset.hpp"
#include "convgrid/grid.hpp"

namespace convgrid {

// All file formats are little-endian with no alignment padding:
//   grid       "GRD1"  u8 rank, u32 channels, rank x u32 extents, f64 values
//   bank       "OPB1"  u8 rank, u32 p, u32 q, rank x u32 extents, f64 weights
//                      ordered (j outer, i middle, kernel row-major inner)
//   dataset    "DST1"  u8 task (0 regression, 1 classification), u32 arity,
//                      u64 sample count, shape header (u8 rank, u32 channels,
//                      rank x u32 extents), then per sample the f64 values
//                      followed by the label (regression: arity x f64;
//                      classification: u32 index)
//   checkpoint "CKP1"  u32 spec-string length, spec bytes, u64 n_theta,
//                      f64 theta

namespace detail {

class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }
    void magic(const char (&m)[5]) { bytes_.append(m, 4); }
    void raw(const std::string& s) { bytes_.append(s); }

    const std::string& bytes() const { return bytes_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open '" + path + "' for writing");
        out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
        if (!out) throw io_error("write failed for '" + path + "'");
    }

private:
    std::string bytes_;
};

class ByteReader {
public:
    ByteReader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

    static ByteReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open '" + path + "' for reading");
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return ByteReader(std::move(bytes), path);
    }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(bytes_[offset_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[offset_++])) << (8 * k);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[offset_++])) << (8 * k);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    void expect_magic(const char (&m)[5]) {
        need(4);
        if (std::memcmp(bytes_.data() + offset_, m, 4) != 0)
            throw io_error("'" + name_ + "': bad magic at offset 0 (expected " + std::string(m, 4) + ")");
        offset_ += 4;
    }
    std::string raw(std::size_t count) {
        need(count);
        std::string s = bytes_.substr(offset_, count);
        offset_ += count;
        return s;
    }
    void expect_end() const {
        if (offset_ != bytes_.size())
            throw io_error("'" + name_ + "': " + std::to_string(bytes_.size() - offset_) +
                           " trailing bytes at offset " + std::to_string(offset_));
    }
    std::size_t offset() const { return offset_; }

private:
    void need(std::size_t count) const {
        if (offset_ + count > bytes_.size())
            throw io_error("'" + name_ + "': truncated at offset " + std::to_string(offset_) + " (needed " +
                           std::to_string(count) + " more bytes, file has " +
                           std::to_string(bytes_.size() - offset_) + ")");
    }

    std::string bytes_;
    std::string name_;
    std::size_t offset_ = 0;
};

inline void write_shape_header(ByteWriter& w, const Shape& shape) {
    w.u8(static_cast<std::uint8_t>(shape.rank));
    w.u32(static_cast<std::uint32_t>(shape.channels));
    for (int a = 0; a < shape.rank; ++a) w.u32(static_cast<std::uint32_t>(shape.extent[a]));
}

inline Shape read_shape_header(ByteReader& r) {
    Shape shape;
    shape.rank = r.u8();
    shape.channels = static_cast<int>(r.u32());
    if (shape.rank < 1 || shape.rank > 3) throw io_error("shape header rank must be 1, 2, or 3");
    for (int a = 0; a < shape.rank; ++a) shape.extent[a] = static_cast<int>(r.u32());
    check_shape(shape);
    return shape;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Grid files
// ---------------------------------------------------------------------------

inline std::string grid_to_bytes(const Grid& grid) {
    detail::ByteWriter w;
    w.magic("GRD1");
    detail::write_shape_header(w, grid.shape());
    for (double v : grid.values()) w.f64(v);
    return w.bytes();
}

inline void write_grid(const std::string& path, const Grid& grid) {
    const std::string bytes = grid_to_bytes(grid);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline Grid grid_from_reader(detail::ByteReader& r) {
    r.expect_magic("GRD1");
    const Shape shape = detail::read_shape_header(r);
    std::vector<double> values(shape.value_count());
    for (double& v : values) v = r.f64();
    return Grid::unchecked(shape, std::move(values));
}

inline Grid read_grid(const std::string& path) {
    detail::ByteReader r = detail::ByteReader::from_file(path);
    Grid g = grid_from_reader(r);
    r.expect_end();
    return g;
}

// ---------------------------------------------------------------------------
// Operator bank files
// ---------------------------------------------------------------------------

inline void write_operator_bank(const std::string& path, const OperatorBank& bank) {
    detail::ByteWriter w;
    w.magic("OPB1");
    w.u8(static_cast<std::uint8_t>(bank.rank()));
    w.u32(static_cast<std::uint32_t>(bank.in_channels()));
    w.u32(static_cast<std::uint32_t>(bank.out_channels()));
    for (int e : bank.kernel_extents()) w.u32(static_cast<std::uint32_t>(e));
    for (double v : bank.weights()) w.f64(v);
    w.save(path);
}

inline OperatorBank read_operator_bank(const std::string& path) {
    detail::ByteReader r = detail::ByteReader::from_file(path);
    r.expect_magic("OPB1");
    const int rank = r.u8();
    if (rank < 1 || rank > 3) throw io_error("'" + path + "': bank rank must be 1, 2, or 3");
    const int p = static_cast<int>(r.u32());
    const int q = static_cast<int>(r.u32());
    std::vector<int> extents(rank);
    std::size_t ksize = 1;
    for (int& e : extents) {
        e = static_cast<int>(r.u32());
        ksize *= static_cast<std::size_t>(e);
    }
    std::vector<double> weights(ksize * static_cast<std::size_t>(p) * q);
    for (double& v : weights) v = r.f64();
    r.expect_end();
    return OperatorBank(p, q, rank, extents, std::move(weights));
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

inline void write_dataset(const std::string& path, const Dataset& ds) {
    check_dataset(ds);
    detail::ByteWriter w;
    w.magic("DST1");
    w.u8(static_cast<std::uint8_t>(ds.task));
    w.u32(static_cast<std::uint32_t>(ds.arity));
    w.u64(ds.samples.size());
    detail::write_shape_header(w, ds.shape);
    for (const LabeledSample& s : ds.samples) {
        for (double v : s.input.values()) w.f64(v);
        if (ds.task == Task::classification)
            w.u32(static_cast<std::uint32_t>(s.target.class_index));
        else
            for (double v : s.target.values) w.f64(v);
    }
    w.save(path);
}

inline Dataset read_dataset(const std::string& path) {
    detail::ByteReader r = detail::ByteReader::from_file(path);
    r.expect_magic("DST1");
    Dataset ds;
    const std::uint8_t task = r.u8();
    if (task > 1) throw io_error("'" + path + "': unknown task tag " + std::to_string(task));
    ds.task = static_cast<Task>(task);
    ds.arity = static_cast<int>(r.u32());
    const std::uint64_t count = r.u64();
    ds.shape = detail::read_shape_header(r);
    ds.samples.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        std::vector<double> values(ds.shape.value_count());
        for (double& v : values) v = r.f64();
        LabeledSample sample;
        sample.input = Grid::unchecked(ds.shape, std::move(values));
        if (ds.task == Task::classification) {
            sample.target = Label::of_class(static_cast<int>(r.u32()));
        } else {
            std::vector<double> label(ds.arity);
            for (double& v : label) v = r.f64();
            sample.target = Label::regression(std::move(label));
        }
        ds.samples.push_back(std::move(sample));
    }
    r.expect_end();
    check_dataset(ds);
    return ds;
}

// ---------------------------------------------------------------------------
// Checkpoint files
// ---------------------------------------------------------------------------

struct Checkpoint {
    std::string spec_text;  // canonical architecture grammar
    std::vector<double> theta;
};

inline void write_checkpoint(const std::string& path, const Checkpoint& ckp) {
    detail::ByteWriter w;
    w.magic("CKP1");
    w.u32(static_cast<std::uint32_t>(ckp.spec_text.size()));
    w.raw(ckp.spec_text);
    w.u64(ckp.theta.size());
    for (double v : ckp.theta) w.f64(v);
    w.save(path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
    detail::ByteReader r = detail::ByteReader::from_file(path);
    r.expect_magic("CKP1");
    Checkpoint ckp;
    const std::uint32_t len = r.u32();
    ckp.spec_text = r.raw(len);
    const std::uint64_t n = r.u64();
    ckp.theta.resize(n);
    for (double& v : ckp.theta) v = r.f64();
    r.expect_end();
    return ckp;
}

// ---------------------------------------------------------------------------
// PGM rendering
// ---------------------------------------------------------------------------

/// Binary PGM (P5, maxval 255) of a single-channel rank-2 grid under linear
/// min-max scaling; the minimum maps to 0 and constant matrices render black.
inline std::string pgm_bytes(const Grid& matrix) {
    if (matrix.rank() != 2 || matrix.channels() != 1)
        throw value_error("PGM rendering expects a single-channel rank-2 grid");
    const int rows = matrix.shape().extent[0];
    const int cols = matrix.shape().extent[1];
    double lo = matrix.values()[0], hi = matrix.values()[0];
    for (double v : matrix.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;

    std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
    out.reserve(out.size() + matrix.values().size());
    for (double v : matrix.values()) {
        const long pixel = std::lround((v - lo) * scale);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(pixel, 0L, 255L))));
    }
    return out;
}

inline void write_pgm(const std::string& path, const Grid& matrix) {
    const std::string bytes = pgm_bytes(matrix);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed for '" + path + "'");
}

}  // namespace convgrid
