#include "stfc/io.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace stfc::io {

namespace {

constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::uint32_t kModelVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping not implemented");

std::uint32_t crc32(const unsigned char* data, std::size_t size) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xffffffffu;
    for (std::size_t i = 0; i < size; ++i) c = table[(c ^ data[i]) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error(ErrorCode::IoError, "cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t size) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(size));
        if (!out_) throw Error(ErrorCode::IoError, "write failed");
    }
    template <class T>
    void scalar(T v) {
        bytes(&v, sizeof(T));
    }

private:
    std::ofstream out_;
};

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error(ErrorCode::IoError, "cannot open: " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<unsigned char> buf(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(buf.data()), size);
    if (!in) throw Error(ErrorCode::IoError, "read failed: " + path);
    return buf;
}

class Reader {
public:
    explicit Reader(std::vector<unsigned char> buf) : buf_(std::move(buf)) {}
    template <class T>
    T scalar() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
    void bytes(void* p, std::size_t size) {
        if (pos_ + size > buf_.size()) throw Error(ErrorCode::IoError, "truncated file");
        std::memcpy(p, buf_.data() + pos_, size);
        pos_ += size;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }
    const unsigned char* at(std::size_t pos) const { return buf_.data() + pos; }
    std::size_t pos() const { return pos_; }

private:
    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
};

void expect_magic(Reader& r, const char* magic) {
    char got[4];
    r.bytes(got, 4);
    if (std::memcmp(got, magic, 4) != 0) throw Error(ErrorCode::BadMagic, "wrong file magic");
}

}  // namespace

void write_features(const FeatureSet& fs, const std::string& path) {
    Writer w(path);
    w.bytes("STFC", 4);
    w.scalar<std::uint32_t>(kFeatureVersion);
    w.scalar<std::uint64_t>(static_cast<std::uint64_t>(fs.n));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(fs.d));
    w.scalar<std::uint32_t>(0);  // reserved
    w.bytes(fs.data.data(), fs.data.size() * sizeof(float));
}

FeatureSet read_features(const std::string& path) {
    Reader r(read_file(path));
    expect_magic(r, "STFC");
    const auto version = r.scalar<std::uint32_t>();
    if (version != kFeatureVersion)
        throw Error(ErrorCode::FormatVersionMismatch, "feature file version " + std::to_string(version));
    const auto n = r.scalar<std::uint64_t>();
    const auto d = r.scalar<std::uint32_t>();
    r.scalar<std::uint32_t>();  // reserved
    if (n == 0 || d == 0) throw Error(ErrorCode::EmptySet, "empty feature file");
    // Never allocate from untrusted sizes without checking the payload length.
    if (r.remaining() != n * d * sizeof(float))
        throw Error(ErrorCode::LengthMismatch, "feature payload size mismatch");
    FeatureSet fs;
    fs.n = static_cast<std::int64_t>(n);
    fs.d = static_cast<std::int64_t>(d);
    fs.data.resize(n * d);
    r.bytes(fs.data.data(), fs.data.size() * sizeof(float));
    return fs;
}

void write_labels(const Partition& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path);
    for (std::int64_t l : p.labels) out << l << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed");
}

Partition read_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open: " + path);
    std::vector<std::int64_t> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t used = 0;
        long long v;
        try {
            v = std::stoll(line, &used);
        } catch (const std::exception&) {
            throw Error(ErrorCode::IoError, "bad label at line " + std::to_string(line_no));
        }
        if (used != line.size() || v < 0)
            throw Error(ErrorCode::IoError, "bad label at line " + std::to_string(line_no));
        labels.push_back(v);
    }
    return make_partition(std::move(labels));
}

void write_partition(const Partition& p, const std::string& path) {
    write_labels(canonicalize(p), path);
}

void write_model(const EdgeModel& m, const std::string& path) {
    check_model_shapes(m);
    // Tensor order: W_0..W_{L-1}, mlp_w1, mlp_b1, mlp_w2, mlp_b2 (biases as
    // single-row matrices). L is recovered from the count on load.
    std::vector<std::pair<std::pair<std::uint32_t, std::uint32_t>, const double*>> tensors;
    for (const Matrix& w : m.gcn_weights)
        tensors.push_back({{static_cast<std::uint32_t>(w.rows), static_cast<std::uint32_t>(w.cols)}, w.data.data()});
    tensors.push_back({{static_cast<std::uint32_t>(m.mlp_w1.rows), static_cast<std::uint32_t>(m.mlp_w1.cols)}, m.mlp_w1.data.data()});
    tensors.push_back({{1u, static_cast<std::uint32_t>(m.mlp_b1.size())}, m.mlp_b1.data()});
    tensors.push_back({{static_cast<std::uint32_t>(m.mlp_w2.rows), static_cast<std::uint32_t>(m.mlp_w2.cols)}, m.mlp_w2.data.data()});
    tensors.push_back({{1u, static_cast<std::uint32_t>(m.mlp_b2.size())}, m.mlp_b2.data()});

    std::vector<unsigned char> payload;
    auto append = [&payload](const void* p, std::size_t size) {
        const auto* b = static_cast<const unsigned char*>(p);
        payload.insert(payload.end(), b, b + size);
    };
    for (const auto& [shape, data] : tensors) {
        append(&shape.first, 4);
        append(&shape.second, 4);
        append(data, static_cast<std::size_t>(shape.first) * shape.second * sizeof(double));
    }

    Writer w(path);
    w.bytes("STFM", 4);
    w.scalar<std::uint32_t>(kModelVersion);
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
    w.bytes(payload.data(), payload.size());
    w.scalar<std::uint32_t>(crc32(payload.data(), payload.size()));
}

EdgeModel read_model(const std::string& path) {
    Reader r(read_file(path));
    expect_magic(r, "STFM");
    const auto version = r.scalar<std::uint32_t>();
    if (version != kModelVersion)
        throw Error(ErrorCode::FormatVersionMismatch, "model file version " + std::to_string(version));
    const auto count = r.scalar<std::uint32_t>();
    if (count < 5) throw Error(ErrorCode::FormatVersionMismatch, "too few tensors");

    if (r.remaining() < 4) throw Error(ErrorCode::IoError, "truncated file");
    const std::size_t payload_begin = r.pos();
    const std::size_t payload_size = r.remaining() - 4;
    const std::uint32_t expected_crc = crc32(r.at(payload_begin), payload_size);

    std::vector<Matrix> tensors;
    tensors.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto rows = r.scalar<std::uint32_t>();
        const auto cols = r.scalar<std::uint32_t>();
        const std::uint64_t cells = static_cast<std::uint64_t>(rows) * cols;
        if (r.remaining() < cells * sizeof(double) + 4)
            throw Error(ErrorCode::IoError, "truncated tensor payload");
        Matrix m(rows, cols);
        r.bytes(m.data.data(), cells * sizeof(double));
        tensors.push_back(std::move(m));
    }
    if (r.remaining() != 4) throw Error(ErrorCode::IoError, "trailing bytes after checksum");
    if (r.scalar<std::uint32_t>() != expected_crc)
        throw Error(ErrorCode::CrcMismatch, "model payload checksum failed");

    EdgeModel m;
    const std::size_t layers = count - 4;
    m.gcn_weights.assign(std::make_move_iterator(tensors.begin()),
                         std::make_move_iterator(tensors.begin() + layers));
    m.mlp_w1 = std::move(tensors[layers]);
    const Matrix& b1 = tensors[layers + 1];
    m.mlp_b1.assign(b1.data.begin(), b1.data.end());
    m.mlp_w2 = std::move(tensors[layers + 2]);
    const Matrix& b2 = tensors[layers + 3];
    m.mlp_b2.assign(b2.data.begin(), b2.data.end());

    if (m.gcn_weights.empty() || m.gcn_weights[0].rows % 2 != 0)
        throw Error(ErrorCode::ShapeMismatch, "first layer width");
    m.dims.push_back(m.gcn_weights[0].rows / 2);
    for (const Matrix& w : m.gcn_weights) m.dims.push_back(w.cols);
    check_model_shapes(m);
    if (!model_is_finite(m)) throw Error(ErrorCode::NonFinite, "model parameters not finite");
    return m;
}

}  // namespace stfc::io
