#include "advs/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "advs/rng.hpp"

namespace advs {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

class GzReader {
public:
    explicit GzReader(const std::filesystem::path& path) : path_(path) {
        file_ = gzopen(path.string().c_str(), "rb");
        if (!file_) throw IoError("cannot open " + path.string());
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;
    ~GzReader() { gzclose(file_); }

    void read(void* dst, std::size_t n, const char* what) {
        auto* out = static_cast<unsigned char*>(dst);
        while (n > 0) {
            const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
            const int got = gzread(file_, out, chunk);
            if (got < 0) {
                int err = Z_OK;
                const char* msg = gzerror(file_, &err);
                if (err == Z_BUF_ERROR)
                    throw FormatError(FormatFault::truncated, path_.string() + ": truncated while reading " + what);
                throw IoError("read error in " + path_.string() + ": " + msg);
            }
            if (got == 0)
                throw FormatError(FormatFault::truncated, path_.string() + ": truncated while reading " + what);
            out += got;
            n -= std::size_t(got);
        }
    }

    std::uint32_t read_be32(const char* what) {
        std::array<unsigned char, 4> b{};
        read(b.data(), 4, what);
        return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
    }

private:
    std::filesystem::path path_;
    gzFile file_;
};

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : path_(path) {
        const bool gz = path.extension() == ".gz";
        file_ = gzopen(path.string().c_str(), gz ? "wb6" : "wbT");
        if (!file_) throw IoError("cannot create " + path.string());
    }
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;
    ~Writer() {
        if (file_) gzclose(file_);
    }

    void write(const void* src, std::size_t n) {
        if (n && gzwrite(file_, src, static_cast<unsigned>(n)) != int(n)) throw IoError("write error in " + path_.string());
    }
    void write_be32(std::uint32_t v) {
        const std::array<unsigned char, 4> b{static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                             static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        write(b.data(), 4);
    }
    void close() {
        if (gzclose(file_) != Z_OK) {
            file_ = nullptr;
            throw IoError("cannot finish " + path_.string());
        }
        file_ = nullptr;
    }

private:
    std::filesystem::path path_;
    gzFile file_;
};

std::uint8_t to_byte(float v) {
    if (!(v >= 0.0f && v <= 1.0f)) throw RangeError("pixel value outside [0,1]");
    return static_cast<std::uint8_t>(std::floor(double(v) * 255.0 + 0.5));
}

}  // namespace

void Dataset::validate() const {
    if (images.size() != labels.size())
        throw FormatError(FormatFault::count_mismatch, std::to_string(images.size()) + " images but " +
                                                           std::to_string(labels.size()) + " labels");
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (labels[i] >= 10) throw RangeError("label " + std::to_string(labels[i]) + " outside [0,10)");
        for (float v : images[i].data())
            if (!(v >= 0.0f && v <= 1.0f)) throw RangeError("pixel outside [0,1] in image " + std::to_string(i));
    }
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path, Split split) {
    GzReader img(images_path);
    if (const auto magic = img.read_be32("image magic"); magic != kImageMagic)
        throw FormatError(FormatFault::bad_magic,
                          images_path.string() + ": bad image magic " + std::to_string(magic) + " (want 2051)");
    const std::uint32_t n_img = img.read_be32("image count");
    const std::uint32_t rows = img.read_be32("row count");
    const std::uint32_t cols = img.read_be32("column count");
    if (rows == 0 || cols == 0) throw FormatError(FormatFault::bad_header, images_path.string() + ": zero image size");

    GzReader lab(labels_path);
    if (const auto magic = lab.read_be32("label magic"); magic != kLabelMagic)
        throw FormatError(FormatFault::bad_magic,
                          labels_path.string() + ": bad label magic " + std::to_string(magic) + " (want 2049)");
    const std::uint32_t n_lab = lab.read_be32("label count");
    if (n_img != n_lab)
        throw FormatError(FormatFault::count_mismatch,
                          std::to_string(n_img) + " images but " + std::to_string(n_lab) + " labels");

    Dataset ds;
    ds.split = split;
    const std::size_t plane = std::size_t(rows) * cols;
    std::vector<std::uint8_t> bytes(plane * n_img);
    img.read(bytes.data(), bytes.size(), "image payload");
    ds.labels.resize(n_lab);
    lab.read(ds.labels.data(), n_lab, "label payload");

    ds.images.reserve(n_img);
    for (std::size_t i = 0; i < n_img; ++i) {
        Tensor t(Shape{1, rows, cols});
        for (std::size_t p = 0; p < plane; ++p) t[p] = float(bytes[i * plane + p]) / 255.0f;
        ds.images.push_back(std::move(t));
    }
    ds.validate();
    return ds;
}

void save_idx(const Dataset& ds, const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    ds.validate();
    if (ds.empty()) throw RangeError("save_idx: empty dataset");
    const Shape& s = ds.images.front().shape();
    if (s.size() != 3 || s[0] != 1) throw ShapeError("save_idx: images must be [1,H,W], got " + shape_str(s));

    Writer img(images_path);
    img.write_be32(kImageMagic);
    img.write_be32(std::uint32_t(ds.size()));
    img.write_be32(std::uint32_t(s[1]));
    img.write_be32(std::uint32_t(s[2]));
    std::vector<std::uint8_t> bytes(s[1] * s[2]);
    for (const Tensor& t : ds.images) {
        if (t.shape() != s) throw ShapeError("save_idx: mixed image shapes");
        std::transform(t.data().begin(), t.data().end(), bytes.begin(), to_byte);
        img.write(bytes.data(), bytes.size());
    }
    img.close();

    Writer lab(labels_path);
    lab.write_be32(kLabelMagic);
    lab.write_be32(std::uint32_t(ds.size()));
    lab.write(ds.labels.data(), ds.labels.size());
    lab.close();
}

std::size_t distinct_labels(const Dataset& ds) {
    return std::set<std::uint8_t>(ds.labels.begin(), ds.labels.end()).size();
}

Dataset subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n == 0 || n > ds.size())
        throw RangeError("subset: n=" + std::to_string(n) + " outside (0," + std::to_string(ds.size()) + "]");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());

    const std::size_t want = std::min<std::size_t>(5, distinct_labels(ds));
    if (n >= 50) {
        // Swap unseen classes from the tail of the permutation into the drawn prefix.
        auto seen = [&] {
            std::set<std::uint8_t> s;
            for (std::size_t i = 0; i < n; ++i) s.insert(ds.labels[order[i]]);
            return s;
        };
        std::set<std::uint8_t> have = seen();
        std::size_t slot = n;
        for (std::size_t j = n; j < order.size() && have.size() < want; ++j) {
            const std::uint8_t lab = ds.labels[order[j]];
            if (have.count(lab)) continue;
            // Replace a drawn sample whose class is represented more than once.
            while (slot-- > 0) {
                const std::uint8_t old = ds.labels[order[slot]];
                const auto dup = std::count_if(order.begin(), order.begin() + std::ptrdiff_t(n),
                                               [&](std::size_t k) { return ds.labels[k] == old; });
                if (dup > 1) {
                    std::swap(order[slot], order[j]);
                    have.insert(lab);
                    break;
                }
            }
        }
    }

    Dataset out;
    out.split = ds.split;
    out.images.reserve(n);
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.images.push_back(ds.images[order[i]]);
        out.labels.push_back(ds.labels[order[i]]);
    }
    return out;
}

}  // namespace advs
