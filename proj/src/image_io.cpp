#include "advs/image_io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace advs {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write error in " + path.string());
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

std::uint32_t get_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], const std::vector<std::uint8_t>& data) {
    put_be32(out, std::uint32_t(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0L, out.data() + start, uInt(out.size() - start));
    put_be32(out, std::uint32_t(crc));
}

std::vector<std::uint8_t> encode_png(const Image8& img) {
    const std::size_t stride = img.width * img.channels;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), img.pixels.begin() + std::ptrdiff_t(y * stride),
                   img.pixels.begin() + std::ptrdiff_t((y + 1) * stride));
    }
    uLongf zlen = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> z(zlen);
    if (compress2(z.data(), &zlen, raw.data(), uLong(raw.size()), 9) != Z_OK) throw IoError("png: deflate failed");
    z.resize(zlen);

    std::vector<std::uint8_t> out(std::begin(kPngSignature), std::end(kPngSignature));
    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, std::uint32_t(img.width));
    put_be32(ihdr, std::uint32_t(img.height));
    ihdr.push_back(8);                             // bit depth
    ihdr.push_back(img.channels == 3 ? 2 : 0);     // color type
    ihdr.insert(ihdr.end(), {0, 0, 0});            // compression, filter, interlace
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", {});
    return out;
}

std::uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return std::uint8_t(a);
    if (pb <= pc) return std::uint8_t(b);
    return std::uint8_t(c);
}

Image8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    auto fail = [&](FormatFault f, const std::string& msg) { return FormatError(f, name + ": " + msg); };
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0) throw fail(FormatFault::bad_magic, "not a PNG");
    Image8 img;
    std::vector<std::uint8_t> z;
    std::size_t pos = 8;
    bool seen_header = false, seen_end = false;
    while (pos + 12 <= bytes.size() && !seen_end) {
        const std::uint32_t len = get_be32(&bytes[pos]);
        if (pos + 12 + std::size_t(len) > bytes.size()) throw fail(FormatFault::truncated, "chunk overruns file");
        const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
        const std::uint8_t* data = &bytes[pos + 8];
        const std::uint32_t crc = get_be32(data + len);
        if (crc != std::uint32_t(crc32(0L, &bytes[pos + 4], uInt(len + 4)))) throw fail(FormatFault::bad_payload, "CRC mismatch in " + type);
        if (type == "IHDR") {
            if (len != 13) throw fail(FormatFault::bad_header, "bad IHDR length");
            img.width = get_be32(data);
            img.height = get_be32(data + 4);
            const std::uint8_t depth = data[8], color = data[9], interlace = data[12];
            if (depth != 8 || (color != 0 && color != 2) || interlace != 0)
                throw fail(FormatFault::bad_header, "only 8-bit gray/RGB non-interlaced PNG is supported");
            img.channels = color == 2 ? 3 : 1;
            seen_header = true;
        } else if (type == "IDAT") {
            z.insert(z.end(), data, data + len);
        } else if (type == "IEND") {
            seen_end = true;
        }
        pos += 12 + len;
    }
    if (!seen_header || !seen_end) throw fail(FormatFault::truncated, "missing IHDR or IEND");

    const std::size_t stride = img.width * img.channels;
    std::vector<std::uint8_t> raw((stride + 1) * img.height);
    uLongf rawlen = uLongf(raw.size());
    if (uncompress(raw.data(), &rawlen, z.data(), uLong(z.size())) != Z_OK || rawlen != raw.size())
        throw fail(FormatFault::bad_payload, "corrupt image data");

    img.pixels.resize(stride * img.height);
    const std::size_t bpp = img.channels;
    for (std::size_t y = 0; y < img.height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = &raw[y * (stride + 1) + 1];
        std::uint8_t* cur = &img.pixels[y * stride];
        const std::uint8_t* prev = y ? &img.pixels[(y - 1) * stride] : nullptr;
        for (std::size_t x = 0; x < stride; ++x) {
            const int a = x >= bpp ? cur[x - bpp] : 0;
            const int b = prev ? prev[x] : 0;
            const int c = (prev && x >= bpp) ? prev[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
            case 0: break;
            case 1: v += a; break;
            case 2: v += b; break;
            case 3: v += (a + b) / 2; break;
            case 4: v += paeth(a, b, c); break;
            default: throw fail(FormatFault::bad_payload, "unknown PNG filter " + std::to_string(filter));
            }
            cur[x] = std::uint8_t(v);
        }
    }
    return img;
}

Image8 decode_netpbm(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    auto fail = [&](FormatFault f, const std::string& msg) { return FormatError(f, name + ": " + msg); };
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw fail(FormatFault::bad_magic, "not a binary PGM/PPM");
    std::size_t pos = 2;
    auto next_int = [&]() -> std::size_t {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::size_t v = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            any = true;
        }
        if (!any) throw fail(FormatFault::bad_header, "malformed header");
        return v;
    };
    Image8 img;
    img.channels = bytes[1] == '6' ? 3 : 1;
    img.width = next_int();
    img.height = next_int();
    if (next_int() != 255) throw fail(FormatFault::bad_header, "only maxval 255 is supported");
    ++pos;  // single whitespace before payload
    const std::size_t n = img.width * img.height * img.channels;
    if (pos + n > bytes.size()) throw fail(FormatFault::truncated, "payload shorter than header says");
    img.pixels.assign(bytes.begin() + std::ptrdiff_t(pos), bytes.begin() + std::ptrdiff_t(pos + n));
    return img;
}

}  // namespace

std::uint8_t quantize_value(float v) {
    if (!(v >= 0.0f && v <= 1.0f)) throw RangeError("image value " + std::to_string(v) + " outside [0,1]");
    return static_cast<std::uint8_t>(std::floor(double(v) * 255.0 + 0.5));
}

Image8 quantize(const Tensor& image) {
    Image8 img;
    if (image.rank() == 3 && image.dim(0) == 1) {
        img.height = image.dim(1);
        img.width = image.dim(2);
    } else if (image.rank() == 2) {
        img.height = image.dim(0);
        img.width = image.dim(1);
    } else {
        throw ShapeError("quantize: expected [1,H,W] or [H,W], got " + shape_str(image.shape()));
    }
    img.pixels.reserve(image.size());
    for (float v : image.data()) img.pixels.push_back(quantize_value(v));
    return img;
}

void save_image(const Tensor& image, const std::filesystem::path& path, ImageFormat format) {
    write_image(quantize(image), path, format);
}

void write_image(const Image8& img, const std::filesystem::path& path, ImageFormat format) {
    if (img.channels != 1 && img.channels != 3) throw ShapeError("write_image: 1 or 3 channels required");
    if (img.pixels.size() != img.width * img.height * img.channels) throw ShapeError("write_image: pixel count mismatch");
    if (format == ImageFormat::png) {
        dump(path, encode_png(img));
        return;
    }
    std::ostringstream hdr;
    hdr << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
    const std::string h = hdr.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    dump(path, out);
}

Image8 read_image(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) return decode_png(bytes, path.string());
    return decode_netpbm(bytes, path.string());
}

ImageFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".png" ? ImageFormat::png : ImageFormat::pgm;
}

void write_f32_raw(const std::filesystem::path& path, std::span<const float> values) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * 4);
    for (float v : values) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int s = 0; s < 32; s += 8) out.push_back(std::uint8_t(bits >> s));
    }
    dump(path, out);
}

std::vector<float> read_f32_raw(const std::filesystem::path& path) {
    const auto bytes = slurp(path);
    if (bytes.size() % 4 != 0) throw FormatError(FormatFault::truncated, path.string() + ": size not a multiple of 4");
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[4 * i + b]) << (8 * b);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

}  // namespace advs
