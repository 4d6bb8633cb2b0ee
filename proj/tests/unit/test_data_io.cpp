#include <cmath>
#include <fstream>
#include <set>

#include "advs/dataset.hpp"
#include "advs/error.hpp"
#include "advs/image_io.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace advs;
using namespace advs::testing;
namespace fs = std::filesystem;

namespace {

void put_be32(std::string& s, std::uint32_t v) {
    for (int sh = 24; sh >= 0; sh -= 8) s.push_back(char((v >> sh) & 0xff));
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(bytes.data(), std::streamsize(bytes.size()));
}

std::string idx_images(std::uint32_t magic, std::uint32_t n, std::size_t payload) {
    std::string s;
    put_be32(s, magic);
    put_be32(s, n);
    put_be32(s, 28);
    put_be32(s, 28);
    for (std::size_t i = 0; i < payload; ++i) s.push_back(char(i % 256));
    return s;
}

std::string idx_labels(std::uint32_t n) {
    std::string s;
    put_be32(s, 2049);
    put_be32(s, n);
    for (std::uint32_t i = 0; i < n; ++i) s.push_back(char(i % 10));
    return s;
}

FormatFault fault_of(const fs::path& img, const fs::path& lbl) {
    try {
        load_idx(img, lbl);
    } catch (const FormatError& e) {
        return e.fault();
    }
    FAIL("expected a format error");
    return FormatFault::bad_header;
}

}  // namespace

TEST_SUITE("data-io") {

TEST_CASE("idx header with four images") {
    const auto dir = scratch_dir("idx_ok");
    std::string img = idx_images(2051, 4, 4 * 784);
    img[16] = char(255);
    write_bytes(dir / "img", img);
    write_bytes(dir / "lbl", idx_labels(4));
    const Dataset ds = load_idx(dir / "img", dir / "lbl");
    CHECK(ds.size() == 4);
    CHECK(ds.images[0].shape() == Shape{1, 28, 28});
    CHECK(ds.images[0][0] == 1.0f);
    CHECK(ds.images[0][1] == 1.0f / 255.0f);
    CHECK(ds.images[1][0] == 16.0f / 255.0f);  // payload byte 784
    CHECK(ds.labels[3] == 3);
}

TEST_CASE("idx errors are distinct") {
    const auto dir = scratch_dir("idx_bad");
    write_bytes(dir / "lbl4", idx_labels(4));
    write_bytes(dir / "lbl9", idx_labels(9));
    write_bytes(dir / "magic", idx_images(2049, 4, 4 * 784));
    write_bytes(dir / "short", idx_images(2051, 4, 3 * 784 + 10));
    write_bytes(dir / "ten", idx_images(2051, 10, 10 * 784));
    CHECK(fault_of(dir / "magic", dir / "lbl4") == FormatFault::bad_magic);
    CHECK(fault_of(dir / "short", dir / "lbl4") == FormatFault::truncated);
    CHECK(fault_of(dir / "ten", dir / "lbl9") == FormatFault::count_mismatch);
    CHECK_THROWS_AS(load_idx(dir / "absent", dir / "lbl4"), IoError);
}

TEST_CASE("bundled digits load and idx round trips") {
    const Dataset test = load_idx(data_dir() / "t10k-images-idx3-ubyte.gz", data_dir() / "t10k-labels-idx1-ubyte.gz",
                                  Split::test);
    CHECK(test.size() == 2000);
    CHECK_NOTHROW(test.validate());
    CHECK(distinct_labels(test) == 10);

    const Dataset small = subset(test, 50, 1);
    const auto dir = scratch_dir("idx_roundtrip");
    save_idx(small, dir / "i.gz", dir / "l.gz");
    const Dataset back = load_idx(dir / "i.gz", dir / "l.gz", Split::test);
    save_idx(small, dir / "i.raw", dir / "l.raw");
    const Dataset raw = load_idx(dir / "i.raw", dir / "l.raw", Split::test);
    REQUIRE(back.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(bitwise_equal(back.images[i], small.images[i]));
        CHECK(bitwise_equal(raw.images[i], small.images[i]));
        CHECK(back.labels[i] == small.labels[i]);
    }
}

TEST_CASE("quantisation rule") {
    CHECK(quantize_value(0.5f) == 128);
    CHECK(quantize_value(0.0f) == 0);
    CHECK(quantize_value(1.0f) == 255);
    CHECK_THROWS_AS(quantize_value(1.01f), RangeError);
    CHECK_THROWS_AS(quantize_value(-0.01f), RangeError);
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        const float v = float(rng.uniform01());
        CHECK(std::abs(double(v) - quantize_value(v) / 255.0) <= 1.0 / 510.0 + 1e-7);
    }
}

TEST_CASE("image files round trip bytes exactly") {
    const auto dir = scratch_dir("images");
    const Tensor img = random_image(5);
    const Image8 q = quantize(img);
    for (const char* name : {"a.pgm", "a.png"}) {
        const fs::path p = dir / name;
        save_image(img, p, format_for(p));
        CHECK(read_image(p) == q);
    }
    const Tensor zero(Shape{1, 28, 28});
    save_image(zero, dir / "z.pgm", ImageFormat::pgm);
    for (auto b : read_image(dir / "z.pgm").pixels) CHECK(b == 0);

    Image8 rgb{5, 3, 3, {}};
    for (std::size_t i = 0; i < 45; ++i) rgb.pixels.push_back(std::uint8_t(i * 5));
    write_image(rgb, dir / "c.png", ImageFormat::png);
    write_image(rgb, dir / "c.ppm", ImageFormat::pgm);
    CHECK(read_image(dir / "c.png") == rgb);
    CHECK(read_image(dir / "c.ppm") == rgb);

    Tensor bad = img;
    bad[0] = 2.0f;
    CHECK_THROWS_AS(save_image(bad, dir / "bad.png", ImageFormat::png), RangeError);
    CHECK_THROWS_AS(save_image(img, dir / "no" / "such" / "dir.png", ImageFormat::png), IoError);
}

TEST_CASE("corrupt png is rejected") {
    const auto dir = scratch_dir("png_bad");
    save_image(random_image(6), dir / "x.png", ImageFormat::png);
    std::string bytes;
    {
        std::ifstream f(dir / "x.png", std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    bytes[40] ^= 0x55;
    write_bytes(dir / "y.png", bytes);
    CHECK_THROWS_AS(read_image(dir / "y.png"), FormatError);
    write_bytes(dir / "z.png", "not an image");
    CHECK_THROWS_AS(read_image(dir / "z.png"), FormatError);
}

TEST_CASE("raw float payloads") {
    const auto dir = scratch_dir("f32");
    const std::vector<float> v{0.0f, -1.5f, 3.25f};
    write_f32_raw(dir / "v.f32", v);
    CHECK(read_f32_raw(dir / "v.f32") == v);
}

TEST_CASE("seeded subsets") {
    const Dataset ds = toy_digits(300, 9);
    const Dataset all = subset(ds, ds.size(), 3);
    CHECK(all.size() == ds.size());
    std::multiset<std::uint8_t> a(ds.labels.begin(), ds.labels.end()), b(all.labels.begin(), all.labels.end());
    CHECK(a == b);
    const Dataset s1 = subset(ds, 96, 42), s2 = subset(ds, 96, 42), s3 = subset(ds, 96, 43);
    CHECK(s1.labels == s2.labels);
    for (std::size_t i = 0; i < 96; ++i) CHECK(bitwise_equal(s1.images[i], s2.images[i]));
    CHECK(s1.labels != s3.labels);
    CHECK(distinct_labels(s1) >= 5);
    CHECK_THROWS_AS(subset(ds, 0, 1), RangeError);
    CHECK_THROWS_AS(subset(ds, 301, 1), RangeError);

    // A source dominated by one class still yields five classes.
    Dataset skew = toy_digits(10, 2);
    for (int i = 0; i < 500; ++i) {
        skew.images.push_back(skew.images[0]);
        skew.labels.push_back(0);
    }
    CHECK(distinct_labels(subset(skew, 50, 8)) >= 5);
}

TEST_CASE("dataset validation") {
    Dataset ds = toy_digits(3, 1);
    CHECK_NOTHROW(ds.validate());
    ds.labels[1] = 10;
    CHECK_THROWS_AS(ds.validate(), RangeError);
    ds = toy_digits(3, 1);
    ds.labels.pop_back();
    CHECK_THROWS(ds.validate());
}

}
