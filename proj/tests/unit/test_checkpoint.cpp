#include <fstream>

#include "advs/checkpoint.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace advs;
using namespace advs::testing;
namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f.write(s.data(), std::streamsize(s.size()));
}

FormatFault fault_of(const fs::path& p) {
    try {
        load_classifier(p);
    } catch (const FormatError& e) {
        return e.fault();
    }
    FAIL("expected a format error");
    return FormatFault::bad_payload;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("classifier round trip is bitwise") {
    const auto dir = scratch_dir("ckpt_net");
    const Network net = build_classifier(17);
    save_classifier(net, dir / "c.ckpt");
    const Network back = load_classifier(dir / "c.ckpt");
    CHECK(parameters_equal(net, back));
    CHECK(fingerprint(net) == fingerprint(back));
    const std::string bytes = read_all(dir / "c.ckpt");
    CHECK(bytes.substr(0, 4) == "ADVS");
    CHECK(bytes[4] == 1);
}

TEST_CASE("auto-encoder and ensemble round trips") {
    const auto dir = scratch_dir("ckpt_more");
    const AutoEncoder ae = build_autoencoder(4);
    save_autoencoder(ae, dir / "ae.ckpt");
    const AutoEncoder ae2 = load_autoencoder(dir / "ae.ckpt");
    CHECK(parameters_equal(ae.encoder, ae2.encoder));
    CHECK(parameters_equal(ae.decoder, ae2.decoder));

    const SwitchEnsemble ens = assemble_switch({build_classifier(1), build_classifier(2), build_classifier(3)},
                                               kClassifierSplit, 99);
    save_ensemble(ens, dir / "ens.ckpt");
    const SwitchEnsemble back = load_ensemble(dir / "ens.ckpt");
    REQUIRE(back.size() == 3);
    CHECK(back.split_index == kClassifierSplit);
    CHECK(back.seed == 99);
    for (std::size_t k = 0; k < 3; ++k) CHECK(parameters_equal(back.channels[k], ens.channels[k]));
    CHECK(parameters_equal(back.upper, ens.upper));
    CHECK_THROWS_AS(load_classifier(dir / "ens.ckpt"), FormatError);
    CHECK_THROWS_AS(load_autoencoder(dir / "ens.ckpt"), FormatError);
}

TEST_CASE("damaged files are rejected with specific faults") {
    const auto dir = scratch_dir("ckpt_bad");
    save_classifier(build_classifier(1), dir / "ok.ckpt");
    const std::string good = read_all(dir / "ok.ckpt");

    std::string magic = good;
    magic[0] = 'X';
    write_all(dir / "magic.ckpt", magic);
    CHECK(fault_of(dir / "magic.ckpt") == FormatFault::bad_magic);

    std::string version = good;
    version[4] = 7;
    write_all(dir / "version.ckpt", version);
    CHECK(fault_of(dir / "version.ckpt") == FormatFault::bad_version);

    write_all(dir / "short.ckpt", good.substr(0, good.size() - 3));
    CHECK(fault_of(dir / "short.ckpt") == FormatFault::truncated);

    write_all(dir / "long.ckpt", good + "xx");
    CHECK(fault_of(dir / "long.ckpt") == FormatFault::bad_payload);

    CHECK_THROWS_AS(load_classifier(dir / "absent.ckpt"), IoError);
}

}
