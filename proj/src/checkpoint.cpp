#include "advs/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace advs {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'V', 'S'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(char((v >> s) & 0xff));
}

class Cursor {
public:
    Cursor(const std::string& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

    const char* take(std::size_t n, const char* what) {
        if (pos_ + n > bytes_.size())
            throw FormatError(FormatFault::truncated, name_ + ": truncated while reading " + what);
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint32_t u32(const char* what) {
        const auto* p = reinterpret_cast<const unsigned char*>(take(4, what));
        return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

void load_into(const std::vector<Tensor*>& dst, std::vector<Tensor>& src, std::size_t& next, const std::string& what) {
    for (Tensor* t : dst) {
        if (next >= src.size()) throw FormatError(FormatFault::count_mismatch, what + ": too few tensors in checkpoint");
        if (src[next].shape() != t->shape())
            throw FormatError(FormatFault::bad_payload, what + ": tensor " + std::to_string(next) + " has shape " +
                                                            shape_str(src[next].shape()) + ", expected " +
                                                            shape_str(t->shape()));
        *t = std::move(src[next++]);
    }
}

void expect_all_used(const std::vector<Tensor>& src, std::size_t used, const std::string& what) {
    if (used != src.size()) throw FormatError(FormatFault::count_mismatch, what + ": unexpected extra tensors");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
    return parts;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::string& arch_id,
                      const std::vector<const Tensor*>& tensors) {
    std::string out(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, std::uint32_t(arch_id.size()));
    out += arch_id;
    put_u32(out, std::uint32_t(tensors.size()));
    for (const Tensor* t : tensors) {
        put_u32(out, std::uint32_t(t->rank()));
        for (std::size_t d : t->shape()) put_u32(out, std::uint32_t(d));
        for (float v : t->data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create " + path.string());
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw IoError("write error in " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    Cursor c(bytes, path.string());
    if (std::memcmp(c.take(4, "magic"), kMagic, 4) != 0)
        throw FormatError(FormatFault::bad_magic, path.string() + ": not an ADVS checkpoint");
    if (const auto v = c.u32("version"); v != kCheckpointVersion)
        throw FormatError(FormatFault::bad_version, path.string() + ": unsupported version " + std::to_string(v));
    Checkpoint ck;
    const std::uint32_t len = c.u32("arch id length");
    ck.arch_id.assign(c.take(len, "arch id"), len);
    const std::uint32_t count = c.u32("tensor count");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t rank = c.u32("rank");
        if (rank == 0 || rank > 8) throw FormatError(FormatFault::bad_header, path.string() + ": bad tensor rank");
        Shape shape(rank);
        for (auto& d : shape) {
            d = c.u32("dimension");
            if (d == 0) throw FormatError(FormatFault::bad_header, path.string() + ": zero dimension");
        }
        std::vector<float> data(shape_size(shape));
        for (float& v : data) v = std::bit_cast<float>(c.u32("payload"));
        ck.tensors.emplace_back(std::move(shape), std::move(data));
    }
    if (!c.done()) throw FormatError(FormatFault::bad_payload, path.string() + ": trailing bytes");
    return ck;
}

void save_classifier(const Network& net, const std::filesystem::path& path) {
    write_checkpoint(path, net.arch_id(), net.parameters());
}

Network load_classifier(const std::filesystem::path& path) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.arch_id != kClassifierArch)
        throw FormatError(FormatFault::bad_header, path.string() + ": unknown classifier architecture '" + ck.arch_id + "'");
    Network net = build_classifier(0);
    std::size_t next = 0;
    load_into(net.parameters(), ck.tensors, next, path.string());
    expect_all_used(ck.tensors, next, path.string());
    return net;
}

void save_autoencoder(const AutoEncoder& ae, const std::filesystem::path& path) {
    std::vector<const Tensor*> ts = ae.encoder.parameters();
    for (const Tensor* t : ae.decoder.parameters()) ts.push_back(t);
    write_checkpoint(path, std::string(kAutoEncoderArch), ts);
}

AutoEncoder load_autoencoder(const std::filesystem::path& path) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.arch_id != kAutoEncoderArch)
        throw FormatError(FormatFault::bad_header, path.string() + ": unknown auto-encoder architecture '" + ck.arch_id + "'");
    AutoEncoder ae = build_autoencoder(0);
    std::size_t next = 0;
    load_into(ae.parameters(), ck.tensors, next, path.string());
    expect_all_used(ck.tensors, next, path.string());
    return ae;
}

void save_ensemble(const SwitchEnsemble& ens, const std::filesystem::path& path) {
    if (!ens.assembled()) throw Error("save_ensemble: ensemble is not assembled");
    std::string base = ens.channels.front().arch_id();
    if (const auto slash = base.rfind("/lower"); slash != std::string::npos) base.resize(slash);
    const std::string arch = "switch:" + base + ":" + std::to_string(ens.size()) + ":" +
                             std::to_string(ens.split_index) + ":" + std::to_string(ens.seed);
    std::vector<const Tensor*> ts;
    for (const Network& ch : ens.channels)
        for (const Tensor* t : ch.parameters()) ts.push_back(t);
    for (const Tensor* t : ens.upper.parameters()) ts.push_back(t);
    write_checkpoint(path, arch, ts);
}

SwitchEnsemble load_ensemble(const std::filesystem::path& path) {
    Checkpoint ck = read_checkpoint(path);
    const auto parts = split(ck.arch_id, ':');
    if (parts.size() != 5 || parts[0] != "switch" || parts[1] != kClassifierArch)
        throw FormatError(FormatFault::bad_header, path.string() + ": unknown ensemble architecture '" + ck.arch_id + "'");
    std::size_t n = 0, split_index = 0;
    std::uint64_t seed = 0;
    try {
        n = std::stoul(parts[2]);
        split_index = std::stoul(parts[3]);
        seed = std::stoull(parts[4]);
    } catch (const std::exception&) {
        throw FormatError(FormatFault::bad_header, path.string() + ": malformed ensemble arch id");
    }
    if (n == 0 || n > 64) throw FormatError(FormatFault::bad_header, path.string() + ": bad channel count");
    const std::vector<Network> skeletons(n, build_classifier(0));
    SwitchEnsemble ens = assemble_switch(skeletons, split_index, seed);
    std::size_t next = 0;
    for (Network& ch : ens.channels) load_into(ch.parameters(), ck.tensors, next, path.string());
    load_into(ens.upper.parameters(), ck.tensors, next, path.string());
    expect_all_used(ck.tensors, next, path.string());
    return ens;
}

}  // namespace advs
