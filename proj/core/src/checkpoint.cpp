#include "scen/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "scen/errors.hpp"

namespace scen {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'E', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw ValidationError(path + ": truncated checkpoint");
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double read_f64(std::istream& in, const std::string& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
        throw ValidationError(path + ": truncated checkpoint");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_mlp(std::ostream& out, const Mlp& mlp) {
    for (const auto& layer : mlp.layers) {
        for (const NodePtr& p : {layer.weight, layer.bias})
            for (std::size_t i = 0; i < p->value.size(); ++i) write_f64(out, p->value[i]);
    }
}

void read_mlp(std::istream& in, const std::string& path, Mlp& mlp) {
    for (auto& layer : mlp.layers) {
        for (const NodePtr& p : {layer.weight, layer.bias})
            for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = read_f64(in, path);
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ScenParams& scen,
                     const StmParams* stm) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    const ScenDims& d = scen.dims;
    for (std::size_t v : {d.feature_dim, d.embed_dim, d.hidden, d.proto_dim, d.n_states,
                          d.n_objects, d.classifier_depth}) {
        write_u32(out, static_cast<std::uint32_t>(v));
    }
    write_u32(out, stm ? 1 : 0);
    write_u32(out, stm ? static_cast<std::uint32_t>(stm->hidden) : 0);
    for (const Mlp* mlp : {&scen.fc, &scen.e_s, &scen.e_o, &scen.c_a, &scen.c_o})
        write_mlp(out, *mlp);
    if (stm) {
        write_mlp(out, stm->g);
        write_mlp(out, stm->d);
    }
    if (!out.good()) throw ValidationError("write failed on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw ValidationError(path.string() + ": bad magic (want SCENCKPT)");
    }
    const std::uint32_t version = read_u32(in, path.string());
    if (version != kVersion) {
        throw ValidationError(path.string() + ": unsupported checkpoint version " +
                              std::to_string(version));
    }
    ScenDims dims;
    dims.feature_dim = read_u32(in, path.string());
    dims.embed_dim = read_u32(in, path.string());
    dims.hidden = read_u32(in, path.string());
    dims.proto_dim = read_u32(in, path.string());
    dims.n_states = read_u32(in, path.string());
    dims.n_objects = read_u32(in, path.string());
    dims.classifier_depth = read_u32(in, path.string());
    const bool has_stm = read_u32(in, path.string()) != 0;
    const std::uint32_t stm_hidden = read_u32(in, path.string());

    // shapes come from the header; values are then read straight in
    Rng scratch(0);
    Checkpoint ckpt{init_scen(dims, scratch), std::nullopt};
    for (Mlp* mlp : {&ckpt.scen.fc, &ckpt.scen.e_s, &ckpt.scen.e_o, &ckpt.scen.c_a, &ckpt.scen.c_o})
        read_mlp(in, path.string(), *mlp);
    if (has_stm) {
        ckpt.stm = init_stm(dims.proto_dim, dims.feature_dim, stm_hidden, scratch);
        read_mlp(in, path.string(), ckpt.stm->g);
        read_mlp(in, path.string(), ckpt.stm->d);
    }
    in.peek();
    if (!in.eof()) throw ValidationError(path.string() + ": trailing bytes after parameters");
    return ckpt;
}

}  // namespace scen
