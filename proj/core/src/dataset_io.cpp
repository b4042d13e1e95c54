#include "scen/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "scen/errors.hpp"

namespace scen {

namespace {

constexpr char kFeatureMagic[8] = {'S', 'C', 'E', 'N', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f32(std::ostream& out, float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

std::uint32_t read_u32(std::istream& in, const std::string& path, std::size_t offset) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw ValidationError(path + ": truncated at offset " + std::to_string(offset));
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

[[noreturn]] void meta_fail(const std::filesystem::path& path, std::size_t line,
                            const std::string& msg) {
    throw ValidationError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

void check_name(const std::string& name, const std::filesystem::path& path) {
    if (name.empty() || name.find_first_of(" \t") != std::string::npos) {
        throw ValidationError(path.string() + ": name '" + name +
                              "' is empty or contains whitespace");
    }
}

}  // namespace

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& metadata_path,
                 const std::filesystem::path& features_path) {
    bundle.validate();

    std::ofstream meta(metadata_path);
    if (!meta) throw ValidationError("cannot open " + metadata_path.string() + " for writing");
    meta << "[states]\n";
    for (const auto& name : bundle.state_names) {
        check_name(name, metadata_path);
        meta << name << "\n";
    }
    meta << "[objects]\n";
    for (const auto& name : bundle.object_names) {
        check_name(name, metadata_path);
        meta << name << "\n";
    }
    meta << "[pairs]\n";
    for (const auto& pair : bundle.seen_pairs)
        meta << bundle.state_names[pair.state] << " " << bundle.object_names[pair.object]
             << " seen\n";
    for (const auto& pair : bundle.unseen_pairs)
        meta << bundle.state_names[pair.state] << " " << bundle.object_names[pair.object]
             << " unseen\n";
    meta << "[images]\n";
    for (std::size_t i = 0; i < bundle.n_images(); ++i)
        meta << i << " " << bundle.state_names[bundle.labels[i].state] << " "
             << bundle.object_names[bundle.labels[i].object] << " " << split_name(bundle.split[i])
             << "\n";
    if (!meta.good()) throw ValidationError("write failed on " + metadata_path.string());

    std::ofstream feat(features_path, std::ios::binary);
    if (!feat) throw ValidationError("cannot open " + features_path.string() + " for writing");
    feat.write(kFeatureMagic, 8);
    write_u32(feat, kFeatureVersion);
    write_u32(feat, static_cast<std::uint32_t>(bundle.n_images()));
    write_u32(feat, static_cast<std::uint32_t>(bundle.feature_dim()));
    for (std::size_t i = 0; i < bundle.features.size(); ++i)
        write_f32(feat, static_cast<float>(bundle.features[i]));
    if (!feat.good()) throw ValidationError("write failed on " + features_path.string());
}

DatasetBundle load_bundle(const std::filesystem::path& metadata_path,
                          const std::filesystem::path& features_path) {
    std::ifstream meta(metadata_path);
    if (!meta) throw ValidationError("cannot open " + metadata_path.string());

    DatasetBundle bundle;
    std::unordered_map<std::string, int> state_ids, object_ids;
    enum class Section { none, states, objects, pairs, images };
    Section section = Section::none;
    Section last = Section::none;
    std::string line;
    std::size_t line_no = 0;
    std::size_t image_count = 0;

    auto lookup = [&](const std::unordered_map<std::string, int>& ids, const std::string& name,
                      const char* kind) {
        auto it = ids.find(name);
        if (it == ids.end()) {
            meta_fail(metadata_path, line_no,
                      std::string(kind) + " '" + name + "' is not in the vocabulary");
        }
        return it->second;
    };

    while (std::getline(meta, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '[') {
            Section next;
            if (line == "[states]") next = Section::states;
            else if (line == "[objects]") next = Section::objects;
            else if (line == "[pairs]") next = Section::pairs;
            else if (line == "[images]") next = Section::images;
            else meta_fail(metadata_path, line_no, "unknown section header '" + line + "'");
            if (static_cast<int>(next) != static_cast<int>(last) + 1) {
                meta_fail(metadata_path, line_no,
                          "section '" + line + "' out of order (expected [states], [objects], "
                          "[pairs], [images])");
            }
            section = last = next;
            continue;
        }
        const auto tokens = tokenize(line);
        switch (section) {
            case Section::none:
                meta_fail(metadata_path, line_no, "content before the first section header");
            case Section::states:
                if (tokens.size() != 1) meta_fail(metadata_path, line_no, "expected one state name");
                if (!state_ids.emplace(tokens[0], static_cast<int>(bundle.state_names.size())).second)
                    meta_fail(metadata_path, line_no, "duplicate state '" + tokens[0] + "'");
                bundle.state_names.push_back(tokens[0]);
                break;
            case Section::objects:
                if (tokens.size() != 1) meta_fail(metadata_path, line_no, "expected one object name");
                if (!object_ids.emplace(tokens[0], static_cast<int>(bundle.object_names.size())).second)
                    meta_fail(metadata_path, line_no, "duplicate object '" + tokens[0] + "'");
                bundle.object_names.push_back(tokens[0]);
                break;
            case Section::pairs: {
                if (tokens.size() != 3)
                    meta_fail(metadata_path, line_no, "expected 'state object seen|unseen'");
                CompositionLabel pair{lookup(state_ids, tokens[0], "state"),
                                      lookup(object_ids, tokens[1], "object")};
                if (tokens[2] == "seen") bundle.seen_pairs.push_back(pair);
                else if (tokens[2] == "unseen") bundle.unseen_pairs.push_back(pair);
                else meta_fail(metadata_path, line_no, "expected seen|unseen, got '" + tokens[2] + "'");
                break;
            }
            case Section::images: {
                if (tokens.size() != 4)
                    meta_fail(metadata_path, line_no, "expected 'row state object split'");
                std::size_t row = 0;
                try {
                    row = std::stoull(tokens[0]);
                } catch (const std::exception&) {
                    meta_fail(metadata_path, line_no, "bad row index '" + tokens[0] + "'");
                }
                if (row != image_count) {
                    meta_fail(metadata_path, line_no,
                              "row index " + tokens[0] + " out of order (expected " +
                                  std::to_string(image_count) + ")");
                }
                bundle.labels.push_back({lookup(state_ids, tokens[1], "state"),
                                         lookup(object_ids, tokens[2], "object")});
                try {
                    bundle.split.push_back(parse_split(tokens[3]));
                } catch (const ValidationError& err) {
                    meta_fail(metadata_path, line_no, err.what());
                }
                ++image_count;
                break;
            }
        }
    }
    if (last != Section::images) {
        meta_fail(metadata_path, line_no, "missing [images] section");
    }
    for (auto* pairs : {&bundle.seen_pairs, &bundle.unseen_pairs}) {
        std::sort(pairs->begin(), pairs->end());
        pairs->erase(std::unique(pairs->begin(), pairs->end()), pairs->end());
    }

    std::ifstream feat(features_path, std::ios::binary);
    if (!feat) throw ValidationError("cannot open " + features_path.string());
    char magic[8];
    if (!feat.read(magic, 8) || std::memcmp(magic, kFeatureMagic, 8) != 0) {
        throw ValidationError(features_path.string() + ": bad magic at offset 0 (want SCENFEAT)");
    }
    const std::uint32_t version = read_u32(feat, features_path.string(), 8);
    if (version != kFeatureVersion) {
        throw ValidationError(features_path.string() + ": unsupported version " +
                              std::to_string(version) + " at offset 8");
    }
    const std::uint32_t n_rows = read_u32(feat, features_path.string(), 12);
    const std::uint32_t dim = read_u32(feat, features_path.string(), 16);
    if (n_rows != image_count) {
        throw ValidationError(features_path.string() + ": n_rows " + std::to_string(n_rows) +
                              " at offset 12 does not match " + std::to_string(image_count) +
                              " image lines in " + metadata_path.string());
    }
    if (n_rows == 0 || dim == 0) {
        throw ValidationError(features_path.string() + ": zero n_rows or dim in header");
    }
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n_rows) * dim);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_rows) * dim; ++i) {
        const std::uint32_t bits = read_u32(feat, features_path.string(), 20 + i * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        values.push_back(static_cast<double>(f));
    }
    feat.peek();
    if (!feat.eof()) {
        throw ValidationError(features_path.string() + ": trailing bytes after offset " +
                              std::to_string(20 + static_cast<std::size_t>(n_rows) * dim * 4));
    }
    bundle.features = Tensor::matrix(n_rows, dim, std::move(values));

    bundle.validate();
    return bundle;
}

}  // namespace scen
