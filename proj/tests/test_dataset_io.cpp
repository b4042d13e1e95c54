#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "scen/dataset.hpp"
#include "scen/dataset_io.hpp"
#include "scen/errors.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace scen;
using scen::test::TempDir;
namespace fs = std::filesystem;

namespace {

void expect_equal_bundles(const DatasetBundle& a, const DatasetBundle& b) {
    CHECK(a.state_names == b.state_names);
    CHECK(a.object_names == b.object_names);
    CHECK(a.seen_pairs == b.seen_pairs);
    CHECK(a.unseen_pairs == b.unseen_pairs);
    CHECK(a.labels == b.labels);
    CHECK(a.split == b.split);
    REQUIRE(a.features.shape() == b.features.shape());
    CHECK(a.features.values() == b.features.values());  // bit-exact, float payload included
}

}  // namespace

TEST_CASE("save then load round-trips the default synthetic bundle exactly") {
    TempDir tmp("io");
    DatasetBundle bundle = generate_synthetic(
        {.n_states = 4, .n_objects = 4, .seen_fraction = 0.8, .samples_per_pair = 6,
         .feature_dim = 5, .noise_sigma = 0.1, .seed = 9});
    save_bundle(bundle, tmp.path / "d.meta", tmp.path / "d.feat");
    DatasetBundle loaded = load_bundle(tmp.path / "d.meta", tmp.path / "d.feat");
    expect_equal_bundles(bundle, loaded);

    // a second save of the loaded bundle is byte-identical
    save_bundle(loaded, tmp.path / "d2.meta", tmp.path / "d2.feat");
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(tmp.path / "d.meta") == slurp(tmp.path / "d2.meta"));
    CHECK(slurp(tmp.path / "d.feat") == slurp(tmp.path / "d2.feat"));
}

TEST_CASE("row count mismatch between metadata and features is rejected") {
    TempDir tmp("io");
    DatasetBundle bundle = generate_synthetic(
        {.n_states = 4, .n_objects = 4, .seen_fraction = 0.8, .samples_per_pair = 4,
         .feature_dim = 3, .noise_sigma = 0.1, .seed = 2});
    save_bundle(bundle, tmp.path / "d.meta", tmp.path / "d.feat");

    // drop the last image line from the metadata
    std::ifstream in(tmp.path / "d.meta");
    std::string contents(std::istreambuf_iterator<char>(in), {});
    in.close();
    contents.erase(contents.find_last_of('\n', contents.size() - 2) + 1);
    std::ofstream out(tmp.path / "short.meta");
    out << contents;
    out.close();

    CHECK_THROWS_WITH_AS(load_bundle(tmp.path / "short.meta", tmp.path / "d.feat"),
                         doctest::Contains("does not match"), ValidationError);
}

TEST_CASE("bad magic, unknown names and malformed sections name the offset") {
    TempDir tmp("io");
    DatasetBundle bundle = generate_synthetic(
        {.n_states = 4, .n_objects = 4, .seen_fraction = 0.8, .samples_per_pair = 4,
         .feature_dim = 3, .noise_sigma = 0.1, .seed = 2});
    save_bundle(bundle, tmp.path / "d.meta", tmp.path / "d.feat");

    {
        std::ofstream bad(tmp.path / "bad.feat", std::ios::binary);
        bad << "NOTMAGIC";
    }
    CHECK_THROWS_WITH_AS(load_bundle(tmp.path / "d.meta", tmp.path / "bad.feat"),
                         doctest::Contains("offset 0"), ValidationError);

    {
        std::ofstream meta(tmp.path / "bad.meta");
        meta << "[states]\nwet\n[objects]\ncat\n[pairs]\nwet dog seen\n[images]\n";
    }
    try {
        load_bundle(tmp.path / "bad.meta", tmp.path / "d.feat");
        FAIL("expected ValidationError");
    } catch (const ValidationError& err) {
        const std::string msg = err.what();
        CHECK(msg.find("bad.meta:6") != std::string::npos);  // offending line number
        CHECK(msg.find("dog") != std::string::npos);
    }

    {
        std::ofstream meta(tmp.path / "order.meta");
        meta << "[objects]\ncat\n";
    }
    CHECK_THROWS_WITH_AS(load_bundle(tmp.path / "order.meta", tmp.path / "d.feat"),
                         doctest::Contains("out of order"), ValidationError);
}

TEST_CASE("a UT-Zappos-scale pair structure loads and validates") {
    // 16 states x 12 objects, 83 seen / 33 unseen pairs; the remaining 76
    // pairs of the product space are simply absent.
    TempDir tmp("io");
    DatasetBundle bundle;
    for (int s = 0; s < 16; ++s) bundle.state_names.push_back("s" + std::to_string(s));
    for (int o = 0; o < 12; ++o) bundle.object_names.push_back("o" + std::to_string(o));
    int rank = 0;
    for (int s = 0; s < 16 && rank < 116; ++s)
        for (int o = 0; o < 12 && rank < 116; ++o, ++rank)
            (rank < 83 ? bundle.seen_pairs : bundle.unseen_pairs).push_back({s, o});

    Rng rng(12);
    std::vector<double> feat;
    for (const auto& pair : bundle.seen_pairs) {
        for (int copy = 0; copy < 2; ++copy) {
            bundle.labels.push_back(pair);
            bundle.split.push_back(copy == 0 ? ImageSplit::train : ImageSplit::test);
            for (int f = 0; f < 4; ++f)
                feat.push_back(static_cast<double>(static_cast<float>(rng.uniform(-1.0, 1.0))));
        }
    }
    for (const auto& pair : bundle.unseen_pairs) {
        bundle.labels.push_back(pair);
        bundle.split.push_back(ImageSplit::val);
        for (int f = 0; f < 4; ++f)
            feat.push_back(static_cast<double>(static_cast<float>(rng.uniform(-1.0, 1.0))));
    }
    bundle.features = Tensor::matrix(bundle.labels.size(), 4, std::move(feat));
    bundle.validate();

    save_bundle(bundle, tmp.path / "z.meta", tmp.path / "z.feat");
    DatasetBundle loaded = load_bundle(tmp.path / "z.meta", tmp.path / "z.feat");
    CHECK(loaded.seen_pairs.size() == 83);
    CHECK(loaded.unseen_pairs.size() == 33);
    CHECK(loaded.n_states() == 16);
    CHECK(loaded.n_objects() == 12);
    expect_equal_bundles(bundle, loaded);
}

TEST_CASE("bundle validation catches structural violations") {
    Rng rng(55);
    DatasetBundle bundle = test::random_bundle(rng);
    SUBCASE("overlapping pair sets") {
        bundle.unseen_pairs.push_back(bundle.seen_pairs.front());
        std::sort(bundle.unseen_pairs.begin(), bundle.unseen_pairs.end());
        CHECK_THROWS_AS(bundle.validate(), ValidationError);
    }
    SUBCASE("train image with unseen pair") {
        bundle.labels[bundle.split_indices(ImageSplit::train).front()] =
            bundle.unseen_pairs.front();
        CHECK_THROWS_AS(bundle.validate(), ValidationError);
    }
}
