#include "scen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scen/errors.hpp"

namespace scen {

const char* split_name(ImageSplit split) {
    switch (split) {
        case ImageSplit::train: return "train";
        case ImageSplit::val: return "val";
        case ImageSplit::test: return "test";
    }
    return "?";
}

ImageSplit parse_split(const std::string& name) {
    if (name == "train") return ImageSplit::train;
    if (name == "val") return ImageSplit::val;
    if (name == "test") return ImageSplit::test;
    throw ValidationError("unknown split '" + name + "' (expected train|val|test)");
}

namespace {

bool contains(const std::vector<CompositionLabel>& sorted, const CompositionLabel& pair) {
    return std::binary_search(sorted.begin(), sorted.end(), pair);
}

}  // namespace

bool DatasetBundle::is_seen(const CompositionLabel& pair) const {
    return contains(seen_pairs, pair);
}

bool DatasetBundle::is_unseen(const CompositionLabel& pair) const {
    return contains(unseen_pairs, pair);
}

std::vector<std::size_t> DatasetBundle::split_indices(ImageSplit which) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == which) out.push_back(i);
    return out;
}

void DatasetBundle::validate() const {
    if (state_names.empty() || object_names.empty()) {
        throw ValidationError("bundle: state and object vocabularies must be non-empty");
    }
    if (features.ndim() != 2 || features.rows() != labels.size() || split.size() != labels.size()) {
        throw ValidationError("bundle: features/labels/split row counts disagree");
    }
    if (!std::is_sorted(seen_pairs.begin(), seen_pairs.end()) ||
        !std::is_sorted(unseen_pairs.begin(), unseen_pairs.end())) {
        throw ValidationError("bundle: pair sets must be sorted");
    }
    auto check_pair = [&](const CompositionLabel& pair, const std::string& where) {
        if (pair.state < 0 || pair.state >= static_cast<int>(state_names.size()) ||
            pair.object < 0 || pair.object >= static_cast<int>(object_names.size())) {
            throw ValidationError("bundle: " + where + " references an id outside the vocabulary");
        }
    };
    for (const auto& pair : seen_pairs) {
        check_pair(pair, "seen pair");
        if (contains(unseen_pairs, pair)) {
            throw ValidationError("bundle: seen and unseen pair sets intersect");
        }
    }
    for (const auto& pair : unseen_pairs) check_pair(pair, "unseen pair");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        check_pair(labels[i], "image " + std::to_string(i));
        if (split[i] == ImageSplit::train) {
            if (!is_seen(labels[i])) {
                throw ValidationError("bundle: train image " + std::to_string(i) +
                                      " carries a pair outside the seen set");
            }
        } else if (!is_seen(labels[i]) && !is_unseen(labels[i])) {
            throw ValidationError("bundle: val/test image " + std::to_string(i) +
                                  " carries a pair outside seen+unseen");
        }
    }
}

SpecificDatabases build_specific_databases(const DatasetBundle& bundle, std::size_t anchor) {
    if (anchor >= bundle.n_images() || bundle.split[anchor] != ImageSplit::train) {
        throw ValidationError("build_specific_databases: anchor " + std::to_string(anchor) +
                              " is not a train-split image");
    }
    const CompositionLabel ref = bundle.labels[anchor];
    SpecificDatabases dbs;
    for (std::size_t i = 0; i < bundle.n_images(); ++i) {
        if (bundle.split[i] != ImageSplit::train) continue;
        const CompositionLabel& lab = bundle.labels[i];
        if (i != anchor && lab.state == ref.state) dbs.d_s.push_back(i);
        if (i != anchor && lab.object == ref.object) dbs.d_o.push_back(i);
        if (lab.state != ref.state && lab.object != ref.object) dbs.d_ir.push_back(i);
    }
    return dbs;
}

TrainSampler::TrainSampler(const DatasetBundle& bundle) : bundle_(&bundle) {
    bundle.validate();
    db_slot_.assign(bundle.n_images(), -1);
    other_state_pool_.assign(bundle.n_states(), {});
    for (std::size_t i = 0; i < bundle.n_images(); ++i) {
        if (bundle.split[i] != ImageSplit::train) continue;
        train_images_.push_back(i);
        for (std::size_t s = 0; s < bundle.n_states(); ++s)
            if (static_cast<int>(s) != bundle.labels[i].state) other_state_pool_[s].push_back(i);
    }
    dbs_.reserve(train_images_.size());
    for (std::size_t img : train_images_) {
        db_slot_[img] = static_cast<std::ptrdiff_t>(dbs_.size());
        dbs_.push_back(build_specific_databases(bundle, img));
        if (dbs_.back().usable()) {
            eligible_.push_back(img);
        } else {
            cls_only_.push_back(img);
        }
    }
}

const SpecificDatabases& TrainSampler::databases(std::size_t anchor) const {
    if (anchor >= db_slot_.size() || db_slot_[anchor] < 0) {
        throw ValidationError("TrainSampler: image " + std::to_string(anchor) +
                              " is not a train-split image");
    }
    return dbs_[static_cast<std::size_t>(db_slot_[anchor])];
}

TrainBatch TrainSampler::sample(std::size_t batch_size, std::size_t k, Rng& rng) const {
    if (eligible_.empty()) {
        throw ValidationError(
            "sample_batch: no anchor has all of d_s, d_o, d_ir non-empty; "
            "check dataset connectivity (every usable anchor needs a same-state image, "
            "a same-object image, and a both-different image in the train split)");
    }
    std::vector<std::size_t> anchors(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
        anchors[i] = eligible_[rng.uniform_index(eligible_.size())];
    return sample_for_anchors(anchors, k, rng);
}

TrainBatch TrainSampler::sample_for_anchors(std::span<const std::size_t> anchors, std::size_t k,
                                            Rng& rng) const {
    if (k == 0) throw ValidationError("sample_batch: k must be >= 1");
    TrainBatch batch;
    batch.k = k;
    batch.anchors.assign(anchors.begin(), anchors.end());
    batch.state_positives.reserve(anchors.size());
    batch.object_positives.reserve(anchors.size());
    batch.negatives.reserve(anchors.size() * k);
    batch.transitions.reserve(anchors.size());

    std::vector<std::size_t> chosen;  // scratch for the k-subset draw
    for (std::size_t anchor : anchors) {
        const SpecificDatabases& dbs = databases(anchor);
        if (!dbs.usable()) {
            throw ValidationError("sample_batch: anchor " + std::to_string(anchor) +
                                  " has an empty specific database and cannot be sampled");
        }
        batch.state_positives.push_back(dbs.d_s[rng.uniform_index(dbs.d_s.size())]);
        batch.object_positives.push_back(dbs.d_o[rng.uniform_index(dbs.d_o.size())]);

        const std::size_t m = dbs.d_ir.size();
        if (m < k) {
            // with replacement only when the pool is smaller than k
            for (std::size_t j = 0; j < k; ++j)
                batch.negatives.push_back(dbs.d_ir[rng.uniform_index(m)]);
        } else {
            // Floyd's uniform k-subset, no pool copy
            chosen.clear();
            for (std::size_t j = m - k; j < m; ++j) {
                std::size_t t = rng.uniform_index(j + 1);
                if (std::find(chosen.begin(), chosen.end(), t) != chosen.end()) t = j;
                chosen.push_back(t);
            }
            for (std::size_t idx : chosen) batch.negatives.push_back(dbs.d_ir[idx]);
        }

        const auto& pool = other_state_pool_[static_cast<std::size_t>(bundle_->labels[anchor].state)];
        batch.transitions.push_back(pool[rng.uniform_index(pool.size())]);
    }
    return batch;
}

namespace {

float as_f32(double v) { return static_cast<float>(v); }

}  // namespace

DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t ns = spec.n_states, no = spec.n_objects;
    if (ns < 2 || no < 2) {
        throw ValidationError("generate_synthetic: need at least 2 states and 2 objects");
    }
    if (spec.samples_per_pair < 2 || spec.feature_dim == 0) {
        throw ValidationError("generate_synthetic: samples_per_pair >= 2 and feature_dim >= 1 required");
    }
    if (spec.noise_sigma < 0.0) {
        throw ValidationError("generate_synthetic: noise_sigma must be non-negative");
    }
    const std::size_t n_pairs = ns * no;
    const auto n_seen = static_cast<std::size_t>(
        std::llround(spec.seen_fraction * static_cast<double>(n_pairs)));
    if (n_seen >= n_pairs) {
        throw ValidationError("generate_synthetic: seen_fraction leaves no unseen pairs");
    }
    if (n_seen < 2 * std::max(ns, no)) {
        throw ValidationError(
            "generate_synthetic: seen_fraction too small; every state and object needs "
            "at least 2 seen pairs (need >= " +
            std::to_string(2 * std::max(ns, no)) + " seen pairs, got " + std::to_string(n_seen) +
            ")");
    }

    Rng rng(spec.seed);

    // Seen pair selection: first cover every state twice (preferring the
    // least-covered objects), then every object twice, then fill at random.
    // The coverage passes add at most 2*max(ns, no) pairs, so n_seen always fits.
    std::vector<char> taken(n_pairs, 0);
    std::vector<std::size_t> state_deg(ns, 0), object_deg(no, 0);
    std::vector<CompositionLabel> seen;
    auto take = [&](std::size_t s, std::size_t o) {
        taken[s * no + o] = 1;
        ++state_deg[s];
        ++object_deg[o];
        seen.push_back({static_cast<int>(s), static_cast<int>(o)});
    };
    auto pick_partner = [&](std::size_t fixed, bool fixed_is_state) {
        const std::size_t n_other = fixed_is_state ? no : ns;
        std::size_t best_deg = SIZE_MAX;
        std::vector<std::size_t> pool;
        for (std::size_t j = 0; j < n_other; ++j) {
            const std::size_t idx = fixed_is_state ? fixed * no + j : j * no + fixed;
            if (taken[idx]) continue;
            const std::size_t deg = fixed_is_state ? object_deg[j] : state_deg[j];
            if (deg < best_deg) {
                best_deg = deg;
                pool.clear();
            }
            if (deg == best_deg) pool.push_back(j);
        }
        return pool[rng.uniform_index(pool.size())];
    };
    for (std::size_t s = 0; s < ns; ++s)
        while (state_deg[s] < 2) take(s, pick_partner(s, true));
    for (std::size_t o = 0; o < no; ++o)
        while (object_deg[o] < 2) take(pick_partner(o, false), o);
    {
        std::vector<std::size_t> rest;
        for (std::size_t idx = 0; idx < n_pairs; ++idx)
            if (!taken[idx]) rest.push_back(idx);
        rng.shuffle(rest);
        for (std::size_t i = 0; seen.size() < n_seen; ++i) take(rest[i] / no, rest[i] % no);
    }

    DatasetBundle bundle;
    for (std::size_t s = 0; s < ns; ++s) bundle.state_names.push_back("state" + std::to_string(s));
    for (std::size_t o = 0; o < no; ++o) bundle.object_names.push_back("object" + std::to_string(o));
    std::sort(seen.begin(), seen.end());
    bundle.seen_pairs = seen;
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t o = 0; o < no; ++o) {
            CompositionLabel pair{static_cast<int>(s), static_cast<int>(o)};
            if (!std::binary_search(seen.begin(), seen.end(), pair))
                bundle.unseen_pairs.push_back(pair);
        }

    // Latents and the fixed mixing matrix. The tanh saturation is what
    // entangles state and object in the observed features.
    const std::size_t latent_dim = 6;
    const double gain = 3.0;
    std::vector<std::vector<double>> z_state(ns), z_object(no);
    for (auto& z : z_state) {
        z.resize(latent_dim);
        for (double& v : z) v = rng.normal();
    }
    for (auto& z : z_object) {
        z.resize(latent_dim);
        for (double& v : z) v = rng.normal();
    }
    std::vector<double> mix(spec.feature_dim * 2 * latent_dim);
    const double w_sigma = gain / std::sqrt(static_cast<double>(2 * latent_dim));
    for (double& v : mix) v = w_sigma * rng.normal();

    const std::size_t spp = spec.samples_per_pair;
    const std::size_t seen_train = (spp * 70) / 100;
    const std::size_t seen_val = (spp - seen_train) / 2;
    const std::size_t unseen_val = spp / 2;

    std::vector<CompositionLabel> all_pairs = bundle.seen_pairs;
    all_pairs.insert(all_pairs.end(), bundle.unseen_pairs.begin(), bundle.unseen_pairs.end());
    std::sort(all_pairs.begin(), all_pairs.end());

    std::vector<double> feat;
    feat.reserve(all_pairs.size() * spp * spec.feature_dim);
    std::vector<double> pre(spec.feature_dim);
    for (const CompositionLabel& pair : all_pairs) {
        const bool pair_seen = bundle.is_seen(pair);
        const auto& za = z_state[static_cast<std::size_t>(pair.state)];
        const auto& zo = z_object[static_cast<std::size_t>(pair.object)];
        for (std::size_t f = 0; f < spec.feature_dim; ++f) {
            const double* w = mix.data() + f * 2 * latent_dim;
            double acc = 0.0;
            for (std::size_t l = 0; l < latent_dim; ++l) acc += w[l] * za[l];
            for (std::size_t l = 0; l < latent_dim; ++l) acc += w[latent_dim + l] * zo[l];
            pre[f] = std::tanh(acc);
        }
        for (std::size_t sample = 0; sample < spp; ++sample) {
            for (std::size_t f = 0; f < spec.feature_dim; ++f) {
                const double noisy = pre[f] + spec.noise_sigma * rng.normal();
                feat.push_back(static_cast<double>(as_f32(noisy)));
            }
            bundle.labels.push_back(pair);
            ImageSplit s;
            if (pair_seen) {
                s = sample < seen_train            ? ImageSplit::train
                    : sample < seen_train + seen_val ? ImageSplit::val
                                                     : ImageSplit::test;
            } else {
                s = sample < unseen_val ? ImageSplit::val : ImageSplit::test;
            }
            bundle.split.push_back(s);
        }
    }
    bundle.features = Tensor::matrix(bundle.labels.size(), spec.feature_dim, std::move(feat));

    bundle.validate();
    for (ImageSplit s : {ImageSplit::val, ImageSplit::test}) {
        bool has_seen = false, has_unseen = false;
        for (std::size_t i = 0; i < bundle.n_images(); ++i) {
            if (bundle.split[i] != s) continue;
            (bundle.is_seen(bundle.labels[i]) ? has_seen : has_unseen) = true;
        }
        if (!has_seen || !has_unseen) {
            throw ValidationError(std::string("generate_synthetic: ") + split_name(s) +
                                  " split lacks seen or unseen images; increase samples_per_pair");
        }
    }
    return bundle;
}

}  // namespace scen
