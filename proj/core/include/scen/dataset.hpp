#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scen/rng.hpp"
#include "scen/tensor.hpp"

namespace scen {

/// A (state, object) pair; the unit of supervision and prediction.
struct CompositionLabel {
    int state = 0;
    int object = 0;
    auto operator<=>(const CompositionLabel&) const = default;
};

enum class ImageSplit { train, val, test };

const char* split_name(ImageSplit split);
ImageSplit parse_split(const std::string& name);

/// Feature vectors, labels, the seen/unseen pair sets, and a per-image
/// train/val/test tag. Immutable after construction; validate() enforces
/// the structural invariants (disjoint pair sets, train labels seen, ...).
struct DatasetBundle {
    std::vector<std::string> state_names;
    std::vector<std::string> object_names;
    Tensor features;  // [n_images, feature_dim]
    std::vector<CompositionLabel> labels;
    std::vector<CompositionLabel> seen_pairs;    // sorted, unique
    std::vector<CompositionLabel> unseen_pairs;  // sorted, unique
    std::vector<ImageSplit> split;

    std::size_t n_images() const { return labels.size(); }
    std::size_t feature_dim() const { return features.ndim() == 2 ? features.cols() : 0; }
    std::size_t n_states() const { return state_names.size(); }
    std::size_t n_objects() const { return object_names.size(); }

    bool is_seen(const CompositionLabel& pair) const;
    bool is_unseen(const CompositionLabel& pair) const;
    std::vector<std::size_t> split_indices(ImageSplit which) const;

    void validate() const;  // throws ValidationError naming the violated rule
};

/// Per-anchor index sets over train-split images: d_s shares the anchor's
/// state, d_o shares its object, d_ir differs in both. The anchor itself is
/// excluded from d_s and d_o.
struct SpecificDatabases {
    std::vector<std::size_t> d_s;
    std::vector<std::size_t> d_o;
    std::vector<std::size_t> d_ir;

    /// Anchors with any empty list are excluded from contrastive sampling.
    bool usable() const { return !d_s.empty() && !d_o.empty() && !d_ir.empty(); }
};

SpecificDatabases build_specific_databases(const DatasetBundle& bundle, std::size_t anchor);

/// One contrastive batch. The negatives list is the single shared set for
/// both contrastive spaces (row i owns entries [i*k, (i+1)*k)).
struct TrainBatch {
    std::vector<std::size_t> anchors;
    std::vector<std::size_t> state_positives;   // from each anchor's d_s
    std::vector<std::size_t> object_positives;  // from each anchor's d_o
    std::vector<std::size_t> negatives;         // [B*k] from d_ir, shared by both spaces
    std::vector<std::size_t> transitions;       // train image with a different state
    std::size_t k = 0;

    std::size_t size() const { return anchors.size(); }
    std::span<const std::size_t> negatives_of(std::size_t row) const {
        return {negatives.data() + row * k, k};
    }
};

/// Owns the per-anchor databases of a bundle and draws batches from them.
/// Not shared across threads; the rng is caller-owned state.
class TrainSampler {
public:
    explicit TrainSampler(const DatasetBundle& bundle);

    const std::vector<std::size_t>& eligible_anchors() const { return eligible_; }
    const std::vector<std::size_t>& classification_only_anchors() const { return cls_only_; }
    const SpecificDatabases& databases(std::size_t anchor) const;

    /// Uniform anchors plus per-anchor positives/negatives/transition.
    TrainBatch sample(std::size_t batch_size, std::size_t k, Rng& rng) const;

    /// Same draw for a caller-chosen anchor list (epoch passes).
    TrainBatch sample_for_anchors(std::span<const std::size_t> anchors, std::size_t k,
                                  Rng& rng) const;

private:
    const DatasetBundle* bundle_;
    std::vector<std::size_t> train_images_;
    std::vector<std::ptrdiff_t> db_slot_;        // image index -> slot in dbs_, -1 if not train
    std::vector<SpecificDatabases> dbs_;
    std::vector<std::size_t> eligible_;
    std::vector<std::size_t> cls_only_;
    std::vector<std::vector<std::size_t>> other_state_pool_;  // per state id
};

struct SyntheticSpec {
    std::size_t n_states = 8;
    std::size_t n_objects = 10;
    double seen_fraction = 0.75;
    std::size_t samples_per_pair = 40;
    std::size_t feature_dim = 32;
    double noise_sigma = 0.1;
    std::uint64_t seed = 1;
};

/// Desk-scale generator: per-primitive latent vectors mixed through a fixed
/// random matrix and tanh, plus Gaussian noise. Unseen pairs appear only in
/// val/test; both of those splits carry seen- and unseen-pair images.
/// Feature values are quantized to float32 so file round-trips are exact.
DatasetBundle generate_synthetic(const SyntheticSpec& spec);

}  // namespace scen
