#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "openfed/param.hpp"

namespace openfed {

// In-memory classification set: row-major features, one label per row.
struct dataset {
    std::size_t dim = 0;
    std::uint32_t num_classes = 0;
    std::uint64_t seed = 0;
    std::vector<double> features;       // size() * dim, row-major
    std::vector<std::uint32_t> labels;  // values in [0, num_classes)

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t i) const { return features.data() + i * dim; }

    // n >= 1, feature/label sizes consistent, labels in range, every class
    // present at least once. Throws config_error.
    void validate() const;
};

// A client's slice of a dataset: indices into the base set, nothing copied.
struct dataset_view {
    const dataset* base = nullptr;
    std::vector<std::size_t> indices;

    std::size_t size() const { return indices.size(); }
    std::size_t dim() const { return base->dim; }
    std::uint32_t num_classes() const { return base->num_classes; }
    const double* row(std::size_t i) const { return base->row(indices[i]); }
    std::uint32_t label(std::size_t i) const { return base->labels[indices[i]]; }

    static dataset_view whole(const dataset& ds);
};

// K unit-variance Gaussian clusters whose centers sit exactly `separation`
// apart at the closest pair; labels are dealt round-robin so every class is
// hit even when n == K. Same arguments -> identical bytes.
// Requires n >= K >= 1. Throws config_error.
dataset make_blobs(std::size_t n, std::size_t d, std::uint32_t k, double separation,
                   std::uint64_t seed);

struct partition_scheme {
    enum class kind { iid, dirichlet, shards };

    kind how = kind::iid;
    double alpha = 1.0;                   // dirichlet concentration, > 0
    std::uint32_t shards_per_client = 1;  // shards scheme, >= 1

    static partition_scheme iid() { return {kind::iid, 1.0, 1}; }
    static partition_scheme dirichlet(double alpha);
    static partition_scheme shards(std::uint32_t per_client);

    friend bool operator==(const partition_scheme&, const partition_scheme&) = default;
};

struct partition_spec {
    std::map<std::string, std::vector<std::size_t>> assignment;  // client -> sorted indices
    partition_scheme scheme;

    // disjoint, covering {0..n-1}, every client non-empty; throws config_error
    void validate(std::size_t n) const;
};

// Splits example indices across clients. iid deals a shuffle round-robin;
// dirichlet(alpha) splits each class by Dirichlet-drawn proportions; shards
// sorts by label, cuts clients*s shards, and deals s to each client. A
// client left empty is repaired deterministically by taking one example
// from the largest share. Requires n >= number of clients.
partition_spec partition(const dataset& ds, const std::vector<std::string>& clients,
                         const partition_scheme& scheme, std::uint64_t seed);

// ---------------------------------------------------------------------------
// local trainers

enum class model_kind { logreg, mlp };

struct trainer_config {
    model_kind model = model_kind::logreg;
    std::uint32_t hidden = 16;  // mlp only
    std::uint32_t local_epochs = 1;
    std::uint32_t batch_size = 32;
    double lr = 0.05;
    std::optional<std::uint32_t> early_stop_patience;
    double l2 = 0.0;
    double augment_noise = 0.0;  // sigma of Gaussian feature noise while training
    std::uint64_t seed = 0;

    void validate() const;  // throws config_error
};

// Fresh parameters for the given architecture: logreg {weight KxD, bias K}
// starts at zero; mlp {w1 HxD, b1 H, w2 KxH, b2 K} draws uniform
// +-1/sqrt(fan_in) weights to break symmetry.
param_vector init_model(model_kind kind, std::size_t d, std::uint32_t k, std::uint32_t hidden,
                        std::uint64_t seed);

// Mean cross-entropy over the chosen rows plus (l2/2)*||params||^2.
// `batch` holds positions within the view. Throws shape_mismatch.
double batch_loss(const param_vector& model, const dataset_view& shard,
                  const std::vector<std::size_t>& batch, double l2);

// Exact gradient of batch_loss, same arguments.
param_vector batch_gradient(const param_vector& model, const dataset_view& shard,
                            const std::vector<std::size_t>& batch, double l2);

struct train_result {
    param_vector model;
    std::size_t num_samples = 0;  // shard size; the aggregation weight
    double loss = 0.0;            // mean cross-entropy of the returned model on the shard
    std::size_t steps = 0;        // SGD steps actually executed
};

struct train_anchor {
    const param_vector* global = nullptr;
    double mu = 0.0;
};

struct train_correction {
    const param_vector* client_variate = nullptr;
    const param_vector* server_variate = nullptr;
};

// Minibatch SGD on cross-entropy with hand-written gradients. `anchor` adds
// the proximal pull toward the global model; `correction` applies variate
// drift correction to every step. With early_stop_patience set, the last 10%
// of the shard (shuffled under the trainer seed) is held out and the best
// model by validation loss is returned once patience runs out.
// Throws shape_mismatch and non_finite_loss (divergence).
train_result local_train(const param_vector& model_in, const dataset_view& shard,
                         const trainer_config& cfg, const train_anchor* anchor = nullptr,
                         const train_correction* correction = nullptr);

struct eval_result {
    double accuracy = 0.0;
    double loss = 0.0;
};

// Mean 0/1 accuracy (argmax, lowest index wins ties) and mean cross-entropy.
// The architecture is inferred from the tensor names.
eval_result evaluate(const param_vector& model, const dataset_view& ds);
eval_result evaluate(const param_vector& model, const dataset& ds);

// Flat binary round-trip: header n,d,K (u32 LE each), features f64 LE
// row-major, labels u32 LE. Throws io_error / config_error.
void save_dataset(const dataset& ds, const std::string& path);
dataset load_dataset(const std::string& path);

}  // namespace openfed
