#include "openfed/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "openfed/fedopt.hpp"
#include "openfed/rng.hpp"

namespace openfed {

namespace {

template <typename Rng>
void fy_shuffle(std::vector<std::size_t>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.below(i)]);
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double log_sum_exp(const double* z, std::size_t k) {
    double zmax = z[0];
    for (std::size_t i = 1; i < k; ++i) zmax = std::max(zmax, z[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::exp(z[i] - zmax);
    return zmax + std::log(s);
}

struct arch_info {
    model_kind kind = model_kind::logreg;
    std::size_t d = 0;
    std::size_t k = 0;
    std::size_t h = 0;
};

arch_info infer_arch(const param_vector& p) {
    if (p.contains("w1")) {
        if (p.tensor_count() != 4 || !p.contains("b1") || !p.contains("w2") || !p.contains("b2")) {
            throw shape_mismatch("mlp model must hold exactly w1, b1, w2, b2");
        }
        arch_info a;
        a.kind = model_kind::mlp;
        a.h = p.at("b1").size();
        a.k = p.at("b2").size();
        if (p.at("w1").size() % a.h != 0) throw shape_mismatch("w1 size not divisible by b1 size");
        a.d = p.at("w1").size() / a.h;
        if (p.at("w2").size() != a.k * a.h) throw shape_mismatch("w2 size does not match b2 x b1");
        return a;
    }
    if (p.contains("weight")) {
        if (p.tensor_count() != 2 || !p.contains("bias")) {
            throw shape_mismatch("logreg model must hold exactly weight, bias");
        }
        arch_info a;
        a.kind = model_kind::logreg;
        a.k = p.at("bias").size();
        if (p.at("weight").size() % a.k != 0) {
            throw shape_mismatch("weight size not divisible by bias size");
        }
        a.d = p.at("weight").size() / a.k;
        return a;
    }
    throw shape_mismatch("model tensors do not name a known architecture");
}

void require_fits(const arch_info& a, const dataset_view& shard) {
    if (a.d != shard.dim()) {
        throw shape_mismatch("model expects " + std::to_string(a.d) + " features, data has " +
                             std::to_string(shard.dim()));
    }
    if (a.k < shard.num_classes()) {
        throw shape_mismatch("model scores " + std::to_string(a.k) + " classes, data has " +
                             std::to_string(shard.num_classes()));
    }
}

// mean cross-entropy over m rows plus (l2/2)*||model||^2; fills *grad_out
// with the matching gradient when requested
double loss_and_grad(const param_vector& model, const arch_info& a, const double* xs,
                     const std::uint32_t* ys, std::size_t m, double l2,
                     param_vector::map_type* grad_out) {
    if (m == 0) throw config_error("empty batch");
    double total = 0.0;
    const double inv_m = 1.0 / static_cast<double>(m);

    if (a.kind == model_kind::logreg) {
        const auto& w = model.at("weight");
        const auto& b = model.at("bias");
        std::vector<double> gw, gb;
        if (grad_out) {
            gw.assign(w.size(), 0.0);
            gb.assign(b.size(), 0.0);
        }
        std::vector<double> z(a.k);
        for (std::size_t ex = 0; ex < m; ++ex) {
            const double* x = xs + ex * a.d;
            for (std::size_t c = 0; c < a.k; ++c) z[c] = b[c] + dot(w.data() + c * a.d, x, a.d);
            const double lse = log_sum_exp(z.data(), a.k);
            total += lse - z[ys[ex]];
            if (grad_out) {
                for (std::size_t c = 0; c < a.k; ++c) {
                    const double dz = (std::exp(z[c] - lse) - (c == ys[ex] ? 1.0 : 0.0)) * inv_m;
                    gb[c] += dz;
                    for (std::size_t j = 0; j < a.d; ++j) gw[c * a.d + j] += dz * x[j];
                }
            }
        }
        if (grad_out) {
            (*grad_out)["weight"] = std::move(gw);
            (*grad_out)["bias"] = std::move(gb);
        }
    } else {
        const auto& w1 = model.at("w1");
        const auto& b1 = model.at("b1");
        const auto& w2 = model.at("w2");
        const auto& b2 = model.at("b2");
        std::vector<double> gw1, gb1, gw2, gb2;
        if (grad_out) {
            gw1.assign(w1.size(), 0.0);
            gb1.assign(b1.size(), 0.0);
            gw2.assign(w2.size(), 0.0);
            gb2.assign(b2.size(), 0.0);
        }
        std::vector<double> hv(a.h), z(a.k), dz(a.k);
        for (std::size_t ex = 0; ex < m; ++ex) {
            const double* x = xs + ex * a.d;
            for (std::size_t j = 0; j < a.h; ++j) {
                hv[j] = std::tanh(b1[j] + dot(w1.data() + j * a.d, x, a.d));
            }
            for (std::size_t c = 0; c < a.k; ++c) {
                z[c] = b2[c] + dot(w2.data() + c * a.h, hv.data(), a.h);
            }
            const double lse = log_sum_exp(z.data(), a.k);
            total += lse - z[ys[ex]];
            if (grad_out) {
                for (std::size_t c = 0; c < a.k; ++c) {
                    dz[c] = (std::exp(z[c] - lse) - (c == ys[ex] ? 1.0 : 0.0)) * inv_m;
                    gb2[c] += dz[c];
                    for (std::size_t j = 0; j < a.h; ++j) gw2[c * a.h + j] += dz[c] * hv[j];
                }
                for (std::size_t j = 0; j < a.h; ++j) {
                    double dh = 0.0;
                    for (std::size_t c = 0; c < a.k; ++c) dh += w2[c * a.h + j] * dz[c];
                    const double da = dh * (1.0 - hv[j] * hv[j]);
                    gb1[j] += da;
                    for (std::size_t i = 0; i < a.d; ++i) gw1[j * a.d + i] += da * x[i];
                }
            }
        }
        if (grad_out) {
            (*grad_out)["w1"] = std::move(gw1);
            (*grad_out)["b1"] = std::move(gb1);
            (*grad_out)["w2"] = std::move(gw2);
            (*grad_out)["b2"] = std::move(gb2);
        }
    }

    total *= inv_m;
    if (l2 != 0.0) {
        double sq = 0.0;
        for (const auto& [name, values] : model.entries()) {
            (void)name;
            for (double v : values) sq += v * v;
        }
        total += 0.5 * l2 * sq;
        if (grad_out) {
            for (auto& [name, gvalues] : *grad_out) {
                const auto& pvalues = model.at(name);
                for (std::size_t i = 0; i < gvalues.size(); ++i) gvalues[i] += l2 * pvalues[i];
            }
        }
    }
    return total;
}

void fill_batch(const dataset_view& shard, const std::vector<std::size_t>& batch,
                std::vector<double>& xs, std::vector<std::uint32_t>& ys) {
    const std::size_t d = shard.dim();
    xs.resize(batch.size() * d);
    ys.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i] >= shard.size()) throw config_error("batch position out of range");
        std::memcpy(xs.data() + i * d, shard.row(batch[i]), d * sizeof(double));
        ys[i] = shard.label(batch[i]);
    }
}

std::vector<std::size_t> all_positions(std::size_t n) {
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    return pos;
}

}  // namespace

void dataset::validate() const {
    if (labels.empty()) throw config_error("dataset is empty");
    if (dim == 0) throw config_error("dataset has no feature dimensions");
    if (num_classes == 0) throw config_error("dataset has no classes");
    if (features.size() != labels.size() * dim) {
        throw config_error("feature matrix size does not match rows x dim");
    }
    std::vector<char> seen(num_classes, 0);
    for (std::uint32_t y : labels) {
        if (y >= num_classes) {
            throw config_error("label " + std::to_string(y) + " out of range [0, " +
                               std::to_string(num_classes) + ")");
        }
        seen[y] = 1;
    }
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        if (!seen[c]) throw config_error("class " + std::to_string(c) + " has no examples");
    }
}

dataset_view dataset_view::whole(const dataset& ds) {
    dataset_view v;
    v.base = &ds;
    v.indices = all_positions(ds.size());
    return v;
}

dataset make_blobs(std::size_t n, std::size_t d, std::uint32_t k, double separation,
                   std::uint64_t seed) {
    if (k == 0) throw config_error("need at least one class");
    if (d == 0) throw config_error("need at least one feature dimension");
    if (n < k) throw config_error("need at least one example per class");
    if (!std::isfinite(separation) || separation < 0.0) {
        throw config_error("separation must be finite and non-negative");
    }

    // center layout makes the closest pair exactly `separation` apart:
    // a line for d == 1, otherwise a circle in the first two dimensions
    std::vector<double> centers(static_cast<std::size_t>(k) * d, 0.0);
    if (k > 1) {
        if (d == 1) {
            for (std::uint32_t c = 0; c < k; ++c) centers[c] = c * separation;
        } else {
            const double pi = std::acos(-1.0);
            const double radius = separation / (2.0 * std::sin(pi / k));
            for (std::uint32_t c = 0; c < k; ++c) {
                const double angle = 2.0 * pi * c / k;
                centers[c * d + 0] = radius * std::cos(angle);
                centers[c * d + 1] = radius * std::sin(angle);
            }
        }
    }

    dataset ds;
    ds.dim = d;
    ds.num_classes = k;
    ds.seed = seed;
    ds.features.resize(n * d);
    ds.labels.resize(n);
    std::mt19937_64 rng(sub_seed(seed, "blobs"));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t c = static_cast<std::uint32_t>(i % k);
        ds.labels[i] = c;
        for (std::size_t j = 0; j < d; ++j) ds.features[i * d + j] = centers[c * d + j] + unit(rng);
    }
    return ds;
}

partition_scheme partition_scheme::dirichlet(double alpha) {
    if (!std::isfinite(alpha) || alpha <= 0.0) throw config_error("dirichlet alpha must be > 0");
    partition_scheme s;
    s.how = kind::dirichlet;
    s.alpha = alpha;
    return s;
}

partition_scheme partition_scheme::shards(std::uint32_t per_client) {
    if (per_client < 1) throw config_error("shards_per_client must be >= 1");
    partition_scheme s;
    s.how = kind::shards;
    s.shards_per_client = per_client;
    return s;
}

void partition_spec::validate(std::size_t n) const {
    std::vector<char> seen(n, 0);
    std::size_t covered = 0;
    for (const auto& [client, indices] : assignment) {
        if (indices.empty()) throw config_error("client '" + client + "' holds no examples");
        if (!std::is_sorted(indices.begin(), indices.end())) {
            throw config_error("client '" + client + "' index list is not sorted");
        }
        for (std::size_t idx : indices) {
            if (idx >= n) throw config_error("index " + std::to_string(idx) + " out of range");
            if (seen[idx]) {
                throw config_error("index " + std::to_string(idx) + " assigned twice");
            }
            seen[idx] = 1;
            ++covered;
        }
    }
    if (covered != n) {
        throw config_error("partition covers " + std::to_string(covered) + " of " +
                           std::to_string(n) + " examples");
    }
}

partition_spec partition(const dataset& ds, const std::vector<std::string>& clients,
                         const partition_scheme& scheme, std::uint64_t seed) {
    if (clients.empty()) throw config_error("need at least one client");
    std::vector<std::string> ids(clients);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw config_error("duplicate client id in partition request");
    }
    const std::size_t n = ds.size();
    const std::size_t c = ids.size();
    if (n < c) throw config_error("fewer examples than clients");

    std::map<std::string, std::vector<std::size_t>> shares;
    for (const auto& id : ids) shares[id] = {};

    switch (scheme.how) {
        case partition_scheme::kind::iid: {
            std::vector<std::size_t> idx = all_positions(n);
            split_mix64 rng{sub_seed(seed, "iid")};
            fy_shuffle(idx, rng);
            for (std::size_t i = 0; i < n; ++i) shares[ids[i % c]].push_back(idx[i]);
            break;
        }
        case partition_scheme::kind::dirichlet: {
            if (!std::isfinite(scheme.alpha) || scheme.alpha <= 0.0) {
                throw config_error("dirichlet alpha must be > 0");
            }
            std::mt19937_64 rng(sub_seed(seed, "dirichlet"));
            std::gamma_distribution<double> gamma(scheme.alpha, 1.0);
            for (std::uint32_t cls = 0; cls < ds.num_classes; ++cls) {
                std::vector<std::size_t> pool;
                for (std::size_t i = 0; i < n; ++i) {
                    if (ds.labels[i] == cls) pool.push_back(i);
                }
                if (pool.empty()) continue;
                std::shuffle(pool.begin(), pool.end(), rng);
                std::vector<double> props(c);
                double total = 0.0;
                for (double& p : props) {
                    p = gamma(rng);
                    total += p;
                }
                if (!(total > 0.0)) {  // all draws underflowed; fall back to uniform
                    std::fill(props.begin(), props.end(), 1.0);
                    total = static_cast<double>(c);
                }
                std::size_t start = 0;
                double cum = 0.0;
                for (std::size_t j = 0; j < c; ++j) {
                    cum += props[j] / total;
                    std::size_t end = (j + 1 == c)
                                          ? pool.size()
                                          : static_cast<std::size_t>(std::llround(
                                                cum * static_cast<double>(pool.size())));
                    end = std::min(end, pool.size());
                    for (std::size_t i = start; i < end; ++i) shares[ids[j]].push_back(pool[i]);
                    start = std::max(start, end);
                }
            }
            break;
        }
        case partition_scheme::kind::shards: {
            if (scheme.shards_per_client < 1) {
                throw config_error("shards_per_client must be >= 1");
            }
            const std::size_t total = c * scheme.shards_per_client;
            if (n < total) {
                throw config_error("need at least one example per shard: " + std::to_string(n) +
                                   " examples for " + std::to_string(total) + " shards");
            }
            std::vector<std::size_t> idx = all_positions(n);
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (ds.labels[a] != ds.labels[b]) return ds.labels[a] < ds.labels[b];
                return a < b;
            });
            // the first n % total shards take one extra example
            const std::size_t base = n / total;
            const std::size_t extra = n % total;
            std::vector<std::size_t> offsets(total + 1, 0);
            for (std::size_t s = 0; s < total; ++s) {
                offsets[s + 1] = offsets[s] + base + (s < extra ? 1 : 0);
            }
            std::vector<std::size_t> shard_ids = all_positions(total);
            split_mix64 rng{sub_seed(seed, "shards")};
            fy_shuffle(shard_ids, rng);
            for (std::size_t j = 0; j < c; ++j) {
                for (std::uint32_t s = 0; s < scheme.shards_per_client; ++s) {
                    const std::size_t shard = shard_ids[j * scheme.shards_per_client + s];
                    for (std::size_t i = offsets[shard]; i < offsets[shard + 1]; ++i) {
                        shares[ids[j]].push_back(idx[i]);
                    }
                }
            }
            break;
        }
    }

    for (auto& [id, list] : shares) {
        (void)id;
        std::sort(list.begin(), list.end());
    }

    // deterministic repair: an empty share takes the last index of the
    // largest share (ties -> smallest client id)
    for (auto& [id, list] : shares) {
        while (list.empty()) {
            auto largest = shares.begin();
            for (auto it = shares.begin(); it != shares.end(); ++it) {
                if (it->second.size() > largest->second.size()) largest = it;
            }
            list.push_back(largest->second.back());
            largest->second.pop_back();
        }
        std::sort(list.begin(), list.end());
    }

    partition_spec spec;
    spec.assignment = std::move(shares);
    spec.scheme = scheme;
    spec.validate(n);
    return spec;
}

void trainer_config::validate() const {
    if (model == model_kind::mlp && hidden < 1) throw config_error("mlp needs hidden >= 1");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (!std::isfinite(lr) || lr <= 0.0) throw config_error("lr must be > 0");
    if (!std::isfinite(l2) || l2 < 0.0) throw config_error("l2 must be >= 0");
    if (!std::isfinite(augment_noise) || augment_noise < 0.0) {
        throw config_error("augment_noise must be >= 0");
    }
    if (early_stop_patience && *early_stop_patience < 1) {
        throw config_error("early_stop_patience must be >= 1 when set");
    }
}

param_vector init_model(model_kind kind, std::size_t d, std::uint32_t k, std::uint32_t hidden,
                        std::uint64_t seed) {
    if (d == 0 || k == 0) throw config_error("model needs d >= 1 and k >= 1");
    param_vector::map_type m;
    if (kind == model_kind::logreg) {
        m["weight"] = std::vector<double>(static_cast<std::size_t>(k) * d, 0.0);
        m["bias"] = std::vector<double>(k, 0.0);
    } else {
        if (hidden == 0) throw config_error("mlp needs hidden >= 1");
        split_mix64 rng{sub_seed(seed, "init")};
        auto uniform = [&](std::size_t count, double bound) {
            std::vector<double> v(count);
            for (double& x : v) x = (2.0 * rng.unit() - 1.0) * bound;
            return v;
        };
        m["w1"] = uniform(static_cast<std::size_t>(hidden) * d, 1.0 / std::sqrt(double(d)));
        m["b1"] = std::vector<double>(hidden, 0.0);
        m["w2"] = uniform(static_cast<std::size_t>(k) * hidden, 1.0 / std::sqrt(double(hidden)));
        m["b2"] = std::vector<double>(k, 0.0);
    }
    return param_vector(std::move(m));
}

double batch_loss(const param_vector& model, const dataset_view& shard,
                  const std::vector<std::size_t>& batch, double l2) {
    const arch_info a = infer_arch(model);
    require_fits(a, shard);
    std::vector<double> xs;
    std::vector<std::uint32_t> ys;
    fill_batch(shard, batch, xs, ys);
    return loss_and_grad(model, a, xs.data(), ys.data(), batch.size(), l2, nullptr);
}

param_vector batch_gradient(const param_vector& model, const dataset_view& shard,
                            const std::vector<std::size_t>& batch, double l2) {
    const arch_info a = infer_arch(model);
    require_fits(a, shard);
    std::vector<double> xs;
    std::vector<std::uint32_t> ys;
    fill_batch(shard, batch, xs, ys);
    param_vector::map_type grad;
    loss_and_grad(model, a, xs.data(), ys.data(), batch.size(), l2, &grad);
    return param_vector(std::move(grad));
}

train_result local_train(const param_vector& model_in, const dataset_view& shard,
                         const trainer_config& cfg, const train_anchor* anchor,
                         const train_correction* correction) {
    cfg.validate();
    if (shard.size() == 0) throw config_error("cannot train on an empty shard");
    const arch_info a = infer_arch(model_in);
    require_fits(a, shard);
    if (anchor) require_same_shape(model_in, *anchor->global);
    if (correction) {
        require_same_shape(model_in, *correction->client_variate);
        require_same_shape(model_in, *correction->server_variate);
    }

    // the held-out split is the tail of one seed-fixed shuffle; training
    // order is reshuffled every epoch on top of the same stream
    std::vector<std::size_t> pos = all_positions(shard.size());
    split_mix64 order_rng{sub_seed(cfg.seed, "order")};
    const bool early = cfg.early_stop_patience.has_value() && shard.size() >= 2;
    std::vector<std::size_t> val;
    if (early) {
        fy_shuffle(pos, order_rng);
        std::size_t val_count = std::max<std::size_t>(shard.size() / 10, 1);
        val_count = std::min(val_count, shard.size() - 1);
        val.assign(pos.end() - static_cast<std::ptrdiff_t>(val_count), pos.end());
        pos.resize(shard.size() - val_count);
    }

    std::mt19937_64 noise_rng(sub_seed(cfg.seed, "augment"));
    std::normal_distribution<double> noise(0.0, cfg.augment_noise > 0.0 ? cfg.augment_noise : 1.0);

    param_vector model = model_in;
    param_vector best_model = model_in;
    double best_val = std::numeric_limits<double>::infinity();
    std::uint32_t bad_epochs = 0;
    std::size_t steps = 0;
    std::vector<double> xs;
    std::vector<std::uint32_t> ys;
    std::vector<std::size_t> batch;

    try {
        for (std::uint32_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
            fy_shuffle(pos, order_rng);
            for (std::size_t start = 0; start < pos.size(); start += cfg.batch_size) {
                const std::size_t stop = std::min(pos.size(), start + cfg.batch_size);
                batch.assign(pos.begin() + static_cast<std::ptrdiff_t>(start),
                             pos.begin() + static_cast<std::ptrdiff_t>(stop));
                fill_batch(shard, batch, xs, ys);
                if (cfg.augment_noise > 0.0) {
                    for (double& x : xs) x += noise(noise_rng);
                }
                param_vector::map_type raw_grad;
                const double loss = loss_and_grad(model, a, xs.data(), ys.data(), batch.size(),
                                                  cfg.l2, &raw_grad);
                if (!std::isfinite(loss)) {
                    throw non_finite_loss("local loss diverged at step " + std::to_string(steps));
                }
                param_vector grad{std::move(raw_grad)};
                if (correction) {
                    grad = corrected_gradient(grad, *correction->client_variate,
                                              *correction->server_variate);
                }
                if (anchor) grad = proximal_gradient(grad, model, *anchor->global, anchor->mu);
                model = axpy(-cfg.lr, grad, model);
                ++steps;
            }
            if (early) {
                const double val_loss = batch_loss(model, shard, val, 0.0);
                if (!std::isfinite(val_loss)) {
                    throw non_finite_loss("validation loss diverged after epoch " +
                                          std::to_string(epoch));
                }
                if (val_loss < best_val) {
                    best_val = val_loss;
                    best_model = model;
                    bad_epochs = 0;
                } else if (++bad_epochs >= *cfg.early_stop_patience) {
                    break;
                }
            }
        }
    } catch (const non_finite_value& e) {
        throw non_finite_loss(std::string("training diverged: ") + e.what());
    }

    train_result out;
    out.model = early && std::isfinite(best_val) ? std::move(best_model) : std::move(model);
    out.num_samples = shard.size();
    out.steps = steps;
    out.loss = batch_loss(out.model, shard, all_positions(shard.size()), 0.0);
    return out;
}

eval_result evaluate(const param_vector& model, const dataset_view& ds) {
    const arch_info a = infer_arch(model);
    require_fits(a, ds);
    if (ds.size() == 0) throw config_error("cannot evaluate on an empty view");

    std::vector<double> xs;
    std::vector<std::uint32_t> ys;
    fill_batch(ds, all_positions(ds.size()), xs, ys);

    std::vector<double> hv(a.h), z(a.k);
    const double* w = nullptr;
    const double* b = nullptr;
    const double* w1 = nullptr;
    const double* b1 = nullptr;
    if (a.kind == model_kind::logreg) {
        w = model.at("weight").data();
        b = model.at("bias").data();
    } else {
        w1 = model.at("w1").data();
        b1 = model.at("b1").data();
        w = model.at("w2").data();
        b = model.at("b2").data();
    }

    std::size_t correct = 0;
    double loss = 0.0;
    for (std::size_t ex = 0; ex < ds.size(); ++ex) {
        const double* x = xs.data() + ex * a.d;
        if (a.kind == model_kind::logreg) {
            for (std::size_t c = 0; c < a.k; ++c) z[c] = b[c] + dot(w + c * a.d, x, a.d);
        } else {
            for (std::size_t j = 0; j < a.h; ++j) hv[j] = std::tanh(b1[j] + dot(w1 + j * a.d, x, a.d));
            for (std::size_t c = 0; c < a.k; ++c) z[c] = b[c] + dot(w + c * a.h, hv.data(), a.h);
        }
        const std::size_t pred =
            std::max_element(z.begin(), z.end()) - z.begin();  // lowest index wins ties
        if (pred == ys[ex]) ++correct;
        loss += log_sum_exp(z.data(), a.k) - z[ys[ex]];
    }
    eval_result r;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
    r.loss = loss / static_cast<double>(ds.size());
    return r;
}

eval_result evaluate(const param_vector& model, const dataset& ds) {
    return evaluate(model, dataset_view::whole(ds));
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

void write_f64(std::ofstream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | buf[i];
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_dataset(const dataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    write_u32(out, static_cast<std::uint32_t>(ds.size()));
    write_u32(out, static_cast<std::uint32_t>(ds.dim));
    write_u32(out, ds.num_classes);
    for (double v : ds.features) write_f64(out, v);
    for (std::uint32_t y : ds.labels) write_u32(out, y);
    if (!out) throw io_error("short write to '" + path + "'");
}

dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    dataset ds;
    const std::uint32_t n = read_u32(in);
    ds.dim = read_u32(in);
    ds.num_classes = read_u32(in);
    if (!in) throw io_error("'" + path + "' is truncated");
    ds.features.resize(static_cast<std::size_t>(n) * ds.dim);
    for (double& v : ds.features) v = read_f64(in);
    ds.labels.resize(n);
    for (std::uint32_t& y : ds.labels) y = read_u32(in);
    if (!in) throw io_error("'" + path + "' is truncated");
    ds.validate();
    return ds;
}

}  // namespace openfed
