#include "openfed/fedopt.hpp"

#include <algorithm>
#include <cmath>

namespace openfed {

aggregation_rule aggregation_rule::trimmed_mean(double ratio) {
    if (!(ratio >= 0.0 && ratio < 0.5)) {
        throw config_error("trim_ratio must lie in [0, 0.5)");
    }
    return {aggregation_kind::trimmed_mean, ratio};
}

void pipeline_config::validate() const {
    if (!(server_lr > 0.0)) throw config_error("server_lr must be > 0");
    if (!(penalty_mu >= 0.0)) throw config_error("penalty_mu must be >= 0");
    if (aggregation.kind == aggregation_kind::trimmed_mean &&
        !(aggregation.trim_ratio >= 0.0 && aggregation.trim_ratio < 0.5)) {
        throw config_error("trim_ratio must lie in [0, 0.5)");
    }
}

control_state control_state::zeros(const param_vector& shape,
                                   const std::vector<std::string>& clients) {
    control_state state;
    state.server_variate = zeros_like(shape);
    for (const std::string& id : clients) {
        state.client_variates.emplace(id, state.server_variate);
    }
    return state;
}

namespace {

void check_updates(const std::vector<weighted_model>& updates) {
    if (updates.empty()) throw empty_update_set("no updates to aggregate");
    for (const weighted_model& u : updates) {
        if (u.weight < 0.0 || !std::isfinite(u.weight)) {
            throw zero_total_weight("update weight must be finite and >= 0");
        }
        require_same_shape(updates.front().params, u.params);
    }
}

param_vector weighted_mean_of(const std::vector<weighted_model>& updates) {
    double total = 0.0;
    for (const weighted_model& u : updates) total += u.weight;
    if (!(total > 0.0)) throw zero_total_weight("sum of update weights is zero");
    if (updates.size() == 1) return updates.front().params;

    param_vector::map_type out;
    for (const auto& [name, first] : updates.front().params.entries()) {
        std::vector<double> acc(first.size(), 0.0);
        for (const weighted_model& u : updates) {
            const auto& values = u.params.at(name);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += u.weight * values[i];
        }
        for (double& v : acc) v /= total;
        out.emplace(name, std::move(acc));
    }
    return param_vector(std::move(out));
}

param_vector equal_mean_of(const std::vector<weighted_model>& updates) {
    const double n = static_cast<double>(updates.size());
    param_vector::map_type out;
    for (const auto& [name, first] : updates.front().params.entries()) {
        std::vector<double> acc(first.size(), 0.0);
        for (const weighted_model& u : updates) {
            const auto& values = u.params.at(name);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += values[i];
        }
        for (double& v : acc) v /= n;
        out.emplace(name, std::move(acc));
    }
    return param_vector(std::move(out));
}

// shared by median and trimmed mean: reduce the sorted per-coordinate column
template <typename Reduce>
param_vector per_coordinate(const std::vector<weighted_model>& updates, Reduce reduce) {
    const std::size_t n = updates.size();
    param_vector::map_type out;
    std::vector<double> column(n);
    for (const auto& [name, first] : updates.front().params.entries()) {
        std::vector<double> values(first.size());
        for (std::size_t i = 0; i < first.size(); ++i) {
            for (std::size_t u = 0; u < n; ++u) column[u] = updates[u].params.at(name)[i];
            std::sort(column.begin(), column.end());
            values[i] = reduce(column);
        }
        out.emplace(name, std::move(values));
    }
    return param_vector(std::move(out));
}

}  // namespace

param_vector aggregate(const aggregation_rule& rule, const std::vector<weighted_model>& updates) {
    check_updates(updates);

    switch (rule.kind) {
        case aggregation_kind::weighted_mean:
            return weighted_mean_of(updates);
        case aggregation_kind::equal_mean:
            return equal_mean_of(updates);
        case aggregation_kind::coordinate_median:
            return per_coordinate(updates, [](const std::vector<double>& sorted) {
                const std::size_t n = sorted.size();
                if (n % 2 == 1) return sorted[n / 2];
                return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
            });
        case aggregation_kind::trimmed_mean: {
            if (!(rule.trim_ratio >= 0.0 && rule.trim_ratio < 0.5)) {
                throw config_error("trim_ratio must lie in [0, 0.5)");
            }
            const std::size_t trim =
                static_cast<std::size_t>(rule.trim_ratio * static_cast<double>(updates.size()));
            return per_coordinate(updates, [trim](const std::vector<double>& sorted) {
                const std::size_t kept = sorted.size() - 2 * trim;
                double sum = 0.0;
                for (std::size_t u = trim; u < trim + kept; ++u) sum += sorted[u];
                return sum / static_cast<double>(kept);
            });
        }
    }
    throw error("unreachable aggregation kind");
}

param_vector apply_server_update(const param_vector& global, const param_vector& aggregated,
                                 const pipeline_config& cfg) {
    require_same_shape(global, aggregated);
    if (!cfg.accumulate_gradients) return aggregated;
    return axpy(cfg.server_lr, aggregated, global);
}

param_vector proximal_gradient(const param_vector& local_grad, const param_vector& local,
                               const param_vector& global, double mu) {
    require_same_shape(local_grad, local);
    require_same_shape(local, global);
    if (mu == 0.0) return local_grad;
    // grad + mu * (local - global)
    return axpy(mu, axpy(-1.0, global, local), local_grad);
}

param_vector corrected_gradient(const param_vector& local_grad, const param_vector& client_variate,
                                const param_vector& server_variate) {
    require_same_shape(local_grad, client_variate);
    require_same_shape(client_variate, server_variate);
    return axpy(1.0, server_variate, axpy(-1.0, client_variate, local_grad));
}

control_state sync_control_state(control_state state, const std::vector<std::string>& participating,
                                 const std::map<std::string, param_vector>& new_client_variates) {
    if (participating.empty()) return state;
    if (state.client_variates.empty()) throw unknown_client("control state has no clients");

    std::vector<std::string> participants(participating);
    std::sort(participants.begin(), participants.end());

    param_vector delta_sum = zeros_like(state.server_variate);
    for (const std::string& id : participants) {
        auto old_it = state.client_variates.find(id);
        if (old_it == state.client_variates.end()) {
            throw unknown_client("client '" + id + "' is not part of the control state");
        }
        auto new_it = new_client_variates.find(id);
        if (new_it == new_client_variates.end()) {
            throw unknown_client("no new variate supplied for participating client '" + id + "'");
        }
        require_same_shape(state.server_variate, new_it->second);
        delta_sum = axpy(1.0, axpy(-1.0, old_it->second, new_it->second), delta_sum);
    }

    const double share = static_cast<double>(participants.size()) /
                         static_cast<double>(state.client_variates.size());
    const double mean_scale = 1.0 / static_cast<double>(participants.size());
    state.server_variate = axpy(share * mean_scale, delta_sum, state.server_variate);
    for (const std::string& id : participants) {
        state.client_variates[id] = new_client_variates.at(id);
    }
    return state;
}

}  // namespace openfed
