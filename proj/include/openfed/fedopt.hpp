#pragma once

#include <map>
#include <string>
#include <vector>

#include "openfed/param.hpp"

namespace openfed {

enum class aggregation_kind { weighted_mean, equal_mean, coordinate_median, trimmed_mean };

struct aggregation_rule {
    aggregation_kind kind = aggregation_kind::weighted_mean;
    double trim_ratio = 0.0;  // trimmed_mean only, in [0, 0.5)

    static aggregation_rule weighted_mean() { return {aggregation_kind::weighted_mean, 0.0}; }
    static aggregation_rule equal_mean() { return {aggregation_kind::equal_mean, 0.0}; }
    static aggregation_rule coordinate_median() { return {aggregation_kind::coordinate_median, 0.0}; }
    static aggregation_rule trimmed_mean(double ratio);

    friend bool operator==(const aggregation_rule&, const aggregation_rule&) = default;
};

// Per-group configuration of the four federated-optimizer phases:
// parameter aggregation, pseudo-gradient accumulation, proximal penalty,
// and control-variate state synchronization.
struct pipeline_config {
    aggregation_rule aggregation;
    bool accumulate_gradients = false;  // updates are deltas applied with server_lr
    double penalty_mu = 0.0;            // proximal anchor coefficient, >= 0
    bool state_sync = false;            // control-variate correction on/off
    double server_lr = 1.0;             // > 0

    void validate() const;  // throws config_error
};

// Server- and per-client control variates for drift correction. All variates
// share the model's shapes; the server variate tracks the participation-
// weighted mean of client variates.
struct control_state {
    param_vector server_variate;
    std::map<std::string, param_vector> client_variates;

    static control_state zeros(const param_vector& shape, const std::vector<std::string>& clients);
};

// Combines updates under the given rule. Summation runs in the order given;
// callers that need reproducible sums pass updates sorted by sender id.
// Throws empty_update_set, shape_mismatch, zero_total_weight.
param_vector aggregate(const aggregation_rule& rule, const std::vector<weighted_model>& updates);

// Replacement mode returns the aggregate as the new global; accumulation
// mode treats the aggregate as a pseudo-gradient: global + server_lr * agg.
param_vector apply_server_update(const param_vector& global, const param_vector& aggregated,
                                 const pipeline_config& cfg);

// local_grad + mu * (local - global): anchors local training to the global model
param_vector proximal_gradient(const param_vector& local_grad, const param_vector& local,
                               const param_vector& global, double mu);

// local_grad - client_variate + server_variate
param_vector corrected_gradient(const param_vector& local_grad, const param_vector& client_variate,
                                const param_vector& server_variate);

// Replaces the participants' client variates and moves the server variate by
// (|participating| / |all clients|) * mean(new - old) over the participants.
control_state sync_control_state(control_state state, const std::vector<std::string>& participating,
                                 const std::map<std::string, param_vector>& new_client_variates);

}  // namespace openfed
