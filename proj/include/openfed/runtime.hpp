#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "openfed/fedopt.hpp"
#include "openfed/topology.hpp"
#include "openfed/transport.hpp"

namespace openfed {

enum class session_role { hub, member };

enum class session_phase {
    idle,
    distributing,
    local_training,
    collecting,
    aggregating,
    synchronizing,
    done,
};

const char* to_string(session_phase phase);

// Tracks one node's progress through a round. Phases only move forward
// (skipping is fine — a hub has no local-training work, a member nothing to
// aggregate); moving backwards or repeating a phase is a logic error.
struct session_state {
    session_role role = session_role::member;
    session_phase phase = session_phase::idle;
    std::uint64_t round = 0;
    std::set<std::string> expected;
    std::set<std::string> received;
    int deadline_ms = 0;

    // throws runtime_abort on a non-forward move
    void advance(session_phase next);
    // throws runtime_abort when the sender was never expected
    void record_arrival(const std::string& sender);
    bool all_arrived() const { return received == expected; }
    // done -> idle, ready for the next round
    void reset(std::uint64_t next_round);
};

// Per-round execution policy: how many members train each round, how long
// stragglers get, and when a round is too empty to commit.
struct round_plan {
    std::uint64_t total_rounds = 1;
    double clients_per_round = 1.0;  // in (0,1): fraction of the group; >= 1: absolute count
    std::uint64_t sampling_seed = 0;
    int straggler_timeout_ms = 30000;
    std::uint32_t min_participants = 1;

    void validate(std::size_t group_size) const;  // throws config_error
};

// Resolves the fraction-or-count field against a concrete group size.
// Throws config_error when the value cannot name 1..group_size members.
std::uint32_t resolve_participant_count(double clients_per_round, std::size_t group_size);

// Uniform sample without replacement, deterministic in (sampling_seed, round),
// returned sorted by id.
std::vector<std::string> sample_participants(const std::vector<std::string>& members,
                                             const round_plan& plan, std::uint64_t round);

// One line of the round log.
struct round_report {
    std::uint64_t round = 0;
    std::uint32_t group_id = 0;
    std::vector<std::string> participants;  // arrived in time, sorted
    std::vector<std::string> stragglers;    // sampled but missing at the deadline, sorted
    double agg_ms = 0.0;
    double global_l2_delta = 0.0;
    std::uint64_t stale_dropped = 0;  // envelopes from other rounds consumed and discarded
};

struct group_round_result {
    param_vector global;     // after the server update
    param_vector aggregate;  // the combined update itself; this is what a mid-level hub forwards
    double total_weight = 0.0;
    round_report report;
};

struct group_round_options {
    // Sampled externally (hierarchical activation); bypasses internal sampling.
    const std::vector<std::string>* participants = nullptr;
    // Updates produced in-process (child-hub aggregates), keyed by member id.
    // These members are not contacted over the transport and cannot straggle.
    const std::map<std::string, weighted_model>* injected = nullptr;
    // Hub-side variate state; required when cfg.state_sync is on.
    control_state* control = nullptr;
};

// Runs one round from the hub's seat: distribute the global model to the
// sampled members, collect their updates until all arrive or the straggler
// deadline passes, aggregate in sender-id order, apply the server update,
// and synchronize variate state when enabled.
// Throws insufficient_participants when fewer than plan.min_participants
// updates arrive; the returned global is never partially updated.
group_round_result run_group_round(const federated_group& group, const param_vector& global,
                                   const pipeline_config& cfg, const round_plan& plan,
                                   endpoint& hub_link, std::uint64_t round,
                                   const group_round_options& opts = {});

using report_sink = std::function<void(const round_report&)>;

struct hierarchy_result {
    param_vector global;
    std::vector<round_report> reports;  // every executed group round, in execution order
};

// Drives a depth-sorted tree of groups for the given number of rounds.
// Activation flows top-down (a subtree trains only when its hub was sampled
// by its parent), execution bottom-up: leaf-depth groups aggregate first and
// each mid-level hub forwards its group aggregate upward weighted by the
// group's total weight, so the root sees the same mass a flat federation
// would. Only the root applies the server update and owns variate state.
// Round aborts (insufficient_participants) propagate to the caller with the
// global model unchanged.
hierarchy_result run_hierarchy(const std::vector<federated_group>& groups,
                               const param_vector& initial_global, std::uint64_t rounds,
                               const pipeline_config& cfg, const round_plan& plan,
                               const std::map<std::string, std::shared_ptr<endpoint>>& hub_links,
                               control_state* control = nullptr, const report_sink& on_report = {});

// One synchronous gossip step over neighborhood groups: every node's next
// model is the plain mean of its own and all neighbours' round-start models.
// Nodes without neighbours keep their model. Throws shape_mismatch on
// incompatible models and timeout_error when a neighbour's update never
// arrives.
std::map<std::string, param_vector> run_decentralized_round(
    const std::vector<federated_group>& groups, const std::map<std::string, param_vector>& models,
    const pipeline_config& cfg, const std::map<std::string, std::shared_ptr<endpoint>>& links,
    std::uint64_t round);

// ---------------------------------------------------------------------------
// member side

struct member_reply {
    param_vector update;
    double weight = 1.0;
    // New local variate when drift correction ran; echoed back to the hub.
    std::optional<param_vector> client_variate;
};

struct member_context {
    std::string member_id;
    std::uint64_t round = 0;
    const param_vector* global = nullptr;
    const param_vector* server_variate = nullptr;  // non-null when drift correction is active
    const param_vector* client_variate = nullptr;  // current local variate, same condition
};

using member_train_fn = std::function<member_reply(const member_context&)>;

struct member_options {
    int idle_timeout_ms = 120000;  // give up when the hub goes silent this long
    bool send_join = true;
};

// Runs the member side of a federation: announces itself, then serves
// global-model rounds until the hub says leave (or aborts, or goes silent).
// The local control variate lives here across rounds; the training callback
// only computes. Returns the number of rounds served. A training failure is
// reported to the hub as an abort envelope, then rethrown.
std::uint64_t run_member_session(endpoint& link, const std::string& hub_id,
                                 const member_train_fn& train, const member_options& opts = {});

// Collects a join announcement from every listed member; duplicates and
// unrelated envelopes are ignored. Throws timeout_error naming the missing.
void wait_for_joins(endpoint& hub, const std::vector<std::string>& members, int timeout_ms);

// Best-effort fan-out, e.g. the final leave. Transport errors are swallowed
// so one dead peer cannot block shutdown; returns how many sends succeeded.
std::size_t broadcast(endpoint& from, const std::vector<std::string>& to, const envelope& e);

}  // namespace openfed
