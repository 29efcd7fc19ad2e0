#include "openfed/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "openfed/log.hpp"
#include "openfed/rng.hpp"
#include "openfed/text.hpp"

namespace openfed {

namespace {

using steady_clock = std::chrono::steady_clock;

int ms_until(steady_clock::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - steady_clock::now());
    return left.count() > 0 ? static_cast<int>(left.count()) : 0;
}

std::string join_ids(const std::set<std::string>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ", ";
        out += id;
    }
    return out;
}

}  // namespace

const char* to_string(session_phase phase) {
    switch (phase) {
        case session_phase::idle: return "idle";
        case session_phase::distributing: return "distributing";
        case session_phase::local_training: return "local_training";
        case session_phase::collecting: return "collecting";
        case session_phase::aggregating: return "aggregating";
        case session_phase::synchronizing: return "synchronizing";
        case session_phase::done: return "done";
    }
    return "?";
}

void session_state::advance(session_phase next) {
    if (static_cast<int>(next) <= static_cast<int>(phase)) {
        throw runtime_abort(std::string("illegal phase move ") + to_string(phase) + " -> " +
                            to_string(next));
    }
    phase = next;
}

void session_state::record_arrival(const std::string& sender) {
    if (expected.count(sender) == 0) {
        throw runtime_abort("arrival from unexpected sender '" + sender + "'");
    }
    received.insert(sender);
}

void session_state::reset(std::uint64_t next_round) {
    if (phase != session_phase::done) {
        throw runtime_abort(std::string("reset out of phase ") + to_string(phase));
    }
    phase = session_phase::idle;
    round = next_round;
    expected.clear();
    received.clear();
}

std::uint32_t resolve_participant_count(double clients_per_round, std::size_t group_size) {
    if (group_size == 0) throw config_error("group has no members");
    if (!std::isfinite(clients_per_round) || clients_per_round <= 0.0) {
        throw config_error("clients_per_round must be positive, got " +
                           format_double(clients_per_round));
    }
    if (clients_per_round < 1.0) {
        auto n = static_cast<std::uint32_t>(std::llround(clients_per_round *
                                                         static_cast<double>(group_size)));
        n = std::max<std::uint32_t>(n, 1);
        return std::min<std::uint32_t>(n, static_cast<std::uint32_t>(group_size));
    }
    if (clients_per_round != std::floor(clients_per_round)) {
        throw config_error("clients_per_round above 1 must be a whole count, got " +
                           format_double(clients_per_round));
    }
    if (clients_per_round > static_cast<double>(group_size)) {
        throw config_error("clients_per_round " + format_double(clients_per_round) +
                           " exceeds group size " + std::to_string(group_size));
    }
    return static_cast<std::uint32_t>(clients_per_round);
}

void round_plan::validate(std::size_t group_size) const {
    std::uint32_t count = resolve_participant_count(clients_per_round, group_size);
    if (min_participants < 1) throw config_error("min_participants must be at least 1");
    if (min_participants > count) {
        throw config_error("min_participants " + std::to_string(min_participants) +
                           " exceeds the " + std::to_string(count) + " sampled per round");
    }
    if (straggler_timeout_ms < 0) throw config_error("straggler_timeout_ms must be >= 0");
}

std::vector<std::string> sample_participants(const std::vector<std::string>& members,
                                             const round_plan& plan, std::uint64_t round) {
    if (members.empty()) throw config_error("cannot sample from an empty member list");
    std::uint32_t k = resolve_participant_count(plan.clients_per_round, members.size());

    std::vector<std::string> pool(members);
    std::sort(pool.begin(), pool.end());
    if (k >= pool.size()) return pool;

    // hash seed and round separately so consecutive rounds draw unrelated samples
    split_mix64 rng{split_mix64{plan.sampling_seed}.next() ^ split_mix64{round}.next()};
    for (std::uint32_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

group_round_result run_group_round(const federated_group& group, const param_vector& global,
                                   const pipeline_config& cfg, const round_plan& plan,
                                   endpoint& hub_link, std::uint64_t round,
                                   const group_round_options& opts) {
    cfg.validate();
    plan.validate(group.members.size());
    if (cfg.state_sync && opts.control == nullptr) {
        throw config_error("state sync needs hub-side control state");
    }

    std::vector<std::string> sampled =
        opts.participants ? *opts.participants : sample_participants(group.members, plan, round);
    std::sort(sampled.begin(), sampled.end());

    static const std::map<std::string, weighted_model> no_injected;
    const auto& injected = opts.injected ? *opts.injected : no_injected;
    for (const auto& [id, wm] : injected) {
        (void)wm;
        if (!std::binary_search(sampled.begin(), sampled.end(), id)) {
            throw config_error("injected update from unsampled member '" + id + "'");
        }
    }

    session_state session;
    session.role = session_role::hub;
    session.round = round;
    session.deadline_ms = plan.straggler_timeout_ms;
    session.expected.insert(sampled.begin(), sampled.end());

    // distribute to every sampled member whose update is not produced in-process
    session.advance(session_phase::distributing);
    std::set<std::string> waiting;
    for (const auto& id : sampled) {
        if (injected.count(id)) continue;
        try {
            if (cfg.state_sync) {
                envelope cv;
                cv.kind = envelope_kind::control_variate;
                cv.round = round;
                cv.sender = hub_link.node();
                cv.group_id = group.group_id;
                cv.params = opts.control->server_variate;
                hub_link.send(id, cv);
            }
            envelope gm;
            gm.kind = envelope_kind::global_model;
            gm.round = round;
            gm.sender = hub_link.node();
            gm.group_id = group.group_id;
            gm.params = global;
            hub_link.send(id, gm);
            waiting.insert(id);
        } catch (const error& e) {
            log_warn("group %u round %llu: member %s unreachable: %s", group.group_id,
                     static_cast<unsigned long long>(round), id.c_str(), e.what());
        }
    }
    session.advance(session_phase::local_training);
    session.advance(session_phase::collecting);
    for (const auto& [id, wm] : injected) {
        (void)wm;
        session.record_arrival(id);
    }

    struct arrival {
        std::optional<param_vector> update;
        double weight = 1.0;
        std::optional<param_vector> variate;
    };
    std::map<std::string, arrival> replies;
    std::uint64_t stale = 0;
    auto complete = [&](const arrival& a) {
        return a.update.has_value() && (!cfg.state_sync || a.variate.has_value());
    };

    const auto deadline =
        steady_clock::now() + std::chrono::milliseconds(plan.straggler_timeout_ms);
    while (!waiting.empty()) {
        int remaining = ms_until(deadline);
        if (remaining == 0) break;
        std::optional<envelope> e = hub_link.recv(remaining);
        if (!e) break;
        if (e->round != round || e->group_id != group.group_id) {
            ++stale;
            continue;
        }
        switch (e->kind) {
            case envelope_kind::model_update: {
                if (waiting.count(e->sender) == 0 || !e->params) break;
                arrival& a = replies[e->sender];
                if (a.update) break;  // duplicate — first one wins
                a.update = std::move(*e->params);
                if (auto it = e->aux.find("weight"); it != e->aux.end()) {
                    a.weight = parse_double(it->second);
                }
                break;
            }
            case envelope_kind::control_variate: {
                if (waiting.count(e->sender) == 0 || !e->params) break;
                arrival& a = replies[e->sender];
                if (!a.variate) a.variate = std::move(*e->params);
                break;
            }
            case envelope_kind::abort: {
                if (waiting.erase(e->sender)) {
                    replies.erase(e->sender);
                    auto it = e->aux.find("error");
                    log_warn("group %u round %llu: member %s dropped out: %s", group.group_id,
                             static_cast<unsigned long long>(round), e->sender.c_str(),
                             it == e->aux.end() ? "(no reason)" : it->second.c_str());
                }
                break;
            }
            default:
                break;  // join/leave/meta chatter is not round traffic
        }
        if (auto it = replies.find(e->sender); it != replies.end() && complete(it->second)) {
            session.record_arrival(e->sender);
            waiting.erase(e->sender);
        }
    }

    // sender-id order (map iteration) keeps the aggregate sum reproducible
    std::map<std::string, weighted_model> updates;
    std::map<std::string, param_vector> new_variates;
    for (auto& [id, a] : replies) {
        if (!complete(a)) continue;
        updates.emplace(id, weighted_model{std::move(*a.update), a.weight, round});
        if (a.variate) new_variates.emplace(id, std::move(*a.variate));
    }
    for (const auto& [id, wm] : injected) updates.emplace(id, wm);

    std::vector<std::string> participants;
    participants.reserve(updates.size());
    for (const auto& [id, wm] : updates) {
        (void)wm;
        participants.push_back(id);
    }
    std::vector<std::string> stragglers;
    std::set_difference(sampled.begin(), sampled.end(), participants.begin(), participants.end(),
                        std::back_inserter(stragglers));

    if (updates.size() < plan.min_participants) {
        throw insufficient_participants(
            "group " + std::to_string(group.group_id) + " round " + std::to_string(round) +
                ": only " + std::to_string(updates.size()) + " of the required " +
                std::to_string(plan.min_participants) + " updates arrived",
            group.group_id, participants);
    }

    double total_weight = 0.0;
    std::vector<weighted_model> update_vec;
    update_vec.reserve(updates.size());
    for (auto& [id, wm] : updates) {
        (void)id;
        total_weight += wm.weight;
        update_vec.push_back(std::move(wm));
    }

    session.advance(session_phase::aggregating);
    const auto agg_start = steady_clock::now();
    param_vector agg = aggregate(cfg.aggregation, update_vec);
    param_vector next = apply_server_update(global, agg, cfg);
    const double agg_ms =
        std::chrono::duration<double, std::milli>(steady_clock::now() - agg_start).count();

    if (cfg.state_sync) {
        session.advance(session_phase::synchronizing);
        std::vector<std::string> sync_ids;
        sync_ids.reserve(new_variates.size());
        for (const auto& [id, v] : new_variates) {
            (void)v;
            sync_ids.push_back(id);
        }
        *opts.control = sync_control_state(std::move(*opts.control), sync_ids, new_variates);
    }
    session.advance(session_phase::done);

    group_round_result out;
    out.report.round = round;
    out.report.group_id = group.group_id;
    out.report.participants = std::move(participants);
    out.report.stragglers = std::move(stragglers);
    out.report.agg_ms = agg_ms;
    out.report.global_l2_delta = l2_distance(next, global);
    out.report.stale_dropped = stale;
    out.global = std::move(next);
    out.aggregate = std::move(agg);
    out.total_weight = total_weight;
    return out;
}

hierarchy_result run_hierarchy(const std::vector<federated_group>& groups,
                               const param_vector& initial_global, std::uint64_t rounds,
                               const pipeline_config& cfg, const round_plan& plan,
                               const std::map<std::string, std::shared_ptr<endpoint>>& hub_links,
                               control_state* control, const report_sink& on_report) {
    if (groups.empty()) throw config_error("no groups to run");
    cfg.validate();
    if (cfg.state_sync && groups.size() > 1) {
        throw config_error("variate sync is only supported in a single-group federation");
    }

    std::map<std::string, std::size_t> hub_group;
    std::map<std::string, std::size_t> member_owner;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const federated_group& g = groups[i];
        if (g.gossip) {
            throw config_error("hierarchical execution needs leader groups, not neighborhoods");
        }
        if (!hub_group.emplace(g.hub, i).second) {
            throw config_error("hub '" + g.hub + "' leads more than one group");
        }
        if (hub_links.count(g.hub) == 0) {
            throw config_error("no endpoint for hub '" + g.hub + "'");
        }
        for (const auto& m : g.members) {
            if (!member_owner.emplace(m, i).second) {
                throw config_error("node '" + m +
                                   "' follows more than one leader; hierarchical execution "
                                   "requires a tree");
            }
        }
    }
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (member_owner.count(groups[i].hub) == 0) roots.push_back(i);
    }
    if (roots.size() != 1) {
        throw config_error("hierarchy requires exactly one root group, found " +
                           std::to_string(roots.size()));
    }
    const std::size_t root = roots.front();

    // bottom-up execution order; reversed for the top-down activation pass
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (groups[a].depth != groups[b].depth) return groups[a].depth > groups[b].depth;
        return groups[a].group_id < groups[b].group_id;
    });

    // the root samples with the plan's own seed (a flat federation stays
    // byte-identical to looping run_group_round); inner groups decorrelate
    auto plan_for = [&](std::size_t i) {
        round_plan p = plan;
        if (i != root) {
            p.sampling_seed = sub_seed(plan.sampling_seed, static_cast<std::uint64_t>(groups[i].group_id));
        }
        return p;
    };

    hierarchy_result out;
    out.global = initial_global;
    for (std::uint64_t r = 0; r < rounds; ++r) {
        std::vector<char> active(groups.size(), 0);
        active[root] = 1;
        std::vector<std::vector<std::string>> sampled(groups.size());
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const std::size_t i = *it;
            if (!active[i]) continue;
            sampled[i] = sample_participants(groups[i].members, plan_for(i), r);
            for (const auto& id : sampled[i]) {
                if (auto hit = hub_group.find(id); hit != hub_group.end()) active[hit->second] = 1;
            }
        }

        std::vector<std::map<std::string, weighted_model>> injected(groups.size());
        param_vector next = out.global;
        for (std::size_t i : order) {
            if (!active[i]) continue;
            group_round_options o;
            o.participants = &sampled[i];
            o.injected = &injected[i];
            o.control = (i == root) ? control : nullptr;
            group_round_result res = run_group_round(groups[i], out.global, cfg, plan_for(i),
                                                     *hub_links.at(groups[i].hub), r, o);
            if (on_report) on_report(res.report);
            out.reports.push_back(std::move(res.report));
            if (i == root) {
                next = std::move(res.global);
            } else {
                std::size_t parent = member_owner.at(groups[i].hub);
                injected[parent].emplace(
                    groups[i].hub, weighted_model{std::move(res.aggregate), res.total_weight, r});
            }
        }
        out.global = std::move(next);
    }
    return out;
}

std::map<std::string, param_vector> run_decentralized_round(
    const std::vector<federated_group>& groups, const std::map<std::string, param_vector>& models,
    const pipeline_config& cfg, const std::map<std::string, std::shared_ptr<endpoint>>& links,
    std::uint64_t round) {
    cfg.validate();
    std::map<std::string, const federated_group*> node_groups;
    for (const federated_group& g : groups) {
        if (!g.gossip) {
            throw config_error("decentralized execution needs neighborhood groups");
        }
        node_groups[g.hub] = &g;
        if (models.count(g.hub) == 0) throw config_error("node '" + g.hub + "' has no model");
        if (links.count(g.hub) == 0) throw config_error("no endpoint for node '" + g.hub + "'");
        for (const auto& m : g.members) {
            if (models.count(m) == 0) throw config_error("node '" + m + "' has no model");
        }
    }

    // publish phase: every node hands its round-start model to its neighbours
    for (const auto& [id, g] : node_groups) {
        envelope e;
        e.kind = envelope_kind::model_update;
        e.round = round;
        e.sender = id;
        e.group_id = g->group_id;
        e.params = models.at(id);
        for (const auto& to : g->members) links.at(id)->send(to, e);
    }

    // mix phase; nodes outside every neighbourhood keep their model
    std::map<std::string, param_vector> next(models);
    for (const auto& [id, g] : node_groups) {
        std::map<std::string, param_vector> arrived;
        std::set<std::string> waiting(g->members.begin(), g->members.end());
        const auto deadline = steady_clock::now() + std::chrono::milliseconds(10000);
        while (!waiting.empty()) {
            std::optional<envelope> e = links.at(id)->recv(ms_until(deadline));
            if (!e) {
                throw timeout_error("node '" + id + "': no model from " + join_ids(waiting));
            }
            if (e->round != round || e->kind != envelope_kind::model_update) continue;
            if (waiting.count(e->sender) == 0 || !e->params) continue;
            arrived.emplace(e->sender, std::move(*e->params));
            waiting.erase(e->sender);
        }
        arrived.emplace(id, models.at(id));
        std::vector<weighted_model> batch;
        batch.reserve(arrived.size());
        for (auto& [sid, p] : arrived) {
            (void)sid;
            batch.push_back(weighted_model{std::move(p), 1.0, round});
        }
        next[id] = aggregate(aggregation_rule::equal_mean(), batch);
    }
    return next;
}

std::uint64_t run_member_session(endpoint& link, const std::string& hub_id,
                                 const member_train_fn& train, const member_options& opts) {
    if (opts.send_join) {
        envelope hello;
        hello.kind = envelope_kind::join;
        hello.sender = link.node();
        link.send(hub_id, hello);
    }

    std::optional<param_vector> server_variate;
    std::optional<param_vector> client_variate;
    std::uint64_t rounds_served = 0;
    for (;;) {
        std::optional<envelope> e = link.recv(opts.idle_timeout_ms);
        if (!e) {
            log_info("member %s: hub silent for %d ms, leaving", link.node().c_str(),
                     opts.idle_timeout_ms);
            return rounds_served;
        }
        switch (e->kind) {
            case envelope_kind::control_variate:
                if (e->params) server_variate = std::move(*e->params);
                break;
            case envelope_kind::global_model: {
                if (!e->params) break;
                const bool sync = server_variate.has_value();
                if (sync && !client_variate) client_variate = zeros_like(*e->params);
                member_context ctx;
                ctx.member_id = link.node();
                ctx.round = e->round;
                ctx.global = &*e->params;
                ctx.server_variate = sync ? &*server_variate : nullptr;
                ctx.client_variate = sync ? &*client_variate : nullptr;
                member_reply reply;
                try {
                    reply = train(ctx);
                } catch (const std::exception& ex) {
                    envelope ab;
                    ab.kind = envelope_kind::abort;
                    ab.round = e->round;
                    ab.sender = link.node();
                    ab.group_id = e->group_id;
                    ab.aux["error"] = ex.what();
                    try {
                        link.send(hub_id, ab);
                    } catch (const error&) {
                    }
                    throw;
                }

                envelope up;
                up.kind = envelope_kind::model_update;
                up.round = e->round;
                up.sender = link.node();
                up.group_id = e->group_id;
                up.params = std::move(reply.update);
                up.aux["weight"] = format_double(reply.weight);
                link.send(hub_id, up);

                if (sync) {
                    if (reply.client_variate) client_variate = std::move(*reply.client_variate);
                    envelope cv;
                    cv.kind = envelope_kind::control_variate;
                    cv.round = e->round;
                    cv.sender = link.node();
                    cv.group_id = e->group_id;
                    cv.params = *client_variate;
                    link.send(hub_id, cv);
                }
                ++rounds_served;
                break;
            }
            case envelope_kind::leave:
            case envelope_kind::abort:
                return rounds_served;
            default:
                break;
        }
    }
}

void wait_for_joins(endpoint& hub, const std::vector<std::string>& members, int timeout_ms) {
    std::set<std::string> waiting(members.begin(), members.end());
    const auto deadline = steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (!waiting.empty()) {
        int remaining = ms_until(deadline);
        if (remaining == 0) break;
        std::optional<envelope> e = hub.recv(remaining);
        if (!e) break;
        if (e->kind == envelope_kind::join) waiting.erase(e->sender);
    }
    if (!waiting.empty()) {
        throw timeout_error("no join from: " + join_ids(waiting));
    }
}

std::size_t broadcast(endpoint& from, const std::vector<std::string>& to, const envelope& e) {
    std::size_t delivered = 0;
    for (const auto& id : to) {
        try {
            from.send(id, e);
            ++delivered;
        } catch (const error& ex) {
            log_info("broadcast to %s failed: %s", id.c_str(), ex.what());
        }
    }
    return delivered;
}

}  // namespace openfed
