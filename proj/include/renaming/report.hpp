#pragma once

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "renaming/adversary.hpp"
#include "renaming/checker.hpp"
#include "renaming/core.hpp"
#include "renaming/trace.hpp"

namespace renaming {

using nlohmann::json;

// ---- configuration ---------------------------------------------------

struct FaultSpec {
    int index = 0;          // engine index in [1, n]
    std::string strategy;   // one of adversary_catalog()
    json params = json::object();
    friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

struct RunConfig {
    int schema_version = 1;
    int n = 0;
    int t = 0;
    std::int64_t n_max = 1000;
    Algorithm algorithm = Algorithm::OpbrLog;
    std::vector<std::int64_t> correct_ids;  // empty = 10,20,...,10n filtered to correct indices
    std::vector<FaultSpec> faulty;
    std::uint64_t seed = 0;
    bool emit_trace = false;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// ---- JSON codecs -------------------------------------------------------

inline json to_json(const Rational& r) { return json{{"num", r.num_str()}, {"den", r.den_str()}}; }

inline Rational rational_from_json(const json& j) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    return Rational::from_strings(j.at("num").get<std::string>(), j.at("den").get<std::string>());
}

inline json to_json(const std::set<ProcId>& ids) {
    json a = json::array();
    for (ProcId id : ids) a.push_back(id.value);
    return a;
}

inline std::set<ProcId> id_set_from_json(const json& j) {
    std::set<ProcId> out;
    for (const json& v : j) out.insert(ProcId{v.get<std::int64_t>()});
    return out;
}

inline json to_json(const RanksMap& ranks) {
    json o = json::object();
    for (const auto& [id, r] : ranks) o[std::to_string(id.value)] = to_json(r);
    return o;
}

inline RanksMap ranks_from_json(const json& j) {
    RanksMap out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out.emplace(ProcId{std::stoll(it.key())}, rational_from_json(it.value()));
    return out;
}

inline json payload_to_json(const Msg& m) {
    struct Visitor {
        json operator()(const IdAnnounce& v) const { return json{{"id", v.id.value}}; }
        json operator()(const EchoSet& v) const { return json{{"ids", to_json(v.ids)}}; }
        json operator()(const ReadySet& v) const { return json{{"ids", to_json(v.ids)}}; }
        json operator()(const AaVote& v) const { return json{{"ranks", to_json(v.ranks)}}; }
        json operator()(const MultiEcho& v) const { return json{{"ids", to_json(v.ids)}}; }
    };
    return std::visit(Visitor{}, m);
}

inline Msg msg_from_json(const std::string& kind, const json& payload) {
    if (kind == "id") return IdAnnounce{ProcId{payload.at("id").get<std::int64_t>()}};
    if (kind == "echo") return EchoSet{id_set_from_json(payload.at("ids"))};
    if (kind == "ready") return ReadySet{id_set_from_json(payload.at("ids"))};
    if (kind == "aa") return AaVote{ranks_from_json(payload.at("ranks"))};
    if (kind == "multiecho") return MultiEcho{id_set_from_json(payload.at("ids"))};
    throw TraceError("unknown message kind: " + kind);
}

inline json to_json(const DeliveredMessage& m) {
    return json{{"round", m.round},       {"from_index", m.from_index},
                {"to_index", m.to_index}, {"link_label", m.link},
                {"msg_kind", msg_kind(m.msg)}, {"payload", payload_to_json(m.msg)}};
}

inline DeliveredMessage message_from_json(const json& j) {
    DeliveredMessage m;
    m.round = j.at("round").get<int>();
    m.from_index = j.at("from_index").get<int>();
    m.to_index = j.at("to_index").get<int>();
    m.link = j.at("link_label").get<int>();
    m.msg = msg_from_json(j.at("msg_kind").get<std::string>(), j.at("payload"));
    return m;
}

inline json to_json(const Snapshot& s) {
    if (const auto* o = std::get_if<OpbrSnapshot>(&s)) {
        return json{{"protocol", "opbr"},
                    {"working_ids", to_json(o->working_ids)},
                    {"timely", to_json(o->timely)},
                    {"accepted", to_json(o->accepted)},
                    {"ranks", to_json(o->ranks)}};
    }
    const auto& ts = std::get<TwoStepSnapshot>(s);
    json linkid = json::object();
    for (const auto& [link, id] : ts.linkid) linkid[std::to_string(link)] = id.value;
    json counter = json::object();
    for (const auto& [id, c] : ts.counter) counter[std::to_string(id.value)] = c;
    json newid = json::object();
    for (const auto& [id, v] : ts.newid) newid[std::to_string(id.value)] = v;
    json valid = json::array(), rejected = json::array();
    for (LinkLabel l : ts.valid_links) valid.push_back(l);
    for (LinkLabel l : ts.rejected_links) rejected.push_back(l);
    return json{{"protocol", "twostep"}, {"linkid", linkid},
                {"timely", to_json(ts.timely)}, {"accepted", to_json(ts.accepted)},
                {"counter", counter}, {"newid", newid},
                {"valid_links", valid}, {"rejected_links", rejected}};
}

inline Snapshot snapshot_from_json(const json& j) {
    if (j.at("protocol") == "opbr") {
        OpbrSnapshot s;
        s.working_ids = id_set_from_json(j.at("working_ids"));
        s.timely = id_set_from_json(j.at("timely"));
        s.accepted = id_set_from_json(j.at("accepted"));
        s.ranks = ranks_from_json(j.at("ranks"));
        return s;
    }
    TwoStepSnapshot s;
    for (auto it = j.at("linkid").begin(); it != j.at("linkid").end(); ++it)
        s.linkid.emplace(std::stoi(it.key()), ProcId{it.value().get<std::int64_t>()});
    s.timely = id_set_from_json(j.at("timely"));
    s.accepted = id_set_from_json(j.at("accepted"));
    for (auto it = j.at("counter").begin(); it != j.at("counter").end(); ++it)
        s.counter.emplace(ProcId{std::stoll(it.key())}, it.value().get<int>());
    for (auto it = j.at("newid").begin(); it != j.at("newid").end(); ++it)
        s.newid.emplace(ProcId{std::stoll(it.key())}, it.value().get<std::int64_t>());
    for (const json& l : j.at("valid_links")) s.valid_links.insert(l.get<int>());
    for (const json& l : j.at("rejected_links")) s.rejected_links.insert(l.get<int>());
    return s;
}

inline json to_json(const SnapshotRecord& r) {
    return json{{"round", r.round}, {"proc_index", r.proc_index},
                {"proc_id", r.proc_id.value}, {"state", to_json(r.state)}};
}

inline SnapshotRecord snapshot_record_from_json(const json& j) {
    SnapshotRecord r;
    r.round = j.at("round").get<int>();
    r.proc_index = j.at("proc_index").get<int>();
    r.proc_id = ProcId{j.at("proc_id").get<std::int64_t>()};
    r.state = snapshot_from_json(j.at("state"));
    return r;
}

inline json to_json(const TraceLog& t) {
    json msgs = json::array(), snaps = json::array();
    for (const DeliveredMessage& m : t.messages) msgs.push_back(to_json(m));
    for (const SnapshotRecord& s : t.snapshots) snaps.push_back(to_json(s));
    return json{{"messages", msgs}, {"snapshots", snaps}};
}

inline TraceLog trace_from_json(const json& j) {
    TraceLog t;
    for (const json& m : j.at("messages")) t.messages.push_back(message_from_json(m));
    for (const json& s : j.at("snapshots")) t.snapshots.push_back(snapshot_record_from_json(s));
    return t;
}

inline json to_json(const RunConfig& c) {
    json faulty = json::array();
    for (const FaultSpec& f : c.faulty)
        faulty.push_back(json{{"index", f.index}, {"strategy", f.strategy}, {"params", f.params}});
    return json{{"schema_version", c.schema_version},
                {"n", c.n},
                {"t", c.t},
                {"n_max", c.n_max},
                {"algorithm", algorithm_name(c.algorithm)},
                {"correct_ids", c.correct_ids},
                {"faulty", faulty},
                {"seed", c.seed},
                {"emit_trace", c.emit_trace}};
}

inline RunConfig config_from_json(const json& j) {
    RunConfig c;
    c.schema_version = j.value("schema_version", 1);
    c.n = j.at("n").get<int>();
    c.t = j.at("t").get<int>();
    c.n_max = j.value("n_max", static_cast<std::int64_t>(1000));
    c.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
    if (j.contains("correct_ids")) c.correct_ids = j.at("correct_ids").get<std::vector<std::int64_t>>();
    if (j.contains("faulty")) {
        for (const json& f : j.at("faulty")) {
            FaultSpec spec;
            spec.index = f.at("index").get<int>();
            spec.strategy = f.at("strategy").get<std::string>();
            spec.params = f.value("params", json::object());
            c.faulty.push_back(std::move(spec));
        }
    }
    c.seed = j.value("seed", static_cast<std::uint64_t>(0));
    c.emit_trace = j.value("emit_trace", false);
    return c;
}

inline StrategySpec strategy_spec_from(const FaultSpec& f) {
    StrategySpec s;
    s.kind = f.strategy;
    const json& p = f.params;
    s.from_round = p.value("from_round", 1);
    if (p.contains("pool")) s.pool = p.at("pool").get<std::vector<std::int64_t>>();
    if (p.contains("fake_ids")) s.fake_ids = p.at("fake_ids").get<std::vector<std::int64_t>>();
    if (p.contains("epsilon")) s.epsilon = rational_from_json(p.at("epsilon"));
    if (p.contains("targets")) s.targets = p.at("targets").get<std::vector<std::int64_t>>();
    s.claimed_id = p.value("claimed_id", static_cast<std::int64_t>(0));
    return s;
}

// ---- run report --------------------------------------------------------

struct PaperConstants {
    Rational delta_value;
    std::optional<int> sigma_t_paper;  // floor((N-2t)/t)+1; undefined at t = 0
    int c_sel = 0;
    int round_budget = 0;  // approximation steps (0 for twostep)
    friend bool operator==(const PaperConstants&, const PaperConstants&) = default;
};

struct RunReport {
    int schema_version = 1;
    RunConfig config;
    std::map<ProcId, std::int64_t> names;
    RunMetrics metrics;
    std::vector<CheckResult> checks;
    PaperConstants paper_constants;
    int total_rounds = 0;
    Rational max_final_spread_value;
    std::optional<TraceLog> trace;  // present iff config.emit_trace

    bool all_checks_pass() const { return all_pass(checks); }
    friend bool operator==(const RunReport&, const RunReport&) = default;
};

inline json to_json(const std::map<ProcId, std::int64_t>& names) {
    json o = json::object();
    for (const auto& [id, name] : names) o[std::to_string(id.value)] = name;
    return o;
}

inline std::map<ProcId, std::int64_t> names_from_json(const json& j) {
    std::map<ProcId, std::int64_t> out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out.emplace(ProcId{std::stoll(it.key())}, it.value().get<std::int64_t>());
    return out;
}

inline json to_json(const RunMetrics& m) {
    return json{{"rounds_executed", m.rounds_executed},
                {"messages_delivered", m.messages_delivered},
                {"max_message_ids", m.max_message_ids}};
}

inline RunMetrics metrics_from_json(const json& j) {
    RunMetrics m;
    m.rounds_executed = j.at("rounds_executed").get<std::int64_t>();
    m.messages_delivered = j.at("messages_delivered").get<std::int64_t>();
    m.max_message_ids = j.at("max_message_ids").get<std::int64_t>();
    return m;
}

inline json to_json(const CheckResult& c) {
    json o{{"name", c.name}, {"status", c.pass ? "pass" : "fail"}};
    if (!c.pass) o["witness"] = c.witness;
    return o;
}

inline CheckResult check_result_from_json(const json& j) {
    CheckResult c;
    c.name = j.at("name").get<std::string>();
    c.pass = j.at("status") == "pass";
    c.witness = j.value("witness", "");
    return c;
}

inline json to_json(const RunReport& r) {
    json checks = json::array();
    for (const CheckResult& c : r.checks) checks.push_back(to_json(c));
    json constants{{"delta", to_json(r.paper_constants.delta_value)},
                   {"sigma_t_paper", r.paper_constants.sigma_t_paper
                                         ? json(*r.paper_constants.sigma_t_paper)
                                         : json(nullptr)},
                   {"c_sel", r.paper_constants.c_sel},
                   {"round_budget", r.paper_constants.round_budget}};
    json out{{"schema_version", r.schema_version},
             {"config", to_json(r.config)},
             {"names", to_json(r.names)},
             {"metrics", to_json(r.metrics)},
             {"checks", checks},
             {"paper_constants", constants},
             {"total_rounds", r.total_rounds},
             {"max_final_spread", to_json(r.max_final_spread_value)},
             {"all_checks_pass", r.all_checks_pass()}};
    if (r.trace) out["trace"] = to_json(*r.trace);
    return out;
}

inline RunReport report_from_json(const json& j) {
    RunReport r;
    r.schema_version = j.at("schema_version").get<int>();
    r.config = config_from_json(j.at("config"));
    r.names = names_from_json(j.at("names"));
    r.metrics = metrics_from_json(j.at("metrics"));
    for (const json& c : j.at("checks")) r.checks.push_back(check_result_from_json(c));
    const json& pc = j.at("paper_constants");
    r.paper_constants.delta_value = rational_from_json(pc.at("delta"));
    if (!pc.at("sigma_t_paper").is_null())
        r.paper_constants.sigma_t_paper = pc.at("sigma_t_paper").get<int>();
    r.paper_constants.c_sel = pc.at("c_sel").get<int>();
    r.paper_constants.round_budget = pc.at("round_budget").get<int>();
    r.total_rounds = j.at("total_rounds").get<int>();
    r.max_final_spread_value = rational_from_json(j.at("max_final_spread"));
    if (j.contains("trace")) r.trace = trace_from_json(j.at("trace"));
    return r;
}

// ---- trace file (JSON Lines) --------------------------------------------

// One object per line: the config, then every delivered message, then the
// per-round snapshots, then metrics and names. Self-contained input for
// `check --trace`.
inline void write_trace_jsonl(std::ostream& os, const RunConfig& config, const TraceLog& trace,
                              const RunMetrics& metrics,
                              const std::map<ProcId, std::int64_t>& names) {
    json header = to_json(config);
    header["type"] = "config";
    os << header.dump() << "\n";
    for (const DeliveredMessage& m : trace.messages) {
        json o = to_json(m);
        o["type"] = "message";
        os << o.dump() << "\n";
    }
    for (const SnapshotRecord& s : trace.snapshots) {
        json o = to_json(s);
        o["type"] = "snapshot";
        os << o.dump() << "\n";
    }
    json mo = to_json(metrics);
    mo["type"] = "metrics";
    os << mo.dump() << "\n";
    os << json{{"type", "names"}, {"names", to_json(names)}}.dump() << "\n";
}

struct TraceFile {
    RunConfig config;
    TraceLog trace;
    RunMetrics metrics;
    std::map<ProcId, std::int64_t> names;
};

inline TraceFile read_trace_jsonl(std::istream& is) {
    TraceFile out;
    bool have_config = false;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        std::string type = j.value("type", "");
        if (type == "config") {
            out.config = config_from_json(j);
            have_config = true;
        } else if (type == "message") {
            out.trace.messages.push_back(message_from_json(j));
        } else if (type == "snapshot") {
            out.trace.snapshots.push_back(snapshot_record_from_json(j));
        } else if (type == "metrics") {
            out.metrics = metrics_from_json(j);
        } else if (type == "names") {
            out.names = names_from_json(j.at("names"));
        } else {
            throw TraceError("unknown trace line type: " + type);
        }
    }
    if (!have_config) throw TraceError("trace file has no config line");
    return out;
}

}  // namespace renaming
