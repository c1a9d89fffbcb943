#include "metaguard/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "metaguard/canon.hpp"
#include "metaguard/error.hpp"

namespace mg {

using nlohmann::json;

double coarsen(double value, double granularity) {
    return std::round(value / granularity) * granularity;
}

std::string_view grant_name(Grant g) {
    switch (g) {
    case Grant::Allow: return "allow";
    case Grant::Deny: return "deny";
    case Grant::Ask: return "ask";
    }
    return "deny";
}

std::optional<Grant> parse_grant(std::string_view name) {
    if (name == "allow") return Grant::Allow;
    if (name == "deny") return Grant::Deny;
    if (name == "ask") return Grant::Ask;
    return std::nullopt;
}

ConsentRecord allow_all_consent(std::string subject_id) {
    ConsentRecord c;
    c.subject_id = std::move(subject_id);
    c.grants.fill(Grant::Allow);
    return c;
}

ConsentRecord deny_all_consent(std::string subject_id) {
    ConsentRecord c;
    c.subject_id = std::move(subject_id);
    c.grants.fill(Grant::Deny);
    return c;
}

void append_consent_entry(std::ostream& out, const ConsentRecord& c, ChannelGroup group) {
    canon::ObjectWriter w;
    w.field("grant", std::string(grant_name(c.grant_for(group))));
    w.field("group", std::string(group_name(group)));
    w.field("kind", "consent");
    w.field("revocable", c.revocable);
    w.field("subject", c.subject_id);
    w.field("t", c.timestamp);
    out << w.finish() << '\n';
}

ConsentRecord load_consent_journal(std::istream& in) {
    ConsentRecord c; // all groups start Deny
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        auto bad = [&](const std::string& msg) -> Error {
            return Error(ErrorCode::MalformedRecord,
                         "consent journal line " + std::to_string(line_no) + ": " + msg);
        };
        if (j.is_discarded() || !j.is_object()) throw bad("not a JSON object");
        if (j.value("kind", "") != "consent") throw bad("missing kind:consent");
        auto group = parse_group(j.value("group", ""));
        if (!group) throw bad("unknown group '" + j.value("group", "") + "'");
        auto grant = parse_grant(j.value("grant", ""));
        if (!grant) throw bad("unknown grant '" + j.value("grant", "") + "'");
        c.set(*group, *grant);
        if (j.contains("subject") && j["subject"].is_string())
            c.subject_id = j["subject"].get<std::string>();
        if (j.contains("t") && j["t"].is_number()) c.timestamp = j["t"].get<double>();
        if (j.contains("revocable") && j["revocable"].is_boolean())
            c.revocable = j["revocable"].get<bool>();
    }
    return c;
}

Grant consent_prompt(ConsentRecord& consent, ChannelGroup group, const PromptSource& source) {
    if (!source)
        throw Error(ErrorCode::PromptUnavailable,
                    "no interactive answer source for group '" +
                        std::string(group_name(group)) + "'");
    std::optional<Grant> answer = source(group);
    if (!answer)
        throw Error(ErrorCode::PromptUnavailable,
                    "prompt for group '" + std::string(group_name(group)) +
                        "' returned no answer");
    consent.set(group, *answer);
    return *answer;
}

std::optional<FilterPolicy> named_policy(std::string_view name) {
    if (name == "suppress-all") {
        FilterPolicy p;
        p.default_action = ActionKind::Suppress;
        return p;
    }
    if (name == "pass-all") {
        FilterPolicy p;
        p.default_action = ActionKind::PassThrough;
        return p;
    }
    return std::nullopt;
}

namespace {

void check_policy(const FilterPolicy& p) {
    if (p.default_action == ActionKind::Coarsen)
        throw Error(ErrorCode::MalformedRecord, "default_action cannot be coarsen");
    for (const auto& [ch, act] : p.channel_rules) {
        if (ch.idx >= registry_size())
            throw Error(ErrorCode::UnknownChannel, "channel rule index out of range");
        if (act.kind == ActionKind::Coarsen && !(act.granularity > 0.0))
            throw Error(ErrorCode::MalformedRecord,
                        "coarsen granularity must be positive for channel '" +
                            std::string(channel_name(ch)) + "'");
    }
}

std::string action_json(const ActionSpec& a) {
    switch (a.kind) {
    case ActionKind::Suppress: return "\"suppress\"";
    case ActionKind::PassThrough: return "\"pass\"";
    case ActionKind::Coarsen: return "{\"coarsen\":" + canon::num(a.granularity) + '}';
    }
    return "\"suppress\"";
}

ActionSpec action_from_json(const json& j, const std::string& where) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "suppress") return {ActionKind::Suppress, 0.0};
        if (s == "pass") return {ActionKind::PassThrough, 0.0};
        throw Error(ErrorCode::MalformedRecord, where + ": unknown action '" + s + "'");
    }
    if (j.is_object() && j.size() == 1 && j.contains("coarsen") &&
        j["coarsen"].is_number()) {
        double g = j["coarsen"].get<double>();
        if (!(g > 0.0))
            throw Error(ErrorCode::MalformedRecord, where + ": coarsen step must be positive");
        return {ActionKind::Coarsen, g};
    }
    throw Error(ErrorCode::MalformedRecord, where + ": bad action value");
}

} // namespace

std::string serialize_policy(const FilterPolicy& p) {
    check_policy(p);
    canon::ObjectWriter w;
    std::string rules = "{";
    {
        auto sorted = p.channel_rules;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        bool first = true;
        for (const auto& [ch, act] : sorted) {
            if (!first) rules += ',';
            first = false;
            rules += canon::quote(std::string(channel_name(ch)));
            rules += ':';
            rules += action_json(act);
        }
    }
    rules += '}';
    w.raw("channel_rules", rules);
    w.field("default_action",
            p.default_action == ActionKind::PassThrough ? "pass" : "suppress");
    w.field("export_predicted_state", p.export_predicted_state);
    std::string states = "{";
    {
        auto sorted = p.state_rules;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        bool first = true;
        for (const auto& [label, withhold] : sorted) {
            if (!first) states += ',';
            first = false;
            states += canon::quote(label);
            states += withhold ? ":\"withhold\"" : ":\"pass\"";
        }
    }
    states += '}';
    w.raw("state_rules", states);
    w.field("v", REGISTRY_VERSION);
    return w.finish();
}

FilterPolicy parse_policy_string(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::MalformedRecord, "policy is not a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "channel_rules" && k != "default_action" && k != "export_predicted_state" &&
            k != "state_rules" && k != "v")
            throw Error(ErrorCode::MalformedRecord, "unknown policy key '" + k + "'");
    }
    if (j.contains("v") &&
        (!j["v"].is_number_integer() || j["v"].get<int>() != REGISTRY_VERSION))
        throw Error(ErrorCode::UnsupportedVersion, "policy format version " + j["v"].dump());
    FilterPolicy p;
    if (j.contains("default_action")) {
        std::string d = j["default_action"].is_string() ? j["default_action"].get<std::string>()
                                                        : std::string();
        if (d == "suppress")
            p.default_action = ActionKind::Suppress;
        else if (d == "pass")
            p.default_action = ActionKind::PassThrough;
        else
            throw Error(ErrorCode::MalformedRecord, "default_action must be suppress or pass");
    }
    if (j.contains("export_predicted_state")) {
        if (!j["export_predicted_state"].is_boolean())
            throw Error(ErrorCode::MalformedRecord, "export_predicted_state must be boolean");
        p.export_predicted_state = j["export_predicted_state"].get<bool>();
    }
    if (j.contains("channel_rules")) {
        const json& rules = j["channel_rules"];
        if (!rules.is_object())
            throw Error(ErrorCode::MalformedRecord, "channel_rules must be an object");
        for (auto it = rules.begin(); it != rules.end(); ++it) {
            auto ch = find_channel(it.key());
            if (!ch)
                throw Error(ErrorCode::UnknownChannel,
                            "policy rule for unknown channel '" + it.key() + "'");
            p.channel_rules.emplace_back(*ch,
                                         action_from_json(it.value(), "channel " + it.key()));
        }
        std::sort(p.channel_rules.begin(), p.channel_rules.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    if (j.contains("state_rules")) {
        const json& rules = j["state_rules"];
        if (!rules.is_object())
            throw Error(ErrorCode::MalformedRecord, "state_rules must be an object");
        for (auto it = rules.begin(); it != rules.end(); ++it) {
            std::string v = it.value().is_string() ? it.value().get<std::string>()
                                                   : std::string();
            if (v != "withhold" && v != "pass")
                throw Error(ErrorCode::MalformedRecord,
                            "state rule for '" + it.key() + "' must be withhold or pass");
            p.state_rules.emplace_back(it.key(), v == "withhold");
        }
        std::sort(p.state_rules.begin(), p.state_rules.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    check_policy(p);
    return p;
}

FilterPolicy parse_policy(std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_policy_string(text);
}

FilterPolicy load_policy(const std::string& path_or_name) {
    if (auto p = named_policy(path_or_name)) return *p;
    std::ifstream in(path_or_name);
    if (!in)
        throw Error(ErrorCode::IoFailure, "cannot open policy '" + path_or_name + "'");
    return parse_policy(in);
}

std::string policy_hash(const FilterPolicy& p) {
    std::string canonical = serialize_policy(p);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void check_policy_against_model(const FilterPolicy& p, const ClassifierModel& m) {
    for (const auto& [label, withhold] : p.state_rules) {
        (void)withhold;
        bool known = std::find(m.config.label_set.begin(), m.config.label_set.end(), label) !=
                     m.config.label_set.end();
        if (!known)
            throw Error(ErrorCode::PolicyModelMismatch,
                        "state rule for '" + label + "' has no matching model label");
    }
}

ActionSpec resolve_action(const FilterPolicy& policy, const ConsentRecord& consent,
                          ChannelId ch) {
    if (consent.grant_for(channel_group(ch)) != Grant::Allow)
        return {ActionKind::Suppress, 0.0};
    auto it = std::lower_bound(policy.channel_rules.begin(), policy.channel_rules.end(), ch,
                               [](const auto& rule, ChannelId id) { return rule.first < id; });
    if (it != policy.channel_rules.end() && it->first == ch) return it->second;
    return {policy.default_action == ActionKind::PassThrough ? ActionKind::PassThrough
                                                             : ActionKind::Suppress,
            0.0};
}

std::optional<ExportRecord> filter_window(const WindowView& window,
                                          const ClassifierModel& model,
                                          const FilterPolicy& policy,
                                          const ConsentRecord& consent) {
    check_policy_against_model(policy, model);
    FeatureVector fv = window.feature_vector();
    std::vector<double> x(fv.values.begin(), fv.values.end());
    std::size_t cls = predict(model, x);
    const std::string& state = model.config.label_set[cls];

    for (const auto& [label, withhold] : policy.state_rules)
        if (withhold && label == state) return std::nullopt;

    ExportRecord rec;
    rec.window_index = window.window_index;
    rec.manifest.resize(registry_size());
    for (std::size_t i = 0; i < registry_size(); ++i)
        rec.manifest[i] = resolve_action(policy, consent, ChannelId{static_cast<std::uint16_t>(i)});
    for (const auto& [ch, value] : window.values) {
        const ActionSpec& act = rec.manifest[ch.idx];
        if (act.kind == ActionKind::Suppress) continue;
        double v = act.kind == ActionKind::Coarsen ? coarsen(value, act.granularity) : value;
        rec.values.emplace_back(ch, v);
    }
    if (policy.export_predicted_state) rec.predicted_state = state;
    return rec;
}

std::string serialize_export_record(const ExportRecord& rec) {
    canon::ObjectWriter w;
    std::string manifest = "[";
    for (std::size_t i = 0; i < rec.manifest.size(); ++i) {
        if (i) manifest += ',';
        const ActionSpec& a = rec.manifest[i];
        switch (a.kind) {
        case ActionKind::Suppress: manifest += "\"S\""; break;
        case ActionKind::PassThrough: manifest += "\"P\""; break;
        case ActionKind::Coarsen:
            manifest += "\"C:" + canon::num(a.granularity) + '"';
            break;
        }
    }
    manifest += ']';
    w.raw("manifest", manifest);
    if (rec.predicted_state) w.field("state", *rec.predicted_state);
    std::string values = "{";
    bool first = true;
    for (const auto& [ch, v] : rec.values) {
        if (!first) values += ',';
        first = false;
        values += canon::quote(std::string(channel_name(ch)));
        values += ':';
        values += canon::num(v);
    }
    values += '}';
    w.raw("values", values);
    w.field("window", rec.window_index);
    return w.finish();
}

ExportSink::ExportSink(std::ostream& out, const FilterPolicy& policy)
    : out_(out), hash_(policy_hash(policy)) {}

void ExportSink::add(const ExportRecord& rec) {
    if (rec.manifest.size() != registry_size())
        throw Error(ErrorCode::MalformedRecord, "export record with incomplete manifest");
    records_.push_back(serialize_export_record(rec));
}

void ExportSink::finalize() {
    if (finalized_) return;
    finalized_ = true;
    if (!out_.good())
        throw Error(ErrorCode::DestinationUnavailable, "export destination not writable");
    canon::ObjectWriter w;
    w.field("policy_hash", hash_);
    w.field("v", REGISTRY_VERSION);
    w.field("withheld", withheld_);
    out_ << w.finish() << '\n';
    for (const std::string& line : records_) out_ << line << '\n';
    out_.flush();
    if (!out_.good())
        throw Error(ErrorCode::DestinationUnavailable, "export destination failed mid-write");
}

FilterStats filter_session(const SessionLog& s, double window_seconds,
                           const ClassifierModel& model, const FilterPolicy& policy,
                           const ConsentRecord& consent, ExportSink& sink) {
    FilterStats stats;
    for (const WindowView& win : window_views(s, window_seconds)) {
        auto rec = filter_window(win, model, policy, consent);
        if (rec) {
            sink.add(*rec);
            ++stats.exported;
        } else {
            sink.note_withheld();
            ++stats.withheld;
        }
    }
    return stats;
}

RedactedLog parse_redacted_log(std::istream& in) {
    RedactedLog log;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto bad = [&](const std::string& msg) -> Error {
            return Error(ErrorCode::MalformedRecord,
                         "redacted log line " + std::to_string(line_no) + ": " + msg);
        };
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw bad("not a JSON object");
        if (!saw_header) {
            if (!j.contains("v") || !j["v"].is_number_integer() ||
                j["v"].get<int>() != REGISTRY_VERSION)
                throw Error(ErrorCode::UnsupportedVersion, "redacted log header version");
            if (!j.contains("policy_hash") || !j["policy_hash"].is_string())
                throw bad("header missing policy_hash");
            if (!j.contains("withheld") || !j["withheld"].is_number_unsigned())
                throw bad("header missing withheld count");
            log.policy_hash = j["policy_hash"].get<std::string>();
            log.withheld = j["withheld"].get<std::size_t>();
            saw_header = true;
            continue;
        }
        ExportRecord rec;
        if (!j.contains("window") || !j["window"].is_number_unsigned())
            throw bad("record missing window index");
        rec.window_index = j["window"].get<std::size_t>();
        if (!j.contains("manifest") || !j["manifest"].is_array() ||
            j["manifest"].size() != registry_size())
            throw bad("record manifest must list every registry channel");
        for (const json& a : j["manifest"]) {
            if (!a.is_string()) throw bad("manifest entry must be a string");
            std::string s = a.get<std::string>();
            if (s == "S")
                rec.manifest.push_back({ActionKind::Suppress, 0.0});
            else if (s == "P")
                rec.manifest.push_back({ActionKind::PassThrough, 0.0});
            else if (s.size() > 2 && s[0] == 'C' && s[1] == ':')
                rec.manifest.push_back({ActionKind::Coarsen, std::stod(s.substr(2))});
            else
                throw bad("manifest entry '" + s + "' not recognized");
        }
        if (!j.contains("values") || !j["values"].is_object())
            throw bad("record missing values object");
        for (auto it = j["values"].begin(); it != j["values"].end(); ++it) {
            auto ch = find_channel(it.key());
            if (!ch) throw bad("value for unknown channel '" + it.key() + "'");
            if (!it.value().is_number()) throw bad("non-numeric channel value");
            rec.values.emplace_back(*ch, it.value().get<double>());
        }
        std::sort(rec.values.begin(), rec.values.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (j.contains("state")) {
            if (!j["state"].is_string()) throw bad("state must be a string");
            rec.predicted_state = j["state"].get<std::string>();
        }
        log.records.push_back(std::move(rec));
    }
    if (!saw_header)
        throw Error(ErrorCode::MalformedRecord, "redacted log has no header line");
    return log;
}

} // namespace mg
