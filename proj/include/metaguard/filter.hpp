// filter.hpp: consent-gated export boundary.
//
// Every registry channel resolves to exactly one action per window:
// consent Deny or Ask forces Suppress, then the policy's channel rule
// applies, then the policy default. Suppression removes the channel from
// the record entirely; a zero would look like a plausible rest pose.
// Windows whose predicted state is marked WithholdWindow produce no record
// at all, only a tombstone count in the log header.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "metaguard/channels.hpp"
#include "metaguard/features.hpp"
#include "metaguard/mlp.hpp"

namespace mg {

enum class ActionKind : std::uint8_t { Suppress, PassThrough, Coarsen };

struct ActionSpec {
    ActionKind kind = ActionKind::Suppress;
    double granularity = 0.0; // Coarsen only; quantization step, > 0

    bool operator==(const ActionSpec&) const = default;
};

// Quantize to multiples of g, halves away from zero: 0.97 -> 1.00 at g=0.25.
double coarsen(double value, double granularity);

enum class Grant : std::uint8_t { Deny, Allow, Ask };

std::string_view grant_name(Grant g);
std::optional<Grant> parse_grant(std::string_view name);

struct ConsentRecord {
    std::string subject_id;
    // One grant per channel group; a grant nobody ever set stays Deny.
    std::array<Grant, kGroupCount> grants{};
    double timestamp = 0.0;
    bool revocable = true;

    Grant grant_for(ChannelGroup g) const { return grants[static_cast<std::size_t>(g)]; }
    void set(ChannelGroup g, Grant v) { grants[static_cast<std::size_t>(g)] = v; }
};

static_assert(static_cast<int>(Grant::Deny) == 0, "zero-initialized grants must read Deny");

ConsentRecord allow_all_consent(std::string subject_id = "");
ConsentRecord deny_all_consent(std::string subject_id = "");

// Append-only consent journal, one JSONL entry per grant change; the latest
// entry per group wins when loading.
void append_consent_entry(std::ostream& out, const ConsentRecord& c, ChannelGroup group);
ConsentRecord load_consent_journal(std::istream& in);

// Interactive grant resolution for a group in Ask state. Throws
// PromptUnavailable when no answer source is wired; callers treat that as
// Deny-equivalent (the grant stays Ask, which suppresses).
using PromptSource = std::function<std::optional<Grant>(ChannelGroup)>;
Grant consent_prompt(ConsentRecord& consent, ChannelGroup group, const PromptSource& source);

struct FilterPolicy {
    // Sorted by channel id; channels without a rule use default_action.
    std::vector<std::pair<ChannelId, ActionSpec>> channel_rules;
    // Sorted by label; true = withhold the whole window.
    std::vector<std::pair<std::string, bool>> state_rules;
    ActionKind default_action = ActionKind::Suppress; // Suppress or PassThrough
    bool export_predicted_state = false;
};

// "suppress-all" and "pass-all"; nullopt for anything else.
std::optional<FilterPolicy> named_policy(std::string_view name);

// Canonical single-line JSON form; policy_hash is FNV-1a 64 over it.
std::string serialize_policy(const FilterPolicy& p);
FilterPolicy parse_policy(std::istream& in);
FilterPolicy parse_policy_string(const std::string& text);
FilterPolicy load_policy(const std::string& path_or_name); // named first, then file
std::string policy_hash(const FilterPolicy& p);

// Throws PolicyModelMismatch unless every state_rules key is a model label.
void check_policy_against_model(const FilterPolicy& p, const ClassifierModel& m);

// Total: consent gate first, then channel rule, then default.
ActionSpec resolve_action(const FilterPolicy& policy, const ConsentRecord& consent,
                          ChannelId ch);

struct ExportRecord {
    std::size_t window_index = 0;
    // Surviving channels only, sorted by channel id.
    std::vector<std::pair<ChannelId, double>> values;
    std::optional<std::string> predicted_state;
    // One action per registry channel, positional.
    std::vector<ActionSpec> manifest;
};

// Classifies the window, applies state_rules, then transforms each channel
// per resolved action. nullopt means the window was withheld.
std::optional<ExportRecord> filter_window(const WindowView& window,
                                          const ClassifierModel& model,
                                          const FilterPolicy& policy,
                                          const ConsentRecord& consent);

// Buffers records so the header (which carries the withheld count) can be
// written first. Nothing reaches the stream until finalize().
class ExportSink {
public:
    explicit ExportSink(std::ostream& out, const FilterPolicy& policy);

    void add(const ExportRecord& rec);
    void note_withheld() { ++withheld_; }
    void finalize(); // DestinationUnavailable if the stream cannot take the log

    std::size_t exported() const { return records_.size(); }
    std::size_t withheld() const { return withheld_; }

private:
    std::ostream& out_;
    std::string hash_;
    std::vector<std::string> records_;
    std::size_t withheld_ = 0;
    bool finalized_ = false;
};

struct FilterStats {
    std::size_t exported = 0;
    std::size_t withheld = 0;
};

// Runs the whole session through filter_window and the sink.
FilterStats filter_session(const SessionLog& s, double window_seconds,
                           const ClassifierModel& model, const FilterPolicy& policy,
                           const ConsentRecord& consent, ExportSink& sink);

std::string serialize_export_record(const ExportRecord& rec);

struct RedactedLog {
    std::string policy_hash;
    std::size_t withheld = 0;
    std::vector<ExportRecord> records;
};

RedactedLog parse_redacted_log(std::istream& in);

} // namespace mg
