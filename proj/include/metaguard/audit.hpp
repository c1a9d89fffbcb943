// audit.hpp: inference attacks against exported logs.
//
// The attacker sees exactly what crossed the export boundary: per-window
// channel values with suppressed channels missing. Its input is a fixed
// 124-wide view, one zero-imputed value column plus one presence column per
// registry channel, so suppression patterns themselves count as signal.
// Ground-truth labels come from the synthetic corpus, never from the log.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaguard/channels.hpp"
#include "metaguard/filter.hpp"
#include "metaguard/metrics.hpp"
#include "metaguard/mlp.hpp"
#include "metaguard/session.hpp"

namespace mg {

enum class AttackObjective : std::uint8_t { StateInference, SubjectReidentification };

std::string_view objective_name(AttackObjective o);

struct AttackSpec {
    AttackObjective objective = AttackObjective::StateInference;
    ClassifierConfig attacker_model; // input_dim is overwritten to fit the view
    std::uint64_t seed = 1;
};

struct AuditSample {
    std::size_t window_index = 0;
    std::vector<std::pair<ChannelId, double>> values; // sorted, survivors only
};

// Exported rows paired with out-of-band truth. class_universe fixes the
// chance level and confusion shape so reports stay comparable even when a
// policy removes a class from the log entirely.
struct WindowRecordSet {
    std::vector<AuditSample> rows;
    std::vector<std::string> labels; // aligned with rows
    std::vector<std::string> class_universe;
    std::string objective; // "state" or "subject"
};

// Runs the defender model + filter over the sessions in memory and keeps
// each surviving record aligned with its true label.
WindowRecordSet build_attack_set(const std::vector<SessionLog>& sessions,
                                 double window_seconds, const ClassifierModel& defender,
                                 const FilterPolicy& policy, const ConsentRecord& consent,
                                 AttackObjective objective);

// Same pairing for a parsed log; labels[i] is the truth for records[i].
WindowRecordSet attack_set_from_records(const std::vector<ExportRecord>& records,
                                        std::vector<std::string> labels,
                                        std::vector<std::string> class_universe,
                                        AttackObjective objective);

struct LeakageReport {
    double accuracy = 0.0;
    double chance = 0.0; // 1 / |class_universe|
    double margin = 0.0; // accuracy - chance
    ConfusionMatrix confusion; // rows/cols in class_universe order
    std::vector<std::string> class_universe;
    std::vector<std::string> channels; // channel names the attacker saw
    std::string objective;
    std::uint64_t seed = 0;
};

// Trains the attacker on its own 70/30 split of the rows and reports
// held-out accuracy against the class universe. Classes with fewer than two
// rows are dropped from training; fewer than two trainable classes is
// InsufficientData.
LeakageReport run_attack(const AttackSpec& spec, const WindowRecordSet& set);

// raw margin - filtered margin; IncomparableReports unless objective and
// class universe match.
double leakage_delta(const LeakageReport& raw, const LeakageReport& filtered);

std::string serialize_report(const LeakageReport& r); // canonical JSON line

} // namespace mg
