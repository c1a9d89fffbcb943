#include "metaguard/audit.hpp"

#include <algorithm>
#include <set>

#include "metaguard/canon.hpp"
#include "metaguard/error.hpp"
#include "metaguard/features.hpp"
#include "metaguard/rng.hpp"

namespace mg {

std::string_view objective_name(AttackObjective o) {
    return o == AttackObjective::StateInference ? "state" : "subject";
}

WindowRecordSet build_attack_set(const std::vector<SessionLog>& sessions,
                                 double window_seconds, const ClassifierModel& defender,
                                 const FilterPolicy& policy, const ConsentRecord& consent,
                                 AttackObjective objective) {
    WindowRecordSet set;
    set.objective = std::string(objective_name(objective));

    std::set<std::string> universe;
    for (const SessionLog& s : sessions) {
        for (const WindowView& win : window_views(s, window_seconds)) {
            std::string truth = objective == AttackObjective::StateInference
                                    ? win.label
                                    : s.subject;
            if (truth.empty()) continue; // unlabeled window carries no truth to infer
            universe.insert(truth);
            auto rec = filter_window(win, defender, policy, consent);
            if (!rec) continue;
            set.rows.push_back({rec->window_index, std::move(rec->values)});
            set.labels.push_back(std::move(truth));
        }
    }
    set.class_universe.assign(universe.begin(), universe.end());
    return set;
}

WindowRecordSet attack_set_from_records(const std::vector<ExportRecord>& records,
                                        std::vector<std::string> labels,
                                        std::vector<std::string> class_universe,
                                        AttackObjective objective) {
    if (records.size() != labels.size())
        throw Error(ErrorCode::ShapeMismatch,
                    "label count " + std::to_string(labels.size()) + " for " +
                        std::to_string(records.size()) + " records");
    WindowRecordSet set;
    set.objective = std::string(objective_name(objective));
    set.rows.reserve(records.size());
    for (const ExportRecord& rec : records) set.rows.push_back({rec.window_index, rec.values});
    set.labels = std::move(labels);
    if (class_universe.empty()) {
        std::set<std::string> universe(set.labels.begin(), set.labels.end());
        class_universe.assign(universe.begin(), universe.end());
    }
    set.class_universe = std::move(class_universe);
    return set;
}

LeakageReport run_attack(const AttackSpec& spec, const WindowRecordSet& set) {
    const std::size_t n_rows = set.rows.size();
    if (set.labels.size() != n_rows)
        throw Error(ErrorCode::ShapeMismatch, "rows and labels out of alignment");
    const std::size_t n_universe = set.class_universe.size();
    if (n_universe < 2)
        throw Error(ErrorCode::InsufficientData,
                    "class universe has " + std::to_string(n_universe) + " classes");

    auto universe_index = [&](const std::string& label) -> std::size_t {
        auto it = std::find(set.class_universe.begin(), set.class_universe.end(), label);
        if (it == set.class_universe.end())
            throw Error(ErrorCode::ShapeMismatch, "label '" + label + "' not in universe");
        return static_cast<std::size_t>(it - set.class_universe.begin());
    };

    std::vector<std::size_t> universe_count(n_universe, 0);
    for (const std::string& label : set.labels) ++universe_count[universe_index(label)];

    // Trainable classes need at least two rows (one can land in each half of
    // the attacker's own split).
    std::vector<std::size_t> present; // universe indices, ascending
    for (std::size_t u = 0; u < n_universe; ++u)
        if (universe_count[u] >= 2) present.push_back(u);
    if (present.size() < 2)
        throw Error(ErrorCode::InsufficientData,
                    "attack needs two classes with two or more exported rows, found " +
                        std::to_string(present.size()));

    const std::size_t dim = 2 * registry_size();
    std::vector<std::size_t> row_of; // kept rows
    std::vector<std::size_t> y;      // present-class index per kept row
    row_of.reserve(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        std::size_t u = universe_index(set.labels[r]);
        auto it = std::lower_bound(present.begin(), present.end(), u);
        if (it == present.end() || *it != u) continue;
        row_of.push_back(r);
        y.push_back(static_cast<std::size_t>(it - present.begin()));
    }

    Matrix x(row_of.size(), dim);
    std::fill(x.data.begin(), x.data.end(), 0.0);
    std::vector<bool> seen(registry_size(), false);
    for (std::size_t i = 0; i < row_of.size(); ++i) {
        for (const auto& [ch, value] : set.rows[row_of[i]].values) {
            x.at(i, ch.idx) = value;
            x.at(i, registry_size() + ch.idx) = 1.0;
            seen[ch.idx] = true;
        }
    }

    ClassifierConfig cfg = spec.attacker_model;
    cfg.input_dim = dim;
    cfg.label_set.clear();
    for (std::size_t u : present) cfg.label_set.push_back(set.class_universe[u]);
    cfg.seed = derive_seed(spec.seed, 1);

    SplitIndices split = stratified_split(y, present.size(), 0.7, derive_seed(spec.seed, 0));

    Matrix x_train(split.train.size(), dim);
    std::vector<std::size_t> y_train(split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        std::copy_n(x.row(split.train[i]), dim, x_train.row(i));
        y_train[i] = y[split.train[i]];
    }
    ClassifierModel attacker = train(cfg, x_train, y_train).model;

    std::vector<std::size_t> y_true;
    std::vector<std::size_t> y_pred;
    y_true.reserve(split.test.size());
    for (std::size_t r : split.test) {
        std::vector<double> row(x.row(r), x.row(r) + dim);
        y_true.push_back(present[y[r]]);
        y_pred.push_back(present[predict(attacker, row)]);
    }

    LeakageReport report;
    report.objective = set.objective;
    report.seed = spec.seed;
    report.class_universe = set.class_universe;
    report.confusion = confusion(n_universe, y_true, y_pred);
    report.accuracy = accuracy(report.confusion);
    report.chance = 1.0 / static_cast<double>(n_universe);
    report.margin = report.accuracy - report.chance;
    for (std::size_t i = 0; i < registry_size(); ++i)
        if (seen[i])
            report.channels.emplace_back(channel_name(ChannelId{static_cast<std::uint16_t>(i)}));
    return report;
}

double leakage_delta(const LeakageReport& raw, const LeakageReport& filtered) {
    if (raw.objective != filtered.objective)
        throw Error(ErrorCode::IncomparableReports,
                    "objectives differ: " + raw.objective + " vs " + filtered.objective);
    if (raw.class_universe != filtered.class_universe)
        throw Error(ErrorCode::IncomparableReports, "class universes differ");
    return raw.margin - filtered.margin;
}

std::string serialize_report(const LeakageReport& r) {
    canon::ObjectWriter w;
    w.field("accuracy", r.accuracy);
    w.field("chance", r.chance);
    std::string chans = "[";
    for (std::size_t i = 0; i < r.channels.size(); ++i) {
        if (i) chans += ',';
        chans += canon::quote(r.channels[i]);
    }
    chans += ']';
    w.raw("channels", chans);
    std::string classes = "[";
    for (std::size_t i = 0; i < r.class_universe.size(); ++i) {
        if (i) classes += ',';
        classes += canon::quote(r.class_universe[i]);
    }
    classes += ']';
    w.raw("classes", classes);
    std::string conf = "[";
    for (std::size_t i = 0; i < r.confusion.n_classes; ++i) {
        if (i) conf += ',';
        conf += '[';
        for (std::size_t j = 0; j < r.confusion.n_classes; ++j) {
            if (j) conf += ',';
            conf += std::to_string(r.confusion.at(i, j));
        }
        conf += ']';
    }
    conf += ']';
    w.raw("confusion", conf);
    w.field("margin", r.margin);
    w.field("objective", r.objective);
    w.field("seed", static_cast<std::size_t>(r.seed));
    w.field("v", REGISTRY_VERSION);
    return w.finish();
}

} // namespace mg
