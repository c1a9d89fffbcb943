// mg: pipeline driver: synthesize sessions, train/evaluate the classifier,
// run the consent filter, audit leakage, and benchmark the per-window path.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 incomparable inputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "metaguard/audit.hpp"
#include "metaguard/canon.hpp"
#include "metaguard/channels.hpp"
#include "metaguard/error.hpp"
#include "metaguard/features.hpp"
#include "metaguard/filter.hpp"
#include "metaguard/metrics.hpp"
#include "metaguard/mlp.hpp"
#include "metaguard/rng.hpp"
#include "metaguard/session.hpp"
#include "metaguard/synth.hpp"

namespace {

using namespace mg;

std::ifstream open_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
    return in;
}

std::ofstream create_file(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot create '" + path + "'");
    return out;
}

std::vector<SessionLog> load_sessions(const std::string& path) {
    if (path == "-") return parse_corpus(std::cin);
    auto in = open_file(path);
    return parse_corpus(in);
}

ConsentRecord load_consent(const std::string& spec) {
    if (spec == "allow-all") return allow_all_consent();
    if (spec == "deny-all") return deny_all_consent();
    auto in = open_file(spec);
    return load_consent_journal(in);
}

// Maps corpus labels onto a class list. With an empty hint the classes are
// the sorted distinct labels; otherwise every label must be in the hint.
std::vector<std::string> class_list(const std::vector<std::string>& labels,
                                    const std::vector<std::string>& hint) {
    std::vector<std::string> classes = hint;
    if (classes.empty()) {
        classes = labels;
        std::sort(classes.begin(), classes.end());
        classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    }
    for (const std::string& l : labels)
        if (std::find(classes.begin(), classes.end(), l) == classes.end())
            throw Error(ErrorCode::ShapeMismatch,
                        "label '" + l + "' is not in the model's label set");
    return classes;
}

std::vector<std::size_t> label_indices(const std::vector<std::string>& labels,
                                       const std::vector<std::string>& classes) {
    std::vector<std::size_t> y;
    y.reserve(labels.size());
    for (const std::string& l : labels) {
        auto it = std::find(classes.begin(), classes.end(), l);
        y.push_back(static_cast<std::size_t>(it - classes.begin()));
    }
    return y;
}

Matrix to_matrix(const LabeledWindows& rows) {
    Matrix x(rows.size(), kFeatureDim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows.x[i].begin(), rows.x[i].end(), x.row(i));
    return x;
}

std::string quoted_list(const std::vector<std::string>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += canon::quote(v[i]);
    }
    out += ']';
    return out;
}

struct LatencyStats {
    double mean_us = 0.0;
    double p99_us = 0.0;
};

LatencyStats latency_stats(std::vector<double>& samples_us) {
    LatencyStats s;
    if (samples_us.empty()) return s;
    s.mean_us = std::accumulate(samples_us.begin(), samples_us.end(), 0.0) /
                static_cast<double>(samples_us.size());
    std::sort(samples_us.begin(), samples_us.end());
    std::size_t i = (samples_us.size() * 99 + 99) / 100; // ceil
    s.p99_us = samples_us[std::min(i, samples_us.size()) - 1];
    return s;
}

// ---- synth ----

struct SynthArgs {
    std::string env = "ambient";
    std::string profile_path;
    double seconds = 60.0;
    std::uint64_t seed = 1;
    std::string out;
    bool corpus = false;
    std::size_t n = 930;
    double window = kDefaultWindowSeconds;
    double separation = 0.7;
    std::size_t windows_per_session = 10;
    std::size_t subjects = 6;
    std::string sessions_out;
    bool json = false;
};

int cmd_synth(const SynthArgs& a) {
    std::vector<EnvironmentProfile> profiles;
    if (!a.profile_path.empty()) {
        auto in = open_file(a.profile_path);
        profiles.push_back(parse_profile(in));
    } else if (a.corpus && a.env == "all") {
        profiles = builtin_profiles();
    } else {
        profiles.push_back(builtin_profile(a.env));
    }

    if (!a.corpus) {
        EnvironmentProfile p = profiles.front();
        p.separation = a.separation;
        SessionLog s = generate_session(p, a.seconds, a.seed);
        if (a.out.empty()) {
            serialize_session(s, std::cout);
        } else {
            auto out = create_file(a.out);
            serialize_session(s, out);
        }
        if (a.json) {
            canon::ObjectWriter w;
            w.field("duration", s.duration());
            w.field("environment", std::string(environment_name(s.environment)));
            w.field("expr_frames", s.expression_stream.size());
            w.field("gaze_frames", s.gaze_stream.size());
            w.field("out", a.out.empty() ? "-" : a.out);
            w.field("seed", static_cast<std::size_t>(a.seed));
            w.field("session_id", s.session_id);
            w.field("v", REGISTRY_VERSION);
            std::cout << w.finish() << '\n';
        } else if (!a.out.empty()) {
            std::printf("wrote %s: %.6g s, %zu expression frames, %zu gaze frames -> %s\n",
                        s.session_id.c_str(), s.duration(), s.expression_stream.size(),
                        s.gaze_stream.size(), a.out.c_str());
        }
        return 0;
    }

    DatasetSpec spec;
    spec.n_samples = a.n;
    spec.window_seconds = a.window;
    spec.seed = a.seed;
    spec.separation = a.separation;
    spec.windows_per_session = a.windows_per_session;
    spec.n_subjects = a.subjects;

    std::ofstream sessions_file;
    if (!a.sessions_out.empty()) sessions_file = create_file(a.sessions_out);

    LabeledWindows rows;
    std::size_t n_sessions = 0;
    for_each_corpus_session(spec, profiles, [&](SessionLog&& s) {
        ++n_sessions;
        if (sessions_file.is_open()) serialize_session(s, sessions_file);
        for (const WindowView& win : window_views(s, spec.window_seconds)) {
            if (win.label.empty()) continue;
            rows.x.push_back(win.feature_vector().values);
            rows.y.push_back(win.label);
        }
    });

    if (a.out.empty()) {
        write_features_csv(rows, std::cout);
    } else {
        auto out = create_file(a.out);
        write_features_csv(rows, out);
    }

    std::vector<std::string> classes = class_list(rows.y, {});
    std::vector<std::size_t> per_class(classes.size(), 0);
    for (const std::string& l : rows.y)
        ++per_class[static_cast<std::size_t>(
            std::find(classes.begin(), classes.end(), l) - classes.begin())];

    if (a.json) {
        canon::ObjectWriter w;
        std::string counts = "{";
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (i) counts += ',';
            counts += canon::quote(classes[i]) + ':' + std::to_string(per_class[i]);
        }
        counts += '}';
        w.raw("class_counts", counts);
        w.field("n_windows", rows.size());
        w.field("out", a.out.empty() ? "-" : a.out);
        w.field("seed", static_cast<std::size_t>(a.seed));
        w.field("sessions", n_sessions);
        if (!a.sessions_out.empty()) w.field("sessions_out", a.sessions_out);
        w.field("v", REGISTRY_VERSION);
        std::cout << w.finish() << '\n';
    } else if (!a.out.empty()) {
        std::printf("wrote %zu labeled windows over %zu sessions -> %s\n", rows.size(),
                    n_sessions, a.out.c_str());
        for (std::size_t i = 0; i < classes.size(); ++i)
            std::printf("  %-10s %zu\n", classes[i].c_str(), per_class[i]);
    }
    return 0;
}

// ---- train ----

struct TrainArgs {
    std::string corpus;
    std::string out = "model.bin";
    std::string config_json;
    std::uint64_t seed = 1;
    std::size_t epochs = 0; // 0 = keep config default
    std::size_t hidden = 0;
    double dropout = -1.0;
    double lr = 0.0;
    std::size_t batch = 0;
    bool json = false;
};

ClassifierConfig config_from_json(const std::string& spec) {
    std::string text = spec;
    if (!spec.empty() && spec.front() != '{') {
        auto in = open_file(spec);
        text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::MalformedRecord, "config is not a JSON object");
    ClassifierConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        try {
            if (k == "batch_size") c.batch_size = it.value().get<std::size_t>();
            else if (k == "dropout_p") c.dropout_p = it.value().get<double>();
            else if (k == "epochs") c.epochs = it.value().get<std::size_t>();
            else if (k == "hidden_units") c.hidden_units = it.value().get<std::size_t>();
            else if (k == "label_set") c.label_set = it.value().get<std::vector<std::string>>();
            else if (k == "learning_rate") c.learning_rate = it.value().get<double>();
            else if (k == "seed") c.seed = it.value().get<std::uint64_t>();
            else throw Error(ErrorCode::MalformedRecord, "unknown config key '" + k + "'");
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::MalformedRecord, "bad config value for '" + k + "'");
        }
    }
    return c;
}

int cmd_train(const TrainArgs& a) {
    auto in = open_file(a.corpus);
    LabeledWindows rows = read_features_csv(in);

    ClassifierConfig cfg;
    std::vector<std::string> label_hint;
    if (!a.config_json.empty()) {
        cfg = config_from_json(a.config_json);
        label_hint = cfg.label_set;
    }
    cfg.seed = a.seed;
    if (a.epochs) cfg.epochs = a.epochs;
    if (a.hidden) cfg.hidden_units = a.hidden;
    if (a.dropout >= 0.0) cfg.dropout_p = a.dropout;
    if (a.lr > 0.0) cfg.learning_rate = a.lr;
    if (a.batch) cfg.batch_size = a.batch;
    if (a.config_json.empty()) label_hint.clear();

    cfg.label_set = class_list(rows.y, label_hint);
    cfg.input_dim = kFeatureDim;

    Matrix x = to_matrix(rows);
    std::vector<std::size_t> y = label_indices(rows.y, cfg.label_set);

    SplitIndices split = stratified_split(y, cfg.label_set.size(), 0.7,
                                          derive_seed(cfg.seed, 10));
    Matrix x_train(split.train.size(), kFeatureDim);
    std::vector<std::size_t> y_train(split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        std::copy_n(x.row(split.train[i]), kFeatureDim, x_train.row(i));
        y_train[i] = y[split.train[i]];
    }

    TrainResult result = train(cfg, x_train, y_train);

    auto accuracy_on = [&](const std::vector<std::size_t>& idx) {
        std::size_t hits = 0;
        for (std::size_t r : idx) {
            std::vector<double> row(x.row(r), x.row(r) + kFeatureDim);
            if (predict(result.model, row) == y[r]) ++hits;
        }
        return idx.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(idx.size());
    };
    double train_acc = accuracy_on(split.train);
    double test_acc = accuracy_on(split.test);

    save_model_file(result.model, a.out);

    if (a.json) {
        canon::ObjectWriter w;
        w.raw("labels", quoted_list(cfg.label_set));
        w.field("loss_first", result.loss_trace.front());
        w.field("loss_last", result.loss_trace.back());
        w.field("model", a.out);
        w.field("test_accuracy", test_acc);
        w.field("test_windows", split.test.size());
        w.field("train_accuracy", train_acc);
        w.field("train_windows", split.train.size());
        w.field("v", REGISTRY_VERSION);
        std::cout << w.finish() << '\n';
    } else {
        std::printf("train windows %zu, test windows %zu\n", split.train.size(),
                    split.test.size());
        std::printf("train accuracy %.4f  test accuracy %.4f\n", train_acc, test_acc);
        std::printf("loss %.4f -> %.4f over %zu epochs\n", result.loss_trace.front(),
                    result.loss_trace.back(), result.loss_trace.size());
        std::string labels;
        for (std::size_t i = 0; i < cfg.label_set.size(); ++i)
            labels += (i ? ", " : "") + cfg.label_set[i];
        std::printf("saved %s (labels: %s)\n", a.out.c_str(), labels.c_str());
    }
    return 0;
}

// ---- eval ----

struct EvalArgs {
    std::string model;
    std::string corpus;
    std::size_t cv = 0;
    std::uint64_t seed = 1;
    bool json = false;
};

int cmd_eval(const EvalArgs& a) {
    ClassifierModel model = load_model_file(a.model);
    auto in = open_file(a.corpus);
    LabeledWindows rows = read_features_csv(in);
    class_list(rows.y, model.config.label_set);
    std::vector<std::size_t> y = label_indices(rows.y, model.config.label_set);
    Matrix x = to_matrix(rows);

    std::vector<std::size_t> y_pred(rows.size());
    std::vector<double> lat_us(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> row(x.row(i), x.row(i) + kFeatureDim);
        auto t0 = std::chrono::steady_clock::now();
        y_pred[i] = predict(model, row);
        auto t1 = std::chrono::steady_clock::now();
        lat_us[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    ConfusionMatrix cm = confusion(model.config.label_set.size(), y, y_pred);
    double acc = accuracy(cm);
    double f1 = macro_f1(cm);
    std::vector<double> pct = row_percentages(cm);
    std::vector<double> importance = ablation_importance(model, x, y);
    LatencyStats lat = latency_stats(lat_us);

    std::vector<FoldMetrics> folds;
    if (a.cv >= 2) folds = cross_validate(model.config, x, y, a.cv, a.seed);

    // Importance ranking, largest accuracy drop first.
    std::vector<std::size_t> order(importance.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return importance[l] > importance[r]; });
    auto feature_names = feature_channels();

    if (a.json) {
        canon::ObjectWriter w;
        w.field("accuracy", acc);
        std::string conf = "[";
        for (std::size_t i = 0; i < cm.n_classes; ++i) {
            if (i) conf += ',';
            conf += '[';
            for (std::size_t j = 0; j < cm.n_classes; ++j) {
                if (j) conf += ',';
                conf += canon::num(pct[i * cm.n_classes + j]);
            }
            conf += ']';
        }
        conf += ']';
        w.raw("confusion_pct", conf);
        if (!folds.empty()) {
            std::vector<double> fa, ff;
            for (const FoldMetrics& m : folds) {
                fa.push_back(m.accuracy);
                ff.push_back(m.macro_f1);
            }
            double mean = std::accumulate(fa.begin(), fa.end(), 0.0) /
                          static_cast<double>(fa.size());
            double var = 0.0;
            for (double v : fa) var += (v - mean) * (v - mean);
            var /= static_cast<double>(fa.size());
            std::string cv = "{\"accuracy_mean\":" + canon::num(mean) +
                             ",\"accuracy_std\":" + canon::num(std::sqrt(var)) +
                             ",\"fold_accuracy\":" + canon::array_of_nums(fa) +
                             ",\"fold_macro_f1\":" + canon::array_of_nums(ff) + '}';
            w.raw("cv", cv);
        }
        std::string imp = "[";
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (k) imp += ',';
            imp += "{\"delta\":" + canon::num(importance[order[k]]) + ",\"feature\":" +
                   canon::quote(std::string(channel_name(feature_names[order[k]]))) + '}';
        }
        imp += ']';
        w.raw("importance", imp);
        w.raw("labels", quoted_list(model.config.label_set));
        w.raw("latency_us", "{\"mean\":" + canon::num(lat.mean_us) +
                                ",\"p99\":" + canon::num(lat.p99_us) + '}');
        w.field("macro_f1", f1);
        w.field("v", REGISTRY_VERSION);
        std::cout << w.finish() << '\n';
        return 0;
    }

    std::printf("windows %zu  accuracy %.4f  macro F1 %.4f\n", rows.size(), acc, f1);
    std::printf("confusion (%% of true class):\n%14s", "");
    for (const std::string& l : model.config.label_set) std::printf(" %9s", l.c_str());
    std::printf("\n");
    for (std::size_t i = 0; i < cm.n_classes; ++i) {
        std::printf("%14s", model.config.label_set[i].c_str());
        for (std::size_t j = 0; j < cm.n_classes; ++j)
            std::printf(" %9.1f", pct[i * cm.n_classes + j]);
        std::printf("\n");
    }
    if (!folds.empty()) {
        std::printf("%zu-fold CV accuracy:", folds.size());
        double mean = 0.0;
        for (const FoldMetrics& m : folds) {
            std::printf(" %.4f", m.accuracy);
            mean += m.accuracy;
        }
        mean /= static_cast<double>(folds.size());
        double var = 0.0;
        for (const FoldMetrics& m : folds) var += (m.accuracy - mean) * (m.accuracy - mean);
        std::printf("  (mean %.4f, std %.4f)\n", mean,
                    std::sqrt(var / static_cast<double>(folds.size())));
    }
    std::printf("feature importance (accuracy drop under mean substitution):\n");
    for (std::size_t k = 0; k < order.size(); ++k)
        std::printf("  %+0.4f  %s\n", importance[order[k]],
                    std::string(channel_name(feature_names[order[k]])).c_str());
    std::printf("latency per window: mean %.1f us  p99 %.1f us\n", lat.mean_us, lat.p99_us);
    return 0;
}

// ---- run ----

struct RunArgs {
    std::string session;
    std::string model;
    std::string policy = "suppress-all";
    std::string consent = "deny-all";
    bool ask = false;
    std::string out;
    double window = kDefaultWindowSeconds;
    bool json = false;
};

// Reads grant answers from stdin: "allow <group>"/"deny <group>" answers
// that group, a bare "allow"/"deny" answers the next pending group in
// registry order. EOF or an unparseable script leaves the rest in Ask,
// which suppresses.
void run_prompts(ConsentRecord& consent) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(std::cin, line)) lines.push_back(line);

    PromptSource source = [&lines, used = std::size_t(0)](ChannelGroup g) mutable
        -> std::optional<Grant> {
        // named answer anywhere in the script wins
        for (const std::string& l : lines) {
            std::istringstream parts(l);
            std::string verb, target;
            parts >> verb >> target;
            auto grant = parse_grant(verb);
            if (grant && target == group_name(g)) return grant;
        }
        // otherwise consume the next bare answer
        while (used < lines.size()) {
            std::istringstream parts(lines[used++]);
            std::string verb, target;
            parts >> verb >> target;
            auto grant = parse_grant(verb);
            if (grant && target.empty()) return grant;
        }
        return std::nullopt;
    };

    std::size_t unanswered = 0;
    for (std::size_t gi = 0; gi < kGroupCount; ++gi) {
        auto g = static_cast<ChannelGroup>(gi);
        if (consent.grant_for(g) != Grant::Ask) continue;
        try {
            consent_prompt(consent, g, source);
        } catch (const Error&) {
            ++unanswered; // PromptUnavailable: the group stays Ask
        }
    }
    if (unanswered)
        std::fprintf(stderr,
                     "warning: %zu consent group(s) unanswered; they stay suppressed\n",
                     unanswered);
}

int cmd_run(const RunArgs& a) {
    std::vector<SessionLog> sessions = load_sessions(a.session);
    ClassifierModel model = load_model_file(a.model);
    FilterPolicy policy = load_policy(a.policy);
    check_policy_against_model(policy, model);

    ConsentRecord consent = load_consent(a.consent);
    if (a.ask) {
        // Every denied-or-unset group becomes promptable; an explicit "deny"
        // answer or EOF re-suppresses it.
        for (std::size_t gi = 0; gi < kGroupCount; ++gi) {
            auto g = static_cast<ChannelGroup>(gi);
            if (consent.grant_for(g) == Grant::Deny) consent.set(g, Grant::Ask);
        }
        run_prompts(consent);
    }

    std::ofstream out_file;
    bool to_stdout = a.out.empty();
    if (!to_stdout) out_file = create_file(a.out);
    ExportSink sink(to_stdout ? std::cout : out_file, policy);

    FilterStats total;
    for (const SessionLog& s : sessions) {
        FilterStats st = filter_session(s, a.window, model, policy, consent, sink);
        total.exported += st.exported;
        total.withheld += st.withheld;
    }
    sink.finalize();

    std::size_t passed = 0, coarsened = 0, suppressed = 0;
    for (std::size_t i = 0; i < registry_size(); ++i) {
        ActionSpec act = resolve_action(policy, consent, ChannelId{static_cast<std::uint16_t>(i)});
        if (act.kind == ActionKind::PassThrough) ++passed;
        else if (act.kind == ActionKind::Coarsen) ++coarsened;
        else ++suppressed;
    }

    std::FILE* rpt = to_stdout ? stderr : stdout;
    if (a.json) {
        canon::ObjectWriter w;
        w.field("channels_coarsened", coarsened);
        w.field("channels_passed", passed);
        w.field("channels_suppressed", suppressed);
        w.field("exported", total.exported);
        w.field("out", to_stdout ? "-" : a.out);
        w.field("policy_hash", policy_hash(policy));
        w.field("v", REGISTRY_VERSION);
        w.field("withheld", total.withheld);
        std::fprintf(rpt, "%s\n", w.finish().c_str());
    } else {
        std::fprintf(rpt, "exported %zu window(s), withheld %zu\n", total.exported,
                     total.withheld);
        std::fprintf(rpt, "policy %s  channels: %zu passed, %zu coarsened, %zu suppressed\n",
                     policy_hash(policy).c_str(), passed, coarsened, suppressed);
    }
    return 0;
}

// ---- audit ----

struct AuditArgs {
    std::string sessions;
    std::string model;
    std::string policy = "suppress-all";
    std::string consent = "allow-all";
    std::string objective = "state";
    std::size_t seeds = 1;
    std::uint64_t seed = 1;
    double window = kDefaultWindowSeconds;
    bool json = false;
};

int cmd_audit(const AuditArgs& a) {
    std::vector<SessionLog> sessions = load_sessions(a.sessions);
    ClassifierModel model = load_model_file(a.model);
    FilterPolicy filtered_policy = load_policy(a.policy);
    check_policy_against_model(filtered_policy, model);
    ConsentRecord consent = load_consent(a.consent);
    AttackObjective objective = a.objective == "subject"
                                    ? AttackObjective::SubjectReidentification
                                    : AttackObjective::StateInference;

    FilterPolicy raw_policy = *named_policy("pass-all");
    ConsentRecord raw_consent = allow_all_consent();

    WindowRecordSet raw_set =
        build_attack_set(sessions, a.window, model, raw_policy, raw_consent, objective);
    WindowRecordSet filtered_set =
        build_attack_set(sessions, a.window, model, filtered_policy, consent, objective);
    // Same sessions, same truth: keep the chance level shared even when the
    // policy removed a class from the filtered log.
    filtered_set.class_universe = raw_set.class_universe;

    std::vector<double> raw_margins, filtered_margins, deltas;
    std::vector<double> raw_recall(raw_set.class_universe.size(), 0.0);
    std::vector<double> filtered_recall(raw_set.class_universe.size(), 0.0);
    double raw_acc_sum = 0.0, filtered_acc_sum = 0.0;
    for (std::size_t i = 0; i < a.seeds; ++i) {
        AttackSpec spec;
        spec.objective = objective;
        spec.seed = a.seed + i;
        LeakageReport raw = run_attack(spec, raw_set);
        LeakageReport filtered = run_attack(spec, filtered_set);
        deltas.push_back(leakage_delta(raw, filtered));
        raw_margins.push_back(raw.margin);
        filtered_margins.push_back(filtered.margin);
        raw_acc_sum += raw.accuracy;
        filtered_acc_sum += filtered.accuracy;
        std::vector<double> rr = per_class_recall(raw.confusion);
        std::vector<double> fr = per_class_recall(filtered.confusion);
        for (std::size_t c = 0; c < rr.size(); ++c) {
            raw_recall[c] += rr[c] / static_cast<double>(a.seeds);
            filtered_recall[c] += fr[c] / static_cast<double>(a.seeds);
        }
    }
    double n = static_cast<double>(a.seeds);
    double raw_margin_mean = std::accumulate(raw_margins.begin(), raw_margins.end(), 0.0) / n;
    double filtered_margin_mean =
        std::accumulate(filtered_margins.begin(), filtered_margins.end(), 0.0) / n;
    double delta_mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) / n;

    if (a.json) {
        canon::ObjectWriter w;
        w.raw("classes", quoted_list(raw_set.class_universe));
        w.field("delta_mean", delta_mean);
        w.field("filtered_accuracy_mean", filtered_acc_sum / n);
        w.field("filtered_margin_mean", filtered_margin_mean);
        w.raw("filtered_margins", canon::array_of_nums(filtered_margins));
        w.raw("filtered_recall", canon::array_of_nums(filtered_recall));
        w.field("objective", a.objective);
        w.field("raw_accuracy_mean", raw_acc_sum / n);
        w.field("raw_margin_mean", raw_margin_mean);
        w.raw("raw_margins", canon::array_of_nums(raw_margins));
        w.raw("raw_recall", canon::array_of_nums(raw_recall));
        w.field("seed", static_cast<std::size_t>(a.seed));
        w.field("seeds", a.seeds);
        w.field("v", REGISTRY_VERSION);
        std::cout << w.finish() << '\n';
        return 0;
    }

    std::printf("objective %s over %zu seed(s), chance %.4f\n", a.objective.c_str(), a.seeds,
                1.0 / static_cast<double>(raw_set.class_universe.size()));
    std::printf("%-10s margin %.4f  accuracy %.4f\n", "raw", raw_margin_mean,
                raw_acc_sum / n);
    std::printf("%-10s margin %.4f  accuracy %.4f\n", "filtered", filtered_margin_mean,
                filtered_acc_sum / n);
    std::printf("%-10s %.4f\n", "delta", delta_mean);
    std::printf("mean recall per class:\n");
    std::printf("%14s %8s %8s\n", "", "raw", "filtered");
    for (std::size_t c = 0; c < raw_set.class_universe.size(); ++c)
        std::printf("%14s %8.4f %8.4f\n", raw_set.class_universe[c].c_str(), raw_recall[c],
                    filtered_recall[c]);
    return 0;
}

// ---- bench ----

struct BenchArgs {
    std::string model;
    std::string policy = "pass-all";
    std::string consent = "allow-all";
    std::string session;
    std::size_t windows = 1000;
    std::uint64_t seed = 1;
    bool json = false;
};

int cmd_bench(const BenchArgs& a) {
    ClassifierModel model = load_model_file(a.model);
    FilterPolicy policy = load_policy(a.policy);
    check_policy_against_model(policy, model);
    ConsentRecord consent = load_consent(a.consent);

    std::vector<WindowView> views;
    if (!a.session.empty()) {
        for (const SessionLog& s : load_sessions(a.session))
            for (WindowView& win : window_views(s))
                views.push_back(std::move(win));
    } else {
        SessionLog s = generate_session(builtin_profile("interactive"), 200.0, a.seed);
        views = window_views(s);
    }
    if (views.empty()) throw Error(ErrorCode::SessionTooShort, "no complete windows to bench");

    // Warm-up pass keeps one-time allocation out of the measurement.
    (void)filter_window(views[0], model, policy, consent);

    std::vector<double> lat_us(a.windows);
    std::size_t exported = 0;
    for (std::size_t i = 0; i < a.windows; ++i) {
        const WindowView& win = views[i % views.size()];
        auto t0 = std::chrono::steady_clock::now();
        auto rec = filter_window(win, model, policy, consent);
        auto t1 = std::chrono::steady_clock::now();
        if (rec) ++exported;
        lat_us[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
    }
    LatencyStats lat = latency_stats(lat_us);
    double throughput = lat.mean_us > 0.0 ? 1e6 / lat.mean_us : 0.0;
    const double gaze_budget_us = 1e6 / 90.0;   // per-frame period of the fast stream
    const double expr_budget_us = 1e6 / 30.0;

    if (a.json) {
        canon::ObjectWriter w;
        w.field("gaze_budget_ok", lat.p99_us < gaze_budget_us);
        w.field("expr_budget_ok", lat.p99_us < expr_budget_us);
        w.field("mean_us", lat.mean_us);
        w.field("n_windows", a.windows);
        w.field("p99_us", lat.p99_us);
        w.field("throughput_wps", throughput);
        w.field("v", REGISTRY_VERSION);
        std::cout << w.finish() << '\n';
    } else {
        std::printf("%zu windows (classify+filter, no I/O): mean %.1f us  p99 %.1f us\n",
                    a.windows, lat.mean_us, lat.p99_us);
        std::printf("budgets: 11.1 ms gaze frame -> %s, 33.3 ms expression frame -> %s\n",
                    lat.p99_us < gaze_budget_us ? "ok" : "EXCEEDED",
                    lat.p99_us < expr_budget_us ? "ok" : "EXCEEDED");
        std::printf("throughput %.0f windows/s\n", throughput);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"biometric capture, filtering, and leakage audit pipeline"};
    app.require_subcommand(1);

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "generate synthetic sessions or a corpus");
    synth->add_option("--env", sa.env, "builtin profile: interactive|emotional|ambient|all")
        ->check(CLI::IsMember({"interactive", "emotional", "ambient", "all"}));
    synth->add_option("--profile", sa.profile_path, "custom profile JSONL file");
    synth->add_option("--seconds", sa.seconds, "session length in seconds");
    synth->add_option("--seed", sa.seed, "master seed");
    synth->add_option("--out", sa.out, "output path (default stdout)");
    synth->add_flag("--corpus", sa.corpus, "emit a labeled windowed-feature CSV corpus");
    synth->add_option("--n", sa.n, "corpus: number of labeled windows");
    synth->add_option("--window", sa.window, "window length in seconds");
    synth->add_option("--separation", sa.separation, "state separation in [0,1]");
    synth->add_option("--windows-per-session", sa.windows_per_session,
                      "corpus: windows per session");
    synth->add_option("--subjects", sa.subjects, "corpus: synthetic subject count");
    synth->add_option("--sessions-out", sa.sessions_out,
                      "corpus: also write the full session JSONL here");
    synth->add_flag("--json", sa.json, "machine-readable summary");

    TrainArgs ta;
    CLI::App* train_cmd = app.add_subcommand("train", "train the affect classifier");
    train_cmd->add_option("--corpus", ta.corpus, "labeled feature CSV")->required();
    train_cmd->add_option("--out", ta.out, "model output path");
    train_cmd->add_option("--config", ta.config_json, "config JSON (inline or a file path)");
    train_cmd->add_option("--seed", ta.seed, "training seed");
    train_cmd->add_option("--epochs", ta.epochs, "override epoch count");
    train_cmd->add_option("--hidden", ta.hidden, "override hidden width");
    train_cmd->add_option("--dropout", ta.dropout, "override dropout probability");
    train_cmd->add_option("--lr", ta.lr, "override learning rate");
    train_cmd->add_option("--batch", ta.batch, "override batch size");
    train_cmd->add_flag("--json", ta.json, "machine-readable summary");

    EvalArgs ea;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a model on a corpus");
    eval_cmd->add_option("--model", ea.model, "model file")->required();
    eval_cmd->add_option("--corpus", ea.corpus, "labeled feature CSV")->required();
    eval_cmd->add_option("--cv", ea.cv, "also run k-fold cross-validation");
    eval_cmd->add_option("--seed", ea.seed, "cross-validation seed");
    eval_cmd->add_flag("--json", ea.json, "machine-readable report");

    RunArgs ra;
    CLI::App* run_cmd = app.add_subcommand("run", "filter a session into a redacted log");
    run_cmd->add_option("--session", ra.session, "session JSONL ('-' for stdin)")->required();
    run_cmd->add_option("--model", ra.model, "model file")->required();
    run_cmd->add_option("--policy", ra.policy, "policy name (suppress-all|pass-all) or file");
    run_cmd->add_option("--consent", ra.consent, "allow-all|deny-all or a consent journal");
    run_cmd->add_flag("--ask", ra.ask, "prompt for unanswered groups on stdin");
    run_cmd->add_option("--out", ra.out, "redacted log path (default stdout)");
    run_cmd->add_option("--window", ra.window, "window length in seconds");
    run_cmd->add_flag("--json", ra.json, "machine-readable summary");

    AuditArgs aa;
    CLI::App* audit_cmd =
        app.add_subcommand("audit", "attack raw vs filtered exports and report leakage");
    audit_cmd->add_option("--sessions", aa.sessions, "labeled session JSONL")->required();
    audit_cmd->add_option("--model", aa.model, "defender model file")->required();
    audit_cmd->add_option("--policy", aa.policy, "policy under audit");
    audit_cmd->add_option("--consent", aa.consent, "consent for the filtered run");
    audit_cmd->add_option("--objective", aa.objective, "state|subject")
        ->check(CLI::IsMember({"state", "subject"}));
    audit_cmd->add_option("--seeds", aa.seeds, "number of attack seeds");
    audit_cmd->add_option("--seed", aa.seed, "first attack seed");
    audit_cmd->add_option("--window", aa.window, "window length in seconds");
    audit_cmd->add_flag("--json", aa.json, "machine-readable report");

    BenchArgs ba;
    CLI::App* bench_cmd = app.add_subcommand("bench", "time the classify+filter window path");
    bench_cmd->add_option("--model", ba.model, "model file")->required();
    bench_cmd->add_option("--policy", ba.policy, "policy name or file");
    bench_cmd->add_option("--consent", ba.consent, "consent source");
    bench_cmd->add_option("--session", ba.session, "optional session JSONL source");
    bench_cmd->add_option("--windows", ba.windows, "number of timed windows");
    bench_cmd->add_option("--seed", ba.seed, "seed for the synthetic bench session");
    bench_cmd->add_flag("--json", ba.json, "machine-readable stats");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(sa);
        if (train_cmd->parsed()) return cmd_train(ta);
        if (eval_cmd->parsed()) return cmd_eval(ea);
        if (run_cmd->parsed()) return cmd_run(ra);
        if (audit_cmd->parsed()) return cmd_audit(aa);
        if (bench_cmd->parsed()) return cmd_bench(ba);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const mg::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == ErrorCode::IncomparableReports ? 4 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
