#include "metaguard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>
#include <omp.h>

#include "metaguard/canon.hpp"
#include "metaguard/error.hpp"
#include "metaguard/rng.hpp"

namespace mg {

using nlohmann::json;

namespace {

constexpr double kExprHz = 30.0;
constexpr double kGazeHz = 90.0;
constexpr double kBlinkDipSeconds = 0.12;
constexpr double kBlinkDipFactor = 0.1;
constexpr double kOpennessNoise = 0.025;
constexpr double kSubjectBiasSigma = 0.044;

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Gaze/blink behaviour of one affective state, expressed relative to the
// profile's Neutral baseline.
struct StateParams {
    double dwell_mult = 1.0;
    double spread_mult = 1.0;
    double center_az = 0.0;
    double center_el = 0.0;
    double blink_mult = 1.0;
    double openness_delta = 0.0;
};

StateParams raw_state_params(std::string_view state) {
    if (state == "Engaged") return {3.0, 0.4, 0.55, -0.05, 0.85, 0.01};
    if (state == "Stressed") return {0.28, 1.5, 0.0, 0.0, 2.0, -0.10};
    if (state == "Relaxed") return {1.5, 0.8, 0.0, 0.05, 0.65, -0.07};
    return {}; // Neutral and unknown states use the baseline
}

// Interpolate toward Neutral so that separation 0 erases every
// state-dependent difference.
StateParams scaled_state_params(std::string_view state, double sep) {
    StateParams p = raw_state_params(state);
    return {1.0 + sep * (p.dwell_mult - 1.0), 1.0 + sep * (p.spread_mult - 1.0),
            sep * p.center_az,                sep * p.center_el,
            1.0 + sep * (p.blink_mult - 1.0), sep * p.openness_delta};
}

struct StateOffset {
    std::string_view channel;
    double delta;
};

const StateOffset kEngagedOffsets[] = {
    {"UpperLipRaiserL", 0.26}, {"UpperLipRaiserR", 0.30},   {"LipCornerPullerL", 0.28},
    {"LipCornerPullerR", 0.26}, {"CheekRaiserL", 0.24},     {"CheekRaiserR", 0.22},
    {"JawDrop", 0.08},          {"TongueTipAlveolar", 0.10},
};

const StateOffset kStressedOffsets[] = {
    {"BrowLowererL", 0.38},       {"BrowLowererR", 0.36},       {"LidTightenerL", 0.33},
    {"LidTightenerR", 0.31},      {"InnerBrowRaiserL", 0.27},   {"InnerBrowRaiserR", 0.25},
    {"LipCornerDepressorL", 0.12}, {"LipCornerDepressorR", 0.11},
};

constexpr double kRelaxedDamp = -0.04; // applied to every generated channel

double state_offset(std::string_view state, std::string_view channel) {
    if (state == "Engaged") {
        for (const auto& o : kEngagedOffsets)
            if (o.channel == channel) return o.delta;
        return 0.0;
    }
    if (state == "Stressed") {
        for (const auto& o : kStressedOffsets)
            if (o.channel == channel) return o.delta;
        return 0.0;
    }
    if (state == "Relaxed") return kRelaxedDamp;
    return 0.0;
}

[[noreturn]] void bad_profile(const std::string& msg) {
    throw Error(ErrorCode::InvalidProfile, msg);
}

void check_profile(const EnvironmentProfile& p) {
    if (!(p.base_mean >= 0.0 && p.base_mean <= 1.0)) bad_profile("base_mean outside [0,1]");
    if (!(p.base_sigma >= 0.0)) bad_profile("negative base_sigma");
    if (!(p.reversion_rate > 0.0)) bad_profile("reversion_rate must be positive");
    if (!(p.blink_rate_hz >= 0.0)) bad_profile("negative blink_rate_hz");
    if (!(p.openness_mean >= 0.0 && p.openness_mean <= 1.0))
        bad_profile("openness_mean outside [0,1]");
    if (!(p.gaze.fixation_dwell_s > 0.0)) bad_profile("fixation dwell must be positive");
    if (!(p.gaze.spread_rad >= 0.0) || !(p.gaze.jitter_rad >= 0.0))
        bad_profile("negative gaze angle parameter");
    if (!(p.separation >= 0.0 && p.separation <= 1.0)) bad_profile("separation outside [0,1]");
    if (!(p.label_window_s > 0.0)) bad_profile("label window must be positive");
}

double bias_for(const EnvironmentProfile& p, ChannelId ch) {
    for (const auto& [c, b] : p.subject_bias)
        if (c == ch) return b;
    return 0.0;
}

ChannelStats stats_for(const EnvironmentProfile& p, ChannelId ch) {
    for (const auto& [c, s] : p.channel_overrides)
        if (c == ch) return s;
    return {p.base_mean, p.base_sigma};
}

struct Phase {
    double t_end;
    std::string state;
    StateParams params;
    std::vector<double> mu; // per generated channel
};

} // namespace

const std::vector<ChannelId>& generated_channels() {
    static const std::vector<ChannelId> chans = [] {
        const char* names[] = {
            "BrowLowererL",       "BrowLowererR",       "CheekRaiserL",
            "CheekRaiserR",       "InnerBrowRaiserL",   "InnerBrowRaiserR",
            "JawDrop",            "LidTightenerL",      "LidTightenerR",
            "LipCornerDepressorL", "LipCornerDepressorR", "LipCornerPullerL",
            "LipCornerPullerR",   "LipSuckLB",          "LipSuckRB",
            "TongueTipAlveolar",  "UpperLipRaiserL",    "UpperLipRaiserR",
        };
        std::vector<ChannelId> out;
        for (const char* n : names) out.push_back(*find_channel(n));
        std::sort(out.begin(), out.end());
        return out;
    }();
    return chans;
}

const std::vector<EnvironmentProfile>& builtin_profiles() {
    static const std::vector<EnvironmentProfile> profiles = [] {
        EnvironmentProfile interactive;
        interactive.name = "interactive";
        interactive.environment = Environment::Interactive;
        interactive.base_mean = 0.06;
        interactive.base_sigma = 0.095;
        interactive.blink_rate_hz = 0.22;
        interactive.openness_mean = 0.92;
        interactive.gaze = {0.36, 0.5, 0.02};

        EnvironmentProfile emotional;
        emotional.name = "emotional";
        emotional.environment = Environment::Emotional;
        emotional.base_mean = 0.055;
        emotional.base_sigma = 0.105;
        emotional.blink_rate_hz = 0.2;
        emotional.openness_mean = 0.91;
        emotional.gaze = {0.7, 0.35, 0.015};

        EnvironmentProfile ambient;
        ambient.name = "ambient";
        ambient.environment = Environment::Ambient;
        ambient.base_mean = 0.04;
        ambient.base_sigma = 0.065;
        ambient.blink_rate_hz = 0.18;
        ambient.openness_mean = 0.93;
        ambient.gaze = {1.3, 0.25, 0.012};

        return std::vector<EnvironmentProfile>{interactive, emotional, ambient};
    }();
    return profiles;
}

EnvironmentProfile builtin_profile(std::string_view name) {
    for (const auto& p : builtin_profiles())
        if (p.name == name) return p;
    bad_profile("unknown profile '" + std::string(name) + "'");
}

SessionLog generate_session(const EnvironmentProfile& profile, double duration_s,
                            std::uint64_t seed, std::string session_id, std::string subject) {
    check_profile(profile);
    if (!(duration_s > 0.0)) bad_profile("duration must be positive");
    if (duration_s > kMaxSessionSeconds) bad_profile("duration exceeds session maximum");

    std::vector<StatePhase> schedule = profile.schedule;
    if (schedule.empty()) schedule.push_back({duration_s, "Neutral"});
    double total = 0.0;
    for (const auto& ph : schedule) {
        if (!(ph.seconds > 0.0)) bad_profile("schedule phase with non-positive duration");
        if (ph.state.empty()) bad_profile("schedule phase with empty state");
        total += ph.seconds;
    }
    if (std::abs(total - duration_s) > 1e-6 * std::max(1.0, duration_s))
        bad_profile("schedule covers " + canon::num(total) + " s, session lasts " +
                    canon::num(duration_s) + " s");

    const auto& chans = generated_channels();
    std::vector<Phase> phases;
    double t_acc = 0.0;
    for (const auto& ph : schedule) {
        Phase phase;
        t_acc += ph.seconds;
        phase.t_end = t_acc;
        phase.state = ph.state;
        phase.params = scaled_state_params(ph.state, profile.separation);
        phase.mu.reserve(chans.size());
        for (ChannelId ch : chans) {
            ChannelStats st = stats_for(profile, ch);
            double mu = st.mean +
                        profile.separation * state_offset(ph.state, channel_name(ch)) +
                        bias_for(profile, ch);
            phase.mu.push_back(clip01(mu));
        }
        phases.push_back(std::move(phase));
    }

    SessionLog s;
    s.session_id = session_id.empty()
                       ? profile.name + "-" + std::to_string(seed)
                       : std::move(session_id);
    s.environment = profile.environment;
    s.subject = std::move(subject);
    s.meta.expr_hz = kExprHz;
    s.meta.gaze_hz = kGazeHz;

    auto phase_at = [&](double t, std::size_t& cursor) -> const Phase& {
        while (cursor + 1 < phases.size() && t >= phases[cursor].t_end) ++cursor;
        return phases[cursor];
    };

    // Expression stream: mean-reverting walk per channel.
    {
        Rng rng(derive_seed(seed, 0));
        const double dt = 1.0 / kExprHz;
        const double sqrt_dt = std::sqrt(dt);
        std::size_t cursor = 0;
        std::vector<double> x = phases[0].mu;
        std::vector<ChannelStats> st;
        st.reserve(chans.size());
        for (ChannelId ch : chans) st.push_back(stats_for(profile, ch));

        // The final frame lands on t == duration when the grid allows it, so
        // the last window of a schedule-aligned session counts as complete.
        auto n_frames = static_cast<std::size_t>(duration_s * kExprHz + 1e-9) + 1;
        s.expression_stream.reserve(n_frames);
        for (std::size_t k = 0; k < n_frames; ++k) {
            double t = static_cast<double>(k) / kExprHz;
            const Phase& ph = phase_at(t, cursor);
            ExpressionFrame f;
            f.timestamp = t;
            f.weights.reserve(chans.size());
            for (std::size_t c = 0; c < chans.size(); ++c) {
                x[c] += profile.reversion_rate * (ph.mu[c] - x[c]) * dt +
                        st[c].sigma * sqrt_dt * rng.normal();
                f.weights.emplace_back(chans[c], clip01(x[c]));
            }
            s.expression_stream.push_back(std::move(f));
        }
    }

    // Gaze stream: fixation/saccade alternation plus blink events.
    {
        Rng rng(derive_seed(seed, 1));
        const double dt = 1.0 / kGazeHz;
        std::size_t cursor = 0;
        double az = 0.0, el = 0.0;
        double dwell_left = 0.0;
        double blink_left = 0.0;

        auto n_frames = static_cast<std::size_t>(duration_s * kGazeHz + 1e-9) + 1;
        s.gaze_stream.reserve(n_frames);
        for (std::size_t k = 0; k < n_frames; ++k) {
            double t = static_cast<double>(k) / kGazeHz;
            const Phase& ph = phase_at(t, cursor);
            const StateParams& sp = ph.params;

            if (dwell_left <= 0.0) {
                double spread = profile.gaze.spread_rad * sp.spread_mult;
                az = sp.center_az + rng.uniform(-spread, spread);
                el = sp.center_el + rng.uniform(-spread, spread) * 0.5;
                double dwell = rng.exponential(profile.gaze.fixation_dwell_s * sp.dwell_mult);
                dwell_left = std::clamp(dwell, 0.08, 8.0);
            }
            dwell_left -= dt;

            GazeFrame g;
            g.timestamp = t;
            double a = az + rng.normal(0.0, profile.gaze.jitter_rad);
            double e = el + rng.normal(0.0, profile.gaze.jitter_rad);
            double x = std::sin(a) * std::cos(e);
            double y = std::sin(e);
            double z = std::cos(a) * std::cos(e);
            double norm = std::sqrt(x * x + y * y + z * z);
            g.dir[0] = x / norm;
            g.dir[1] = y / norm;
            g.dir[2] = z / norm;

            double open_target = clip01(profile.openness_mean + sp.openness_delta);
            g.openness_l = clip01(open_target + rng.normal(0.0, kOpennessNoise));
            g.openness_r = clip01(open_target + rng.normal(0.0, kOpennessNoise));

            g.blink = false;
            if (blink_left <= 0.0) {
                if (rng.bernoulli(profile.blink_rate_hz * sp.blink_mult * dt)) {
                    g.blink = true;
                    blink_left = kBlinkDipSeconds;
                }
            }
            if (blink_left > 0.0) {
                g.openness_l *= kBlinkDipFactor;
                g.openness_r *= kBlinkDipFactor;
                blink_left -= dt;
            }
            s.gaze_stream.push_back(g);
        }
    }

    auto n_windows = static_cast<std::size_t>(duration_s / profile.label_window_s + 1e-9);
    std::size_t cursor = 0;
    for (std::size_t w = 0; w < n_windows; ++w) {
        double mid = (static_cast<double>(w) + 0.5) * profile.label_window_s;
        s.labels.push_back({w, phase_at(mid, cursor).state});
    }

    s.validate();
    return s;
}

std::vector<std::size_t> planned_class_counts(const DatasetSpec& spec) {
    const std::size_t k = spec.label_set.size();
    if (k == 0) throw Error(ErrorCode::InfeasibleSpec, "empty label set");
    if (spec.n_samples < k)
        throw Error(ErrorCode::InfeasibleSpec,
                    "need at least one window per label, got " +
                        std::to_string(spec.n_samples) + " for " + std::to_string(k) +
                        " labels");
    if (!spec.class_counts.empty()) {
        if (spec.class_counts.size() != k)
            throw Error(ErrorCode::InfeasibleSpec, "class_counts size mismatch");
        std::size_t sum = 0;
        for (std::size_t c : spec.class_counts) {
            if (c == 0) throw Error(ErrorCode::InfeasibleSpec, "class_counts entry is zero");
            sum += c;
        }
        if (sum != spec.n_samples)
            throw Error(ErrorCode::InfeasibleSpec, "class_counts do not sum to n_samples");
        return spec.class_counts;
    }
    std::vector<std::size_t> counts(k, spec.n_samples / k);
    for (std::size_t i = 0; i < spec.n_samples % k; ++i) ++counts[i];
    return counts;
}

namespace {

void check_spec(const DatasetSpec& spec, const std::vector<EnvironmentProfile>& profiles) {
    if (profiles.empty()) throw Error(ErrorCode::InfeasibleSpec, "no environment profiles");
    if (!(spec.window_seconds > 0.0))
        throw Error(ErrorCode::InfeasibleSpec, "window_seconds must be positive");
    if (spec.windows_per_session == 0)
        throw Error(ErrorCode::InfeasibleSpec, "windows_per_session must be positive");
    if (spec.n_subjects == 0)
        throw Error(ErrorCode::InfeasibleSpec, "n_subjects must be positive");
    std::vector<std::string> sorted = spec.label_set;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error(ErrorCode::InfeasibleSpec, "duplicate label in label set");
}

std::vector<double> subject_bias_values(const DatasetSpec& spec, std::size_t subject_idx) {
    Rng rng(derive_seed(derive_seed(spec.seed, 1), subject_idx));
    std::vector<double> bias(generated_channels().size());
    for (double& b : bias) b = rng.normal(0.0, kSubjectBiasSigma);
    return bias;
}

SessionLog generate_corpus_session(const DatasetSpec& spec,
                                   const std::vector<EnvironmentProfile>& profiles,
                                   const std::vector<std::string>& window_labels,
                                   std::size_t session_idx, std::size_t first_window) {
    std::size_t n_windows =
        std::min(spec.windows_per_session, window_labels.size() - first_window);
    EnvironmentProfile p = profiles[session_idx % profiles.size()];
    p.separation = spec.separation;
    p.label_window_s = spec.window_seconds;
    p.schedule.clear();
    for (std::size_t w = 0; w < n_windows; ++w)
        p.schedule.push_back({spec.window_seconds, window_labels[first_window + w]});

    std::size_t subject_idx = session_idx % spec.n_subjects;
    auto bias = subject_bias_values(spec, subject_idx);
    const auto& chans = generated_channels();
    p.subject_bias.clear();
    for (std::size_t c = 0; c < chans.size(); ++c) p.subject_bias.emplace_back(chans[c], bias[c]);

    double duration = static_cast<double>(n_windows) * spec.window_seconds;
    return generate_session(p, duration, derive_seed(spec.seed, 2 + session_idx),
                            "syn-" + std::to_string(spec.seed) + "-" +
                                std::to_string(session_idx),
                            "S" + std::to_string(subject_idx));
}

} // namespace

void for_each_corpus_session(const DatasetSpec& spec,
                             const std::vector<EnvironmentProfile>& profiles,
                             const std::function<void(SessionLog&&)>& sink, bool parallel) {
    check_spec(spec, profiles);
    auto counts = planned_class_counts(spec);

    std::vector<std::string> window_labels;
    window_labels.reserve(spec.n_samples);
    std::size_t idx = 0;
    const std::size_t k = spec.label_set.size();
    while (window_labels.size() < spec.n_samples) {
        while (counts[idx % k] == 0) ++idx;
        --counts[idx % k];
        window_labels.push_back(spec.label_set[idx % k]);
        ++idx;
    }

    std::size_t n_sessions =
        (spec.n_samples + spec.windows_per_session - 1) / spec.windows_per_session;

    // Chunked so memory stays bounded while sessions still generate in
    // parallel; the sink always runs in session order.
    const std::size_t chunk = std::max(1, omp_get_max_threads()) * 4u;
    std::vector<SessionLog> buf;
    std::vector<std::exception_ptr> errs;
    for (std::size_t begin = 0; begin < n_sessions; begin += chunk) {
        std::size_t end = std::min(begin + chunk, n_sessions);
        buf.assign(end - begin, SessionLog{});
        errs.assign(end - begin, nullptr);
        const auto n = static_cast<std::int64_t>(end - begin);
#pragma omp parallel for if (parallel) schedule(dynamic)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                std::size_t si = begin + static_cast<std::size_t>(i);
                buf[static_cast<std::size_t>(i)] = generate_corpus_session(
                    spec, profiles, window_labels, si, si * spec.windows_per_session);
            } catch (...) {
                errs[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (const auto& e : errs)
            if (e) std::rethrow_exception(e);
        for (auto& s : buf) sink(std::move(s));
    }
}

std::vector<SessionLog> generate_corpus(const DatasetSpec& spec,
                                        const std::vector<EnvironmentProfile>& profiles,
                                        bool parallel) {
    std::vector<SessionLog> out;
    for_each_corpus_session(
        spec, profiles, [&](SessionLog&& s) { out.push_back(std::move(s)); }, parallel);
    return out;
}

void serialize_profile(const EnvironmentProfile& p, std::ostream& out) {
    check_profile(p);
    canon::ObjectWriter w;
    w.field("base_mean", p.base_mean);
    w.field("base_sigma", p.base_sigma);
    w.field("blink_rate_hz", p.blink_rate_hz);
    std::string chans = "{";
    bool first = true;
    for (const auto& [ch, st] : p.channel_overrides) {
        if (!first) chans += ',';
        first = false;
        chans += canon::quote(std::string(channel_name(ch)));
        chans += ":[" + canon::num(st.mean) + ',' + canon::num(st.sigma) + ']';
    }
    chans += '}';
    w.raw("channels", chans);
    w.field("environment", std::string(environment_name(p.environment)));
    w.field("fixation_dwell_s", p.gaze.fixation_dwell_s);
    w.field("jitter_rad", p.gaze.jitter_rad);
    w.field("kind", "profile");
    w.field("label_window_s", p.label_window_s);
    w.field("name", p.name);
    w.field("openness_mean", p.openness_mean);
    w.field("reversion_rate", p.reversion_rate);
    std::string sched = "[";
    for (std::size_t i = 0; i < p.schedule.size(); ++i) {
        if (i) sched += ',';
        sched += "{\"seconds\":" + canon::num(p.schedule[i].seconds) +
                 ",\"state\":" + canon::quote(p.schedule[i].state) + '}';
    }
    sched += ']';
    w.raw("schedule", sched);
    w.field("separation", p.separation);
    w.field("spread_rad", p.gaze.spread_rad);
    w.field("v", REGISTRY_VERSION);
    out << w.finish() << '\n';
}

EnvironmentProfile parse_profile(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) break;
    }
    if (line.empty()) bad_profile("empty profile file");

    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) bad_profile("profile line is not a JSON object");
    if (j.value("kind", "") != "profile") bad_profile("missing kind:profile");

    static const char* known[] = {"base_mean",    "base_sigma",       "blink_rate_hz",
                                  "channels",     "environment",      "fixation_dwell_s",
                                  "jitter_rad",   "kind",             "label_window_s",
                                  "name",         "openness_mean",    "reversion_rate",
                                  "schedule",     "separation",       "spread_rad",
                                  "v"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = std::any_of(std::begin(known), std::end(known),
                              [&](const char* k) { return it.key() == k; });
        if (!ok) bad_profile("unknown profile key '" + it.key() + "'");
    }

    EnvironmentProfile p;
    try {
        p.name = j.value("name", std::string("custom"));
        if (auto env = parse_environment(j.value("environment", std::string("Ambient"))))
            p.environment = *env;
        else
            bad_profile("unknown environment");
        p.base_mean = j.value("base_mean", p.base_mean);
        p.base_sigma = j.value("base_sigma", p.base_sigma);
        p.blink_rate_hz = j.value("blink_rate_hz", p.blink_rate_hz);
        p.openness_mean = j.value("openness_mean", p.openness_mean);
        p.reversion_rate = j.value("reversion_rate", p.reversion_rate);
        p.separation = j.value("separation", p.separation);
        p.label_window_s = j.value("label_window_s", p.label_window_s);
        p.gaze.fixation_dwell_s = j.value("fixation_dwell_s", p.gaze.fixation_dwell_s);
        p.gaze.spread_rad = j.value("spread_rad", p.gaze.spread_rad);
        p.gaze.jitter_rad = j.value("jitter_rad", p.gaze.jitter_rad);
        if (j.contains("channels")) {
            const json& ov = j["channels"];
            if (!ov.is_object()) bad_profile("'channels' must be an object");
            for (auto it = ov.begin(); it != ov.end(); ++it) {
                auto ch = find_channel(it.key());
                if (!ch || channel_kind(*ch) != ChannelKind::Expression)
                    throw Error(ErrorCode::UnknownChannel,
                                "profile override for unknown channel '" + it.key() + "'");
                const json& arr = it.value();
                if (!arr.is_array() || arr.size() != 2)
                    bad_profile("channel override must be [mean, sigma]");
                p.channel_overrides.emplace_back(
                    *ch, ChannelStats{arr[0].get<double>(), arr[1].get<double>()});
            }
            std::sort(p.channel_overrides.begin(), p.channel_overrides.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
        }
        if (j.contains("schedule")) {
            const json& sched = j["schedule"];
            if (!sched.is_array()) bad_profile("'schedule' must be an array");
            for (const json& ph : sched) {
                if (!ph.is_object() || !ph.contains("seconds") || !ph.contains("state"))
                    bad_profile("schedule phase needs 'seconds' and 'state'");
                p.schedule.push_back(
                    {ph["seconds"].get<double>(), ph["state"].get<std::string>()});
            }
        }
    } catch (const json::exception& e) {
        bad_profile(std::string("bad profile field: ") + e.what());
    }
    check_profile(p);
    return p;
}

} // namespace mg
