// synth.hpp: labeled synthetic session generator.
//
// Expression channels follow mean-reverting noise around state-dependent
// targets; gaze alternates fixations and saccades with Bernoulli-per-frame
// blink events. A separation knob in [0,1] scales every state-dependent
// difference, so separation 0 makes all states statistically identical.
// Everything is a pure function of (profile, duration, seed).

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "metaguard/session.hpp"

namespace mg {

struct StatePhase {
    double seconds = 0.0;
    std::string state;
};

struct ChannelStats {
    double mean = 0.0;
    double sigma = 0.0;
};

struct GazeDynamics {
    double fixation_dwell_s = 0.8; // mean fixation duration before a saccade
    double spread_rad = 0.35;      // angular radius for new fixation targets
    double jitter_rad = 0.015;     // per-frame angular noise within a fixation

    double saccade_rate_hz() const { return 1.0 / fixation_dwell_s; }
};

struct EnvironmentProfile {
    std::string name; // CLI identifier, e.g. "ambient"
    Environment environment = Environment::Ambient;

    double base_mean = 0.05;  // resting activation of generated channels
    double base_sigma = 0.08; // noise scale of the mean-reverting process
    double reversion_rate = 1.5;
    // Per-channel overrides of {base_mean, base_sigma}; sorted by ChannelId.
    std::vector<std::pair<ChannelId, ChannelStats>> channel_overrides;

    double blink_rate_hz = 0.2;
    double openness_mean = 0.92;
    GazeDynamics gaze;

    double separation = 0.7;
    // Persistent per-channel bias, used for synthetic subject identity.
    std::vector<std::pair<ChannelId, double>> subject_bias;

    // Must cover the generated duration exactly; empty means one Neutral
    // phase spanning the whole session.
    std::vector<StatePhase> schedule;

    // Window length used when emitting ground-truth labels.
    double label_window_s = 10.0;
};

const std::vector<EnvironmentProfile>& builtin_profiles();
EnvironmentProfile builtin_profile(std::string_view name); // InvalidProfile if unknown

// The expression channels the generator animates.
const std::vector<ChannelId>& generated_channels();

SessionLog generate_session(const EnvironmentProfile& profile, double duration_s,
                            std::uint64_t seed, std::string session_id = "",
                            std::string subject = "");

struct DatasetSpec {
    std::size_t n_samples = 930;
    double window_seconds = 10.0;
    std::vector<std::string> label_set = {"Neutral", "Engaged", "Stressed", "Relaxed"};
    std::uint64_t seed = 1;
    double separation = 0.7;
    std::size_t windows_per_session = 10;
    std::size_t n_subjects = 6;
    // Optional per-label window counts; empty means balanced within +-1.
    std::vector<std::size_t> class_counts;
};

// Window counts per label: the override when given, otherwise n_samples
// split evenly with the leading labels taking the remainder.
std::vector<std::size_t> planned_class_counts(const DatasetSpec& spec);

// Streams the corpus one session at a time in fixed order; sessions are
// generated in parallel chunks but handed to the sink sequentially.
void for_each_corpus_session(const DatasetSpec& spec,
                             const std::vector<EnvironmentProfile>& profiles,
                             const std::function<void(SessionLog&&)>& sink,
                             bool parallel = true);

std::vector<SessionLog> generate_corpus(const DatasetSpec& spec,
                                        const std::vector<EnvironmentProfile>& profiles,
                                        bool parallel = true);

// Profile file: one JSONL line, {"kind":"profile",...}.
void serialize_profile(const EnvironmentProfile& p, std::ostream& out);
EnvironmentProfile parse_profile(std::istream& in);

} // namespace mg
