// features.hpp: windowed feature extraction, derived metrics, cue tagging.
//
// A session is cut into fixed-length windows; each complete window yields a
// pooled value per channel, a 14-entry classifier input vector, and four
// derived interpretability metrics. Trailing partial windows are dropped.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "metaguard/session.hpp"

namespace mg {

inline constexpr double kDefaultWindowSeconds = 10.0;
inline constexpr std::size_t kFeatureDim = 14;

struct FeatureVector {
    std::size_t window_index = 0;
    std::array<double, kFeatureDim> values{}; // raw values in [0,1]
    bool normalized = false;
};

struct DerivedMetrics {
    double blink_rate = 0.0;          // events per minute
    double fixation_entropy = 0.0;    // bits, in [0, 3] for the 8-sector grid
    double expression_intensity = 0.0;
    double symmetry = 0.0;            // mean |left - right| over paired channels
};

// One window's pooled channel values. Most channels carry the mean of their
// samples over the window; BlinkEvent carries the event count; the four
// derived channels carry the DerivedMetrics and are always present. A
// channel with no samples in the window is absent, not zero.
struct WindowView {
    std::size_t window_index = 0;
    double start_time = 0.0;
    double window_seconds = kDefaultWindowSeconds;
    std::vector<std::pair<ChannelId, double>> values; // sorted by ChannelId
    DerivedMetrics derived;
    std::string label; // from the session's label records; empty when none

    const double* value(ChannelId ch) const;
    double value_or(ChannelId ch, double fallback) const;
    FeatureVector feature_vector() const; // absent feature channels read as 0
};

inline constexpr std::size_t kFixationSectors = 8; // 4 azimuth x 2 elevation

// Cuts the session into complete windows and pools every channel. Gaze
// frames feed the raw gaze channels and synthesize expression-space samples:
// EyesClosedX = 1 - openness_x, EyesLookRight/Left = (+-x+1)/2,
// EyesLookUp/Down = (+-y+1)/2, identical for the L and R variants of each
// direction. Expression frames contribute their reported weights; both
// sources pool together. Throws SessionTooShort when no window completes.
std::vector<WindowView> window_views(const SessionLog& s,
                                     double window_seconds = kDefaultWindowSeconds);

std::vector<FeatureVector> window_features(const SessionLog& s,
                                           double window_seconds = kDefaultWindowSeconds);

// Metrics for one window; throws WindowOutOfRange past the last complete
// window.
DerivedMetrics derived_metrics(const SessionLog& s, std::size_t window_index,
                               double window_seconds = kDefaultWindowSeconds);

// Table of feature families and the psychological reading attached to each.
struct CueEntry {
    std::string_view family; // channel-name prefix defining membership
    std::string_view meaning;
};
const std::vector<CueEntry>& cue_table();

struct CompositePattern {
    std::string_view name;
    std::array<std::string_view, 3> constituents; // channel-name prefixes
};
const std::vector<CompositePattern>& composite_patterns();

struct CueAnnotation {
    std::size_t window_index = 0;
    std::vector<CueEntry> cues; // families whose member mean exceeds threshold
    std::vector<std::string_view> composites;
};

// Families fire when the mean of their member channels (within the 14-entry
// vector) strictly exceeds the threshold; a composite fires when every
// constituent family has at least one member above it. Monotone in
// threshold.
CueAnnotation annotate_cues(const FeatureVector& fv, double threshold = 0.5);

// Labeled feature rows, the classifier's corpus format.
struct LabeledWindows {
    std::vector<std::array<double, kFeatureDim>> x;
    std::vector<std::string> y;

    std::size_t size() const { return x.size(); }
};

// Extracts and labels windows from whole sessions; windows without a label
// record are skipped.
LabeledWindows labeled_windows(const std::vector<SessionLog>& sessions,
                               double window_seconds = kDefaultWindowSeconds);

// CSV: header of the 14 channel names + "label", one row per window. The
// label cell may be empty on dump; read_features_csv requires it.
void write_features_csv(const LabeledWindows& rows, std::ostream& out);
LabeledWindows read_features_csv(std::istream& in);

} // namespace mg
