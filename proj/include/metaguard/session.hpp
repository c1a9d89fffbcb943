// session.hpp: sensor data model, session file format, and stream replay.
//
// A session is two time-ordered streams (expression weights at ~30 Hz, gaze
// at ~90 Hz) plus optional per-window state labels. On disk it is canonical
// JSONL: a header line followed by one line per frame/label. Parsing
// validates every invariant; a SessionLog that exists is a valid one.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "metaguard/channels.hpp"
#include "metaguard/error.hpp"

namespace mg {

enum class Environment : std::uint8_t { Interactive, Emotional, Ambient };

std::string_view environment_name(Environment e);
std::optional<Environment> parse_environment(std::string_view name);

// One expression sample: channel -> weight in [0,1]. Weights are kept as a
// sorted (ChannelId, value) list; frames carry only the channels the source
// reported, absence means "not sampled", not zero.
struct ExpressionFrame {
    double timestamp = 0.0;
    std::vector<std::pair<ChannelId, double>> weights;

    const double* weight(ChannelId ch) const;
};

struct GazeFrame {
    double timestamp = 0.0;
    double dir[3] = {0.0, 0.0, 1.0}; // unit vector; +x right, +y up, +z forward
    double openness_l = 1.0;
    double openness_r = 1.0;
    bool blink = false; // true only on the onset frame of a blink event
};

struct WindowLabel {
    std::size_t window_index = 0;
    std::string state;
};

struct SessionMeta {
    double gaze_hz = 90.0;
    double expr_hz = 30.0;
};

struct SessionLog {
    std::string session_id;
    Environment environment = Environment::Ambient;
    std::string subject; // optional; empty when unknown
    SessionMeta meta;
    std::vector<ExpressionFrame> expression_stream;
    std::vector<GazeFrame> gaze_stream;
    std::vector<WindowLabel> labels;

    // Last timestamp across both streams; 0 for an empty session.
    double duration() const;

    // Throws on any invariant violation. parse_session() and the synthetic
    // generator both funnel through this.
    void validate() const;
};

// Sessions longer than this are rejected: beyond it the canonical
// 6-significant-digit timestamp encoding can no longer order frames.
inline constexpr double kMaxSessionSeconds = 1e6;

SessionLog parse_session(std::istream& in);
SessionLog parse_session_string(const std::string& text);

// Multiple sessions concatenated in one stream; each header line starts a
// new session.
std::vector<SessionLog> parse_corpus(std::istream& in);

void serialize_session(const SessionLog& s, std::ostream& out);
std::string serialize_session_string(const SessionLog& s);

// A frame tagged with its source stream, as delivered by replay().
struct TaggedFrame {
    enum class Source : std::uint8_t { Gaze, Expression } source;
    std::size_t index; // position within its stream
    double timestamp;
};

// Emits all frames in global timestamp order; equal timestamps deliver gaze
// before expression. When realtime is set, emission is paced to the wall
// clock; otherwise it runs as fast as possible. Single producer: callbacks
// arrive in order, on the calling thread.
void replay(const SessionLog& s, bool realtime,
            const std::function<void(const TaggedFrame&)>& sink);

// Convenience: the full replay order without pacing.
std::vector<TaggedFrame> replay_order(const SessionLog& s);

} // namespace mg
