#include "metaguard/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "metaguard/canon.hpp"

namespace mg {

using nlohmann::json;

std::string_view environment_name(Environment e) {
    switch (e) {
    case Environment::Interactive: return "Interactive";
    case Environment::Emotional: return "Emotional";
    case Environment::Ambient: return "Ambient";
    }
    return "Ambient";
}

std::optional<Environment> parse_environment(std::string_view name) {
    if (name == "Interactive") return Environment::Interactive;
    if (name == "Emotional") return Environment::Emotional;
    if (name == "Ambient") return Environment::Ambient;
    return std::nullopt;
}

const double* ExpressionFrame::weight(ChannelId ch) const {
    auto it = std::lower_bound(weights.begin(), weights.end(), ch,
                               [](const auto& p, ChannelId c) { return p.first < c; });
    if (it == weights.end() || it->first != ch) return nullptr;
    return &it->second;
}

double SessionLog::duration() const {
    double d = 0.0;
    if (!expression_stream.empty()) d = std::max(d, expression_stream.back().timestamp);
    if (!gaze_stream.empty()) d = std::max(d, gaze_stream.back().timestamp);
    return d;
}

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

void check_finite(double v, const char* what) {
    if (!std::isfinite(v))
        fail(ErrorCode::MalformedRecord, std::string(what) + " is not finite");
}

} // namespace

void SessionLog::validate() const {
    if (session_id.empty())
        fail(ErrorCode::MalformedRecord, "session_id is empty");
    if (!(meta.gaze_hz > 0.0) || !(meta.expr_hz > 0.0))
        fail(ErrorCode::MalformedRecord, "sample rates must be positive");

    double prev = -1.0;
    for (const auto& f : expression_stream) {
        check_finite(f.timestamp, "expression timestamp");
        if (f.timestamp < 0.0)
            fail(ErrorCode::NonMonotoneTimestamp, "negative expression timestamp");
        if (f.timestamp <= prev)
            fail(ErrorCode::NonMonotoneTimestamp,
                 "expression timestamps must be strictly increasing at t=" +
                     canon::num(f.timestamp));
        prev = f.timestamp;
        ChannelId prev_ch{static_cast<std::uint16_t>(0xffff)};
        for (const auto& [ch, w] : f.weights) {
            if (ch.idx >= registry_size() || channel_kind(ch) != ChannelKind::Expression)
                fail(ErrorCode::UnknownChannel, "non-expression channel in weight map");
            if (prev_ch.idx != 0xffff && !(prev_ch < ch))
                fail(ErrorCode::MalformedRecord, "weight map not sorted by channel");
            prev_ch = ch;
            check_finite(w, "expression weight");
            if (w < 0.0 || w > 1.0)
                fail(ErrorCode::OutOfRangeWeight,
                     std::string(channel_name(ch)) + "=" + canon::num(w) + " outside [0,1]");
        }
    }

    prev = -1.0;
    for (const auto& g : gaze_stream) {
        check_finite(g.timestamp, "gaze timestamp");
        if (g.timestamp < 0.0)
            fail(ErrorCode::NonMonotoneTimestamp, "negative gaze timestamp");
        if (g.timestamp <= prev)
            fail(ErrorCode::NonMonotoneTimestamp,
                 "gaze timestamps must be strictly increasing at t=" + canon::num(g.timestamp));
        prev = g.timestamp;
        for (double c : g.dir) check_finite(c, "gaze direction");
        double norm = std::sqrt(g.dir[0] * g.dir[0] + g.dir[1] * g.dir[1] + g.dir[2] * g.dir[2]);
        if (std::abs(norm - 1.0) > 1e-6)
            fail(ErrorCode::MalformedRecord,
                 "gaze direction not unit length (|v|=" + canon::num(norm) + ")");
        for (double o : {g.openness_l, g.openness_r}) {
            check_finite(o, "eye openness");
            if (o < 0.0 || o > 1.0)
                fail(ErrorCode::OutOfRangeWeight, "eye openness outside [0,1]");
        }
    }

    if (duration() > kMaxSessionSeconds)
        fail(ErrorCode::MalformedRecord, "session exceeds maximum duration");

    std::size_t prev_window = 0;
    bool first = true;
    for (const auto& l : labels) {
        if (l.state.empty())
            fail(ErrorCode::MalformedRecord, "empty state label");
        if (!first && l.window_index <= prev_window)
            fail(ErrorCode::MalformedRecord, "label window indices must be strictly increasing");
        prev_window = l.window_index;
        first = false;
    }
}

namespace {

[[noreturn]] void fail_line(ErrorCode code, std::size_t line, const std::string& msg) {
    fail(code, "line " + std::to_string(line) + ": " + msg);
}

double get_number(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number())
        fail_line(ErrorCode::MalformedRecord, line, std::string("missing numeric '") + key + "'");
    return it->get<double>();
}

std::string get_string(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        fail_line(ErrorCode::MalformedRecord, line, std::string("missing string '") + key + "'");
    return it->get<std::string>();
}

// Strict key-set check: every record kind has exactly its own keys, nothing
// extra, so schema drift is caught at the line it happens.
void check_keys(const json& j, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, std::size_t line) {
    for (const char* k : required)
        if (!j.contains(k))
            fail_line(ErrorCode::MalformedRecord, line, std::string("missing key '") + k + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        bool known = std::any_of(required.begin(), required.end(),
                                 [&](const char* r) { return k == r; }) ||
                     std::any_of(optional.begin(), optional.end(),
                                 [&](const char* o) { return k == o; });
        if (!known)
            fail_line(ErrorCode::MalformedRecord, line, "unexpected key '" + k + "'");
    }
}

struct LineSource {
    std::istream& in;
    std::size_t line_no = 0;
    std::string pending;
    bool has_pending = false;

    bool next(std::string& out) {
        if (has_pending) {
            out = std::move(pending);
            has_pending = false;
            return true;
        }
        while (std::getline(in, out)) {
            ++line_no;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty()) return true;
        }
        return false;
    }

    void push_back(std::string line) {
        pending = std::move(line);
        has_pending = true;
    }
};

json parse_line(const std::string& text, std::size_t line_no) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail_line(ErrorCode::MalformedRecord, line_no, "not a JSON object");
    return j;
}

SessionLog parse_one(LineSource& src, const std::string& header_text, std::size_t header_line) {
    json h = parse_line(header_text, header_line);
    check_keys(h, {"environment", "expr_hz", "gaze_hz", "session_id", "v"}, {"subject"},
               header_line);

    SessionLog s;
    if (std::int64_t v = h.at("v").is_number_integer() ? h["v"].get<std::int64_t>() : -1;
        v != REGISTRY_VERSION)
        fail_line(ErrorCode::UnsupportedVersion, header_line,
                  "unsupported format version " + h["v"].dump());
    s.session_id = get_string(h, "session_id", header_line);
    auto env = parse_environment(get_string(h, "environment", header_line));
    if (!env)
        fail_line(ErrorCode::MalformedRecord, header_line, "unknown environment");
    s.environment = *env;
    s.meta.expr_hz = get_number(h, "expr_hz", header_line);
    s.meta.gaze_hz = get_number(h, "gaze_hz", header_line);
    if (h.contains("subject")) s.subject = get_string(h, "subject", header_line);

    std::string text;
    while (src.next(text)) {
        std::size_t line = src.line_no;
        json j = parse_line(text, line);
        auto kind_it = j.find("kind");
        if (kind_it == j.end()) {
            // A header line: the next session begins here.
            src.push_back(std::move(text));
            break;
        }
        if (!kind_it->is_string())
            fail_line(ErrorCode::MalformedRecord, line, "'kind' must be a string");
        std::string kind = kind_it->get<std::string>();

        if (kind == "expr") {
            check_keys(j, {"kind", "t", "w"}, {}, line);
            ExpressionFrame f;
            f.timestamp = get_number(j, "t", line);
            const json& w = j.at("w");
            if (!w.is_object())
                fail_line(ErrorCode::MalformedRecord, line, "'w' must be an object");
            for (auto it = w.begin(); it != w.end(); ++it) {
                auto ch = find_channel(it.key());
                if (!ch || channel_kind(*ch) != ChannelKind::Expression)
                    fail_line(ErrorCode::UnknownChannel, line,
                              "unknown expression channel '" + it.key() + "'");
                if (!it.value().is_number())
                    fail_line(ErrorCode::MalformedRecord, line, "weight must be a number");
                f.weights.emplace_back(*ch, it.value().get<double>());
            }
            // nlohmann object iteration is key-sorted, which matches the
            // registry's name order, so the list is already ChannelId-sorted.
            s.expression_stream.push_back(std::move(f));
        } else if (kind == "gaze") {
            check_keys(j, {"blink", "dir", "kind", "open", "t"}, {}, line);
            GazeFrame g;
            g.timestamp = get_number(j, "t", line);
            const json& dir = j.at("dir");
            if (!dir.is_array() || dir.size() != 3)
                fail_line(ErrorCode::MalformedRecord, line, "'dir' must be a 3-array");
            for (int i = 0; i < 3; ++i) {
                if (!dir[i].is_number())
                    fail_line(ErrorCode::MalformedRecord, line, "'dir' entries must be numbers");
                g.dir[i] = dir[i].get<double>();
            }
            const json& open = j.at("open");
            if (!open.is_array() || open.size() != 2 || !open[0].is_number() ||
                !open[1].is_number())
                fail_line(ErrorCode::MalformedRecord, line, "'open' must be a 2-array of numbers");
            g.openness_l = open[0].get<double>();
            g.openness_r = open[1].get<double>();
            if (!j.at("blink").is_boolean())
                fail_line(ErrorCode::MalformedRecord, line, "'blink' must be a boolean");
            g.blink = j["blink"].get<bool>();
            s.gaze_stream.push_back(g);
        } else if (kind == "label") {
            check_keys(j, {"kind", "state", "window"}, {}, line);
            WindowLabel l;
            const json& w = j.at("window");
            if (!w.is_number_integer() || w.get<std::int64_t>() < 0)
                fail_line(ErrorCode::MalformedRecord, line, "'window' must be a non-negative integer");
            l.window_index = w.get<std::size_t>();
            l.state = get_string(j, "state", line);
            s.labels.push_back(std::move(l));
        } else {
            fail_line(ErrorCode::MalformedRecord, line, "unknown record kind '" + kind + "'");
        }
    }

    try {
        s.validate();
    } catch (const Error& e) {
        throw Error(e.code(), "session '" + s.session_id + "': " + e.what());
    }
    return s;
}

} // namespace

SessionLog parse_session(std::istream& in) {
    LineSource src{in, 0, {}, false};
    std::string text;
    if (!src.next(text))
        fail(ErrorCode::MalformedRecord, "empty input, expected a session header");
    SessionLog s = parse_one(src, text, src.line_no);
    if (src.next(text))
        fail_line(ErrorCode::MalformedRecord, src.line_no,
                  "trailing content after a single session");
    return s;
}

SessionLog parse_session_string(const std::string& text) {
    std::istringstream in(text);
    return parse_session(in);
}

std::vector<SessionLog> parse_corpus(std::istream& in) {
    LineSource src{in, 0, {}, false};
    std::vector<SessionLog> out;
    std::string text;
    while (src.next(text)) out.push_back(parse_one(src, text, src.line_no));
    return out;
}

void serialize_session(const SessionLog& s, std::ostream& out) {
    s.validate();
    {
        canon::ObjectWriter w;
        w.field("environment", std::string(environment_name(s.environment)));
        w.field("expr_hz", s.meta.expr_hz);
        w.field("gaze_hz", s.meta.gaze_hz);
        w.field("session_id", s.session_id);
        if (!s.subject.empty()) w.field("subject", s.subject);
        w.field("v", REGISTRY_VERSION);
        out << w.finish() << '\n';
    }

    for (const TaggedFrame& tf : replay_order(s)) {
        canon::ObjectWriter w;
        if (tf.source == TaggedFrame::Source::Gaze) {
            const GazeFrame& g = s.gaze_stream[tf.index];
            w.field("blink", g.blink);
            w.raw("dir", canon::array_of_nums({g.dir[0], g.dir[1], g.dir[2]}));
            w.field("kind", "gaze");
            w.raw("open", canon::array_of_nums({g.openness_l, g.openness_r}));
            w.field("t", g.timestamp);
        } else {
            const ExpressionFrame& f = s.expression_stream[tf.index];
            w.field("kind", "expr");
            w.field("t", f.timestamp);
            std::string wmap = "{";
            bool first = true;
            for (const auto& [ch, v] : f.weights) {
                if (!first) wmap += ',';
                first = false;
                wmap += canon::quote(std::string(channel_name(ch)));
                wmap += ':';
                wmap += canon::num(v);
            }
            wmap += '}';
            w.raw("w", wmap);
        }
        out << w.finish() << '\n';
    }

    for (const auto& l : s.labels) {
        canon::ObjectWriter w;
        w.field("kind", "label");
        w.field("state", l.state);
        w.field("window", l.window_index);
        out << w.finish() << '\n';
    }
}

std::string serialize_session_string(const SessionLog& s) {
    std::ostringstream out;
    serialize_session(s, out);
    return out.str();
}

std::vector<TaggedFrame> replay_order(const SessionLog& s) {
    std::vector<TaggedFrame> order;
    order.reserve(s.gaze_stream.size() + s.expression_stream.size());
    std::size_t gi = 0, ei = 0;
    while (gi < s.gaze_stream.size() || ei < s.expression_stream.size()) {
        bool take_gaze;
        if (gi == s.gaze_stream.size()) {
            take_gaze = false;
        } else if (ei == s.expression_stream.size()) {
            take_gaze = true;
        } else {
            // Ties deliver gaze first: it is the higher-rate stream and the
            // expression sample is treated as the freshest state at t.
            take_gaze = s.gaze_stream[gi].timestamp <= s.expression_stream[ei].timestamp;
        }
        if (take_gaze) {
            order.push_back({TaggedFrame::Source::Gaze, gi, s.gaze_stream[gi].timestamp});
            ++gi;
        } else {
            order.push_back(
                {TaggedFrame::Source::Expression, ei, s.expression_stream[ei].timestamp});
            ++ei;
        }
    }
    return order;
}

void replay(const SessionLog& s, bool realtime,
            const std::function<void(const TaggedFrame&)>& sink) {
    auto order = replay_order(s);
    if (!realtime) {
        for (const auto& tf : order) sink(tf);
        return;
    }
    auto start = std::chrono::steady_clock::now();
    for (const auto& tf : order) {
        auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                               std::chrono::duration<double>(tf.timestamp));
        std::this_thread::sleep_until(due);
        sink(tf);
    }
}

} // namespace mg
