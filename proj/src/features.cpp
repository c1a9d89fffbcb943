#include "metaguard/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "metaguard/canon.hpp"
#include "metaguard/error.hpp"

namespace mg {

namespace {

struct Pool {
    double sum = 0.0;
    std::size_t n = 0;

    void add(double v) {
        sum += v;
        ++n;
    }
    double mean() const { return n ? sum / n : 0.0; }
};

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::size_t gaze_sector(const double dir[3]) {
    // Azimuth quadrant from atan2(x, z), elevation split on the sign of y.
    double az = std::atan2(dir[0], dir[2]);
    constexpr double pi = 3.14159265358979323846;
    auto azbin = static_cast<std::size_t>((az + pi) / (pi / 2.0));
    if (azbin > 3) azbin = 3;
    std::size_t elev = dir[1] >= 0.0 ? 1 : 0;
    return elev * 4 + azbin;
}

double shannon_bits(const std::array<std::size_t, kFixationSectors>& hist) {
    std::size_t total = 0;
    for (std::size_t c : hist) total += c;
    if (total == 0) return 0.0;
    double h = 0.0;
    for (std::size_t c : hist) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

} // namespace

const double* WindowView::value(ChannelId ch) const {
    auto it = std::lower_bound(values.begin(), values.end(), ch,
                               [](const auto& p, ChannelId c) { return p.first < c; });
    if (it == values.end() || it->first != ch) return nullptr;
    return &it->second;
}

double WindowView::value_or(ChannelId ch, double fallback) const {
    const double* v = value(ch);
    return v ? *v : fallback;
}

FeatureVector WindowView::feature_vector() const {
    FeatureVector fv;
    fv.window_index = window_index;
    const auto& chans = feature_channels();
    for (std::size_t i = 0; i < kFeatureDim; ++i) fv.values[i] = value_or(chans[i], 0.0);
    return fv;
}

std::vector<WindowView> window_views(const SessionLog& s, double window_seconds) {
    if (!(window_seconds > 0.0))
        throw Error(ErrorCode::SessionTooShort, "window length must be positive");
    auto count = static_cast<std::size_t>(s.duration() / window_seconds);
    if (count == 0)
        throw Error(ErrorCode::SessionTooShort,
                    "session shorter than one " + canon::num(window_seconds) + " s window");

    const std::size_t nch = registry_size();
    std::vector<std::vector<Pool>> pools(count, std::vector<Pool>(nch));
    std::vector<std::size_t> blinks(count, 0);
    std::vector<std::array<std::size_t, kFixationSectors>> sectors(count);
    for (auto& h : sectors) h.fill(0);
    std::vector<Pool> intensity(count);

    auto window_of = [&](double t) -> std::size_t {
        return static_cast<std::size_t>(t / window_seconds);
    };

    for (const auto& f : s.expression_stream) {
        std::size_t w = window_of(f.timestamp);
        if (w >= count) break;
        for (const auto& [ch, v] : f.weights) {
            pools[w][ch.idx].add(v);
            intensity[w].add(v);
        }
    }

    const ChannelId look_chans[4][2] = {
        {*find_channel("EyesLookRightL"), *find_channel("EyesLookRightR")},
        {*find_channel("EyesLookLeftL"), *find_channel("EyesLookLeftR")},
        {*find_channel("EyesLookUpL"), *find_channel("EyesLookUpR")},
        {*find_channel("EyesLookDownL"), *find_channel("EyesLookDownR")},
    };

    for (const auto& g : s.gaze_stream) {
        std::size_t w = window_of(g.timestamp);
        if (w >= count) break;
        auto& p = pools[w];
        p[ch::gaze_dir_x().idx].add(g.dir[0]);
        p[ch::gaze_dir_y().idx].add(g.dir[1]);
        p[ch::gaze_dir_z().idx].add(g.dir[2]);
        p[ch::eye_openness_l().idx].add(g.openness_l);
        p[ch::eye_openness_r().idx].add(g.openness_r);
        p[ch::blink_event().idx].add(g.blink ? 1.0 : 0.0);
        if (g.blink) ++blinks[w];
        ++sectors[w][gaze_sector(g.dir)];

        p[ch::eyes_closed_l().idx].add(clip01(1.0 - g.openness_l));
        p[ch::eyes_closed_r().idx].add(clip01(1.0 - g.openness_r));
        double look[4] = {clip01((g.dir[0] + 1.0) / 2.0), clip01((1.0 - g.dir[0]) / 2.0),
                          clip01((g.dir[1] + 1.0) / 2.0), clip01((1.0 - g.dir[1]) / 2.0)};
        for (int d = 0; d < 4; ++d)
            for (int side = 0; side < 2; ++side) p[look_chans[d][side].idx].add(look[d]);
    }

    std::vector<WindowView> out(count);
    for (std::size_t w = 0; w < count; ++w) {
        WindowView& view = out[w];
        view.window_index = w;
        view.start_time = static_cast<double>(w) * window_seconds;
        view.window_seconds = window_seconds;

        view.derived.blink_rate = 60.0 * static_cast<double>(blinks[w]) / window_seconds;
        view.derived.fixation_entropy = shannon_bits(sectors[w]);
        view.derived.expression_intensity = intensity[w].mean();
        double diff_sum = 0.0;
        const auto& lefts = left_pair_channels();
        for (ChannelId l : lefts) {
            ChannelId r{static_cast<std::uint16_t>(channel_info(l).pair_partner)};
            diff_sum += std::abs(pools[w][l.idx].mean() - pools[w][r.idx].mean());
        }
        view.derived.symmetry = lefts.empty() ? 0.0 : diff_sum / static_cast<double>(lefts.size());

        for (std::size_t c = 0; c < nch; ++c) {
            const Pool& p = pools[w][c];
            if (p.n == 0) continue;
            ChannelId id{static_cast<std::uint16_t>(c)};
            double v = id == ch::blink_event() ? p.sum : p.mean();
            view.values.emplace_back(id, v);
        }
        view.values.emplace_back(ch::blink_rate(), view.derived.blink_rate);
        view.values.emplace_back(ch::fixation_entropy(), view.derived.fixation_entropy);
        view.values.emplace_back(ch::expression_intensity(), view.derived.expression_intensity);
        view.values.emplace_back(ch::activation_symmetry(), view.derived.symmetry);
        // Derived channels occupy the registry tail, so values stays sorted.
    }

    for (const auto& l : s.labels)
        if (l.window_index < count) out[l.window_index].label = l.state;
    return out;
}

std::vector<FeatureVector> window_features(const SessionLog& s, double window_seconds) {
    auto views = window_views(s, window_seconds);
    std::vector<FeatureVector> out;
    out.reserve(views.size());
    for (const auto& v : views) out.push_back(v.feature_vector());
    return out;
}

DerivedMetrics derived_metrics(const SessionLog& s, std::size_t window_index,
                               double window_seconds) {
    auto views = window_views(s, window_seconds);
    if (window_index >= views.size())
        throw Error(ErrorCode::WindowOutOfRange,
                    "window " + std::to_string(window_index) + " of " +
                        std::to_string(views.size()));
    return views[window_index].derived;
}

const std::vector<CueEntry>& cue_table() {
    static const std::vector<CueEntry> table = {
        {"BrowLowerer", "Confusion, focus"},
        {"InnerBrowRaiser", "Sadness, surprise"},
        {"CheekRaiser", "Genuine smile, joy"},
        {"EyesClosed", "Fatigue, disengagement"},
        {"EyesLook", "Attention, curiosity"},
        {"JawDrop", "Shock, speech readiness"},
        {"LipCornerPuller", "Positivity, friendliness"},
        {"LipPucker", "Doubt, contemplation"},
        {"LidTightener", "Irritation, tension"},
        {"UpperLipRaiser", "Disgust, disapproval"},
        {"TongueTip", "Speaking intent, discomfort"},
    };
    return table;
}

const std::vector<CompositePattern>& composite_patterns() {
    static const std::vector<CompositePattern> table = {
        {"EmotionalReaction", {"InnerBrowRaiser", "CheekRaiser", "EyesClosed"}},
        {"HesitationPressure", {"LipPucker", "JawDrop", "LidTightener"}},
        {"CognitiveEngagement", {"EyesLookRight", "JawDrop", "TongueTip"}},
    };
    return table;
}

namespace {

bool is_member(std::string_view channel, std::string_view family) {
    return channel.substr(0, family.size()) == family;
}

} // namespace

CueAnnotation annotate_cues(const FeatureVector& fv, double threshold) {
    CueAnnotation out;
    out.window_index = fv.window_index;
    const auto& chans = feature_channels();

    for (const CueEntry& cue : cue_table()) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            if (!is_member(channel_name(chans[i]), cue.family)) continue;
            sum += fv.values[i];
            ++n;
        }
        if (n > 0 && sum / static_cast<double>(n) > threshold) out.cues.push_back(cue);
    }

    for (const CompositePattern& pat : composite_patterns()) {
        bool all = true;
        for (std::string_view family : pat.constituents) {
            bool any = false;
            for (std::size_t i = 0; i < kFeatureDim && !any; ++i)
                any = is_member(channel_name(chans[i]), family) && fv.values[i] > threshold;
            if (!any) {
                all = false;
                break;
            }
        }
        if (all) out.composites.push_back(pat.name);
    }
    return out;
}

LabeledWindows labeled_windows(const std::vector<SessionLog>& sessions, double window_seconds) {
    LabeledWindows out;
    for (const SessionLog& s : sessions) {
        for (const WindowView& v : window_views(s, window_seconds)) {
            if (v.label.empty()) continue;
            out.x.push_back(v.feature_vector().values);
            out.y.push_back(v.label);
        }
    }
    return out;
}

void write_features_csv(const LabeledWindows& rows, std::ostream& out) {
    const auto& chans = feature_channels();
    for (std::size_t i = 0; i < kFeatureDim; ++i) out << channel_name(chans[i]) << ',';
    out << "label\n";
    for (std::size_t r = 0; r < rows.x.size(); ++r) {
        for (double v : rows.x[r]) out << canon::num(v) << ',';
        out << (r < rows.y.size() ? rows.y[r] : std::string()) << '\n';
    }
}

LabeledWindows read_features_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::MalformedRecord, "empty feature file, expected CSV header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::string expected;
    const auto& chans = feature_channels();
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        expected += channel_name(chans[i]);
        expected += ',';
    }
    expected += "label";
    if (line != expected)
        throw Error(ErrorCode::MalformedRecord, "feature CSV header mismatch");

    LabeledWindows out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::array<double, kFeatureDim> row{};
        std::stringstream ss(line);
        std::string cell;
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            if (!std::getline(ss, cell, ','))
                throw Error(ErrorCode::MalformedRecord,
                            "line " + std::to_string(line_no) + ": expected 15 cells");
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != cell.size() || cell.empty())
                throw Error(ErrorCode::MalformedRecord,
                            "line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            row[i] = v;
        }
        std::string label;
        std::getline(ss, label);
        if (label.empty())
            throw Error(ErrorCode::MalformedRecord,
                        "line " + std::to_string(line_no) + ": missing label");
        out.x.push_back(row);
        out.y.push_back(label);
    }
    return out;
}

} // namespace mg
