#include "metaguard/channels.hpp"

#include <unordered_map>

namespace mg {

namespace {

struct RawEntry {
    std::string_view name;
    ChannelKind kind;
    ChannelGroup group;
    std::int8_t feature_slot;
};

// Expression block sorted by name, then gaze, then derived. Positions are
// the wire-level manifest indices; append-only.
constexpr std::array<RawEntry, 62> kRaw = {{
    {"BrowLowererL", ChannelKind::Expression, ChannelGroup::Brow, 0},
    {"BrowLowererR", ChannelKind::Expression, ChannelGroup::Brow, 1},
    {"CheekPuffL", ChannelKind::Expression, ChannelGroup::Cheek, -1},
    {"CheekPuffR", ChannelKind::Expression, ChannelGroup::Cheek, -1},
    {"CheekRaiserL", ChannelKind::Expression, ChannelGroup::Cheek, 2},
    {"CheekRaiserR", ChannelKind::Expression, ChannelGroup::Cheek, 3},
    {"ChinRaiserB", ChannelKind::Expression, ChannelGroup::Jaw, -1},
    {"ChinRaiserT", ChannelKind::Expression, ChannelGroup::Jaw, -1},
    {"DimplerL", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"DimplerR", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"EyesClosedL", ChannelKind::Expression, ChannelGroup::Eyes, 4},
    {"EyesClosedR", ChannelKind::Expression, ChannelGroup::Eyes, 5},
    {"EyesLookDownL", ChannelKind::Expression, ChannelGroup::Gaze, -1},
    {"EyesLookDownR", ChannelKind::Expression, ChannelGroup::Gaze, 6},
    {"EyesLookLeftL", ChannelKind::Expression, ChannelGroup::Gaze, -1},
    {"EyesLookLeftR", ChannelKind::Expression, ChannelGroup::Gaze, -1},
    {"EyesLookRightL", ChannelKind::Expression, ChannelGroup::Gaze, 7},
    {"EyesLookRightR", ChannelKind::Expression, ChannelGroup::Gaze, -1},
    {"EyesLookUpL", ChannelKind::Expression, ChannelGroup::Gaze, -1},
    {"EyesLookUpR", ChannelKind::Expression, ChannelGroup::Gaze, -1},
    {"InnerBrowRaiserL", ChannelKind::Expression, ChannelGroup::Brow, 8},
    {"InnerBrowRaiserR", ChannelKind::Expression, ChannelGroup::Brow, -1},
    {"JawDrop", ChannelKind::Expression, ChannelGroup::Jaw, 9},
    {"JawSidewaysLeft", ChannelKind::Expression, ChannelGroup::Jaw, -1},
    {"JawSidewaysRight", ChannelKind::Expression, ChannelGroup::Jaw, -1},
    {"LidTightenerL", ChannelKind::Expression, ChannelGroup::Eyes, -1},
    {"LidTightenerR", ChannelKind::Expression, ChannelGroup::Eyes, -1},
    {"LipCornerDepressorL", ChannelKind::Expression, ChannelGroup::Mouth, 11},
    {"LipCornerDepressorR", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipCornerPullerL", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipCornerPullerR", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipFunnelerLB", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipFunnelerLT", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipFunnelerRB", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipFunnelerRT", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipPressorL", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipPressorR", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipPuckerL", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipPuckerR", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipStretcherL", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipStretcherR", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipSuckLB", ChannelKind::Expression, ChannelGroup::Mouth, 12},
    {"LipSuckLT", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipSuckRB", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"LipSuckRT", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"NoseWrinklerL", ChannelKind::Expression, ChannelGroup::Nose, -1},
    {"NoseWrinklerR", ChannelKind::Expression, ChannelGroup::Nose, -1},
    {"OuterBrowRaiserL", ChannelKind::Expression, ChannelGroup::Brow, -1},
    {"OuterBrowRaiserR", ChannelKind::Expression, ChannelGroup::Brow, -1},
    {"TongueTipAlveolar", ChannelKind::Expression, ChannelGroup::Tongue, 13},
    {"UpperLipRaiserL", ChannelKind::Expression, ChannelGroup::Mouth, -1},
    {"UpperLipRaiserR", ChannelKind::Expression, ChannelGroup::Mouth, 10},
    {"GazeDirX", ChannelKind::Gaze, ChannelGroup::Gaze, -1},
    {"GazeDirY", ChannelKind::Gaze, ChannelGroup::Gaze, -1},
    {"GazeDirZ", ChannelKind::Gaze, ChannelGroup::Gaze, -1},
    {"EyeOpennessL", ChannelKind::Gaze, ChannelGroup::Eyes, -1},
    {"EyeOpennessR", ChannelKind::Gaze, ChannelGroup::Eyes, -1},
    {"BlinkEvent", ChannelKind::Gaze, ChannelGroup::Eyes, -1},
    {"BlinkRate", ChannelKind::Derived, ChannelGroup::Eyes, -1},
    {"FixationEntropy", ChannelKind::Derived, ChannelGroup::Gaze, -1},
    {"ExpressionIntensity", ChannelKind::Derived, ChannelGroup::Derived, -1},
    {"ActivationSymmetry", ChannelKind::Derived, ChannelGroup::Derived, -1},
}};

// Pair partners are derived from the naming convention: a common stem with
// L/R (or LB/RB, LT/RT) suffixes. JawSidewaysLeft/Right are direction
// channels, not bilateral muscles, and have no partner.
std::int16_t partner_of(std::size_t i) {
    std::string_view n = kRaw[i].name;
    if (kRaw[i].kind != ChannelKind::Expression) return -1;
    std::string flipped;
    auto ends_with = [&](std::string_view suf) {
        return n.size() > suf.size() && n.substr(n.size() - suf.size()) == suf;
    };
    if (ends_with("LB")) {
        flipped = std::string(n.substr(0, n.size() - 2)) + "RB";
    } else if (ends_with("RB")) {
        flipped = std::string(n.substr(0, n.size() - 2)) + "LB";
    } else if (ends_with("LT")) {
        flipped = std::string(n.substr(0, n.size() - 2)) + "RT";
    } else if (ends_with("RT")) {
        flipped = std::string(n.substr(0, n.size() - 2)) + "LT";
    } else if (n.back() == 'L') {
        flipped = std::string(n.substr(0, n.size() - 1)) + "R";
    } else if (n.back() == 'R') {
        flipped = std::string(n.substr(0, n.size() - 1)) + "L";
    } else {
        return -1;
    }
    for (std::size_t j = 0; j < kRaw.size(); ++j) {
        if (kRaw[j].name == flipped) return static_cast<std::int16_t>(j);
    }
    return -1;
}

struct Tables {
    std::array<ChannelInfo, 62> info;
    std::unordered_map<std::string_view, ChannelId> by_name;
    std::array<ChannelId, 14> feature;
    std::vector<ChannelId> left_pairs;
    std::vector<ChannelId> expression;
};

const Tables& tables() {
    static const Tables t = [] {
        Tables out;
        for (std::size_t i = 0; i < kRaw.size(); ++i) {
            out.info[i] = ChannelInfo{kRaw[i].name, kRaw[i].kind, kRaw[i].group,
                                      partner_of(i), kRaw[i].feature_slot};
            out.by_name.emplace(kRaw[i].name, ChannelId{static_cast<std::uint16_t>(i)});
            if (kRaw[i].feature_slot >= 0) {
                out.feature[static_cast<std::size_t>(kRaw[i].feature_slot)] =
                    ChannelId{static_cast<std::uint16_t>(i)};
            }
            if (kRaw[i].kind == ChannelKind::Expression) {
                out.expression.push_back(ChannelId{static_cast<std::uint16_t>(i)});
            }
        }
        for (std::size_t i = 0; i < kRaw.size(); ++i) {
            std::int16_t p = out.info[i].pair_partner;
            // The left member is the one with the smaller index (L < R sorts first).
            if (p >= 0 && static_cast<std::size_t>(p) > i) {
                out.left_pairs.push_back(ChannelId{static_cast<std::uint16_t>(i)});
            }
        }
        return out;
    }();
    return t;
}

constexpr std::array<std::string_view, kGroupCount> kGroupNames = {
    "brow", "cheek", "eyes", "gaze", "jaw", "mouth", "nose", "tongue", "derived",
};

} // namespace

std::size_t registry_size() { return kRaw.size(); }

const ChannelInfo& channel_info(ChannelId ch) { return tables().info[ch.idx]; }
std::string_view channel_name(ChannelId ch) { return channel_info(ch).name; }
ChannelKind channel_kind(ChannelId ch) { return channel_info(ch).kind; }
ChannelGroup channel_group(ChannelId ch) { return channel_info(ch).group; }

std::optional<ChannelId> find_channel(std::string_view name) {
    const auto& m = tables().by_name;
    auto it = m.find(name);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

const std::array<ChannelId, 14>& feature_channels() { return tables().feature; }
const std::vector<ChannelId>& left_pair_channels() { return tables().left_pairs; }
const std::vector<ChannelId>& expression_channels() { return tables().expression; }

std::string_view group_name(ChannelGroup g) {
    return kGroupNames[static_cast<std::size_t>(g)];
}

std::optional<ChannelGroup> parse_group(std::string_view name) {
    for (std::size_t i = 0; i < kGroupNames.size(); ++i) {
        if (kGroupNames[i] == name) return static_cast<ChannelGroup>(i);
    }
    return std::nullopt;
}

namespace ch {
ChannelId eyes_closed_l() { return *find_channel("EyesClosedL"); }
ChannelId eyes_closed_r() { return *find_channel("EyesClosedR"); }
ChannelId gaze_dir_x() { return *find_channel("GazeDirX"); }
ChannelId gaze_dir_y() { return *find_channel("GazeDirY"); }
ChannelId gaze_dir_z() { return *find_channel("GazeDirZ"); }
ChannelId eye_openness_l() { return *find_channel("EyeOpennessL"); }
ChannelId eye_openness_r() { return *find_channel("EyeOpennessR"); }
ChannelId blink_event() { return *find_channel("BlinkEvent"); }
ChannelId blink_rate() { return *find_channel("BlinkRate"); }
ChannelId fixation_entropy() { return *find_channel("FixationEntropy"); }
ChannelId expression_intensity() { return *find_channel("ExpressionIntensity"); }
ChannelId activation_symmetry() { return *find_channel("ActivationSymmetry"); }
} // namespace ch

} // namespace mg
