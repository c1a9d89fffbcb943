// channels.hpp: the closed, versioned channel registry.
//
// Every signal the pipeline can name lives here: 52 expression blendshape
// channels, 6 raw gaze channels, and 4 derived window metrics. The registry
// order is fixed (expression channels sorted by name, then gaze, then
// derived) and export manifests index into it positionally, so reordering
// entries is a format break and requires a REGISTRY_VERSION bump.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mg {

inline constexpr int REGISTRY_VERSION = 1;

enum class ChannelKind : std::uint8_t { Expression, Gaze, Derived };

// Consent is granted per anatomical/functional group, not per channel.
enum class ChannelGroup : std::uint8_t {
    Brow,
    Cheek,
    Eyes,
    Gaze,
    Jaw,
    Mouth,
    Nose,
    Tongue,
    Derived,
};

inline constexpr std::size_t kGroupCount = 9;

struct ChannelId {
    std::uint16_t idx = 0;

    constexpr bool operator==(const ChannelId&) const = default;
    constexpr auto operator<=>(const ChannelId&) const = default;
};

struct ChannelInfo {
    std::string_view name;
    ChannelKind kind;
    ChannelGroup group;
    // Partner channel for left/right muscle pairs, -1 otherwise.
    std::int16_t pair_partner;
    // Slot in the 14-entry classifier feature vector, -1 if not a member.
    std::int8_t feature_slot;
};

std::size_t registry_size();
const ChannelInfo& channel_info(ChannelId ch);
std::string_view channel_name(ChannelId ch);
ChannelKind channel_kind(ChannelId ch);
ChannelGroup channel_group(ChannelId ch);

// Registry lookup; unknown names yield nullopt (callers decide whether that
// is UnknownChannel or MalformedRecord).
std::optional<ChannelId> find_channel(std::string_view name);

// The 14 classifier input channels, in model input order.
const std::array<ChannelId, 14>& feature_channels();

// All left-channel ids of the left/right muscle pairs (symmetry metric).
const std::vector<ChannelId>& left_pair_channels();

// All expression-kind channels in registry order.
const std::vector<ChannelId>& expression_channels();

std::string_view group_name(ChannelGroup g);
std::optional<ChannelGroup> parse_group(std::string_view name);

// Well-known channels referenced directly by the pipeline.
namespace ch {
ChannelId eyes_closed_l();
ChannelId eyes_closed_r();
ChannelId gaze_dir_x();
ChannelId gaze_dir_y();
ChannelId gaze_dir_z();
ChannelId eye_openness_l();
ChannelId eye_openness_r();
ChannelId blink_event();
ChannelId blink_rate();
ChannelId fixation_entropy();
ChannelId expression_intensity();
ChannelId activation_symmetry();
} // namespace ch

} // namespace mg
