#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "metaguard/error.hpp"
#include "metaguard/filter.hpp"
#include "metaguard/synth.hpp"

using namespace mg;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::IoFailure;
}

// A model whose prediction is a pure function of the JawDrop slot so tests
// can steer the predicted state.
ClassifierModel steering_model(const std::vector<std::string>& labels) {
    ClassifierModel m;
    m.config.input_dim = kFeatureDim;
    m.config.hidden_units = 1;
    m.config.label_set = labels;
    m.norm.mean.assign(kFeatureDim, 0.0);
    m.norm.stddev.assign(kFeatureDim, 1.0);
    m.norm.degenerate.assign(kFeatureDim, 0);
    m.w1.assign(kFeatureDim, 0.0);
    const auto& chans = feature_channels();
    for (std::size_t i = 0; i < kFeatureDim; ++i)
        if (channel_name(chans[i]) == "JawDrop") m.w1[i] = 1.0;
    m.b1 = {0.0};
    // Hidden unit equals the JawDrop value; class k's logit is 8k * jaw with
    // a unit head start for class 0, so the argmax crosses at jaw = 0.125.
    m.w2.resize(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k)
        m.w2[k] = 8.0 * static_cast<double>(k);
    m.b2.assign(labels.size(), 0.0);
    m.b2[0] = 1.0;
    return m;
}

WindowView jaw_window(double jaw, std::size_t index = 0) {
    WindowView w;
    w.window_index = index;
    w.values = {{*find_channel("JawDrop"), jaw},
                {*find_channel("BrowLowererL"), 0.8},
                {*find_channel("GazeDirX"), 0.25},
                {ch::blink_rate(), 12.0}};
    std::sort(w.values.begin(), w.values.end());
    return w;
}

} // namespace

TEST_SUITE("filter") {

TEST_CASE("coarsen quantizes with halves away from zero") {
    CHECK(coarsen(0.97, 0.25) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(coarsen(0.26, 0.25) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(coarsen(0.375, 0.25) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(coarsen(0.0, 0.25) == 0.0);
    CHECK(coarsen(0.1, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("consent gate outranks every policy rule") {
    FilterPolicy pass = *named_policy("pass-all");
    ChannelId brow = *find_channel("BrowLowererL");

    ConsentRecord allow = allow_all_consent();
    CHECK(resolve_action(pass, allow, brow).kind == ActionKind::PassThrough);

    ConsentRecord deny = deny_all_consent();
    CHECK(resolve_action(pass, deny, brow).kind == ActionKind::Suppress);

    ConsentRecord ask = allow_all_consent();
    ask.set(channel_group(brow), Grant::Ask);
    CHECK(resolve_action(pass, ask, brow).kind == ActionKind::Suppress);

    // Default-initialized consent has every grant at Deny.
    ConsentRecord zero;
    CHECK(resolve_action(pass, zero, brow).kind == ActionKind::Suppress);
}

TEST_CASE("channel rules override the default action") {
    FilterPolicy p = *named_policy("suppress-all");
    ChannelId jaw = *find_channel("JawDrop");
    p.channel_rules = {{jaw, {ActionKind::Coarsen, 0.25}}};
    ConsentRecord allow = allow_all_consent();

    ActionSpec a = resolve_action(p, allow, jaw);
    CHECK(a.kind == ActionKind::Coarsen);
    CHECK(a.granularity == 0.25);
    CHECK(resolve_action(p, allow, *find_channel("JawSidewaysLeft")).kind ==
          ActionKind::Suppress);
}

TEST_CASE("narrowing consent can only shrink the exported set") {
    FilterPolicy pass = *named_policy("pass-all");
    ConsentRecord consent = allow_all_consent();
    ClassifierModel m = steering_model({"Neutral", "Engaged"});
    WindowView w = jaw_window(0.02);

    auto full = filter_window(w, m, pass, consent);
    REQUIRE(full.has_value());
    std::size_t last = full->values.size();
    for (std::size_t g = 0; g < kGroupCount; ++g) {
        consent.set(static_cast<ChannelGroup>(g), Grant::Deny);
        auto rec = filter_window(w, m, pass, consent);
        REQUIRE(rec.has_value());
        CHECK(rec->values.size() <= last);
        last = rec->values.size();
    }
    CHECK(last == 0); // everything denied, record survives but carries nothing
}

TEST_CASE("filter_window transforms, keeps order, and fills the manifest") {
    FilterPolicy p;
    p.default_action = ActionKind::PassThrough;
    ChannelId brow = *find_channel("BrowLowererL");
    ChannelId jaw = *find_channel("JawDrop");
    p.channel_rules = {{brow, {ActionKind::Coarsen, 0.25}}, {jaw, {ActionKind::Suppress, 0.0}}};
    std::sort(p.channel_rules.begin(), p.channel_rules.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    ClassifierModel m = steering_model({"Neutral", "Engaged"});
    ConsentRecord allow = allow_all_consent();
    WindowView w = jaw_window(0.9, 3);

    auto rec = filter_window(w, m, p, allow);
    REQUIRE(rec.has_value());
    CHECK(rec->window_index == 3);
    REQUIRE(rec->manifest.size() == registry_size());
    CHECK(rec->manifest[brow.idx].kind == ActionKind::Coarsen);
    CHECK(rec->manifest[jaw.idx].kind == ActionKind::Suppress);
    CHECK(rec->manifest[ch::blink_rate().idx].kind == ActionKind::PassThrough);

    CHECK(rec->values.size() == 3); // jaw dropped, three survivors
    CHECK(std::is_sorted(rec->values.begin(), rec->values.end()));
    bool saw_jaw = false;
    for (const auto& [ch2, v] : rec->values) saw_jaw |= ch2 == jaw;
    CHECK(!saw_jaw);

    // Coarsened brow reads 0.75 at granularity 0.25.
    for (const auto& [ch2, v] : rec->values)
        if (ch2 == brow) CHECK(v == doctest::Approx(0.75).epsilon(1e-12));

    CHECK(!rec->predicted_state.has_value());
    p.export_predicted_state = true;
    auto rec2 = filter_window(w, m, p, allow);
    REQUIRE(rec2->predicted_state.has_value());
    CHECK(*rec2->predicted_state == "Engaged"); // jaw 0.9 steers up the label list
}

TEST_CASE("pass-through values are bit-identical to the window pool") {
    FilterPolicy pass = *named_policy("pass-all");
    ConsentRecord allow = allow_all_consent();
    ClassifierModel m = steering_model({"Neutral", "Engaged"});

    SessionLog s = generate_session(builtin_profile("emotional"), 30.0, 88);
    for (const WindowView& w : window_views(s)) {
        auto rec = filter_window(w, m, pass, allow);
        REQUIRE(rec.has_value());
        REQUIRE(rec->values.size() == w.values.size());
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            CHECK(rec->values[i].first == w.values[i].first);
            CHECK(rec->values[i].second == w.values[i].second); // exact, no rounding
        }
    }
}

TEST_CASE("state rules withhold whole windows") {
    FilterPolicy p = *named_policy("pass-all");
    p.state_rules = {{"Stressed", true}};
    ClassifierModel m = steering_model({"Neutral", "Stressed"});
    ConsentRecord allow = allow_all_consent();

    CHECK(filter_window(jaw_window(0.02), m, p, allow).has_value()); // Neutral
    CHECK(!filter_window(jaw_window(0.9), m, p, allow).has_value()); // Stressed, withheld

    p.state_rules = {{"Stressed", false}};
    CHECK(filter_window(jaw_window(0.9), m, p, allow).has_value());
}

TEST_CASE("policies round-trip through their canonical JSON") {
    FilterPolicy p;
    p.default_action = ActionKind::PassThrough;
    p.export_predicted_state = true;
    p.channel_rules = {{*find_channel("BrowLowererL"), {ActionKind::Coarsen, 0.2}},
                       {*find_channel("JawDrop"), {ActionKind::Suppress, 0.0}}};
    p.state_rules = {{"Stressed", true}, {"Neutral", false}};
    std::sort(p.channel_rules.begin(), p.channel_rules.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::sort(p.state_rules.begin(), p.state_rules.end());

    std::string text = serialize_policy(p);
    FilterPolicy q = parse_policy_string(text);
    CHECK(serialize_policy(q) == text);
    CHECK(policy_hash(q) == policy_hash(p));
    CHECK(q.default_action == ActionKind::PassThrough);
    CHECK(q.export_predicted_state);
    REQUIRE(q.channel_rules.size() == 2);
    CHECK(q.channel_rules[0].second.kind == ActionKind::Coarsen);
    CHECK(q.channel_rules[0].second.granularity == doctest::Approx(0.2).epsilon(1e-12));

    // Hash changes when the policy changes.
    q.state_rules.clear();
    CHECK(policy_hash(q) != policy_hash(p));
}

TEST_CASE("policy parsing rejects bad shapes") {
    CHECK(code_of([] { parse_policy_string("{\"v\":1,\"oops\":2}"); }) ==
          ErrorCode::MalformedRecord);
    CHECK(code_of([] { parse_policy_string("{\"v\":2}"); }) == ErrorCode::UnsupportedVersion);
    CHECK(code_of([] {
              parse_policy_string("{\"channel_rules\":{\"NoSuch\":\"pass\"},\"v\":1}");
          }) == ErrorCode::UnknownChannel);
    CHECK(code_of([] {
              parse_policy_string("{\"channel_rules\":{\"JawDrop\":{\"coarsen\":0}},\"v\":1}");
          }) == ErrorCode::MalformedRecord);
    CHECK(code_of([] { parse_policy_string("{\"default_action\":\"coarsen\",\"v\":1}"); }) ==
          ErrorCode::MalformedRecord);
    CHECK(!named_policy("everything").has_value());
    CHECK(code_of([] { load_policy("/no/such/file.json"); }) == ErrorCode::IoFailure);
}

TEST_CASE("state rules must name model labels") {
    FilterPolicy p = *named_policy("pass-all");
    p.state_rules = {{"Bored", true}};
    ClassifierModel m = steering_model({"Neutral", "Engaged"});
    CHECK(code_of([&] { check_policy_against_model(p, m); }) ==
          ErrorCode::PolicyModelMismatch);
    p.state_rules = {{"Engaged", true}};
    check_policy_against_model(p, m); // fine
}

TEST_CASE("consent journal keeps the latest grant per group") {
    std::ostringstream journal;
    ConsentRecord c = deny_all_consent("S1");
    c.timestamp = 10.0;
    c.set(ChannelGroup::Gaze, Grant::Allow);
    append_consent_entry(journal, c, ChannelGroup::Gaze);
    c.timestamp = 20.0;
    c.set(ChannelGroup::Brow, Grant::Ask);
    append_consent_entry(journal, c, ChannelGroup::Brow);
    c.timestamp = 30.0;
    c.set(ChannelGroup::Gaze, Grant::Deny); // revokes the earlier allow
    append_consent_entry(journal, c, ChannelGroup::Gaze);

    std::istringstream in(journal.str());
    ConsentRecord loaded = load_consent_journal(in);
    CHECK(loaded.subject_id == "S1");
    CHECK(loaded.grant_for(ChannelGroup::Gaze) == Grant::Deny);
    CHECK(loaded.grant_for(ChannelGroup::Brow) == Grant::Ask);
    CHECK(loaded.grant_for(ChannelGroup::Mouth) == Grant::Deny); // untouched, fail closed

    std::istringstream bad("{\"kind\":\"consent\"}\n");
    CHECK(code_of([&] { load_consent_journal(bad); }) == ErrorCode::MalformedRecord);
}

TEST_CASE("consent prompts resolve Ask grants or stay closed") {
    ConsentRecord c = deny_all_consent();
    c.set(ChannelGroup::Gaze, Grant::Ask);

    Grant got = consent_prompt(c, ChannelGroup::Gaze,
                               [](ChannelGroup) { return std::optional<Grant>(Grant::Allow); });
    CHECK(got == Grant::Allow);
    CHECK(c.grant_for(ChannelGroup::Gaze) == Grant::Allow);

    c.set(ChannelGroup::Eyes, Grant::Ask);
    CHECK(code_of([&] {
              consent_prompt(c, ChannelGroup::Eyes, PromptSource{});
          }) == ErrorCode::PromptUnavailable);
    CHECK(code_of([&] {
              consent_prompt(c, ChannelGroup::Eyes,
                             [](ChannelGroup) { return std::optional<Grant>(); });
          }) == ErrorCode::PromptUnavailable);
    CHECK(c.grant_for(ChannelGroup::Eyes) == Grant::Ask); // unanswered stays suppressing
}

TEST_CASE("export sink writes header, then records, and survives a round-trip") {
    FilterPolicy p = *named_policy("pass-all");
    p.state_rules = {{"Stressed", true}};
    p.export_predicted_state = true;
    ClassifierModel m = steering_model({"Neutral", "Stressed"});
    ConsentRecord allow = allow_all_consent();

    std::ostringstream out;
    ExportSink sink(out, p);
    for (std::size_t i = 0; i < 4; ++i) {
        // Windows 0 and 2 read Neutral, 1 and 3 read Stressed.
        WindowView w = jaw_window(i % 2 == 0 ? 0.02 : 0.9, i);
        auto rec = filter_window(w, m, p, allow);
        if (rec)
            sink.add(*rec);
        else
            sink.note_withheld();
    }
    CHECK(sink.exported() == 2);
    CHECK(sink.withheld() == 2);
    sink.finalize();

    std::string log = out.str();
    std::string header = log.substr(0, log.find('\n'));
    CHECK(header.find("\"policy_hash\":\"" + policy_hash(p) + "\"") != std::string::npos);
    CHECK(header.find("\"withheld\":2") != std::string::npos);

    std::istringstream in(log);
    RedactedLog parsed = parse_redacted_log(in);
    CHECK(parsed.policy_hash == policy_hash(p));
    CHECK(parsed.withheld == 2);
    REQUIRE(parsed.records.size() == 2);
    CHECK(parsed.records[0].window_index == 0);
    CHECK(parsed.records[1].window_index == 2);
    REQUIRE(parsed.records[0].predicted_state.has_value());
    CHECK(*parsed.records[0].predicted_state == "Neutral");
    CHECK(parsed.records[0].manifest.size() == registry_size());
}

TEST_CASE("a fully withheld run leaves only the header") {
    FilterPolicy p = *named_policy("pass-all");
    p.state_rules = {{"Neutral", true}, {"Stressed", true}};
    std::sort(p.state_rules.begin(), p.state_rules.end());
    ClassifierModel m = steering_model({"Neutral", "Stressed"});
    ConsentRecord allow = allow_all_consent();

    std::ostringstream out;
    ExportSink sink(out, p);
    for (std::size_t i = 0; i < 3; ++i) {
        auto rec = filter_window(jaw_window(0.5, i), m, p, allow);
        CHECK(!rec.has_value());
        sink.note_withheld();
    }
    sink.finalize();
    std::string log = out.str();
    CHECK(std::count(log.begin(), log.end(), '\n') == 1);

    std::istringstream in(log);
    RedactedLog parsed = parse_redacted_log(in);
    CHECK(parsed.withheld == 3);
    CHECK(parsed.records.empty());
}

TEST_CASE("sink reports an unusable destination") {
    FilterPolicy p = *named_policy("pass-all");
    std::ostringstream out;
    out.setstate(std::ios::badbit);
    ExportSink sink(out, p);
    CHECK(code_of([&] { sink.finalize(); }) == ErrorCode::DestinationUnavailable);
}

TEST_CASE("suppressed channel names never appear in serialized output") {
    // Fuzz windows against random policies and consent states; scan the bytes
    // of every record for the name of any channel whose action suppressed it.
    ClassifierModel m = steering_model({"Neutral", "Engaged"});
    Rng rng(1234);
    const auto& chans = feature_channels();

    for (int trial = 0; trial < 400; ++trial) {
        WindowView w;
        w.window_index = static_cast<std::size_t>(trial);
        for (std::size_t c = 0; c < registry_size(); ++c)
            if (rng.bernoulli(0.5))
                w.values.emplace_back(ChannelId{static_cast<std::uint16_t>(c)},
                                      rng.uniform01());

        FilterPolicy p;
        p.default_action = rng.bernoulli(0.5) ? ActionKind::Suppress : ActionKind::PassThrough;
        for (std::size_t c = 0; c < registry_size(); ++c) {
            double roll = rng.uniform01();
            if (roll < 0.2)
                p.channel_rules.push_back({ChannelId{static_cast<std::uint16_t>(c)},
                                           {ActionKind::Suppress, 0.0}});
            else if (roll < 0.4)
                p.channel_rules.push_back({ChannelId{static_cast<std::uint16_t>(c)},
                                           {ActionKind::Coarsen, 0.25}});
            else if (roll < 0.6)
                p.channel_rules.push_back({ChannelId{static_cast<std::uint16_t>(c)},
                                           {ActionKind::PassThrough, 0.0}});
        }
        ConsentRecord consent;
        for (std::size_t g = 0; g < kGroupCount; ++g)
            consent.set(static_cast<ChannelGroup>(g),
                        rng.bernoulli(0.6) ? Grant::Allow
                                           : (rng.bernoulli(0.5) ? Grant::Deny : Grant::Ask));

        auto rec = filter_window(w, m, p, consent);
        REQUIRE(rec.has_value());
        std::string bytes = serialize_export_record(*rec);

        for (std::size_t c = 0; c < registry_size(); ++c) {
            ChannelId id{static_cast<std::uint16_t>(c)};
            if (rec->manifest[c].kind != ActionKind::Suppress) continue;
            std::string needle = "\"" + std::string(channel_name(id)) + "\":";
            CHECK(bytes.find(needle) == std::string::npos);
        }
        // And the survivors are exactly the non-suppressed pooled channels.
        for (const auto& [id, v] : rec->values)
            CHECK(rec->manifest[id.idx].kind != ActionKind::Suppress);
    }

    (void)chans;
}

TEST_CASE("filter_session streams every complete window through the sink") {
    SessionLog s = generate_session(builtin_profile("interactive"), 40.0, 21);
    ClassifierModel m = steering_model({"Neutral", "Engaged"});
    FilterPolicy p = *named_policy("suppress-all");
    ConsentRecord allow = allow_all_consent();

    std::ostringstream out;
    ExportSink sink(out, p);
    FilterStats stats = filter_session(s, 10.0, m, p, allow, sink);
    sink.finalize();
    CHECK(stats.exported == 4);
    CHECK(stats.withheld == 0);

    std::istringstream in(out.str());
    RedactedLog parsed = parse_redacted_log(in);
    REQUIRE(parsed.records.size() == 4);
    for (const auto& rec : parsed.records) CHECK(rec.values.empty()); // suppress-all
}

TEST_CASE("redacted log parsing validates its header and manifests") {
    auto code_for = [](const std::string& text) {
        std::istringstream in(text);
        try {
            parse_redacted_log(in);
        } catch (const Error& e) {
            return e.code();
        }
        FAIL("expected an Error");
        return ErrorCode::IoFailure;
    };
    CHECK(code_for("") == ErrorCode::MalformedRecord);
    CHECK(code_for("{\"policy_hash\":\"x\",\"v\":9,\"withheld\":0}\n") ==
          ErrorCode::UnsupportedVersion);
    CHECK(code_for("{\"policy_hash\":\"x\",\"v\":1,\"withheld\":0}\n"
                   "{\"manifest\":[\"P\"],\"values\":{},\"window\":0}\n") ==
          ErrorCode::MalformedRecord);
    CHECK(code_for("{\"policy_hash\":\"x\",\"v\":1,\"withheld\":0}\nnot json\n") ==
          ErrorCode::MalformedRecord);
}

} // TEST_SUITE
