#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "metaguard/channels.hpp"
#include "metaguard/synth.hpp"

// End-to-end coverage of the mg binary. The test runner passes its path in
// MG_BIN; everything runs inside a throwaway directory under /tmp.

using namespace mg;

namespace {

std::string mg_bin() {
    const char* p = std::getenv("MG_BIN");
    REQUIRE_MESSAGE(p != nullptr, "MG_BIN must point at the mg binary");
    return p;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "mgcliXXXXXX").string();
        REQUIRE(mkdtemp(tmpl.data()) != nullptr);
        path = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CmdResult run_cmd(const TempDir& dir, const std::string& args) {
    std::string out_path = dir.file(".stdout");
    std::string err_path = dir.file(".stderr");
    std::string cmd = mg_bin() + " " + args + " >" + out_path + " 2>" + err_path;
    int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

nlohmann::json parse_line(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    REQUIRE_MESSAGE(!j.is_discarded(), "expected JSON, got: " << text);
    return j;
}

// Shared corpus + model so the slower cases train once.
struct Pipeline {
    TempDir dir;
    std::string corpus;
    std::string sessions;
    std::string model;
};

const Pipeline& pipeline() {
    static Pipeline f;
    static bool built = [&] {
        f.corpus = f.dir.file("corpus.csv");
        f.sessions = f.dir.file("sessions.jsonl");
        f.model = f.dir.file("model.bin");
        CmdResult synth = run_cmd(
            f.dir, "synth --corpus --env all --n 60 --windows-per-session 5 --subjects 3"
                   " --seed 5 --separation 0.9 --out " +
                       f.corpus + " --sessions-out " + f.sessions);
        REQUIRE(synth.exit_code == 0);
        CmdResult train = run_cmd(f.dir, "train --corpus " + f.corpus + " --out " + f.model +
                                             " --epochs 30 --hidden 32 --seed 3");
        REQUIRE(train.exit_code == 0);
        return true;
    }();
    (void)built;
    return f;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage and data errors come back as distinct exit codes") {
    TempDir dir;
    CHECK(run_cmd(dir, "").exit_code == 2);                    // subcommand required
    CHECK(run_cmd(dir, "synth --no-such-flag").exit_code == 2);
    CHECK(run_cmd(dir, "synth --env office").exit_code == 2);  // not a builtin profile
    CHECK(run_cmd(dir, "--help").exit_code == 0);

    CmdResult r = run_cmd(dir, "eval --model " + dir.file("missing.bin") + " --corpus " +
                                   dir.file("missing.csv"));
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("seeded session synthesis is byte identical") {
    TempDir dir;
    std::string a = dir.file("a.jsonl"), b = dir.file("b.jsonl"), c = dir.file("c.jsonl");
    CmdResult first = run_cmd(
        dir, "synth --env emotional --seconds 30 --seed 7 --json --out " + a);
    REQUIRE(first.exit_code == 0);
    nlohmann::json j = parse_line(first.out);
    CHECK(j["session_id"] == "emotional-7");
    CHECK(j["duration"] == doctest::Approx(30.0));

    REQUIRE(run_cmd(dir, "synth --env emotional --seconds 30 --seed 7 --out " + b).exit_code ==
            0);
    REQUIRE(run_cmd(dir, "synth --env emotional --seconds 30 --seed 8 --out " + c).exit_code ==
            0);
    std::string bytes = slurp(a);
    CHECK(!bytes.empty());
    CHECK(bytes == slurp(b));
    CHECK(bytes != slurp(c));
}

TEST_CASE("corpus synthesis reports balanced labeled windows") {
    TempDir dir;
    CmdResult r = run_cmd(dir, "synth --corpus --env all --n 60 --windows-per-session 5"
                               " --subjects 3 --seed 5 --separation 0.9 --json --out " +
                                   dir.file("c.csv") + " --sessions-out " + dir.file("s.jsonl"));
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = parse_line(r.out);
    CHECK(j["n_windows"] == 60);
    CHECK(j["sessions"] == 12);
    for (const char* label : {"Engaged", "Neutral", "Relaxed", "Stressed"})
        CHECK(j["class_counts"][label] == 15);

    // The CSV has a header plus one row per labeled window.
    std::string csv = slurp(dir.file("c.csv"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 61);
}

TEST_CASE("train and eval close the loop on a separable corpus") {
    const Pipeline& p = pipeline();
    CmdResult train = run_cmd(p.dir, "train --corpus " + p.corpus + " --out " +
                                         p.dir.file("m2.bin") +
                                         " --epochs 30 --hidden 32 --seed 3 --json");
    REQUIRE(train.exit_code == 0);
    nlohmann::json tj = parse_line(train.out);
    CHECK(tj["train_windows"] == 44);
    CHECK(tj["test_windows"] == 16);
    CHECK(tj["test_accuracy"].get<double>() > 0.5);
    CHECK(tj["loss_last"].get<double>() < tj["loss_first"].get<double>());

    CmdResult eval = run_cmd(p.dir, "eval --model " + p.model + " --corpus " + p.corpus +
                                        " --json");
    REQUIRE(eval.exit_code == 0);
    nlohmann::json ej = parse_line(eval.out);
    CHECK(ej["accuracy"].get<double>() > 0.6);
    CHECK(ej["labels"].size() == 4);
    CHECK(ej["importance"].size() == 14);
    CHECK(ej["latency_us"]["p99"].get<double>() > 0.0);
    for (const auto& row : ej["confusion_pct"]) {
        double sum = 0.0;
        for (const auto& v : row) sum += v.get<double>();
        CHECK(sum == doctest::Approx(100.0).epsilon(0.01));
    }
}

TEST_CASE("permissive run exports every window") {
    const Pipeline& p = pipeline();
    std::string log = p.dir.file("open.jsonl");
    CmdResult r = run_cmd(p.dir, "run --session " + p.sessions + " --model " + p.model +
                                     " --policy pass-all --consent allow-all --json --out " +
                                     log);
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = parse_line(r.out);
    CHECK(j["exported"] == 60);
    CHECK(j["withheld"] == 0);
    CHECK(j["channels_passed"] == registry_size());
    CHECK(j["channels_suppressed"] == 0);
    std::string text = slurp(log);
    CHECK(std::count(text.begin(), text.end(), '\n') == 61); // header + records
    CHECK(text.find("\"policy_hash\"") != std::string::npos);
}

TEST_CASE("suppressive run leaks no channel value anywhere in the log") {
    const Pipeline& p = pipeline();
    std::string log = p.dir.file("dark.jsonl");
    CmdResult r = run_cmd(p.dir, "run --session " + p.sessions + " --model " + p.model +
                                     " --policy suppress-all --consent deny-all --json --out " +
                                     log);
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = parse_line(r.out);
    CHECK(j["exported"] == 60);
    CHECK(j["channels_suppressed"] == registry_size());
    std::string text = slurp(log);
    for (std::size_t i = 0; i < registry_size(); ++i) {
        std::string name(channel_name(ChannelId{static_cast<std::uint16_t>(i)}));
        CHECK(text.find(name) == std::string::npos);
    }
    CHECK(text.find("\"values\":{}") != std::string::npos);
}

TEST_CASE("consent prompts take scripted answers and fail closed on silence") {
    const Pipeline& p = pipeline();
    std::size_t gaze_channels = 0;
    for (std::size_t i = 0; i < registry_size(); ++i)
        if (channel_info(ChannelId{static_cast<std::uint16_t>(i)}).group == ChannelGroup::Gaze)
            ++gaze_channels;

    std::string script = p.dir.file("answers.txt");
    std::ofstream(script) << "allow gaze\n";
    std::string base = "run --session " + p.sessions + " --model " + p.model +
                       " --policy pass-all --consent deny-all --ask --json --out " +
                       p.dir.file("asked.jsonl");
    CmdResult r = run_cmd(p.dir, base + " < " + script);
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = parse_line(r.out);
    CHECK(j["channels_passed"] == gaze_channels);
    CHECK(j["channels_suppressed"] == registry_size() - gaze_channels);
    CHECK(r.err.find("8 consent group(s) unanswered") != std::string::npos);

    // No answers at all: everything stays suppressed.
    CmdResult silent = run_cmd(p.dir, base + " < /dev/null");
    REQUIRE(silent.exit_code == 0);
    nlohmann::json sj = parse_line(silent.out);
    CHECK(sj["channels_passed"] == 0);
    CHECK(sj["channels_suppressed"] == registry_size());
    CHECK(silent.err.find("9 consent group(s) unanswered") != std::string::npos);
}

TEST_CASE("audit separates open and suppressed exports") {
    const Pipeline& p = pipeline();
    CmdResult r = run_cmd(p.dir, "audit --sessions " + p.sessions + " --model " + p.model +
                                     " --policy suppress-all --consent deny-all"
                                     " --seeds 2 --seed 1 --json");
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = parse_line(r.out);
    CHECK(j["classes"].size() == 4);
    CHECK(j["raw_margin_mean"].get<double>() > 0.4);
    // Suppressed rows are identical, so the attacker scores exactly chance
    // on the balanced test split.
    CHECK(j["filtered_margin_mean"].get<double>() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(j["delta_mean"].get<double>() ==
          doctest::Approx(j["raw_margin_mean"].get<double>()).epsilon(1e-9));
    CHECK(j["raw_margins"].size() == 2);
}

TEST_CASE("custom profiles feed the generator") {
    TempDir dir;
    EnvironmentProfile custom = builtin_profile("emotional");
    custom.name = "clinic";
    {
        std::ofstream out(dir.file("clinic.jsonl"));
        serialize_profile(custom, out);
    }
    CmdResult r = run_cmd(dir, "synth --profile " + dir.file("clinic.jsonl") +
                                   " --seconds 20 --seed 9 --json --out " + dir.file("s.jsonl"));
    REQUIRE(r.exit_code == 0);
    CHECK(parse_line(r.out)["session_id"] == "clinic-9");

    std::ofstream(dir.file("broken.jsonl")) << "{}\n";
    CHECK(run_cmd(dir, "synth --profile " + dir.file("broken.jsonl") + " --seconds 20").exit_code ==
          3);
}

TEST_CASE("bench reports per-window latency against the frame budget") {
    const Pipeline& p = pipeline();
    CmdResult r = run_cmd(p.dir, "bench --model " + p.model + " --windows 64 --seed 2 --json");
    REQUIRE(r.exit_code == 0);
    nlohmann::json j = parse_line(r.out);
    CHECK(j["n_windows"] == 64);
    CHECK(j["mean_us"].get<double>() > 0.0);
    CHECK(j["p99_us"].get<double>() >= j["mean_us"].get<double>());
    CHECK(j["throughput_wps"].get<double>() > 0.0);
    CHECK(j["gaze_budget_ok"].is_boolean());
}

TEST_CASE("seeded commands are reproducible end to end") {
    const Pipeline& p = pipeline();
    std::string m2 = p.dir.file("repro.bin");
    REQUIRE(run_cmd(p.dir, "train --corpus " + p.corpus + " --out " + m2 +
                               " --epochs 30 --hidden 32 --seed 3")
                .exit_code == 0);
    CHECK(slurp(p.model) == slurp(m2));

    std::string log1 = p.dir.file("r1.jsonl"), log2 = p.dir.file("r2.jsonl");
    std::string run_args = "run --session " + p.sessions + " --model " + p.model +
                           " --policy pass-all --consent allow-all --out ";
    REQUIRE(run_cmd(p.dir, run_args + log1).exit_code == 0);
    REQUIRE(run_cmd(p.dir, run_args + log2).exit_code == 0);
    CHECK(slurp(log1) == slurp(log2));

    std::string audit_args = "audit --sessions " + p.sessions + " --model " + p.model +
                             " --policy suppress-all --seeds 2 --seed 4 --json";
    CmdResult a1 = run_cmd(p.dir, audit_args);
    CmdResult a2 = run_cmd(p.dir, audit_args);
    REQUIRE(a1.exit_code == 0);
    CHECK(a1.out == a2.out);
}

} // TEST_SUITE
