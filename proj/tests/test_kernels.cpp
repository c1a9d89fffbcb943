#include <doctest.h>

#include <cstring>
#include <vector>

#include "metaguard/error.hpp"
#include "metaguard/kernels.hpp"
#include "metaguard/synth.hpp"

using namespace mg;

namespace {

ClassifierModel seeded_model(std::size_t d, std::size_t h, std::size_t c, std::uint64_t seed) {
    ClassifierModel m;
    m.config.input_dim = d;
    m.config.hidden_units = h;
    m.config.label_set.clear();
    for (std::size_t k = 0; k < c; ++k) m.config.label_set.push_back("c" + std::to_string(k));
    Rng rng(seed);
    m.norm.mean.assign(d, 0.5);
    m.norm.stddev.assign(d, 0.2);
    m.norm.degenerate.assign(d, 0);
    m.w1.resize(h * d);
    m.b1.resize(h);
    m.w2.resize(c * h);
    m.b2.resize(c);
    for (auto* vec : {&m.w1, &m.b1, &m.w2, &m.b2})
        for (double& v : *vec) v = rng.normal(0.0, 0.4);
    return m;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("parallel batch inference is bitwise identical to the serial path") {
    ClassifierModel m = seeded_model(14, 16, 4, 31);
    Rng rng(32);
    Matrix x(512, 14);
    for (double& v : x.data) v = rng.uniform01();

    Matrix ps = batch_probs(m, x, false);
    Matrix pp = batch_probs(m, x, true);
    REQUIRE(ps.rows == 512);
    REQUIRE(ps.cols == 4);
    CHECK(ps.rows == pp.rows);
    CHECK(std::memcmp(ps.data.data(), pp.data.data(), ps.data.size() * sizeof(double)) == 0);

    auto ys = batch_predict(m, x, false);
    auto yp = batch_predict(m, x, true);
    CHECK(ys == yp);

    // Predictions agree with the row-by-row entry point.
    for (std::size_t r : {std::size_t{0}, std::size_t{255}, std::size_t{511}}) {
        std::vector<double> row(x.row(r), x.row(r) + 14);
        CHECK(ys[r] == predict(m, row));
    }
}

TEST_CASE("parallel window extraction matches the serial path") {
    std::vector<SessionLog> sessions;
    for (int i = 0; i < 6; ++i) {
        auto profile = builtin_profiles()[static_cast<std::size_t>(i) % 3];
        sessions.push_back(
            generate_session(profile, 40.0, 1000 + static_cast<std::uint64_t>(i)));
    }

    auto serial = corpus_windows(sessions, 10.0, false);
    auto parallel = corpus_windows(sessions, 10.0, true);
    REQUIRE(serial.size() == sessions.size());
    REQUIRE(parallel.size() == sessions.size());
    for (std::size_t s = 0; s < serial.size(); ++s) {
        REQUIRE(serial[s].size() == parallel[s].size());
        REQUIRE(serial[s].size() == 4);
        for (std::size_t w = 0; w < serial[s].size(); ++w) {
            CHECK(serial[s][w].window_index == parallel[s][w].window_index);
            CHECK(serial[s][w].values == parallel[s][w].values);
            CHECK(serial[s][w].derived.symmetry == parallel[s][w].derived.symmetry);
            CHECK(serial[s][w].label == parallel[s][w].label);
        }
    }
}

TEST_CASE("kernel errors escape the parallel region intact") {
    ClassifierModel m = seeded_model(14, 8, 4, 33);
    Matrix bad(4, 9); // wrong width
    for (bool par : {false, true}) {
        try {
            batch_probs(m, bad, par);
            FAIL("expected an Error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }

    SessionLog runt;
    runt.session_id = "runt";
    ExpressionFrame f;
    f.timestamp = 0.0;
    runt.expression_stream.push_back(f);
    std::vector<SessionLog> sessions = {runt};
    for (bool par : {false, true}) {
        try {
            corpus_windows(sessions, 10.0, par);
            FAIL("expected an Error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SessionTooShort);
        }
    }
}

TEST_CASE("thread count reporting") {
    CHECK(max_kernel_threads() >= 1);
}

} // TEST_SUITE
