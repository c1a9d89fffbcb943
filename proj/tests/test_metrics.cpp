#include <doctest.h>

#include <cmath>
#include <vector>

#include "metaguard/error.hpp"
#include "metaguard/metrics.hpp"
#include "metaguard/rng.hpp"

using namespace mg;

TEST_SUITE("metrics") {

TEST_CASE("confusion matrix counts true/predicted pairs") {
    std::vector<std::size_t> yt = {0, 0, 1, 1, 2, 2, 2};
    std::vector<std::size_t> yp = {0, 1, 1, 1, 2, 0, 2};
    ConfusionMatrix cm = confusion(3, yt, yp);
    CHECK(cm.total() == 7);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.at(2, 0) == 1);
    CHECK(cm.at(2, 2) == 2);
    CHECK(cm.at(1, 0) == 0);

    CHECK(accuracy(cm) == doctest::Approx(5.0 / 7.0).epsilon(1e-12));

    // Hand-computed per-class F1: precision/recall per class, harmonic mean.
    // class 0: p=1/2, r=1/2, f1=1/2; class 1: p=2/3, r=1, f1=4/5;
    // class 2: p=1, r=2/3, f1=4/5.
    CHECK(macro_f1(cm) == doctest::Approx((0.5 + 0.8 + 0.8) / 3.0).epsilon(1e-12));

    auto rec = per_class_recall(cm);
    CHECK(rec[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rec[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rec[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("degenerate classes contribute zero instead of NaN") {
    // Class 1 never occurs and is never predicted.
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 4;
    CHECK(accuracy(cm) == 1.0);
    CHECK(macro_f1(cm) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(per_class_recall(cm)[1] == 0.0);

    ConfusionMatrix empty(2);
    CHECK(accuracy(empty) == 0.0);
    CHECK(macro_f1(empty) == 0.0);
}

TEST_CASE("row percentages normalize each true class to 100") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 3;
    cm.at(0, 2) = 1;
    cm.at(2, 2) = 5;
    auto pct = row_percentages(cm);
    REQUIRE(pct.size() == 9);
    CHECK(pct[0] == doctest::Approx(75.0).epsilon(1e-12));
    CHECK(pct[2] == doctest::Approx(25.0).epsilon(1e-12));
    for (std::size_t c = 0; c < 3; ++c) CHECK(pct[3 + c] == 0.0); // empty row stays zero
    CHECK(pct[8] == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("mismatched prediction lengths are rejected") {
    try {
        confusion(2, {0, 1}, {0});
        FAIL("expected an Error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("ablation scores a decisive feature far above a noise column") {
    // Feature 0 decides the class, feature 1 is seeded noise.
    const std::size_t n = 120;
    Matrix x(n, 2);
    std::vector<std::size_t> y(n);
    Rng rng(21);
    for (std::size_t i = 0; i < n; ++i) {
        bool hi = i % 2 == 1;
        x.at(i, 0) = (hi ? 0.8 : 0.2) + rng.normal(0.0, 0.02);
        x.at(i, 1) = rng.uniform01();
        y[i] = hi ? 1 : 0;
    }

    ClassifierConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_units = 8;
    cfg.epochs = 40;
    cfg.batch_size = 16;
    cfg.label_set = {"lo", "hi"};
    cfg.seed = 4;
    TrainResult res = train(cfg, x, y);

    auto imp = ablation_importance(res.model, x, y);
    REQUIRE(imp.size() == 2);
    CHECK(imp[0] > 0.25);               // blinding the signal column hurts badly
    CHECK(std::abs(imp[1]) < 0.01);     // blinding noise moves less than a point
    CHECK(imp[0] > imp[1] + 0.2);
}

} // TEST_SUITE
