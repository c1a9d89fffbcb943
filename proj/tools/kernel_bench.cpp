// kernel_bench: serial reference vs OpenMP kernels, with a bitwise
// equality check before any timing is believed.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "metaguard/kernels.hpp"
#include "metaguard/mlp.hpp"
#include "metaguard/rng.hpp"
#include "metaguard/synth.hpp"

using namespace mg;

namespace {

double seconds_of(std::chrono::steady_clock::duration d) {
    return std::chrono::duration<double>(d).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, seconds_of(std::chrono::steady_clock::now() - t0));
    }
    return best;
}

ClassifierModel random_model(std::size_t input, std::size_t hidden, std::size_t labels,
                             std::uint64_t seed) {
    ClassifierModel m;
    m.config.input_dim = input;
    m.config.hidden_units = hidden;
    m.config.label_set.clear();
    for (std::size_t i = 0; i < labels; ++i)
        m.config.label_set.push_back("c" + std::to_string(i));
    Rng rng(seed);
    m.w1.resize(hidden * input);
    m.b1.resize(hidden);
    m.w2.resize(labels * hidden);
    m.b2.resize(labels);
    for (double& v : m.w1) v = rng.normal(0.0, 0.3);
    for (double& v : m.b1) v = rng.normal(0.0, 0.1);
    for (double& v : m.w2) v = rng.normal(0.0, 0.3);
    for (double& v : m.b2) v = rng.normal(0.0, 0.1);
    m.norm.mean.assign(input, 0.5);
    m.norm.stddev.assign(input, 0.2);
    m.norm.degenerate.assign(input, 0);
    return m;
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", max_kernel_threads());

    {
        const std::size_t n = 20000, dim = 14;
        ClassifierModel m = random_model(dim, 64, 4, 7);
        Matrix x(n, dim);
        Rng rng(11);
        for (double& v : x.data) v = rng.uniform01();

        Matrix serial = batch_probs(m, x, false);
        Matrix parallel = batch_probs(m, x, true);
        bool same = serial.data.size() == parallel.data.size() &&
                    std::memcmp(serial.data.data(), parallel.data.data(),
                                serial.data.size() * sizeof(double)) == 0;
        std::printf("batch forward, %zu rows: bitwise %s\n", n,
                    same ? "identical" : "DIFFERENT");

        double ts = time_best_of(3, [&] { batch_probs(m, x, false); });
        double tp = time_best_of(3, [&] { batch_probs(m, x, true); });
        std::printf("  serial   %8.1f ms  (%.0f rows/s)\n", ts * 1e3, n / ts);
        std::printf("  parallel %8.1f ms  (%.0f rows/s)  speedup %.2fx\n\n", tp * 1e3,
                    n / tp, ts / tp);
        if (!same) return 1;
    }

    {
        DatasetSpec spec;
        spec.n_samples = 200;
        spec.seed = 3;
        std::vector<SessionLog> sessions = generate_corpus(spec, builtin_profiles(), true);

        auto serial = corpus_windows(sessions, kDefaultWindowSeconds, false);
        auto parallel = corpus_windows(sessions, kDefaultWindowSeconds, true);
        bool same = serial.size() == parallel.size();
        std::size_t n_windows = 0;
        for (std::size_t i = 0; same && i < serial.size(); ++i) {
            same = serial[i].size() == parallel[i].size();
            for (std::size_t j = 0; same && j < serial[i].size(); ++j)
                same = serial[i][j].window_index == parallel[i][j].window_index &&
                       serial[i][j].values == parallel[i][j].values;
            n_windows += serial[i].size();
        }
        std::printf("window aggregation, %zu sessions / %zu windows: bitwise %s\n",
                    sessions.size(), n_windows, same ? "identical" : "DIFFERENT");

        double ts = time_best_of(3, [&] { corpus_windows(sessions, kDefaultWindowSeconds, false); });
        double tp = time_best_of(3, [&] { corpus_windows(sessions, kDefaultWindowSeconds, true); });
        std::printf("  serial   %8.1f ms\n", ts * 1e3);
        std::printf("  parallel %8.1f ms  speedup %.2fx\n", tp * 1e3, ts / tp);
        if (!same) return 1;
    }
    return 0;
}
