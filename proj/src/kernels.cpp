#include "metaguard/kernels.hpp"

#include <algorithm>
#include <cstdint>

#include <omp.h>

#include "metaguard/error.hpp"

namespace mg {

Matrix batch_probs(const ClassifierModel& m, const Matrix& x_raw, bool parallel) {
    if (x_raw.cols != m.config.input_dim)
        throw Error(ErrorCode::ShapeMismatch, "matrix width does not match model");
    Matrix out(x_raw.rows, m.n_labels());
    const auto n = static_cast<std::int64_t>(x_raw.rows);
#pragma omp parallel for if (parallel) schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        std::vector<double> row(x_raw.row(r), x_raw.row(r) + x_raw.cols);
        std::vector<double> p = forward(m, normalize(row, m.norm));
        std::copy(p.begin(), p.end(), out.row(static_cast<std::size_t>(r)));
    }
    return out;
}

std::vector<std::size_t> batch_predict(const ClassifierModel& m, const Matrix& x_raw,
                                       bool parallel) {
    Matrix probs = batch_probs(m, x_raw, parallel);
    std::vector<std::size_t> out(probs.rows);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        const double* p = probs.row(r);
        out[r] = static_cast<std::size_t>(std::max_element(p, p + probs.cols) - p);
    }
    return out;
}

std::vector<std::vector<WindowView>> corpus_windows(const std::vector<SessionLog>& sessions,
                                                    double window_seconds, bool parallel) {
    std::vector<std::vector<WindowView>> out(sessions.size());
    const auto n = static_cast<std::int64_t>(sessions.size());
    // Exceptions must not escape an OpenMP region; they are carried out by
    // slot and rethrown in submission order.
    std::vector<std::exception_ptr> errs(sessions.size());
#pragma omp parallel for if (parallel) schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] =
                window_views(sessions[static_cast<std::size_t>(i)], window_seconds);
        } catch (...) {
            errs[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

int max_kernel_threads() { return omp_get_max_threads(); }

} // namespace mg
