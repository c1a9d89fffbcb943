// kernels.hpp: data-parallel hot paths, each with a serial reference.
//
// Every kernel takes a `parallel` flag: false runs the plain serial loop,
// true distributes iterations with OpenMP. Each output element is written by
// exactly one thread and no reductions cross iterations, so both paths are
// bit-identical; the tests assert that and the benchmark compares them.

#pragma once

#include <vector>

#include "metaguard/features.hpp"
#include "metaguard/mlp.hpp"
#include "metaguard/session.hpp"

namespace mg {

// Class probabilities for every row of a raw feature matrix.
Matrix batch_probs(const ClassifierModel& m, const Matrix& x_raw, bool parallel);

// Argmax class per row.
std::vector<std::size_t> batch_predict(const ClassifierModel& m, const Matrix& x_raw,
                                       bool parallel);

// Window extraction across whole sessions; result[i] belongs to sessions[i].
std::vector<std::vector<WindowView>> corpus_windows(const std::vector<SessionLog>& sessions,
                                                    double window_seconds, bool parallel);

int max_kernel_threads();

} // namespace mg
