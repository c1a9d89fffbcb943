// metrics.hpp: confusion matrix, accuracy, macro-F1, ablation importance.

#pragma once

#include <cstdint>
#include <vector>

#include "metaguard/mlp.hpp"

namespace mg {

struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<std::size_t> counts; // row = true class, col = predicted

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t n) : n_classes(n), counts(n * n, 0) {}

    std::size_t& at(std::size_t t, std::size_t p) { return counts[t * n_classes + p]; }
    std::size_t at(std::size_t t, std::size_t p) const { return counts[t * n_classes + p]; }
    std::size_t total() const;
};

ConfusionMatrix confusion(std::size_t n_classes, const std::vector<std::size_t>& y_true,
                          const std::vector<std::size_t>& y_pred);

double accuracy(const ConfusionMatrix& cm);

// Per-class F1 averaged over all classes; a class with no predictions (or no
// samples) contributes 0.
double macro_f1(const ConfusionMatrix& cm);

// Recall per class; classes with no true samples report 0.
std::vector<double> per_class_recall(const ConfusionMatrix& cm);

// Row-normalized percentages; each non-empty row sums to 100.
std::vector<double> row_percentages(const ConfusionMatrix& cm);

// Mean-substitution ablation: importance[i] = baseline accuracy minus the
// accuracy when feature i is replaced by its training mean everywhere.
std::vector<double> ablation_importance(const ClassifierModel& m, const Matrix& x_raw,
                                        const std::vector<std::size_t>& y);

} // namespace mg
