#include "metaguard/metrics.hpp"

#include <cstring>

#include "metaguard/error.hpp"

namespace mg {

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (std::size_t c : counts) t += c;
    return t;
}

ConfusionMatrix confusion(std::size_t n_classes, const std::vector<std::size_t>& y_true,
                          const std::vector<std::size_t>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw Error(ErrorCode::ShapeMismatch, "label vectors differ in length");
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= n_classes || y_pred[i] >= n_classes)
            throw Error(ErrorCode::ShapeMismatch, "class index outside matrix");
        ++cm.at(y_true[i], y_pred[i]);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    std::size_t total = cm.total();
    if (total == 0) return 0.0;
    std::size_t hit = 0;
    for (std::size_t k = 0; k < cm.n_classes; ++k) hit += cm.at(k, k);
    return static_cast<double>(hit) / static_cast<double>(total);
}

double macro_f1(const ConfusionMatrix& cm) {
    if (cm.n_classes == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < cm.n_classes; ++k) {
        std::size_t tp = cm.at(k, k);
        std::size_t fn = 0, fp = 0;
        for (std::size_t j = 0; j < cm.n_classes; ++j) {
            if (j == k) continue;
            fn += cm.at(k, j);
            fp += cm.at(j, k);
        }
        double denom = static_cast<double>(2 * tp + fp + fn);
        sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    }
    return sum / static_cast<double>(cm.n_classes);
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
    std::vector<double> out(cm.n_classes, 0.0);
    for (std::size_t k = 0; k < cm.n_classes; ++k) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < cm.n_classes; ++j) row += cm.at(k, j);
        if (row > 0) out[k] = static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
    }
    return out;
}

std::vector<double> row_percentages(const ConfusionMatrix& cm) {
    std::vector<double> out(cm.n_classes * cm.n_classes, 0.0);
    for (std::size_t k = 0; k < cm.n_classes; ++k) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < cm.n_classes; ++j) row += cm.at(k, j);
        if (row == 0) continue;
        for (std::size_t j = 0; j < cm.n_classes; ++j)
            out[k * cm.n_classes + j] =
                100.0 * static_cast<double>(cm.at(k, j)) / static_cast<double>(row);
    }
    return out;
}

namespace {

double accuracy_on(const ClassifierModel& m, const Matrix& x,
                   const std::vector<std::size_t>& y) {
    std::size_t hit = 0;
    std::vector<double> row(x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::memcpy(row.data(), x.row(r), x.cols * sizeof(double));
        if (predict(m, row) == y[r]) ++hit;
    }
    return x.rows ? static_cast<double>(hit) / static_cast<double>(x.rows) : 0.0;
}

} // namespace

std::vector<double> ablation_importance(const ClassifierModel& m, const Matrix& x_raw,
                                        const std::vector<std::size_t>& y) {
    if (x_raw.cols != m.config.input_dim)
        throw Error(ErrorCode::ShapeMismatch, "matrix width does not match model");
    if (x_raw.rows != y.size())
        throw Error(ErrorCode::ShapeMismatch, "feature and label counts differ");
    double base = accuracy_on(m, x_raw, y);
    std::vector<double> importance(x_raw.cols, 0.0);
    Matrix ablated = x_raw;
    for (std::size_t f = 0; f < x_raw.cols; ++f) {
        for (std::size_t r = 0; r < x_raw.rows; ++r) ablated.at(r, f) = m.norm.mean[f];
        importance[f] = base - accuracy_on(m, ablated, y);
        for (std::size_t r = 0; r < x_raw.rows; ++r) ablated.at(r, f) = x_raw.at(r, f);
    }
    return importance;
}

} // namespace mg
