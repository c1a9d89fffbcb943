// mlp.hpp: from-scratch single-hidden-layer MLP with deterministic Adam
// training, z-score normalization, and a checksummed binary weights format.
//
// Everything is computed in double precision, but a freshly trained model is
// quantized through 32-bit floats before it is returned, so the on-disk f32
// format round-trips bit-exactly and two identically seeded runs serialize
// to identical bytes.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaguard/rng.hpp"

namespace mg {

struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data; // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

struct ClassifierConfig {
    std::size_t input_dim = 14;
    std::size_t hidden_units = 64;
    double dropout_p = 0.3;
    double learning_rate = 0.001;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    std::vector<std::string> label_set = {"Neutral", "Engaged", "Stressed", "Relaxed"};
    std::uint64_t seed = 1;
};

struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;          // population convention
    std::vector<std::uint8_t> degenerate; // stddev ~ 0; such features map to 0
};

// Column stats over a feature matrix; needs at least 2 rows.
NormStats fit_norm(const Matrix& x);

std::vector<double> normalize(const std::vector<double>& x, const NormStats& norm);
Matrix normalize_rows(const Matrix& x, const NormStats& norm);

inline constexpr int kModelFormatVersion = 1;

struct ClassifierModel {
    ClassifierConfig config;
    NormStats norm;
    // w1: hidden x input, w2: labels x hidden, both row-major.
    std::vector<double> w1, b1, w2, b2;
    int format_version = kModelFormatVersion;

    std::size_t n_labels() const { return config.label_set.size(); }
};

// Probabilities over config.label_set for one normalized input row. Dropout
// (inverted, so inference needs no rescale) is applied only when train_mode
// is set, drawing the mask from rng.
std::vector<double> forward(const ClassifierModel& m, const std::vector<double>& x_norm,
                            bool train_mode = false, Rng* rng = nullptr);

// Normalizes a raw feature row and returns the argmax class index.
std::size_t predict(const ClassifierModel& m, const std::vector<double>& x_raw);
std::vector<double> predict_probs(const ClassifierModel& m, const std::vector<double>& x_raw);

// Mean cross-entropy loss and gradients for one batch of normalized rows.
// hidden_masks, when given, holds n*hidden inverted-dropout factors (0 or
// 1/(1-p)); null means dropout off. Exposed for the finite-difference
// gradient oracle.
struct Gradients {
    std::vector<double> w1, b1, w2, b2;
    double loss = 0.0;
};
Gradients batch_gradients(const ClassifierModel& m, const Matrix& x_norm,
                          const std::vector<std::size_t>& y, std::size_t row_begin,
                          std::size_t row_end, const std::vector<double>* hidden_masks);

struct TrainResult {
    ClassifierModel model;
    std::vector<double> loss_trace; // mean cross-entropy per epoch
};

// The full recipe: He-uniform init from config.seed, z-score normalization
// fitted on this corpus, Adam (beta1 0.9, beta2 0.999, eps 1e-8), per-epoch
// reshuffle, last partial batch included, fixed epoch count. Deterministic
// given (config, corpus). y holds indices into config.label_set.
TrainResult train(const ClassifierConfig& config, const Matrix& x_raw,
                  const std::vector<std::size_t>& y);

// Per-class round(train_frac * n) rows to train, rest to test; both index
// lists ascending. Every class needs at least 2 members.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
SplitIndices stratified_split(const std::vector<std::size_t>& y, std::size_t n_classes,
                              double train_frac, std::uint64_t seed);

// k stratified folds; per-class remainders are dealt round-robin with a
// cursor carried across classes, so fold sizes differ by at most 1 overall.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::size_t>& y,
                                                       std::size_t n_classes, std::size_t k,
                                                       std::uint64_t seed);

struct FoldMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};
std::vector<FoldMetrics> cross_validate(const ClassifierConfig& config, const Matrix& x_raw,
                                        const std::vector<std::size_t>& y, std::size_t k,
                                        std::uint64_t seed);

// Binary weights format: "MGMDL", format_version u32, dims, dropout
// metadata, label names, norm stats, then w1,b1,w2,b2 as little-endian f32,
// with a trailing CRC32 over everything before it.
std::string save_model(const ClassifierModel& m);
ClassifierModel load_model(const std::string& bytes);
void save_model_file(const ClassifierModel& m, const std::string& path);
ClassifierModel load_model_file(const std::string& path);

std::uint32_t crc32(const void* data, std::size_t len);

} // namespace mg
