#include "metaguard/mlp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "metaguard/error.hpp"
#include "metaguard/metrics.hpp"

namespace mg {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kDegenerateStd = 1e-12;

void softmax_inplace(double* z, std::size_t n) {
    double mx = z[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = std::exp(z[i] - mx);
        sum += z[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] /= sum;
}

void check_config(const ClassifierConfig& c) {
    if (c.input_dim == 0 || c.hidden_units == 0)
        throw Error(ErrorCode::ShapeMismatch, "zero-sized layer");
    if (c.label_set.size() < 2)
        throw Error(ErrorCode::DegenerateCorpus, "label set needs at least 2 labels");
    if (!(c.dropout_p >= 0.0 && c.dropout_p < 1.0))
        throw Error(ErrorCode::ShapeMismatch, "dropout probability outside [0,1)");
    if (!(c.learning_rate > 0.0) || c.batch_size == 0 || c.epochs == 0)
        throw Error(ErrorCode::ShapeMismatch, "non-positive training hyperparameter");
}

double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

} // namespace

NormStats fit_norm(const Matrix& x) {
    if (x.rows < 2)
        throw Error(ErrorCode::EmptyTrainingSet, "normalization needs at least 2 rows");
    NormStats n;
    n.mean.assign(x.cols, 0.0);
    n.stddev.assign(x.cols, 0.0);
    n.degenerate.assign(x.cols, 0);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c) n.mean[c] += x.at(r, c);
    for (double& m : n.mean) m /= static_cast<double>(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c) {
            double d = x.at(r, c) - n.mean[c];
            n.stddev[c] += d * d;
        }
    for (std::size_t c = 0; c < x.cols; ++c) {
        n.stddev[c] = std::sqrt(n.stddev[c] / static_cast<double>(x.rows));
        if (n.stddev[c] <= kDegenerateStd) n.degenerate[c] = 1;
    }
    return n;
}

std::vector<double> normalize(const std::vector<double>& x, const NormStats& norm) {
    if (x.size() != norm.mean.size())
        throw Error(ErrorCode::ShapeMismatch, "input width does not match norm stats");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = norm.degenerate[i] ? 0.0 : (x[i] - norm.mean[i]) / norm.stddev[i];
    return out;
}

Matrix normalize_rows(const Matrix& x, const NormStats& norm) {
    if (x.cols != norm.mean.size())
        throw Error(ErrorCode::ShapeMismatch, "matrix width does not match norm stats");
    Matrix out(x.rows, x.cols);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t c = 0; c < x.cols; ++c)
            out.at(r, c) =
                norm.degenerate[c] ? 0.0 : (x.at(r, c) - norm.mean[c]) / norm.stddev[c];
    return out;
}

std::vector<double> forward(const ClassifierModel& m, const std::vector<double>& x_norm,
                            bool train_mode, Rng* rng) {
    const std::size_t d = m.config.input_dim;
    const std::size_t h = m.config.hidden_units;
    const std::size_t c = m.n_labels();
    if (x_norm.size() != d)
        throw Error(ErrorCode::ShapeMismatch,
                    "input has " + std::to_string(x_norm.size()) + " entries, model expects " +
                        std::to_string(d));
    if (m.w1.size() != h * d || m.b1.size() != h || m.w2.size() != c * h || m.b2.size() != c)
        throw Error(ErrorCode::ShapeMismatch, "model parameter shapes are inconsistent");

    std::vector<double> hidden(h);
    for (std::size_t j = 0; j < h; ++j) {
        double z = m.b1[j];
        const double* w = m.w1.data() + j * d;
        for (std::size_t i = 0; i < d; ++i) z += w[i] * x_norm[i];
        hidden[j] = z > 0.0 ? z : 0.0;
    }
    if (train_mode && m.config.dropout_p > 0.0 && rng != nullptr) {
        double keep = 1.0 - m.config.dropout_p;
        for (std::size_t j = 0; j < h; ++j)
            hidden[j] = rng->bernoulli(m.config.dropout_p) ? 0.0 : hidden[j] / keep;
    }
    std::vector<double> out(c);
    for (std::size_t k = 0; k < c; ++k) {
        double z = m.b2[k];
        const double* w = m.w2.data() + k * h;
        for (std::size_t j = 0; j < h; ++j) z += w[j] * hidden[j];
        out[k] = z;
    }
    softmax_inplace(out.data(), c);
    return out;
}

std::vector<double> predict_probs(const ClassifierModel& m, const std::vector<double>& x_raw) {
    return forward(m, normalize(x_raw, m.norm));
}

std::size_t predict(const ClassifierModel& m, const std::vector<double>& x_raw) {
    auto p = predict_probs(m, x_raw);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

Gradients batch_gradients(const ClassifierModel& m, const Matrix& x_norm,
                          const std::vector<std::size_t>& y, std::size_t row_begin,
                          std::size_t row_end, const std::vector<double>* hidden_masks) {
    const std::size_t d = m.config.input_dim;
    const std::size_t h = m.config.hidden_units;
    const std::size_t c = m.n_labels();
    const std::size_t n = row_end - row_begin;
    if (x_norm.cols != d || row_end > x_norm.rows || row_begin >= row_end)
        throw Error(ErrorCode::ShapeMismatch, "bad batch bounds");
    if (hidden_masks && hidden_masks->size() != n * h)
        throw Error(ErrorCode::ShapeMismatch, "dropout mask size mismatch");

    Gradients g;
    g.w1.assign(h * d, 0.0);
    g.b1.assign(h, 0.0);
    g.w2.assign(c * h, 0.0);
    g.b2.assign(c, 0.0);

    std::vector<double> z1(n * h), act(n * h), probs(n * c);
    for (std::size_t s = 0; s < n; ++s) {
        const double* x = x_norm.row(row_begin + s);
        for (std::size_t j = 0; j < h; ++j) {
            double z = m.b1[j];
            const double* w = m.w1.data() + j * d;
            for (std::size_t i = 0; i < d; ++i) z += w[i] * x[i];
            z1[s * h + j] = z;
            double a = z > 0.0 ? z : 0.0;
            if (hidden_masks) a *= (*hidden_masks)[s * h + j];
            act[s * h + j] = a;
        }
        double* p = probs.data() + s * c;
        for (std::size_t k = 0; k < c; ++k) {
            double z = m.b2[k];
            const double* w = m.w2.data() + k * h;
            for (std::size_t j = 0; j < h; ++j) z += w[j] * act[s * h + j];
            p[k] = z;
        }
        softmax_inplace(p, c);
        g.loss -= std::log(p[y[row_begin + s]]);
    }
    g.loss /= static_cast<double>(n);

    std::vector<double> da(h);
    for (std::size_t s = 0; s < n; ++s) {
        const double* x = x_norm.row(row_begin + s);
        const double* p = probs.data() + s * c;
        std::fill(da.begin(), da.end(), 0.0);
        for (std::size_t k = 0; k < c; ++k) {
            double dz2 = (p[k] - (y[row_begin + s] == k ? 1.0 : 0.0)) / static_cast<double>(n);
            g.b2[k] += dz2;
            double* gw2 = g.w2.data() + k * h;
            const double* w2 = m.w2.data() + k * h;
            for (std::size_t j = 0; j < h; ++j) {
                gw2[j] += dz2 * act[s * h + j];
                da[j] += dz2 * w2[j];
            }
        }
        for (std::size_t j = 0; j < h; ++j) {
            double dz1 = z1[s * h + j] > 0.0 ? da[j] : 0.0;
            if (hidden_masks) dz1 *= (*hidden_masks)[s * h + j];
            if (dz1 == 0.0) continue;
            g.b1[j] += dz1;
            double* gw1 = g.w1.data() + j * d;
            for (std::size_t i = 0; i < d; ++i) gw1[i] += dz1 * x[i];
        }
    }
    return g;
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& w, const std::vector<double>& g, AdamState& st,
               double lr, std::size_t t) {
    double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
        st.m[i] = kAdamBeta1 * st.m[i] + (1.0 - kAdamBeta1) * g[i];
        st.v[i] = kAdamBeta2 * st.v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
        double mhat = st.m[i] / bc1;
        double vhat = st.v[i] / bc2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
}

} // namespace

TrainResult train(const ClassifierConfig& config, const Matrix& x_raw,
                  const std::vector<std::size_t>& y) {
    check_config(config);
    if (x_raw.cols != config.input_dim)
        throw Error(ErrorCode::ShapeMismatch,
                    "corpus has " + std::to_string(x_raw.cols) + " features, config expects " +
                        std::to_string(config.input_dim));
    if (x_raw.rows != y.size())
        throw Error(ErrorCode::ShapeMismatch, "feature and label counts differ");

    const std::size_t n_labels = config.label_set.size();
    std::vector<std::size_t> counts(n_labels, 0);
    for (std::size_t cls : y) {
        if (cls >= n_labels)
            throw Error(ErrorCode::ShapeMismatch, "label index outside label set");
        ++counts[cls];
    }
    for (std::size_t k = 0; k < n_labels; ++k)
        if (counts[k] < 2)
            throw Error(ErrorCode::DegenerateCorpus,
                        "label '" + config.label_set[k] + "' has " + std::to_string(counts[k]) +
                            " samples, needs at least 2");

    const std::size_t d = config.input_dim;
    const std::size_t h = config.hidden_units;
    const std::size_t c = n_labels;
    const std::size_t n = x_raw.rows;

    ClassifierModel m;
    m.config = config;
    m.norm = fit_norm(x_raw);
    Matrix xn = normalize_rows(x_raw, m.norm);

    Rng init_rng(derive_seed(config.seed, 0));
    Rng shuffle_rng(derive_seed(config.seed, 1));
    Rng dropout_rng(derive_seed(config.seed, 2));

    double lim1 = std::sqrt(6.0 / static_cast<double>(d));
    double lim2 = std::sqrt(6.0 / static_cast<double>(h));
    m.w1.resize(h * d);
    for (double& w : m.w1) w = init_rng.uniform(-lim1, lim1);
    m.b1.assign(h, 0.0);
    m.w2.resize(c * h);
    for (double& w : m.w2) w = init_rng.uniform(-lim2, lim2);
    m.b2.assign(c, 0.0);

    AdamState aw1(h * d), ab1(h), aw2(c * h), ab2(c);
    std::size_t t = 0;

    TrainResult res;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Matrix xp(n, d);
    std::vector<std::size_t> yp(n);
    std::vector<double> masks;
    const bool use_dropout = config.dropout_p > 0.0;
    const double keep = 1.0 - config.dropout_p;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(perm);
        for (std::size_t r = 0; r < n; ++r) {
            std::memcpy(xp.row(r), xn.row(perm[r]), d * sizeof(double));
            yp[r] = y[perm[r]];
        }

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            std::size_t end = std::min(start + config.batch_size, n);
            std::size_t bs = end - start;
            const std::vector<double>* mask_ptr = nullptr;
            if (use_dropout) {
                masks.resize(bs * h);
                for (double& v : masks)
                    v = dropout_rng.bernoulli(config.dropout_p) ? 0.0 : 1.0 / keep;
                mask_ptr = &masks;
            }
            Gradients g = batch_gradients(m, xp, yp, start, end, mask_ptr);
            if (!std::isfinite(g.loss))
                throw Error(ErrorCode::NonFiniteLoss,
                            "loss diverged at epoch " + std::to_string(epoch));
            loss_sum += g.loss * static_cast<double>(bs);
            ++t;
            adam_step(m.w1, g.w1, aw1, config.learning_rate, t);
            adam_step(m.b1, g.b1, ab1, config.learning_rate, t);
            adam_step(m.w2, g.w2, aw2, config.learning_rate, t);
            adam_step(m.b2, g.b2, ab2, config.learning_rate, t);
        }
        res.loss_trace.push_back(loss_sum / static_cast<double>(n));
    }

    // Deployment quantization: page every parameter through f32 so the
    // serialized model reproduces in-memory inference bit for bit.
    for (auto* vec : {&m.w1, &m.b1, &m.w2, &m.b2, &m.norm.mean, &m.norm.stddev})
        for (double& v : *vec) v = quantize_f32(v);
    for (std::size_t i = 0; i < m.norm.stddev.size(); ++i)
        m.norm.degenerate[i] = m.norm.stddev[i] <= kDegenerateStd ? 1 : 0;

    res.model = std::move(m);
    return res;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const std::vector<std::size_t>& y,
                                                       std::size_t n_classes,
                                                       std::size_t min_count) {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] >= n_classes)
            throw Error(ErrorCode::ShapeMismatch, "label index outside label set");
        by_class[y[i]].push_back(i);
    }
    for (std::size_t k = 0; k < n_classes; ++k)
        if (by_class[k].size() < min_count)
            throw Error(ErrorCode::DegenerateCorpus,
                        "class " + std::to_string(k) + " has " +
                            std::to_string(by_class[k].size()) + " samples, needs at least " +
                            std::to_string(min_count));
    return by_class;
}

} // namespace

SplitIndices stratified_split(const std::vector<std::size_t>& y, std::size_t n_classes,
                              double train_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw Error(ErrorCode::ShapeMismatch, "train fraction outside (0,1)");
    auto by_class = indices_by_class(y, n_classes, 2);
    Rng rng(seed);
    SplitIndices out;
    for (auto& idx : by_class) {
        rng.shuffle(idx);
        auto n_train = static_cast<std::size_t>(
            std::llround(train_frac * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + n_train);
        out.test.insert(out.test.end(), idx.begin() + n_train, idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::size_t>& y,
                                                       std::size_t n_classes, std::size_t k,
                                                       std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::ShapeMismatch, "need at least 2 folds");
    auto by_class = indices_by_class(y, n_classes, k);
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t cursor = 0;
    for (auto& idx : by_class) {
        rng.shuffle(idx);
        std::size_t base = idx.size() / k;
        std::size_t rem = idx.size() % k;
        std::vector<std::size_t> quota(k, base);
        for (std::size_t j = 0; j < rem; ++j) ++quota[(cursor + j) % k];
        cursor = (cursor + rem) % k;
        std::size_t pos = 0;
        for (std::size_t f = 0; f < k; ++f) {
            folds[f].insert(folds[f].end(), idx.begin() + pos, idx.begin() + pos + quota[f]);
            pos += quota[f];
        }
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<FoldMetrics> cross_validate(const ClassifierConfig& config, const Matrix& x_raw,
                                        const std::vector<std::size_t>& y, std::size_t k,
                                        std::uint64_t seed) {
    auto folds = stratified_folds(y, config.label_set.size(), k, seed);
    std::vector<FoldMetrics> out;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::uint8_t> in_test(y.size(), 0);
        for (std::size_t i : folds[f]) in_test[i] = 1;

        Matrix x_tr(y.size() - folds[f].size(), x_raw.cols);
        std::vector<std::size_t> y_tr;
        y_tr.reserve(x_tr.rows);
        std::size_t r = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (in_test[i]) continue;
            std::memcpy(x_tr.row(r), x_raw.row(i), x_raw.cols * sizeof(double));
            y_tr.push_back(y[i]);
            ++r;
        }

        ClassifierConfig cfg = config;
        cfg.seed = derive_seed(seed, f);
        TrainResult res = train(cfg, x_tr, y_tr);

        std::vector<std::size_t> y_true, y_pred;
        y_true.reserve(folds[f].size());
        for (std::size_t i : folds[f]) {
            std::vector<double> row(x_raw.row(i), x_raw.row(i) + x_raw.cols);
            y_true.push_back(y[i]);
            y_pred.push_back(predict(res.model, row));
        }
        ConfusionMatrix cm = confusion(config.label_set.size(), y_true, y_pred);
        out.push_back({accuracy(cm), macro_f1(cm)});
    }
    return out;
}

std::uint32_t crc32(const void* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int b = 0; b < 8; ++b) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xffffffffu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

namespace {

constexpr char kMagic[5] = {'M', 'G', 'M', 'D', 'L'};

void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& b, double v) {
    float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(b, u);
}

struct ByteReader {
    const std::string& bytes;
    std::size_t limit;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > limit)
            throw Error(ErrorCode::CorruptWeights, "model file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f32() {
        std::uint32_t u = u32();
        float f;
        std::memcpy(&f, &u, 4);
        return static_cast<double>(f);
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

std::string save_model(const ClassifierModel& m) {
    std::string b;
    b.append(kMagic, 5);
    put_u32(b, static_cast<std::uint32_t>(m.format_version));
    put_u32(b, static_cast<std::uint32_t>(m.config.input_dim));
    put_u32(b, static_cast<std::uint32_t>(m.config.hidden_units));
    put_u32(b, static_cast<std::uint32_t>(m.n_labels()));
    put_f32(b, m.config.dropout_p);
    for (const std::string& name : m.config.label_set) {
        put_u32(b, static_cast<std::uint32_t>(name.size()));
        b += name;
    }
    for (double v : m.norm.mean) put_f32(b, v);
    for (double v : m.norm.stddev) put_f32(b, v);
    for (const auto* vec : {&m.w1, &m.b1, &m.w2, &m.b2})
        for (double v : *vec) put_f32(b, v);
    put_u32(b, crc32(b.data(), b.size()));
    return b;
}

ClassifierModel load_model(const std::string& bytes) {
    if (bytes.size() < 5 + 4 + 4)
        throw Error(ErrorCode::CorruptWeights, "model file truncated");
    if (std::memcmp(bytes.data(), kMagic, 5) != 0)
        throw Error(ErrorCode::CorruptWeights, "bad magic, not a model file");

    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i)
        stored_crc |= static_cast<std::uint32_t>(
                          static_cast<unsigned char>(bytes[bytes.size() - 4 + i]))
                      << (8 * i);
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw Error(ErrorCode::CorruptWeights, "checksum mismatch");

    ByteReader r{bytes, bytes.size() - 4, 5};
    std::uint32_t version = r.u32();
    if (version != static_cast<std::uint32_t>(kModelFormatVersion))
        throw Error(ErrorCode::UnsupportedVersion,
                    "model format version " + std::to_string(version));

    ClassifierModel m;
    m.format_version = static_cast<int>(version);
    std::uint32_t d = r.u32();
    std::uint32_t h = r.u32();
    std::uint32_t c = r.u32();
    if (d == 0 || h == 0 || c < 2 || d > 1'000'000 || h > 1'000'000 || c > 1'000'000)
        throw Error(ErrorCode::CorruptWeights, "implausible model dimensions");
    m.config.input_dim = d;
    m.config.hidden_units = h;
    m.config.dropout_p = r.f32();
    m.config.label_set.clear();
    for (std::uint32_t i = 0; i < c; ++i) {
        std::uint32_t len = r.u32();
        if (len > 1024)
            throw Error(ErrorCode::CorruptWeights, "implausible label length");
        m.config.label_set.push_back(r.str(len));
    }
    m.norm.mean.resize(d);
    m.norm.stddev.resize(d);
    m.norm.degenerate.resize(d);
    for (auto& v : m.norm.mean) v = r.f32();
    for (std::size_t i = 0; i < d; ++i) {
        m.norm.stddev[i] = r.f32();
        if (m.norm.stddev[i] < 0.0)
            throw Error(ErrorCode::CorruptWeights, "negative standard deviation");
        m.norm.degenerate[i] = m.norm.stddev[i] <= kDegenerateStd ? 1 : 0;
    }
    m.w1.resize(static_cast<std::size_t>(h) * d);
    m.b1.resize(h);
    m.w2.resize(static_cast<std::size_t>(c) * h);
    m.b2.resize(c);
    for (auto* vec : {&m.w1, &m.b1, &m.w2, &m.b2})
        for (double& v : *vec) {
            v = r.f32();
            if (!std::isfinite(v))
                throw Error(ErrorCode::CorruptWeights, "non-finite parameter");
        }
    if (r.pos != r.limit)
        throw Error(ErrorCode::CorruptWeights, "trailing bytes after parameters");
    return m;
}

void save_model_file(const ClassifierModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
    std::string bytes = save_model(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "short write to '" + path + "'");
}

ClassifierModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_model(bytes);
}

} // namespace mg
