#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccl/rng.hpp"
#include "ccl/tensor.hpp"

namespace ccl {

// Training corpus plus its semi-supervised bookkeeping. `labels` is what
// training is allowed to see for labeled rows (corruption edits it);
// `true_labels` is a diagnostics-only record of the generated ground truth.
struct Dataset {
    Tensor features;                       // N x d
    std::vector<int> labels;               // observed; -1 only for rows loaded as unlabeled
    std::vector<int> true_labels;          // diagnostics only, never fed to training
    std::vector<std::uint8_t> labeled;     // D_L membership of training rows
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    std::vector<std::size_t> corrupted_idx;
    int n_classes = 0;

    std::size_t size() const { return features.rows; }

    std::size_t labeled_count() const {
        std::size_t n = 0;
        for (std::size_t i : train_idx) n += labeled[i] ? 1 : 0;
        return n;
    }

    void validate() const {
        const std::size_t n = size();
        if (labels.size() != n || true_labels.size() != n || labeled.size() != n) {
            throw std::invalid_argument("dataset: per-sample field length mismatch");
        }
        std::vector<std::uint8_t> seen(n, 0);
        for (std::size_t i : train_idx) {
            if (i >= n) throw std::invalid_argument("dataset: train index out of range");
            seen[i] = 1;
        }
        for (std::size_t i : test_idx) {
            if (i >= n) throw std::invalid_argument("dataset: test index out of range");
            if (seen[i]) throw std::invalid_argument("dataset: train/test splits overlap");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (labeled[i] && (labels[i] < 0 || labels[i] >= n_classes)) {
                throw std::invalid_argument("dataset: labeled sample with invalid class index");
            }
        }
    }
};

// What the trainer's loss path sees. Labels of unlabeled rows are -1: the
// true labels of D_U never reach a Batch.
struct Batch {
    Tensor inputs;
    std::vector<int> labels;
    std::vector<std::uint8_t> labeled;

    std::size_t size() const { return inputs.rows; }
};

struct LabeledPoints {
    Tensor features;
    std::vector<int> labels;
};

inline constexpr double kPiValue = 3.141592653589793238462643383279502884;

// ---- raw point generators (pre-standardization) ----

// Two interleaved half-circle arcs; with noise 0 the points lie exactly on
// the arcs.
inline LabeledPoints two_moons_points(std::size_t n, double noise, RngStream& rng) {
    const std::size_t n_outer = n / 2 + (n % 2);
    const std::size_t n_inner = n / 2;
    LabeledPoints pts;
    pts.features = Tensor(n, 2);
    pts.labels.resize(n);
    for (std::size_t i = 0; i < n_outer; ++i) {
        const double t = n_outer > 1 ? kPiValue * static_cast<double>(i) / static_cast<double>(n_outer - 1) : 0.0;
        pts.features(i, 0) = std::cos(t);
        pts.features(i, 1) = std::sin(t);
        pts.labels[i] = 0;
    }
    for (std::size_t i = 0; i < n_inner; ++i) {
        const double t = n_inner > 1 ? kPiValue * static_cast<double>(i) / static_cast<double>(n_inner - 1) : 0.0;
        const std::size_t r = n_outer + i;
        pts.features(r, 0) = 1.0 - std::cos(t);
        pts.features(r, 1) = 0.5 - std::sin(t);
        pts.labels[r] = 1;
    }
    if (noise > 0.0) {
        for (double& v : pts.features.data) v += noise * rng.gaussian();
    }
    return pts;
}

// Gaussian clusters centered on a circle, one per class, counts differing by
// at most one.
inline LabeledPoints gaussian_blob_points(std::size_t n, int classes, double spread,
                                          RngStream& rng) {
    LabeledPoints pts;
    pts.features = Tensor(n, 2);
    pts.labels.resize(n);
    const std::size_t base = n / static_cast<std::size_t>(classes);
    const std::size_t extra = n % static_cast<std::size_t>(classes);
    std::size_t row = 0;
    for (int c = 0; c < classes; ++c) {
        const double angle = 2.0 * kPiValue * static_cast<double>(c) / static_cast<double>(classes);
        const double cx = 3.0 * std::cos(angle);
        const double cy = 3.0 * std::sin(angle);
        const std::size_t count = base + (static_cast<std::size_t>(c) < extra ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i, ++row) {
            pts.features(row, 0) = cx + spread * rng.gaussian();
            pts.features(row, 1) = cy + spread * rng.gaussian();
            pts.labels[row] = c;
        }
    }
    return pts;
}

// Two concentric circles, inner radius 0.5.
inline LabeledPoints concentric_circle_points(std::size_t n, double noise, RngStream& rng) {
    const std::size_t n_outer = n / 2 + (n % 2);
    const std::size_t n_inner = n / 2;
    LabeledPoints pts;
    pts.features = Tensor(n, 2);
    pts.labels.resize(n);
    for (std::size_t i = 0; i < n_outer; ++i) {
        const double t = 2.0 * kPiValue * static_cast<double>(i) / static_cast<double>(n_outer);
        pts.features(i, 0) = std::cos(t);
        pts.features(i, 1) = std::sin(t);
        pts.labels[i] = 0;
    }
    for (std::size_t i = 0; i < n_inner; ++i) {
        const double t = 2.0 * kPiValue * static_cast<double>(i) / static_cast<double>(n_inner);
        const std::size_t r = n_outer + i;
        pts.features(r, 0) = 0.5 * std::cos(t);
        pts.features(r, 1) = 0.5 * std::sin(t);
        pts.labels[r] = 1;
    }
    if (noise > 0.0) {
        for (double& v : pts.features.data) v += noise * rng.gaussian();
    }
    return pts;
}

// Zero mean, unit variance per dimension (population variance).
inline void standardize_features(Tensor& f) {
    for (std::size_t j = 0; j < f.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < f.rows; ++i) mean += f(i, j);
        mean /= static_cast<double>(f.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < f.rows; ++i) {
            const double d = f(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(f.rows);
        const double sd = std::sqrt(std::max(var, 1e-24));
        for (std::size_t i = 0; i < f.rows; ++i) f(i, j) = (f(i, j) - mean) / sd;
    }
}

namespace detail {

inline Dataset points_to_dataset(LabeledPoints&& pts, int n_classes) {
    Dataset d;
    standardize_features(pts.features);
    d.features = std::move(pts.features);
    d.labels = pts.labels;
    d.true_labels = std::move(pts.labels);
    d.labeled.assign(d.features.rows, 1);
    d.train_idx.resize(d.features.rows);
    std::iota(d.train_idx.begin(), d.train_idx.end(), 0);
    d.n_classes = n_classes;
    return d;
}

inline void require_min_size(std::size_t n, int classes, const char* gen) {
    if (n < 2 * static_cast<std::size_t>(classes)) {
        throw std::invalid_argument(std::string(gen) + ": n too small (need at least 2 per class)");
    }
}

}  // namespace detail

inline Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
    detail::require_min_size(n, 2, "gen_two_moons");
    RngStream rng(seed);
    return detail::points_to_dataset(two_moons_points(n, noise, rng), 2);
}

inline Dataset gen_blobs(std::size_t n, int classes, double spread, std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("gen_blobs: need at least 2 classes");
    detail::require_min_size(n, classes, "gen_blobs");
    RngStream rng(seed);
    return detail::points_to_dataset(gaussian_blob_points(n, classes, spread, rng), classes);
}

inline Dataset gen_circles(std::size_t n, double noise, std::uint64_t seed) {
    detail::require_min_size(n, 2, "gen_circles");
    RngStream rng(seed);
    return detail::points_to_dataset(concentric_circle_points(n, noise, rng), 2);
}

// Stratified train/test split: per class, round(count * test_fraction) rows
// go to the test side after a seeded shuffle.
inline Dataset split_train_test(const Dataset& input, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must be in (0,1)");
    }
    Dataset d = input;
    RngStream rng(seed);
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(d.n_classes));
    for (std::size_t i = 0; i < d.size(); ++i) {
        by_class[static_cast<std::size_t>(d.true_labels[i])].push_back(i);
    }
    d.train_idx.clear();
    d.test_idx.clear();
    for (std::vector<std::size_t>& rows : by_class) {
        rng.shuffle(rows);
        const std::size_t n_test =
            static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(rows.size())));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            (i < n_test ? d.test_idx : d.train_idx).push_back(rows[i]);
        }
    }
    std::sort(d.train_idx.begin(), d.train_idx.end());
    std::sort(d.test_idx.begin(), d.test_idx.end());
    for (std::size_t i : d.test_idx) d.labeled[i] = 0;
    return d;
}

// Marks exactly n_labeled class-balanced training rows as labeled; the rest
// of the training rows stay in the set with their true labels hidden behind
// the diagnostics accessor.
inline Dataset split_semi_supervised(const Dataset& input, std::size_t n_labeled,
                                     std::uint64_t seed) {
    Dataset d = input;
    const std::size_t classes = static_cast<std::size_t>(d.n_classes);
    if (n_labeled < classes) {
        throw std::invalid_argument("split_semi_supervised: n_labeled below class count");
    }
    if (n_labeled > d.train_idx.size()) {
        throw std::invalid_argument("split_semi_supervised: n_labeled exceeds train size");
    }
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i : d.train_idx) {
        by_class[static_cast<std::size_t>(d.true_labels[i])].push_back(i);
    }
    const std::size_t base = n_labeled / classes;
    const std::size_t extra = n_labeled % classes;
    RngStream rng(seed);
    for (std::size_t i : d.train_idx) d.labeled[i] = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t want = base + (c < extra ? 1 : 0);
        if (by_class[c].size() < want) {
            throw std::invalid_argument("split_semi_supervised: infeasible class balance, class " +
                                        std::to_string(c) + " has only " +
                                        std::to_string(by_class[c].size()) + " train samples");
        }
        rng.shuffle(by_class[c]);
        for (std::size_t i = 0; i < want; ++i) d.labeled[by_class[c][i]] = 1;
    }
    return d;
}

// Replaces round(fraction * N_l) observed labels of labeled training rows
// with a uniformly random *different* class. Corrupted indices are recorded;
// true_labels and the labeled flags are untouched.
inline Dataset corrupt_labels(const Dataset& input, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw std::invalid_argument("corrupt_fraction must be in [0,1]");
    }
    Dataset d = input;
    d.corrupted_idx.clear();
    if (fraction == 0.0) return d;
    if (d.n_classes < 2) {
        throw std::invalid_argument("corrupt_labels: need at least 2 classes");
    }

    std::vector<std::size_t> pool;
    for (std::size_t i : d.train_idx) {
        if (d.labeled[i]) pool.push_back(i);
    }
    const std::size_t n_corrupt =
        static_cast<std::size_t>(std::lround(fraction * static_cast<double>(pool.size())));
    RngStream rng(seed);
    rng.shuffle(pool);
    for (std::size_t i = 0; i < n_corrupt; ++i) {
        const std::size_t row = pool[i];
        const int original = d.labels[row];
        int offset = static_cast<int>(rng.uniform_u64(1, static_cast<std::uint64_t>(d.n_classes - 1)));
        d.labels[row] = (original + offset) % d.n_classes;
        d.corrupted_idx.push_back(row);
    }
    std::sort(d.corrupted_idx.begin(), d.corrupted_idx.end());
    return d;
}

// ---- CSV I/O ----
// Header f0..f{d-1},label,labeled. Label -1 marks a row stored without a
// label; such rows are forced unlabeled on load. Values are printed at 17
// significant digits so a save/load round trip is lossless.

inline void save_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
    if (!out) throw std::runtime_error("save_csv: cannot open '" + path + "'");
    for (std::size_t j = 0; j < d.features.cols; ++j) out << "f" << j << ",";
    out << "label,labeled\n";
    char buf[32];
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d.features.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", d.features(i, j));
            out << buf << ",";
        }
        out << d.labels[i] << "," << (d.labeled[i] ? 1 : 0) << "\n";
    }
    if (!out) throw std::runtime_error("save_csv: write failed for '" + path + "'");
}

inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: no data rows in '" + path + "'");

    const auto split = [](const std::string& s) {
        std::vector<std::string> fields;
        std::string cur;
        std::stringstream ss(s);
        while (std::getline(ss, cur, ',')) fields.push_back(cur);
        if (!s.empty() && s.back() == ',') fields.emplace_back();
        return fields;
    };

    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split(line);
    if (header.size() < 3 || header[header.size() - 2] != "label" || header.back() != "labeled") {
        throw std::runtime_error("load_csv: line 1: expected header f0,...,label,labeled");
    }
    const std::size_t dim = header.size() - 2;

    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::uint8_t> labeled;
    std::size_t line_no = 1;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split(line);
        if (fields.size() != dim + 2) {
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(dim + 2) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        try {
            std::size_t pos = 0;
            for (std::size_t j = 0; j < dim; ++j) {
                values.push_back(std::stod(fields[j], &pos));
                if (pos != fields[j].size()) throw std::invalid_argument("trailing characters");
            }
            const int label = std::stoi(fields[dim], &pos);
            if (pos != fields[dim].size()) throw std::invalid_argument("trailing characters");
            const int flag = std::stoi(fields[dim + 1], &pos);
            if (pos != fields[dim + 1].size()) throw std::invalid_argument("trailing characters");
            if (label < -1) throw std::invalid_argument("label below -1");
            if (flag != 0 && flag != 1) throw std::invalid_argument("labeled flag not 0/1");
            if (flag == 1 && label < 0) throw std::invalid_argument("labeled row without a label");
            labels.push_back(label);
            labeled.push_back(static_cast<std::uint8_t>(flag));
            max_label = std::max(max_label, label);
        } catch (const std::exception& e) {
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (labels.empty()) throw std::runtime_error("load_csv: no data rows in '" + path + "'");

    Dataset d;
    d.features = Tensor(labels.size(), dim);
    d.features.data = std::move(values);
    d.labels = labels;
    d.true_labels = std::move(labels);
    d.labeled = std::move(labeled);
    d.train_idx.resize(d.size());
    std::iota(d.train_idx.begin(), d.train_idx.end(), 0);
    d.n_classes = max_label + 1;
    return d;
}

// Labeled rows come first; labels of unlabeled rows are replaced by -1.
inline Batch assemble_batch(const Dataset& d, const std::vector<std::size_t>& labeled_rows,
                            const std::vector<std::size_t>& unlabeled_rows) {
    Batch b;
    const std::size_t n = labeled_rows.size() + unlabeled_rows.size();
    b.inputs = Tensor(n, d.features.cols);
    b.labels.reserve(n);
    b.labeled.reserve(n);
    std::size_t row = 0;
    for (std::size_t i : labeled_rows) {
        std::copy(d.features.row_ptr(i), d.features.row_ptr(i) + d.features.cols,
                  b.inputs.row_ptr(row++));
        b.labels.push_back(d.labels[i]);
        b.labeled.push_back(1);
    }
    for (std::size_t i : unlabeled_rows) {
        std::copy(d.features.row_ptr(i), d.features.row_ptr(i) + d.features.cols,
                  b.inputs.row_ptr(row++));
        b.labels.push_back(-1);
        b.labeled.push_back(0);
    }
    return b;
}

inline Tensor rows_subset(const Tensor& features, const std::vector<std::size_t>& idx) {
    Tensor out(idx.size(), features.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy(features.row_ptr(idx[r]), features.row_ptr(idx[r]) + features.cols,
                  out.row_ptr(r));
    }
    return out;
}

}  // namespace ccl
