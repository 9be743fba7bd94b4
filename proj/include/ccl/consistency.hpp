#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ccl/losses.hpp"
#include "ccl/masks.hpp"
#include "ccl/tensor.hpp"

namespace ccl {

struct ConsistencyResult {
    double loss = 0.0;                // (1/|B|) * sum_i keep_i * l_i
    std::vector<double> per_sample;   // l_i, zero for masked samples
    Tensor grad_student_logits;       // zero rows for masked samples
};

// Per-sample MSE between the teacher's and the student's temperature-softmax
// outputs, the same T_i applied to both rows. Masked samples contribute
// nothing to the loss or the gradient, and no gradient flows to the teacher.
inline ConsistencyResult consistency_loss(const Tensor& student_logits,
                                          const Tensor& teacher_logits,
                                          const std::vector<double>& temps,
                                          const KeepMask& keep) {
    require_same_shape(student_logits, teacher_logits, "consistency_loss");
    if (temps.size() != student_logits.rows || keep.size() != student_logits.rows) {
        throw std::invalid_argument("consistency_loss: temperature/mask length mismatch");
    }
    for (double t : temps) {
        if (!(t > 0.0)) throw std::invalid_argument("consistency_loss: non-positive temperature");
    }

    const std::size_t batch = student_logits.rows;
    const std::size_t classes = student_logits.cols;
    ConsistencyResult res;
    res.per_sample.assign(batch, 0.0);
    res.grad_student_logits = Tensor(batch, classes, 0.0);

    std::vector<double> p(classes);  // student
    std::vector<double> q(classes);  // teacher
    const double inv_batch = 1.0 / static_cast<double>(batch);
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        if (!keep[i]) continue;
        const double t = temps[i];
        detail::softmax_row(student_logits.row_ptr(i), classes, t, p.data());
        detail::softmax_row(teacher_logits.row_ptr(i), classes, t, q.data());

        double l = 0.0;
        double g_dot_p = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            const double d = p[c] - q[c];
            l += d * d;
            g_dot_p += 2.0 * d * p[c];
        }
        res.per_sample[i] = l;
        total += l;

        // d l / d z_j = (1/T) p_j (g_j - <g, p>), g = 2 (p - q); batch-mean scale
        double* grad = res.grad_student_logits.row_ptr(i);
        for (std::size_t c = 0; c < classes; ++c) {
            grad[c] = inv_batch * (p[c] * (2.0 * (p[c] - q[c]) - g_dot_p)) / t;
        }
    }
    res.loss = total * inv_batch;
    return res;
}

struct TotalLossResult {
    double total = 0.0;
    double supervised = 0.0;   // mean cross-entropy over labeled rows (0 if none)
    double consistency = 0.0;  // batch-mean consistency term, before lambda
    std::size_t labeled_count = 0;
    Tensor grad_student_logits;
};

// Combined objective: mean cross-entropy over the labeled rows plus
// lambda * consistency over all kept rows (labeled and unlabeled). A batch
// with no labeled rows has supervised term 0; that is not an error.
inline TotalLossResult total_loss(const Tensor& student_logits, const Tensor& teacher_logits,
                                  const std::vector<int>& labels,
                                  const std::vector<std::uint8_t>& labeled,
                                  const std::vector<double>& temps, const KeepMask& keep,
                                  double lambda) {
    if (labels.size() != student_logits.rows || labeled.size() != student_logits.rows) {
        throw std::invalid_argument("total_loss: label/flag length mismatch");
    }

    TotalLossResult res;
    res.grad_student_logits = Tensor(student_logits.rows, student_logits.cols, 0.0);

    std::size_t n_labeled = 0;
    for (std::uint8_t f : labeled) n_labeled += f ? 1 : 0;
    res.labeled_count = n_labeled;

    if (n_labeled > 0) {
        const Tensor probs = softmax(student_logits);
        const double inv = 1.0 / static_cast<double>(n_labeled);
        double ce_sum = 0.0;
        for (std::size_t i = 0; i < student_logits.rows; ++i) {
            if (!labeled[i]) continue;
            const CrossEntropyResult ce = cross_entropy(probs, i, labels[i]);
            ce_sum += ce.loss;
            double* grad = res.grad_student_logits.row_ptr(i);
            for (std::size_t c = 0; c < student_logits.cols; ++c) {
                grad[c] += inv * ce.grad_logits[c];
            }
        }
        res.supervised = ce_sum * inv;
    }

    const ConsistencyResult cons = consistency_loss(student_logits, teacher_logits, temps, keep);
    res.consistency = cons.loss;
    if (lambda != 0.0) {
        for (std::size_t i = 0; i < res.grad_student_logits.data.size(); ++i) {
            res.grad_student_logits.data[i] += lambda * cons.grad_student_logits.data[i];
        }
    }
    res.total = res.supervised + lambda * res.consistency;
    return res;
}

}  // namespace ccl
