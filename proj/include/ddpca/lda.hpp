#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "ddpca/covariance.hpp"
#include "ddpca/rng.hpp"
#include "ddpca/types.hpp"

namespace ddpca {

/// Binary-labeled feature matrix; labels take values 1 and 2.
template <typename Scalar>
struct LabeledDataset {
  Matrix<Scalar> features;  // n x p
  std::vector<int> labels;

  void validate() const {
    if (static_cast<Index>(labels.size()) != features.rows()) {
      throw std::invalid_argument("LabeledDataset: label count must match rows");
    }
    Index n1 = 0, n2 = 0;
    for (const int label : labels) {
      if (label == 1) ++n1;
      else if (label == 2) ++n2;
      else throw std::invalid_argument("LabeledDataset: labels must be 1 or 2");
    }
    if (n1 < 2 || n2 < 2) {
      throw std::invalid_argument("LabeledDataset: both classes need at least 2 samples");
    }
  }
};

struct LdaOptions {
  // t-score denominator n * s_j as written in the four-step scheme; the
  // conventional two-sample scaling s_j * sqrt(1/n1 + 1/n2) is optional.
  bool paper_scaling = true;
};

template <typename Scalar>
struct LdaModel {
  Vector<Scalar> tscore;       // Z
  Vector<Scalar> transformed;  // Z-tilde = Omega Z
  Vector<Scalar> selector;     // w(j) = sgn(Z-tilde(j)) 1{|Z-tilde(j)| >= t}
  Vector<Scalar> mean1, mean2;
  Vector<Scalar> pooled_sd;    // 1 where the feature was dropped
  std::vector<Index> dropped;  // zero pooled-sd features
  Scalar threshold = 0;
};

template <typename Scalar>
LdaModel<Scalar> lda_train(const LabeledDataset<Scalar>& train, const Matrix<Scalar>& omega,
                           Scalar threshold, const LdaOptions& options = {}) {
  train.validate();
  if (omega.rows() != train.features.cols() || omega.cols() != train.features.cols()) {
    throw std::invalid_argument("lda_train: omega dimension must match feature count");
  }
  const Index n = train.features.rows();
  const Index p = train.features.cols();
  Index n1 = 0, n2 = 0;
  for (const int label : train.labels) (label == 1 ? n1 : n2) += 1;

  LdaModel<Scalar> model;
  model.threshold = threshold;
  model.mean1 = Vector<Scalar>::Zero(p);
  model.mean2 = Vector<Scalar>::Zero(p);
  for (Index i = 0; i < n; ++i) {
    if (train.labels[static_cast<size_t>(i)] == 1) {
      model.mean1 += train.features.row(i).transpose();
    } else {
      model.mean2 += train.features.row(i).transpose();
    }
  }
  model.mean1 /= Scalar(n1);
  model.mean2 /= Scalar(n2);

  Vector<Scalar> within = Vector<Scalar>::Zero(p);
  for (Index i = 0; i < n; ++i) {
    const Vector<Scalar>& mean = train.labels[static_cast<size_t>(i)] == 1 ? model.mean1 : model.mean2;
    within += (train.features.row(i).transpose() - mean).cwiseAbs2();
  }
  model.pooled_sd = (within / Scalar(n1 + n2 - 2)).cwiseSqrt();

  model.tscore = Vector<Scalar>::Zero(p);
  const Scalar conventional = std::sqrt(Scalar(1) / Scalar(n1) + Scalar(1) / Scalar(n2));
  for (Index j = 0; j < p; ++j) {
    if (model.pooled_sd[j] <= Scalar(0)) {
      model.dropped.push_back(j);
      model.pooled_sd[j] = Scalar(1);
      continue;
    }
    const Scalar denom = options.paper_scaling ? Scalar(n) * model.pooled_sd[j]
                                               : conventional * model.pooled_sd[j];
    model.tscore[j] = (model.mean1[j] - model.mean2[j]) / denom;
  }
  if (!model.dropped.empty()) {
    std::cerr << "lda_train: dropped " << model.dropped.size() << " features with zero pooled sd\n";
  }
  model.transformed = omega * model.tscore;
  model.selector = Vector<Scalar>::Zero(p);
  for (Index j = 0; j < p; ++j) {
    if (std::abs(model.transformed[j]) >= threshold && model.transformed[j] != Scalar(0)) {
      model.selector[j] = model.transformed[j] > Scalar(0) ? Scalar(1) : Scalar(-1);
    }
  }
  return model;
}

/// Decision rule w' Omega x*, where x* centers the test point at the midpoint
/// of the class means and rescales by the pooled sd. Ties go to class 2.
template <typename Scalar>
int lda_classify(const LdaModel<Scalar>& model, const Matrix<Scalar>& omega, const Vector<Scalar>& x) {
  if (x.size() != model.tscore.size()) {
    throw std::invalid_argument("lda_classify: feature length mismatch");
  }
  const Vector<Scalar> centered =
      (x - Scalar(0.5) * (model.mean1 + model.mean2)).cwiseQuotient(model.pooled_sd);
  const Scalar score = model.selector.dot(omega * centered);
  return score > Scalar(0) ? 1 : 2;
}

/// Seeded stratified fold assignment: each class is shuffled and dealt
/// round-robin, so class fractions match across folds and the folds
/// partition the index set exactly.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, RngStream& stream) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
  std::vector<size_t> class1, class2;
  for (size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? class1 : class2).push_back(i);
  }
  if (class1.size() < static_cast<size_t>(folds) || class2.size() < static_cast<size_t>(folds)) {
    throw std::invalid_argument("stratified_folds: each class needs at least one sample per fold");
  }
  std::vector<int> fold_of(labels.size(), -1);
  for (auto* cls : {&class1, &class2}) {
    auto& idx = *cls;
    for (size_t i = idx.size(); i > 1; --i) {  // Fisher-Yates with the stream's draws
      const size_t j = static_cast<size_t>(stream.next_u64() % i);
      std::swap(idx[i - 1], idx[j]);
    }
    for (size_t i = 0; i < idx.size(); ++i) {
      fold_of[idx[i]] = static_cast<int>(i % static_cast<size_t>(folds));
    }
  }
  return fold_of;
}

template <typename Scalar>
struct ErrorCurve {
  std::vector<std::string> methods;
  Matrix<Scalar> errors;  // methods x p, total misclassified over all folds
  Matrix<Scalar> rates;   // errors / n
};

/// Cross-validated error-vs-retained-features curves. For each fold the
/// precision estimate and t-scores come from the training folds only; the
/// threshold for k retained features is the k-th largest |Z-tilde| there.
template <typename Scalar>
ErrorCurve<Scalar> error_curve(const LabeledDataset<Scalar>& data,
                               const std::vector<EstimatorSpec>& variants, int folds = 5,
                               std::uint64_t seed = 0, const LdaOptions& options = {}) {
  data.validate();
  if (data.features.rows() < 10) throw std::invalid_argument("error_curve: need n >= 10");
  if (variants.empty()) throw std::invalid_argument("error_curve: need at least one method");
  const Index n = data.features.rows();
  const Index p = data.features.cols();

  RngStream fold_stream(seed, 0);
  const std::vector<int> fold_of = stratified_folds(data.labels, folds, fold_stream);

  ErrorCurve<Scalar> curve;
  curve.errors = Matrix<Scalar>::Zero(static_cast<Index>(variants.size()), p);
  for (const auto& spec : variants) curve.methods.push_back(spec.method);

  for (int fold = 0; fold < folds; ++fold) {
    LabeledDataset<Scalar> train;
    std::vector<Index> test_rows;
    std::vector<Index> train_rows;
    for (Index i = 0; i < n; ++i) {
      (fold_of[static_cast<size_t>(i)] == fold ? test_rows : train_rows).push_back(i);
    }
    train.features.resize(static_cast<Index>(train_rows.size()), p);
    for (size_t r = 0; r < train_rows.size(); ++r) {
      train.features.row(static_cast<Index>(r)) = data.features.row(train_rows[r]);
      train.labels.push_back(data.labels[static_cast<size_t>(train_rows[r])]);
    }

    for (size_t v = 0; v < variants.size(); ++v) {
      const Matrix<Scalar> omega = precision_from_estimate(estimate<Scalar>(train.features, variants[v]));
      const LdaModel<Scalar> base = lda_train(train, omega, Scalar(0), options);

      // |Z-tilde| sorted descending; retained set for k is everything at or
      // above the k-th largest value, so ties keep their whole group.
      std::vector<Index> order(static_cast<size_t>(p));
      std::iota(order.begin(), order.end(), Index(0));
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return std::abs(base.transformed[a]) > std::abs(base.transformed[b]);
      });

      for (const Index row : test_rows) {
        const Vector<Scalar> x = data.features.row(row).transpose();
        const Vector<Scalar> centered =
            (x - Scalar(0.5) * (base.mean1 + base.mean2)).cwiseQuotient(base.pooled_sd);
        const Vector<Scalar> projected = omega * centered;
        // prefix[m] = score using the m largest-|Z-tilde| features
        Vector<Scalar> prefix(p + 1);
        prefix[0] = Scalar(0);
        for (Index m = 0; m < p; ++m) {
          const Index j = order[static_cast<size_t>(m)];
          const Scalar sign = base.transformed[j] > Scalar(0)
                                  ? Scalar(1)
                                  : (base.transformed[j] < Scalar(0) ? Scalar(-1) : Scalar(0));
          prefix[m + 1] = prefix[m] + sign * projected[j];
        }
        const int truth = data.labels[static_cast<size_t>(row)];
        for (Index k = 1; k <= p; ++k) {
          Index retained = k;  // extend through ties with the k-th largest value
          const Scalar kth = std::abs(base.transformed[order[static_cast<size_t>(k - 1)]]);
          while (retained < p && std::abs(base.transformed[order[static_cast<size_t>(retained)]]) >= kth) {
            ++retained;
          }
          const int predicted = prefix[retained] > Scalar(0) ? 1 : 2;
          if (predicted != truth) curve.errors(static_cast<Index>(v), k - 1) += Scalar(1);
        }
      }
    }
  }
  curve.rates = curve.errors / Scalar(n);
  return curve;
}

}  // namespace ddpca
