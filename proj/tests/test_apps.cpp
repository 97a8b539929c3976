#include <doctest.h>

#include <set>

#include "ddpca/lda.hpp"
#include "ddpca/portfolio.hpp"
#include "ddpca/simgen.hpp"
#include "oracles.hpp"

using namespace ddpca;

namespace {

// Daily returns from a small factor model, dated consecutively so that every
// month has exactly 21 trading days.
ReturnSeries<double> synthetic_returns(Index months, Index p, Index k, RngStream& stream,
                                       double noise_sd = 0.01) {
  ReturnSeries<double> series;
  const Index days = months * 21;
  series.returns.resize(days, p);
  Matrix<double> loadings = oracles::random_matrix(p, k, stream, 0.02);
  long date = 0;
  for (Index t = 0; t < days; ++t) {
    const long month = t / 21;
    date = 20200101 + (month / 12) * 10000 + (month % 12) * 100 + (t % 21) + 1;
    series.dates.push_back(date);
    Vector<double> f(k);
    for (Index j = 0; j < k; ++j) f[j] = stream.next_normal();
    for (Index j = 0; j < p; ++j) {
      series.returns(t, j) = loadings.row(j).dot(f) + noise_sd * stream.next_normal();
    }
  }
  return series;
}

}  // namespace

TEST_CASE("min_risk_weights") {
  SUBCASE("identity gives equal weights") {
    const Vector<double> w = min_risk_weights<double>(Matrix<double>::Identity(4, 4));
    for (Index j = 0; j < 4; ++j) CHECK(w[j] == doctest::Approx(0.25));
  }
  SUBCASE("diagonal case") {
    Matrix<double> sigma = Matrix<double>::Zero(2, 2);
    sigma(0, 0) = 1;
    sigma(1, 1) = 4;
    const Vector<double> w = min_risk_weights(sigma);
    CHECK(w[0] == doctest::Approx(0.8));
    CHECK(w[1] == doctest::Approx(0.2));
  }
  SUBCASE("exchangeable 2x2 forces equal weights") {
    Matrix<double> sigma(2, 2);
    sigma << 1, 0.5, 0.5, 1;
    const Vector<double> w = min_risk_weights(sigma);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
  }
  SUBCASE("scale invariance") {
    RngStream stream(601, 0);
    const Matrix<double> sigma = oracles::random_spd(6, stream);
    const Vector<double> w1 = min_risk_weights(sigma);
    const Vector<double> w2 = min_risk_weights<double>((3.7 * sigma).eval());
    CHECK((w1 - w2).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("weights sum to one") {
    RngStream stream(601, 1);
    const Vector<double> w = min_risk_weights(oracles::random_spd(9, stream));
    CHECK(w.sum() == doctest::Approx(1.0));
  }
  SUBCASE("singular covariance rejected") {
    CHECK_THROWS_AS((void)min_risk_weights<double>(Matrix<double>::Zero(3, 3)),
                    numerical_error);
  }
  SUBCASE("decomposition overload avoids the dense inverse and agrees") {
    RngStream stream(601, 2);
    const auto gen = gen_factor_cov(25, 100, 2, stream);
    const auto est = estimate_ddpca<double>(gen.data, 2);
    const Vector<double> via_est = min_risk_weights(est);
    const Vector<double> via_sigma = min_risk_weights(est.sigma);
    CHECK((via_est - via_sigma).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("realized_risk") {
  Vector<double> w(2);
  w << 0.5, 0.5;
  SUBCASE("zero returns") {
    CHECK(realized_risk<double>(Matrix<double>::Zero(5, 2), w) == doctest::Approx(0.0));
  }
  SUBCASE("single day aligned with the weights") {
    Matrix<double> y(1, 2);
    y << 0.5, 0.5;
    CHECK(realized_risk(y, w) == doctest::Approx(std::pow(w.squaredNorm(), 2)));
  }
  SUBCASE("plus-minus one averages to one") {
    Matrix<double> y(2, 2);
    y << 1, 1, -1, -1;
    CHECK(realized_risk(y, w) == doctest::Approx(1.0));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS((void)realized_risk<double>(Matrix<double>::Zero(2, 3), w),
                    std::invalid_argument);
  }
}

TEST_CASE("rolling_backtest") {
  RngStream stream(602, 0);
  SUBCASE("identical estimators produce zero improvement") {
    auto series = synthetic_returns(8, 6, 2, stream);
    std::vector<EstimatorSpec> specs(2);
    specs[0].method = "sample";
    specs[1].method = "sample";
    const auto result = rolling_backtest<double>(series, 42, specs);
    CHECK(result.improvement.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("exactly one scored month at the boundary") {
    auto series = synthetic_returns(3, 5, 2, stream);
    std::vector<EstimatorSpec> specs(1);
    specs[0].method = "sample";
    const auto result = rolling_backtest<double>(series, 42, specs);  // 2 months of history
    CHECK(result.months.size() == 1);
    CHECK(result.months[0] == 202003);
  }
  SUBCASE("insufficient history is an argument error") {
    auto series = synthetic_returns(1, 5, 2, stream);
    std::vector<EstimatorSpec> specs(1);
    specs[0].method = "sample";
    CHECK_THROWS_AS((void)rolling_backtest<double>(series, 252, specs), std::invalid_argument);
  }
  SUBCASE("no look-ahead: future data cannot change current weights") {
    auto series = synthetic_returns(4, 5, 2, stream);
    std::vector<EstimatorSpec> specs(1);
    specs[0].method = "sample";
    auto poisoned = series;
    // wreck the last month only
    for (Index t = 63; t < poisoned.returns.rows(); ++t) {
      poisoned.returns.row(t).setConstant(99.0);
    }
    const auto clean = rolling_backtest<double>(series, 42, specs);
    const auto dirty = rolling_backtest<double>(poisoned, 42, specs);
    REQUIRE(clean.months.size() == dirty.months.size());
    // month 202004's weights are fit on months 2-3, identical in both runs
    const auto& w_clean = clean.weights.back()[0];
    const auto& w_dirty = dirty.weights.back()[0];
    CHECK((w_clean - w_dirty).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("ddpca baseline beats fixed-threshold poet on factor returns") {
    RngStream gen_stream(603, 7);
    auto series = synthetic_returns(18, 15, 3, gen_stream, 0.004);
    std::vector<EstimatorSpec> specs(2);
    specs[0].method = "ddpca";
    specs[0].rank = 3;
    specs[1].method = "poet";
    specs[1].rank = 3;
    specs[1].threshold = 0.3;
    const auto result = rolling_backtest<double>(series, 252, specs);
    REQUIRE(result.months.size() >= 5);
    std::vector<double> ratios;
    for (Index m = 0; m < result.improvement.rows(); ++m) {
      ratios.push_back(result.improvement(m, 1));
    }
    std::sort(ratios.begin(), ratios.end());
    const double median = ratios[ratios.size() / 2];
    CHECK(median > 0.0);
  }
}

TEST_CASE("lda_train and lda_classify") {
  SUBCASE("identical class means give a zero selector for positive thresholds") {
    LabeledDataset<double> data;
    data.features.resize(6, 3);
    data.features << 1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0;
    data.labels = {1, 1, 1, 2, 2, 2};
    const auto model = lda_train<double>(data, Matrix<double>::Identity(3, 3), 0.5);
    CHECK(model.tscore.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(model.selector.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("identity omega with zero threshold selects all informative signs") {
    RngStream stream(604, 0);
    LabeledDataset<double> data;
    const Index n = 40, p = 4;
    data.features.resize(n, p);
    for (Index i = 0; i < n; ++i) {
      const int label = i < n / 2 ? 1 : 2;
      data.labels.push_back(label);
      for (Index j = 0; j < p; ++j) {
        const double shift = (label == 1 && j < 2) ? 1.5 : 0.0;
        data.features(i, j) = shift + 0.3 * stream.next_normal();
      }
    }
    const auto model = lda_train<double>(data, Matrix<double>::Identity(p, p), 0.0);
    for (Index j = 0; j < p; ++j) {
      if (model.transformed[j] != 0.0) {
        CHECK(model.selector[j] == (model.transformed[j] > 0 ? 1.0 : -1.0));
      }
    }
    SUBCASE("class-1 mean classifies to class 1") {
      Vector<double> mean1 = model.mean1;
      CHECK(lda_classify<double>(model, Matrix<double>::Identity(p, p), mean1) == 1);
    }
    SUBCASE("midpoint ties go to class 2") {
      const Vector<double> mid = 0.5 * (model.mean1 + model.mean2);
      CHECK(lda_classify<double>(model, Matrix<double>::Identity(p, p), mid) == 2);
    }
  }
  SUBCASE("hand-evaluated three-feature toy") {
    LabeledDataset<double> data;
    data.features.resize(4, 3);
    data.features << 2, 0, 1, 4, 2, 1, 0, 1, 1, 2, 3, 1;
    data.labels = {1, 1, 2, 2};
    // class means: (3,1,1) and (1,2,1); within-class squared deviations sum
    // to 4 on features 0 and 1, so the pooled sd is sqrt(4/2) = sqrt(2)
    const auto model = lda_train<double>(data, Matrix<double>::Identity(3, 3), 0.0);
    CHECK(model.mean1[0] == doctest::Approx(3.0));
    CHECK(model.mean1[1] == doctest::Approx(1.0));
    CHECK(model.mean2[1] == doctest::Approx(2.0));
    CHECK(model.pooled_sd[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(model.tscore[0] == doctest::Approx((3.0 - 1.0) / (4.0 * std::sqrt(2.0))));
    CHECK(model.tscore[1] == doctest::Approx((1.0 - 2.0) / (4.0 * std::sqrt(2.0))));
    // feature 2 is constant: zero pooled sd, dropped
    CHECK(model.dropped.size() == 1);
    CHECK(model.dropped[0] == 2);
    CHECK(model.tscore[2] == doctest::Approx(0.0));
    CHECK(model.selector[0] == doctest::Approx(1.0));
    CHECK(model.selector[1] == doctest::Approx(-1.0));
  }
  SUBCASE("zero selector always classifies to class 2") {
    LabeledDataset<double> data;
    data.features.resize(4, 2);
    data.features << 0, 1, 0, 2, 0, 3, 0, 4;
    data.labels = {1, 1, 2, 2};
    const auto model = lda_train<double>(data, Matrix<double>::Identity(2, 2), 1e9);
    Vector<double> x(2);
    x << 5, -3;
    CHECK(lda_classify<double>(model, Matrix<double>::Identity(2, 2), x) == 2);
  }
}

TEST_CASE("stratified_folds") {
  RngStream stream(605, 0);
  std::vector<int> labels;
  for (int i = 0; i < 23; ++i) labels.push_back(1);
  for (int i = 0; i < 37; ++i) labels.push_back(2);
  const auto fold_of = stratified_folds(labels, 5, stream);
  REQUIRE(fold_of.size() == labels.size());
  std::vector<int> count1(5, 0), count2(5, 0);
  for (size_t i = 0; i < labels.size(); ++i) {
    REQUIRE(fold_of[i] >= 0);
    REQUIRE(fold_of[i] < 5);
    (labels[i] == 1 ? count1 : count2)[static_cast<size_t>(fold_of[i])] += 1;
  }
  for (int f = 0; f < 5; ++f) {
    CHECK(std::abs(count1[static_cast<size_t>(f)] - 23 / 5) <= 1);
    CHECK(std::abs(count2[static_cast<size_t>(f)] - 37 / 5) <= 1);
  }
  SUBCASE("class smaller than the fold count is rejected") {
    std::vector<int> tiny = {1, 1, 1, 2, 2, 2, 2, 2, 2};
    CHECK_THROWS_AS((void)stratified_folds(tiny, 5, stream), std::invalid_argument);
  }
}

TEST_CASE("error_curve") {
  RngStream stream(606, 0);
  SUBCASE("separable data reaches zero error for every k") {
    // every feature carries the class signal, so any retained subset separates
    LabeledDataset<double> data;
    const Index n = 40, p = 5;
    data.features.resize(n, p);
    for (Index i = 0; i < n; ++i) {
      const int label = (i % 2) + 1;
      data.labels.push_back(label);
      for (Index j = 0; j < p; ++j) {
        data.features(i, j) = (label == 1 ? 2.0 : -2.0) + 0.3 * stream.next_normal();
      }
    }
    std::vector<EstimatorSpec> specs(1);
    specs[0].method = "diagonal";
    const auto curve = error_curve<double>(data, specs, 5, 99);
    for (Index k = 0; k < p; ++k) {
      CHECK(curve.errors(0, k) == doctest::Approx(0.0));
    }
  }
  SUBCASE("permuted labels sit near chance level") {
    LabeledDataset<double> data;
    const Index n = 60, p = 4;
    data.features.resize(n, p);
    for (Index i = 0; i < n; ++i) {
      data.labels.push_back((stream.next_u64() % 2 == 0) ? 1 : 2);
      for (Index j = 0; j < p; ++j) data.features(i, j) = stream.next_normal();
    }
    int n1 = 0;
    for (const int label : data.labels) n1 += label == 1;
    if (n1 < 5 || n - n1 < 5) return;  // extremely unlikely with this seed
    std::vector<EstimatorSpec> specs(1);
    specs[0].method = "diagonal";
    const auto curve = error_curve<double>(data, specs, 5, 100);
    const double rate = curve.rates(0, p - 1);
    CHECK(rate > 0.2);
    CHECK(rate < 0.8);
  }
  SUBCASE("needs ten samples") {
    LabeledDataset<double> data;
    data.features = Matrix<double>::Zero(8, 2);
    data.labels = {1, 1, 1, 1, 2, 2, 2, 2};
    std::vector<EstimatorSpec> specs(1);
    specs[0].method = "diagonal";
    CHECK_THROWS_AS((void)error_curve<double>(data, specs, 5, 0), std::invalid_argument);
  }
}
