#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "core/training.hpp"

using namespace lnadapt;

namespace {

Sequence random_seq(std::size_t n, std::size_t d, Rng& rng) {
  Sequence x(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) x(r, c) = rng.normal();
  return x;
}

// Naive per-frame MCD with explicit loops and the dim-0 exclusion.
double mcd_oracle(const Sequence& ref, const Sequence& hyp) {
  double sum = 0.0;
  for (std::size_t t = 0; t < ref.rows(); ++t) {
    double ss = 0.0;
    for (std::size_t d = 1; d < ref.cols(); ++d) {
      double diff = ref(t, d) - hyp(t, d);
      ss += diff * diff;
    }
    sum += (10.0 / std::log(10.0)) * std::sqrt(2.0 * ss);
  }
  return sum / static_cast<double>(ref.rows());
}

double f0_rmse_oracle(const Sequence& ref, const Sequence& hyp,
                      const std::vector<int>& ruv, const std::vector<int>& huv) {
  double ss = 0.0;
  int n = 0;
  for (std::size_t t = 0; t < ref.rows(); ++t) {
    if (ruv[t] == 1 && huv[t] == 1) {
      double d = std::exp(ref(t, 0)) - std::exp(hyp(t, 0));
      ss += d * d;
      ++n;
    }
  }
  return n == 0 ? 0.0 : std::sqrt(ss / n);
}

}  // namespace

TEST_CASE("mcd of a uniform one-dim difference of 1 is about 6.1421 dB") {
  Sequence ref(4, 12), hyp(4, 12);
  for (std::size_t t = 0; t < 4; ++t) hyp(t, 1) = 1.0;  // only dim 1 differs
  double v = mcd(ref, hyp);
  // (10 / ln 10) * sqrt(2) = 6.14205...
  CHECK(v == doctest::Approx(6.1421).epsilon(1e-4));
  CHECK(std::abs(v - (10.0 / std::log(10.0)) * std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("mcd ignores dim 0 entirely") {
  Sequence ref(3, 5), hyp(3, 5);
  for (std::size_t t = 0; t < 3; ++t) hyp(t, 0) = 100.0;
  CHECK(mcd(ref, hyp) == 0.0);
}

TEST_CASE("mcd matches the naive oracle on random data") {
  Rng rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    Sequence ref = random_seq(20, 12, rng);
    Sequence hyp = random_seq(20, 12, rng);
    CHECK(std::abs(mcd(ref, hyp) - mcd_oracle(ref, hyp)) < 1e-10);
  }
}

TEST_CASE("f0 rmse uses both-voiced frames and works in Hz") {
  // Frame 0: both voiced, ref 100 Hz vs hyp 110 Hz. Frame 1: hyp unvoiced,
  // excluded even though ref is voiced. Frame 2: both unvoiced, excluded.
  Sequence ref(3, 1), hyp(3, 1);
  ref(0, 0) = std::log(100.0);
  hyp(0, 0) = std::log(110.0);
  ref(1, 0) = std::log(200.0);
  hyp(1, 0) = std::log(50.0);
  std::vector<int> ruv = {1, 1, 0}, huv = {1, 0, 0};
  bool defined = false;
  double v = f0_rmse(ref, hyp, ruv, huv, &defined);
  CHECK(defined);
  CHECK(v == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("f0 rmse with no both-voiced frame is zero and flagged undefined") {
  Sequence ref(2, 1), hyp(2, 1);
  std::vector<int> ruv = {1, 0}, huv = {0, 1};
  bool defined = true;
  CHECK(f0_rmse(ref, hyp, ruv, huv, &defined) == 0.0);
  CHECK(!defined);
}

TEST_CASE("f0 rmse matches the naive oracle on random data") {
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    Sequence ref = random_seq(30, 3, rng);
    Sequence hyp = random_seq(30, 3, rng);
    std::vector<int> ruv(30), huv(30);
    for (int t = 0; t < 30; ++t) {
      ruv[t] = rng.bernoulli(0.6) ? 1 : 0;
      huv[t] = rng.bernoulli(0.6) ? 1 : 0;
    }
    double a = f0_rmse(ref, hyp, ruv, huv);
    double b = f0_rmse_oracle(ref, hyp, ruv, huv);
    CHECK(std::abs(a - b) < 1e-10);
  }
}

TEST_CASE("uv error threshold is strict: exactly 0.5 counts as unvoiced") {
  Sequence hyp(4, 1);
  hyp(0, 0) = 0.5;   // unvoiced prediction
  hyp(1, 0) = 0.51;  // voiced prediction
  hyp(2, 0) = 0.49;  // unvoiced prediction
  hyp(3, 0) = 1.2;   // voiced prediction
  std::vector<int> ref = {1, 1, 0, 0};
  // Errors at frames 0 (pred U, ref V) and 3 (pred V, ref U).
  CHECK(uv_error(ref, hyp) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("overall mse averages per-stream mses and matches the loss") {
  Rng rng(9);
  StreamSeqs preds, targets;
  StreamDims dims = {12, 3, 4, 1};
  for (Stream s : kAllStreams) {
    preds[sidx(s)] = random_seq(10, dims[sidx(s)], rng);
    targets[sidx(s)] = random_seq(10, dims[sidx(s)], rng);
  }
  double naive = 0.0;
  for (Stream s : kAllStreams) {
    double ss = 0.0;
    const Sequence& p = preds[sidx(s)];
    const Sequence& t = targets[sidx(s)];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double d = p.data()[i] - t.data()[i];
      ss += d * d;
    }
    naive += ss / static_cast<double>(p.size());
  }
  naive /= kNumStreams;
  CHECK(std::abs(overall_mse(preds, targets) - naive) < 1e-10);

  // Same definition as the training criterion.
  auto [loss, grads] = mse_loss(preds, targets);
  CHECK(std::abs(loss - naive) < 1e-12);
}

TEST_CASE("overall mse worked example") {
  StreamSeqs preds, targets;
  for (Stream s : kAllStreams) {
    preds[sidx(s)] = Sequence(1, 1, 2.0);
    targets[sidx(s)] = Sequence(1, 1, 0.0);
  }
  CHECK(overall_mse(preds, targets) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("csv row formatting is stable") {
  MetricsReport r;
  r.mcd = 1.25;
  r.f0_rmse = 10.5;
  r.uv_error = 0.125;
  r.overall_mse = 0.5;
  r.n_frames = 42;
  CHECK(MetricsReport::csv_header() == "system,n_adapt,mcd,f0_rmse,uv_err,mse,n_frames");
  CHECK(r.csv_row("OL", 20) == "OL,20,1.25,10.5,0.125,0.5,42");
}

TEST_CASE("metric shape mismatches are rejected") {
  Sequence a(3, 12), b(4, 12);
  CHECK_THROWS_AS(mcd(a, b), ShapeError);
  Sequence hyp(3, 1);
  std::vector<int> uv = {1, 0};  // wrong length
  CHECK_THROWS_AS(uv_error(uv, hyp), ShapeError);
}
