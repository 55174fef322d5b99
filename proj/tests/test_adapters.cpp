#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "core/adapters.hpp"
#include "core/gradcheck.hpp"
#include "core/rng.hpp"

using namespace lnadapt;

namespace {

Sequence random_seq(std::size_t n, std::size_t d, Rng& rng) {
  Sequence x(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) x(r, c) = rng.normal() * 0.5;
  return x;
}

// Materializes W = U V + I and applies it with scalar loops; the production
// forward must match without ever forming the k x k matrix.
Sequence lrpd_materialized_oracle(const LrpdAdapter& a, const Sequence& h) {
  const std::size_t k = a.dim(), r = a.rank();
  Matrix W(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = i == j ? 1.0 : 0.0;
      for (std::size_t q = 0; q < r; ++q) s += a.U(i, q) * a.V(q, j);
      W(i, j) = s;
    }
  }
  Sequence y(h.rows(), k);
  for (std::size_t t = 0; t < h.rows(); ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      double s = a.b(0, i);
      for (std::size_t j = 0; j < k; ++j) s += W(i, j) * h(t, j);
      y(t, i) = s;
    }
  }
  return y;
}

}  // namespace

TEST_CASE("freshly inserted full adapter is an exact identity") {
  Adapter a = init_adapter(AdapterKind::full_kind(), 8, 123);
  Rng rng(1);
  Sequence h = random_seq(5, 8, rng);
  Sequence y = adapter_forward(a, h);
  // Bitwise: W = I and b = 0 must reproduce the input exactly.
  CHECK(y == h);
}

TEST_CASE("full adapter forward on a hand example") {
  FullLnAdapter a;
  a.W = Matrix(2, 2);
  a.W(0, 0) = 2; a.W(0, 1) = 1; a.W(1, 0) = 0; a.W(1, 1) = -1;
  a.b = Matrix(1, 2);
  a.b(0, 0) = 0.5; a.b(0, 1) = 0.25;
  Sequence h(1, 2);
  h(0, 0) = 3; h(0, 1) = 4;
  Sequence y = full_ln_forward(a, h);
  CHECK(y(0, 0) == doctest::Approx(10.5).epsilon(1e-15));   // 6 + 4 + 0.5
  CHECK(y(0, 1) == doctest::Approx(-3.75).epsilon(1e-15));  // -4 + 0.25
}

TEST_CASE("lrpd forward on a hand example with implicit identity") {
  LrpdAdapter a;
  a.U = Matrix(2, 1);
  a.U(0, 0) = 1; a.U(1, 0) = 2;
  a.V = Matrix(1, 2);
  a.V(0, 0) = 0.5; a.V(0, 1) = -0.5;
  a.b = Matrix(1, 2);
  a.b(0, 0) = 0.1; a.b(0, 1) = 0.2;
  Sequence h(1, 2);
  h(0, 0) = 4; h(0, 1) = 2;
  // V h = 0.5*4 - 0.5*2 = 1; U (Vh) = (1, 2); + h + b.
  Sequence y = lrpd_forward(a, h);
  CHECK(y(0, 0) == doctest::Approx(5.1).epsilon(1e-15));
  CHECK(y(0, 1) == doctest::Approx(4.2).epsilon(1e-15));
}

TEST_CASE("lrpd forward equals the materialized UV + I oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Adapter a = init_adapter(AdapterKind::lrpd_kind(3), 10, seed);
    auto& l = std::get<LrpdAdapter>(a);
    Rng rng(seed + 100);
    // Use non-trivial magnitudes, not just the small init.
    for (double& v : l.U.vec()) v = rng.normal();
    for (double& v : l.V.vec()) v = rng.normal();
    for (double& v : l.b.vec()) v = rng.normal() * 0.1;
    Sequence h = random_seq(6, 10, rng);
    Sequence y = lrpd_forward(l, h);
    Sequence ref = lrpd_materialized_oracle(l, h);
    REQUIRE(y.same_shape(ref));
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(y.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("lrpd init: zero U (exact identity) and bounded V") {
  const double bound = 1.0 / std::sqrt(12.0);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Adapter a = init_adapter(AdapterKind::lrpd_kind(4), 12, seed);
    auto& l = std::get<LrpdAdapter>(a);
    for (double v : l.U.vec()) CHECK(v == 0.0);
    for (double v : l.V.vec()) CHECK(std::abs(v) <= bound);
    for (double v : l.b.vec()) CHECK(v == 0.0);
  }
}

TEST_CASE("freshly inserted lrpd adapter is an exact identity") {
  Adapter a = init_adapter(AdapterKind::lrpd_kind(4), 12, 5);
  Rng rng(6);
  Sequence h = random_seq(4, 12, rng);
  CHECK(adapter_forward(a, h) == h);
}

TEST_CASE("init is deterministic in the seed") {
  Adapter a = init_adapter(AdapterKind::lrpd_kind(4), 12, 7);
  Adapter b = init_adapter(AdapterKind::lrpd_kind(4), 12, 7);
  Adapter c = init_adapter(AdapterKind::lrpd_kind(4), 12, 8);
  CHECK(std::get<LrpdAdapter>(a).V == std::get<LrpdAdapter>(b).V);
  CHECK(!(std::get<LrpdAdapter>(a).V == std::get<LrpdAdapter>(c).V));
}

TEST_CASE("init rejects out-of-range lrpd ranks") {
  CHECK_THROWS_AS(init_adapter(AdapterKind::lrpd_kind(0), 8, 1), ConfigError);
  CHECK_THROWS_AS(init_adapter(AdapterKind::lrpd_kind(8), 8, 1), ConfigError);
  CHECK_THROWS_AS(init_adapter(AdapterKind::lrpd_kind(9), 8, 1), ConfigError);
  CHECK_NOTHROW(init_adapter(AdapterKind::lrpd_kind(7), 8, 1));
}

TEST_CASE("param accounting matches full = k^2 and lrpd = k(2r+1)") {
  CHECK(param_count(AdapterKind::full_kind(), 1024) == 1024u * 1024u);
  CHECK(param_count(AdapterKind::full_kind(), 1024) == 1048576u);
  CHECK(param_count(AdapterKind::lrpd_kind(10), 1024) == 21504u);
  CHECK(param_count(AdapterKind::lrpd_kind(10), 32) == 672u);
  CHECK(param_count(AdapterKind::full_kind(), 32) == 1024u);
  // r = 10 gives 21k, i.e. about 2% of the full 1024^2 transform.
  CHECK(param_count(AdapterKind::lrpd_kind(10), 1024) == 21u * 1024u);
}

TEST_CASE("trainable totals include the bias") {
  CHECK(trainable_count(AdapterKind::full_kind(), 32) == 32u * 32u + 32u);
  CHECK(trainable_count(AdapterKind::lrpd_kind(10), 32) == 672u);
}

TEST_CASE("full adapter gradients pass finite-difference checks") {
  Adapter a = init_adapter(AdapterKind::full_kind(), 5, 3);
  Rng rng(9);
  auto& f = std::get<FullLnAdapter>(a);
  for (double& v : f.W.vec()) v += rng.normal() * 0.2;
  for (double& v : f.b.vec()) v = rng.normal() * 0.1;
  Sequence h = random_seq(4, 5, rng);
  ProbeTarget p = make_probe(a, h);
  GradCheckReport rep = grad_check(p, 1e-5);
  INFO("worst block: " << rep.worst_block);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("lrpd adapter gradients pass finite-difference checks") {
  Adapter a = init_adapter(AdapterKind::lrpd_kind(2), 6, 4);
  Rng rng(19);
  auto& l = std::get<LrpdAdapter>(a);
  for (double& v : l.U.vec()) v = rng.normal() * 0.3;
  for (double& v : l.V.vec()) v = rng.normal() * 0.3;
  for (double& v : l.b.vec()) v = rng.normal() * 0.1;
  Sequence h = random_seq(5, 6, rng);
  ProbeTarget p = make_probe(a, h);
  GradCheckReport rep = grad_check(p, 1e-5);
  INFO("worst block: " << rep.worst_block);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("backward writes only the adapter's own blocks") {
  Adapter a = init_adapter(AdapterKind::lrpd_kind(2), 6, 4);
  Rng rng(29);
  Sequence h = random_seq(3, 6, rng);
  Sequence y = adapter_forward(a, h);
  GradMap grads;
  Sequence gy(y.rows(), y.cols(), 1.0);
  adapter_backward(a, h, gy, grads, "slot0");
  CHECK(grads.size() == 3);
  CHECK(grads.count("slot0.U") == 1);
  CHECK(grads.count("slot0.V") == 1);
  CHECK(grads.count("slot0.b") == 1);
}

TEST_CASE("lrpd input gradient includes the identity path") {
  // With U or V zero the transform is exactly identity plus bias, so the
  // input gradient must equal the upstream gradient.
  LrpdAdapter l;
  l.U = Matrix(4, 2);
  l.V = Matrix(2, 4);
  l.b = Matrix(1, 4);
  Rng rng(39);
  Sequence h = random_seq(3, 4, rng);
  Sequence gy = random_seq(3, 4, rng);
  GradMap grads;
  Sequence gh = lrpd_backward(l, h, gy, grads, "s");
  REQUIRE(gh.same_shape(gy));
  for (std::size_t i = 0; i < gh.size(); ++i) CHECK(gh.data()[i] == gy.data()[i]);
}
