#include "doctest.h"

#include <random>

#include "eitws/tensor.hpp"
#include "test_support.hpp"

using namespace eitws;
using eitws::testing::random_spd;
using eitws::testing::synthetic_frame;

TEST_CASE("metric_from_conductivity on hand values") {
  CHECK(frobenius_distance(metric_from_conductivity(SpdTensor3::identity()),
                           SpdTensor3::identity()) == doctest::Approx(0.0).epsilon(1e-15));

  // diag(2,1,1): det = 2, inverse = diag(0.5,1,1) -> diag(1,2,2)
  const SpdTensor3 m = metric_from_conductivity(SpdTensor3::diagonal(2, 1, 1));
  CHECK(m(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m(1, 1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m(2, 2) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m(0, 1) == 0.0);
}

TEST_CASE("metric satisfies the defining identity on random tensors") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const SpdTensor3 a = random_spd(rng);
    const SpdTensor3 m = metric_from_conductivity(a);
    // m * a = det(a) * I
    const double d = a.det();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += m(i, k) * a(k, j);
        CHECK(s == doctest::Approx(i == j ? d : 0.0).epsilon(1e-12).scale(d));
      }
  }
}

TEST_CASE("conductivity_from_metric hand value and round trip") {
  const SpdTensor3 g = conductivity_from_metric(SpdTensor3::diagonal(1, 2, 2));
  CHECK(g(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g(2, 2) == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const SpdTensor3 gamma = random_spd(rng);
    const SpdTensor3 back = conductivity_from_metric(metric_from_conductivity(gamma));
    CHECK(frobenius_distance(back, gamma) <= 1e-12 * gamma.frobenius());
  }
}

TEST_CASE("det identity det(metric) = det(gamma)^2") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const SpdTensor3 gamma = random_spd(rng);
    const double lhs = metric_from_conductivity(gamma).det();
    const double rhs = gamma.det() * gamma.det();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("non-SPD inputs are rejected") {
  CHECK_THROWS_AS(SpdTensor3(-1, 0, 0, 1, 0, 1), DomainError);
  CHECK_THROWS_AS(SpdTensor3(1, 2, 0, 1, 0, 1), DomainError);  // 2x2 minor negative
  const SpdTensor3 ok = SpdTensor3::identity();
  CHECK_NOTHROW(metric_from_conductivity(ok));
}

TEST_CASE("eigenvalues: closed-form solver against known spectra") {
  const auto ev = SpdTensor3::diagonal(0.5, 1.0, 2.0).eigenvalues();
  CHECK(ev[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(ev[2] == doctest::Approx(2.0).epsilon(1e-13));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const SpdTensor3 a = random_spd(rng, 0.2, 5.0);
    const auto e = a.eigenvalues();
    CHECK(e[0] + e[1] + e[2] == doctest::Approx(a.trace()).epsilon(1e-11));
    CHECK(e[0] * e[1] * e[2] == doctest::Approx(a.det()).epsilon(1e-10));
    CHECK(e[0] > 0.0);
  }
}

TEST_CASE("principal axis is an eigenvector") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> ang(0.0, M_PI);
    const Mat3 r = eitws::testing::random_rotation(rng);
    // distinct top eigenvalue
    const double d[3] = {0.7, 1.1, 2.4};
    std::array<double, 6> e{};
    auto entry = [&](int i, int j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += r(i, k) * d[k] * r(j, k);
      return s;
    };
    const SpdTensor3 a(std::array<double, 6>{entry(0, 0), entry(0, 1), entry(0, 2), entry(1, 1),
                                             entry(1, 2), entry(2, 2)});
    const Vec3 v = a.principal_axis();
    const Vec3 av = a.apply(v);
    CHECK(norm(av - v * 2.4) <= 1e-9);
  }
}

TEST_CASE("ellipticity_check") {
  CHECK(ellipticity_check(SpdTensor3::identity(), 0.5));
  CHECK_FALSE(ellipticity_check(SpdTensor3::diagonal(3, 1, 1), 0.5));
  CHECK(ellipticity_check(SpdTensor3::diagonal(0.5, 1, 2), 0.5));  // eigenvalues at the bounds
  CHECK_THROWS_AS(ellipticity_check(SpdTensor3::identity(), 1.5), DomainError);
  CHECK_THROWS_AS(ellipticity_check(SpdTensor3::identity(), 0.0), DomainError);
}

TEST_CASE("tangential_restriction hand values and symmetry") {
  const Vec3 e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};
  const SymMat2 id = tangential_restriction(SpdTensor3::identity(), e1, e2);
  CHECK(id.a11 == doctest::Approx(1.0));
  CHECK(id.a22 == doctest::Approx(1.0));
  CHECK(id.a12 == doctest::Approx(0.0));

  const Vec3 mid = normalized(e2 + e3);
  const SymMat2 g = tangential_restriction(SpdTensor3::diagonal(1, 2, 2), e1, mid);
  CHECK(g.a11 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.a22 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g.a12 == doctest::Approx(0.0).epsilon(1e-14));

  CHECK_THROWS_AS(tangential_restriction(SpdTensor3::identity(), e1, e1), DomainError);
  CHECK_THROWS_AS(tangential_restriction(SpdTensor3::identity(), e1 * 2.0, e2), DomainError);
}

namespace {

// Forward oracle for the recovery: restrictions of a known metric in the
// probe bases, computed with plain quadratic-form arithmetic.
std::array<SymMat2, 3> forward_restrictions(const SpdTensor3& metric, const ProbeFrame& frame) {
  const auto bases = probe_bases_local(frame);
  std::array<SymMat2, 3> g;
  for (int k = 0; k < 3; ++k) g[k] = restriction_entries(metric, bases[k][0], bases[k][1]);
  return g;
}

}  // namespace

TEST_CASE("recover_full_metric: identity stays identity") {
  const ProbeFrame frame = synthetic_frame(0.7, 0.3, 0.9);
  const auto g = forward_restrictions(SpdTensor3::identity(), frame);
  const SpdTensor3 rec = recover_full_metric(g[0], g[1], g[2], frame);
  CHECK(frobenius_distance(rec, SpdTensor3::identity()) <= 1e-14);
}

TEST_CASE("recover_full_metric round trip on random SPD metrics") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> slope(0.1, 1.2);
  std::uniform_real_distribution<double> sign_dist(0.0, 1.0);
  RecoveryDiagnostics diag;
  for (int trial = 0; trial < 200; ++trial) {
    const SpdTensor3 metric = random_spd(rng);
    const double alpha = (sign_dist(rng) < 0.5 ? -1 : 1) * slope(rng);
    const double delta = (sign_dist(rng) < 0.5 ? -1 : 1) * slope(rng);
    const double beta = slope(rng) - 0.65;
    const ProbeFrame frame = synthetic_frame(alpha, beta, delta);
    const auto g = forward_restrictions(metric, frame);
    const SpdTensor3 rec = recover_full_metric(g[0], g[1], g[2], frame, {}, &diag);
    CHECK(frobenius_distance(rec, metric) <= 1e-10 * metric.frobenius());
    CHECK(diag.max_residual() <= 1e-10);
  }
}

TEST_CASE("recover_full_metric spec example: alpha=0.7 beta=0.3 delta=0.9") {
  std::mt19937_64 rng(99);
  const SpdTensor3 metric = random_spd(rng, 0.5, 2.0);
  const ProbeFrame frame = synthetic_frame(0.7, 0.3, 0.9);
  const auto g = forward_restrictions(metric, frame);
  const SpdTensor3 rec = recover_full_metric(g[0], g[1], g[2], frame);
  CHECK(frobenius_distance(rec, metric) <= 1e-10);
}

TEST_CASE("recover_full_metric rejects degenerate frames") {
  const SpdTensor3 metric = SpdTensor3::identity();
  const ProbeFrame frame = synthetic_frame(1e-12, 0.0, 0.9);
  const auto g = forward_restrictions(metric, frame);
  CHECK_THROWS_AS(recover_full_metric(g[0], g[1], g[2], frame), DomainError);
}

TEST_CASE("recover_full_metric flags inconsistent data as non-SPD") {
  const ProbeFrame frame = synthetic_frame(0.5, 0.2, 0.5);
  auto g = forward_restrictions(SpdTensor3::identity(), frame);
  g[2].a11 = -3.0;  // poisoned restriction drives (g)_33 negative
  CHECK_THROWS_AS(recover_full_metric(g[0], g[1], g[2], frame), ReconstructError);
}

TEST_CASE("recovery is Lipschitz in the measured restrictions") {
  // Perturbing the inputs by eta moves the output by <= C(frame) eta with
  // C <= 10 / min(alpha^2, delta^2), checked by sampling.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pert(-1.0, 1.0);
  const double eta = 1e-6;
  for (double slope : {0.15, 0.4, 0.9}) {
    const ProbeFrame frame = synthetic_frame(slope, 0.25, slope);
    const double bound = 10.0 / (slope * slope) * eta;
    const SpdTensor3 metric = random_spd(rng);
    const auto clean = forward_restrictions(metric, frame);
    for (int trial = 0; trial < 25; ++trial) {
      auto noisy = clean;
      for (auto* m : {&noisy[0], &noisy[1], &noisy[2]}) {
        m->a11 += eta * pert(rng);
        m->a12 += eta * pert(rng);
        m->a22 += eta * pert(rng);
      }
      const SpdTensor3 rec = recover_full_metric(noisy[0], noisy[1], noisy[2], frame);
      double max_entry_diff = 0.0;
      for (int i = 0; i < 6; ++i)
        max_entry_diff = std::max(max_entry_diff,
                                  std::abs(rec.entries()[i] - metric.entries()[i]));
      CHECK(max_entry_diff <= bound);
    }
  }
}

TEST_CASE("congruence transforms quadratic forms consistently") {
  std::mt19937_64 rng(13);
  const SpdTensor3 a = random_spd(rng);
  const Mat3 r = eitws::testing::random_rotation(rng);
  const SpdTensor3 b = a.congruence(r);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 w{unit(rng), unit(rng), unit(rng)};
    CHECK(b.quad(r * w) == doctest::Approx(a.quad(w)).epsilon(1e-12));
  }
}
