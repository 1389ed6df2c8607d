#include "doctest.h"

#include <cmath>

#include "storm/mat.hpp"

using namespace storm;

TEST_CASE("identity and trace") {
  const SymMat m = SymMat::identity(3, 2.5);
  CHECK(m.trace() == doctest::Approx(7.5));
  CHECK(m.op_norm() == doctest::Approx(2.5));
  CHECK(m.min_eig() == doctest::Approx(2.5));
  CHECK(m.is_spd());
}

TEST_CASE("perp projector sums over a full shell give c I") {
  // the four modes (+-1,0), (0,+-1) in d=2
  SymMat a = SymMat::zero(2);
  a.add_perp_projector({1, 0, 0}, 1.0);
  a.add_perp_projector({-1, 0, 0}, 1.0);
  a.add_perp_projector({0, 1, 0}, 1.0);
  a.add_perp_projector({0, -1, 0}, 1.0);
  CHECK(a(0, 0) == doctest::Approx(2.0));
  CHECK(a(1, 1) == doctest::Approx(2.0));
  CHECK(std::abs(a(0, 1)) < 1e-15);
}

TEST_CASE("eigenvalues of a known 2x2") {
  SymMat m = SymMat::zero(2);
  m(0, 0) = 2.0;
  m(1, 1) = 1.0;
  m(0, 1) = m(1, 0) = 0.5;
  // exact: (3 +- sqrt(2)) / 2
  const auto ev = m.eigenvalues();
  CHECK(ev[0] == doctest::Approx((3.0 - std::sqrt(2.0)) / 2.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx((3.0 + std::sqrt(2.0)) / 2.0).epsilon(1e-12));
}

TEST_CASE("eigenvalues of a known 3x3") {
  // eigenvalues 0, 1, 3 for the circulant-like matrix below
  SymMat m = SymMat::zero(3);
  m(0, 0) = m(1, 1) = 2.0;
  m(2, 2) = 0.0;
  m(0, 1) = m(1, 0) = 1.0;
  const auto ev = m.eigenvalues();
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_FALSE(m.is_spd());
}

TEST_CASE("quadratic form") {
  SymMat m = SymMat::zero(2);
  m(0, 0) = 2.0;
  m(1, 1) = 1.0;
  CHECK(m.quad({1.0, 1.0, 0.0}) == doctest::Approx(3.0));
  CHECK(m.quad({2.0, 0.0, 0.0}) == doctest::Approx(8.0));
}
