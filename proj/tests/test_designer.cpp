#include "helpers.hpp"
#include "mudual/designer.hpp"
#include "mudual/errors.hpp"
#include "mudual/objective.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mudual;
using namespace mudual::test;

namespace {

void check_monotone(const DesignResult& r) {
  REQUIRE(r.smse_trace.size() == r.smse_dl_trace.size());
  for (std::size_t i = 0; i < r.smse_trace.size(); ++i) {
    // Power solve, then receiver update, then the next power solve.
    CHECK(r.smse_dl_trace[i] <= r.smse_trace[i] + 1e-10);
    if (i + 1 < r.smse_trace.size()) {
      CHECK(r.smse_trace[i + 1] <= r.smse_dl_trace[i] + 1e-10);
      CHECK(r.smse_trace[i + 1] <= r.smse_trace[i] + 1e-10);
    }
  }
}

}  // namespace

TEST_CASE("enum names round trip") {
  for (auto m : {InitMode::random_unit, InitMode::channel_svd}) {
    CHECK(init_mode_from_string(to_string(m)) == m);
  }
  for (auto p : {ConversionPath::legacy_transform,
                 ConversionPath::simplified_pq, ConversionPath::both}) {
    CHECK(conversion_path_from_string(to_string(p)) == p);
  }
  CHECK(conversion_path_from_string("legacy") ==
        ConversionPath::legacy_transform);
  CHECK_THROWS_AS(conversion_path_from_string("fast"), Error);
  CHECK_THROWS_AS(init_mode_from_string("zeros"), Error);
}

TEST_CASE("config validation") {
  DesignConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_outer_iters = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.smse_rel_tol = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("scalar link converges immediately") {
  ChannelSet ch = single_antenna_users(CMatrix::Ones(1, 1), 0.5, 3.0);
  DesignConfig cfg;
  const auto r = design(ch, cfg);
  CHECK(r.converged);
  CHECK(r.iters <= 2);
  CHECK(r.uplink.powers(0) == doctest::Approx(3.0));
  CHECK(r.downlink.powers(0) == doctest::Approx(3.0));
  CHECK(r.smse_trace.back() == doctest::Approx(0.5 / 3.5).epsilon(1e-12));
  for (double g : r.path_gaps) CHECK(g <= 1e-12 * 3.0);
}

TEST_CASE("orthogonal users get their channel directions") {
  ChannelSet ch;
  ch.dims = SystemDims{2, 2, {2, 2}, {1, 1}};
  CMatrix H1 = CMatrix::Zero(2, 2), H2 = CMatrix::Zero(2, 2);
  H1(0, 0) = 1.0;
  H2(1, 1) = 1.0;
  ch.H = {H1, H2};
  ch.sigma2 = 1.0;
  ch.p_max = 4.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    DesignConfig cfg;
    cfg.seed = seed;
    const auto r = design(ch, cfg);
    CHECK(std::abs(r.uplink.beamformers[0](0)) == doctest::Approx(1.0));
    CHECK(std::abs(r.uplink.beamformers[1](1)) == doctest::Approx(1.0));
    CHECK(r.uplink.powers(0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(r.uplink.powers(1) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(std::abs(r.downlink.beamformers[0](0)) == doctest::Approx(1.0));
    CHECK(r.smse_trace.back() == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  }
}

TEST_CASE("ensemble runs descend and the paths agree") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto ch = gen_channel(kBaseDims, 1.0, 10.0, s);
    DesignConfig cfg;
    cfg.seed = s;
    const auto r = design(ch, cfg);
    CHECK(r.converged);
    check_monotone(r);
    REQUIRE(r.path_gaps.size() == static_cast<std::size_t>(r.iters));
    for (double g : r.path_gaps) CHECK(g <= 1e-6 * ch.p_max);
    CHECK(r.smse_trace.back() >= std::max(0, 4 - 4) - 1e-10);
    CHECK(validate(r.uplink, ch).empty());
    CHECK(r.downlink.direction == LinkDirection::downlink);
    CHECK(r.downlink.powers.sum() <= ch.p_max + 1e-9);
  }
}

TEST_CASE("every path and initialization works") {
  const auto ch = gen_channel(SystemDims{3, 2, {2, 2}, {2, 1}}, 0.5, 5.0, 8);
  for (auto path : {ConversionPath::legacy_transform,
                    ConversionPath::simplified_pq, ConversionPath::both}) {
    for (auto init : {InitMode::random_unit, InitMode::channel_svd}) {
      DesignConfig cfg;
      cfg.path = path;
      cfg.init_mode = init;
      cfg.seed = 4;
      const auto r = design(ch, cfg);
      CHECK(r.path_used == path);
      check_monotone(r);
      // L_tot = M here, so the floor is zero.
      CHECK(r.smse_trace.back() >= -1e-10);
      CHECK(r.transform_times.empty() ==
            (path == ConversionPath::simplified_pq));
      CHECK(r.legacy_powers.size() ==
            (path == ConversionPath::simplified_pq ? 0 : 3));
    }
  }
}

TEST_CASE("overloaded base station keeps the sum-MSE floor") {
  // L_tot = 4 streams into M = 2 antennas: at least 2 units of MSE remain.
  const auto ch = gen_channel(SystemDims{2, 2, {2, 2}, {2, 2}}, 1.0, 10.0, 6);
  DesignConfig cfg;
  cfg.seed = 6;
  const auto r = design(ch, cfg);
  check_monotone(r);
  CHECK(r.smse_trace.back() >= 2.0 - 1e-10);
}

TEST_CASE("a converged design is a fixed point") {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto ch = gen_channel(kBaseDims, 1.0, 10.0, s);
    DesignConfig cfg;
    cfg.seed = s;
    const auto r = design(ch, cfg);
    const auto again = design_from(ch, r.uplink, cfg);
    const double a = r.smse_trace.back();
    const double b = again.smse_trace.back();
    CHECK(std::abs(a - b) <= cfg.smse_rel_tol * std::abs(a) + 1e-12);
  }
}

TEST_CASE("path comparison") {
  const auto ch = gen_channel(kBaseDims, 1.0, 10.0, 13);
  DesignConfig cfg;
  cfg.seed = 13;
  const auto cmp = compare_paths(ch, cfg);
  CHECK(cmp.smse_final_diff <= 1e-8);
  CHECK(cmp.max_power_gap <= 1e-6 * 10.0);
  CHECK(cmp.transform_times.size() == static_cast<std::size_t>(cmp.iters));
  CHECK(cmp.transform_median > 0.0);
  cfg.path = ConversionPath::legacy_transform;
  CHECK_THROWS_AS(compare_paths(ch, cfg), Error);
}

TEST_CASE("iteration cap hands back the partial run") {
  const auto ch = gen_channel(kBaseDims, 1.0, 10.0, 2);
  DesignConfig cfg;
  cfg.seed = 2;
  REQUIRE(design(ch, cfg).iters > 2);
  cfg.max_outer_iters = 2;
  try {
    design(ch, cfg);
    FAIL("expected DesignConvergenceError");
  } catch (const DesignConvergenceError& e) {
    CHECK(e.partial().iters == 2);
    CHECK_FALSE(e.partial().converged);
    CHECK(e.partial().smse_trace.size() == 2);
    CHECK(validate(e.partial().uplink, ch).empty());
  }
}

TEST_CASE("covariance normalization") {
  SUBCASE("scaled projector") {
    CMatrix R = CMatrix::Zero(3, 3);
    R(0, 0) = 2.0;
    const auto out = normalize_covariance(std::vector<CMatrix>{R});
    REQUIRE(out.size() == 1);
    CHECK(out[0].active);
    CHECK(out[0].power == doctest::Approx(2.0));
    CMatrix P = CMatrix::Zero(3, 3);
    P(0, 0) = 1.0;
    CHECK((out[0].direction - P).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("zero is inactive") {
    const auto out =
        normalize_covariance(std::vector<CMatrix>{CMatrix::Zero(2, 2)});
    CHECK_FALSE(out[0].active);
    CHECK(out[0].power == 0.0);
    CHECK(out[0].beamformer.size() == 0);
  }
  SUBCASE("random rank one round trips") {
    for (std::uint64_t s = 1; s <= 20; ++s) {
      const CVector v = random_cols(4, 1, s).col(0).normalized();
      const double q = 0.1 * s;
      const CMatrix R = q * v * v.adjoint();
      const auto out = normalize_covariance(std::vector<CMatrix>{R});
      CHECK(std::abs(out[0].power - q) <= 1e-12);
      CHECK((out[0].direction - v * v.adjoint()).cwiseAbs().maxCoeff() <=
            1e-12);
      CHECK(std::abs(std::abs(out[0].beamformer.dot(v)) - 1.0) <= 1e-12);
    }
  }
  SUBCASE("rank two is rejected") {
    CHECK_THROWS_AS(
        normalize_covariance(std::vector<CMatrix>{CMatrix::Identity(2, 2)}),
        RankError);
  }
}

TEST_CASE("median") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(median({}) == 0.0);  // e.g. no legacy timings on the copy path
}
