#include "helpers.hpp"
#include "mudual/duality.hpp"
#include "mudual/errors.hpp"
#include "mudual/objective.hpp"
#include "mudual/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mudual;
using namespace mudual::test;

namespace {

// Uplink MSE of stream l with an arbitrary receiver u, written out term by
// term: sum_j q_j |u^H h_j|^2 + sigma2 |u|^2 - 2 sqrt(q_l) Re(u^H h_l) + 1.
double uplink_stream_mse(const CMatrix& Hc, const RVector& q, double sigma2,
                         int l, const CVector& u) {
  double acc = 1.0 + sigma2 * u.squaredNorm();
  for (int j = 0; j < Hc.cols(); ++j) {
    acc += q(j) * std::norm(u.dot(Hc.col(j)));
  }
  acc -= 2.0 * std::sqrt(q(l)) * u.dot(Hc.col(l)).real();
  return acc;
}

struct Instance {
  ChannelSet ch;
  EffectiveChannel eff;
  RVector q;
};

Instance random_instance(std::uint64_t seed) {
  auto ch = gen_channel(kBaseDims, 1.0, 10.0, seed);
  const auto up = random_uplink_precoders(ch, seed);
  auto eff = build_effective_channel(ch, up);
  return {ch, eff, random_powers(4, 10.0, seed + 1000)};
}

}  // namespace

TEST_CASE("covariance at zero power") {
  const auto eff = eff_of(random_cols(3, 2, 1));
  const auto st = UplinkState::make(eff, RVector::Zero(2), 0.5);
  CHECK(st.J().isApprox(0.5 * CMatrix::Identity(3, 3)));
  CHECK(st.J_inv().isApprox(2.0 * CMatrix::Identity(3, 3)));
  CHECK(sum_mse_uplink(st) == doctest::Approx(2.0));
  const auto rep = mmse_report_uplink(st);
  CHECK(rep.per_stream.isApproxToConstant(1.0));
}

TEST_CASE("rank-one update of the identity") {
  CMatrix h = CMatrix::Zero(2, 1);
  h(0, 0) = 1.0;
  const auto st = UplinkState::make(eff_of(h), RVector::Ones(1), 1.0);
  CMatrix want = CMatrix::Identity(2, 2);
  want(0, 0) = 2.0;
  CHECK(st.J().isApprox(want));
  CHECK(st.trace_inv() == doctest::Approx(1.5));
}

TEST_CASE("inverse is accurate") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto in = random_instance(s);
    const auto st = UplinkState::make(in.eff, in.q, in.ch.sigma2);
    const CMatrix I = st.J() * st.J_inv();
    CHECK((I - CMatrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(trace_inv_objective(in.eff, in.q, in.ch.sigma2) ==
          doctest::Approx(st.trace_inv()).epsilon(1e-13));
  }
}

TEST_CASE("state rejects bad inputs") {
  const auto eff = eff_of(random_cols(2, 2, 3));
  CHECK_THROWS_AS(UplinkState::make(eff, RVector::Ones(3), 1.0),
                  DimensionError);
  CHECK_THROWS_AS(UplinkState::make(eff, RVector::Constant(2, -1.0), 1.0),
                  NumericsError);
  CHECK_THROWS_AS(UplinkState::make(eff, RVector::Ones(2), 0.0),
                  NumericsError);
  RVector bad = RVector::Ones(2);
  bad(1) = std::nan("");
  CHECK_THROWS_AS(UplinkState::make(eff, bad, 1.0), NumericsError);
}

TEST_CASE("scalar closed forms") {
  const auto eff = eff_of(CMatrix::Ones(1, 1));
  const auto st3 = UplinkState::make(eff, RVector::Constant(1, 3.0), 1.0);
  CHECK(sum_mse_uplink(st3, 1) == doctest::Approx(0.25));
  CHECK(mmse_report_uplink(st3).per_stream(0) == doctest::Approx(0.25));

  const auto st1 = UplinkState::make(eff, RVector::Ones(1), 1.0);
  CHECK(grad_trace_Jinv(st1)(0) == doctest::Approx(-0.25));
  CHECK(std::abs(mmse_receivers_uplink(st1).filters[0](0) - 0.5) <= 1e-15);
}

TEST_CASE("zero channel and zero power edge cases") {
  CMatrix H = random_cols(3, 3, 5);
  H.col(1).setZero();
  const RVector q = RVector::Constant(3, 1.0);
  const auto st = UplinkState::make(eff_of(H), q, 1.0);
  CHECK(grad_trace_Jinv(st)(1) == 0.0);

  RVector q0 = q;
  q0(2) = 0.0;
  const auto st0 = UplinkState::make(eff_of(H), q0, 1.0);
  CHECK(mmse_receivers_uplink(st0).filters[2].isZero(0.0));
}

TEST_CASE("gradient matches central differences") {
  const double h = 1e-6;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const auto in = random_instance(s);
    const auto st = UplinkState::make(in.eff, in.q, 1.0);
    const RVector g = grad_trace_Jinv(st);
    RVector fd(g.size());
    for (int l = 0; l < g.size(); ++l) {
      RVector qp = in.q, qm = in.q;
      qp(l) += h;
      qm(l) -= h;
      fd(l) = (trace_inv_objective(in.eff, qp, 1.0) -
               trace_inv_objective(in.eff, qm, 1.0)) /
              (2.0 * h);
    }
    CHECK((fd - g).norm() / g.norm() <= 1e-5);
  }
}

TEST_CASE("uplink receivers are stream-wise optimal") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto in = random_instance(s);
    const auto st = UplinkState::make(in.eff, in.q, 1.0);
    const auto rx = mmse_receivers_uplink(st);
    const auto rep = mmse_report_uplink(st);
    for (int l = 0; l < 4; ++l) {
      const double base =
          uplink_stream_mse(in.eff.cols(), in.q, 1.0, l, rx.filters[l]);
      CHECK(base == doctest::Approx(rep.per_stream(l)).epsilon(1e-10));
      for (int d = 0; d < 8; ++d) {
        CVector dir(4);
        for (int m = 0; m < 4; ++m) dir(m) = Complex(n(rng), n(rng));
        dir *= 1e-3 / dir.norm();
        for (double sign : {1.0, -1.0}) {
          const CVector u = rx.filters[l] + sign * dir;
          CHECK(uplink_stream_mse(in.eff.cols(), in.q, 1.0, l, u) >= base);
        }
      }
    }
  }
}

TEST_CASE("sum-MSE trace identity") {
  for (std::uint64_t s = 1; s <= 50; ++s) {
    const auto in = random_instance(s);
    const auto st = UplinkState::make(in.eff, in.q, 1.0);
    const auto rep = mmse_report_uplink(st);
    double tr = 0.0;
    for (const auto& E : rep.per_user) tr += E.trace().real();
    CHECK(std::abs(sum_mse_uplink(st) - tr) <= 1e-10);
    CHECK(std::abs(rep.sum - rep.per_stream.sum()) <= 1e-10);
    CHECK(std::abs(rep.sum - sum_mse_uplink(st)) <= 1e-10);
  }
}

TEST_CASE("more power on one stream lowers the objective") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto in = random_instance(s);
    const double f0 = trace_inv_objective(in.eff, in.q, 1.0);
    for (int l = 0; l < 4; ++l) {
      RVector q = in.q;
      q(l) += 0.1;
      CHECK(trace_inv_objective(in.eff, q, 1.0) < f0);
    }
  }
}

TEST_CASE("objective is convex along random chords") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t s = 1; s <= 50; ++s) {
    const auto in = random_instance(s);
    const RVector qa = random_powers(4, 10.0 * u(rng), s + 1);
    const RVector qb = random_powers(4, 10.0 * u(rng), s + 2);
    const double t = u(rng);
    const double mid = trace_inv_objective(in.eff, t * qa + (1 - t) * qb, 1.0);
    const double chord = t * trace_inv_objective(in.eff, qa, 1.0) +
                         (1 - t) * trace_inv_objective(in.eff, qb, 1.0);
    CHECK(mid <= chord + 1e-10);
  }
}

TEST_CASE("scalar downlink and uplink agree") {
  ChannelSet ch;
  ch.dims = SystemDims{1, 1, {1}, {1}};
  ch.H = {CMatrix::Ones(1, 1)};
  ch.sigma2 = 1.0;
  ch.p_max = 3.0;
  PrecoderSet dl;
  dl.direction = LinkDirection::downlink;
  dl.beamformers = {CVector::Ones(1)};
  dl.powers = RVector::Constant(1, 3.0);
  const auto down = mmse_report_downlink(ch, dl);
  const auto up = mmse_report_uplink(
      UplinkState::make(eff_of(CMatrix::Ones(1, 1)), dl.powers, 1.0));
  CHECK(down.per_stream(0) == doctest::Approx(0.25));
  CHECK(down.per_stream(0) == up.per_stream(0));

  dl.powers.setZero();
  CHECK(mmse_report_downlink(ch, dl).per_stream(0) == doctest::Approx(1.0));
}

TEST_CASE("downlink receivers minimize the general downlink MSE") {
  const auto in = random_instance(9);
  PrecoderSet dl;
  dl.direction = LinkDirection::downlink;
  for (int l = 0; l < 4; ++l) {
    dl.beamformers.push_back(random_cols(4, 1, 40 + l).col(0).normalized());
  }
  dl.powers = in.q;
  const auto rx = mmse_receivers_downlink(in.ch, dl);
  const RVector mse = stream_mse_downlink(in.ch, dl, rx);
  const auto rep = mmse_report_downlink(in.ch, dl);
  for (int l = 0; l < 4; ++l) {
    CHECK(mse(l) == doctest::Approx(rep.per_stream(l)).epsilon(1e-10));
  }
  ReceiverSet off = rx;
  for (auto& v : off.filters) v *= 1.01;
  CHECK((stream_mse_downlink(in.ch, dl, off).array() >= mse.array()).all());
}

TEST_CASE("dual downlink reproduces the uplink MSEs at the optimum") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto ch = gen_channel(kBaseDims, 1.0, 10.0, s);
    const auto up = random_uplink_precoders(ch, s);
    const auto sol = solve_power(build_effective_channel(ch, up), 1.0, 10.0);
    const auto rep = verify_theorem(ch, up, sol.q);
    CHECK((rep.eps_dl - rep.eps_ul).cwiseAbs().maxCoeff() <= 1e-8);
    // Per-user MMSE receivers can only do better than the dual receivers.
    CHECK((rep.eps_dl_mmse.array() <= rep.eps_ul.array() + 1e-12).all());
  }
}
