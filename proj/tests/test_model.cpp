#include "helpers.hpp"
#include "mudual/errors.hpp"
#include "mudual/io.hpp"
#include "mudual/model.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace mudual;
using mudual::test::kBaseDims;

namespace {

bool has_field(const std::vector<Violation>& v, const std::string& field) {
  for (const auto& x : v) {
    if (x.field == field) return true;
  }
  return false;
}

ChannelSet two_user_instance() {
  return gen_channel(SystemDims{3, 2, {2, 1}, {1, 1}}, 0.5, 4.0, 11);
}

}  // namespace

TEST_CASE("dims validation") {
  CHECK(validate(kBaseDims).empty());
  CHECK(kBaseDims.total_streams() == 4);
  CHECK(kBaseDims.total_rx_antennas() == 4);
  CHECK(kBaseDims.stream_offset(1) == 2);
  CHECK(kBaseDims.stream_owner() == std::vector<int>{0, 0, 1, 1});

  const auto v = validate(SystemDims{4, 1, {2}, {3}});
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "dims.L[0]");
  CHECK(v[0].rule.find("L_k <= N_k") != std::string::npos);

  CHECK(has_field(validate(SystemDims{0, 1, {1}, {1}}), "dims.M"));
  CHECK(has_field(validate(SystemDims{2, 2, {1}, {1, 1}}), "dims.N"));
  CHECK(has_field(validate(SystemDims{2, 1, {1}, {0}}), "dims.L[0]"));
}

TEST_CASE("instance validation") {
  auto ch = two_user_instance();
  CHECK(validate(ch).empty());

  SUBCASE("zero noise") {
    ch.sigma2 = 0.0;
    CHECK(has_field(validate(ch), "sigma2"));
  }
  SUBCASE("non-finite channel entry") {
    ch.H[0](1, 0) = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
    const auto v = validate(ch);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "H[0]");
  }
  SUBCASE("wrong shape") {
    ch.H[1] = CMatrix::Zero(2, 1);
    CHECK(has_field(validate(ch), "H[1]"));
  }
  SUBCASE("non-positive budget") {
    ch.p_max = -1.0;
    CHECK(has_field(validate(ch), "p_max"));
  }
}

TEST_CASE("gen_channel is deterministic and shaped") {
  const auto a = gen_channel(kBaseDims, 1.0, 10.0, 7);
  const auto b = gen_channel(kBaseDims, 1.0, 10.0, 7);
  REQUIRE(a.H.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(a.H[k].rows() == 4);
    CHECK(a.H[k].cols() == 2);
    CHECK(a.H[k] == b.H[k]);
  }
  CHECK(a.seed == std::optional<std::uint64_t>(7));
  CHECK(a.H[0] != gen_channel(kBaseDims, 1.0, 10.0, 8).H[0]);
  CHECK_THROWS_AS(gen_channel(SystemDims{4, 1, {2}, {3}}, 1.0, 10.0, 1),
                  DimensionError);
}

TEST_CASE("gen_channel entries have unit mean power") {
  // 50000 matrices of 2 entries = 1e5 draws.
  const SystemDims d{1, 1, {2}, {1}};
  double acc = 0.0;
  int count = 0;
  for (std::uint64_t s = 0; s < 50000; ++s) {
    const auto ch = gen_channel(d, 1.0, 1.0, s);
    acc += ch.H[0].squaredNorm();
    count += 2;
  }
  CHECK(acc / count == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gen_channel output always validates") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const SystemDims d{1 + static_cast<int>(s % 4), 2,
                       {1 + static_cast<int>(s % 3), 2},
                       {1, 1 + static_cast<int>(s % 2)}};
    CHECK(validate(gen_channel(d, 0.1 + s, 1.0 + s, s)).empty());
  }
}

TEST_CASE("effective channel of the identity") {
  ChannelSet ch;
  ch.dims = SystemDims{3, 1, {3}, {1}};
  ch.H = {CMatrix::Identity(3, 3)};
  PrecoderSet up;
  up.beamformers = {CVector::Unit(3, 0)};
  up.powers = RVector::Ones(1);
  const auto eff = build_effective_channel(ch, up);
  CHECK(eff.cols().col(0) == CVector::Unit(3, 0));
  CHECK(eff.stream_owner() == std::vector<int>{0});
}

TEST_CASE("effective channel rejects bad precoders") {
  const auto ch = gen_channel(kBaseDims, 1.0, 10.0, 3);
  auto up = random_uplink_precoders(ch, 3);
  CHECK(validate(up, ch).empty());

  SUBCASE("half-norm beamformer") {
    up.beamformers[2] *= 0.5;
    CHECK_THROWS_AS(build_effective_channel(ch, up), DimensionError);
    CHECK(has_field(validate(up, ch), "beamformers[2]"));
  }
  SUBCASE("wrong length") {
    up.beamformers[0] = CVector::Unit(3, 0);
    CHECK_THROWS_AS(build_effective_channel(ch, up), DimensionError);
  }
  SUBCASE("downlink set") {
    up.direction = LinkDirection::downlink;
    CHECK_THROWS_AS(build_effective_channel(ch, up), DimensionError);
  }
  SUBCASE("over budget") {
    up.powers *= 2.0;
    CHECK(has_field(validate(up, ch), "powers"));
  }
}

TEST_CASE("effective channel matches a naive product") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const SystemDims d{4, 3, {2, 3, 1}, {2, 1, 1}};
    const auto ch = gen_channel(d, 1.0, 1.0, s);
    const auto up = random_uplink_precoders(ch, s);
    const auto eff = build_effective_channel(ch, up);
    REQUIRE(eff.streams() == 4);
    const auto owner = d.stream_owner();
    for (int l = 0; l < 4; ++l) {
      const CMatrix& H = ch.H[owner[l]];
      const CVector& v = up.beamformers[l];
      for (int m = 0; m < d.M; ++m) {
        Complex acc(0.0, 0.0);
        for (int n = 0; n < H.cols(); ++n) acc += H(m, n) * v(n);
        CHECK(std::abs(eff.cols()(m, l) - acc) <= 1e-14);
      }
    }
  }
}

TEST_CASE("svd precoders are unit norm and dominant") {
  const auto ch = gen_channel(kBaseDims, 1.0, 10.0, 5);
  const auto up = svd_uplink_precoders(ch);
  CHECK(validate(up, ch).empty());
  CHECK(up.powers.sum() == doctest::Approx(10.0));
  // The first direction of each user captures its largest singular value.
  const Eigen::JacobiSVD<CMatrix> svd(ch.H[0]);
  CHECK((ch.H[0] * up.beamformers[0]).norm() ==
        doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
}

TEST_CASE("user permutation permutes effective columns") {
  const SystemDims d{4, 2, {2, 3}, {1, 2}};
  const auto ch = gen_channel(d, 1.0, 5.0, 21);
  const auto up = random_uplink_precoders(ch, 21);

  ChannelSet sw = ch;
  sw.dims = SystemDims{4, 2, {3, 2}, {2, 1}};
  sw.H = {ch.H[1], ch.H[0]};
  PrecoderSet upsw = up;
  upsw.beamformers = {up.beamformers[1], up.beamformers[2],
                      up.beamformers[0]};
  upsw.powers = RVector(3);
  upsw.powers << up.powers(1), up.powers(2), up.powers(0);

  const auto a = build_effective_channel(ch, up).cols();
  const auto b = build_effective_channel(sw, upsw).cols();
  CHECK(b.col(0) == a.col(1));
  CHECK(b.col(1) == a.col(2));
  CHECK(b.col(2) == a.col(0));
}

TEST_CASE("instance and precoder JSON round trip") {
  auto ch = gen_channel(kBaseDims, 0.3, 7.5, 99);
  const auto text = instance_text(ch);
  const ChannelSet back = nlohmann::json::parse(text).get<ChannelSet>();
  CHECK(back.dims == ch.dims);
  CHECK(back.sigma2 == ch.sigma2);
  CHECK(back.p_max == ch.p_max);
  CHECK(back.seed == ch.seed);
  for (int k = 0; k < 2; ++k) CHECK(back.H[k] == ch.H[k]);
  CHECK(instance_text(back) == text);
  CHECK(content_hash(text) == content_hash(instance_text(back)));
  CHECK(content_hash(text).size() == 16);

  ch.seed.reset();
  const ChannelSet noseed =
      nlohmann::json::parse(instance_text(ch)).get<ChannelSet>();
  CHECK_FALSE(noseed.seed.has_value());

  const auto up = random_uplink_precoders(ch, 4);
  const PrecoderSet pb = nlohmann::json(up).get<PrecoderSet>();
  CHECK(pb.direction == up.direction);
  CHECK(pb.powers == up.powers);
  for (std::size_t l = 0; l < up.beamformers.size(); ++l) {
    CHECK(pb.beamformers[l] == up.beamformers[l]);
  }
}

TEST_CASE("instance files") {
  const auto ch = gen_channel(kBaseDims, 1.0, 10.0, 12);
  const auto path = std::filesystem::temp_directory_path() /
                    "mudual_test_model_instance.json";
  save_instance(ch, path);
  const auto back = load_instance(path);
  CHECK(instance_text(back) == instance_text(ch));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_instance(path), Error);
}
