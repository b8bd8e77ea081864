#include "mudual/model.hpp"

#include "mudual/errors.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace mudual {

int SystemDims::total_streams() const {
  return std::accumulate(L.begin(), L.end(), 0);
}

int SystemDims::total_rx_antennas() const {
  return std::accumulate(N.begin(), N.end(), 0);
}

int SystemDims::stream_offset(int k) const {
  return std::accumulate(L.begin(), L.begin() + k, 0);
}

std::vector<int> SystemDims::stream_owner() const {
  std::vector<int> owner;
  owner.reserve(total_streams());
  for (int k = 0; k < static_cast<int>(L.size()); ++k) {
    owner.insert(owner.end(), L[k], k);
  }
  return owner;
}

std::vector<Violation> validate(const SystemDims& dims) {
  std::vector<Violation> out;
  if (dims.M < 1) out.push_back({"dims.M", "M >= 1"});
  if (dims.K < 1) out.push_back({"dims.K", "K >= 1"});
  if (static_cast<int>(dims.N.size()) != dims.K) {
    out.push_back({"dims.N", "N must list one entry per user (K entries)"});
  }
  if (static_cast<int>(dims.L.size()) != dims.K) {
    out.push_back({"dims.L", "L must list one entry per user (K entries)"});
  }
  const std::size_t users = std::min(dims.N.size(), dims.L.size());
  for (std::size_t k = 0; k < dims.N.size(); ++k) {
    if (dims.N[k] < 1) {
      out.push_back({"dims.N[" + std::to_string(k) + "]", "N_k >= 1"});
    }
  }
  for (std::size_t k = 0; k < dims.L.size(); ++k) {
    const std::string field = "dims.L[" + std::to_string(k) + "]";
    if (dims.L[k] < 1) {
      out.push_back({field, "L_k >= 1"});
    } else if (k < users && dims.L[k] > dims.N[k]) {
      std::ostringstream rule;
      rule << "L_k <= N_k (L_k = " << dims.L[k] << ", N_k = " << dims.N[k]
           << ")";
      out.push_back({field, rule.str()});
    }
  }
  return out;
}

std::vector<Violation> validate(const ChannelSet& instance) {
  std::vector<Violation> out = validate(instance.dims);
  const auto& d = instance.dims;
  if (!(instance.sigma2 > 0.0) || !std::isfinite(instance.sigma2)) {
    out.push_back({"sigma2", "sigma2 > 0 and finite"});
  }
  if (!(instance.p_max > 0.0) || !std::isfinite(instance.p_max)) {
    out.push_back({"p_max", "p_max > 0 and finite"});
  }
  if (static_cast<int>(instance.H.size()) != d.K) {
    out.push_back({"H", "one channel matrix per user (K matrices)"});
    return out;
  }
  for (int k = 0; k < d.K; ++k) {
    const std::string field = "H[" + std::to_string(k) + "]";
    const auto& Hk = instance.H[k];
    if (k < static_cast<int>(d.N.size()) &&
        (Hk.rows() != d.M || Hk.cols() != d.N[k])) {
      out.push_back({field, "shape must be M x N_k"});
    }
    if (!Hk.allFinite()) out.push_back({field, "entries must be finite"});
  }
  return out;
}

const char* to_string(LinkDirection d) {
  return d == LinkDirection::downlink ? "downlink" : "virtual_uplink";
}

std::vector<Violation> validate(const PrecoderSet& precoders,
                                const ChannelSet& ch) {
  std::vector<Violation> out;
  const auto& d = ch.dims;
  const int total = d.total_streams();
  if (static_cast<int>(precoders.beamformers.size()) != total) {
    out.push_back({"beamformers", "one beamformer per stream (L_tot)"});
  }
  if (precoders.powers.size() != total) {
    out.push_back({"powers", "one power per stream (L_tot)"});
  }
  const auto owner = d.stream_owner();
  for (int l = 0; l < static_cast<int>(precoders.beamformers.size()); ++l) {
    const std::string field = "beamformers[" + std::to_string(l) + "]";
    const auto& b = precoders.beamformers[l];
    const Eigen::Index want = precoders.direction == LinkDirection::downlink
                                  ? d.M
                                  : (l < total ? d.N[owner[l]] : -1);
    if (b.size() != want) out.push_back({field, "length mismatch"});
    if (!b.allFinite() || std::abs(b.norm() - 1.0) > kNormTol) {
      out.push_back({field, "unit norm within 1e-12"});
    }
  }
  if (!precoders.powers.allFinite() ||
      (precoders.powers.size() > 0 && precoders.powers.minCoeff() < 0.0)) {
    out.push_back({"powers", "powers >= 0 and finite"});
  }
  if (precoders.powers.sum() > ch.p_max + kPowerSlack) {
    out.push_back({"powers", "sum of powers <= p_max"});
  }
  return out;
}

EffectiveChannel::EffectiveChannel(CMatrix cols, std::vector<int> owner)
    : cols_(std::move(cols)), owner_(std::move(owner)) {
  if (static_cast<Eigen::Index>(owner_.size()) != cols_.cols()) {
    throw DimensionError("effective channel: owner map does not match columns");
  }
}

namespace {

void require_valid(const SystemDims& dims) {
  const auto v = validate(dims);
  if (!v.empty()) {
    throw DimensionError("invalid dims: " + v.front().field + ": " +
                         v.front().rule);
  }
}

CVector random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = gauss(rng);
    v(i) = Complex(re, gauss(rng));
  }
  return v / v.norm();
}

}  // namespace

ChannelSet gen_channel(const SystemDims& dims, double sigma2, double p_max,
                       std::uint64_t seed) {
  require_valid(dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  ChannelSet ch{dims, {}, sigma2, p_max, seed};
  ch.H.reserve(dims.K);
  for (int k = 0; k < dims.K; ++k) {
    CMatrix Hk(dims.M, dims.N[k]);
    // Column-major fill keeps the draw order independent of Eigen internals.
    for (int c = 0; c < dims.N[k]; ++c) {
      for (int r = 0; r < dims.M; ++r) {
        const double re = gauss(rng);
        Hk(r, c) = Complex(re, gauss(rng));
      }
    }
    ch.H.push_back(std::move(Hk));
  }
  return ch;
}

PrecoderSet random_uplink_precoders(const ChannelSet& ch, std::uint64_t seed) {
  require_valid(ch.dims);
  // Decorrelate from the channel stream when the same seed is reused.
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  const int total = ch.dims.total_streams();
  PrecoderSet out;
  out.direction = LinkDirection::virtual_uplink;
  for (int l : ch.dims.stream_owner()) {
    out.beamformers.push_back(random_unit(ch.dims.N[l], rng));
  }
  out.powers = RVector::Constant(total, ch.p_max / total);
  return out;
}

PrecoderSet svd_uplink_precoders(const ChannelSet& ch) {
  require_valid(ch.dims);
  const int total = ch.dims.total_streams();
  PrecoderSet out;
  out.direction = LinkDirection::virtual_uplink;
  for (int k = 0; k < ch.dims.K; ++k) {
    Eigen::JacobiSVD<CMatrix> svd(ch.H[k], Eigen::ComputeFullV);
    for (int j = 0; j < ch.dims.L[k]; ++j) {
      CVector v = svd.matrixV().col(j);
      out.beamformers.push_back(v / v.norm());
    }
  }
  out.powers = RVector::Constant(total, ch.p_max / total);
  return out;
}

EffectiveChannel build_effective_channel(const ChannelSet& ch,
                                         const PrecoderSet& uplink) {
  if (uplink.direction != LinkDirection::virtual_uplink) {
    throw DimensionError("effective channel needs virtual-uplink precoders");
  }
  const auto& d = ch.dims;
  const int total = d.total_streams();
  if (static_cast<int>(uplink.beamformers.size()) != total ||
      static_cast<int>(ch.H.size()) != d.K) {
    throw DimensionError("effective channel: stream count mismatch");
  }
  auto owner = d.stream_owner();
  CMatrix cols(d.M, total);
  for (int l = 0; l < total; ++l) {
    const auto& Hk = ch.H[owner[l]];
    const auto& v = uplink.beamformers[l];
    if (v.size() != Hk.cols() || Hk.rows() != d.M) {
      throw DimensionError("effective channel: beamformer " +
                           std::to_string(l) + " does not match N_k");
    }
    if (std::abs(v.norm() - 1.0) > kNormTol) {
      throw DimensionError("effective channel: beamformer " +
                           std::to_string(l) + " is not unit norm");
    }
    cols.col(l) = Hk * v;
  }
  return EffectiveChannel(std::move(cols), std::move(owner));
}

}  // namespace mudual
