#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mudual {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Relative tolerance for unit-norm and shape checks.
inline constexpr double kNormTol = 1e-12;
/// Slack allowed on the sum-power budget.
inline constexpr double kPowerSlack = 1e-9;

/// Antenna and stream bookkeeping for one base station serving K users.
///
/// Streams are indexed globally in user-major order: all of user 0's
/// streams first, then user 1's, and so on.
struct SystemDims {
  int M = 0;             ///< base-station antennas
  int K = 0;             ///< users
  std::vector<int> N;    ///< receive antennas per user
  std::vector<int> L;    ///< data streams per user

  int total_streams() const;
  int total_rx_antennas() const;
  /// Global index of user k's first stream.
  int stream_offset(int k) const;
  /// Owning user of every global stream index.
  std::vector<int> stream_owner() const;

  bool operator==(const SystemDims&) const = default;
};

/// One broken invariant found by validation.
struct Violation {
  std::string field;
  std::string rule;
};

std::vector<Violation> validate(const SystemDims& dims);

/// Per-user channels stored in uplink orientation: H[k] is M x N_k, so the
/// downlink channel of user k is H[k].adjoint().
struct ChannelSet {
  SystemDims dims;
  std::vector<CMatrix> H;
  double sigma2 = 1.0;
  double p_max = 1.0;
  std::optional<std::uint64_t> seed;
};

std::vector<Violation> validate(const ChannelSet& instance);

enum class LinkDirection { downlink, virtual_uplink };

const char* to_string(LinkDirection d);

/// Unit-norm transmit beamformers (one per stream, user-major) plus powers.
/// Downlink columns have length M; virtual-uplink columns have length N_k.
struct PrecoderSet {
  LinkDirection direction = LinkDirection::virtual_uplink;
  std::vector<CVector> beamformers;
  RVector powers;
};

std::vector<Violation> validate(const PrecoderSet& precoders,
                                const ChannelSet& ch);

/// Per-stream receive filters. Downlink filters have length N_k, uplink M.
struct ReceiverSet {
  LinkDirection direction = LinkDirection::virtual_uplink;
  std::vector<CVector> filters;
};

/// Stacked per-stream channels h_l = H_k * vbar_l seen at the base station.
class EffectiveChannel {
 public:
  /// Columns are M x L_tot; owner[l] is the user of stream l.
  EffectiveChannel(CMatrix cols, std::vector<int> owner);

  const CMatrix& cols() const { return cols_; }
  auto col(int l) const { return cols_.col(l); }
  int antennas() const { return static_cast<int>(cols_.rows()); }
  int streams() const { return static_cast<int>(cols_.cols()); }
  const std::vector<int>& stream_owner() const { return owner_; }

 private:
  CMatrix cols_;
  std::vector<int> owner_;
};

/// I.i.d. CN(0, 1) entries, deterministic in the seed. Throws DimensionError
/// on invalid dims.
ChannelSet gen_channel(const SystemDims& dims, double sigma2, double p_max,
                       std::uint64_t seed);

/// Random unit-norm virtual-uplink beamformers with uniform powers
/// p_max / L_tot.
PrecoderSet random_uplink_precoders(const ChannelSet& ch, std::uint64_t seed);

/// Each user's dominant right singular vectors of H_k (the strongest
/// transmit directions into the base station) as uplink beamformers;
/// uniform powers.
PrecoderSet svd_uplink_precoders(const ChannelSet& ch);

/// cols[l] = H_k * vbar_l. Throws DimensionError on a wrong direction,
/// mismatched lengths or a beamformer that is not unit norm.
EffectiveChannel build_effective_channel(const ChannelSet& ch,
                                         const PrecoderSet& uplink);

}  // namespace mudual
