#pragma once

#include "mudual/model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mudual::test {

inline const SystemDims kBaseDims{4, 2, {2, 2}, {2, 2}};

// One user per stream, N_k = 1, so the effective channel is H itself.
inline ChannelSet single_antenna_users(const CMatrix& cols, double sigma2,
                                       double p_max) {
  const int L = static_cast<int>(cols.cols());
  ChannelSet ch;
  ch.dims = SystemDims{static_cast<int>(cols.rows()), L,
                       std::vector<int>(L, 1), std::vector<int>(L, 1)};
  for (int l = 0; l < L; ++l) ch.H.push_back(cols.col(l));
  ch.sigma2 = sigma2;
  ch.p_max = p_max;
  return ch;
}

inline PrecoderSet unit_uplink(int streams, double p_each) {
  PrecoderSet p;
  p.direction = LinkDirection::virtual_uplink;
  for (int l = 0; l < streams; ++l) p.beamformers.push_back(CVector::Ones(1));
  p.powers = RVector::Constant(streams, p_each);
  return p;
}

inline EffectiveChannel eff_of(const CMatrix& cols) {
  std::vector<int> owner(cols.cols());
  for (int l = 0; l < static_cast<int>(owner.size()); ++l) owner[l] = l;
  return EffectiveChannel(cols, owner);
}

inline CMatrix random_cols(int M, int L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CMatrix A(M, L);
  for (int j = 0; j < L; ++j)
    for (int i = 0; i < M; ++i) A(i, j) = Complex(n(rng), n(rng));
  return A;
}

inline RVector random_powers(int L, double p_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  RVector q(L);
  for (int l = 0; l < L; ++l) q(l) = u(rng);
  return q * (p_max / q.sum());
}

}  // namespace mudual::test
