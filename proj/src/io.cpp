#include "mudual/io.hpp"

#include "mudual/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mudual {

using nlohmann::json;

json complex_matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back({m(r, c).real(), m(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix complex_matrix_from_json(const json& j) {
  if (!j.is_array()) throw Error("matrix must be a list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
      throw Error("matrix rows must all have the same length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& e = j[r][c];
      if (!e.is_array() || e.size() != 2) {
        throw Error("complex entry must be [re, im]");
      }
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

json complex_vector_to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back({v(i).real(), v(i).imag()});
  }
  return out;
}

CVector complex_vector_from_json(const json& j) {
  if (!j.is_array()) throw Error("vector must be a list of [re, im]");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_array() || e.size() != 2) {
      throw Error("complex entry must be [re, im]");
    }
    v(i) = Complex(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

json real_vector_to_json(const RVector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

RVector real_vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const RVector>(values.data(),
                                   static_cast<Eigen::Index>(values.size()));
}

void to_json(json& j, const SystemDims& d) {
  j = json{{"M", d.M}, {"K", d.K}, {"N", d.N}, {"L", d.L}};
}

void from_json(const json& j, SystemDims& d) {
  j.at("M").get_to(d.M);
  j.at("K").get_to(d.K);
  j.at("N").get_to(d.N);
  j.at("L").get_to(d.L);
}

void to_json(json& j, const ChannelSet& ch) {
  json H = json::array();
  for (const auto& Hk : ch.H) H.push_back(complex_matrix_to_json(Hk));
  j = json{{"dims", ch.dims},
           {"sigma2", ch.sigma2},
           {"p_max", ch.p_max},
           {"seed", ch.seed ? json(*ch.seed) : json(nullptr)},
           {"H", std::move(H)}};
}

void from_json(const json& j, ChannelSet& ch) {
  j.at("dims").get_to(ch.dims);
  j.at("sigma2").get_to(ch.sigma2);
  j.at("p_max").get_to(ch.p_max);
  if (j.contains("seed") && !j.at("seed").is_null()) {
    ch.seed = j.at("seed").get<std::uint64_t>();
  } else {
    ch.seed.reset();
  }
  ch.H.clear();
  for (const auto& m : j.at("H")) ch.H.push_back(complex_matrix_from_json(m));
}

void to_json(json& j, const PrecoderSet& p) {
  json cols = json::array();
  for (const auto& b : p.beamformers) cols.push_back(complex_vector_to_json(b));
  j = json{{"direction", to_string(p.direction)},
           {"beamformers", std::move(cols)},
           {"powers", real_vector_to_json(p.powers)}};
}

void from_json(const json& j, PrecoderSet& p) {
  const auto dir = j.at("direction").get<std::string>();
  if (dir == "downlink") {
    p.direction = LinkDirection::downlink;
  } else if (dir == "virtual_uplink") {
    p.direction = LinkDirection::virtual_uplink;
  } else {
    throw Error("unknown link direction '" + dir + "'");
  }
  p.beamformers.clear();
  for (const auto& b : j.at("beamformers")) {
    p.beamformers.push_back(complex_vector_from_json(b));
  }
  p.powers = real_vector_from_json(j.at("powers"));
}

std::string instance_text(const ChannelSet& ch) {
  return json(ch).dump(2) + "\n";
}

ChannelSet load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open instance file " + path.string());
  try {
    return json::parse(in).get<ChannelSet>();
  } catch (const json::exception& e) {
    throw Error("malformed instance file " + path.string() + ": " + e.what());
  }
}

void save_instance(const ChannelSet& ch, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write instance file " + path.string());
  out << instance_text(ch);
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mudual
