#pragma once

#include "mudual/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace mudual {

// Complex entries are written as [re, im]; matrices as a list of rows.
// nlohmann/json prints doubles in shortest round-trip form, so a
// dump/parse cycle reproduces every value bit for bit.

nlohmann::json complex_matrix_to_json(const CMatrix& m);
CMatrix complex_matrix_from_json(const nlohmann::json& j);
nlohmann::json complex_vector_to_json(const CVector& v);
CVector complex_vector_from_json(const nlohmann::json& j);
nlohmann::json real_vector_to_json(const RVector& v);
RVector real_vector_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const SystemDims& d);
void from_json(const nlohmann::json& j, SystemDims& d);
void to_json(nlohmann::json& j, const ChannelSet& ch);
void from_json(const nlohmann::json& j, ChannelSet& ch);
void to_json(nlohmann::json& j, const PrecoderSet& p);
void from_json(const nlohmann::json& j, PrecoderSet& p);

/// Reads and parses a JSON instance file. Throws Error when unreadable or
/// malformed; the result is not validated.
ChannelSet load_instance(const std::filesystem::path& path);
void save_instance(const ChannelSet& ch, const std::filesystem::path& path);

/// Canonical text written by save_instance.
std::string instance_text(const ChannelSet& ch);

/// 64-bit FNV-1a of a byte string, rendered as 16 hex digits.
std::string content_hash(const std::string& bytes);

}  // namespace mudual
