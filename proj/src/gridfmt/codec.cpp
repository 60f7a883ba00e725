#include "esg/gridfmt/codec.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "esg/common/error.hpp"

namespace esg::gridfmt {
namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'E', 'S', 'G', 'N'};

template <typename T>
void put_le(Bytes& out, T value) {
  std::uint64_t raw = 0;
  std::memcpy(&raw, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(raw >> (8 * i)));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint64_t raw = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    raw |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  T value;
  std::memcpy(&value, &raw, sizeof(T));
  return value;
}

Json attributes_to_json(const Attributes& attrs) {
  Json out = Json::object();
  for (const auto& [key, value] : attrs) {
    std::visit([&](const auto& v) { out[key] = v; }, value);
  }
  return out;
}

Attributes attributes_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::corrupt, "attributes must be an object");
  Attributes out;
  for (const auto& [key, value] : j.items()) {
    if (value.is_number_integer()) {
      out[key] = value.get<std::int64_t>();
    } else if (value.is_number_float()) {
      out[key] = value.get<double>();
    } else if (value.is_string()) {
      out[key] = value.get<std::string>();
    } else {
      throw Error(Errc::corrupt, "attribute " + key + " is not a scalar");
    }
  }
  return out;
}

Json header_for(const GridDataset& ds) {
  Json dims = Json::array();
  for (const auto& d : ds.dimensions) {
    Json dim;
    dim["name"] = d.name;
    dim["size"] = d.size;
    dim["unlimited"] = d.unlimited;
    dims.push_back(std::move(dim));
  }
  Json vars = Json::array();
  std::uint64_t offset = 0;
  for (const auto& v : ds.variables) {
    std::uint64_t length = v.element_count() * 8;
    Json var;
    var["name"] = v.name;
    var["dims"] = v.dims;
    var["dtype"] = to_string(v.dtype());
    var["attributes"] = attributes_to_json(v.attributes);
    var["offset"] = offset;
    var["length"] = length;
    vars.push_back(std::move(var));
    offset += length;
  }
  Json header;
  header["dimensions"] = std::move(dims);
  header["variables"] = std::move(vars);
  header["attributes"] = attributes_to_json(ds.attributes);
  return header;
}

}  // namespace

Bytes write_dataset(const GridDataset& ds) {
  validate(ds);
  auto header = header_for(ds).dump();

  Bytes out;
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  for (const auto& v : ds.variables) {
    std::visit(
        [&](const auto& values) {
          for (auto x : values) put_le(out, x);
        },
        v.data);
  }
  return out;
}

GridDataset read_dataset(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::corrupt, "bad magic");
  }
  if (bytes.size() < kPrefixSize) throw Error(Errc::corrupt, "truncated prefix");
  if (bytes[4] != kFormatVersion) {
    throw Error(Errc::corrupt, "unsupported version " + std::to_string(bytes[4]));
  }
  auto header_len = get_le<std::uint32_t>(bytes.data() + 5);
  if (bytes.size() - kPrefixSize < header_len) {
    throw Error(Errc::corrupt, "truncated header");
  }
  auto header_text = std::string_view(
      reinterpret_cast<const char*>(bytes.data() + kPrefixSize), header_len);
  auto header = Json::parse(header_text, nullptr, false);
  if (header.is_discarded() || !header.is_object()) {
    throw Error(Errc::corrupt, "header is not valid structured text");
  }

  auto payload = bytes.subspan(kPrefixSize + header_len);
  GridDataset ds;
  try {
    for (const auto& d : header.at("dimensions")) {
      ds.dimensions.push_back({d.at("name").get<std::string>(),
                               d.at("size").get<std::uint64_t>(),
                               d.at("unlimited").get<bool>()});
    }
    std::uint64_t expected_offset = 0;
    for (const auto& v : header.at("variables")) {
      Variable var;
      var.name = v.at("name").get<std::string>();
      var.dims = v.at("dims").get<std::vector<std::string>>();
      var.attributes = attributes_from_json(v.at("attributes"));
      auto dtype = v.at("dtype").get<std::string>();
      auto offset = v.at("offset").get<std::uint64_t>();
      auto length = v.at("length").get<std::uint64_t>();
      if (offset % 8 != 0 || length % 8 != 0) {
        throw Error(Errc::corrupt, "misaligned variable " + var.name);
      }
      if (offset != expected_offset) {
        throw Error(Errc::corrupt, "variable " + var.name + " offset disagrees with layout");
      }
      if (offset + length > payload.size()) {
        throw Error(Errc::corrupt, "truncated payload for variable " + var.name);
      }
      const auto* p = payload.data() + offset;
      auto n = length / 8;
      if (dtype == "f64") {
        std::vector<double> values(n);
        for (std::uint64_t i = 0; i < n; ++i) values[i] = get_le<double>(p + 8 * i);
        var.data = std::move(values);
      } else if (dtype == "i64") {
        std::vector<std::int64_t> values(n);
        for (std::uint64_t i = 0; i < n; ++i) values[i] = get_le<std::int64_t>(p + 8 * i);
        var.data = std::move(values);
      } else {
        throw Error(Errc::corrupt, "unknown dtype " + dtype);
      }
      expected_offset = offset + length;
      ds.variables.push_back(std::move(var));
    }
    if (expected_offset != payload.size()) {
      throw Error(Errc::corrupt, "header declares " + std::to_string(expected_offset) +
                                     " payload bytes, found " +
                                     std::to_string(payload.size()));
    }
    ds.attributes = attributes_from_json(header.at("attributes"));
  } catch (const Json::exception& e) {
    throw Error(Errc::corrupt, std::string("malformed header: ") + e.what());
  }

  try {
    validate(ds);
  } catch (const Error& e) {
    throw Error(Errc::corrupt, e.what());
  }
  if (header_for(ds).dump() != header_text) {
    throw Error(Errc::corrupt, "non-canonical header");
  }
  return ds;
}

Digest checksum(std::span<const std::uint8_t> bytes) { return sha256(bytes); }

}  // namespace esg::gridfmt
