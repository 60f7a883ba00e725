#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace esg {

inline constexpr std::string_view kLfnScheme = "lfn://";
inline constexpr std::string_view kSiteScheme = "site://";
inline constexpr std::string_view kServiceScheme = "svc://";

enum class Tier { disk, archive };

std::string_view to_string(Tier tier);

/// Segments are [A-Za-z0-9._-]+, never "." or "..".
bool valid_segment(std::string_view segment);

std::vector<std::string> split_path(std::string_view path);

/// lfn://seg(/seg)*
bool valid_lfn(std::string_view lfn);
/// The part after "lfn://"; throws on invalid syntax.
std::string lfn_path(std::string_view lfn);

/// site://<site>/<tier>/<path>; path may be empty only when allow_root is set
/// (a tier root used as a directory).
struct Pfn {
  std::string site;
  Tier tier = Tier::disk;
  std::string path;

  std::string str() const;
  bool operator==(const Pfn&) const = default;
};

std::optional<Pfn> parse_pfn(std::string_view text, bool allow_root = false);
Pfn require_pfn(std::string_view text, bool allow_root = false);

}  // namespace esg
