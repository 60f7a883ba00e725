#include "esg/common/names.hpp"

#include "esg/common/error.hpp"

namespace esg {

std::string_view to_string(Tier tier) {
  return tier == Tier::disk ? "disk" : "archive";
}

bool valid_segment(std::string_view segment) {
  if (segment.empty() || segment == "." || segment == "..") return false;
  for (char c : segment) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    out.emplace_back(path.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

namespace {

bool valid_relative_path(std::string_view path) {
  if (path.empty()) return false;
  for (const auto& seg : split_path(path)) {
    if (!valid_segment(seg)) return false;
  }
  return true;
}

}  // namespace

bool valid_lfn(std::string_view lfn) {
  return lfn.starts_with(kLfnScheme) &&
         valid_relative_path(lfn.substr(kLfnScheme.size()));
}

std::string lfn_path(std::string_view lfn) {
  if (!valid_lfn(lfn)) {
    throw Error(Errc::invalid_argument, "malformed LFN: " + std::string(lfn));
  }
  return std::string(lfn.substr(kLfnScheme.size()));
}

std::string Pfn::str() const {
  std::string out = std::string(kSiteScheme) + site + "/" +
                    std::string(to_string(tier));
  if (!path.empty()) out += "/" + path;
  return out;
}

std::optional<Pfn> parse_pfn(std::string_view text, bool allow_root) {
  if (!text.starts_with(kSiteScheme)) return std::nullopt;
  auto rest = text.substr(kSiteScheme.size());
  auto slash = rest.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  Pfn pfn;
  pfn.site = std::string(rest.substr(0, slash));
  if (!valid_segment(pfn.site)) return std::nullopt;
  rest = rest.substr(slash + 1);
  slash = rest.find('/');
  auto tier = rest.substr(0, slash);
  if (tier == "disk") {
    pfn.tier = Tier::disk;
  } else if (tier == "archive") {
    pfn.tier = Tier::archive;
  } else {
    return std::nullopt;
  }
  if (slash == std::string_view::npos) {
    if (!allow_root) return std::nullopt;
    return pfn;
  }
  auto path = rest.substr(slash + 1);
  if (path.empty() && allow_root) return pfn;
  if (!valid_relative_path(path)) return std::nullopt;
  pfn.path = std::string(path);
  return pfn;
}

Pfn require_pfn(std::string_view text, bool allow_root) {
  auto pfn = parse_pfn(text, allow_root);
  if (!pfn) {
    throw Error(Errc::invalid_argument, "malformed PFN: " + std::string(text));
  }
  return *pfn;
}

}  // namespace esg
