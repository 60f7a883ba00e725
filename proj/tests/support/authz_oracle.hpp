#pragma once

#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "esg/security/authority.hpp"

namespace esg::testing {

/// Glob semantics restated as a regular expression, independent of the
/// segment matcher in the authority.
inline std::regex glob_regex(const std::string& pattern) {
  auto scheme_end = pattern.find("://") + 3;
  std::string re = pattern.substr(0, scheme_end);
  std::string rest = pattern.substr(scheme_end);
  std::vector<std::string> segs;
  std::size_t pos = 0;
  while (true) {
    auto next = rest.find('/', pos);
    segs.push_back(rest.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (s == "**") {
      if (i == 0) {
        re += "([^/]+(/[^/]+)*)?";
      } else {
        re += "(/[^/]+)*";
      }
      continue;
    }
    if (i > 0) re += "/";
    if (s == "*") {
      re += "[^/]+";
    } else {
      for (char c : s) {
        if (c == '.' || c == '-') re += '\\';
        re += c;
      }
    }
  }
  return std::regex(re);
}

/// Set-comprehension oracle: allowed iff the token is valid and some policy
/// grants (group ∈ groups, action ∈ actions, resource ∈ pattern), with
/// service resources reserved for full credentials.
inline bool oracle_allows(const std::vector<security::GroupPolicy>& policies,
                          const std::optional<security::Token>& token,
                          const std::string& resource, security::Action action) {
  if (!token) return false;
  std::set<std::string> groups(token->groups.begin(), token->groups.end());
  bool any = false;
  for (const auto& p : policies) {
    if (groups.count(p.group) && p.actions.count(action) &&
        std::regex_match(resource, glob_regex(p.pattern))) {
      any = true;
    }
  }
  bool service = resource.rfind("svc://", 0) == 0;
  return any && (!service || token->kind == security::CredentialKind::full);
}

inline const std::vector<std::string>& oracle_groups() {
  static const std::vector<std::string> g{"climate", "power", "ipcc", "ocean"};
  return g;
}

inline const std::vector<std::string>& oracle_patterns() {
  static const std::vector<std::string> p{
      "lfn://pcm/**",      "lfn://pcm/*",         "lfn://pcm/run1/*", "lfn://*/run1/**",
      "lfn://ipcc/**",     "lfn://**",            "svc://datamover",  "svc://*",
      "lfn://pcm/run2/f1.esgn", "lfn://*/*/f1.esgn", "svc://vds"};
  return p;
}

inline const std::vector<std::string>& oracle_resources() {
  static const std::vector<std::string> r{
      "lfn://pcm",           "lfn://pcm/run1",       "lfn://pcm/run1/f1.esgn",
      "lfn://pcm/run2/f1.esgn", "lfn://ipcc/ar4/tas", "lfn://ccsm/run1/a/b",
      "lfn://ccsm",          "svc://datamover",      "svc://vds"};
  return r;
}

template <typename T>
const T& pick_one(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[rng() % v.size()];
}

inline security::GroupPolicy random_policy(std::mt19937_64& rng) {
  security::GroupPolicy p{pick_one(rng, oracle_groups()), pick_one(rng, oracle_patterns()), {}};
  for (auto a : {security::Action::read, security::Action::publish, security::Action::stage,
                 security::Action::move}) {
    if (rng() % 2) p.actions.insert(a);
  }
  if (p.actions.empty()) p.actions.insert(security::Action::read);
  return p;
}

inline security::Action random_action(std::mt19937_64& rng) {
  return static_cast<security::Action>(rng() % 4);
}

}  // namespace esg::testing
