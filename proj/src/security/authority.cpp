#include "esg/security/authority.hpp"

#include <algorithm>
#include <mutex>

#include "esg/common/error.hpp"
#include "esg/common/names.hpp"

namespace esg::security {
namespace {

constexpr std::string_view kAuthFailed = "authentication failed";

bool valid_email(std::string_view email) {
  auto at = email.find('@');
  if (at == std::string_view::npos || at == 0 || email.find('@', at + 1) != std::string_view::npos) {
    return false;
  }
  auto domain = email.substr(at + 1);
  auto dot = domain.find('.');
  if (dot == std::string_view::npos || dot == 0 || domain.back() == '.') return false;
  return std::none_of(email.begin(), email.end(),
                      [](char c) { return c <= ' ' || c == ',' || c == '"'; });
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Json token_payload(const Token& t) {
  Json j;
  j["sub"] = t.subject;
  j["groups"] = t.groups;
  j["kind"] = to_string(t.kind);
  j["iat"] = t.issued_at;
  j["exp"] = t.expires_at;
  return j;
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool match_segments(const std::vector<std::string>& pat, std::size_t pi,
                    const std::vector<std::string>& res, std::size_t ri) {
  if (pi == pat.size()) return ri == res.size();
  if (pat[pi] == "**") return true;
  if (ri == res.size()) return false;
  if (pat[pi] != "*" && pat[pi] != res[ri]) return false;
  return match_segments(pat, pi + 1, res, ri + 1);
}

std::string_view scheme_of(std::string_view s) {
  if (s.starts_with(kLfnScheme)) return kLfnScheme;
  if (s.starts_with(kServiceScheme)) return kServiceScheme;
  return {};
}

bool valid_resource(std::string_view resource) {
  auto scheme = scheme_of(resource);
  if (scheme.empty()) return false;
  auto rest = resource.substr(scheme.size());
  if (rest.empty()) return false;
  for (const auto& seg : split_path(rest)) {
    if (!valid_segment(seg)) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(CredentialKind kind) {
  return kind == CredentialKind::full ? "full" : "moderate";
}

std::string_view to_string(Action action) {
  switch (action) {
    case Action::read: return "read";
    case Action::publish: return "publish";
    case Action::stage: return "stage";
    case Action::move: return "move";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view text) {
  for (auto a : {Action::read, Action::publish, Action::stage, Action::move}) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

std::optional<CredentialKind> parse_kind(std::string_view text) {
  if (text == "moderate") return CredentialKind::moderate;
  if (text == "full") return CredentialKind::full;
  return std::nullopt;
}

std::string_view to_string(RegistrationStatus status) {
  switch (status) {
    case RegistrationStatus::pending: return "PENDING";
    case RegistrationStatus::accepted: return "ACCEPTED";
    case RegistrationStatus::rejected: return "REJECTED";
  }
  return "?";
}

bool Token::in_group(std::string_view group) const {
  return std::binary_search(groups.begin(), groups.end(), group);
}

bool valid_pattern(std::string_view pattern) {
  auto scheme = scheme_of(pattern);
  if (scheme.empty()) return false;
  auto rest = pattern.substr(scheme.size());
  if (rest.empty()) return false;
  auto segs = split_path(rest);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i] == "**") {
      if (i + 1 != segs.size()) return false;
    } else if (segs[i] != "*" && !valid_segment(segs[i])) {
      return false;
    }
  }
  return true;
}

bool pattern_matches(std::string_view pattern, std::string_view resource) {
  auto scheme = scheme_of(pattern);
  if (scheme.empty() || scheme_of(resource) != scheme) return false;
  return match_segments(split_path(pattern.substr(scheme.size())), 0,
                        split_path(resource.substr(scheme.size())), 0);
}

Authority::Authority(const Clock& clock, Options options)
    : clock_(clock), options_(std::move(options)) {
  if (options_.service_key.empty()) {
    throw Error(Errc::invalid_argument, "service key must not be empty");
  }
  if (!options_.state_dir.empty()) {
    auto state = options_.state_dir / "state.log";
    RecordLog::replay_file(state, [this](const Json& e) { apply(e); });
    auto audit = options_.state_dir / "audit.log";
    RecordLog::replay_file(audit, [this](const Json& e) {
      audit_.push_back({e.at("at").get<Millis>(), e.at("subject").get<std::string>(),
                        e.at("resource").get<std::string>(),
                        *parse_action(e.at("action").get<std::string>()),
                        e.at("allowed").get<bool>(), e.at("reason").get<std::string>()});
    });
    state_log_.open(state);
    audit_log_.open(audit);
  }
}

void Authority::record(const Json& event) {
  apply(event);
  state_log_.append(event);
}

void Authority::apply(const Json& e) {
  auto op = e.at("op").get<std::string>();
  if (op == "register") {
    RegistrationRequest r;
    r.id = e.at("id").get<std::string>();
    r.user = {e.at("name").get<std::string>(), e.at("email").get<std::string>(),
              e.at("institution").get<std::string>(),
              e.at("groups").get<std::vector<std::string>>()};
    requests_[r.id] = r;
    next_request_ = std::max<std::uint64_t>(next_request_, std::stoull(r.id.substr(4)) + 1);
  } else if (op == "review") {
    requests_.at(e.at("id").get<std::string>()).status =
        e.at("accept").get<bool>() ? RegistrationStatus::accepted
                                   : RegistrationStatus::rejected;
  } else if (op == "account") {
    auto sealed = base64_decode(e.at("credential").get<std::string>());
    if (!sealed) throw Error(Errc::corrupt, "corrupt credential record");
    accounts_[e.at("user").get<std::string>()] = {
        e.at("groups").get<std::vector<std::string>>(), *sealed};
  } else if (op == "policy") {
    GroupPolicy p{e.at("group").get<std::string>(), e.at("pattern").get<std::string>(), {}};
    for (const auto& a : e.at("actions")) p.actions.insert(*parse_action(a.get<std::string>()));
    policies_.insert(p);
  }
}

RegistrationRequest Authority::register_user(const UserInfo& info) {
  if (!valid_email(info.email)) {
    throw Error(Errc::invalid_argument, "invalid email address: " + info.email);
  }
  std::unique_lock lock(mutex_);
  auto email = lowercase(info.email);
  for (const auto& [id, r] : requests_) {
    if (lowercase(r.user.email) == email && r.status != RegistrationStatus::rejected) {
      throw Error(Errc::already_exists, "registration already exists for " + info.email);
    }
  }
  Json e;
  e["op"] = "register";
  e["id"] = "reg-" + std::to_string(next_request_);
  e["name"] = info.name;
  e["email"] = info.email;
  e["institution"] = info.institution;
  e["groups"] = sorted_unique(info.requested_groups);
  record(e);
  return requests_.at(e["id"].get<std::string>());
}

ReviewOutcome Authority::review(std::string_view request_id, bool accept,
                                std::string_view admin_token,
                                std::optional<std::vector<std::string>> groups) {
  require_admin(admin_token);
  std::unique_lock lock(mutex_);
  auto it = requests_.find(std::string(request_id));
  if (it == requests_.end()) {
    throw Error(Errc::not_found, "unknown registration request " + std::string(request_id));
  }
  if (it->second.status != RegistrationStatus::pending) {
    throw Error(Errc::failed_precondition,
                "registration " + it->second.id + " is not pending (" +
                    std::string(to_string(it->second.status)) + ")");
  }
  Json e;
  e["op"] = "review";
  e["id"] = it->second.id;
  e["accept"] = accept;
  record(e);
  ReviewOutcome out{it->second.status, it->second.user.email, std::nullopt};
  if (accept) {
    accounts_[out.user_id].groups =
        sorted_unique(groups ? *groups : it->second.user.requested_groups);
    out.passphrase = deposit_credential(out.user_id, CredentialKind::moderate);
  }
  return out;
}

std::vector<RegistrationRequest> Authority::pending(std::string_view admin_token) const {
  require_admin(admin_token);
  std::shared_lock lock(mutex_);
  std::vector<RegistrationRequest> out;
  for (const auto& [id, r] : requests_) {
    if (r.status == RegistrationStatus::pending) out.push_back(r);
  }
  return out;
}

std::optional<RegistrationRequest> Authority::request(std::string_view request_id) const {
  std::shared_lock lock(mutex_);
  auto it = requests_.find(std::string(request_id));
  if (it == requests_.end()) return std::nullopt;
  return it->second;
}

// Caller holds the unique lock and has set the account's groups.
std::string Authority::deposit_credential(const std::string& user_id, CredentialKind kind) {
  auto passphrase = to_hex(random_bytes(12));
  Json credential;
  credential["subject"] = user_id;
  credential["kind"] = to_string(kind);
  credential["not_before"] = clock_.now();
  credential["not_after"] = clock_.now() + options_.credential_validity;
  credential["key"] = to_hex(random_bytes(16));
  auto sealed = seal_with_passphrase(passphrase, as_bytes(credential.dump()));
  Json e;
  e["op"] = "account";
  e["user"] = user_id;
  e["groups"] = accounts_[user_id].groups;
  e["credential"] = base64_encode(sealed);
  record(e);
  return passphrase;
}

std::string Authority::login(std::string_view user_id, std::string_view passphrase) {
  std::shared_lock lock(mutex_);
  auto it = accounts_.find(std::string(user_id));
  if (it == accounts_.end()) throw Error(Errc::denied, std::string(kAuthFailed));
  auto opened = open_with_passphrase(passphrase, it->second.sealed_credential);
  if (!opened) throw Error(Errc::denied, std::string(kAuthFailed));
  auto credential = Json::parse(opened->begin(), opened->end());
  auto now = clock_.now();
  if (now < credential.at("not_before").get<Millis>() ||
      now >= credential.at("not_after").get<Millis>()) {
    throw Error(Errc::denied, "credential expired");
  }
  Token t{std::string(user_id), it->second.groups,
          *parse_kind(credential.at("kind").get<std::string>()), now,
          now + options_.token_ttl};
  return sign(t);
}

std::string Authority::issue_full_credential(std::string_view user_id,
                                             std::string_view admin_token) {
  require_admin(admin_token);
  std::unique_lock lock(mutex_);
  if (!accounts_.contains(std::string(user_id))) {
    throw Error(Errc::not_found, "unknown user " + std::string(user_id));
  }
  return deposit_credential(std::string(user_id), CredentialKind::full);
}

std::string Authority::sign(const Token& token) const {
  auto payload = token_payload(token).dump();
  auto mac = hmac_sha256(options_.service_key, as_bytes(payload));
  return base64_encode(as_bytes(payload)) + "." + base64_encode(mac);
}

std::optional<Token> Authority::verify(std::string_view wire) const {
  auto dot = wire.find('.');
  if (dot == std::string_view::npos || wire.find('.', dot + 1) != std::string_view::npos) {
    return std::nullopt;
  }
  auto payload = base64_decode(wire.substr(0, dot));
  auto mac = base64_decode(wire.substr(dot + 1));
  if (!payload || !mac) return std::nullopt;
  auto expected = hmac_sha256(options_.service_key, *payload);
  if (!constant_time_equal(expected, *mac)) return std::nullopt;

  auto j = Json::parse(payload->begin(), payload->end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    Token t;
    t.subject = j.at("sub").get<std::string>();
    t.groups = j.at("groups").get<std::vector<std::string>>();
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) return std::nullopt;
    t.kind = *kind;
    t.issued_at = j.at("iat").get<Millis>();
    t.expires_at = j.at("exp").get<Millis>();
    if (token_payload(t).dump() != std::string(payload->begin(), payload->end())) {
      return std::nullopt;
    }
    if (t.expires_at <= t.issued_at || clock_.now() >= t.expires_at) return std::nullopt;
    if (!std::is_sorted(t.groups.begin(), t.groups.end())) return std::nullopt;
    return t;
  } catch (const Json::exception&) {
    return std::nullopt;
  }
}

Decision Authority::authorize(std::string_view wire, std::string_view resource,
                              Action action) {
  Decision d;
  auto token = verify(wire);
  std::string subject = token ? token->subject : "";
  if (!token) {
    d.reason = "invalid token";
  } else if (!valid_resource(resource)) {
    d.reason = "malformed resource";
  } else {
    bool service = resource.starts_with(kServiceScheme);
    std::shared_lock lock(mutex_);
    const GroupPolicy* match = nullptr;
    for (const auto& p : policies_) {
      if (p.actions.contains(action) && token->in_group(p.group) &&
          pattern_matches(p.pattern, resource)) {
        match = &p;
        break;
      }
    }
    if (match == nullptr) {
      d.reason = "no matching policy";
    } else if (service && token->kind != CredentialKind::full) {
      // Service-oriented access (e.g. the data mover) is for holders of
      // full credentials; moderate ones reach data through file access.
      d.reason = "service requires full credential";
    } else {
      d.allowed = true;
      d.reason = "allowed by " + match->group + " on " + match->pattern;
    }
  }

  AuditRecord rec{clock_.now(), subject, std::string(resource), action, d.allowed, d.reason};
  Json e;
  e["at"] = rec.at;
  e["subject"] = rec.subject;
  e["resource"] = rec.resource;
  e["action"] = to_string(action);
  e["allowed"] = rec.allowed;
  e["reason"] = rec.reason;
  std::unique_lock lock(mutex_);
  audit_.push_back(std::move(rec));
  audit_log_.append(e);
  return d;
}

void Authority::add_policy(const GroupPolicy& policy, std::string_view admin_token) {
  require_admin(admin_token);
  if (policy.group.empty() || !valid_pattern(policy.pattern) || policy.actions.empty()) {
    throw Error(Errc::invalid_argument, "malformed policy for pattern " + policy.pattern);
  }
  std::unique_lock lock(mutex_);
  if (policies_.contains(policy)) return;
  Json e;
  e["op"] = "policy";
  e["group"] = policy.group;
  e["pattern"] = policy.pattern;
  e["actions"] = Json::array();
  for (auto a : policy.actions) e["actions"].push_back(to_string(a));
  record(e);
}

std::vector<GroupPolicy> Authority::policies() const {
  std::shared_lock lock(mutex_);
  return {policies_.begin(), policies_.end()};
}

std::string Authority::bootstrap_user(const std::string& user_id,
                                      std::vector<std::string> groups,
                                      CredentialKind kind) {
  std::unique_lock lock(mutex_);
  accounts_[user_id].groups = sorted_unique(std::move(groups));
  return deposit_credential(user_id, kind);
}

std::string Authority::mint_token(const std::string& subject,
                                  std::vector<std::string> groups, CredentialKind kind) {
  auto now = clock_.now();
  return sign({subject, sorted_unique(std::move(groups)), kind, now, now + options_.token_ttl});
}

bool Authority::is_admin(std::string_view wire) const {
  auto t = verify(wire);
  return t && t->in_group(kAdminGroup);
}

void Authority::require_admin(std::string_view wire) const {
  if (!is_admin(wire)) throw Error(Errc::denied, "administrator token required");
}

std::vector<AuditRecord> Authority::audit_log() const {
  std::shared_lock lock(mutex_);
  return audit_;
}

std::size_t Authority::audit_count() const {
  std::shared_lock lock(mutex_);
  return audit_.size();
}

}  // namespace esg::security
