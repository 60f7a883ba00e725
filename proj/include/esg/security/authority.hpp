#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "esg/common/clock.hpp"
#include "esg/common/crypto.hpp"
#include "esg/common/record_log.hpp"

namespace esg::security {

inline constexpr std::string_view kAdminGroup = "esg-admin";

enum class CredentialKind { moderate, full };
enum class Action { read, publish, stage, move };

std::string_view to_string(CredentialKind kind);
std::string_view to_string(Action action);
std::optional<Action> parse_action(std::string_view text);
std::optional<CredentialKind> parse_kind(std::string_view text);

struct UserInfo {
  std::string name;
  std::string email;
  std::string institution;
  std::vector<std::string> requested_groups;
};

enum class RegistrationStatus { pending, accepted, rejected };
std::string_view to_string(RegistrationStatus status);

struct RegistrationRequest {
  std::string id;
  UserInfo user;
  RegistrationStatus status = RegistrationStatus::pending;
};

struct ReviewOutcome {
  RegistrationStatus status;
  std::string user_id;
  /// Present only on acceptance; this is the one time it is revealed.
  std::optional<std::string> passphrase;
};

/// Sign-on artifact. The wire form is base64(payload) "." base64(hmac).
struct Token {
  std::string subject;
  std::vector<std::string> groups;  // sorted
  CredentialKind kind = CredentialKind::moderate;
  Millis issued_at = 0;
  Millis expires_at = 0;

  bool in_group(std::string_view group) const;
};

/// Resource patterns: "lfn://pcm/**" or "svc://datamover". "*" matches one
/// path segment, a final "**" matches any (possibly empty) suffix.
struct GroupPolicy {
  std::string group;
  std::string pattern;
  std::set<Action> actions;

  auto operator<=>(const GroupPolicy&) const = default;
};

bool valid_pattern(std::string_view pattern);
bool pattern_matches(std::string_view pattern, std::string_view resource);

struct Decision {
  bool allowed = false;
  std::string reason;

  explicit operator bool() const { return allowed; }
};

struct AuditRecord {
  Millis at;
  std::string subject;
  std::string resource;
  Action action;
  bool allowed;
  std::string reason;
};

/// Registration, credential store, token issuance and group-based
/// authorization for one deployment.
class Authority {
 public:
  struct Options {
    Bytes service_key;
    Millis token_ttl = 12 * kHour;
    Millis credential_validity = 365 * 24 * kHour;
    /// Holds state.log and audit.log; empty keeps everything in memory.
    std::filesystem::path state_dir;
  };

  Authority(const Clock& clock, Options options);

  RegistrationRequest register_user(const UserInfo& info);
  /// Groups default to the requested ones; the admin may override them.
  ReviewOutcome review(std::string_view request_id, bool accept,
                       std::string_view admin_token,
                       std::optional<std::vector<std::string>> groups = std::nullopt);
  std::vector<RegistrationRequest> pending(std::string_view admin_token) const;
  std::optional<RegistrationRequest> request(std::string_view request_id) const;

  /// Returns a wire token. Bad passphrase, unknown user and unaccepted
  /// registration all fail with the same message.
  std::string login(std::string_view user_id, std::string_view passphrase);

  /// Replaces the user's credential with a full one; returns its passphrase.
  std::string issue_full_credential(std::string_view user_id,
                                    std::string_view admin_token);

  std::optional<Token> verify(std::string_view wire) const;
  Decision authorize(std::string_view wire, std::string_view resource, Action action);
  void add_policy(const GroupPolicy& policy, std::string_view admin_token);
  std::vector<GroupPolicy> policies() const;

  /// In-process provisioning for deployment setup: creates an accepted
  /// account with a credential and returns its passphrase.
  std::string bootstrap_user(const std::string& user_id,
                             std::vector<std::string> groups, CredentialKind kind);
  /// Signs a token for an internal service principal.
  std::string mint_token(const std::string& subject, std::vector<std::string> groups,
                         CredentialKind kind);

  std::vector<AuditRecord> audit_log() const;
  std::size_t audit_count() const;

  const Clock& clock() const { return clock_; }

 private:
  struct Account {
    std::vector<std::string> groups;
    Bytes sealed_credential;
  };

  bool is_admin(std::string_view wire) const;
  void require_admin(std::string_view wire) const;
  std::string sign(const Token& token) const;
  std::string deposit_credential(const std::string& user_id, CredentialKind kind);
  void apply(const Json& event);
  void record(const Json& event);

  const Clock& clock_;
  Options options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, RegistrationRequest> requests_;
  std::map<std::string, Account> accounts_;
  std::set<GroupPolicy> policies_;
  std::vector<AuditRecord> audit_;
  std::uint64_t next_request_ = 1;
  RecordLog state_log_;
  RecordLog audit_log_;
};

}  // namespace esg::security
