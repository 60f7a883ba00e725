#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "esg/catalog/catalog.hpp"
#include "esg/datamover/datamover.hpp"
#include "esg/monitor/monitor.hpp"
#include "esg/portal/profile.hpp"
#include "esg/portal/selection.hpp"
#include "esg/replica/replica_service.hpp"
#include "esg/security/authority.hpp"
#include "esg/storage/storage.hpp"
#include "esg/virtualdata/service.hpp"

namespace esg::portal {

inline constexpr std::string_view kServiceGroup = "esg-services";

enum class JobKind { selection, fetch };
enum class JobState { queued, running, ready, failed };

std::string_view to_string(JobKind k);
std::string_view to_string(JobState s);
std::optional<JobKind> parse_job_kind(std::string_view s);
std::optional<JobState> parse_job_state(std::string_view s);

/// Asynchronous unit of work run on behalf of a user.
struct Job {
  std::string job_id;
  JobKind kind = JobKind::selection;
  JobState state = JobState::queued;
  std::string owner;
  std::vector<std::string> owner_groups;
  security::CredentialKind owner_kind = security::CredentialKind::moderate;
  /// Selection: the request plus its compiled constraint. Fetch: lfns.
  Json request;
  std::string result_pfn;
  std::string digest;
  std::uint64_t bytes = 0;
  std::vector<std::string> pull_urls;
  std::string error;
  Millis submitted_at = 0;
  Millis finished_at = 0;
};

Json to_json(const Job& job);
Job job_from_json(const Json& j);

struct Download {
  Bytes bytes;
  std::string digest;
};

/// All services of one deployment wired together, with the portal's own
/// operations on top: served-prefix filtering, boundary authorization,
/// selections and the job queue.
class Portal {
 public:
  /// Uses the wall clock when none is given. Workers start immediately
  /// unless start_workers is false.
  explicit Portal(Profile profile, const Clock* clock = nullptr, bool start_workers = true);
  ~Portal();

  Portal(const Portal&) = delete;
  Portal& operator=(const Portal&) = delete;

  const Profile& profile() const { return profile_; }
  const Clock& clock() const { return clock_; }
  security::Authority& authority() { return *authority_; }
  catalog::Catalog& catalog() { return *catalog_; }
  replica::ReplicaService& replicas() { return *replicas_; }
  storage::Storage& storage() { return *storage_; }
  datamover::DataMover& datamover() { return *datamover_; }
  virtualdata::VirtualDataService& vds() { return *vds_; }
  monitor::Monitor& monitor() { return monitor_; }

  /// Account created at first start; its passphrase lives in admin.json.
  const std::string& admin_user() const { return profile_.admin_user; }
  std::string service_token();

  /// Throws not_found for names this deployment does not serve.
  void require_served(std::string_view lfn) const;
  bool serves(std::string_view lfn) const { return profile_.serves(lfn); }
  /// Boundary read check; a no-op when disabled in the profile.
  void check_read(std::string_view lfn, std::string_view token);
  void require_service(const std::string& service) const;

  std::vector<catalog::MetadataRecord> search(const catalog::SearchQuery& query) const;
  std::vector<catalog::BrowseNode> browse(std::string_view path) const;
  std::string thredds(std::string_view prefix);
  std::optional<catalog::MetadataRecord> record(std::string_view id_or_name) const;

  /// Synchronous constrained read of a dataset.
  virtualdata::Materialized data(const std::string& name, std::optional<std::string> constraint,
                                 std::string_view token);

  gridfmt::Constraint compile(const SelectionRequest& s, std::string_view token);
  std::string submit_selection(const SelectionRequest& s, std::string_view token);
  /// Casual fetch through the portal cache, run as a job.
  std::string submit_fetch(const std::vector<std::string>& lfns, std::string_view token);
  /// Frequent fetch straight into dest, run synchronously.
  datamover::Report fetch_direct(const std::vector<std::string>& lfns, const std::filesystem::path& dest,
                                 std::string_view token);

  Job job(const std::string& job_id, std::string_view token) const;
  std::vector<Job> jobs(std::string_view token) const;
  Download download(const std::string& job_id, std::string_view token) const;
  /// Blocks until no job is queued or running, or the timeout passes.
  bool wait_idle(std::chrono::milliseconds timeout) const;

  datamover::Report move(const std::string& src, const std::string& dst, std::string_view token,
                         std::optional<datamover::Policy> policy);
  datamover::Report resume_move(const std::string& request_id, std::string_view token);
  std::optional<datamover::TransferRequest> move_request(const std::string& request_id,
                                                         std::string_view token) const;

  /// Heartbeats every in-process service into the monitor.
  void beat();

  void start_workers();
  void stop_workers();

 private:
  security::Token require_token(std::string_view token) const;
  bool visible(const Job& job, std::string_view token) const;
  std::string delegated_token(const Job& job);
  std::string new_job(Job job);
  void record_job(const Job& job);
  void worker();
  void run(Job job);
  datamover::ReplicaLookup replica_lookup();

  Profile profile_;
  std::unique_ptr<SystemClock> own_clock_;
  const Clock& clock_;
  std::unique_ptr<security::Authority> authority_;
  std::unique_ptr<catalog::Catalog> catalog_;
  std::unique_ptr<replica::ReplicaService> replicas_;
  std::unique_ptr<storage::Storage> storage_;
  std::unique_ptr<datamover::DataMover> datamover_;
  std::unique_ptr<virtualdata::VirtualDataService> vds_;
  monitor::Monitor monitor_;

  std::mutex token_mutex_;
  std::string service_token_;
  Millis service_token_expiry_ = 0;

  std::mutex move_mutex_;

  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable jobs_cv_;
  std::map<std::string, Job> jobs_;
  std::deque<std::string> queue_;
  std::size_t running_ = 0;
  std::uint64_t next_job_ = 1;
  bool stopping_ = false;
  RecordLog job_log_;
  std::vector<std::thread> workers_;
  std::thread heartbeat_;
};

}  // namespace esg::portal
