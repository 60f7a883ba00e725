#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "esg/common/clock.hpp"
#include "esg/common/record_log.hpp"
#include "esg/monitor/monitor.hpp"
#include "esg/security/authority.hpp"
#include "esg/storage/storage.hpp"

namespace esg::datamover {

enum class RequestState { planned, running, completed, partial_failed, resumable };
enum class JobState { pending, staging, staged, transferring, transferred, archiving, done, failed };
enum class FetchMode { casual, frequent };

std::string_view to_string(RequestState s);
std::string_view to_string(JobState s);
std::string_view to_string(FetchMode m);
std::optional<RequestState> parse_request_state(std::string_view s);
std::optional<JobState> parse_job_state(std::string_view s);
std::optional<FetchMode> parse_fetch_mode(std::string_view s);

struct Policy {
  int max_concurrent_files = 4;
  int max_retries = 8;
  Millis backoff_base_ms = 100;
  double backoff_factor = 2.0;
  /// Fraction of each delay added as seeded jitter; 0 disables it.
  double jitter = 0.0;
  std::uint64_t jitter_seed = 0;
};

/// Delay before retrying after failed attempt number `attempt` (1-based).
Millis backoff_delay(const Policy& p, int attempt, std::string_view key = {});

struct FileJob {
  std::string path;  // relative to the request source
  std::uint64_t size = 0;
  std::string digest;
  JobState state = JobState::pending;
  int attempts = 0;
  std::string last_error;
  std::string source;       // file pfn
  std::string destination;  // file pfn or local filesystem path
};

struct TransferRequest {
  std::string request_id;
  std::string kind;  // "copy" or "fetch"
  std::string src;
  std::string dst;
  std::string owner;
  Policy policy;
  RequestState state = RequestState::planned;
  std::vector<std::string> directories;
  std::vector<FileJob> jobs;
};

/// Totally ordered simulation trace. "state" events carry the new job state
/// in `state`; a successful copy also produces one "transfer" event.
struct TraceEvent {
  Millis at = 0;
  std::string path;
  std::string kind;
  std::string state;
  int attempt = 0;
  std::string detail;
};

struct FileOutcome {
  std::string path;
  JobState state = JobState::pending;
  int attempts = 0;
  std::uint64_t bytes = 0;
  std::string last_error;
};

struct Report {
  std::string request_id;
  RequestState state = RequestState::planned;
  std::vector<FileOutcome> files;
  std::uint64_t bytes = 0;
  Millis started_at = 0;
  Millis finished_at = 0;
  std::vector<TraceEvent> trace;
  /// Casual fetches: where each file can be pulled from.
  std::vector<std::string> pull_urls;
};

/// Highest number of jobs simultaneously in STAGING, TRANSFERRING or
/// ARCHIVING according to a trace.
int max_active(const std::vector<TraceEvent>& trace);

/// Replica locations for a logical name, preferred first.
using ReplicaLookup = std::function<std::vector<std::string>(const std::string& lfn)>;

class DataMover {
 public:
  struct Options {
    std::filesystem::path journal_dir;
    Policy default_policy;
    std::string portal_cache_site = "portal";
    /// Test hook: the coordinator dies right after this many jobs reach DONE
    /// within one execute call.
    std::optional<int> crash_after_done;
  };

  DataMover(storage::Storage& storage, security::Authority& authority, Options options,
            monitor::Monitor* monitor = nullptr);

  /// Enumerates src recursively and journals the request. Requires move on
  /// svc://datamover.
  TransferRequest plan(const std::string& src_dir, const std::string& dst_dir, std::string_view token,
                       std::optional<Policy> policy = std::nullopt);
  Report execute(const std::string& request_id);
  /// Continues a crashed or partially failed request from its journal.
  Report resume(const std::string& request_id);

  /// Casual mode lands files in the portal cache for pulling; frequent mode
  /// copies straight to `dest` (a local directory) and needs a full token.
  Report fetch_lite(const std::vector<std::string>& lfns, FetchMode mode, const std::filesystem::path& dest,
                    std::string_view token, const ReplicaLookup& lookup);

  std::optional<TransferRequest> request(const std::string& request_id) const;
  std::vector<std::string> request_ids() const;
  /// Everything this instance traced for the request, across runs.
  std::vector<TraceEvent> trace(const std::string& request_id) const;

 private:
  struct Active;
  struct Run;

  std::string next_request_id();
  void load_journals();
  TransferRequest replay(const std::filesystem::path& journal);
  RecordLog& journal(const std::string& request_id);
  void journal_job(Run& run, FileJob& job, JobState state, Millis at, const std::string& error = {});
  void journal_request(Run& run, RequestState state, Millis at);
  Report drive(const std::string& request_id, bool resuming);
  void reconcile(Run& run);
  void start_step(Run& run, Active& a);
  bool finish_step(Run& run, Active& a);
  void cleanup(Run& run, Active& a);
  bool destination_matches(const FileJob& job) const;
  std::string landing_pfn(const FileJob& job) const;
  void trace_event(Run& run, TraceEvent e);
  Report report_for(const TransferRequest& req) const;

  storage::Storage& storage_;
  security::Authority& authority_;
  Options options_;
  monitor::Monitor* monitor_;
  mutable std::mutex mutex_;
  std::map<std::string, TransferRequest> requests_;
  std::map<std::string, std::unique_ptr<RecordLog>> journals_;
  std::map<std::string, std::vector<TraceEvent>> traces_;
  std::map<std::string, Millis> clocks_;  // simulated time reached per request
  std::set<std::string> running_;
  std::uint64_t next_id_ = 1;
};

}  // namespace esg::datamover
