#include "esg/datamover/datamover.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "esg/common/error.hpp"

namespace fs = std::filesystem;

namespace esg::datamover {
namespace {

constexpr std::array kRequestStates{"PLANNED", "RUNNING", "COMPLETED", "PARTIAL_FAILED", "RESUMABLE"};
constexpr std::array kJobStates{"PENDING",     "STAGING",   "STAGED", "TRANSFERRING",
                                "TRANSFERRED", "ARCHIVING", "DONE",   "FAILED"};

bool terminal(JobState s) { return s == JobState::done || s == JobState::failed; }

bool in_flight(std::string_view state) {
  return state == "STAGING" || state == "TRANSFERRING" || state == "ARCHIVING";
}

Json policy_json(const Policy& p) {
  return Json{{"max_concurrent_files", p.max_concurrent_files},
              {"max_retries", p.max_retries},
              {"backoff_base_ms", p.backoff_base_ms},
              {"backoff_factor", p.backoff_factor},
              {"jitter", p.jitter},
              {"jitter_seed", p.jitter_seed}};
}

Policy policy_from_json(const Json& j) {
  Policy p;
  p.max_concurrent_files = j.at("max_concurrent_files").get<int>();
  p.max_retries = j.at("max_retries").get<int>();
  p.backoff_base_ms = j.at("backoff_base_ms").get<Millis>();
  p.backoff_factor = j.at("backoff_factor").get<double>();
  p.jitter = j.value("jitter", 0.0);
  p.jitter_seed = j.value("jitter_seed", std::uint64_t{0});
  return p;
}

void validate(const Policy& p) {
  if (p.max_concurrent_files < 1 || p.max_retries < 0 || p.backoff_base_ms < 0 || p.backoff_factor < 1.0 ||
      p.jitter < 0.0) {
    throw Error(Errc::invalid_argument, "invalid transfer policy");
  }
}

bool is_pfn(const std::string& s) { return s.starts_with(kSiteScheme); }

std::string join(const std::string& dir_pfn, const std::string& rel) {
  if (rel.empty()) return dir_pfn;
  return dir_pfn.ends_with('/') ? dir_pfn + rel : dir_pfn + "/" + rel;
}

std::string local_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  Bytes bytes(std::istreambuf_iterator<char>(in), {});
  return to_hex(sha256(bytes));
}

}  // namespace

std::string_view to_string(RequestState s) { return kRequestStates[static_cast<std::size_t>(s)]; }
std::string_view to_string(JobState s) { return kJobStates[static_cast<std::size_t>(s)]; }
std::string_view to_string(FetchMode m) { return m == FetchMode::casual ? "casual" : "frequent"; }

std::optional<RequestState> parse_request_state(std::string_view s) {
  for (std::size_t i = 0; i < kRequestStates.size(); ++i) {
    if (s == kRequestStates[i]) return static_cast<RequestState>(i);
  }
  return std::nullopt;
}

std::optional<JobState> parse_job_state(std::string_view s) {
  for (std::size_t i = 0; i < kJobStates.size(); ++i) {
    if (s == kJobStates[i]) return static_cast<JobState>(i);
  }
  return std::nullopt;
}

std::optional<FetchMode> parse_fetch_mode(std::string_view s) {
  if (s == "casual") return FetchMode::casual;
  if (s == "frequent") return FetchMode::frequent;
  return std::nullopt;
}

Millis backoff_delay(const Policy& p, int attempt, std::string_view key) {
  double d = static_cast<double>(p.backoff_base_ms) * std::pow(p.backoff_factor, std::max(attempt - 1, 0));
  if (p.jitter > 0.0) d += d * p.jitter * storage::failure_draw(p.jitter_seed, key, static_cast<std::uint64_t>(attempt));
  return std::llround(d);
}

int max_active(const std::vector<TraceEvent>& trace) {
  std::map<std::string, std::string> state;
  int active = 0;
  int peak = 0;
  for (const auto& e : trace) {
    if (e.kind != "state") continue;
    auto& cur = state[e.path];
    active += (in_flight(e.state) ? 1 : 0) - (in_flight(cur) ? 1 : 0);
    cur = e.state;
    peak = std::max(peak, active);
  }
  return peak;
}

struct DataMover::Active {
  std::size_t index = 0;
  Millis next_at = 0;
  bool waiting = true;  // next wake-up starts a step rather than finishing one
  std::string reservation;
};

struct DataMover::Run {
  TransferRequest* req = nullptr;
  RecordLog* log = nullptr;
  Millis now = 0;
  int done_this_run = 0;
  std::vector<TraceEvent> trace;
};

DataMover::DataMover(storage::Storage& storage, security::Authority& authority, Options options,
                     monitor::Monitor* monitor)
    : storage_(storage), authority_(authority), options_(std::move(options)), monitor_(monitor) {
  validate(options_.default_policy);
  if (!options_.journal_dir.empty()) {
    fs::create_directories(options_.journal_dir);
    load_journals();
  }
}

void DataMover::load_journals() {
  std::vector<fs::path> logs;
  for (const auto& e : fs::directory_iterator(options_.journal_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".log") logs.push_back(e.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) {
    auto req = replay(path);
    // A request still marked RUNNING in its journal lost its coordinator.
    if (req.state == RequestState::running) req.state = RequestState::resumable;
    auto id = req.request_id;
    if (id.starts_with("req-")) {
      try {
        next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(4)) + 1);
      } catch (const std::exception&) {
      }
    }
    requests_[id] = std::move(req);
  }
}

TransferRequest DataMover::replay(const fs::path& journal) {
  TransferRequest req;
  std::map<std::string, std::size_t> index;
  Millis last = 0;
  RecordLog::replay_file(journal, [&](const Json& e) {
    try {
      auto type = e.at("type").get<std::string>();
      last = std::max(last, e.value("at", Millis{0}));
      if (type == "request") {
        req.request_id = e.at("id").get<std::string>();
        req.kind = e.at("kind").get<std::string>();
        req.src = e.at("src").get<std::string>();
        req.dst = e.at("dst").get<std::string>();
        req.owner = e.at("owner").get<std::string>();
        req.policy = policy_from_json(e.at("policy"));
      } else if (type == "mkdir") {
        req.directories.push_back(e.at("path").get<std::string>());
      } else if (type == "job") {
        auto path = e.at("path").get<std::string>();
        auto [it, fresh] = index.try_emplace(path, req.jobs.size());
        if (fresh) {
          req.jobs.emplace_back();
          req.jobs.back().path = path;
        }
        auto& job = req.jobs[it->second];
        if (e.contains("size")) job.size = e.at("size").get<std::uint64_t>();
        if (e.contains("digest")) job.digest = e.at("digest").get<std::string>();
        if (e.contains("source")) job.source = e.at("source").get<std::string>();
        if (e.contains("destination")) job.destination = e.at("destination").get<std::string>();
        auto state = parse_job_state(e.at("state").get<std::string>());
        if (!state) throw Error(Errc::corrupt, "bad job state");
        job.state = *state;
        job.attempts = e.at("attempt").get<int>();
        job.last_error = e.value("error", std::string{});
      } else if (type == "request_state") {
        auto state = parse_request_state(e.at("state").get<std::string>());
        if (!state) throw Error(Errc::corrupt, "bad request state");
        req.state = *state;
      }
    } catch (const Json::exception& ex) {
      throw Error(Errc::corrupt, "bad journal entry in " + journal.string() + ": " + ex.what());
    }
  });
  if (req.request_id.empty()) throw Error(Errc::corrupt, "journal without request: " + journal.string());
  clocks_[req.request_id] = last;
  return req;
}

std::string DataMover::next_request_id() { return "req-" + std::to_string(next_id_++); }

RecordLog& DataMover::journal(const std::string& request_id) {
  auto& log = journals_[request_id];
  if (!log) {
    log = std::make_unique<RecordLog>();
    if (!options_.journal_dir.empty()) log->open(options_.journal_dir / (request_id + ".log"));
  }
  return *log;
}

void DataMover::trace_event(Run& run, TraceEvent e) {
  if (monitor_) {
    monitor_->publish({e.at, "datamover", e.kind == "state" ? e.state : e.kind,
                       run.req->request_id + " " + e.path});
  }
  run.trace.push_back(e);
  std::lock_guard lock(mutex_);
  traces_[run.req->request_id].push_back(std::move(e));
}

void DataMover::journal_job(Run& run, FileJob& job, JobState state, Millis at, const std::string& error) {
  Json e{{"type", "job"}, {"path", job.path}, {"state", to_string(state)}, {"attempt", job.attempts}, {"at", at}};
  if (!error.empty()) e["error"] = error;
  if (state == JobState::done) e["digest"] = job.digest;
  run.log->append(e);
  {
    std::lock_guard lock(mutex_);
    job.state = state;
    job.last_error = error;
  }
  trace_event(run, {at, job.path, "state", std::string(to_string(state)), job.attempts, error});
}

void DataMover::journal_request(Run& run, RequestState state, Millis at) {
  run.log->append(Json{{"type", "request_state"}, {"state", to_string(state)}, {"at", at}});
  std::lock_guard lock(mutex_);
  run.req->state = state;
}

TransferRequest DataMover::plan(const std::string& src_dir, const std::string& dst_dir, std::string_view token,
                                std::optional<Policy> policy) {
  auto decision = authority_.authorize(token, "svc://datamover", security::Action::move);
  if (!decision) throw Error(Errc::denied, decision.reason);
  auto owner = authority_.verify(token)->subject;
  auto src = require_pfn(src_dir, true);
  auto dst = require_pfn(dst_dir, true);
  auto pol = policy.value_or(options_.default_policy);
  validate(pol);
  if (!storage_.is_directory(src_dir)) throw Error(Errc::not_found, "unknown source " + src_dir);

  TransferRequest req;
  req.kind = "copy";
  req.src = src.str();
  req.dst = dst.str();
  req.owner = owner;
  req.policy = pol;
  std::set<std::string> dirs{""};
  std::string prefix = src.path.empty() ? "" : src.path + "/";
  for (const auto& f : storage_.list(src_dir)) {
    auto rel = require_pfn(f.pfn).path.substr(prefix.size());
    for (auto slash = rel.find('/'); slash != std::string::npos; slash = rel.find('/', slash + 1)) {
      dirs.insert(rel.substr(0, slash));
    }
    FileJob job;
    job.path = rel;
    job.size = f.size;
    job.digest = f.digest;
    job.source = f.pfn;
    job.destination = join(req.dst, rel);
    req.jobs.push_back(std::move(job));
  }

  std::lock_guard lock(mutex_);
  req.request_id = next_request_id();
  auto& log = journal(req.request_id);
  log.append(Json{{"type", "request"}, {"id", req.request_id}, {"kind", req.kind}, {"src", req.src},
                  {"dst", req.dst}, {"owner", owner}, {"policy", policy_json(pol)}, {"at", 0}});
  for (const auto& d : dirs) {
    auto pfn = join(req.dst, d);
    log.append(Json{{"type", "mkdir"}, {"path", pfn}, {"at", 0}});
    storage_.make_directory(pfn);
    req.directories.push_back(pfn);
  }
  for (const auto& job : req.jobs) {
    log.append(Json{{"type", "job"}, {"path", job.path}, {"size", job.size}, {"digest", job.digest},
                    {"source", job.source}, {"destination", job.destination},
                    {"state", to_string(JobState::pending)}, {"attempt", 0}, {"at", 0}});
  }
  log.append(Json{{"type", "request_state"}, {"state", to_string(RequestState::planned)}, {"at", 0}});
  requests_[req.request_id] = req;
  clocks_[req.request_id] = 0;
  return req;
}

std::string DataMover::landing_pfn(const FileJob& job) const {
  if (!is_pfn(job.destination)) return job.destination;
  auto p = require_pfn(job.destination);
  p.tier = Tier::disk;
  return p.str();
}

bool DataMover::destination_matches(const FileJob& job) const {
  if (!is_pfn(job.destination)) return local_digest(job.destination) == job.digest;
  auto st = storage_.stat(job.destination);
  return st && st->digest == job.digest;
}

void DataMover::reconcile(Run& run) {
  for (auto& job : run.req->jobs) {
    if (job.state == JobState::done) continue;
    if (job.state == JobState::failed) {
      job.attempts = 0;
      journal_job(run, job, JobState::pending, run.now);
    }
    if (destination_matches(job)) {
      journal_job(run, job, JobState::done, run.now, {});
      continue;
    }
    auto src = require_pfn(job.source);
    auto staged_copy = src;
    staged_copy.tier = Tier::disk;
    auto staged = storage_.stat(staged_copy.str());
    bool have_source_on_disk = src.tier == Tier::disk || (staged && staged->digest == job.digest);
    auto landed = is_pfn(job.destination) ? storage_.stat(landing_pfn(job)) : std::nullopt;
    bool have_landing = landed && landed->digest == job.digest;

    JobState target = JobState::pending;
    if ((job.state == JobState::transferred || job.state == JobState::archiving) && have_landing) {
      target = JobState::transferred;
    } else if (job.state != JobState::pending && job.state != JobState::staging && have_source_on_disk) {
      target = JobState::staged;
      if (src.tier == Tier::archive) storage_.pin(staged_copy.str());
    }
    if (target != job.state) journal_job(run, job, target, run.now, job.last_error);
  }
}

void DataMover::start_step(Run& run, Active& a) {
  auto& job = run.req->jobs[a.index];
  auto src = require_pfn(job.source);
  a.waiting = false;
  Millis latency = 0;
  if (job.state == JobState::pending && src.tier == Tier::disk) {
    journal_job(run, job, JobState::staged, run.now);
  }
  switch (job.state) {
    case JobState::pending:
      journal_job(run, job, JobState::staging, run.now);
      latency = storage_.stage_latency(src.site, job.size);
      break;
    case JobState::staged:
      journal_job(run, job, JobState::transferring, run.now);
      latency = storage_.transfer_latency(src.site, job.size);
      break;
    case JobState::transferred:
      journal_job(run, job, JobState::archiving, run.now);
      latency = storage_.stage_latency(require_pfn(job.destination).site, job.size);
      break;
    default:
      throw Error(Errc::failed_precondition, "job " + job.path + " cannot start from " +
                                                 std::string(to_string(job.state)));
  }
  a.next_at = run.now + latency;
}

void DataMover::cleanup(Run& run, Active& a) {
  auto& job = run.req->jobs[a.index];
  auto src = require_pfn(job.source);
  if (src.tier == Tier::archive) {
    auto staged = src;
    staged.tier = Tier::disk;
    try {
      storage_.unpin(staged.str());
      storage_.evict(staged.str());
    } catch (const Error&) {
      // Still pinned by someone else or already gone.
    }
  }
  if (!a.reservation.empty()) {
    try {
      storage_.release_reservation(a.reservation);
    } catch (const Error&) {
    }
    a.reservation.clear();
  }
  (void)run;
}

bool DataMover::finish_step(Run& run, Active& a) {
  auto& job = run.req->jobs[a.index];
  auto src = require_pfn(job.source);
  auto state = job.state;
  try {
    if (state == JobState::staging) {
      if (a.reservation.empty()) a.reservation = storage_.reserve_space(src.site, job.size).reservation_id;
      storage_.stage(src.site, src.path, a.reservation);
      journal_job(run, job, JobState::staged, run.now);
    } else if (state == JobState::transferring) {
      auto from = src;
      from.tier = Tier::disk;
      storage::TransferResult result;
      if (is_pfn(job.destination)) {
        result = storage_.transfer(from.str(), landing_pfn(job), job.digest);
      } else {
        result = storage_.transfer_to_local(from.str(), job.destination, job.digest);
      }
      trace_event(run, {run.now, job.path, "transfer", "", job.attempts, result.digest});
      journal_job(run, job, JobState::transferred, run.now);
      cleanup(run, a);
      if (!is_pfn(job.destination) || require_pfn(job.destination).tier == Tier::disk) {
        journal_job(run, job, JobState::done, run.now);
      }
    } else if (state == JobState::archiving) {
      auto dst = require_pfn(job.destination);
      storage_.archive_put(dst.site, dst.path);
      try {
        storage_.evict(landing_pfn(job));
      } catch (const Error&) {
      }
      journal_job(run, job, JobState::done, run.now);
    }
  } catch (const Error& e) {
    static const std::map<JobState, JobState> kRevert{{JobState::staging, JobState::pending},
                                                      {JobState::transferring, JobState::staged},
                                                      {JobState::archiving, JobState::transferred}};
    trace_event(run, {run.now, job.path, "failure", std::string(to_string(state)), job.attempts, e.what()});
    if (e.retryable() && job.attempts < run.req->policy.max_retries + 1) {
      journal_job(run, job, kRevert.at(state), run.now, e.what());
      a.waiting = true;
      a.next_at = run.now + backoff_delay(run.req->policy, job.attempts, run.req->request_id + job.path);
      ++job.attempts;
      return false;
    }
    journal_job(run, job, JobState::failed, run.now, e.what());
    cleanup(run, a);
    return true;
  }

  if (job.state == JobState::done) {
    ++run.done_this_run;
    if (options_.crash_after_done && run.done_this_run >= *options_.crash_after_done) {
      {
        std::lock_guard lock(mutex_);
        run.req->state = RequestState::resumable;
        running_.erase(run.req->request_id);
        clocks_[run.req->request_id] = run.now;
      }
      throw Error(Errc::unavailable, "coordinator crashed");
    }
    return true;
  }
  start_step(run, a);
  return false;
}

Report DataMover::drive(const std::string& request_id, bool resuming) {
  Run run;
  {
    std::lock_guard lock(mutex_);
    auto it = requests_.find(request_id);
    if (it == requests_.end()) throw Error(Errc::not_found, "unknown request " + request_id);
    auto& req = it->second;
    if (running_.contains(request_id)) throw Error(Errc::conflict, request_id + " is already running");
    if (resuming && req.state == RequestState::completed) return report_for(req);
    bool startable = req.state == RequestState::planned || req.state == RequestState::resumable ||
                     (resuming && req.state == RequestState::partial_failed);
    if (!startable) {
      throw Error(Errc::failed_precondition,
                  request_id + " is " + std::string(to_string(req.state)));
    }
    running_.insert(request_id);
    run.req = &req;
    run.now = clocks_[request_id];
  }
  run.log = &journal(request_id);
  Millis started = run.now;

  try {
    journal_request(run, RequestState::running, run.now);
    if (resuming) reconcile(run);

    auto& jobs = run.req->jobs;
    std::vector<std::size_t> order(jobs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return jobs[x].path < jobs[y].path; });
    std::size_t cursor = 0;
    std::vector<Active> active;
    auto limit = static_cast<std::size_t>(run.req->policy.max_concurrent_files);

    while (true) {
      while (active.size() < limit && cursor < order.size()) {
        auto idx = order[cursor++];
        auto& job = jobs[idx];
        if (terminal(job.state)) continue;
        if (job.state == JobState::pending && destination_matches(job)) {
          trace_event(run, {run.now, job.path, "skip", "", job.attempts, "already at destination"});
          journal_job(run, job, JobState::done, run.now);
          continue;
        }
        job.attempts = std::max(job.attempts, 1);
        Active a;
        a.index = idx;
        start_step(run, a);
        active.push_back(std::move(a));
      }
      if (active.empty()) break;
      auto next = std::min_element(active.begin(), active.end(), [&](const Active& x, const Active& y) {
        if (x.next_at != y.next_at) return x.next_at < y.next_at;
        return jobs[x.index].path < jobs[y.index].path;
      });
      run.now = std::max(run.now, next->next_at);
      bool finished = next->waiting ? (start_step(run, *next), false) : finish_step(run, *next);
      if (finished) active.erase(next);
    }

    bool all_done = std::all_of(jobs.begin(), jobs.end(), [](const auto& j) { return j.state == JobState::done; });
    journal_request(run, all_done ? RequestState::completed : RequestState::partial_failed, run.now);
  } catch (const Error& e) {
    if (e.code() == Errc::unavailable && std::string_view(e.what()) == "coordinator crashed") throw;
    std::lock_guard lock(mutex_);
    running_.erase(request_id);
    run.req->state = RequestState::resumable;
    clocks_[request_id] = run.now;
    throw;
  }

  std::lock_guard lock(mutex_);
  running_.erase(request_id);
  clocks_[request_id] = run.now;
  auto report = report_for(*run.req);
  report.started_at = started;
  report.finished_at = run.now;
  report.trace = std::move(run.trace);
  return report;
}

Report DataMover::report_for(const TransferRequest& req) const {
  Report r;
  r.request_id = req.request_id;
  r.state = req.state;
  for (const auto& job : req.jobs) {
    std::uint64_t bytes = job.state == JobState::done ? job.size : 0;
    r.files.push_back({job.path, job.state, job.attempts, bytes, job.last_error});
    r.bytes += bytes;
  }
  auto c = clocks_.find(req.request_id);
  r.started_at = r.finished_at = c == clocks_.end() ? 0 : c->second;
  return r;
}

Report DataMover::execute(const std::string& request_id) { return drive(request_id, false); }

Report DataMover::resume(const std::string& request_id) { return drive(request_id, true); }

Report DataMover::fetch_lite(const std::vector<std::string>& lfns, FetchMode mode, const fs::path& dest,
                             std::string_view token, const ReplicaLookup& lookup) {
  auto tok = authority_.verify(token);
  if (!tok) throw Error(Errc::denied, "invalid token");
  if (mode == FetchMode::frequent) {
    if (tok->kind != security::CredentialKind::full) {
      throw Error(Errc::denied, "frequent mode requires a full credential");
    }
    auto d = authority_.authorize(token, "svc://datamover", security::Action::move);
    if (!d) throw Error(Errc::denied, d.reason);
  }
  for (const auto& lfn : lfns) {
    auto d = authority_.authorize(token, lfn, security::Action::read);
    if (!d) throw Error(Errc::denied, d.reason + " for " + lfn);
  }

  TransferRequest req;
  req.kind = "fetch";
  req.src = std::string(to_string(mode));
  req.dst = mode == FetchMode::casual ? Pfn{options_.portal_cache_site, Tier::disk, "pull"}.str()
                                      : dest.generic_string();
  req.owner = tok->subject;
  req.policy = options_.default_policy;
  std::set<std::string> seen;
  for (const auto& lfn : lfns) {
    auto path = lfn_path(lfn);
    if (!seen.insert(path).second) continue;
    std::optional<storage::StoredFile> found;
    for (const auto& pfn : lookup(lfn)) {
      if ((found = storage_.stat(pfn))) break;
    }
    if (!found) throw Error(Errc::not_found, "no replica of " + lfn);
    FileJob job;
    job.path = path;
    job.size = found->size;
    job.digest = found->digest;
    job.source = found->pfn;
    job.destination = mode == FetchMode::casual ? join(req.dst, path) : (dest / path).generic_string();
    req.jobs.push_back(std::move(job));
  }
  std::sort(req.jobs.begin(), req.jobs.end(), [](const auto& a, const auto& b) { return a.path < b.path; });

  {
    std::lock_guard lock(mutex_);
    req.request_id = next_request_id();
    auto& log = journal(req.request_id);
    log.append(Json{{"type", "request"}, {"id", req.request_id}, {"kind", req.kind}, {"src", req.src},
                    {"dst", req.dst}, {"owner", req.owner}, {"policy", policy_json(req.policy)}, {"at", 0}});
    for (const auto& job : req.jobs) {
      log.append(Json{{"type", "job"}, {"path", job.path}, {"size", job.size}, {"digest", job.digest},
                      {"source", job.source}, {"destination", job.destination},
                      {"state", to_string(JobState::pending)}, {"attempt", 0}, {"at", 0}});
    }
    log.append(Json{{"type", "request_state"}, {"state", to_string(RequestState::planned)}, {"at", 0}});
    requests_[req.request_id] = req;
    clocks_[req.request_id] = 0;
  }
  auto report = execute(req.request_id);
  if (mode == FetchMode::casual) {
    for (const auto& f : report.files) {
      if (f.state == JobState::done) report.pull_urls.push_back("/pull/" + f.path);
    }
  }
  return report;
}

std::optional<TransferRequest> DataMover::request(const std::string& request_id) const {
  std::lock_guard lock(mutex_);
  auto it = requests_.find(request_id);
  if (it == requests_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DataMover::request_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : requests_) out.push_back(id);
  return out;
}

std::vector<TraceEvent> DataMover::trace(const std::string& request_id) const {
  std::lock_guard lock(mutex_);
  auto it = traces_.find(request_id);
  return it == traces_.end() ? std::vector<TraceEvent>{} : it->second;
}

}  // namespace esg::datamover
