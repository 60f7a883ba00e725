#include "esg/portal/portal.hpp"

#include <algorithm>
#include <fstream>

#include "esg/common/crypto.hpp"
#include "esg/common/error.hpp"
#include "esg/common/names.hpp"
#include "esg/gridfmt/constraint.hpp"

namespace fs = std::filesystem;

namespace esg::portal {
namespace {

using security::Action;

constexpr std::string_view kJobKinds[] = {"selection", "fetch"};
constexpr std::string_view kJobStates[] = {"QUEUED", "RUNNING", "READY", "FAILED"};

void write_private(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text;
    if (!out) throw Error(Errc::unavailable, "cannot write " + path.string());
  }
  fs::permissions(tmp, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

Bytes load_service_key(const Profile& p) {
  auto hex = p.service_key_hex;
  auto path = p.state_dir / "service.key";
  if (hex.empty() && fs::exists(path)) {
    hex = read_text(path);
    while (!hex.empty() && std::isspace(static_cast<unsigned char>(hex.back()))) hex.pop_back();
  }
  if (hex.empty()) {
    hex = to_hex(random_bytes(32));
    write_private(path, hex + "\n");
  }
  auto key = digest_from_hex(hex);
  if (!key) throw Error(Errc::invalid_argument, "service key must be 64 hex digits");
  return {key->begin(), key->end()};
}

/// "a/b" is within "a" and within "".
bool within(const std::string& path, const std::string& base) {
  return base.empty() || path == base || path.starts_with(base + "/");
}

}  // namespace

std::string_view to_string(JobKind k) { return kJobKinds[static_cast<int>(k)]; }
std::string_view to_string(JobState s) { return kJobStates[static_cast<int>(s)]; }

std::optional<JobKind> parse_job_kind(std::string_view s) {
  for (int i = 0; i < 2; ++i) {
    if (kJobKinds[i] == s) return static_cast<JobKind>(i);
  }
  return std::nullopt;
}

std::optional<JobState> parse_job_state(std::string_view s) {
  for (int i = 0; i < 4; ++i) {
    if (kJobStates[i] == s) return static_cast<JobState>(i);
  }
  return std::nullopt;
}

Json to_json(const Job& job) {
  return Json{{"job_id", job.job_id},
              {"kind", to_string(job.kind)},
              {"state", to_string(job.state)},
              {"owner", job.owner},
              {"owner_groups", job.owner_groups},
              {"owner_kind", security::to_string(job.owner_kind)},
              {"request", job.request},
              {"result_pfn", job.result_pfn},
              {"digest", job.digest},
              {"bytes", job.bytes},
              {"pull_urls", job.pull_urls},
              {"error", job.error},
              {"submitted_at", job.submitted_at},
              {"finished_at", job.finished_at}};
}

Job job_from_json(const Json& j) {
  Job job;
  job.job_id = j.at("job_id").get<std::string>();
  job.kind = parse_job_kind(j.at("kind").get<std::string>()).value();
  job.state = parse_job_state(j.at("state").get<std::string>()).value();
  job.owner = j.at("owner").get<std::string>();
  job.owner_groups = j.at("owner_groups").get<std::vector<std::string>>();
  job.owner_kind = security::parse_kind(j.at("owner_kind").get<std::string>()).value();
  job.request = j.at("request");
  job.result_pfn = j.value("result_pfn", "");
  job.digest = j.value("digest", "");
  job.bytes = j.value("bytes", std::uint64_t{0});
  job.pull_urls = j.value("pull_urls", std::vector<std::string>{});
  job.error = j.value("error", "");
  job.submitted_at = j.value("submitted_at", Millis{0});
  job.finished_at = j.value("finished_at", Millis{0});
  return job;
}

Portal::Portal(Profile profile, const Clock* clock, bool start)
    : profile_(std::move(profile)),
      own_clock_(clock ? nullptr : std::make_unique<SystemClock>()),
      clock_(clock ? *clock : *own_clock_) {
  if (profile_.state_dir.empty()) throw Error(Errc::invalid_argument, "profile has no state_dir");
  if (profile_.storage_root.empty()) profile_.storage_root = profile_.state_dir / "sites";
  fs::create_directories(profile_.state_dir);

  authority_ = std::make_unique<security::Authority>(
      clock_, security::Authority::Options{load_service_key(profile_), profile_.token_ttl_ms,
                                           365 * 24 * kHour, profile_.state_dir / "security"});
  auto admin_file = profile_.state_dir / "admin.json";
  if (!fs::exists(admin_file)) {
    auto passphrase = authority_->bootstrap_user(profile_.admin_user, {std::string(security::kAdminGroup)},
                                                 security::CredentialKind::full);
    write_private(admin_file, Json{{"user_id", profile_.admin_user}, {"passphrase", passphrase}}.dump(2) + "\n");
  }
  auto admin = authority_->mint_token("portal", {std::string(security::kAdminGroup)}, security::CredentialKind::full);
  authority_->add_policy({std::string(kServiceGroup), "lfn://**", {Action::read, Action::publish}}, admin);
  for (const auto& p : profile_.policies) authority_->add_policy(p, admin);

  catalog_ = std::make_unique<catalog::Catalog>(
      *authority_, catalog::Catalog::Options{profile_.state_dir / "catalog.log",
                                             {"svc://datamover", "svc://virtualdata", "svc://portal"},
                                             "/data/"});
  replicas_ = std::make_unique<replica::ReplicaService>(clock_, *authority_, profile_.state_dir / "replicas.log");
  storage_ = std::make_unique<storage::Storage>(clock_, profile_.storage_root, profile_.sites);
  storage_->set_event_sink([this](const storage::StorageEvent& e) {
    monitor_.publish({e.at, "storage/" + e.site, e.kind, e.path});
  });

  datamover::DataMover::Options dm;
  dm.journal_dir = profile_.storage_root / "journals";
  dm.default_policy = profile_.transfer_policy;
  dm.portal_cache_site = profile_.portal_cache_site;
  datamover_ = std::make_unique<datamover::DataMover>(*storage_, *authority_, dm, &monitor_);

  virtualdata::VirtualDataService::Options vo;
  vo.cache_site = profile_.portal_cache_site;
  vo.republish = profile_.republish;
  vo.service_token = [this] { return service_token(); };
  vds_ = std::make_unique<virtualdata::VirtualDataService>(*catalog_, *replicas_, *storage_, *authority_, vo);

  monitor_.register_service("portal", profile_.heartbeat_interval_ms);
  for (const auto& s : profile_.services) monitor_.register_service(s, profile_.heartbeat_interval_ms);

  auto jobs_path = profile_.state_dir / "jobs.log";
  RecordLog::replay_file(jobs_path, [this](const Json& j) {
    auto job = job_from_json(j);
    next_job_ = std::max<std::uint64_t>(next_job_, std::stoull(job.job_id.substr(4)) + 1);
    jobs_[job.job_id] = std::move(job);
  });
  job_log_.open(jobs_path);
  for (auto& [id, job] : jobs_) {
    if (job.state == JobState::queued || job.state == JobState::running) {
      job.state = JobState::queued;
      queue_.push_back(id);
    }
  }
  beat();
  if (start) start_workers();
}

Portal::~Portal() { stop_workers(); }

std::string Portal::service_token() {
  std::lock_guard lock(token_mutex_);
  auto now = clock_.now();
  if (service_token_.empty() || now + kMinute >= service_token_expiry_) {
    service_token_ = authority_->mint_token("portal", {std::string(kServiceGroup)}, security::CredentialKind::full);
    service_token_expiry_ = authority_->verify(service_token_)->expires_at;
  }
  return service_token_;
}

void Portal::require_served(std::string_view lfn) const {
  if (!profile_.serves(lfn)) throw Error(Errc::not_found, "no such dataset " + std::string(lfn));
}

void Portal::check_read(std::string_view lfn, std::string_view token) {
  if (!profile_.portal_authz_check) return;
  auto d = authority_->authorize(token, lfn, Action::read);
  if (!d) throw Error(Errc::denied, d.reason);
}

void Portal::require_service(const std::string& service) const {
  if (!profile_.enabled(service)) {
    throw Error(Errc::not_found, service + " is not offered by the " + profile_.name + " portal");
  }
}

security::Token Portal::require_token(std::string_view token) const {
  auto t = authority_->verify(token);
  if (!t) throw Error(Errc::denied, "missing, invalid or expired token");
  return *t;
}

std::vector<catalog::MetadataRecord> Portal::search(const catalog::SearchQuery& query) const {
  auto records = catalog_->search_records(query);
  std::erase_if(records, [&](const auto& r) { return !serves(r.logical_name); });
  return records;
}

std::vector<catalog::BrowseNode> Portal::browse(std::string_view path) const {
  auto base = catalog::normalize_prefix(path);
  auto served = catalog::normalize_prefix(profile_.served_prefix);
  if (within(base, served)) return catalog_->browse(path);
  if (!within(served, base)) throw Error(Errc::not_found, "no such path " + std::string(path));
  // An ancestor of the served prefix shows only the branch leading to it.
  auto count = search({"", {{"prefix", profile_.served_prefix}}}).size();
  auto rest = base.empty() ? served : served.substr(base.size() + 1);
  auto child = rest.substr(0, rest.find('/'));
  if (count == 0) return {};
  return {{child, std::string(kLfnScheme) + (base.empty() ? "" : base + "/") + child, count}};
}

std::string Portal::thredds(std::string_view prefix) {
  auto base = catalog::normalize_prefix(prefix);
  auto served = catalog::normalize_prefix(profile_.served_prefix);
  auto lookup = [this](const std::string& lfn) { return replicas_->lookup(lfn); };
  if (within(base, served)) return catalog_->export_thredds(prefix, lookup);
  if (!within(served, base)) throw Error(Errc::not_found, "no such path " + std::string(prefix));
  return catalog_->export_thredds(profile_.served_prefix, lookup);
}

std::optional<catalog::MetadataRecord> Portal::record(std::string_view id_or_name) const {
  auto r = id_or_name.starts_with(kLfnScheme) ? catalog_->find_by_name(id_or_name) : catalog_->get(id_or_name);
  if (r && !serves(r->logical_name)) return std::nullopt;
  return r;
}

virtualdata::Materialized Portal::data(const std::string& name, std::optional<std::string> constraint,
                                       std::string_view token) {
  require_service("virtualdata");
  require_served(name);
  check_read(name, token);
  return vds_->instantiate(name, std::move(constraint), token);
}

gridfmt::Constraint Portal::compile(const SelectionRequest& s, std::string_view token) {
  auto whole = data(s.dataset, std::nullopt, token);
  return compile_selection(whole.dataset, s);
}

std::string Portal::submit_selection(const SelectionRequest& s, std::string_view token) {
  auto t = require_token(token);
  auto c = compile(s, token);
  Job job;
  job.kind = JobKind::selection;
  job.owner = t.subject;
  job.owner_groups = t.groups;
  job.owner_kind = t.kind;
  job.request = to_json(s);
  job.request["constraint"] = gridfmt::render(c);
  return new_job(std::move(job));
}

std::string Portal::submit_fetch(const std::vector<std::string>& lfns, std::string_view token) {
  require_service("datamover");
  auto t = require_token(token);
  if (lfns.empty()) throw Error(Errc::invalid_argument, "nothing to fetch");
  for (const auto& lfn : lfns) {
    require_served(lfn);
    check_read(lfn, token);
  }
  Job job;
  job.kind = JobKind::fetch;
  job.owner = t.subject;
  job.owner_groups = t.groups;
  job.owner_kind = t.kind;
  job.request = Json{{"lfns", lfns}, {"mode", "casual"}};
  return new_job(std::move(job));
}

datamover::Report Portal::fetch_direct(const std::vector<std::string>& lfns, const fs::path& dest,
                                       std::string_view token) {
  require_service("datamover");
  for (const auto& lfn : lfns) {
    require_served(lfn);
    check_read(lfn, token);
  }
  return datamover_->fetch_lite(lfns, datamover::FetchMode::frequent, dest, token, replica_lookup());
}

datamover::ReplicaLookup Portal::replica_lookup() {
  return [this](const std::string& lfn) { return replicas_->lookup(lfn); };
}

std::string Portal::new_job(Job job) {
  std::lock_guard lock(jobs_mutex_);
  job.job_id = "job-" + std::to_string(next_job_++);
  job.state = JobState::queued;
  job.submitted_at = clock_.now();
  record_job(job);
  auto id = job.job_id;
  jobs_[id] = std::move(job);
  queue_.push_back(id);
  jobs_cv_.notify_all();
  return id;
}

// Caller holds jobs_mutex_.
void Portal::record_job(const Job& job) { job_log_.append(to_json(job)); }

bool Portal::visible(const Job& job, std::string_view token) const {
  auto t = require_token(token);
  return t.subject == job.owner || t.in_group(security::kAdminGroup);
}

Job Portal::job(const std::string& job_id, std::string_view token) const {
  require_token(token);
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(Errc::not_found, "no job " + job_id);
  if (!visible(it->second, token)) throw Error(Errc::denied, "job " + job_id + " belongs to another user");
  return it->second;
}

std::vector<Job> Portal::jobs(std::string_view token) const {
  require_token(token);
  std::lock_guard lock(jobs_mutex_);
  std::vector<Job> out;
  for (const auto& [id, job] : jobs_) {
    if (visible(job, token)) out.push_back(job);
  }
  std::sort(out.begin(), out.end(), [](const Job& a, const Job& b) {
    return std::stoull(a.job_id.substr(4)) < std::stoull(b.job_id.substr(4));
  });
  return out;
}

Download Portal::download(const std::string& job_id, std::string_view token) const {
  auto j = job(job_id, token);
  if (j.state != JobState::ready) {
    throw Error(Errc::failed_precondition, "job " + job_id + " is " + std::string(to_string(j.state)));
  }
  if (j.kind != JobKind::selection) {
    throw Error(Errc::failed_precondition, "job " + job_id + " results are pulled from its pull_urls");
  }
  Download d;
  d.bytes = storage_->read_file(j.result_pfn);
  d.digest = to_hex(sha256(d.bytes));
  if (d.digest != j.digest) throw Error(Errc::corrupt, "stored result of " + job_id + " does not match its digest");
  return d;
}

bool Portal::wait_idle(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(jobs_mutex_);
  return jobs_cv_.wait_for(lock, timeout, [&] { return queue_.empty() && running_ == 0; });
}

void Portal::start_workers() {
  std::lock_guard lock(jobs_mutex_);
  if (!workers_.empty()) return;
  stopping_ = false;
  for (int i = 0; i < profile_.workers; ++i) workers_.emplace_back([this] { worker(); });
  heartbeat_ = std::thread([this] {
    std::unique_lock lock(jobs_mutex_);
    while (!stopping_) {
      lock.unlock();
      beat();
      lock.lock();
      jobs_cv_.wait_for(lock, std::chrono::milliseconds(profile_.heartbeat_interval_ms),
                        [&] { return stopping_; });
    }
  });
}

void Portal::stop_workers() {
  {
    std::lock_guard lock(jobs_mutex_);
    stopping_ = true;
  }
  jobs_cv_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
  if (heartbeat_.joinable()) heartbeat_.join();
}

void Portal::worker() {
  std::unique_lock lock(jobs_mutex_);
  while (true) {
    jobs_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (stopping_) return;
    auto& job = jobs_.at(queue_.front());
    queue_.pop_front();
    job.state = JobState::running;
    record_job(job);
    ++running_;
    auto copy = job;
    lock.unlock();
    run(std::move(copy));
    lock.lock();
    --running_;
    jobs_cv_.notify_all();
  }
}

std::string Portal::delegated_token(const Job& job) {
  return authority_->mint_token(job.owner, job.owner_groups, job.owner_kind);
}

void Portal::run(Job job) {
  try {
    auto token = delegated_token(job);
    if (job.kind == JobKind::selection) {
      auto name = job.request.at("dataset").get<std::string>();
      auto m = vds_->instantiate(name, job.request.at("constraint").get<std::string>(), token);
      job.result_pfn = "site://" + profile_.portal_cache_site + "/archive/jobs/" + job.job_id + ".esgn";
      storage_->put_file(job.result_pfn, m.bytes);
      job.digest = to_hex(sha256(m.bytes));
      job.bytes = m.bytes.size();
    } else {
      auto lfns = job.request.at("lfns").get<std::vector<std::string>>();
      auto report = datamover_->fetch_lite(lfns, datamover::FetchMode::casual, {}, token, replica_lookup());
      if (report.state != datamover::RequestState::completed) {
        std::string why;
        for (const auto& f : report.files) {
          if (!f.last_error.empty()) why = f.path + ": " + f.last_error;
        }
        throw Error(Errc::unavailable, "fetch did not complete; " + why);
      }
      job.pull_urls = report.pull_urls;
      job.bytes = report.bytes;
    }
    job.state = JobState::ready;
  } catch (const Error& e) {
    job.state = JobState::failed;
    job.error = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    job.state = JobState::failed;
    job.error = e.what();
  }
  job.finished_at = clock_.now();
  std::lock_guard lock(jobs_mutex_);
  record_job(job);
  jobs_[job.job_id] = std::move(job);
}

datamover::Report Portal::move(const std::string& src, const std::string& dst, std::string_view token,
                               std::optional<datamover::Policy> policy) {
  require_service("datamover");
  std::lock_guard lock(move_mutex_);
  auto request = datamover_->plan(src, dst, token, policy);
  return datamover_->execute(request.request_id);
}

datamover::Report Portal::resume_move(const std::string& request_id, std::string_view token) {
  require_service("datamover");
  auto d = authority_->authorize(token, "svc://datamover", Action::move);
  if (!d) throw Error(Errc::denied, d.reason);
  move_request(request_id, token);
  std::lock_guard lock(move_mutex_);
  return datamover_->resume(request_id);
}

std::optional<datamover::TransferRequest> Portal::move_request(const std::string& request_id,
                                                               std::string_view token) const {
  auto t = require_token(token);
  auto r = datamover_->request(request_id);
  if (!r) throw Error(Errc::not_found, "no transfer request " + request_id);
  if (r->owner != t.subject && !t.in_group(security::kAdminGroup)) {
    throw Error(Errc::denied, "transfer " + request_id + " belongs to another user");
  }
  return r;
}

void Portal::beat() {
  auto now = clock_.now();
  monitor_.heartbeat("portal", now);
  for (const auto& s : profile_.services) monitor_.heartbeat(s, now);
}

}  // namespace esg::portal
