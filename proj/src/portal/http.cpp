#include "esg/portal/http.hpp"

#include <httplib.h>

#include "esg/common/crypto.hpp"
#include "esg/common/names.hpp"
#include "esg/virtualdata/recipe.hpp"

namespace esg::portal {
namespace {

using httplib::Request;
using httplib::Response;
using security::Action;

constexpr const char* kJson = "application/json";
constexpr const char* kEsgn = "application/x-esgn";

std::string bearer(const Request& req) {
  auto h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  return h.starts_with(prefix) ? h.substr(prefix.size()) : std::string();
}

Json body_json(const Request& req) {
  try {
    return req.body.empty() ? Json::object() : Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw ParseError(e.byte > 0 ? e.byte - 1 : 0, "request body is not JSON");
  }
}

std::string param(const Request& req, const char* name) {
  if (!req.has_param(name)) throw Error(Errc::invalid_argument, std::string("missing parameter ") + name);
  return req.get_param_value(name);
}

std::optional<std::string> opt_param(const Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

void reply(Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), kJson);
}

void reply_bytes(Response& res, const Bytes& bytes, const std::string& digest) {
  res.set_header("X-ESG-Digest", digest);
  res.set_content(std::string(bytes.begin(), bytes.end()), kEsgn);
}

void reply_error(Response& res, const Error& e) {
  Json j{{"error", to_string(e.code())}, {"message", e.what()}};
  if (const auto* p = dynamic_cast<const ParseError*>(&e)) j["offset"] = p->offset();
  reply(res, j, http_status(e.code()));
}

using Handler = std::function<void(const Request&, Response&)>;

Handler guarded(Handler fn) {
  return [fn = std::move(fn)](const Request& req, Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, e);
    } catch (const Json::exception& e) {
      reply_error(res, Error(Errc::invalid_argument, e.what()));
    } catch (const std::logic_error& e) {  // std::stoll and friends on bad parameters
      reply_error(res, Error(Errc::invalid_argument, e.what()));
    } catch (const std::exception& e) {
      reply(res, Json{{"error", "internal"}, {"message", e.what()}}, 500);
    }
  };
}

Json to_json(const datamover::TransferRequest& r) {
  Json jobs = Json::array();
  std::size_t done = 0;
  for (const auto& j : r.jobs) {
    done += j.state == datamover::JobState::done;
    jobs.push_back({{"path", j.path},
                    {"size", j.size},
                    {"state", datamover::to_string(j.state)},
                    {"attempts", j.attempts},
                    {"last_error", j.last_error}});
  }
  return Json{{"request_id", r.request_id}, {"kind", r.kind},   {"src", r.src},
              {"dst", r.dst},               {"owner", r.owner}, {"state", datamover::to_string(r.state)},
              {"total", r.jobs.size()},     {"done", done},     {"jobs", jobs}};
}

Json to_json(const datamover::Report& r) {
  Json files = Json::array();
  for (const auto& f : r.files) {
    files.push_back({{"path", f.path},
                     {"state", datamover::to_string(f.state)},
                     {"attempts", f.attempts},
                     {"bytes", f.bytes},
                     {"last_error", f.last_error}});
  }
  std::size_t transfers = 0;
  for (const auto& e : r.trace) transfers += e.kind == "transfer";
  return Json{{"request_id", r.request_id},
              {"state", datamover::to_string(r.state)},
              {"bytes", r.bytes},
              {"started_at", r.started_at},
              {"finished_at", r.finished_at},
              {"transfers", transfers},
              {"files", files},
              {"pull_urls", r.pull_urls}};
}

/// Job as shown to its owner; delegation details stay inside the portal.
Json public_view(const Job& job) {
  auto j = to_json(job);
  j.erase("owner_groups");
  j.erase("owner_kind");
  j.erase("result_pfn");
  if (job.state == JobState::ready && job.kind == JobKind::selection) j["download"] = "/download/" + job.job_id;
  return j;
}

Json to_json(const monitor::ServiceStatus& s) {
  Json history = Json::array();
  for (const auto& t : s.history) history.push_back({{"at", t.at}, {"state", monitor::to_string(t.state)}});
  return Json{{"service", s.id},
              {"state", monitor::to_string(s.state)},
              {"last_heartbeat", s.last_heartbeat ? Json(*s.last_heartbeat) : Json()},
              {"interval_ms", s.interval},
              {"history", history}};
}

std::optional<datamover::Policy> policy_from(const Json& j, const datamover::Policy& base) {
  if (!j.contains("max_concurrent") && !j.contains("max_retries")) return std::nullopt;
  auto p = base;
  p.max_concurrent_files = j.value("max_concurrent", p.max_concurrent_files);
  p.max_retries = j.value("max_retries", p.max_retries);
  if (p.max_concurrent_files < 1 || p.max_retries < 0) throw Error(Errc::invalid_argument, "bad transfer policy");
  return p;
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return 400;
    case Errc::denied: return 403;
    case Errc::not_found: return 404;
    case Errc::already_exists:
    case Errc::conflict:
    case Errc::failed_precondition: return 409;
    case Errc::no_space: return 507;
    case Errc::checksum_mismatch: return 502;
    case Errc::corrupt: return 500;
    case Errc::transient:
    case Errc::unavailable: return 503;
  }
  return 500;
}

Errc errc_for_status(int status) {
  switch (status) {
    case 400: return Errc::invalid_argument;
    case 401:
    case 403: return Errc::denied;
    case 404: return Errc::not_found;
    case 409: return Errc::conflict;
    case 502: return Errc::checksum_mismatch;
    case 507: return Errc::no_space;
    case 500: return Errc::corrupt;
    default: return Errc::unavailable;
  }
}

HttpServer::HttpServer(Portal& portal) : portal_(portal), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(1ull << 30);
  auto workers = static_cast<std::size_t>(std::max(8, portal_.profile().workers * 4));
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::unavailable, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error(Errc::unavailable, "cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void HttpServer::install_routes() {
  auto& s = *server_;
  auto& p = portal_;

  s.Get("/health", guarded([&p](const Request&, Response& res) {
    reply(res, {{"status", "ok"}, {"profile", p.profile().name}, {"served_prefix", p.profile().served_prefix}});
  }));

  // security
  s.Post("/register", guarded([&p](const Request& req, Response& res) {
    p.require_service("security");
    auto j = body_json(req);
    security::UserInfo info{j.at("name").get<std::string>(), j.at("email").get<std::string>(),
                            j.value("institution", ""), j.value("groups", std::vector<std::string>{})};
    auto r = p.authority().register_user(info);
    reply(res, {{"request_id", r.id}, {"status", security::to_string(r.status)}}, 201);
  }));
  s.Get("/admin/pending", guarded([&p](const Request& req, Response& res) {
    Json out = Json::array();
    for (const auto& r : p.authority().pending(bearer(req))) {
      out.push_back({{"request_id", r.id},
                     {"name", r.user.name},
                     {"email", r.user.email},
                     {"institution", r.user.institution},
                     {"groups", r.user.requested_groups}});
    }
    reply(res, out);
  }));
  s.Post("/admin/review", guarded([&p](const Request& req, Response& res) {
    auto j = body_json(req);
    std::optional<std::vector<std::string>> groups;
    if (j.contains("groups")) groups = j["groups"].get<std::vector<std::string>>();
    auto out = p.authority().review(j.at("request_id").get<std::string>(), j.at("accept").get<bool>(),
                                    bearer(req), groups);
    Json r{{"status", security::to_string(out.status)}, {"user_id", out.user_id}};
    if (out.passphrase) r["passphrase"] = *out.passphrase;
    reply(res, r);
  }));
  s.Post("/login", guarded([&p](const Request& req, Response& res) {
    auto j = body_json(req);
    auto token = p.authority().login(j.at("user_id").get<std::string>(), j.at("passphrase").get<std::string>());
    auto t = p.authority().verify(token);
    reply(res, {{"token", token}, {"kind", security::to_string(t->kind)}, {"expires_at", t->expires_at}});
  }));
  s.Post("/admin/policies", guarded([&p](const Request& req, Response& res) {
    auto j = body_json(req);
    security::GroupPolicy policy{j.at("group").get<std::string>(), j.at("pattern").get<std::string>(), {}};
    for (const auto& a : j.at("actions")) {
      auto action = security::parse_action(a.get<std::string>());
      if (!action) throw Error(Errc::invalid_argument, "unknown action " + a.get<std::string>());
      policy.actions.insert(*action);
    }
    p.authority().add_policy(policy, bearer(req));
    reply(res, j, 201);
  }));
  s.Get("/admin/policies", guarded([&p](const Request& req, Response& res) {
    auto t = p.authority().verify(bearer(req));
    if (!t || !t->in_group(security::kAdminGroup)) throw Error(Errc::denied, "administrator token required");
    Json out = Json::array();
    for (const auto& g : p.authority().policies()) {
      Json actions = Json::array();
      for (auto a : g.actions) actions.push_back(security::to_string(a));
      out.push_back({{"group", g.group}, {"pattern", g.pattern}, {"actions", actions}});
    }
    reply(res, out);
  }));
  s.Post("/admin/credentials", guarded([&p](const Request& req, Response& res) {
    auto j = body_json(req);
    auto user = j.at("user_id").get<std::string>();
    auto passphrase = p.authority().issue_full_credential(user, bearer(req));
    reply(res, {{"user_id", user}, {"kind", "full"}, {"passphrase", passphrase}});
  }));

  // catalog
  s.Post("/catalog/records", guarded([&p](const Request& req, Response& res) {
    p.require_service("catalog");
    auto record = catalog::record_from_json(body_json(req));
    p.require_served(record.logical_name);
    auto id = p.catalog().publish(record, bearer(req));
    reply(res, {{"id", id}, {"version", 1}}, 201);
  }));
  s.Patch(R"(/catalog/records/([^/]+))", guarded([&p](const Request& req, Response& res) {
    p.require_service("catalog");
    auto id = req.matches[1].str();
    if (!p.record(id)) throw Error(Errc::not_found, "no record " + id);
    std::optional<std::uint64_t> expected;
    if (auto v = opt_param(req, "expected_version")) expected = std::stoull(*v);
    auto version = p.catalog().update(id, catalog::patch_from_json(body_json(req)), bearer(req), expected);
    reply(res, {{"id", id}, {"version", version}});
  }));
  s.Get(R"(/catalog/records/([^/]+))", guarded([&p](const Request& req, Response& res) {
    p.require_service("catalog");
    auto r = p.record(req.matches[1].str());
    if (!r) throw Error(Errc::not_found, "no record " + req.matches[1].str());
    reply(res, catalog::to_json(*r));
  }));
  s.Get("/catalog/records", guarded([&p](const Request& req, Response& res) {
    p.require_service("catalog");
    auto name = param(req, "name");
    auto r = p.record(name);
    if (!r) throw Error(Errc::not_found, "no record named " + name);
    reply(res, catalog::to_json(*r));
  }));
  s.Get("/catalog/search", guarded([&p](const Request& req, Response& res) {
    p.require_service("catalog");
    catalog::SearchQuery q;
    q.text = opt_param(req, "q").value_or("");
    for (const auto& [key, value] : req.params) {
      if (key.starts_with("filter.")) q.filters[key.substr(7)] = value;
    }
    Json out = Json::array();
    for (const auto& r : p.search(q)) out.push_back(catalog::to_json(r));
    reply(res, {{"count", out.size()}, {"results", out}});
  }));
  s.Get("/catalog/browse", guarded([&p](const Request& req, Response& res) {
    p.require_service("catalog");
    Json out = Json::array();
    for (const auto& n : p.browse(opt_param(req, "path").value_or(""))) {
      out.push_back({{"name", n.name}, {"path", n.path}, {"count", n.count}});
    }
    reply(res, out);
  }));
  s.Get("/catalog/thredds", guarded([&p](const Request& req, Response& res) {
    p.require_service("catalog");
    res.set_content(p.thredds(opt_param(req, "prefix").value_or("")), "application/xml");
  }));

  // replica location service
  s.Post("/rls/replicas", guarded([&p](const Request& req, Response& res) {
    p.require_service("replica");
    auto j = body_json(req);
    auto lfn = j.at("lfn").get<std::string>();
    p.require_served(lfn);
    std::optional<Millis> ttl;
    if (j.contains("ttl_ms")) ttl = j["ttl_ms"].get<Millis>();
    auto e = p.replicas().add_replica(lfn, j.at("pfn").get<std::string>(), bearer(req), ttl);
    reply(res, {{"lfn", e.lfn}, {"pfn", e.pfn}, {"renewed_at", e.renewed_at}, {"ttl_ms", e.ttl}}, 201);
  }));
  s.Delete("/rls/replicas", guarded([&p](const Request& req, Response& res) {
    p.require_service("replica");
    auto lfn = param(req, "lfn");
    p.require_served(lfn);
    p.replicas().remove_replica(lfn, param(req, "pfn"), bearer(req));
    res.status = 204;
  }));
  s.Get("/rls/lookup", guarded([&p](const Request& req, Response& res) {
    p.require_service("replica");
    auto lfn = param(req, "lfn");
    p.require_served(lfn);
    reply(res, {{"lfn", lfn}, {"pfns", p.replicas().lookup(lfn)}});
  }));

  // storage
  s.Post("/storage/files", guarded([&p](const Request& req, Response& res) {
    p.require_service("storage");
    auto pfn = param(req, "pfn");
    auto lfn = param(req, "lfn");
    p.require_served(lfn);
    auto d = p.authority().authorize(bearer(req), lfn, Action::publish);
    if (!d) throw Error(Errc::denied, d.reason);
    if (require_pfn(pfn).site == p.profile().portal_cache_site) {
      throw Error(Errc::invalid_argument, "the portal cache site does not accept uploads");
    }
    auto f = p.storage().put_file(pfn, as_bytes(req.body));
    p.replicas().add_replica(lfn, f.pfn, bearer(req));
    reply(res, {{"pfn", f.pfn}, {"lfn", lfn}, {"size", f.size}, {"digest", f.digest}}, 201);
  }));
  s.Get("/storage/sites", guarded([&p](const Request&, Response& res) {
    p.require_service("storage");
    Json out = Json::array();
    for (const auto& site : p.storage().sites()) {
      out.push_back({{"site_id", site},
                     {"capacity_bytes", p.storage().capacity(site)},
                     {"resident_bytes", p.storage().resident_bytes(site)},
                     {"reserved_bytes", p.storage().reserved_bytes(site)}});
    }
    reply(res, out);
  }));

  // virtual data
  s.Post("/vds/define", guarded([&p](const Request& req, Response& res) {
    p.require_service("virtualdata");
    auto j = body_json(req);
    auto metadata = catalog::record_from_json(j.at("metadata"));
    auto expr = virtualdata::expr_from_json(j.at("recipe"));
    p.require_served(metadata.logical_name);
    for (const auto& name : virtualdata::references(*expr)) p.require_served(name);
    auto id = p.vds().define_virtual(metadata, expr, bearer(req));
    reply(res, {{"id", id}, {"logical_name", metadata.logical_name}}, 201);
  }));
  s.Get("/vds/instantiate", guarded([&p](const Request& req, Response& res) {
    auto m = p.data(param(req, "name"), opt_param(req, "constraint"), bearer(req));
    res.set_header("X-ESG-Cache", m.cache_hit ? "hit" : "miss");
    reply_bytes(res, m.bytes, to_hex(sha256(m.bytes)));
  }));
  s.Get("/vds/cache/stats", guarded([&p](const Request&, Response& res) {
    p.require_service("virtualdata");
    auto st = p.vds().stats();
    reply(res, {{"hits", st.hits},
                {"misses", st.misses},
                {"builds", st.builds},
                {"invalidations", st.invalidations},
                {"entries", st.entries},
                {"fetches", st.fetches}});
  }));
  s.Get(R"(/data/(.+))", guarded([&p](const Request& req, Response& res) {
    auto name = std::string(kLfnScheme) + req.matches[1].str();
    if (!valid_lfn(name)) throw Error(Errc::not_found, "no such dataset " + name);
    auto m = p.data(name, opt_param(req, "constraint"), bearer(req));
    reply_bytes(res, m.bytes, to_hex(sha256(m.bytes)));
  }));

  // selections, fetches and jobs
  s.Post("/selection", guarded([&p](const Request& req, Response& res) {
    auto sel = selection_from_json(body_json(req));
    auto id = p.submit_selection(sel, bearer(req));
    reply(res, public_view(p.job(id, bearer(req))), 202);
  }));
  s.Post("/fetch", guarded([&p](const Request& req, Response& res) {
    auto j = body_json(req);
    auto lfns = j.at("lfns").get<std::vector<std::string>>();
    auto mode = datamover::parse_fetch_mode(j.value("mode", "casual"));
    if (!mode) throw Error(Errc::invalid_argument, "mode must be casual or frequent");
    if (*mode == datamover::FetchMode::casual) {
      auto id = p.submit_fetch(lfns, bearer(req));
      reply(res, public_view(p.job(id, bearer(req))), 202);
    } else {
      auto dest = j.at("dest").get<std::string>();
      if (!std::filesystem::path(dest).is_absolute()) throw Error(Errc::invalid_argument, "dest must be absolute");
      auto report = p.fetch_direct(lfns, dest, bearer(req));
      auto out = to_json(report);
      Json digests = Json::object();
      if (auto r = p.datamover().request(report.request_id)) {
        for (const auto& job : r->jobs) digests[job.path] = job.digest;
      }
      out["digests"] = digests;
      reply(res, out);
    }
  }));
  s.Get("/jobs", guarded([&p](const Request& req, Response& res) {
    Json out = Json::array();
    for (const auto& job : p.jobs(bearer(req))) out.push_back(public_view(job));
    reply(res, out);
  }));
  s.Get(R"(/jobs/([^/]+))", guarded([&p](const Request& req, Response& res) {
    reply(res, public_view(p.job(req.matches[1].str(), bearer(req))));
  }));
  s.Get(R"(/download/([^/]+))", guarded([&p](const Request& req, Response& res) {
    auto d = p.download(req.matches[1].str(), bearer(req));
    reply_bytes(res, d.bytes, d.digest);
  }));
  s.Get(R"(/pull/(.+))", guarded([&p](const Request& req, Response& res) {
    auto path = req.matches[1].str();
    auto lfn = std::string(kLfnScheme) + path;
    if (!valid_lfn(lfn)) throw Error(Errc::not_found, "nothing to pull at " + path);
    p.require_served(lfn);
    auto d = p.authority().authorize(bearer(req), lfn, Action::read);
    if (!d) throw Error(Errc::denied, d.reason);
    auto pfn = "site://" + p.profile().portal_cache_site + "/disk/pull/" + path;
    if (!p.storage().stat(pfn)) throw Error(Errc::not_found, "nothing to pull at " + path);
    auto bytes = p.storage().read_file(pfn);
    reply_bytes(res, bytes, to_hex(sha256(bytes)));
  }));

  // data mover
  s.Post("/mv", guarded([&p](const Request& req, Response& res) {
    auto j = body_json(req);
    auto report = p.move(j.at("src").get<std::string>(), j.at("dst").get<std::string>(), bearer(req),
                         policy_from(j, p.profile().transfer_policy));
    reply(res, to_json(report));
  }));
  s.Get(R"(/mv/([^/]+))", guarded([&p](const Request& req, Response& res) {
    reply(res, to_json(*p.move_request(req.matches[1].str(), bearer(req))));
  }));
  s.Post(R"(/mv/([^/]+)/resume)", guarded([&p](const Request& req, Response& res) {
    reply(res, to_json(p.resume_move(req.matches[1].str(), bearer(req))));
  }));

  // monitor
  s.Post("/monitor/heartbeat", guarded([&p](const Request& req, Response& res) {
    p.require_service("monitor");
    auto t = p.authority().verify(bearer(req));
    if (!t || !(t->in_group(kServiceGroup) || t->in_group(security::kAdminGroup))) {
      throw Error(Errc::denied, "heartbeats need a service or administrator token");
    }
    auto j = body_json(req);
    auto id = j.at("service").get<std::string>();
    auto now = p.clock().now();
    if (!p.monitor().registered(id)) {
      p.monitor().register_service(id, j.value("interval_ms", p.profile().heartbeat_interval_ms));
    }
    p.monitor().heartbeat(id, now);
    reply(res, to_json(p.monitor().describe(id, now)));
  }));
  s.Get("/monitor/status", guarded([&p](const Request&, Response& res) {
    p.require_service("monitor");
    Json out = Json::array();
    for (const auto& st : p.monitor().snapshot(p.clock().now())) out.push_back(to_json(st));
    reply(res, out);
  }));
  s.Get("/monitor/availability", guarded([&p](const Request& req, Response& res) {
    p.require_service("monitor");
    auto window = std::stoll(opt_param(req, "window").value_or(std::to_string(kHour)));
    if (window <= 0) throw Error(Errc::invalid_argument, "window must be positive");
    auto now = p.clock().now();
    Json out = Json::array();
    auto one = [&](const std::string& id) {
      if (!p.monitor().registered(id)) throw Error(Errc::not_found, "unknown service " + id);
      out.push_back({{"service", id}, {"window_ms", window}, {"availability", p.monitor().availability(id, window, now)}});
    };
    if (auto id = opt_param(req, "service")) {
      one(*id);
    } else {
      for (const auto& st : p.monitor().snapshot(now)) one(st.id);
    }
    reply(res, out);
  }));
  s.Get("/monitor/events", guarded([&p](const Request& req, Response& res) {
    p.require_service("monitor");
    Json out = Json::array();
    auto limit = std::stoul(opt_param(req, "limit").value_or("1000"));
    auto events = p.monitor().events(opt_param(req, "source").value_or(""));
    auto first = events.size() > limit ? events.size() - limit : 0;
    for (auto i = first; i < events.size(); ++i) {
      const auto& e = events[i];
      out.push_back({{"at", e.at}, {"source", e.source}, {"kind", e.kind}, {"detail", e.detail}});
    }
    reply(res, out);
  }));
}

}  // namespace esg::portal
