// esg: command-line client for an ESG portal.
#include <CLI11.hpp>
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "esg/catalog/record.hpp"
#include "esg/common/crypto.hpp"
#include "esg/common/error.hpp"
#include "esg/common/names.hpp"
#include "esg/gridfmt/codec.hpp"
#include "esg/portal/http.hpp"
#include "esg/portal/selection.hpp"

namespace fs = std::filesystem;
using esg::Errc;
using esg::Json;

namespace {

struct Failure {
  Failure(Errc c, std::string m, int s = 0) : code(c), message(std::move(m)), status(s) {}

  Errc code;
  std::string message;
  int status = 0;
  std::optional<std::size_t> offset;
};

int exit_code(Errc c) {
  switch (c) {
    case Errc::denied: return 3;
    case Errc::not_found: return 4;
    case Errc::invalid_argument: return 5;
    case Errc::conflict:
    case Errc::already_exists:
    case Errc::failed_precondition: return 6;
    case Errc::unavailable:
    case Errc::transient: return 7;
    default: return 1;
  }
}

Errc errc_from_name(std::string_view name, Errc fallback) {
  for (auto c : {Errc::invalid_argument, Errc::not_found, Errc::already_exists, Errc::denied, Errc::conflict,
                 Errc::transient, Errc::checksum_mismatch, Errc::no_space, Errc::corrupt, Errc::failed_precondition,
                 Errc::unavailable}) {
    if (esg::to_string(c) == name) return c;
  }
  return fallback;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{Errc::not_found, "cannot read " + path.string()};
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Failure{Errc::unavailable, "cannot write " + path.string()};
  }
  fs::rename(tmp, path);
}

std::string digest_of(std::string_view bytes) { return esg::to_hex(esg::sha256(esg::as_bytes(bytes))); }

class Api {
 public:
  Api(const std::string& url, std::string token) : client_(url), token_(std::move(token)) {
    if (!client_.is_valid()) throw Failure{Errc::invalid_argument, "bad portal url " + url};
    client_.set_connection_timeout(10);
    client_.set_read_timeout(900);
    client_.set_write_timeout(900);
  }

  httplib::Result get(const std::string& path, const httplib::Params& params = {}) {
    return check(client_.Get(path, params, headers()));
  }
  httplib::Result post(const std::string& path, const std::string& body, const char* type = "application/json") {
    return check(client_.Post(path, headers(), body, type));
  }
  Json get_json(const std::string& path, const httplib::Params& params = {}) { return Json::parse(get(path, params)->body); }
  Json post_json(const std::string& path, const Json& body) { return Json::parse(post(path, body.dump())->body); }

 private:
  httplib::Headers headers() const {
    if (token_.empty()) return {};
    return {{"Authorization", "Bearer " + token_}};
  }

  static httplib::Result check(httplib::Result r) {
    if (!r) throw Failure{Errc::unavailable, "portal unreachable: " + httplib::to_string(r.error())};
    if (r->status >= 200 && r->status < 300) return r;
    Failure f{esg::portal::errc_for_status(r->status), r->body, r->status};
    try {
      auto j = Json::parse(r->body);
      f.code = errc_from_name(j.value("error", ""), f.code);
      f.message = j.value("message", r->body);
      if (j.contains("offset")) f.offset = j["offset"].get<std::size_t>();
    } catch (const Json::exception&) {
    }
    throw f;
  }

  httplib::Client client_;
  std::string token_;
};

/// Verifies the digest header and returns the body.
std::string checked_body(const httplib::Result& r) {
  auto want = r->get_header_value("X-ESG-Digest");
  if (!want.empty() && want != digest_of(r->body)) {
    throw Failure{Errc::checksum_mismatch, "digest mismatch: expected " + want};
  }
  return r->body;
}

std::optional<esg::portal::CoordRange> range_arg(const std::string& text, const char* what) {
  if (text.empty()) return std::nullopt;
  auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(text);
    return esg::portal::CoordRange{std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::logic_error&) {
    throw Failure{Errc::invalid_argument, std::string(what) + " must be MIN,MAX"};
  }
}

Json wait_job(Api& api, const std::string& id, double timeout_s) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  while (true) {
    auto job = api.get_json("/jobs/" + id);
    auto state = job.value("state", "");
    if (state == "READY") return job;
    if (state == "FAILED") {
      auto error = job.value("error", "");
      auto colon = error.find(':');
      auto code = colon == std::string::npos ? Errc::unavailable : errc_from_name(error.substr(0, colon), Errc::unavailable);
      throw Failure{code, "job " + id + " failed: " + error};
    }
    if (std::chrono::steady_clock::now() > deadline) {
      throw Failure{Errc::unavailable, "job " + id + " still " + state + " after " + std::to_string(timeout_s) + " s"};
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

/// Time, latitude and longitude extents of the coordinate variables.
void coverage_from(const esg::gridfmt::GridDataset& ds, esg::catalog::MetadataRecord& r, bool first) {
  using esg::portal::Axis;
  for (const auto& dim : ds.dimensions) {
    auto axis = esg::portal::axis_of(ds, dim.name);
    const auto* coord = ds.find_variable(dim.name);
    if (!axis || !coord || coord->element_count() == 0) continue;
    std::vector<double> v;
    std::visit([&](const auto& data) { v.assign(data.begin(), data.end()); }, coord->data);
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    esg::catalog::Range* target = *axis == Axis::time  ? &r.time_coverage
                                  : *axis == Axis::lat ? &r.space_coverage.lat
                                  : *axis == Axis::lon ? &r.space_coverage.lon
                                                       : nullptr;
    if (!target) continue;
    if (first) {
      *target = {*lo, *hi};
    } else {
      target->min = std::min(target->min, *lo);
      target->max = std::max(target->max, *hi);
    }
  }
}

void add_parameters(const esg::gridfmt::GridDataset& ds, esg::catalog::MetadataRecord& r) {
  auto text = [](const esg::gridfmt::Variable& v, const char* key) {
    auto it = v.attributes.find(key);
    if (it == v.attributes.end()) return std::string();
    const auto* s = std::get_if<std::string>(&it->second);
    return s ? *s : std::string();
  };
  for (const auto& v : ds.variables) {
    if (ds.find_dimension(v.name)) continue;
    bool known = std::any_of(r.parameters.begin(), r.parameters.end(), [&](const auto& p) { return p.name == v.name; });
    if (!known) r.parameters.push_back({v.name, text(v, "units"), text(v, "standard_name")});
  }
}

struct Describe {
  std::string title, summary, model, model_version, software, hardware;
  std::string investigation = "simulation";
  std::vector<std::string> derived_from;

  void attach(CLI::App* cmd) {
    cmd->add_option("--title", title, "Dataset title")->required();
    cmd->add_option("--summary", summary, "Short description");
    cmd->add_option("--model", model, "Model name");
    cmd->add_option("--model-version", model_version, "Model version");
    cmd->add_option("--software", software, "Software configuration");
    cmd->add_option("--hardware", hardware, "Hardware configuration");
    cmd->add_option("--investigation", investigation, "simulation, observation, experiment or analysis");
    cmd->add_option("--derived-from", derived_from, "Source dataset LFN (repeatable)");
  }

  Json record(const std::string& lfn) const {
    Json j{{"logical_name", lfn},
           {"title", title},
           {"summary", summary},
           {"classification", {{"investigation_kind", investigation}, {"dataset_kind", "plain"}, {"relationships", Json::array()}}},
           {"pedigree",
            {{"model_name", model},
             {"model_version", model_version},
             {"software_config", software},
             {"hardware_config", hardware},
             {"derived_from", derived_from}}}};
    return j;
  }
};

/// Fills the fields of a catalog record JSON from a describe block.
esg::catalog::MetadataRecord base_record(const Describe& d, const std::string& lfn) {
  auto j = esg::catalog::to_json(esg::catalog::MetadataRecord{});
  auto fields = d.record(lfn);
  for (auto& [k, v] : fields.items()) j[k] = v;
  return esg::catalog::record_from_json(j);
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Client for an ESG data portal"};
  app.require_subcommand(1);
  std::string url = std::getenv("ESG_URL") ? std::getenv("ESG_URL") : "http://127.0.0.1:8080";
  std::string token = std::getenv("ESG_TOKEN") ? std::getenv("ESG_TOKEN") : "";
  app.add_option("--url", url, "Portal base URL (ESG_URL)");
  app.add_option("--token", token, "Sign-on token (ESG_TOKEN)");

  std::function<void()> action;
  auto api = [&] { return Api(url, token); };

  // accounts
  auto* reg = app.add_subcommand("register", "Request an account");
  std::string name, email, institution;
  std::vector<std::string> groups;
  reg->add_option("--name", name)->required();
  reg->add_option("--email", email, "Also the user id")->required();
  reg->add_option("--institution", institution);
  reg->add_option("--group", groups, "Requested group (repeatable)");
  reg->callback([&] {
    action = [&] {
      auto a = api();
      auto r = a.post_json("/register", {{"name", name}, {"email", email}, {"institution", institution}, {"groups", groups}});
      std::cout << r["request_id"].get<std::string>() << "\n";
    };
  });

  auto* login = app.add_subcommand("login", "Sign on and print a token");
  std::string user, passphrase;
  login->add_option("--user", user)->required();
  login->add_option("--passphrase", passphrase)->required();
  login->callback([&] {
    action = [&] {
      auto a = api();
      std::cout << a.post_json("/login", {{"user_id", user}, {"passphrase", passphrase}})["token"].get<std::string>()
                << "\n";
    };
  });

  auto* admin = app.add_subcommand("admin", "Administration");
  admin->require_subcommand(1);
  admin->add_subcommand("pending", "List pending registrations")->callback([&] {
    action = [&] {
      auto a = api();
      for (const auto& r : a.get_json("/admin/pending")) std::cout << r.dump() << "\n";
    };
  });
  auto* review = admin->add_subcommand("review", "Accept or reject a registration");
  std::string request_id;
  bool accept = false, reject = false;
  review->add_option("request_id", request_id)->required();
  auto* acc = review->add_flag("--accept", accept);
  review->add_flag("--reject", reject)->excludes(acc);
  review->add_option("--group", groups, "Groups to grant instead of the requested ones");
  review->callback([&] {
    action = [&] {
      if (accept == reject) throw Failure{Errc::invalid_argument, "give exactly one of --accept or --reject"};
      Json body{{"request_id", request_id}, {"accept", accept}};
      if (!groups.empty()) body["groups"] = groups;
      auto a = api();
      print_json(a.post_json("/admin/review", body));
    };
  });
  auto* policy = admin->add_subcommand("policy", "Grant a group actions on a resource pattern");
  std::string group, pattern;
  std::vector<std::string> actions;
  policy->add_option("--group", group)->required();
  policy->add_option("--pattern", pattern)->required();
  policy->add_option("--action", actions, "read, publish, stage or move (repeatable)")->required();
  policy->callback([&] {
    action = [&] {
      auto a = api();
      a.post_json("/admin/policies", {{"group", group}, {"pattern", pattern}, {"actions", actions}});
    };
  });
  auto* credential = admin->add_subcommand("credential", "Issue a full credential; prints its passphrase");
  credential->add_option("user_id", user)->required();
  credential->callback([&] {
    action = [&] {
      auto a = api();
      std::cout << a.post_json("/admin/credentials", {{"user_id", user}})["passphrase"].get<std::string>() << "\n";
    };
  });

  // catalog
  auto* publish = app.add_subcommand("publish", "Upload ESGN files and publish them as one dataset");
  std::string lfn, site, tier = "disk";
  std::vector<std::string> files;
  Describe describe;
  publish->add_option("--lfn", lfn, "Dataset logical name")->required();
  publish->add_option("--site", site, "Storage site to upload to")->required();
  publish->add_option("--tier", tier, "disk or archive");
  describe.attach(publish);
  publish->add_option("files", files, "ESGN files")->required()->check(CLI::ExistingFile);
  publish->callback([&] {
    action = [&] {
      if (!esg::valid_lfn(lfn)) throw Failure{Errc::invalid_argument, "bad logical name " + lfn};
      auto record = base_record(describe, lfn);
      auto a = api();
      bool first = true;
      for (const auto& f : files) {
        auto bytes = read_file(f);
        esg::gridfmt::GridDataset ds;
        try {
          ds = esg::gridfmt::read_dataset(esg::as_bytes(bytes));
        } catch (const esg::Error& e) {
          throw Failure{Errc::invalid_argument, f + ": " + e.what()};
        }
        coverage_from(ds, record, first);
        add_parameters(ds, record);
        first = false;
        auto base = fs::path(f).filename().string();
        auto file_lfn = lfn + "/" + base;
        auto pfn = "site://" + site + "/" + tier + "/" + esg::lfn_path(lfn) + "/" + base;
        a.post("/storage/files?pfn=" + httplib::detail::encode_query_param(pfn) +
                   "&lfn=" + httplib::detail::encode_query_param(file_lfn),
               bytes, "application/octet-stream");
        record.constituent_files.push_back(file_lfn);
      }
      auto r = a.post_json("/catalog/records", esg::catalog::to_json(record));
      std::cout << r["id"].get<std::string>() << "\n";
    };
  });

  auto* define = app.add_subcommand("define", "Define a virtual dataset from a recipe");
  std::string recipe, recipe_file;
  Describe vdescribe;
  define->add_option("--lfn", lfn)->required();
  vdescribe.attach(define);
  auto* inline_recipe = define->add_option("--recipe", recipe, "Recipe JSON");
  define->add_option("--recipe-file", recipe_file, "File holding the recipe JSON")->excludes(inline_recipe);
  std::vector<std::string> params;
  define->add_option("--param", params, "NAME:UNITS:STANDARD_NAME (repeatable)");
  define->callback([&] {
    action = [&] {
      auto text = recipe_file.empty() ? recipe : read_file(recipe_file);
      if (text.empty()) throw Failure{Errc::invalid_argument, "a recipe is required"};
      auto metadata = esg::catalog::to_json(base_record(vdescribe, lfn));
      Json plist = Json::array();
      for (const auto& p : params) {
        auto a = p.find(':'), b = p.find(':', a == std::string::npos ? a : a + 1);
        if (a == std::string::npos || b == std::string::npos) throw Failure{Errc::invalid_argument, "bad --param " + p};
        plist.push_back({{"name", p.substr(0, a)}, {"units", p.substr(a + 1, b - a - 1)}, {"standard_name", p.substr(b + 1)}});
      }
      metadata["parameters"] = plist;
      Json r;
      try {
        r = Json::parse(text);
      } catch (const Json::exception& e) {
        throw Failure{Errc::invalid_argument, std::string("recipe is not JSON: ") + e.what()};
      }
      auto a = api();
      std::cout << a.post_json("/vds/define", {{"metadata", metadata}, {"recipe", r}})["id"].get<std::string>() << "\n";
    };
  });

  auto* search = app.add_subcommand("search", "Search the catalog; prints one record id per line");
  std::vector<std::string> terms, filters;
  bool names = false;
  search->add_option("terms", terms);
  search->add_option("--filter", filters, "KEY=VALUE (repeatable)");
  search->add_flag("--names", names, "Print logical names instead of ids");
  search->callback([&] {
    action = [&] {
      httplib::Params q;
      std::string text;
      for (const auto& t : terms) text += (text.empty() ? "" : " ") + t;
      q.emplace("q", text);
      for (const auto& f : filters) {
        auto eq = f.find('=');
        if (eq == std::string::npos) throw Failure{Errc::invalid_argument, "filters are KEY=VALUE"};
        q.emplace("filter." + f.substr(0, eq), f.substr(eq + 1));
      }
      auto a = api();
      auto found = a.get_json("/catalog/search", q);
      for (const auto& r : found["results"]) {
        std::cout << (names ? r["logical_name"] : r["id"]).get<std::string>() << "\n";
      }
    };
  });

  auto* browse = app.add_subcommand("browse", "List the children of a catalog path");
  std::string path;
  browse->add_option("path", path);
  browse->callback([&] {
    action = [&] {
      auto a = api();
      for (const auto& n : a.get_json("/catalog/browse", {{"path", path}})) {
        std::cout << n["path"].get<std::string>() << "\t" << n["count"].get<std::size_t>() << "\n";
      }
    };
  });

  auto* thredds = app.add_subcommand("thredds", "Print the THREDDS catalog for a prefix");
  thredds->add_option("--prefix", path);
  thredds->callback([&] {
    action = [&] {
      auto a = api();
      std::cout << a.get("/catalog/thredds", {{"prefix", path}})->body;
    };
  });

  // data access
  auto* select = app.add_subcommand("select", "Submit an aggregated data selection");
  std::string dataset, variable, lat, lon, time, level, out;
  bool wait = false;
  double timeout_s = 120;
  select->add_option("--dataset", dataset)->required();
  select->add_option("--variable", variable)->required();
  select->add_option("--lat", lat, "MIN,MAX");
  select->add_option("--lon", lon, "MIN,MAX");
  select->add_option("--time", time, "MIN,MAX");
  select->add_option("--level", level, "MIN,MAX");
  select->add_flag("--wait", wait, "Wait for the job and download the result");
  select->add_option("-o,--output", out, "Where to write the result (implies --wait)");
  select->add_option("--timeout", timeout_s, "Seconds to wait");
  select->callback([&] {
    action = [&] {
      esg::portal::SelectionRequest s{dataset,
                                      variable,
                                      range_arg(lat, "--lat"),
                                      range_arg(lon, "--lon"),
                                      range_arg(time, "--time"),
                                      range_arg(level, "--level")};
      auto a = api();
      auto id = a.post_json("/selection", esg::portal::to_json(s))["job_id"].get<std::string>();
      if (!wait && out.empty()) {
        std::cout << id << "\n";
        return;
      }
      wait_job(a, id, timeout_s);
      auto body = checked_body(a.get("/download/" + id));
      if (out.empty()) {
        std::cout << id << "\t" << digest_of(body) << "\n";
      } else {
        write_file(out, body);
        std::cout << id << "\t" << digest_of(body) << "\t" << out << "\n";
      }
    };
  });

  auto* job = app.add_subcommand("job", "Show a job");
  std::string job_id;
  job->add_option("job_id", job_id)->required();
  job->add_flag("--wait", wait, "Wait until the job finishes");
  job->callback([&] {
    action = [&] {
      auto a = api();
      print_json(wait ? wait_job(a, job_id, timeout_s) : a.get_json("/jobs/" + job_id));
    };
  });
  app.add_subcommand("jobs", "List your jobs")->callback([&] {
    action = [&] {
      auto a = api();
      for (const auto& j : a.get_json("/jobs")) {
        std::cout << j["job_id"].get<std::string>() << "\t" << j["kind"].get<std::string>() << "\t"
                  << j["state"].get<std::string>() << "\n";
      }
    };
  });

  auto* download = app.add_subcommand("download", "Download a finished selection");
  download->add_option("job_id", job_id)->required();
  download->add_option("-o,--output", out)->required();
  download->callback([&] {
    action = [&] {
      auto a = api();
      auto body = checked_body(a.get("/download/" + job_id));
      write_file(out, body);
      std::cout << digest_of(body) << "\t" << out << "\n";
    };
  });

  auto* data = app.add_subcommand("data", "Read a dataset through the constraint endpoint");
  std::string constraint;
  data->add_option("lfn", lfn)->required();
  data->add_option("--constraint", constraint);
  data->add_option("-o,--output", out)->required();
  data->callback([&] {
    action = [&] {
      if (!esg::valid_lfn(lfn)) throw Failure{Errc::invalid_argument, "bad logical name " + lfn};
      httplib::Params q;
      if (!constraint.empty()) q.emplace("constraint", constraint);
      auto a = api();
      auto body = checked_body(a.get("/data/" + esg::lfn_path(lfn), q));
      write_file(out, body);
      std::cout << digest_of(body) << "\t" << out << "\n";
    };
  });

  auto* fetch = app.add_subcommand("fetch", "Fetch files: LFN... DEST");
  std::string mode = "casual";
  std::vector<std::string> fetch_args;
  fetch->add_option("--mode", mode)->check(CLI::IsMember({"casual", "frequent"}));
  fetch->add_option("args", fetch_args, "Logical file names followed by a destination directory")->required();
  fetch->add_option("--timeout", timeout_s, "Seconds to wait for a casual fetch");
  fetch->callback([&] {
    action = [&] {
      if (fetch_args.size() < 2) throw Failure{Errc::invalid_argument, "need at least one LFN and a destination"};
      fs::path dest = fs::absolute(fetch_args.back());
      std::vector<std::string> lfns(fetch_args.begin(), fetch_args.end() - 1);
      auto a = api();
      if (mode == "frequent") {
        auto r = a.post_json("/fetch", {{"lfns", lfns}, {"mode", mode}, {"dest", dest.string()}});
        if (r["state"] != "COMPLETED") throw Failure{Errc::unavailable, "fetch ended " + r["state"].get<std::string>()};
        for (const auto& [p, digest] : r["digests"].items()) {
          auto local = dest / p;
          if (!fs::exists(local) || digest_of(read_file(local)) != digest.get<std::string>()) {
            throw Failure{Errc::checksum_mismatch, "digest mismatch for " + local.string()};
          }
          std::cout << local.string() << "\n";
        }
        return;
      }
      auto id = a.post_json("/fetch", {{"lfns", lfns}, {"mode", mode}})["job_id"].get<std::string>();
      auto j = wait_job(a, id, timeout_s);
      for (const auto& u : j["pull_urls"]) {
        auto url_path = u.get<std::string>();
        auto body = checked_body(a.get(url_path));
        auto local = dest / url_path.substr(std::string("/pull/").size());
        write_file(local, body);
        std::cout << local.string() << "\n";
      }
    };
  });

  auto* mv = app.add_subcommand("mv", "Move a directory tree between sites with the data mover");
  std::string src, dst, resume, status_id;
  int max_concurrent = 0, max_retries = -1;
  mv->add_option("--src", src);
  mv->add_option("--dst", dst);
  mv->add_option("--max-concurrent", max_concurrent);
  mv->add_option("--max-retries", max_retries);
  mv->add_option("--resume", resume, "Resume a request");
  mv->add_option("--status", status_id, "Show a request");
  mv->callback([&] {
    action = [&] {
      auto a = api();
      if (!status_id.empty()) {
        print_json(a.get_json("/mv/" + status_id));
        return;
      }
      Json r;
      if (!resume.empty()) {
        r = Json::parse(a.post("/mv/" + resume + "/resume", "{}")->body);
      } else {
        if (src.empty() || dst.empty()) throw Failure{Errc::invalid_argument, "--src and --dst are required"};
        Json body{{"src", src}, {"dst", dst}};
        if (max_concurrent > 0) body["max_concurrent"] = max_concurrent;
        if (max_retries >= 0) body["max_retries"] = max_retries;
        r = a.post_json("/mv", body);
      }
      std::cout << Json{{"request_id", r["request_id"]}, {"state", r["state"]}, {"bytes", r["bytes"]},
                        {"files", r["files"].size()}, {"transfers", r["transfers"]}}
                       .dump()
                << "\n";
      if (r["state"] != "COMPLETED") {
        throw Failure{Errc::unavailable, "request " + r["request_id"].get<std::string>() + " ended " +
                                             r["state"].get<std::string>()};
      }
    };
  });

  // replicas and monitoring
  auto* replica = app.add_subcommand("replica", "Replica location service");
  replica->require_subcommand(1);
  std::string pfn;
  auto* radd = replica->add_subcommand("add", "Register a replica");
  radd->add_option("lfn", lfn)->required();
  radd->add_option("pfn", pfn)->required();
  radd->callback([&] {
    action = [&] {
      auto a = api();
      a.post_json("/rls/replicas", {{"lfn", lfn}, {"pfn", pfn}});
    };
  });
  auto* rlookup = replica->add_subcommand("lookup", "List replicas of an LFN");
  rlookup->add_option("lfn", lfn)->required();
  rlookup->callback([&] {
    action = [&] {
      auto a = api();
      auto replicas = a.get_json("/rls/lookup", {{"lfn", lfn}});
      for (const auto& p : replicas["pfns"]) std::cout << p.get<std::string>() << "\n";
    };
  });

  auto* status = app.add_subcommand("status", "Service status from the monitor");
  status->callback([&] {
    action = [&] {
      auto a = api();
      for (const auto& s : a.get_json("/monitor/status")) {
        std::cout << s["service"].get<std::string>() << "\t" << s["state"].get<std::string>() << "\n";
      }
    };
  });
  auto* heartbeat = app.add_subcommand("heartbeat", "Send a heartbeat for a service");
  std::string service;
  long interval = 0;
  heartbeat->add_option("service", service)->required();
  heartbeat->add_option("--interval", interval, "Heartbeat interval in ms for a new service");
  heartbeat->callback([&] {
    action = [&] {
      Json body{{"service", service}};
      if (interval > 0) body["interval_ms"] = interval;
      auto a = api();
      std::cout << a.post_json("/monitor/heartbeat", body)["state"].get<std::string>() << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"error", "invalid_argument"}, {"message", e.what()}}.dump() << "\n";
    return 5;
  }

  try {
    action();
    return 0;
  } catch (const Failure& f) {
    Json j{{"error", esg::to_string(f.code)}, {"message", f.message}};
    if (f.status) j["status"] = f.status;
    if (f.offset) j["offset"] = *f.offset;
    std::cerr << j.dump() << "\n";
    return exit_code(f.code);
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}
