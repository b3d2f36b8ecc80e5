#include "drylab/search/eutils.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "drylab/errors.hpp"
#include "drylab/util/strings.hpp"

namespace drylab::search {

using nlohmann::json;

struct EutilsClient::Impl {
  std::string scheme_host_port;
  std::string path_prefix;
  std::string api_key;
  int retries = 3;
  std::unique_ptr<RateLimiter> limiter;

  std::string get(const std::string& db, const std::string& endpoint,
                  std::map<std::string, std::string> params) {
    params["db"] = db;
    if (!api_key.empty()) params["api_key"] = api_key;

    std::string path = path_prefix + "/" + endpoint + "?";
    bool first = true;
    for (const auto& [k, v] : params) {
      if (!first) path += "&";
      first = false;
      path += k + "=" + httplib::detail::encode_query_param(v);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
      limiter->acquire();
      httplib::Client client(scheme_host_port);
      client.set_connection_timeout(30, 0);
      client.set_read_timeout(60, 0);
      auto res = client.Get(path);
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw RetrievalError(db, endpoint + " returned HTTP " + std::to_string(res->status));
      return res->body;
    }
    throw RetrievalError(db, endpoint + " failed after " + std::to_string(retries + 1) +
                                 " attempts (" + last_error + ")");
  }
};

EutilsClient::EutilsClient(const EutilsSettings& settings)
    : impl_(std::make_unique<Impl>()) {
  auto scheme_end = settings.base_url.find("://");
  size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = settings.base_url.find('/', host_start);
  if (path_start == std::string::npos) {
    impl_->scheme_host_port = settings.base_url;
    impl_->path_prefix = "";
  } else {
    impl_->scheme_host_port = settings.base_url.substr(0, path_start);
    impl_->path_prefix = settings.base_url.substr(path_start);
    while (!impl_->path_prefix.empty() && impl_->path_prefix.back() == '/')
      impl_->path_prefix.pop_back();
  }
  if (const char* key = std::getenv(settings.api_key_env.c_str())) impl_->api_key = key;
  impl_->retries = settings.retries;
  impl_->limiter = std::make_unique<RateLimiter>(impl_->api_key.empty() ? 3 : 10);
}

EutilsClient::~EutilsClient() = default;

RateLimiter& EutilsClient::limiter() { return *impl_->limiter; }

std::vector<std::string> EutilsClient::esearch(const std::string& db,
                                               const std::string& term, int retmax) {
  if (retmax < 1) throw ValidationError("esearch retmax must be >= 1");
  std::string body = impl_->get(db, "esearch.fcgi",
                                {{"term", term},
                                 {"retmax", std::to_string(retmax)},
                                 {"retmode", "json"}});
  json payload = json::parse(body, nullptr, false);
  if (payload.is_discarded())
    throw RetrievalError(db, "esearch returned an unparseable payload");
  std::vector<std::string> ids;
  for (const auto& id : payload.value("esearchresult", json::object())
                            .value("idlist", json::array()))
    ids.push_back(id.get<std::string>());
  return ids;
}

json EutilsClient::esummary(const std::string& db, const std::vector<std::string>& uids) {
  if (uids.empty()) return json::object();
  std::string body = impl_->get(db, "esummary.fcgi",
                                {{"id", util::join(uids, ",")}, {"retmode", "json"}});
  json payload = json::parse(body, nullptr, false);
  if (payload.is_discarded())
    throw RetrievalError(db, "esummary returned an unparseable payload");
  return payload;
}

std::string EutilsClient::efetch(const std::string& db, const std::vector<std::string>& uids,
                                 const std::map<std::string, std::string>& extra_params) {
  if (uids.empty()) throw ValidationError("efetch requires at least one uid");
  std::map<std::string, std::string> params(extra_params);
  params["id"] = util::join(uids, ",");
  return impl_->get(db, "efetch.fcgi", params);
}

}  // namespace drylab::search
