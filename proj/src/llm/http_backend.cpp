#include "drylab/llm/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "drylab/errors.hpp"

namespace drylab::llm {

using nlohmann::json;

struct HttpChatBackend::Impl {
  std::string scheme_host_port;
  std::string path_prefix;
  std::string api_key;
  std::string default_model;
  int timeout_seconds = 120;

  std::unique_ptr<httplib::Client> make_client() const {
    auto client = std::make_unique<httplib::Client>(scheme_host_port);
    client->set_connection_timeout(timeout_seconds, 0);
    client->set_read_timeout(timeout_seconds, 0);
    client->set_write_timeout(timeout_seconds, 0);
    return client;
  }
};

namespace {

// Split "https://host:port/path" into client target and path prefix.
void split_base_url(const std::string& base_url, std::string& scheme_host_port,
                    std::string& path_prefix) {
  auto scheme_end = base_url.find("://");
  size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = base_url.find('/', host_start);
  if (path_start == std::string::npos) {
    scheme_host_port = base_url;
    path_prefix = "/v1";
    return;
  }
  scheme_host_port = base_url.substr(0, path_start);
  path_prefix = base_url.substr(path_start);
  while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
  if (path_prefix.empty()) path_prefix = "/v1";
}

}  // namespace

HttpChatBackend::HttpChatBackend(const LlmSettings& settings)
    : impl_(std::make_unique<Impl>()) {
  split_base_url(settings.base_url, impl_->scheme_host_port, impl_->path_prefix);
  impl_->default_model = settings.model;
  impl_->timeout_seconds = settings.timeout_seconds;
  if (const char* key = std::getenv(settings.api_key_env.c_str())) impl_->api_key = key;
  if (impl_->api_key.empty()) {
    if (const char* key = std::getenv("OPENAI_API_KEY")) impl_->api_key = key;
  }
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::id() const { return "http:" + impl_->scheme_host_port; }

Completion HttpChatBackend::complete(const AgentProfile& profile,
                                     const std::string& /*step_key*/,
                                     const std::vector<ChatMessage>& messages) {
  json body;
  body["model"] = profile.model.empty() ? impl_->default_model : profile.model;
  body["temperature"] = profile.temperature;
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = std::move(msgs);

  httplib::Headers headers;
  if (!impl_->api_key.empty())
    headers.emplace("Authorization", "Bearer " + impl_->api_key);

  auto client = impl_->make_client();
  auto res = client->Post(impl_->path_prefix + "/chat/completions", headers, body.dump(),
                          "application/json");
  if (!res)
    throw TransientBackendError("chat backend unreachable: " +
                                httplib::to_string(res.error()));

  int status = res->status;
  if (status == 401 || status == 403)
    throw CredentialError("chat backend rejected credentials (HTTP " +
                          std::to_string(status) + ")");
  if (status == 429 || status == 408 || status >= 500)
    throw TransientBackendError("chat backend returned HTTP " + std::to_string(status),
                                status);
  if (status != 200)
    throw Error("chat backend returned HTTP " + std::to_string(status) + ": " + res->body);

  json payload = json::parse(res->body, nullptr, false);
  if (payload.is_discarded() || !payload.contains("choices") || payload["choices"].empty())
    throw TransientBackendError("chat backend returned an unparseable payload");

  Completion out;
  out.text = payload["choices"][0].value("message", json::object()).value("content", "");
  if (payload.contains("usage")) {
    out.prompt_tokens = payload["usage"].value("prompt_tokens", 0);
    out.completion_tokens = payload["usage"].value("completion_tokens", 0);
  }
  out.backend_id = id();
  return out;
}

}  // namespace drylab::llm
