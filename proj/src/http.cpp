#include "pgagent/http.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <fmt/format.h>

#include "pgagent/error.hpp"

namespace pgagent::http {

Url parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorKind::invalid_argument, "not an absolute URL: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    fail(ErrorKind::invalid_argument, "unsupported URL scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Url out;
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
    out.path = "/";
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  if (out.scheme_host_port.size() <= scheme_end + 3) fail(ErrorKind::invalid_argument, "URL has no host: " + url);
  return out;
}

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& bearer_token, double timeout_seconds) {
  const auto parts = parse_url(url);
  httplib::Client client(parts.scheme_host_port);
  const auto sec = static_cast<time_t>(timeout_seconds);
  const auto usec = static_cast<time_t>((timeout_seconds - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto res = client.Post(parts.path, headers, body.dump(), "application/json");
  if (!res) {
    fail(ErrorKind::oracle_unavailable,
         fmt::format("POST {} failed: {}", url, httplib::to_string(res.error())));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorKind::oracle_unavailable,
         fmt::format("POST {} returned HTTP {}: {}", url, res->status, res->body.substr(0, 200)));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::oracle_unavailable, fmt::format("POST {} returned non-JSON body: {}", url, e.what()));
  }
}

std::string api_key_from_env(const std::string& variable) {
  if (variable.empty()) return {};
  const char* value = std::getenv(variable.c_str());
  return value ? std::string(value) : std::string();
}

}  // namespace pgagent::http
