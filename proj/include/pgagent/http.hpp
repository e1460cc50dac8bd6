#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace pgagent::http {

struct Url {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/chat/completions"
};

/// Splits an absolute http(s) URL. Throws Error(invalid_argument).
Url parse_url(const std::string& url);

/// POSTs a JSON body and returns the parsed JSON reply. Transport failures, non-2xx statuses
/// and non-JSON replies throw Error(oracle_unavailable). An empty bearer token sends no
/// Authorization header.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         const std::string& bearer_token, double timeout_seconds);

/// Reads the API key from the named environment variable ("" when unset).
std::string api_key_from_env(const std::string& variable);

}  // namespace pgagent::http
