#include <doctest.h>

#include <cstdlib>
#include <mutex>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <nlohmann/json.hpp>

#include "pgagent/backends.hpp"
#include "pgagent/embedding.hpp"
#include "pgagent/error.hpp"
#include "pgagent/http.hpp"
#include "pgagent/io.hpp"
#include "test_support.hpp"

using namespace pgagent;
using nlohmann::json;

namespace {

// Loopback stand-in for a chat-completions and embeddings service.
class LocalServer {
 public:
  LocalServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      last_auth = req.get_header_value("Authorization");
      last_body = json::parse(req.body);
      if (fail_next > 0) {
        --fail_next;
        res.status = 503;
        res.set_content("busy", "text/plain");
        return;
      }
      json reply = {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", answer}}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      last_body = json::parse(req.body);
      json reply = {{"data", json::array({{{"embedding", {3.0, 4.0, 0.0}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  [[nodiscard]] std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  std::mutex mutex_;
  std::string answer = "Yes, different pages.";
  int fail_next = 0;
  std::string last_auth;
  json last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_SUITE("remote") {
  TEST_CASE("chat backend sends the key from the environment and base64 images") {
    LocalServer server;
    pgtest::TempDir dir;
    io::atomic_write(dir / "a.png", "PNGDATA");
    io::atomic_write(dir / "b.png", "OTHER");
    ::setenv("PGAGENT_TEST_REMOTE_KEY", "sekret", 1);

    RemoteBackendConfig cfg;
    cfg.endpoint = server.url("/v1/chat/completions");
    cfg.model = "test-model";
    cfg.api_key_env = "PGAGENT_TEST_REMOTE_KEY";
    cfg.corpus_root = dir.path();
    cfg.timeout_seconds = 5;
    Oracle oracle(std::make_shared<RemoteBackend>(cfg), pgtest::templates(), {0, 0});

    CHECK(oracle.judge_dissimilar({"a.png", {}, {}, ""}, {"b.png", {}, {}, ""}));
    CHECK(server.last_auth == "Bearer sekret");
    const auto& content = server.last_body.at("messages").at(0).at("content");
    REQUIRE(content.size() == 3);
    CHECK(content[0].at("image_url").at("url") == "data:image/png;base64," + base64_encode("PNGDATA"));
    CHECK(content[2].at("type") == "text");
    CHECK(server.last_body.at("model") == "test-model");
    ::unsetenv("PGAGENT_TEST_REMOTE_KEY");
  }

  TEST_CASE("url image mode passes locators through and no key sends no header") {
    LocalServer server;
    RemoteBackendConfig cfg;
    cfg.endpoint = server.url("/v1/chat/completions");
    cfg.model = "m";
    cfg.api_key_env = "PGAGENT_TEST_UNSET_KEY";
    cfg.image_mode = ImageMode::url;
    cfg.timeout_seconds = 5;
    server.answer = "A settings page";
    Oracle oracle(std::make_shared<RemoteBackend>(cfg), pgtest::templates(), {0, 0});
    CHECK(oracle.summarize_page({"https://example.invalid/x.png", {}, {}, ""}) == "A settings page");
    CHECK(server.last_auth.empty());
    CHECK(server.last_body["messages"][0]["content"][0]["image_url"]["url"] == "https://example.invalid/x.png");
  }

  TEST_CASE("server errors are retried and then surface as oracle-unavailable") {
    LocalServer server;
    RemoteBackendConfig cfg;
    cfg.endpoint = server.url("/v1/chat/completions");
    cfg.model = "m";
    cfg.image_mode = ImageMode::url;
    cfg.timeout_seconds = 5;
    Oracle oracle(std::make_shared<RemoteBackend>(cfg), pgtest::templates(), {1, 0});
    server.fail_next = 1;
    CHECK(oracle.judge_dissimilar({"a", {}, {}, ""}, {"b", {}, {}, ""}));
    server.fail_next = 2;
    try {
      oracle.judge_dissimilar({"a", {}, {}, ""}, {"b", {}, {}, ""});
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::oracle_unavailable);
    }
  }

  TEST_CASE("unresolvable image locators fail before any request") {
    RemoteBackendConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    cfg.model = "m";
    Oracle oracle(std::make_shared<RemoteBackend>(cfg), pgtest::templates(), {0, 0});
    try {
      oracle.summarize_page({"/definitely/missing.png", {}, {}, ""});
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::oracle_unavailable);
      CHECK(std::string(e.what()).find("cannot resolve image locator") != std::string::npos);
    }
  }

  TEST_CASE("remote embedder normalizes and checks the dimension") {
    LocalServer server;
    RemoteEmbedderConfig cfg;
    cfg.endpoint = server.url("/v1/embeddings");
    cfg.model = "emb";
    cfg.dim = 3;
    cfg.timeout_seconds = 5;
    RemoteEmbedder embedder(cfg);
    const auto v = embedder.embed("hello");
    CHECK(v.values[0] == doctest::Approx(0.6));
    CHECK(v.values[1] == doctest::Approx(0.8));
    CHECK(server.last_body.at("input") == "hello");
    CHECK_THROWS_AS((void)embedder.embed(""), Error);

    cfg.dim = 4;
    cfg.retries = 0;
    CHECK_THROWS_AS((void)RemoteEmbedder(cfg).embed("hello"), Error);
  }

  TEST_CASE("url parsing") {
    const auto u = http::parse_url("https://api.example.com:8443/v1/chat/completions");
    CHECK(u.scheme_host_port == "https://api.example.com:8443");
    CHECK(u.path == "/v1/chat/completions");
    CHECK_THROWS_AS(http::parse_url("ftp://x/y"), Error);
    CHECK_THROWS_AS(http::parse_url("no-scheme"), Error);
  }

  TEST_CASE("base64") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
  }
}
