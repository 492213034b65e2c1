#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "conceptrag/ragpipe.hpp"

namespace conceptrag {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string to_string(StubPolicy p) {
  return p == StubPolicy::EchoFacts ? "echo-facts" : "oracle-substring";
}

StubPolicy parse_stub_policy(std::string_view s) {
  if (s == "echo-facts") return StubPolicy::EchoFacts;
  if (s == "oracle-substring") return StubPolicy::OracleSubstring;
  throw std::invalid_argument("unknown stub policy '" + std::string(s) + "'");
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("URL without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string between(std::string_view text, std::string_view open, std::string_view close) {
  const auto b = text.find(open);
  if (b == std::string_view::npos) return {};
  const auto start = b + open.size();
  const auto e = text.rfind(close);
  if (e == std::string_view::npos || e < start) return std::string(text.substr(start));
  return std::string(text.substr(start, e - start));
}

std::string echo_facts(std::string_view prompt) {
  if (prompt.find("Facts: ") != std::string_view::npos) {
    std::string facts = between(prompt, "Facts: ", " Question: ");
    if (!facts.empty() && facts.back() == '.') facts.pop_back();
    return facts;
  }
  if (prompt.find("### Input: {") != std::string_view::npos)
    return between(prompt, "### Input: {", "}\n### Response");
  return std::string(prompt);
}

std::string stub_answer(const LlmBackendSpec& spec, std::string_view prompt,
                        const std::vector<std::string>& gold) {
  if (spec.stub_max_delay.count() > 0) {
    const auto h = std::hash<std::string_view>{}(prompt);
    const auto ms = static_cast<long long>(h % static_cast<std::size_t>(spec.stub_max_delay.count() + 1));
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
  if (spec.stub_policy == StubPolicy::EchoFacts) return echo_facts(prompt);
  for (const auto& g : gold)
    if (!g.empty() && prompt.find(g) != std::string_view::npos) return g;
  return "unknown";
}

std::string http_chat(const LlmBackendSpec& spec, std::string_view prompt) {
  const Url url = split_url(spec.endpoint_url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(spec.timeout - secs);
  client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
  client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));
  client.set_write_timeout(secs.count(), static_cast<time_t>(usecs.count()));

  httplib::Headers headers;
  if (!spec.token_env.empty()) {
    if (const char* token = std::getenv(spec.token_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const json body{{"model", spec.model},
                  {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
                  {"temperature", spec.temperature},
                  {"max_tokens", spec.max_tokens}};
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw BackendError(BackendErrorKind::Timeout, "request to " + spec.endpoint_url + " timed out", true);
    throw BackendError(BackendErrorKind::Connection,
                       "request to " + spec.endpoint_url + " failed: " + httplib::to_string(err), true);
  }
  if (res->status < 200 || res->status >= 300) {
    const bool retryable = res->status == 429 || res->status >= 500;
    throw BackendError(BackendErrorKind::HttpStatus,
                       "backend returned HTTP " + std::to_string(res->status), retryable, res->status);
  }
  try {
    const json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(BackendErrorKind::MalformedBody,
                       std::string("malformed chat-completions body: ") + e.what(), false);
  }
}

}  // namespace

std::string LlmBackendSpec::label() const {
  if (kind == BackendKind::Stub) return "stub:" + to_string(stub_policy);
  return "http:" + model;
}

void LlmBackendSpec::validate() const {
  if (max_parallel < 1) throw std::invalid_argument("backend: max_parallel must be >= 1");
  if (max_retries < 0) throw std::invalid_argument("backend: max_retries must be >= 0");
  if (kind == BackendKind::HttpChat) {
    if (endpoint_url.empty()) throw std::invalid_argument("backend: http backend requires a url");
    split_url(endpoint_url);
  }
}

LlmBackendSpec backend_spec_from_json(std::string_view json_text) {
  LlmBackendSpec spec;
  try {
    const json j = json::parse(json_text);
    const std::string kind = j.value("kind", "stub");
    if (kind == "http") spec.kind = BackendKind::HttpChat;
    else if (kind == "stub") spec.kind = BackendKind::Stub;
    else throw std::invalid_argument("backend: unknown kind '" + kind + "'");
    spec.endpoint_url = j.value("url", "");
    spec.model = j.value("model", "");
    spec.token_env = j.value("token_env", "");
    if (j.contains("stub_policy")) spec.stub_policy = parse_stub_policy(j.at("stub_policy").get<std::string>());
    spec.timeout = std::chrono::milliseconds(j.value("timeout_ms", spec.timeout.count()));
    spec.max_parallel = j.value("max_parallel", spec.max_parallel);
    spec.max_retries = j.value("max_retries", spec.max_retries);
    spec.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", spec.retry_backoff.count()));
    spec.max_tokens = j.value("max_tokens", spec.max_tokens);
    spec.temperature = j.value("temperature", spec.temperature);
    spec.stub_max_delay = std::chrono::milliseconds(j.value("stub_max_delay_ms", 0));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("backend spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

LlmBackendSpec load_backend_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return backend_spec_from_json(ss.str());
}

std::string backend_spec_to_json(const LlmBackendSpec& spec) {
  json j{{"kind", spec.kind == BackendKind::HttpChat ? "http" : "stub"},
         {"timeout_ms", spec.timeout.count()},
         {"max_parallel", spec.max_parallel},
         {"max_retries", spec.max_retries},
         {"max_tokens", spec.max_tokens},
         {"temperature", spec.temperature}};
  if (spec.kind == BackendKind::HttpChat) {
    j["url"] = spec.endpoint_url;
    j["model"] = spec.model;
    j["token_env"] = spec.token_env;
  } else {
    j["stub_policy"] = to_string(spec.stub_policy);
    j["stub_max_delay_ms"] = spec.stub_max_delay.count();
  }
  return j.dump();
}

LlmReply query_llm(const LlmBackendSpec& backend, std::string_view prompt,
                   const std::vector<std::string>& gold) {
  const auto start = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };
  if (backend.kind == BackendKind::Stub) {
    std::string text = stub_answer(backend, prompt, gold);
    return {std::move(text), elapsed_ms()};
  }
  for (int attempt = 0;; ++attempt) {
    try {
      std::string text = http_chat(backend, prompt);
      return {std::move(text), elapsed_ms()};
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= backend.max_retries) throw;
      std::this_thread::sleep_for(backend.retry_backoff * (1 << attempt));
    }
  }
}

AmrProvider http_parse_client(std::string url, std::chrono::milliseconds timeout) {
  return [url = std::move(url), timeout](const SupportDoc& doc) -> std::string {
    const Url u = split_url(url);
    httplib::Client client(u.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(std::max<long long>(secs.count(), 1), 0);
    auto res = client.Post(u.path, json{{"text", doc.text}}.dump(), "application/json");
    if (!res)
      throw BackendError(BackendErrorKind::Connection,
                         "AMR parse request failed: " + httplib::to_string(res.error()), true);
    if (res->status < 200 || res->status >= 300)
      throw BackendError(BackendErrorKind::HttpStatus,
                         "AMR parse endpoint returned HTTP " + std::to_string(res->status),
                         res->status >= 500, res->status);
    try {
      return json::parse(res->body).at("amr").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(BackendErrorKind::MalformedBody, std::string("malformed AMR reply: ") + e.what(), false);
    }
  };
}

}  // namespace conceptrag
