#pragma once

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <map>
#include <string>
#include <utility>

#include "ideoscale/types.hpp"

namespace ideoscale {

struct HttpResponse {
  int status = 0;  // 0: no response (connection, timeout)
  std::string body;
  std::string error;

  bool transport_ok() const noexcept { return status >= 200 && status < 300; }
  /// Worth another attempt: no response, throttled, or a server error.
  bool retryable() const noexcept { return status == 0 || status == 429 || status >= 500; }
};

using HttpHeaders = std::multimap<std::string, std::string>;

class HttpTransport {
public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::string& body, const HttpHeaders& headers) = 0;
  virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
};

/// Splits "http://host:port/path?q" into ("http://host:port", "/path?q").
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("invalid URL (no scheme): " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// Joins a base endpoint and a route without doubling slashes.
inline std::string join_url(std::string base, std::string_view route) {
  while (!base.empty() && base.back() == '/') base.pop_back();
  if (!route.empty() && route.front() != '/') base.push_back('/');
  base.append(route);
  return base;
}

class HttplibTransport final : public HttpTransport {
public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(60)) : timeout_(timeout) {}

  HttpResponse post_json(const std::string& url, const std::string& body, const HttpHeaders& headers) override {
    auto [origin, path] = split_url(url);
    auto client = make_client(origin);
    ++requests_;
    return convert(client.Post(path, to_httplib(headers), body, "application/json"));
  }

  HttpResponse get(const std::string& url, const HttpHeaders& headers) override {
    auto [origin, path] = split_url(url);
    auto client = make_client(origin);
    ++requests_;
    return convert(client.Get(path, to_httplib(headers)));
  }

  std::size_t requests() const noexcept { return requests_.load(); }

private:
  httplib::Client make_client(const std::string& origin) const {
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    return client;
  }

  static httplib::Headers to_httplib(const HttpHeaders& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
  }

  static HttpResponse convert(const httplib::Result& res) {
    if (!res) return {0, {}, httplib::to_string(res.error())};
    return {res->status, res->body, {}};
  }

  std::chrono::seconds timeout_;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace ideoscale
