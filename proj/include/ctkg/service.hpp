#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "ctkg/store.hpp"

namespace ctkg {

/// Resource kinds, URL templates and endpoints offered by the service.
nlohmann::json service_descriptor();

/// HTTP front end over a Store opened for writing.
class Service {
 public:
  explicit Service(Store& store);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds to host:port (port 0 picks a free one) and returns the bound port.
  /// Throws IO_ERROR.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks the caller.
  void run();
  /// bind() + run() on a background thread; returns once requests are accepted.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace ctkg
