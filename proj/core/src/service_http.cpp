#include <atomic>

#include <httplib.h>

#include "lexirag/error.hpp"
#include "lexirag/service.hpp"

namespace lexirag {

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::atomic<bool> running{false};

  Impl(Service& svc, std::size_t threads) : service(svc) {
    const std::size_t n = threads == 0 ? 1 : threads;
    server.new_task_queue = [n] { return new httplib::ThreadPool(n); };
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      const HttpReply reply = service.Dispatch(req.method, req.path, req.body);
      res.status = reply.status;
      res.set_content(reply.body, "application/json; charset=utf-8");
    };
    // Every path goes through Dispatch so 404/405 bodies stay JSON.
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Put(".*", handler);
    server.Delete(".*", handler);
    server.Patch(".*", handler);
  }
};

HttpServer::HttpServer(Service& service, std::size_t threads)
    : impl_(std::make_unique<Impl>(service, threads)) {}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIoError, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::Listen() {
  impl_->running = true;
  impl_->server.listen_after_bind();
  impl_->running = false;
}

void HttpServer::Stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::IsRunning() const { return impl_->running && impl_->server.is_running(); }

}  // namespace lexirag
