#include <httplib.h>

#include "cxrl/service.hpp"

namespace cxrl {

struct HttpServer::Impl {
  SessionService* service;
  httplib::Server server;
  std::thread thread;
};

namespace {

void send(httplib::Response& out, const Response& r) {
  out.status = r.status;
  out.set_content(r.raw ? *r.raw : r.body.dump() + "\n", r.content_type);
}

std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  if (req.body.empty()) return nlohmann::json::object();
  auto doc = nlohmann::json::parse(req.body, nullptr, false);
  if (doc.is_discarded()) {
    send(res, error_response(400, "invalid_body", "request body is not valid JSON"));
    return std::nullopt;
  }
  return doc;
}

}  // namespace

HttpServer::HttpServer(SessionService& service) : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  auto& s = impl_->server;
  SessionService* svc = &service;

  s.Post("/v1/sessions", [svc](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) send(res, svc->create_session(*body));
  });
  s.Get(R"(/v1/sessions/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc->get_view(req.matches[1]));
  });
  s.Post(R"(/v1/sessions/([^/]+)/query)", [svc](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) send(res, svc->post_query(req.matches[1], *body));
  });
  s.Post(R"(/v1/sessions/([^/]+)/step)", [svc](const httplib::Request& req, httplib::Response& res) {
    if (auto body = parse_body(req, res)) send(res, svc->post_step(req.matches[1], *body));
  });
  s.Get(R"(/v1/sessions/([^/]+)/trajectory)", [svc](const httplib::Request& req, httplib::Response& res) {
    TrajectoryRequest t;
    try {
      if (req.has_param("policy")) t.policy = req.get_param_value("policy");
      if (req.has_param("mode")) t.mode = req.get_param_value("mode");
      if (req.has_param("n")) t.n = std::stoi(req.get_param_value("n"));
      if (req.has_param("seed")) t.seed = std::stoull(req.get_param_value("seed"));
    } catch (const std::exception&) {
      send(res, error_response(400, "invalid_request", "n and seed must be integers"));
      return;
    }
    t.jsonl = req.get_header_value("Accept").find("ndjson") != std::string::npos;
    send(res, svc->get_trajectory(req.matches[1], t));
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send(res, error_response(500, "internal", message));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace cxrl
