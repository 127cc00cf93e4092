// SPDX-License-Identifier: Apache-2.0
// Eigen must come before httplib: <resolv.h> defines a macro named _res.
#include "framepick/service.hpp"

#include <thread>

#include <httplib.h>

namespace framepick::service {

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Service& s) : service(s) {
        auto route = [this](const httplib::Request& req, httplib::Response& res) {
            ApiRequest api;
            api.method = req.method;
            api.path = req.path;
            for (const auto& [k, v] : req.params) api.query[k] = v;
            api.body = req.body;
            const ApiResponse out = service.handle(api);
            res.status = out.status;
            res.set_content(out.body, out.content_type);
        };
        server.Get(R"(/.*)", route);
        server.Post(R"(/.*)", route);
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::listen(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace framepick::service
