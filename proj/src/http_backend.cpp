#include <httplib.h>

#include "artic/error.hpp"
#include "artic/planner.hpp"

namespace artic::planner {

HttpBackend::HttpBackend(std::string url, int timeout_seconds) : timeout_seconds_(timeout_seconds) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        throw std::invalid_argument("only http:// endpoints are supported: " + url);
    }
    std::string rest = url.substr(scheme.size());
    const auto slash = rest.find('/');
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    std::string authority = rest.substr(0, slash);
    const auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        port_ = std::stoi(authority.substr(colon + 1));
        authority = authority.substr(0, colon);
    }
    host_ = authority;
    if (host_.empty()) {
        throw std::invalid_argument("missing host in " + url);
    }
}

std::string HttpBackend::interpret_text(const InterpretRequest& request) {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    const nlohmann::json body{{"prompt", build_prompt(request)}};
    const auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::BackendUnavailable,
                    "request to " + host_ + ":" + std::to_string(port_) + path_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::BackendUnavailable, "backend answered HTTP " + std::to_string(res->status));
    }
    try {
        const auto doc = nlohmann::json::parse(res->body);
        return doc.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BackendFormatError, std::string("backend reply lacks a text field: ") + e.what());
    }
}

}  // namespace artic::planner
