#pragma once

// HTTP transport for OpenAI-compatible endpoints:
// POST {base_url}/v1/chat/completions with a bearer token.

#include <httplib.h>

#include "client.hpp"

namespace mjudge {

class HttpTransport : public Transport {
public:
    TransportResult perform(const EndpointConfig& cfg, const json& body,
                            const std::string& bearer_token) override {
        httplib::Client http(cfg.base_url);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
        http.set_connection_timeout(secs.count() > 0 ? secs.count() : 1, 0);
        http.set_read_timeout(secs.count() > 0 ? secs.count() : 1, 0);

        httplib::Headers headers;
        if (!bearer_token.empty())
            headers.emplace("Authorization", "Bearer " + bearer_token);

        auto res = http.Post("/v1/chat/completions", headers, body.dump(), "application/json");
        if (!res) return {0, "", httplib::to_string(res.error())};
        return {res->status, res->body, ""};
    }
};

}  // namespace mjudge
