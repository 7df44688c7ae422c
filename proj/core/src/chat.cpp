#include "pmlab/chat.hpp"

#include <cstdlib>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pmlab/error.hpp"
#include "pmlab/protocol.hpp"

namespace pmlab {

using json = nlohmann::json;

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    SplitUrl out;
    out.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) out.prefix = url.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

}  // namespace

HttpChatTransport::HttpChatTransport(EndpointConfig config) : config_(std::move(config)) {
    if (const char* value = std::getenv(config_.credential_env.c_str())) credential_ = value;
}

std::string HttpChatTransport::request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                                            const std::string& response_format) {
    json body;
    body["model"] = model;
    body["messages"] = json::array();
    for (const ChatMessage& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    if (!response_format.empty()) body["response_format"] = json::parse(response_format);
    return body.dump();
}

std::string HttpChatTransport::extract_content(const std::string& response_body) {
    const json doc = json::parse(response_body, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::TransportError, "endpoint returned non-JSON body");
    try {
        const json& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw Error(ErrorCode::TransportError, "message content is not text");
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::TransportError, std::string("unexpected completion shape: ") + e.what());
    }
}

std::string HttpChatTransport::complete(const std::vector<ChatMessage>& messages,
                                        const std::string& response_format) {
    const SplitUrl url = split_url(config_.base_url);
    httplib::Client client(url.origin);
    if (!client.is_valid()) throw Error(ErrorCode::TransportError, "unsupported endpoint address " + url.origin);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    client.set_write_timeout(config_.timeout_seconds);

    httplib::Headers headers;
    if (!credential_.empty()) headers.emplace("Authorization", "Bearer " + credential_);

    const auto result = client.Post(url.prefix + "/chat/completions", headers,
                                    request_body(config_.model, messages, response_format), "application/json");
    if (!result) throw Error(ErrorCode::TransportError, "request failed: " + httplib::to_string(result.error()));
    if (result->status != 200) {
        throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(result->status) + ": " + result->body);
    }
    return extract_content(result->body);
}

ChatAgent::ChatAgent(std::shared_ptr<ChatTransport> transport, std::string system_prompt, int max_attempts)
    : transport_(std::move(transport)), max_attempts_(max_attempts) {
    history_.push_back({"system", std::move(system_prompt)});
}

template <class Decision, class Parse>
ChatOutcome<Decision> ChatAgent::decide(const std::string& prompt, const std::string& format, Parse parse,
                                        Decision fallback) {
    ChatOutcome<Decision> outcome{std::move(fallback), {}, true};
    std::vector<ChatMessage> request = history_;
    request.push_back({"user", prompt});
    history_.push_back({"user", prompt});

    for (int attempt = 0; attempt < max_attempts_; ++attempt) {
        ChatAttempt record;
        try {
            record.raw = transport_->complete(request, format);
            outcome.decision = parse(record.raw);
            outcome.exhausted = false;
            outcome.attempts.push_back(std::move(record));
            history_.push_back({"assistant", outcome.attempts.back().raw});
            return outcome;
        } catch (const Error& e) {
            record.error = e.what();
        }
        outcome.attempts.push_back(std::move(record));
    }
    return outcome;
}

ChatOutcome<TradeDecision> ChatAgent::decide_trade(const std::string& prompt) {
    return decide<TradeDecision>(prompt, trade_response_format(), parse_trade_response, TradeDecision::no_op());
}

ChatOutcome<AllocationDecision> ChatAgent::decide_allocation(const std::string& prompt) {
    return decide<AllocationDecision>(prompt, allocation_response_format(), parse_allocation_response,
                                      AllocationDecision{0.0});
}

}  // namespace pmlab
