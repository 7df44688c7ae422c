#pragma once

// Chat-completions client and the conversational agent built on it.

#include <memory>
#include <string>
#include <vector>

#include "pmlab/agents.hpp"

namespace pmlab {

struct ChatMessage {
    std::string role;  // "system", "user" or "assistant"
    std::string content;
};

/// Sends one chat-completion request and returns the assistant's message text.
/// Implementations throw Error(TransportError) on any network or protocol failure.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages, const std::string& response_format) = 0;
};

struct EndpointConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-5.2";
    std::string credential_env = "OPENAI_API_KEY";
    int timeout_seconds = 300;
};

class HttpChatTransport final : public ChatTransport {
public:
    /// Reads the credential from the configured environment variable (an absent
    /// variable sends no Authorization header).
    explicit HttpChatTransport(EndpointConfig config);
    std::string complete(const std::vector<ChatMessage>& messages, const std::string& response_format) override;

    /// Builds the JSON request body. Exposed for tests.
    static std::string request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                                    const std::string& response_format);
    /// Extracts choices[0].message.content. Throws Error(TransportError).
    static std::string extract_content(const std::string& response_body);

private:
    EndpointConfig config_;
    std::string credential_;
};

/// One request/response attempt. `error` is empty for the accepted attempt.
struct ChatAttempt {
    std::string raw;
    std::string error;
};

template <class Decision>
struct ChatOutcome {
    Decision decision;
    std::vector<ChatAttempt> attempts;
    bool exhausted = false;  // every attempt failed; `decision` is the no-op
};

/// A conversational trader. Keeps its own full transcript; each prompt is sent
/// together with every earlier accepted exchange.
class ChatAgent {
public:
    ChatAgent(std::shared_ptr<ChatTransport> transport, std::string system_prompt, int max_attempts = 3);

    ChatOutcome<TradeDecision> decide_trade(const std::string& prompt);
    ChatOutcome<AllocationDecision> decide_allocation(const std::string& prompt);

    const std::vector<ChatMessage>& history() const noexcept { return history_; }

private:
    template <class Decision, class Parse>
    ChatOutcome<Decision> decide(const std::string& prompt, const std::string& format, Parse parse,
                                 Decision fallback);

    std::shared_ptr<ChatTransport> transport_;
    std::vector<ChatMessage> history_;
    int max_attempts_;
};

}  // namespace pmlab
