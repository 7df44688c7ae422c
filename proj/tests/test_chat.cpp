#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <httplib.h>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "pmlab/chat.hpp"
#include "pmlab/error.hpp"
#include "pmlab/protocol.hpp"

using namespace pmlab;
using json = nlohmann::json;

namespace {

std::string fixture(const std::string& name) {
    std::ifstream in(std::string(PMLAB_FIXTURE_DIR) + "/" + name, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string completion(const std::string& content) {
    return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

/// A local chat-completions endpoint whose replies come from a callback.
class MockEndpoint {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    explicit MockEndpoint(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mutex_);
                requests_.push_back(req.body);
                auth_.push_back(req.get_header_value("Authorization"));
            }
            handler_(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }

    EndpointConfig config(const std::string& credential_env = "PMLAB_TEST_UNSET_CREDENTIAL") const {
        EndpointConfig c;
        c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
        c.model = "test-model";
        c.credential_env = credential_env;
        c.timeout_seconds = 5;
        return c;
    }
    std::vector<std::string> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }
    std::vector<std::string> auth() const {
        std::lock_guard lock(mutex_);
        return auth_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    mutable std::mutex mutex_;
    std::vector<std::string> requests_;
    std::vector<std::string> auth_;
};

}  // namespace

TEST(Transport, RequestBodyShape) {
    const std::string body =
        HttpChatTransport::request_body("m", {{"system", "s"}, {"user", "u"}}, trade_response_format());
    const json doc = json::parse(body);
    EXPECT_EQ(doc["model"], "m");
    ASSERT_EQ(doc["messages"].size(), 2u);
    EXPECT_EQ(doc["messages"][1]["role"], "user");
    EXPECT_EQ(doc["response_format"]["type"], "json_schema");
}

TEST(Transport, ExtractContent) {
    EXPECT_EQ(HttpChatTransport::extract_content(completion("hi")), "hi");
    EXPECT_THROW(HttpChatTransport::extract_content("<html>"), Error);
    EXPECT_THROW(HttpChatTransport::extract_content(R"({"choices": []})"), Error);
}

TEST(Transport, EchoesFixedDocument) {
    MockEndpoint mock([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion(fixture("round1_response.json")), "application/json");
    });
    auto transport = std::make_shared<HttpChatTransport>(mock.config());
    ChatAgent agent(transport, "system text");
    const ChatOutcome<TradeDecision> out = agent.decide_trade("round prompt");
    EXPECT_FALSE(out.exhausted);
    ASSERT_EQ(out.attempts.size(), 1u);
    EXPECT_EQ(out.decision, parse_trade_response(fixture("round1_response.json")));

    const json sent = json::parse(mock.requests().at(0));
    EXPECT_EQ(sent["model"], "test-model");
    EXPECT_EQ(sent["messages"][0]["content"], "system text");
    EXPECT_EQ(sent["messages"][1]["content"], "round prompt");
    EXPECT_EQ(mock.auth().at(0), "");  // no credential variable set
}

TEST(Transport, CredentialComesFromEnvironment) {
    ::setenv("PMLAB_TEST_CREDENTIAL", "sk-test-123", 1);
    MockEndpoint mock([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion(R"({"risky_allocation_pct": 0.55})"), "application/json");
    });
    HttpChatTransport transport(mock.config("PMLAB_TEST_CREDENTIAL"));
    transport.complete({{"user", "x"}}, "");
    ::unsetenv("PMLAB_TEST_CREDENTIAL");
    EXPECT_EQ(mock.auth().at(0), "Bearer sk-test-123");
}

TEST(ChatAgent, GarbageTwiceThenValid) {
    std::atomic<int> calls{0};
    MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) {
        const int n = calls++;
        if (n == 0) res.set_content(completion("I think the price is low."), "application/json");
        if (n == 1) res.set_content(completion(R"({"probability_estimate": 2.0, "orders": [], "replace_decision": "Add"})"),
                                    "application/json");
        if (n >= 2) res.set_content(completion(fixture("round1_response.json")), "application/json");
    });
    ChatAgent agent(std::make_shared<HttpChatTransport>(mock.config()), "sys");
    const ChatOutcome<TradeDecision> out = agent.decide_trade("prompt");
    EXPECT_FALSE(out.exhausted);
    ASSERT_EQ(out.attempts.size(), 3u);
    EXPECT_NE(out.attempts[0].error.find("MalformedDocument"), std::string::npos) << out.attempts[0].error;
    EXPECT_NE(out.attempts[1].error.find("OutOfRangeValue"), std::string::npos) << out.attempts[1].error;
    EXPECT_TRUE(out.attempts[2].error.empty());
    EXPECT_EQ(out.decision.orders.size(), 3u);

    // Failed replies never enter the conversation.
    ASSERT_EQ(agent.history().size(), 3u);
    EXPECT_EQ(agent.history()[2].role, "assistant");
    EXPECT_EQ(agent.history()[2].content, out.attempts[2].raw);
}

TEST(ChatAgent, AlwaysFailingDegradesToNoOp) {
    MockEndpoint mock([](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("overloaded", "text/plain");
    });
    ChatAgent agent(std::make_shared<HttpChatTransport>(mock.config()), "sys", 3);
    const ChatOutcome<TradeDecision> out = agent.decide_trade("prompt");
    EXPECT_TRUE(out.exhausted);
    EXPECT_EQ(out.attempts.size(), 3u);
    EXPECT_EQ(out.decision, TradeDecision::no_op());
    for (const ChatAttempt& a : out.attempts) EXPECT_NE(a.error.find("TransportError"), std::string::npos);

    const ChatOutcome<AllocationDecision> alloc = agent.decide_allocation("post");
    EXPECT_TRUE(alloc.exhausted);
    EXPECT_EQ(alloc.decision.risky_allocation_pct, 0.0);
}

TEST(ChatAgent, HistoryGrowsAcrossRounds) {
    MockEndpoint mock([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion(fixture("round1_response.json")), "application/json");
    });
    ChatAgent agent(std::make_shared<HttpChatTransport>(mock.config()), "sys");
    agent.decide_trade("round 1");
    agent.decide_trade("round 2");
    const json second = json::parse(mock.requests().at(1));
    ASSERT_EQ(second["messages"].size(), 4u);
    EXPECT_EQ(second["messages"][2]["role"], "assistant");
    EXPECT_EQ(second["messages"][3]["content"], "round 2");
}

TEST(Transport, UnreachableEndpointThrows) {
    int port = 0;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }  // closed again
    EndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    c.timeout_seconds = 2;
    HttpChatTransport t(c);
    try {
        t.complete({{"user", "x"}}, "");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TransportError);
    }
}
