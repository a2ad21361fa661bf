#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pgvc/error.hpp"
#include "pgvc/llm_palette.hpp"

using namespace pgvc;

namespace {

Rgb unit(int r, int g, int b) { return {r / 255.0, g / 255.0, b / 255.0}; }

// Minimal chat-completion server answering with a fixed assistant message.
class FakeChatServer {
public:
    FakeChatServer(std::string content, int status = 200) {
        server_.Post("/v1/chat/completions", [this, content, status](const httplib::Request& req, httplib::Response& res) {
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
            nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
            res.status = status;
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeChatServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

    std::string last_body;
    std::string last_auth;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("tag list validation") {
    CHECK(TagList::parse("Beach, SKY").tags() == std::vector<std::string>{"beach", "sky"});
    CHECK_THROWS_AS(TagList(std::vector<std::string>{}), InvalidArgument);
    CHECK_THROWS_AS(TagList::parse("a,,b"), InvalidArgument);
    CHECK_THROWS_AS(TagList({std::string(65, 'x')}), InvalidArgument);
    CHECK_THROWS_AS(TagList(std::vector<std::string>(17, "a")), InvalidArgument);
}

TEST_CASE("build_prompt") {
    const std::string p = build_prompt(TagList::parse("beach,sky"));
    CHECK(p.find("beach") != std::string::npos);
    CHECK(p.find("sky") != std::string::npos);
    CHECK(p.find("exactly 5 [r,g,b] integer triples") != std::string::npos);
    CHECK(p.find(kPromptVersion) != std::string::npos);
    CHECK(p == build_prompt(TagList::parse("beach,sky")));

    std::vector<std::string> many;
    std::string joined;
    for (int i = 0; i < 16; ++i) {
        many.push_back("tag" + std::to_string(i));
        joined += (i ? ", " : "") + many.back();
    }
    CHECK(build_prompt(TagList(many)).find(joined) != std::string::npos);
}

TEST_CASE("palette text parsing") {
    const auto p = parse_palette_text(
        "Sure! Here you go: [[135,206,235],[244,164,96],[0,105,148],[255,255,240],[34,139,34]] enjoy.");
    REQUIRE(p.has_value());
    CHECK(*p == Palette({unit(135, 206, 235), unit(244, 164, 96), unit(0, 105, 148), unit(255, 255, 240), unit(34, 139, 34)}));

    CHECK_FALSE(parse_palette_text("[[1,2,3],[4,5,6],[7,8,9],[10,11,12]]").has_value());
    CHECK_FALSE(parse_palette_text("[[1,2,3],[4,5,6],[7,8,9],[10,11,12],[1,1,1],[2,2,2]]").has_value());
    CHECK_FALSE(parse_palette_text("no colors here").has_value());
    CHECK_FALSE(parse_palette_text("[[1.5,2,3],[4,5,6],[7,8,9],[10,11,12],[1,1,1]]").has_value());

    const auto clamped = parse_palette_text("[[300,0,0],[-5,0,0],[0,0,0],[0,0,0],[0,0,0]]");
    REQUIRE(clamped.has_value());
    CHECK((*clamped)[4] == Rgb{1.0, 0.0, 0.0});
    CHECK((*clamped)[0] == Rgb{0.0, 0.0, 0.0});

    // First valid list wins, prose and a broken list before it are skipped.
    const auto first = parse_palette_text(
        "bad [[1,2],[3]] then [ [10,10,10] , [20,20,20],[30,30,30],[40,40,40],[50,50,50] ] and "
        "[[200,200,200],[200,200,200],[200,200,200],[200,200,200],[200,200,200]]");
    REQUIRE(first.has_value());
    CHECK((*first)[0] == unit(10, 10, 10));
}

TEST_CASE("chat response parsing") {
    nlohmann::json ok = {{"choices", {{{"message", {{"content", "[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[255,0,0]]"}}}}}}};
    CHECK(parse_chat_response(ok.dump())[4] == Rgb{1, 0, 0});
    nlohmann::json bad = {{"choices", {{{"message", {{"content", "I cannot help with that."}}}}}}};
    try {
        parse_chat_response(bad.dump());
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("I cannot help") != std::string::npos);
    }
}

TEST_CASE("request_colors against a local endpoint") {
    SUBCASE("success") {
        FakeChatServer server("Palette: [[135,206,235],[244,164,96],[0,105,148],[255,255,240],[34,139,34]]");
        ChatEndpoint ep{server.url(), "secret-key", "test-model", std::chrono::seconds(5), 0};
        const Palette p = request_colors(ep, TagList::parse("beach,sky"));
        CHECK(p[4] == unit(255, 255, 240));
        const auto body = nlohmann::json::parse(server.last_body);
        CHECK(body["model"] == "test-model");
        CHECK(body["temperature"] == 0);
        CHECK(body["messages"][1]["content"] == build_prompt(TagList::parse("beach,sky")));
        CHECK(server.last_auth == "Bearer secret-key");
    }
    SUBCASE("malformed reply") {
        FakeChatServer server("[[1,2,3],[4,5,6],[7,8,9],[10,11,12]]");
        ChatEndpoint ep{server.url(), "", "m", std::chrono::seconds(5), 0};
        CHECK_THROWS_AS(request_colors(ep, TagList::parse("sky")), FormatError);
    }
    SUBCASE("http error") {
        FakeChatServer server("irrelevant", 500);
        ChatEndpoint ep{server.url(), "", "m", std::chrono::seconds(5), 1};
        CHECK_THROWS_AS(request_colors(ep, TagList::parse("sky")), NetworkError);
    }
    SUBCASE("unreachable") {
        ChatEndpoint ep{"http://127.0.0.1:1/v1/chat/completions", "", "m", std::chrono::seconds(2), 0};
        CHECK_THROWS_AS(request_colors(ep, TagList::parse("sky")), NetworkError);
    }
}

TEST_CASE("offline lookup") {
    const Palette sky = offline_lookup(TagList::parse("sky"), 1);
    CHECK(std::find(sky.colors().begin(), sky.colors().end(), unit(135, 206, 235)) != sky.colors().end());
    CHECK(offline_lookup(TagList::parse("sky,grass"), 9) == offline_lookup(TagList::parse("sky,grass"), 9));

    const Palette unknown = offline_lookup(TagList::parse("spaceship"), 3);
    CHECK(unknown == offline_lookup(TagList::parse("spaceship"), 3));
    for (const Rgb& c : unknown.colors()) {
        bool in_table = false;
        for (const TagColor& e : offline_color_table()) in_table |= unit(e.rgb[0], e.rgb[1], e.rgb[2]) == c;
        CHECK(in_table);
    }
    CHECK(offline_color_table().size() == 12);

    // More than five matches truncate to the first five tags.
    const Palette six = offline_lookup(TagList::parse("sky,grass,sea,sand,skin,wood"), 0);
    CHECK(std::find(six.colors().begin(), six.colors().end(), unit(139, 90, 43)) == six.colors().end());
}
