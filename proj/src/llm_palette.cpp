#include "pgvc/llm_palette.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "pgvc/error.hpp"
#include "pgvc/rng.hpp"

namespace pgvc {

namespace {

constexpr std::size_t kMaxTags = 16;
constexpr std::size_t kMaxTagLength = 64;

constexpr std::array<TagColor, 12> kTable{{
    {"sky", {135, 206, 235}},
    {"grass", {34, 139, 34}},
    {"sea", {0, 105, 148}},
    {"sand", {244, 164, 96}},
    {"skin", {224, 172, 105}},
    {"wood", {139, 90, 43}},
    {"road", {105, 105, 105}},
    {"sunset", {255, 99, 71}},
    {"snow", {255, 250, 250}},
    {"forest", {1, 68, 33}},
    {"brick", {178, 34, 34}},
    {"night", {25, 25, 112}},
}};

std::string trim_lower(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

Rgb to_unit(const std::array<long long, 3>& v) {
    Rgb out{};
    for (int c = 0; c < 3; ++c) out[c] = static_cast<double>(std::clamp<long long>(v[c], 0, 255)) / 255.0;
    return out;
}

std::string excerpt(std::string_view s) {
    constexpr std::size_t kMax = 200;
    std::string out(s.substr(0, kMax));
    if (s.size() > kMax) out += "...";
    return out;
}

}  // namespace

TagList::TagList(std::vector<std::string> tags) {
    for (std::string& t : tags) {
        t = trim_lower(std::move(t));
        if (t.empty()) throw InvalidArgument("tags must be non-empty");
        if (t.size() > kMaxTagLength) throw InvalidArgument("tag longer than 64 characters: " + t);
    }
    if (tags.empty()) throw InvalidArgument("at least one tag is required");
    if (tags.size() > kMaxTags) throw InvalidArgument("at most 16 tags are allowed");
    tags_ = std::move(tags);
}

TagList TagList::parse(std::string_view comma_separated) {
    std::vector<std::string> tags;
    std::string cur;
    std::istringstream is{std::string(comma_separated)};
    while (std::getline(is, cur, ',')) tags.push_back(cur);
    return TagList(std::move(tags));
}

std::string build_prompt(const TagList& tags) {
    std::string joined;
    for (std::size_t i = 0; i < tags.tags().size(); ++i) {
        if (i) joined += ", ";
        joined += tags.tags()[i];
    }
    std::string prompt;
    prompt += "[";
    prompt += kPromptVersion;
    prompt += "]\n";
    prompt += "You are choosing a color palette to colorize a grayscale video.\n";
    prompt += "Content tags: " + joined + "\n";
    prompt += "Return exactly 5 RGB colors that are natural for this content, as a JSON list of "
              "exactly 5 [r,g,b] integer triples with each value in 0-255, for example "
              "[[r,g,b],[r,g,b],[r,g,b],[r,g,b],[r,g,b]]. Output only the list.";
    return prompt;
}

std::optional<Palette> parse_palette_text(std::string_view text) {
    static const std::regex kFiveTriples(
        R"(\[\s*((?:\[\s*[-+]?\d+\s*,\s*[-+]?\d+\s*,\s*[-+]?\d+\s*\]\s*,\s*){4}\[\s*[-+]?\d+\s*,\s*[-+]?\d+\s*,\s*[-+]?\d+\s*\])\s*\])");
    static const std::regex kInt(R"([-+]?\d+)");
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(text.begin(), text.end(), m, kFiveTriples)) return std::nullopt;
    const std::string inner = m[1].str();
    std::vector<long long> values;
    for (auto it = std::sregex_iterator(inner.begin(), inner.end(), kInt); it != std::sregex_iterator(); ++it) {
        // Digits beyond long long range saturate; they clamp to 255 anyway.
        const std::string tok = it->str();
        const bool neg = tok.front() == '-';
        values.push_back(tok.size() > 12 ? (neg ? -1 : 256) : std::stoll(tok));
    }
    std::array<Rgb, kPaletteSize> colors{};
    for (std::size_t i = 0; i < kPaletteSize; ++i) colors[i] = to_unit({values[3 * i], values[3 * i + 1], values[3 * i + 2]});
    return Palette(colors);
}

std::string chat_request_body(const ChatEndpoint& endpoint, const TagList& tags) {
    nlohmann::ordered_json body;
    body["model"] = endpoint.model;
    body["temperature"] = 0;
    body["messages"] = nlohmann::json::array({
        {{"role", "system"}, {"content", "You reply with color palettes only."}},
        {{"role", "user"}, {"content", build_prompt(tags)}},
    });
    return body.dump();
}

Palette parse_chat_response(std::string_view body) {
    std::string content(body);
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("choices")) {
        try {
            content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            // Fall back to scanning the raw body.
        }
    }
    if (auto p = parse_palette_text(content)) return *p;
    throw FormatError("no list of 5 integer RGB triples in response: " + excerpt(content));
}

Palette request_colors(const ChatEndpoint& endpoint, const TagList& tags) {
    static const std::regex kUrl(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(endpoint.url, m, kUrl)) throw InvalidArgument("unsupported endpoint URL: " + endpoint.url);
    const std::string scheme_host = m[1].str() + "://" + m[2].str() + (m[3].matched ? ":" + m[3].str() : "");
    const std::string path = m[4].matched ? m[4].str() : "/";
#if !defined(PGVC_HAVE_OPENSSL)
    if (m[1].str() == "https") throw NetworkError("built without TLS support; cannot reach " + endpoint.url);
#endif

    httplib::Client client(scheme_host);
    const auto secs = static_cast<time_t>(endpoint.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    const std::string body = chat_request_body(endpoint, tags);

    std::string last_error;
    for (int attempt = 0; attempt <= std::max(endpoint.retries, 0); ++attempt) {
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "request to " + endpoint.url + " failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "endpoint returned HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
            continue;
        }
        return parse_chat_response(res->body);
    }
    throw NetworkError(last_error);
}

std::span<const TagColor> offline_color_table() { return kTable; }

Palette offline_lookup(const TagList& tags, std::uint64_t seed) {
    std::vector<Rgb> colors;
    for (const std::string& tag : tags.tags()) {
        for (const TagColor& entry : kTable) {
            if (entry.tag == tag) colors.push_back(to_unit({entry.rgb[0], entry.rgb[1], entry.rgb[2]}));
        }
    }
    Rng rng(seed);
    while (colors.size() < kPaletteSize) {
        const TagColor& entry = kTable[rng.index(kTable.size())];
        colors.push_back(to_unit({entry.rgb[0], entry.rgb[1], entry.rgb[2]}));
    }
    std::array<Rgb, kPaletteSize> out{};
    std::copy_n(colors.begin(), kPaletteSize, out.begin());
    return Palette(out);
}

}  // namespace pgvc
