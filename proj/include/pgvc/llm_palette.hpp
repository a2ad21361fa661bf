#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgvc/palette.hpp"

namespace pgvc {

/// 1-16 lowercase content tags, each 1-64 characters.
class TagList {
public:
    /// Lowercases, trims, then validates.
    explicit TagList(std::vector<std::string> tags);
    /// Splits a comma-separated list.
    static TagList parse(std::string_view comma_separated);

    const std::vector<std::string>& tags() const { return tags_; }

private:
    std::vector<std::string> tags_;
};

inline constexpr std::string_view kPromptVersion = "pgvc-palette-prompt/1";

std::string build_prompt(const TagList& tags);

/// First well-formed list of exactly five integer triples in `text`, clamped to 0-255
/// and scaled to [0,1]. Empty if none is present.
std::optional<Palette> parse_palette_text(std::string_view text);

struct ChatEndpoint {
    /// Full URL of the chat-completion resource, e.g. http://host:8080/v1/chat/completions.
    std::string url;
    std::string api_key;
    std::string model = "gpt-4o-mini";
    std::chrono::seconds timeout{30};
    int retries = 0;
};

/// JSON body sent to the endpoint.
std::string chat_request_body(const ChatEndpoint& endpoint, const TagList& tags);

/// Extracts the palette from a chat-completion response body. Throws FormatError
/// carrying an excerpt of the response when no 5-triple list is found.
Palette parse_chat_response(std::string_view body);

/// POSTs the prompt and parses the reply. Throws NetworkError or FormatError.
Palette request_colors(const ChatEndpoint& endpoint, const TagList& tags);

struct TagColor {
    std::string_view tag;
    std::array<int, 3> rgb;
};

/// The built-in tag table used by offline_lookup.
std::span<const TagColor> offline_color_table();

/// Deterministic, network-free palette from tags.
Palette offline_lookup(const TagList& tags, std::uint64_t seed);

}  // namespace pgvc
