#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace actalign {

using TokenId = std::uint32_t;

// Action-token ids as emitted by the tokenizer. Start/end markers are not
// part of the sequence; they live outside the [0, V) id range.
struct ActionTokenSeq {
  std::vector<TokenId> ids;

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  bool operator==(const ActionTokenSeq&) const = default;
};

inline constexpr std::string_view kActionStart = "<|action_start|>";
inline constexpr std::string_view kActionEnd = "<|action_end|>";

// "<|action_N|>" with N in plain decimal.
std::string render_action_token(TokenId id);

// Concatenated tokens; wrapped in start/end markers when `with_markers`.
std::string render_action_tokens(const ActionTokenSeq& tokens, bool with_markers = true);

struct TokenMatch {
  TokenId id;
  std::size_t length;
};

// Recognizes "<|action_N|>" at `pos`. N must be canonical decimal (no sign,
// no leading zeros) and fit in 32 bits.
std::optional<TokenMatch> match_action_token(std::string_view text, std::size_t pos);

// Inverse of render_action_tokens. Throws DataError on anything else.
ActionTokenSeq parse_action_tokens(std::string_view text, bool with_markers = true);

}  // namespace actalign
