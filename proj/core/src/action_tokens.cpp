#include "actalign/action_tokens.hpp"

#include <charconv>

#include "actalign/error.hpp"

namespace actalign {

namespace {
constexpr std::string_view kTokenPrefix = "<|action_";
constexpr std::string_view kTokenSuffix = "|>";
}  // namespace

std::string render_action_token(TokenId id) {
  std::string out(kTokenPrefix);
  out += std::to_string(id);
  out += kTokenSuffix;
  return out;
}

std::string render_action_tokens(const ActionTokenSeq& tokens, bool with_markers) {
  std::string out;
  if (with_markers) out += kActionStart;
  for (TokenId id : tokens.ids) out += render_action_token(id);
  if (with_markers) out += kActionEnd;
  return out;
}

std::optional<TokenMatch> match_action_token(std::string_view text, std::size_t pos) {
  if (pos > text.size() || text.substr(pos, kTokenPrefix.size()) != kTokenPrefix) return std::nullopt;
  const std::size_t digits_begin = pos + kTokenPrefix.size();
  std::size_t digits_end = digits_begin;
  while (digits_end < text.size() && text[digits_end] >= '0' && text[digits_end] <= '9') ++digits_end;
  const std::size_t n_digits = digits_end - digits_begin;
  if (n_digits == 0 || (n_digits > 1 && text[digits_begin] == '0')) return std::nullopt;
  if (text.substr(digits_end, kTokenSuffix.size()) != kTokenSuffix) return std::nullopt;

  TokenId id = 0;
  const auto [ptr, ec] = std::from_chars(text.data() + digits_begin, text.data() + digits_end, id);
  if (ec != std::errc() || ptr != text.data() + digits_end) return std::nullopt;
  return TokenMatch{id, digits_end + kTokenSuffix.size() - pos};
}

ActionTokenSeq parse_action_tokens(std::string_view text, bool with_markers) {
  if (with_markers) {
    if (!text.starts_with(kActionStart) || !text.ends_with(kActionEnd) ||
        text.size() < kActionStart.size() + kActionEnd.size()) {
      throw DataError("action token text lacks start/end markers");
    }
    text = text.substr(kActionStart.size(), text.size() - kActionStart.size() - kActionEnd.size());
  }
  ActionTokenSeq seq;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto m = match_action_token(text, pos);
    if (!m) throw DataError("unexpected text in action token sequence at offset " + std::to_string(pos));
    seq.ids.push_back(m->id);
    pos += m->length;
  }
  return seq;
}

}  // namespace actalign
