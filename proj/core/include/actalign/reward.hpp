#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "actalign/action_tokens.hpp"

namespace actalign {

enum class ResponseDefect {
  missing_think,
  missing_answer,
  bad_order,
  missing_markers,
  foreign_text_in_answer,
  duplicate_blocks,
};

std::string to_string(ResponseDefect defect);

struct ParsedResponse {
  std::string think;
  ActionTokenSeq answer_tokens;
  std::optional<ResponseDefect> defect;

  bool well_formed() const noexcept { return !defect.has_value(); }
};

// Well-formed means, up to surrounding whitespace:
//   <think>BODY</think> <answer><|action_start|>TOKENS<|action_end|></answer>
// with exactly one of each block, whitespace only between the blocks, and
// nothing but action tokens between the markers (whitespace is allowed just
// inside the answer tags). Never throws; a malformed response still yields
// whatever tokens can be salvaged from its answer block, or from the whole
// text when there is no answer block.
ParsedResponse parse_response(std::string_view text);

// (1/m) * longest i with gen[0, i) == target[0, i); 0 when the first token
// differs. Throws DataError on an empty target.
double accuracy_reward(const ActionTokenSeq& generated, const ActionTokenSeq& target);

struct RewardBreakdown {
  int r_f = 0;
  double r_a = 0.0;
  double r = 0.0;
  std::optional<ResponseDefect> defect;
};

// r = (r_f + r_a) / 2. r_a is computed from salvaged tokens even when the
// format check fails.
RewardBreakdown score(std::string_view text, const ActionTokenSeq& target);

extern const std::string_view kRlSystemPrompt;

std::string render_user_prompt(std::string_view instruction);
// System prompt, blank line, user prompt.
std::string render_prompt(std::string_view instruction);

}  // namespace actalign
