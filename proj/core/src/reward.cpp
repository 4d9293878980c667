#include "actalign/reward.hpp"

#include <algorithm>

#include "actalign/error.hpp"

namespace actalign {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool blank(std::string_view s) { return std::all_of(s.begin(), s.end(), is_space); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

ActionTokenSeq salvage_tokens(std::string_view text) {
  ActionTokenSeq seq;
  std::size_t pos = 0;
  while ((pos = text.find("<|action_", pos)) != std::string_view::npos) {
    if (auto m = match_action_token(text, pos)) {
      seq.ids.push_back(m->id);
      pos += m->length;
    } else {
      ++pos;
    }
  }
  return seq;
}

}  // namespace

std::string to_string(ResponseDefect defect) {
  switch (defect) {
    case ResponseDefect::missing_think: return "missing_think";
    case ResponseDefect::missing_answer: return "missing_answer";
    case ResponseDefect::bad_order: return "bad_order";
    case ResponseDefect::missing_markers: return "missing_markers";
    case ResponseDefect::foreign_text_in_answer: return "foreign_text_in_answer";
    case ResponseDefect::duplicate_blocks: return "duplicate_blocks";
  }
  return "unknown";
}

ParsedResponse parse_response(std::string_view text) {
  ParsedResponse out;
  constexpr auto npos = std::string_view::npos;

  const auto t_open = text.find(kThinkOpen);
  const auto t_close = t_open == npos ? npos : text.find(kThinkClose, t_open + kThinkOpen.size());
  const auto a_open = text.find(kAnswerOpen);
  const auto a_close = a_open == npos ? npos : text.find(kAnswerClose, a_open + kAnswerOpen.size());

  const bool has_think = t_close != npos;
  const bool has_answer = a_close != npos;
  std::string_view body = text;
  if (has_answer) body = text.substr(a_open + kAnswerOpen.size(), a_close - a_open - kAnswerOpen.size());
  out.answer_tokens = salvage_tokens(body);
  if (has_think) out.think = std::string(text.substr(t_open + kThinkOpen.size(), t_close - t_open - kThinkOpen.size()));

  if (!has_think) {
    out.defect = ResponseDefect::missing_think;
    return out;
  }
  if (!has_answer) {
    out.defect = ResponseDefect::missing_answer;
    return out;
  }
  if (count_of(text, kThinkOpen) > 1 || count_of(text, kThinkClose) > 1 || count_of(text, kAnswerOpen) > 1 ||
      count_of(text, kAnswerClose) > 1) {
    out.defect = ResponseDefect::duplicate_blocks;
    return out;
  }
  const auto think_end = t_close + kThinkClose.size();
  const auto answer_end = a_close + kAnswerClose.size();
  if (a_open < think_end || !blank(text.substr(0, t_open)) || !blank(text.substr(think_end, a_open - think_end)) ||
      !blank(text.substr(answer_end))) {
    out.defect = ResponseDefect::bad_order;
    return out;
  }

  const auto inner = trim(body);
  if (!inner.starts_with(kActionStart) || !inner.ends_with(kActionEnd) ||
      inner.size() < kActionStart.size() + kActionEnd.size()) {
    out.defect = ResponseDefect::missing_markers;
    return out;
  }
  const auto payload = inner.substr(kActionStart.size(), inner.size() - kActionStart.size() - kActionEnd.size());
  std::size_t pos = 0;
  while (pos < payload.size()) {
    const auto m = match_action_token(payload, pos);
    if (!m) {
      out.defect = ResponseDefect::foreign_text_in_answer;
      return out;
    }
    pos += m->length;
  }
  return out;
}

double accuracy_reward(const ActionTokenSeq& generated, const ActionTokenSeq& target) {
  if (target.empty()) throw DataError("accuracy reward needs a non-empty target");
  const auto [gen_it, target_it] = std::mismatch(generated.ids.begin(), generated.ids.end(), target.ids.begin(),
                                                 target.ids.end());
  const auto matched = static_cast<std::size_t>(target_it - target.ids.begin());
  return static_cast<double>(matched) / static_cast<double>(target.size());
}

RewardBreakdown score(std::string_view text, const ActionTokenSeq& target) {
  const auto parsed = parse_response(text);
  RewardBreakdown out;
  out.r_f = parsed.well_formed() ? 1 : 0;
  out.r_a = accuracy_reward(parsed.answer_tokens, target);
  out.r = (static_cast<double>(out.r_f) + out.r_a) / 2.0;
  out.defect = parsed.defect;
  return out;
}

const std::string_view kRlSystemPrompt =
    "You are an embodied vision-language robotic assistant for multi-object manipulation. The assistant first "
    "thinks about the reasoning process in the mind and then provides the user with the answer. The reasoning "
    "process and answer are enclosed within <think> </think> and <answer> </answer> tags, respectively.";

std::string render_user_prompt(std::string_view instruction) {
  std::string out = "Your current task is ";
  out += instruction;
  out += ". Output the robot's actions to perform this task through FAST tokens.";
  return out;
}

std::string render_prompt(std::string_view instruction) {
  std::string out(kRlSystemPrompt);
  out += "\n\n";
  out += render_user_prompt(instruction);
  return out;
}

}  // namespace actalign
