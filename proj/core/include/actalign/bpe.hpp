#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "actalign/action_tokens.hpp"

namespace actalign {

using Symbol = std::uint32_t;

struct SymbolSequence {
  std::vector<Symbol> symbols;

  std::size_t size() const noexcept { return symbols.size(); }
  bool operator==(const SymbolSequence&) const = default;
};

using MergePair = std::pair<TokenId, TokenId>;

// Ordered merge table over a base alphabet. Merge i creates id
// alphabet_size + i; its operands must already be defined.
class BpeVocab {
 public:
  BpeVocab() = default;
  BpeVocab(std::size_t alphabet_size, std::vector<MergePair> merges);

  std::size_t alphabet_size() const noexcept { return alphabet_size_; }
  std::size_t size() const noexcept { return alphabet_size_ + merges_.size(); }
  const std::vector<MergePair>& merges() const noexcept { return merges_; }

  // Merge rank of an adjacent pair, or -1 when the pair never merges.
  std::ptrdiff_t rank(TokenId left, TokenId right) const;

  // Alphabet symbols an id stands for.
  const std::vector<Symbol>& expansion(TokenId id) const;

  bool operator==(const BpeVocab& other) const {
    return alphabet_size_ == other.alphabet_size_ && merges_ == other.merges_;
  }

 private:
  std::size_t alphabet_size_ = 0;
  std::vector<MergePair> merges_;
  std::unordered_map<std::uint64_t, std::size_t> ranks_;
  std::vector<std::vector<Symbol>> expansions_;
};

// Greedy BPE training. Each round counts every adjacent pair occurrence,
// merges the most frequent pair (ties: smallest (left, right)) with a
// left-to-right non-overlapping pass, and stops at `target_vocab` ids or when
// no pair occurs at least twice.
BpeVocab bpe_train(std::span<const SymbolSequence> corpus, std::size_t alphabet_size, std::size_t target_vocab);

// Same result as applying each merge, in training order, as a full
// left-to-right pass.
ActionTokenSeq bpe_encode(const SymbolSequence& sequence, const BpeVocab& vocab);
SymbolSequence bpe_decode(const ActionTokenSeq& tokens, const BpeVocab& vocab);

}  // namespace actalign
