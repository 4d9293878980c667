#include "actalign/bpe.hpp"

#include <string>

#include "actalign/error.hpp"

namespace actalign {

namespace {

constexpr std::uint64_t pair_key(TokenId left, TokenId right) noexcept {
  return (static_cast<std::uint64_t>(left) << 32) | right;
}

// Rewrites every non-overlapping occurrence of (left, right), scanning left
// to right.
void apply_merge(std::vector<TokenId>& seq, TokenId left, TokenId right, TokenId merged) {
  if (seq.size() < 2) return;
  std::size_t write = 0;
  std::size_t read = 0;
  while (read < seq.size()) {
    if (read + 1 < seq.size() && seq[read] == left && seq[read + 1] == right) {
      seq[write++] = merged;
      read += 2;
    } else {
      seq[write++] = seq[read++];
    }
  }
  seq.resize(write);
}

}  // namespace

BpeVocab::BpeVocab(std::size_t alphabet_size, std::vector<MergePair> merges)
    : alphabet_size_(alphabet_size), merges_(std::move(merges)) {
  if (alphabet_size_ == 0) throw DataError("BPE alphabet must be non-empty");
  expansions_.reserve(size());
  for (std::size_t s = 0; s < alphabet_size_; ++s) expansions_.push_back({static_cast<Symbol>(s)});
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    const auto [left, right] = merges_[i];
    const std::size_t defined = alphabet_size_ + i;
    if (left >= defined || right >= defined) {
      throw DataError("BPE merge " + std::to_string(i) + " refers to an undefined id");
    }
    if (!ranks_.emplace(pair_key(left, right), i).second) {
      throw DataError("BPE merge " + std::to_string(i) + " duplicates an earlier pair");
    }
    std::vector<Symbol> joined = expansions_[left];
    joined.insert(joined.end(), expansions_[right].begin(), expansions_[right].end());
    expansions_.push_back(std::move(joined));
  }
}

std::ptrdiff_t BpeVocab::rank(TokenId left, TokenId right) const {
  const auto it = ranks_.find(pair_key(left, right));
  return it == ranks_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

const std::vector<Symbol>& BpeVocab::expansion(TokenId id) const {
  if (id >= expansions_.size()) throw DataError("unknown action token id " + std::to_string(id));
  return expansions_[id];
}

BpeVocab bpe_train(std::span<const SymbolSequence> corpus, std::size_t alphabet_size, std::size_t target_vocab) {
  if (target_vocab <= alphabet_size) {
    throw ConfigError("target vocab " + std::to_string(target_vocab) + " must exceed alphabet size " +
                      std::to_string(alphabet_size));
  }
  if (corpus.empty()) throw DataError("BPE training corpus is empty");

  std::vector<std::vector<TokenId>> work;
  work.reserve(corpus.size());
  for (const auto& seq : corpus) {
    for (Symbol s : seq.symbols) {
      if (s >= alphabet_size) throw DataError("corpus symbol " + std::to_string(s) + " outside alphabet");
    }
    work.emplace_back(seq.symbols.begin(), seq.symbols.end());
  }

  std::vector<MergePair> merges;
  std::unordered_map<std::uint64_t, std::size_t> counts;
  while (alphabet_size + merges.size() < target_vocab) {
    counts.clear();
    for (const auto& seq : work) {
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) ++counts[pair_key(seq[i], seq[i + 1])];
    }
    std::uint64_t best_key = 0;
    std::size_t best_count = 0;
    for (const auto& [key, count] : counts) {
      if (count > best_count || (count == best_count && key < best_key)) {
        best_key = key;
        best_count = count;
      }
    }
    if (best_count < 2) break;

    const auto left = static_cast<TokenId>(best_key >> 32);
    const auto right = static_cast<TokenId>(best_key & 0xffffffffULL);
    const auto merged = static_cast<TokenId>(alphabet_size + merges.size());
    for (auto& seq : work) apply_merge(seq, left, right, merged);
    merges.emplace_back(left, right);
  }
  return BpeVocab(alphabet_size, std::move(merges));
}

ActionTokenSeq bpe_encode(const SymbolSequence& sequence, const BpeVocab& vocab) {
  std::vector<TokenId> seq(sequence.symbols.begin(), sequence.symbols.end());
  for (Symbol s : seq) {
    if (s >= vocab.alphabet_size()) throw DataError("symbol " + std::to_string(s) + " outside BPE alphabet");
  }
  // A pair can only be created by a merge ranked below its own, so repeatedly
  // applying the lowest-ranked pair present reproduces the in-order passes
  // while skipping merges that cannot fire.
  while (seq.size() >= 2) {
    std::ptrdiff_t best = -1;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      const auto r = vocab.rank(seq[i], seq[i + 1]);
      if (r >= 0 && (best < 0 || r < best)) best = r;
    }
    if (best < 0) break;
    const auto [left, right] = vocab.merges()[static_cast<std::size_t>(best)];
    apply_merge(seq, left, right, static_cast<TokenId>(vocab.alphabet_size() + static_cast<std::size_t>(best)));
  }
  return ActionTokenSeq{std::move(seq)};
}

SymbolSequence bpe_decode(const ActionTokenSeq& tokens, const BpeVocab& vocab) {
  SymbolSequence out;
  for (TokenId id : tokens.ids) {
    const auto& exp = vocab.expansion(id);
    out.symbols.insert(out.symbols.end(), exp.begin(), exp.end());
  }
  return out;
}

}  // namespace actalign
