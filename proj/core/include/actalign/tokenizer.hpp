#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "actalign/action_tokens.hpp"
#include "actalign/bpe.hpp"
#include "actalign/dct.hpp"
#include "actalign/traj_data.hpp"

namespace actalign {

// Quantized coefficients, already shifted into the symbol alphabet [0, 2B).
struct QuantizedGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Symbol> symbols;  // row-major, row = frequency

  bool operator==(const QuantizedGrid&) const = default;
};

inline constexpr double kDefaultGamma = 64.0;
inline constexpr std::uint32_t kDefaultClampRadius = 128;
inline constexpr std::size_t kDefaultVocabSize = 2048;
inline constexpr std::size_t kDefaultHorizon = 8;

// q = clamp(round_half_even(gamma * C), -B, B - 1) + B
QuantizedGrid quantize(const CoefficientGrid& grid, double gamma, std::uint32_t clamp_radius = kDefaultClampRadius);
CoefficientGrid dequantize(const QuantizedGrid& grid, double gamma, std::uint32_t clamp_radius = kDefaultClampRadius);

// True when every scaled coefficient survives quantization without clamping.
bool within_clamp(const CoefficientGrid& grid, double gamma, std::uint32_t clamp_radius = kDefaultClampRadius);

// Frequency-major: all dims of frequency 0, then frequency 1, ...
SymbolSequence flatten(const QuantizedGrid& grid);
// Throws DataError("malformed action: ...") when the count is not rows * cols.
QuantizedGrid unflatten(const SymbolSequence& sequence, std::size_t rows, std::size_t cols);

struct RoundTrip {
  ActionTokenSeq tokens;
  ActionChunk reconstructed;
  double rmse_normalized = 0.0;  // per-entry RMSE in normalized units
};

struct TokenizerConfig {
  std::size_t horizon = kDefaultHorizon;
  std::size_t dims = kDefaultDims;
  double gamma = kDefaultGamma;
  std::uint32_t clamp_radius = kDefaultClampRadius;
  std::size_t vocab_size = kDefaultVocabSize;
  double percentile = kDefaultPercentile;
};

// Frozen FAST pipeline: normalization stats, quantization scale and BPE merge
// table. Immutable once built; encode/decode are const.
class ActionTokenizer {
 public:
  static constexpr int kFormatVersion = 1;

  ActionTokenizer(NormStats stats, TokenizerConfig config, BpeVocab vocab);

  // Fits norm stats on `trajectories`, cuts chunks of config.horizon and
  // trains BPE on their symbol sequences.
  static ActionTokenizer train(std::span<const Trajectory> trajectories, const TokenizerConfig& config);
  static ActionTokenizer train_on_chunks(std::span<const ActionChunk> chunks, NormStats stats,
                                         const TokenizerConfig& config);

  // normalize -> dct2 -> quantize -> flatten
  SymbolSequence symbols(const ActionChunk& chunk) const;
  // unflatten -> dequantize -> idct2 -> denormalize
  ActionChunk chunk_from_symbols(const SymbolSequence& symbols) const;

  ActionTokenSeq tokenize(const ActionChunk& chunk) const;
  ActionChunk detokenize(const ActionTokenSeq& tokens) const;

  RoundTrip round_trip(const ActionChunk& chunk) const;

  // Reconstruction from a token prefix; missing symbols take the zero code.
  // Stays in normalized units.
  ActionChunk reconstruct_prefix_normalized(const ActionTokenSeq& prefix) const;

  const NormStats& stats() const noexcept { return stats_; }
  const TokenizerConfig& config() const noexcept { return config_; }
  const BpeVocab& vocab() const noexcept { return vocab_; }
  std::size_t alphabet_size() const noexcept { return 2 * static_cast<std::size_t>(config_.clamp_radius); }
  Symbol zero_code() const noexcept { return config_.clamp_radius; }

  nlohmann::json to_json() const;
  static ActionTokenizer from_json(const nlohmann::json& j);

  void save(const std::filesystem::path& path) const;
  static ActionTokenizer load(const std::filesystem::path& path);

 private:
  void check_chunk(const ActionChunk& chunk) const;

  NormStats stats_;
  TokenizerConfig config_;
  BpeVocab vocab_;
};

}  // namespace actalign
