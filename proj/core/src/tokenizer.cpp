#include "actalign/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "actalign/error.hpp"

namespace actalign {

QuantizedGrid quantize(const CoefficientGrid& grid, double gamma, std::uint32_t clamp_radius) {
  if (!(gamma > 0.0)) throw ConfigError("quantization scale gamma must be positive");
  const double lo = -static_cast<double>(clamp_radius);
  const double hi = static_cast<double>(clamp_radius) - 1.0;
  QuantizedGrid out{grid.rows(), grid.cols(), {}};
  out.symbols.reserve(grid.size());
  for (double c : grid.values()) {
    // nearbyint honours the default FE_TONEAREST mode: ties go to even.
    const double q = std::clamp(std::nearbyint(gamma * c), lo, hi);
    out.symbols.push_back(static_cast<Symbol>(static_cast<std::int64_t>(q) + clamp_radius));
  }
  return out;
}

CoefficientGrid dequantize(const QuantizedGrid& grid, double gamma, std::uint32_t clamp_radius) {
  if (!(gamma > 0.0)) throw ConfigError("quantization scale gamma must be positive");
  std::vector<double> values;
  values.reserve(grid.symbols.size());
  for (Symbol s : grid.symbols) {
    if (s >= 2 * clamp_radius) throw DataError("symbol " + std::to_string(s) + " outside quantization alphabet");
    values.push_back(static_cast<double>(static_cast<std::int64_t>(s) - clamp_radius) / gamma);
  }
  return CoefficientGrid(grid.rows, grid.cols, std::move(values));
}

bool within_clamp(const CoefficientGrid& grid, double gamma, std::uint32_t clamp_radius) {
  const double lo = -static_cast<double>(clamp_radius);
  const double hi = static_cast<double>(clamp_radius) - 1.0;
  return std::all_of(grid.values().begin(), grid.values().end(), [&](double c) {
    const double q = std::nearbyint(gamma * c);
    return q >= lo && q <= hi;
  });
}

SymbolSequence flatten(const QuantizedGrid& grid) {
  // Row-major storage with frequency rows is already frequency-major order.
  return SymbolSequence{grid.symbols};
}

QuantizedGrid unflatten(const SymbolSequence& sequence, std::size_t rows, std::size_t cols) {
  if (sequence.size() != rows * cols) {
    throw DataError("malformed action: decoded " + std::to_string(sequence.size()) + " symbols, expected " +
                    std::to_string(rows * cols));
  }
  return QuantizedGrid{rows, cols, sequence.symbols};
}

ActionTokenizer::ActionTokenizer(NormStats stats, TokenizerConfig config, BpeVocab vocab)
    : stats_(std::move(stats)), config_(config), vocab_(std::move(vocab)) {
  if (config_.horizon == 0 || config_.dims == 0) throw ConfigError("tokenizer horizon and dims must be >= 1");
  if (!(config_.gamma > 0.0)) throw ConfigError("tokenizer gamma must be positive");
  if (config_.clamp_radius == 0) throw ConfigError("tokenizer clamp radius must be >= 1");
  if (stats_.dims() != config_.dims) throw DataError("tokenizer norm stats dimension does not match D");
  if (vocab_.alphabet_size() != alphabet_size()) throw DataError("BPE alphabet does not match 2 * clamp radius");
  if (vocab_.size() > config_.vocab_size) throw DataError("BPE vocabulary exceeds the configured budget");
}

ActionTokenizer ActionTokenizer::train(std::span<const Trajectory> trajectories, const TokenizerConfig& config) {
  auto stats = fit_norm_stats(trajectories, config.percentile);
  if (stats.dims() != config.dims) {
    throw DataError("trajectories have D=" + std::to_string(stats.dims()) + " but tokenizer expects D=" +
                    std::to_string(config.dims));
  }
  const auto chunks = extract_chunks(trajectories, config.horizon);
  return train_on_chunks(chunks, std::move(stats), config);
}

ActionTokenizer ActionTokenizer::train_on_chunks(std::span<const ActionChunk> chunks, NormStats stats,
                                                 const TokenizerConfig& config) {
  if (chunks.empty()) throw DataError("no complete chunks of horizon " + std::to_string(config.horizon));
  // Placeholder vocab lets us reuse symbols() before BPE exists.
  ActionTokenizer staging(stats, config, BpeVocab(2 * static_cast<std::size_t>(config.clamp_radius), {}));
  std::vector<SymbolSequence> corpus;
  corpus.reserve(chunks.size());
  for (const auto& c : chunks) corpus.push_back(staging.symbols(c));
  auto vocab = bpe_train(corpus, staging.alphabet_size(), config.vocab_size);
  return ActionTokenizer(std::move(stats), config, std::move(vocab));
}

void ActionTokenizer::check_chunk(const ActionChunk& chunk) const {
  if (chunk.rows() != config_.horizon || chunk.cols() != config_.dims) {
    throw DataError("chunk shape " + std::to_string(chunk.rows()) + "x" + std::to_string(chunk.cols()) +
                    " does not match tokenizer " + std::to_string(config_.horizon) + "x" +
                    std::to_string(config_.dims));
  }
}

SymbolSequence ActionTokenizer::symbols(const ActionChunk& chunk) const {
  check_chunk(chunk);
  return flatten(quantize(dct2(normalize_chunk(chunk, stats_)), config_.gamma, config_.clamp_radius));
}

ActionChunk ActionTokenizer::chunk_from_symbols(const SymbolSequence& symbols) const {
  const auto grid = unflatten(symbols, config_.horizon, config_.dims);
  return denormalize_chunk(idct2(dequantize(grid, config_.gamma, config_.clamp_radius)), stats_);
}

ActionTokenSeq ActionTokenizer::tokenize(const ActionChunk& chunk) const { return bpe_encode(symbols(chunk), vocab_); }

ActionChunk ActionTokenizer::detokenize(const ActionTokenSeq& tokens) const {
  return chunk_from_symbols(bpe_decode(tokens, vocab_));
}

RoundTrip ActionTokenizer::round_trip(const ActionChunk& chunk) const {
  RoundTrip out;
  out.tokens = tokenize(chunk);
  out.reconstructed = detokenize(out.tokens);
  const auto a = normalize_chunk(chunk, stats_);
  const auto b = normalize_chunk(out.reconstructed, stats_);
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a.values()[i] - b.values()[i]) * (a.values()[i] - b.values()[i]);
  out.rmse_normalized = std::sqrt(sq / static_cast<double>(a.size()));
  return out;
}

ActionChunk ActionTokenizer::reconstruct_prefix_normalized(const ActionTokenSeq& prefix) const {
  auto symbols = bpe_decode(prefix, vocab_);
  const std::size_t total = config_.horizon * config_.dims;
  if (symbols.size() > total) throw DataError("malformed action: token prefix decodes past H*D symbols");
  symbols.symbols.resize(total, zero_code());
  const auto grid = unflatten(symbols, config_.horizon, config_.dims);
  return idct2(dequantize(grid, config_.gamma, config_.clamp_radius));
}

nlohmann::json ActionTokenizer::to_json() const {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [l, r] : vocab_.merges()) merges.push_back({l, r});
  return {
      {"version", kFormatVersion},
      {"alphabet_size", alphabet_size()},
      {"gamma", config_.gamma},
      {"H", config_.horizon},
      {"D", config_.dims},
      {"flatten", "freq_major"},
      {"vocab_size", config_.vocab_size},
      {"norm", norm_stats_to_json(stats_)},
      {"merges", std::move(merges)},
  };
}

ActionTokenizer ActionTokenizer::from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kFormatVersion) throw DataError("unsupported vocab file version");
    if (j.at("flatten").get<std::string>() != "freq_major") throw DataError("unsupported flatten order");
    const auto alphabet = j.at("alphabet_size").get<std::size_t>();
    if (alphabet < 2 || alphabet % 2 != 0) throw DataError("alphabet_size must be even and >= 2");

    TokenizerConfig config;
    config.gamma = j.at("gamma").get<double>();
    config.horizon = j.at("H").get<std::size_t>();
    config.dims = j.at("D").get<std::size_t>();
    config.clamp_radius = static_cast<std::uint32_t>(alphabet / 2);
    auto stats = norm_stats_from_json(j.at("norm"));
    config.percentile = stats.p;

    std::vector<MergePair> merges;
    for (const auto& m : j.at("merges")) {
      if (!m.is_array() || m.size() != 2) throw DataError("merge entries must be [left, right] pairs");
      merges.emplace_back(m[0].get<TokenId>(), m[1].get<TokenId>());
    }
    config.vocab_size = j.contains("vocab_size") ? j["vocab_size"].get<std::size_t>() : alphabet + merges.size();
    return ActionTokenizer(std::move(stats), config, BpeVocab(alphabet, std::move(merges)));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed vocab file: ") + e.what());
  }
}

void ActionTokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocab file " + path.string());
  out << to_json().dump(2) << '\n';
}

ActionTokenizer ActionTokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocab file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("vocab file is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace actalign
