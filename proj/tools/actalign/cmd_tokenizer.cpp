#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "actalign/error.hpp"
#include "actalign/tokenizer.hpp"
#include "cli.hpp"

namespace actalign::cli {

namespace {

struct TokenizerParams {
  std::string input;
  std::string vocab;
  std::size_t vocab_size = kDefaultVocabSize;
  double gamma = kDefaultGamma;
  std::size_t horizon = kDefaultHorizon;
  std::size_t dims = 0;  // 0 = infer from data
  double percentile = kDefaultPercentile;
  std::uint32_t clamp = kDefaultClampRadius;
};

std::vector<Trajectory> read_input(const TokenizerParams& p) {
  if (p.input.empty()) throw ConfigError("--input is required");
  DatasetSchema schema;
  if (p.dims != 0) schema.dims = p.dims;
  return load_trajectories(p.input, schema);
}

ActionTokenizer read_vocab(const TokenizerParams& p) {
  if (p.vocab.empty()) throw ConfigError("--vocab is required");
  return ActionTokenizer::load(p.vocab);
}

void run_train(const TokenizerParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  const auto trajectories = read_input(p);
  if (trajectories.empty()) throw DataError("no trajectories in " + p.input);
  TokenizerConfig config;
  config.horizon = p.horizon;
  config.dims = p.dims != 0 ? p.dims : trajectories.front().dims();
  config.gamma = p.gamma;
  config.clamp_radius = p.clamp;
  config.vocab_size = p.vocab_size;
  config.percentile = p.percentile;
  if (config.vocab_size <= 2 * static_cast<std::size_t>(config.clamp_radius)) {
    throw ConfigError("--vocab-size must exceed the symbol alphabet (2 * clamp)");
  }

  const auto tokenizer = ActionTokenizer::train(trajectories, config);
  const auto chunks = extract_chunks(trajectories, config.horizon);
  std::size_t tokens = 0;
  for (const auto& c : chunks) tokens += tokenizer.tokenize(c).size();

  const auto out = prepare_out_dir(ctx);
  auto j = tokenizer.to_json();
  j["provenance"] = effective;
  write_json(out / "vocab.json", j);
  write_json(out / "run_config.json", effective);
  std::cout << "tokenizer train: " << chunks.size() << " chunks, " << tokenizer.vocab().merges().size()
            << " merges, vocab " << tokenizer.vocab().size() << ", mean tokens/chunk "
            << static_cast<double>(tokens) / static_cast<double>(chunks.size()) << " (raw "
            << config.horizon * config.dims << ") -> " << (out / "vocab.json").string() << '\n';
}

void run_encode(const TokenizerParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  const auto tokenizer = read_vocab(p);
  const auto trajectories = read_input(p);
  std::ostringstream buf;
  std::size_t n = 0;
  for (const auto& t : trajectories) {
    const auto chunks = extract_chunks(t, tokenizer.config().horizon);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const auto tokens = tokenizer.tokenize(chunks[c]);
      buf << nlohmann::json{{"id", t.id}, {"chunk", c}, {"ids", tokens.ids}, {"text", render_action_tokens(tokens)}}
                 .dump()
          << '\n';
      ++n;
    }
  }
  const auto out = prepare_out_dir(ctx);
  write_file(out / "tokens.jsonl", buf.str());
  write_json(out / "run_config.json", effective);
  std::cout << "tokenizer encode: " << n << " chunks -> " << (out / "tokens.jsonl").string() << '\n';
}

ActionTokenSeq tokens_from_row(const nlohmann::json& row) {
  if (row.contains("ids")) {
    ActionTokenSeq seq;
    for (const auto& x : row.at("ids")) {
      if (!x.is_number_unsigned()) throw DataError("token ids must be non-negative integers");
      seq.ids.push_back(x.get<TokenId>());
    }
    return seq;
  }
  if (row.contains("text")) return parse_action_tokens(row.at("text").get<std::string>());
  throw DataError("token row has neither 'ids' nor 'text'");
}

void run_decode(const TokenizerParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  const auto tokenizer = read_vocab(p);
  if (p.input.empty()) throw ConfigError("--input is required");
  std::ifstream in(p.input);
  if (!in) throw DataError("cannot open token file " + p.input);

  std::ostringstream buf;
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto row = nlohmann::json::parse(line);
      const auto chunk = tokenizer.detokenize(tokens_from_row(row));
      nlohmann::json out_row = {{"actions", chunk_to_rows(chunk)}};
      out_row["id"] = row.value("id", std::string());
      out_row["chunk"] = row.value("chunk", std::size_t{0});
      buf << out_row.dump() << '\n';
      ++n;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("token file line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      // Keep the reason first so it stays machine-parseable.
      throw DataError(std::string(e.what()) + " (token file line " + std::to_string(line_no) + ")");
    }
  }
  const auto out = prepare_out_dir(ctx);
  write_file(out / "chunks.jsonl", buf.str());
  write_json(out / "run_config.json", effective);
  std::cout << "tokenizer decode: " << n << " chunks -> " << (out / "chunks.jsonl").string() << '\n';
}

void run_roundtrip(const TokenizerParams& p, const RunContext& ctx, const nlohmann::json& effective) {
  const auto tokenizer = read_vocab(p);
  const auto trajectories = read_input(p);
  const std::size_t raw = tokenizer.config().horizon * tokenizer.config().dims;

  std::ostringstream buf;
  std::size_t n = 0;
  std::size_t tokens = 0;
  double max_rmse = 0.0;
  double sum_rmse = 0.0;
  for (const auto& t : trajectories) {
    const auto chunks = extract_chunks(t, tokenizer.config().horizon);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const auto rt = tokenizer.round_trip(chunks[c]);
      buf << nlohmann::json{{"id", t.id}, {"chunk", c}, {"rmse", rt.rmse_normalized}, {"tokens", rt.tokens.size()}}
                 .dump()
          << '\n';
      max_rmse = std::max(max_rmse, rt.rmse_normalized);
      sum_rmse += rt.rmse_normalized;
      tokens += rt.tokens.size();
      ++n;
      if (ctx.verbose) std::cout << t.id << "[" << c << "] rmse " << rt.rmse_normalized << '\n';
    }
  }
  if (n == 0) throw DataError("no complete chunks to round-trip");
  const double mean_tokens = static_cast<double>(tokens) / static_cast<double>(n);
  nlohmann::json summary = {
      {"chunks", n},
      {"max_rmse", max_rmse},
      {"mean_rmse", sum_rmse / static_cast<double>(n)},
      {"mean_tokens", mean_tokens},
      {"raw_symbols", raw},
      {"compression_ratio", static_cast<double>(raw) / mean_tokens},
      {"rmse_bound", 1.0 / (2.0 * tokenizer.config().gamma)},
      {"provenance", effective},
  };
  const auto out = prepare_out_dir(ctx);
  write_file(out / "roundtrip.jsonl", buf.str());
  write_json(out / "roundtrip_summary.json", summary);
  write_json(out / "run_config.json", effective);
  std::cout << "tokenizer roundtrip: chunks " << n << ", max rmse " << format_number(max_rmse) << ", mean rmse "
            << format_number(sum_rmse / static_cast<double>(n)) << " (bound "
            << format_number(1.0 / (2.0 * tokenizer.config().gamma)) << "), mean tokens/chunk "
            << format_number(mean_tokens) << " of " << raw << " symbols, compression "
            << format_number(static_cast<double>(raw) / mean_tokens) << "x\n";
}

}  // namespace

void register_tokenizer(CLI::App& app, RunContext& ctx, Registry& registry) {
  auto* tok = app.add_subcommand("tokenizer", "Train and apply the DCT+BPE action tokenizer");
  tok->require_subcommand(1);
  auto params = std::make_shared<TokenizerParams>();

  auto* train = tok->add_subcommand("train", "Fit normalization and BPE merges; writes vocab.json");
  train->add_option("--input,-i", params->input, "Trajectory JSONL");
  train->add_option("--vocab-size,-V", params->vocab_size, "Target vocabulary size")->capture_default_str();
  train->add_option("--gamma", params->gamma, "Quantization scale")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--horizon,-H", params->horizon, "Chunk horizon")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--dims,-D", params->dims, "Action dims (0 = infer)")->capture_default_str();
  train->add_option("--percentile", params->percentile, "Normalization percentile p in (0, 50)")
      ->capture_default_str();
  train->add_option("--clamp", params->clamp, "Quantization clamp radius B")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common_options(train, ctx);
  registry.push_back({train, [params](const RunContext& c, const nlohmann::json& e) { run_train(*params, c, e); }});

  auto* encode = tok->add_subcommand("encode", "Trajectories -> tokens.jsonl");
  encode->add_option("--vocab", params->vocab, "Vocab JSON");
  encode->add_option("--input,-i", params->input, "Trajectory JSONL");
  add_common_options(encode, ctx);
  registry.push_back({encode, [params](const RunContext& c, const nlohmann::json& e) { run_encode(*params, c, e); }});

  auto* decode = tok->add_subcommand("decode", "tokens.jsonl -> chunks.jsonl");
  decode->add_option("--vocab", params->vocab, "Vocab JSON");
  decode->add_option("--input,-i", params->input, "Token JSONL (rows with 'ids' or 'text')");
  add_common_options(decode, ctx);
  registry.push_back({decode, [params](const RunContext& c, const nlohmann::json& e) { run_decode(*params, c, e); }});

  auto* roundtrip = tok->add_subcommand("roundtrip", "Per-chunk reconstruction RMSE and compression");
  roundtrip->add_option("--vocab", params->vocab, "Vocab JSON");
  roundtrip->add_option("--input,-i", params->input, "Trajectory JSONL");
  add_common_options(roundtrip, ctx);
  registry.push_back(
      {roundtrip, [params](const RunContext& c, const nlohmann::json& e) { run_roundtrip(*params, c, e); }});
}

}  // namespace actalign::cli
