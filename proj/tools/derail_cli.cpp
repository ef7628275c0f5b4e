// Command-line front end: ingest, analyze, score, evaluate, serve.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "derail/analytics.hpp"
#include "derail/corpus.hpp"
#include "derail/eval.hpp"
#include "derail/github.hpp"
#include "derail/llm.hpp"
#include "derail/modsvc.hpp"
#include "derail/predictor.hpp"

namespace {

using namespace derail;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << content;
}

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    char* end = nullptr;
    const double t = std::strtod(item.c_str(), &end);
    if (*end != '\0') throw Error(Errc::InvalidArgument, "bad threshold \"" + item + "\"");
    out.push_back(t);
  }
  return out;
}

std::set<std::string> parse_list(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

struct GatewayArgs {
  std::string kind = "mock";
  std::string script;
  std::string mock_mode = "consume";
  std::string replay_dir;
};

void add_gateway_options(CLI::App* cmd, GatewayArgs& g) {
  cmd->add_option("--gateway", g.kind, "mock or http (http reads LLM_API_BASE, LLM_API_KEY, LLM_MODEL)")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--script", g.script, "Mock script (JSONL of match_substring/response)");
  cmd->add_option("--mock-mode", g.mock_mode, "consume or reuse")->check(CLI::IsMember({"consume", "reuse"}));
  cmd->add_option("--llm-replay", g.replay_dir, "Serve chat completions from recorded fixtures");
}

std::shared_ptr<Gateway> make_gateway(const GatewayArgs& g) {
  if (g.kind == "mock") {
    if (g.script.empty()) throw Error(Errc::InvalidArgument, "--gateway mock needs --script");
    return std::make_shared<ScriptedMock>(load_mock_script(g.script), g.mock_mode == "reuse"
                                                                           ? ScriptedMock::Mode::Reuse
                                                                           : ScriptedMock::Mode::Consume);
  }
  HttpGatewayConfig cfg = HttpGatewayConfig::from_env();
  if (!g.replay_dir.empty()) {
    return std::make_shared<HttpGateway>(cfg, std::make_shared<ReplayTransport>(g.replay_dir));
  }
  return std::make_shared<HttpGateway>(cfg);
}

std::function<void()> g_stop;

void on_signal(int) {
  if (g_stop) g_stop();
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("derail"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"GitHub conversation derailment forecasting"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Fetch threads from the GitHub REST API into a corpus file");
  std::string ingest_repo, ingest_out, ingest_replay, ingest_record, locked_reasons;
  std::vector<std::int64_t> ingest_numbers;
  std::int64_t neighbor_anchor = 0;
  int window = 15, pick = 4;
  std::uint64_t seed = 0;
  bool list_locked = false;
  ingest->add_option("--repo", ingest_repo, "owner/name")->required();
  ingest->add_option("--number", ingest_numbers, "Issue or PR number (repeatable)");
  ingest->add_option("--neighbors-of", neighbor_anchor, "Sample eligible threads around this number");
  ingest->add_option("--window", window, "Numbers scanned on each side of the anchor");
  ingest->add_option("--pick", pick, "Threads drawn from the eligible neighbors");
  ingest->add_option("--seed", seed, "Sampling seed");
  ingest->add_flag("--list-locked", list_locked, "List locked threads instead of fetching");
  ingest->add_option("--reasons", locked_reasons, "Lock reasons for --list-locked (comma separated)")
      ->default_val("too heated,spam,off-topic");
  ingest->add_option("--out", ingest_out, "Output file (default stdout)");
  ingest->add_option("--replay", ingest_replay, "Serve GitHub responses from recorded fixtures");
  ingest->add_option("--record", ingest_record, "Record GitHub responses into this directory");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Corpus statistics");
  std::string analyze_corpus, analyze_out, analyze_lexicons;
  analyze->add_option("--corpus", analyze_corpus, "Annotated corpus JSONL")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", analyze_out, "Statistics JSON (default stdout)");
  analyze->add_option("--lexicons", analyze_lexicons, "Directory overriding the cue word lists")
      ->check(CLI::ExistingDirectory);

  // score
  auto* score = app.add_subcommand("score", "Predict derailment for every thread in a corpus");
  std::string score_corpus_path, score_out, score_strategy = "ltm", score_now;
  bool drop_bots = false, strict_parse = false;
  std::size_t jobs = 1, max_tokens = 8192;
  GatewayArgs score_gw;
  score->add_option("--corpus", score_corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--strategy", score_strategy, "ltm, fewshot or generic")
      ->check(CLI::IsMember({"ltm", "fewshot", "generic"}));
  score->add_option("--out", score_out, "Predictions JSONL (default stdout)");
  score->add_option("--now", score_now, "Fixed created_at timestamp (ISO 8601)");
  score->add_flag("--drop-bot-comments", drop_bots, "Leave [bot] accounts out of the transcript");
  score->add_flag("--strict-parse", strict_parse, "Disable the lenient probability fallback");
  score->add_option("--jobs", jobs, "Threads scored concurrently");
  score->add_option("--max-context-tokens", max_tokens, "Context window of the model");
  add_gateway_options(score, score_gw);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Precision/recall/F1 over a predictions file");
  std::string eval_predictions, eval_corpus, eval_out, eval_thresholds = "0.4,0.5,0.6";
  bool exclude_failures = false;
  evaluate->add_option("--predictions", eval_predictions, "Predictions JSONL")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--corpus", eval_corpus, "Labeled corpus JSONL")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--thresholds", eval_thresholds, "Comma-separated thresholds");
  evaluate->add_option("--out", eval_out, "Report JSON");
  evaluate->add_flag("--exclude-failures", exclude_failures, "Drop failed predictions instead of counting them negative");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the moderation HTTP service");
  std::string store_dir, listen = "127.0.0.1:8080", ui_dir, serve_strategy = "ltm";
  double low = 0.4, high = 0.6;
  GatewayArgs serve_gw;
  serve->add_option("--store", store_dir, "Event log directory")->required();
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--ui", ui_dir, "Static dashboard directory served under /ui")->check(CLI::ExistingDirectory);
  serve->add_option("--strategy", serve_strategy, "Default SCD strategy")
      ->check(CLI::IsMember({"ltm", "fewshot", "generic"}));
  serve->add_option("--low", low, "Bot reminder threshold");
  serve->add_option("--high", high, "Moderator alert threshold");
  add_gateway_options(serve, serve_gw);

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*ingest) {
      IngestConfig cfg = IngestConfig::from_env();
      std::shared_ptr<HttpTransport> transport;
      if (!ingest_replay.empty()) {
        transport = std::make_shared<ReplayTransport>(ingest_replay);
      } else {
        transport = std::make_shared<LiveHttpTransport>(cfg.api_base_url, cfg.request_timeout);
      }
      if (!ingest_record.empty()) transport = std::make_shared<RecordingTransport>(transport, ingest_record);
      GithubClient client(cfg, transport);

      if (list_locked) {
        std::string out;
        for (const auto& l : client.list_locked_threads(ingest_repo, parse_list(locked_reasons))) {
          out += json{{"repo", ingest_repo}, {"number", l.number}, {"reason", l.reason}}.dump() + "\n";
        }
        write_output(ingest_out, out);
        return 0;
      }
      std::vector<ConversationThread> threads;
      if (neighbor_anchor > 0) {
        threads = client.sample_neighbors(ingest_repo, neighbor_anchor, window, pick, EligibilityRule{}, seed);
      }
      for (auto& t : client.fetch_threads(ingest_repo, ingest_numbers)) {
        if (t) threads.push_back(std::move(*t));
      }
      write_output(ingest_out, serialize_corpus(threads));
      spdlog::info("wrote {} threads", threads.size());
      return 0;
    }

    if (*analyze) {
      const auto corpus = load_corpus(analyze_corpus);
      const LexiconSet lex = analyze_lexicons.empty() ? LexiconSet::defaults() : LexiconSet::load(analyze_lexicons);
      const CorpusStats stats = compute_stats(corpus, lex);
      if (analyze_out.empty()) {
        std::cout << render_stats_table(stats);
      } else {
        write_output(analyze_out, to_json(stats).dump(2) + "\n");
        std::cout << render_stats_table(stats);
      }
      return 0;
    }

    if (*score) {
      const auto corpus = load_corpus(score_corpus_path);
      auto gateway = make_gateway(score_gw);
      PredictOptions opts;
      if (!score_now.empty()) opts.clock = fixed_clock(parse_iso8601(score_now));
      opts.drop_bot_comments = drop_bots;
      opts.max_context_tokens = max_tokens;
      opts.parse_mode = strict_parse ? ParseMode::Strict : ParseMode::Lenient;
      const auto outcomes = score_corpus(corpus, parse_strategy(score_strategy), *gateway, opts, jobs);
      std::size_t failed = 0;
      for (const auto& o : outcomes) {
        if (o.failure) {
          ++failed;
          spdlog::warn("{}: {} at step {}: {}", o.thread_ref.to_string(), to_string(o.failure->code),
                       o.failure->step, o.failure->message);
        }
      }
      write_output(score_out, serialize_predictions(outcomes));
      spdlog::info("scored {} threads, {} failed", outcomes.size() - failed, failed);
      return 0;
    }

    if (*evaluate) {
      const auto outcomes = load_predictions(eval_predictions);
      const auto corpus = load_corpus(eval_corpus);
      const EvaluationReport report =
          evaluate_against_corpus(outcomes, corpus, parse_thresholds(eval_thresholds),
                                  exclude_failures ? FailurePolicy::Exclude : FailurePolicy::CountAsNegative);
      std::cout << render_report(report);
      if (!eval_out.empty()) write_output(eval_out, to_json(report).dump(2) + "\n");
      return 0;
    }

    if (*serve) {
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "--listen expects host:port");
      const std::string host = listen.substr(0, colon);
      const int port = std::stoi(listen.substr(colon + 1));

      ModerationStore store(store_dir);
      ServiceOptions opts;
      opts.default_strategy = parse_strategy(serve_strategy);
      opts.policy = {low, high};
      IngestConfig gh_cfg = IngestConfig::from_env();
      auto github = std::make_shared<GithubClient>(
          gh_cfg, std::make_shared<LiveHttpTransport>(gh_cfg.api_base_url, gh_cfg.request_timeout));
      ModerationService service(store, make_gateway(serve_gw), opts, github);
      ServerOptions server_opts;
      if (!ui_dir.empty()) server_opts.ui_dir = ui_dir;
      ModerationServer server(service, server_opts);
      const int bound = server.bind(host, port);
      g_stop = [&server] { server.stop(); };
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("listening on {}:{} ({} threads in store)", host, bound, store.list().size());
      server.run();
      return 0;
    }
  } catch (const Error& e) {
    spdlog::error("{}{}: {}", e.step().empty() ? "" : "[" + e.step() + "] ", to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
