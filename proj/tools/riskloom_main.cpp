#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskloom/bdi.hpp"
#include "riskloom/corpus.hpp"
#include "riskloom/dialogue.hpp"
#include "riskloom/gateway.hpp"
#include "riskloom/metrics.hpp"
#include "riskloom/report.hpp"
#include "riskloom/scoring.hpp"
#include "riskloom/stream.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct IngestOptions {
  std::vector<std::string> pos_threads;
  std::vector<std::string> neg_threads;
  std::vector<std::string> provided;
  std::size_t sample_n = 0;
  std::uint64_t seed = 42;
  std::vector<std::string> communities = {"depression", "AdviceForTeens"};
  std::string out;
  std::string manifest;
};

std::vector<riskloom::SubjectRecord> subjects_from_dumps(
    const std::vector<std::string>& paths, int label, riskloom::SubjectSource source,
    const std::vector<std::string>& communities) {
  std::vector<riskloom::SubjectRecord> records;
  for (const auto& path : paths) {
    for (const auto& tree : riskloom::load_thread_dump(path)) {
      // Texts are scrubbed but authorship is kept so role tagging still
      // sees who the target is; author fields never reach the output.
      riskloom::ThreadTree anon = riskloom::anonymize_texts(tree, communities);
      records.push_back(riskloom::subject_from_thread(
          anon, path + "#" + tree.root.id, label, source));
    }
  }
  return records;
}

int cmd_ingest(const IngestOptions& opt) {
  auto pos = subjects_from_dumps(opt.pos_threads, 1,
                                 riskloom::SubjectSource::ScrapedPositive, opt.communities);
  auto neg = subjects_from_dumps(opt.neg_threads, 0,
                                 riskloom::SubjectSource::ScrapedNegative, opt.communities);
  std::vector<riskloom::SubjectRecord> provided_neg;
  std::size_t skipped_positive = 0;
  for (const auto& path : opt.provided) {
    for (auto& rec : riskloom::load_corpus_jsonl(path)) {
      if (rec.label != 0) {
        ++skipped_positive;  // the provided pool only contributes negatives
        continue;
      }
      rec.source = riskloom::SubjectSource::Provided;
      provided_neg.push_back(std::move(rec));
    }
  }
  if (skipped_positive > 0)
    std::cerr << "ingest: skipped " << skipped_positive
              << " positive provided subjects (only negatives are sampled)\n";

  auto [corpus, manifest] =
      riskloom::build_training_corpus(std::move(pos), std::move(neg), provided_neg,
                                      opt.sample_n, opt.seed);
  riskloom::write_corpus_jsonl(opt.out, corpus);
  if (!opt.manifest.empty()) riskloom::write_manifest(opt.manifest, manifest);

  json counts = json::array();
  for (const auto& b : manifest.counts)
    counts.push_back({{"source", riskloom::to_string(b.source)},
                      {"label", b.label},
                      {"count", b.count}});
  std::cout << "wrote " << manifest.total() << " subjects to " << opt.out << "\n"
            << json{{"subjects", manifest.total()},
                    {"counts", counts},
                    {"seed", manifest.sampling_seed}}
                   .dump(2)
            << "\n";
  return 0;
}

struct StatsOptions {
  std::vector<std::string> pos_threads;
  std::vector<std::string> neg_threads;
};

int cmd_stats(const StatsOptions& opt) {
  std::vector<riskloom::LabeledTree> trees;
  for (const auto& path : opt.neg_threads)
    for (auto& tree : riskloom::load_thread_dump(path)) trees.push_back({std::move(tree), 0});
  for (const auto& path : opt.pos_threads)
    for (auto& tree : riskloom::load_thread_dump(path)) trees.push_back({std::move(tree), 1});
  riskloom::StatsReport stats = riskloom::corpus_stats(trees);
  std::cout << riskloom::render_stats_table(stats) << "\n"
            << riskloom::stats_report_json(stats) << "\n";
  return 0;
}

struct StreamOptions {
  std::string corpus;
  std::string scorer = "lexicon";
  std::string lexicon_path;
  std::string endpoint;
  std::string fallback_lexicon;
  double threshold = 0.5;
  int min_rounds = 1;
  int consecutive_hits = 1;
  std::string out;
  bool wire = false;
};

int cmd_stream_run(const StreamOptions& opt) {
  auto corpus = riskloom::load_corpus_jsonl(opt.corpus);

  if (opt.wire) {
    riskloom::StreamRun run(std::move(corpus));
    riskloom::serve_wire(run, std::cin, std::cout);
    if (!opt.out.empty()) riskloom::write_decision_log(opt.out, run.transcript());
    return 0;
  }

  riskloom::DecisionPolicy policy{opt.threshold, opt.min_rounds, opt.consecutive_hits};
  std::function<double(const std::string&)> scorer;
  riskloom::Lexicon lexicon;
  if (opt.scorer == "lexicon") {
    lexicon = riskloom::Lexicon::load_tsv(opt.lexicon_path);
    scorer = [&lexicon](const std::string& text) {
      return riskloom::score_lexicon(text, lexicon);
    };
  } else {
    riskloom::RemoteScorerConfig remote = riskloom::RemoteScorerConfig::from_env();
    if (!opt.endpoint.empty()) remote.endpoint = opt.endpoint;
    if (remote.endpoint.empty())
      throw CLI::ValidationError("--endpoint or RISKLOOM_SCORER_URL required for remote scorer");
    bool have_fallback = !opt.fallback_lexicon.empty();
    if (have_fallback) lexicon = riskloom::Lexicon::load_tsv(opt.fallback_lexicon);
    scorer = [remote, have_fallback, &lexicon](const std::string& text) {
      try {
        return riskloom::score_remote(text, remote);
      } catch (const riskloom::Error& e) {
        if (!have_fallback) throw;
        std::cerr << "remote scorer failed (" << e.what() << "); using lexicon fallback\n";
        return riskloom::score_lexicon(text, lexicon);
      }
    };
  }

  riskloom::DecisionLog log = riskloom::run_stream(std::move(corpus), scorer, policy);
  riskloom::write_decision_log(opt.out, log);

  riskloom::FirstPositive fp = riskloom::first_positive(log);
  std::size_t flagged = 0;
  int rounds = 0;
  for (const auto& [id, k] : fp)
    if (k) ++flagged;
  for (const auto& d : log) rounds = std::max(rounds, d.k);
  std::cout << "streamed " << fp.size() << " subjects over " << rounds << " rounds, "
            << flagged << " flagged positive\n"
            << json{{"subjects", fp.size()}, {"rounds", rounds}, {"flagged", flagged},
                    {"log", opt.out}}
                   .dump(2)
            << "\n";
  return 0;
}

struct EvalOptions {
  std::string log;
  std::string truth;
  std::vector<int> checkpoints = {1, 100, 500, 1000};
  int o5 = 5;
  int o50 = 50;
  double p = riskloom::kSpeedPenaltySlope;
};

int cmd_eval(const EvalOptions& opt) {
  riskloom::DecisionLog log = riskloom::load_decision_log(opt.log);
  if (log.empty()) throw CLI::ValidationError("decision log is empty: " + opt.log);
  riskloom::Truth truth = riskloom::load_truth_jsonl(opt.truth);

  riskloom::EvalReport report;
  report.decisions = riskloom::evaluate_decisions(log, truth, opt.o5, opt.o50, opt.p);
  for (int checkpoint : opt.checkpoints) {
    riskloom::RankingRow row;
    row.checkpoint = checkpoint;
    auto ranking = riskloom::ranking_at_checkpoint(log, checkpoint);
    for (auto [key, k] : {std::pair<const char*, std::size_t>{"P@10", 10},
                          {"NDCG@10", 10},
                          {"NDCG@100", 100}}) {
      if (k > ranking.size()) continue;  // rendered as "-"
      row.values[key] = key[0] == 'P'
                            ? riskloom::precision_at_k(ranking, truth, k)
                            : riskloom::ndcg_at_k(ranking, truth, k);
    }
    report.rankings.push_back(std::move(row));
  }
  std::cout << riskloom::render_eval_table(report) << "\n"
            << riskloom::eval_report_json(report) << "\n";
  return 0;
}

struct DialogueOptions {
  std::string strategy = "run0";
  std::string persona_file;
  std::string gateway_url;
  std::string persona_gateway_url;
  std::string model;
  std::string out_dir;
  bool mock = false;
  int max_turns = 21;
};

int cmd_dialogue_run(const DialogueOptions& opt) {
  riskloom::StrategyKind strategy = riskloom::strategy_from_name(opt.strategy);
  auto scripts = riskloom::PersonaScript::load_all(opt.persona_file);
  fs::create_directories(opt.out_dir);

  std::unique_ptr<riskloom::ChatGateway> agent_llm;
  std::unique_ptr<riskloom::ChatGateway> evaluator_llm;
  std::unique_ptr<riskloom::HttpChatGateway> persona_llm;
  if (opt.mock) {
    agent_llm = std::make_unique<riskloom::MockAgentGateway>();
    evaluator_llm = std::make_unique<riskloom::MockEvaluatorGateway>();
  } else {
    riskloom::HttpGatewayConfig cfg = riskloom::HttpGatewayConfig::from_env();
    if (!opt.gateway_url.empty()) cfg.base_url = opt.gateway_url;
    if (!opt.model.empty()) cfg.model = opt.model;
    agent_llm = std::make_unique<riskloom::HttpChatGateway>(cfg);
    evaluator_llm = std::make_unique<riskloom::HttpChatGateway>(cfg);
    if (!opt.persona_gateway_url.empty()) {
      riskloom::HttpGatewayConfig pcfg = cfg;
      pcfg.base_url = opt.persona_gateway_url;
      persona_llm = std::make_unique<riskloom::HttpChatGateway>(pcfg);
    }
  }

  riskloom::SessionConfig session_config;
  session_config.max_agent_messages = opt.max_turns;

  std::vector<std::vector<riskloom::AgentTurn>> transcripts;
  int failures = 0;
  for (const auto& script : scripts) {
    std::string stem = script.name + "_" + opt.strategy;
    riskloom::DialogueState state = riskloom::make_dialogue_state(strategy, script.name);
    std::unique_ptr<riskloom::PersonaClient> persona;
    if (persona_llm)
      persona = std::make_unique<riskloom::RemotePersona>(script.name, *persona_llm);
    else
      persona = std::make_unique<riskloom::ScriptedPersona>(script);

    try {
      while (!state.terminated)
        riskloom::step(state, *agent_llm, *evaluator_llm, *persona, session_config);
    } catch (const riskloom::Error& e) {
      std::cerr << "session " << stem << " failed: " << e.what()
                << " (partial transcript kept)\n";
      ++failures;
    }

    riskloom::write_transcript_jsonl(fs::path(opt.out_dir) / (stem + ".transcript.jsonl"),
                                     state.transcript);
    json scores = json::object();
    const auto& names = riskloom::canonical_symptoms();
    for (std::size_t i = 0; i < names.size(); ++i)
      scores[names[i]] = state.symptoms.score_at(i);
    json result{{"persona", script.name},
                {"strategy", opt.strategy},
                {"scores", scores},
                {"agent_messages", state.agent_messages_sent},
                {"persona_replies", state.persona_replies},
                {"completed", state.terminated}};
    std::ofstream scores_out(fs::path(opt.out_dir) / (stem + ".scores.json"));
    scores_out << result.dump(2) << '\n';
    transcripts.push_back(state.transcript);
  }

  riskloom::InteractionStats stats = riskloom::interaction_stats(transcripts);
  std::ofstream stats_out(fs::path(opt.out_dir) / "interaction_stats.json");
  stats_out << riskloom::interaction_stats_json(stats) << '\n';
  std::cout << riskloom::render_interaction_stats(stats) << "\n"
            << riskloom::interaction_stats_json(stats) << "\n";
  return failures == 0 ? 0 : 2;
}

struct AssessOptions {
  std::string pred_dir;
  std::string truth_file;
  std::vector<int> cutoffs;
};

int cmd_assess(const AssessOptions& opt) {
  riskloom::CategoryCutoffs cutoffs;
  if (!opt.cutoffs.empty()) {
    if (opt.cutoffs.size() != 3)
      throw CLI::ValidationError("--cutoffs needs exactly three ascending bounds");
    cutoffs = {opt.cutoffs[0], opt.cutoffs[1], opt.cutoffs[2]};
    cutoffs.validate();
  }

  std::map<std::string, riskloom::SymptomVector> truths;
  for (const auto& script : riskloom::PersonaScript::load_all(opt.truth_file))
    truths[script.name] = script.ground_truth;

  std::vector<riskloom::SymptomVector> preds, golds;
  riskloom::AssessmentReport report;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(opt.pred_dir))
    if (entry.path().extension() == ".json" &&
        entry.path().string().ends_with(".scores.json"))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path);
    json j;
    in >> j;
    std::string persona = j.at("persona").get<std::string>();
    auto it = truths.find(persona);
    if (it == truths.end())
      throw CLI::ValidationError("no ground truth for persona '" + persona + "'");
    riskloom::SymptomVector pred;
    for (const auto& [name, value] : j.at("scores").items())
      pred.set(name, value.get<int>());
    riskloom::AssessmentRow row;
    row.persona = persona;
    row.predicted_total = riskloom::bdi_total(pred);
    row.truth_total = riskloom::bdi_total(it->second);
    row.predicted_category = riskloom::categorize(row.predicted_total, cutoffs);
    row.truth_category = riskloom::categorize(row.truth_total, cutoffs);
    report.rows.push_back(std::move(row));
    preds.push_back(pred);
    golds.push_back(it->second);
  }
  if (preds.empty())
    throw CLI::ValidationError("no *.scores.json predictions found in " + opt.pred_dir);

  report.dchr_value = riskloom::dchr(preds, golds, cutoffs);
  report.adodl_value = riskloom::adodl(preds, golds);
  report.ashr_value = riskloom::ashr(preds, golds);
  std::cout << riskloom::render_assessment_table(report) << "\n"
            << riskloom::assessment_report_json(report) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riskloom: early depression-risk streaming evaluation and "
               "conversational BDI assessment"};
  app.require_subcommand(1);
  app.set_config("--config");

  IngestOptions ingest;
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "Build a training corpus from thread dumps");
  ingest_cmd->add_option("--pos-threads", ingest.pos_threads, "positive thread dump JSONL");
  ingest_cmd->add_option("--neg-threads", ingest.neg_threads, "negative thread dump JSONL");
  ingest_cmd->add_option("--provided", ingest.provided, "provided subjects JSONL");
  ingest_cmd->add_option("--sample-n", ingest.sample_n, "negatives sampled from provided");
  ingest_cmd->add_option("--seed", ingest.seed, "sampling seed");
  ingest_cmd->add_option("--communities", ingest.communities,
                         "community names scrubbed during anonymization")
      ->delimiter(',');
  ingest_cmd->add_option("--out", ingest.out, "corpus JSONL output")->required();
  ingest_cmd->add_option("--manifest", ingest.manifest, "manifest JSON output");

  StatsOptions stats;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Volumetric statistics of thread dumps");
  stats_cmd->add_option("--pos-threads", stats.pos_threads, "positive thread dump JSONL");
  stats_cmd->add_option("--neg-threads", stats.neg_threads, "negative thread dump JSONL");

  StreamOptions stream;
  CLI::App* stream_cmd =
      app.add_subcommand("stream-run", "Replay a corpus round by round and log decisions");
  stream_cmd->add_option("--corpus", stream.corpus, "corpus JSONL")->required();
  stream_cmd->add_option("--scorer", stream.scorer, "lexicon|remote")
      ->check(CLI::IsMember({"lexicon", "remote"}));
  stream_cmd->add_option("--lexicon", stream.lexicon_path, "term<TAB>weight TSV");
  stream_cmd->add_option("--endpoint", stream.endpoint, "remote scorer URL");
  stream_cmd->add_option("--fallback-lexicon", stream.fallback_lexicon,
                         "lexicon used when the remote scorer fails");
  stream_cmd->add_option("--threshold", stream.threshold, "decision threshold");
  stream_cmd->add_option("--min-rounds", stream.min_rounds, "rounds before any positive");
  stream_cmd->add_option("--consecutive-hits", stream.consecutive_hits,
                         "scores >= threshold required in a row");
  stream_cmd->add_option("--out", stream.out, "decision log JSONL output");
  stream_cmd->add_flag("--wire", stream.wire,
                       "serve rounds as JSON lines on stdout and read decisions from stdin");

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a decision log against gold labels");
  eval_cmd->add_option("--log", eval.log, "decision log JSONL")->required();
  eval_cmd->add_option("--truth", eval.truth, "truth JSONL")->required();
  eval_cmd->add_option("--checkpoints", eval.checkpoints, "ranking checkpoints")
      ->delimiter(',');
  eval_cmd->add_option("--o5", eval.o5, "ERDE5 deadline");
  eval_cmd->add_option("--o50", eval.o50, "ERDE50 deadline");
  eval_cmd->add_option("--p", eval.p, "speed penalty slope");

  DialogueOptions dialogue;
  CLI::App* dialogue_cmd =
      app.add_subcommand("dialogue-run", "Run the dual-agent assessment protocol");
  dialogue_cmd->add_option("--strategy", dialogue.strategy, "run0|run1|run2")
      ->check(CLI::IsMember({"run0", "run1", "run2"}));
  dialogue_cmd->add_option("--persona-file", dialogue.persona_file, "persona JSON")
      ->required();
  dialogue_cmd->add_option("--gateway", dialogue.gateway_url, "chat-completions base URL");
  dialogue_cmd->add_option("--persona-gateway", dialogue.persona_gateway_url,
                           "serve persona replies from this chat endpoint");
  dialogue_cmd->add_option("--model", dialogue.model, "model name");
  dialogue_cmd->add_option("--out", dialogue.out_dir, "output directory")->required();
  dialogue_cmd->add_flag("--mock", dialogue.mock,
                         "offline closed loop with scripted persona and mock evaluator");
  dialogue_cmd->add_option("--max-turns", dialogue.max_turns, "agent message cap");

  AssessOptions assess;
  CLI::App* assess_cmd =
      app.add_subcommand("assess", "Score predicted symptom vectors against ground truth");
  assess_cmd->add_option("--pred", assess.pred_dir, "directory of *.scores.json")->required();
  assess_cmd->add_option("--truth", assess.truth_file, "ground-truth persona JSON")
      ->required();
  assess_cmd->add_option("--cutoffs", assess.cutoffs,
                         "category bounds: minimal_max,mild_max,moderate_max")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(ingest_cmd)) return cmd_ingest(ingest);
    if (app.got_subcommand(stats_cmd)) return cmd_stats(stats);
    if (app.got_subcommand(stream_cmd)) return cmd_stream_run(stream);
    if (app.got_subcommand(eval_cmd)) return cmd_eval(eval);
    if (app.got_subcommand(dialogue_cmd)) return cmd_dialogue_run(dialogue);
    if (app.got_subcommand(assess_cmd)) return cmd_assess(assess);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
