#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "riskloom/scoring.hpp"

using namespace riskloom;

namespace {

Lexicon make_lexicon(std::initializer_list<std::pair<const char*, double>> entries) {
  Lexicon lex;
  for (const auto& [term, weight] : entries) lex.weights[term] = weight;
  return lex;
}

}  // namespace

TEST_CASE("score_lexicon squashes weighted counts") {
  Lexicon lex = make_lexicon({{"sad", 1.0}, {"hopeless", 2.0}});
  CHECK(score_lexicon("", lex) == 0.0);
  CHECK(score_lexicon("[MSG] [USER] TARGET sad", lex) == doctest::Approx(0.5));
  // s = 1 + 1 + 2 = 4 over two TARGET blocks
  CHECK(score_lexicon("[MSG] [USER] TARGET sad days [MSG] [USER] TARGET sad and hopeless",
                      lex) == doctest::Approx(4.0 / 5.0));
}

TEST_CASE("score_lexicon ignores CONTEXT blocks") {
  Lexicon lex = make_lexicon({{"sad", 1.0}});
  CHECK(score_lexicon("[MSG] [USER] CONTEXT sad sad sad", lex) == 0.0);
  CHECK(score_lexicon("[MSG] [USER] TARGET fine [MSG] [USER] CONTEXT sad", lex) == 0.0);
  // Changing CONTEXT contents never moves the score.
  double with_noise =
      score_lexicon("[MSG] [USER] TARGET sad [MSG] [USER] CONTEXT sad hopeless sad", lex);
  double without = score_lexicon("[MSG] [USER] TARGET sad [MSG] [USER] CONTEXT calm", lex);
  CHECK(with_noise == without);
}

TEST_CASE("score_lexicon treats unmarked text as target and normalizes tokens") {
  Lexicon lex = make_lexicon({{"sad", 1.0}});
  CHECK(score_lexicon("feeling sad today", lex) == doctest::Approx(0.5));
  CHECK(score_lexicon("[MSG] [USER] TARGET Sad, very SAD!", lex) ==
        doctest::Approx(2.0 / 3.0));
}

TEST_CASE("score_lexicon stays within [0,1] even with negative weights") {
  Lexicon lex = make_lexicon({{"calm", -5.0}, {"sad", 1.0}});
  double score = score_lexicon("[MSG] [USER] TARGET calm calm calm sad", lex);
  CHECK(score >= 0.0);
  CHECK(score <= 1.0);
}

TEST_CASE("lexicon TSV loading") {
  auto path = std::filesystem::temp_directory_path() / "riskloom_test_lex.tsv";
  {
    std::ofstream out(path);
    out << "# demo\nsad\t1.0\nHopeless\t2.5\n";
  }
  Lexicon lex = Lexicon::load_tsv(path);
  CHECK(lex.weights.at("sad") == doctest::Approx(1.0));
  CHECK(lex.weights.at("hopeless") == doctest::Approx(2.5));  // stored lowercased
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Lexicon::load_tsv("/nonexistent/lex.tsv"), IoError);
}

TEST_CASE("decide applies threshold, min_rounds and consecutive_hits") {
  CHECK(decide({0.5, 1, 1}, {0.6}) == 1);
  CHECK(decide({0.5, 3, 1}, {0.9, 0.9}) == 0);   // round 2 < min_rounds
  CHECK(decide({0.5, 1, 2}, {0.6, 0.4, 0.7}) == 0);  // last two not both >= 0.5
  CHECK(decide({0.5, 1, 2}, {0.4, 0.6, 0.7}) == 1);
  CHECK(decide({0.5, 1, 2}, {0.9}) == 0);  // not enough history for two hits
  CHECK(decide({0.5, 1, 1}, {0.5}) == 1);  // threshold is inclusive
}

TEST_CASE("decide is monotone in scores") {
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 10);
  std::uniform_int_distribution<int> small(1, 3);
  for (int iter = 0; iter < 500; ++iter) {
    DecisionPolicy policy{score(gen), small(gen), small(gen)};
    std::vector<double> history;
    int n = len(gen);
    for (int i = 0; i < n; ++i) history.push_back(score(gen));
    int before = decide(policy, history);
    std::uniform_int_distribution<std::size_t> pick(0, history.size() - 1);
    std::size_t idx = pick(gen);
    history[idx] = std::min(1.0, history[idx] + score(gen));
    int after = decide(policy, history);
    if (before == 1) CHECK(after == 1);
  }
}

TEST_CASE("score_remote talks to an HTTP scorer") {
  httplib::Server server;
  std::atomic<double> reply_score{0.73};
  server.Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"score\": " + std::to_string(reply_score.load()) + "}",
                    "application/json");
  });
  server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  server.Post("/teapot", [](const httplib::Request&, httplib::Response& res) {
    res.status = 418;
  });
  server.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
    res.set_content("{\"score\": 0.5}", "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  std::string base = "http://127.0.0.1:" + std::to_string(port);

  RemoteScorerConfig cfg;
  cfg.endpoint = base + "/score";
  CHECK(score_remote("text", cfg) == doctest::Approx(0.73));

  reply_score = 1.7;
  CHECK(score_remote("text", cfg) == doctest::Approx(1.0));  // clamped
  reply_score = -0.4;
  CHECK(score_remote("text", cfg) == doctest::Approx(0.0));

  cfg.endpoint = base + "/garbage";
  CHECK_THROWS_AS(score_remote("text", cfg), BadResponseError);
  cfg.endpoint = base + "/teapot";
  CHECK_THROWS_AS(score_remote("text", cfg), BadResponseError);

  cfg.endpoint = base + "/slow";
  cfg.read_timeout_ms = 100;
  CHECK_THROWS_AS(score_remote("text", cfg), ScorerTimeoutError);

  server.stop();
  server_thread.join();

  RemoteScorerConfig dead;
  dead.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/score";
  dead.connect_timeout_ms = 200;
  CHECK_THROWS_AS(score_remote("text", dead), Error);  // transport or timeout
}
