#include "riskloom/scoring.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "riskloom/conversation.hpp"

namespace riskloom {

Lexicon Lexicon::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon: " + path.string());
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error("lexicon line " + std::to_string(lineno) + ": expected term<TAB>weight");
    std::string term = line.substr(0, tab);
    double weight;
    try {
      weight = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw Error("lexicon line " + std::to_string(lineno) + ": bad weight");
    }
    if (!std::isfinite(weight))
      throw Error("lexicon line " + std::to_string(lineno) + ": weight must be finite");
    for (char& c : term) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    lex.weights[term] = weight;
  }
  return lex;
}

namespace {

// Lowercases and trims non-alphanumeric edges so "Sad," matches "sad".
std::string normalize_token(std::string_view token) {
  std::size_t b = 0, e = token.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
  std::string out(token.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double weighted_sum(std::string_view text, const Lexicon& lexicon) {
  double sum = 0.0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    std::string tok = normalize_token(text.substr(start, i - start));
    if (tok.empty()) continue;
    if (auto it = lexicon.weights.find(tok); it != lexicon.weights.end()) sum += it->second;
  }
  return sum;
}

}  // namespace

double score_lexicon(std::string_view serialized, const Lexicon& lexicon) {
  constexpr std::string_view kTarget = "[USER] TARGET";
  double s = 0.0;
  auto blocks = split_serialized(serialized);
  for (const auto& block : blocks) {
    std::string_view view(block);
    if (view.starts_with("[MSG] ")) {
      view.remove_prefix(6);
      if (!view.starts_with(kTarget)) continue;  // CONTEXT contributes nothing
      view.remove_prefix(kTarget.size());
    }
    s += weighted_sum(view, lexicon);
  }
  if (s < 0.0) s = 0.0;
  return s / (1.0 + s);
}

int decide(const DecisionPolicy& policy, const std::vector<double>& score_history) {
  const int rounds = static_cast<int>(score_history.size());
  if (rounds < policy.min_rounds) return 0;
  if (rounds < policy.consecutive_hits) return 0;
  for (int i = rounds - policy.consecutive_hits; i < rounds; ++i)
    if (score_history[static_cast<std::size_t>(i)] < policy.threshold) return 0;
  return 1;
}

RemoteScorerConfig RemoteScorerConfig::from_env() {
  RemoteScorerConfig cfg;
  if (const char* url = std::getenv("RISKLOOM_SCORER_URL")) cfg.endpoint = url;
  return cfg;
}

namespace {

// "http://host:port/path" -> ("http://host:port", "/path")
std::pair<std::string, std::string> split_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw Error("endpoint must include a scheme: " + url);
  std::size_t path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

}  // namespace

double score_remote(std::string_view text, const RemoteScorerConfig& config) {
  if (config.endpoint.empty()) throw Error("remote scorer endpoint is not configured");
  auto [base, path] = split_url(config.endpoint);
  httplib::Client client(base);
  client.set_connection_timeout(0, config.connect_timeout_ms * 1000);
  client.set_read_timeout(0, config.read_timeout_ms * 1000);

  nlohmann::json body{{"text", std::string(text)}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      throw ScorerTimeoutError("remote scorer timed out: " + httplib::to_string(err));
    throw TransportError("remote scorer unreachable: " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw BadResponseError("remote scorer returned HTTP " + std::to_string(res->status));
  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("score") || !reply["score"].is_number())
    throw BadResponseError("remote scorer reply lacks a numeric 'score'");
  double score = reply["score"].get<double>();
  if (!std::isfinite(score)) throw BadResponseError("remote scorer returned a non-finite score");
  if (score < 0.0) score = 0.0;
  if (score > 1.0) score = 1.0;
  return score;
}

}  // namespace riskloom
