#include "riskloom/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace riskloom {

using nlohmann::json;

const char* to_string(SubjectSource source) {
  switch (source) {
    case SubjectSource::ScrapedPositive: return "ScrapedPositive";
    case SubjectSource::ScrapedNegative: return "ScrapedNegative";
    case SubjectSource::Provided: return "Provided";
  }
  return "?";
}

SubjectSource subject_source_from_string(std::string_view name) {
  if (name == "ScrapedPositive") return SubjectSource::ScrapedPositive;
  if (name == "ScrapedNegative") return SubjectSource::ScrapedNegative;
  if (name == "Provided") return SubjectSource::Provided;
  throw Error("unknown subject source: " + std::string(name));
}

std::string SubjectRecord::joined_text() const {
  std::string out;
  for (const auto& w : writings) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::size_t CorpusManifest::total() const {
  std::size_t n = 0;
  for (const auto& b : counts) n += b.count;
  return n;
}

// ---------------------------------------------------------------------------
// thread dump loading

namespace {

const json& require_field(const json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(line, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key, std::size_t line) {
  const json& v = require_field(j, key, line);
  if (!v.is_string()) throw SchemaError(line, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

std::vector<ThreadTree> load_thread_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open thread dump: " + path.string());

  struct Group {
    std::vector<Message> messages;
    std::string target;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Group> groups;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    }
    if (!j.is_object()) throw SchemaError(lineno, "expected a JSON object");

    Message m;
    std::string thread_id = require_string(j, "thread_id", lineno);
    m.id = require_string(j, "id", lineno);
    const json& parent = require_field(j, "parent_id", lineno);
    if (parent.is_string())
      m.parent_id = parent.get<std::string>();
    else if (!parent.is_null())
      throw SchemaError(lineno, "field 'parent_id' must be a string or null");
    m.author = require_string(j, "author", lineno);
    std::string kind = require_string(j, "kind", lineno);
    if (kind == "submission")
      m.kind = MessageKind::Submission;
    else if (kind == "comment")
      m.kind = MessageKind::Comment;
    else
      throw SchemaError(lineno, "field 'kind' must be 'submission' or 'comment'");
    if (auto it = j.find("title"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw SchemaError(lineno, "field 'title' must be a string or null");
      m.title = it->get<std::string>();
    }
    m.body = require_string(j, "body", lineno);
    const json& created = require_field(j, "created_utc", lineno);
    if (!created.is_number_integer())
      throw SchemaError(lineno, "field 'created_utc' must be an integer");
    m.timestamp = created.get<std::int64_t>();
    if (m.timestamp < 0) throw SchemaError(lineno, "field 'created_utc' must be non-negative");
    std::string target = require_string(j, "target", lineno);

    auto [it, inserted] = groups.try_emplace(thread_id);
    if (inserted) {
      order.push_back(thread_id);
      it->second.target = target;
    } else if (it->second.target != target) {
      throw SchemaError(lineno, "inconsistent target for thread " + thread_id);
    }
    it->second.messages.push_back(std::move(m));
  }

  std::vector<ThreadTree> trees;
  trees.reserve(order.size());
  for (const auto& id : order) {
    Group& g = groups.at(id);
    trees.push_back(build_tree(std::move(g.messages), g.target));
  }
  return trees;
}

// ---------------------------------------------------------------------------
// anonymization

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string replace_whole_word(const std::string& text, const std::string& word,
                               const std::string& replacement) {
  if (word.empty()) return text;
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = text.find(word, pos);
    if (hit == std::string::npos) {
      out.append(text, pos, std::string::npos);
      return out;
    }
    bool left_ok = hit == 0 || !word_char(text[hit - 1]);
    std::size_t end = hit + word.size();
    bool right_ok = end == text.size() || !word_char(text[end]);
    out.append(text, pos, hit - pos);
    out += (left_ok && right_ok) ? replacement : word;
    pos = end;
  }
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Removes subreddit-style references ("r/name", "/r/name", "/name") to the
// given community, case-insensitively.
std::string strip_community_refs(const std::string& text, const std::string& community) {
  if (community.empty()) return text;
  const std::string lower_text = lowercase(text);
  const std::string needle = lowercase(community);
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t hit = lower_text.find(needle, pos);
    if (hit == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    std::size_t end = hit + needle.size();
    bool right_ok = end == text.size() || !word_char(text[end]);

    std::size_t start = std::string::npos;
    if (hit >= 2 && text.compare(hit - 2, 2, "r/") == 0) {
      start = hit - 2;
      if (start >= 1 && text[start - 1] == '/') --start;
    } else if (hit >= 1 && text[hit - 1] == '/') {
      start = hit - 1;
    }
    bool left_ok = start != std::string::npos &&
                   (start == 0 || !word_char(text[start - 1]));

    if (left_ok && right_ok) {
      out.append(text, pos, start - pos);
      pos = end;
    } else {
      out.append(text, pos, end - pos);
      pos = end;
    }
  }
  return out;
}

std::string collapse_spaces(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool prev_space = false;
  for (char c : text) {
    if (c == ' ') {
      if (prev_space) continue;
      prev_space = true;
    } else {
      prev_space = false;
    }
    out.push_back(c);
  }
  while (!out.empty() && out.front() == ' ') out.erase(out.begin());
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace

ThreadTree anonymize_texts(const ThreadTree& tree,
                           const std::vector<std::string>& communities) {
  std::vector<std::string> participants;
  participants.push_back(tree.root.author);
  for (const auto& [parent, list] : tree.children)
    for (const auto& m : list) participants.push_back(m.author);
  std::sort(participants.begin(), participants.end());
  participants.erase(std::unique(participants.begin(), participants.end()),
                     participants.end());

  auto scrub = [&](const std::string& text) {
    std::string s = text;
    for (const auto& c : communities) s = strip_community_refs(s, c);
    for (const auto& name : participants) s = replace_whole_word(s, name, "user");
    return collapse_spaces(s);
  };

  ThreadTree out = tree;
  auto scrub_message = [&](Message& m) {
    if (m.title) m.title = scrub(*m.title);
    m.body = scrub(m.body);
  };
  scrub_message(out.root);
  for (auto& [parent, list] : out.children)
    for (auto& m : list) scrub_message(m);
  return out;
}

ThreadTree anonymize(const ThreadTree& tree, const std::vector<std::string>& communities) {
  ThreadTree out = anonymize_texts(tree, communities);
  out.root.author = "user";
  for (auto& [parent, list] : out.children)
    for (auto& m : list) m.author = "user";
  out.target_author = "user";
  return out;
}

// ---------------------------------------------------------------------------
// corpus construction

namespace {

// Unbiased bounded draw; kept local so sampling is reproducible across
// standard library implementations.
std::uint64_t bounded_rand(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % n;
}

}  // namespace

std::pair<std::vector<SubjectRecord>, CorpusManifest> build_training_corpus(
    std::vector<SubjectRecord> pos, std::vector<SubjectRecord> neg_scraped,
    const std::vector<SubjectRecord>& neg_provided, std::size_t sample_n,
    std::uint64_t seed) {
  if (sample_n > neg_provided.size())
    throw SampleTooLargeError("sample_n " + std::to_string(sample_n) +
                              " exceeds provided pool of " +
                              std::to_string(neg_provided.size()));

  std::vector<std::size_t> indices(neg_provided.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < sample_n; ++i) {
    std::size_t j = i + bounded_rand(gen, indices.size() - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(sample_n);
  std::sort(indices.begin(), indices.end());

  std::vector<SubjectRecord> corpus;
  corpus.reserve(pos.size() + neg_scraped.size() + sample_n);
  std::size_t n_pos = pos.size();
  std::size_t n_neg_scraped = neg_scraped.size();
  for (auto& r : pos) corpus.push_back(std::move(r));
  for (auto& r : neg_scraped) corpus.push_back(std::move(r));
  for (std::size_t idx : indices) corpus.push_back(neg_provided[idx]);

  CorpusManifest manifest;
  manifest.counts = {{SubjectSource::ScrapedPositive, 1, n_pos},
                     {SubjectSource::ScrapedNegative, 0, n_neg_scraped},
                     {SubjectSource::Provided, 0, sample_n}};
  manifest.sampling_seed = seed;
  manifest.created_at = static_cast<std::int64_t>(std::time(nullptr));
  return {std::move(corpus), std::move(manifest)};
}

// ---------------------------------------------------------------------------
// volumetric statistics

namespace {

std::size_t word_count(const std::string& text) {
  std::istringstream ss(text);
  std::string tok;
  std::size_t n = 0;
  while (ss >> tok) ++n;
  return n;
}

struct StatsAccumulator {
  std::size_t posts = 0;
  std::size_t comments = 0;
  std::size_t max_comments = 0;
  std::size_t min_comments = std::numeric_limits<std::size_t>::max();
  std::size_t words = 0;
  std::size_t self_comments = 0;

  void add(const ThreadTree& tree) {
    ++posts;
    std::size_t c = tree.comment_count();
    comments += c;
    max_comments = std::max(max_comments, c);
    min_comments = std::min(min_comments, c);
    const Message& root = tree.root;
    std::string cleaned = root.title && !root.title->empty()
                              ? clean_text(*root.title + "\n" + root.body)
                              : clean_text(root.body);
    words += word_count(cleaned);
    for (const auto& [parent, list] : tree.children)
      for (const auto& m : list)
        if (m.author == tree.target_author) ++self_comments;
  }

  LabelStats finish() const {
    LabelStats s;
    s.posts = posts;
    s.comments = comments;
    if (posts == 0) return s;
    s.max_comments = max_comments;
    s.min_comments = min_comments;
    s.avg_comments = static_cast<double>(comments) / static_cast<double>(posts);
    s.avg_words_per_post = static_cast<double>(words) / static_cast<double>(posts);
    s.avg_self_comments = static_cast<double>(self_comments) / static_cast<double>(posts);
    return s;
  }
};

}  // namespace

StatsReport corpus_stats(const std::vector<LabeledTree>& trees) {
  StatsAccumulator neg, pos, all;
  for (const auto& lt : trees) {
    (lt.label == 1 ? pos : neg).add(lt.tree);
    all.add(lt.tree);
  }
  return {neg.finish(), pos.finish(), all.finish()};
}

SubjectRecord subject_from_thread(const ThreadTree& tree, std::string subject_id,
                                  int label, SubjectSource source) {
  SubjectRecord rec;
  rec.subject_id = std::move(subject_id);
  rec.label = label;
  rec.source = source;
  for (const auto& m : extract_relevant(tree)) rec.writings.push_back(serialize_block(m));
  return rec;
}

// ---------------------------------------------------------------------------
// corpus files

std::vector<SubjectRecord> load_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus: " + path.string());
  std::vector<SubjectRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    }
    SubjectRecord rec;
    rec.subject_id = require_string(j, "subject_id", lineno);
    const json& label = require_field(j, "label", lineno);
    if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1))
      throw SchemaError(lineno, "field 'label' must be 0 or 1");
    rec.label = label.get<int>();
    if (auto it = j.find("source"); it != j.end() && it->is_string())
      rec.source = subject_source_from_string(it->get<std::string>());
    if (auto it = j.find("writings"); it != j.end()) {
      if (!it->is_array()) throw SchemaError(lineno, "field 'writings' must be an array");
      for (const auto& w : *it) {
        if (!w.is_string()) throw SchemaError(lineno, "writings entries must be strings");
        rec.writings.push_back(w.get<std::string>());
      }
    } else {
      rec.writings = split_serialized(require_string(j, "text", lineno));
    }
    if (rec.writings.empty()) throw SchemaError(lineno, "subject has no writings");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<SubjectRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus: " + path.string());
  for (const auto& rec : records) {
    json j;
    j["subject_id"] = rec.subject_id;
    j["label"] = rec.label;
    j["source"] = to_string(rec.source);
    j["text"] = rec.joined_text();
    j["writings"] = rec.writings;
    out << j.dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  json counts = json::array();
  for (const auto& b : manifest.counts)
    counts.push_back({{"source", to_string(b.source)}, {"label", b.label}, {"count", b.count}});
  json j{{"counts", counts},
         {"sampling_seed", manifest.sampling_seed},
         {"created_at", manifest.created_at}};
  out << j.dump(2) << '\n';
}

}  // namespace riskloom
