#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "riskloom/conversation.hpp"

namespace riskloom {

enum class SubjectSource { ScrapedPositive, ScrapedNegative, Provided };

const char* to_string(SubjectSource source);
SubjectSource subject_source_from_string(std::string_view name);

/// A labeled subject with its chronological writing sequence.
struct SubjectRecord {
  std::string subject_id;
  int label = 0;  // 0 negative, 1 positive
  std::vector<std::string> writings;
  SubjectSource source = SubjectSource::Provided;

  std::string joined_text() const;  // writings joined by single spaces
};

struct CorpusManifest {
  struct Bucket {
    SubjectSource source;
    int label;
    std::size_t count;
  };
  std::vector<Bucket> counts;
  std::uint64_t sampling_seed = 0;
  std::int64_t created_at = 0;

  std::size_t total() const;
};

struct SchemaError : Error {
  std::size_t line;
  SchemaError(std::size_t line_number, const std::string& what)
      : Error("line " + std::to_string(line_number) + ": " + what), line(line_number) {}
};

struct SampleTooLargeError : Error {
  using Error::Error;
};

/// Parses a JSONL thread dump (one message per line) into ThreadTrees,
/// grouped by thread id in order of first appearance.
std::vector<ThreadTree> load_thread_dump(const std::filesystem::path& path);

/// Replaces authors and in-text participant names with "user" and strips
/// subreddit-style references to the given community names. Idempotent;
/// never changes message counts or tree shape.
ThreadTree anonymize(const ThreadTree& tree,
                     const std::vector<std::string>& communities = {"depression",
                                                                    "AdviceForTeens"});

/// Same text scrubbing but with author fields left intact, so the
/// TARGET/CONTEXT distinction survives for role tagging. Author names never
/// appear in serialized output, only inside texts, where they are replaced.
ThreadTree anonymize_texts(const ThreadTree& tree,
                           const std::vector<std::string>& communities = {
                               "depression", "AdviceForTeens"});

/// pos + neg_scraped + a seeded uniform sample (without replacement) of
/// sample_n subjects from neg_provided. Deterministic for a fixed seed.
std::pair<std::vector<SubjectRecord>, CorpusManifest> build_training_corpus(
    std::vector<SubjectRecord> pos, std::vector<SubjectRecord> neg_scraped,
    const std::vector<SubjectRecord>& neg_provided, std::size_t sample_n,
    std::uint64_t seed);

struct LabelStats {
  std::size_t posts = 0;
  std::size_t comments = 0;
  std::size_t max_comments = 0;
  std::size_t min_comments = 0;
  double avg_comments = 0.0;
  double avg_words_per_post = 0.0;
  double avg_self_comments = 0.0;
};

struct StatsReport {
  LabelStats negative;
  LabelStats positive;
  LabelStats overall;
};

struct LabeledTree {
  ThreadTree tree;
  int label = 0;
};

/// Volumetric statistics per label and overall.
StatsReport corpus_stats(const std::vector<LabeledTree>& trees);

/// Turns one thread into its target subject's writing sequence: every
/// relevant message becomes one serialized "[MSG] ..." block.
SubjectRecord subject_from_thread(const ThreadTree& tree, std::string subject_id,
                                  int label, SubjectSource source);

// Corpus JSONL: {"subject_id", "label", "source", "text", "writings"}.
// Readers accept lines without "writings" by splitting "text" on its
// "[MSG] " markers.
std::vector<SubjectRecord> load_corpus_jsonl(const std::filesystem::path& path);
void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<SubjectRecord>& records);

void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

}  // namespace riskloom
