#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "riskloom/errors.hpp"

namespace riskloom {

enum class MessageKind { Submission, Comment };

/// One post or comment inside a thread.
struct Message {
  std::string id;
  std::optional<std::string> parent_id;  // absent for the primary post
  std::string author;
  std::optional<std::string> title;  // primary posts only
  std::string body;
  std::int64_t timestamp = 0;  // epoch seconds
  MessageKind kind = MessageKind::Comment;
};

/// A primary post plus its hierarchical comments. Sibling lists are kept in
/// (timestamp, id) order.
struct ThreadTree {
  Message root;
  std::map<std::string, std::vector<Message>> children;  // parent id -> replies
  std::string target_author;

  const std::vector<Message>* replies_to(const std::string& id) const;
  std::size_t comment_count() const;

  /// All messages of the thread in chronological (timestamp, id) order.
  std::vector<const Message*> flatten() const;
};

enum class Role { Target, Context };

struct RoleTaggedMessage {
  Role role;
  std::string text;  // already cleaned
};

struct MissingRootError : Error {
  using Error::Error;
};
struct MultipleRootsError : Error {
  using Error::Error;
};
struct OrphanCommentError : Error {
  using Error::Error;
};
struct CycleDetectedError : Error {
  using Error::Error;
};
struct TargetAbsentError : Error {
  using Error::Error;
};

/// Strips URLs, newlines and bracketed spans, then collapses whitespace.
/// Idempotent; empty input yields empty output.
std::string clean_text(std::string_view raw);

/// Assembles a ThreadTree from an unordered message list. Exactly one
/// submission is required and every comment's parent must resolve.
ThreadTree build_tree(std::vector<Message> messages, std::string target_author);

/// Selects the target-relevant slice of a thread and role-tags it.
///
/// When the target wrote at least one comment, keeps every target message,
/// every direct reply to a target message and the ancestor chain from each
/// target comment up to the primary post. When the target only authored the
/// primary post, keeps the post plus its direct children. Output is in
/// chronological order; texts are cleaned, with the root's title prepended
/// to its body when present.
std::vector<RoleTaggedMessage> extract_relevant(const ThreadTree& tree);

/// Renders one "[MSG] [USER] {TARGET|CONTEXT} {text}" block.
std::string serialize_block(const RoleTaggedMessage& message);

/// Concatenates blocks separated by single spaces.
std::string serialize(const std::vector<RoleTaggedMessage>& messages);

/// Splits a serialized string back into its "[MSG] ..." blocks. A string
/// without any "[MSG] " marker is returned as a single raw block.
std::vector<std::string> split_serialized(std::string_view serialized);

}  // namespace riskloom
