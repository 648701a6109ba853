#include "riskloom/conversation.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace riskloom {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_url_token(std::string_view token) {
  return token.starts_with("http://") || token.starts_with("https://") ||
         token.starts_with("www.");
}

bool chrono_less(const Message& a, const Message& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.id < b.id;
}

}  // namespace

std::string clean_text(std::string_view raw) {
  // Drop spans enclosed in square brackets, including nested ones. A stray
  // closing bracket without an opener is kept as literal text.
  std::string unbracketed;
  unbracketed.reserve(raw.size());
  int depth = 0;
  for (char c : raw) {
    if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (depth > 0)
        --depth;
      else
        unbracketed.push_back(c);
    } else if (depth == 0) {
      unbracketed.push_back(c);
    }
  }

  // Tokenize on whitespace (this removes newlines and collapses runs),
  // dropping URL tokens.
  std::string out;
  std::size_t i = 0;
  while (i < unbracketed.size()) {
    while (i < unbracketed.size() && is_space(unbracketed[i])) ++i;
    std::size_t start = i;
    while (i < unbracketed.size() && !is_space(unbracketed[i])) ++i;
    if (i == start) break;
    std::string_view token(&unbracketed[start], i - start);
    if (is_url_token(token)) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(token);
  }
  return out;
}

const std::vector<Message>* ThreadTree::replies_to(const std::string& id) const {
  auto it = children.find(id);
  return it == children.end() ? nullptr : &it->second;
}

std::size_t ThreadTree::comment_count() const {
  std::size_t n = 0;
  for (const auto& [parent, list] : children) n += list.size();
  return n;
}

std::vector<const Message*> ThreadTree::flatten() const {
  std::vector<const Message*> all;
  all.push_back(&root);
  for (const auto& [parent, list] : children)
    for (const auto& m : list) all.push_back(&m);
  std::sort(all.begin(), all.end(),
            [](const Message* a, const Message* b) { return chrono_less(*a, *b); });
  return all;
}

ThreadTree build_tree(std::vector<Message> messages, std::string target_author) {
  std::size_t root_count = 0;
  for (const auto& m : messages)
    if (m.kind == MessageKind::Submission) ++root_count;
  if (root_count == 0) throw MissingRootError("thread has no submission");
  if (root_count > 1) throw MultipleRootsError("thread has more than one submission");

  std::unordered_map<std::string, const Message*> by_id;
  for (const auto& m : messages) {
    if (!by_id.emplace(m.id, &m).second)
      throw Error("duplicate message id: " + m.id);
  }

  ThreadTree tree;
  tree.target_author = std::move(target_author);
  for (auto& m : messages) {
    if (m.kind == MessageKind::Submission) {
      if (m.parent_id) throw Error("submission " + m.id + " has a parent_id");
      tree.root = m;
    } else {
      if (!m.parent_id) throw OrphanCommentError("comment " + m.id + " has no parent_id");
      if (*m.parent_id == m.id || by_id.find(*m.parent_id) == by_id.end())
        throw OrphanCommentError("comment " + m.id + " replies to unknown message " +
                                 *m.parent_id);
      tree.children[*m.parent_id].push_back(std::move(m));
    }
  }

  for (auto& [parent, list] : tree.children)
    std::sort(list.begin(), list.end(), chrono_less);

  // Everything must be reachable from the root; parents all resolve, so an
  // unreachable message implies a cycle among comments.
  std::size_t reached = 0;
  std::deque<const std::string*> queue;
  queue.push_back(&tree.root.id);
  while (!queue.empty()) {
    const std::string* id = queue.front();
    queue.pop_front();
    ++reached;
    if (const auto* replies = tree.replies_to(*id))
      for (const auto& m : *replies) queue.push_back(&m.id);
  }
  if (reached != messages.size())
    throw CycleDetectedError("thread contains messages not reachable from the root");

  return tree;
}

namespace {

std::string cleaned_text_of(const Message& m) {
  if (m.title && !m.title->empty()) return clean_text(*m.title + "\n" + m.body);
  return clean_text(m.body);
}

}  // namespace

std::vector<RoleTaggedMessage> extract_relevant(const ThreadTree& tree) {
  std::unordered_map<std::string, const Message*> parent_of;  // id -> parent message
  std::unordered_map<std::string, const Message*> by_id;
  by_id.emplace(tree.root.id, &tree.root);
  for (const auto& [parent, list] : tree.children)
    for (const auto& m : list) by_id.emplace(m.id, &m);
  for (const auto& [parent, list] : tree.children)
    for (const auto& m : list) parent_of.emplace(m.id, by_id.at(parent));

  const std::string& target = tree.target_author;
  bool target_in_comments = false;
  bool target_anywhere = tree.root.author == target;
  for (const auto& [parent, list] : tree.children)
    for (const auto& m : list)
      if (m.author == target) {
        target_in_comments = true;
        target_anywhere = true;
      }
  if (!target_anywhere)
    throw TargetAbsentError("target '" + target + "' authored nothing in the thread");

  std::set<std::string> keep;
  if (target_in_comments) {
    for (const auto& [id, msg] : by_id) {
      if (msg->author != target) continue;
      keep.insert(id);
      // direct replies to a target message
      if (const auto* replies = tree.replies_to(id))
        for (const auto& r : *replies) keep.insert(r.id);
      // ancestor chain up to and including the primary post
      const Message* cur = msg;
      while (true) {
        auto it = parent_of.find(cur->id);
        if (it == parent_of.end()) break;
        cur = it->second;
        keep.insert(cur->id);
      }
    }
  } else {
    // Target appears only as the author of the primary post: keep the post
    // and its direct children.
    keep.insert(tree.root.id);
    if (const auto* replies = tree.replies_to(tree.root.id))
      for (const auto& r : *replies) keep.insert(r.id);
  }

  std::vector<RoleTaggedMessage> out;
  for (const Message* m : tree.flatten()) {
    if (!keep.count(m->id)) continue;
    out.push_back({m->author == target ? Role::Target : Role::Context,
                   cleaned_text_of(*m)});
  }
  return out;
}

std::string serialize_block(const RoleTaggedMessage& message) {
  std::string block = "[MSG] [USER] ";
  block += message.role == Role::Target ? "TARGET" : "CONTEXT";
  if (!message.text.empty()) {
    block.push_back(' ');
    block += message.text;
  }
  return block;
}

std::string serialize(const std::vector<RoleTaggedMessage>& messages) {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out.push_back(' ');
    out += serialize_block(m);
  }
  return out;
}

std::vector<std::string> split_serialized(std::string_view serialized) {
  constexpr std::string_view kMarker = "[MSG] ";
  std::vector<std::string> blocks;
  std::size_t pos = serialized.find(kMarker);
  if (pos == std::string_view::npos) {
    if (!serialized.empty()) blocks.emplace_back(serialized);
    return blocks;
  }
  while (pos != std::string_view::npos) {
    std::size_t next = serialized.find(kMarker, pos + kMarker.size());
    std::string_view block = serialized.substr(
        pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    while (!block.empty() && block.back() == ' ') block.remove_suffix(1);
    blocks.emplace_back(block);
    pos = next;
  }
  return blocks;
}

}  // namespace riskloom
