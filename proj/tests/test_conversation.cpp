#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "riskloom/conversation.hpp"

using namespace riskloom;

namespace {

Message submission(std::string id, std::string author, std::string body,
                   std::int64_t ts, std::optional<std::string> title = std::nullopt) {
  Message m;
  m.id = std::move(id);
  m.author = std::move(author);
  m.title = std::move(title);
  m.body = std::move(body);
  m.timestamp = ts;
  m.kind = MessageKind::Submission;
  return m;
}

Message comment(std::string id, std::string parent, std::string author, std::string body,
                std::int64_t ts) {
  Message m;
  m.id = std::move(id);
  m.parent_id = std::move(parent);
  m.author = std::move(author);
  m.body = std::move(body);
  m.timestamp = ts;
  m.kind = MessageKind::Comment;
  return m;
}

}  // namespace

TEST_CASE("clean_text removes urls, newlines and bracketed spans") {
  CHECK(clean_text("I feel low\nsee https://x.y/z please") == "I feel low see please");
  CHECK(clean_text("") == "");
  CHECK(clean_text("[removed] hello [deleted]") == "hello");
  CHECK(clean_text("go to www.example.com now") == "go to now");
  CHECK(clean_text("a  \t b \r\n c") == "a b c");
  CHECK(clean_text("nested [a [b] c] end") == "nested end");
  CHECK(clean_text("stray ] bracket") == "stray ] bracket");
  CHECK(clean_text("   padded   ") == "padded");
}

TEST_CASE("clean_text is idempotent on random noisy inputs") {
  std::mt19937 gen(20250811);
  const std::vector<std::string> pieces = {
      "sad",  "hello",  "https://a.b/c", "www.x.org", "[removed]", "[",    "]",
      "\n",   "\r\n",   "  ",            "\t",        "feel low",  "a[b]", "x]y[",
      "http://q", "plain",
  };
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 12);
  for (int i = 0; i < 1000; ++i) {
    std::string s;
    int n = len(gen);
    for (int j = 0; j < n; ++j) {
      s += pieces[pick(gen)];
      s.push_back(' ');
    }
    std::string once = clean_text(s);
    CHECK(clean_text(once) == once);
  }
}

TEST_CASE("build_tree assembles chains and lone posts") {
  auto tree = build_tree({submission("r", "alice", "root", 10),
                          comment("c1", "r", "bob", "one", 20),
                          comment("c2", "c1", "alice", "two", 30)},
                         "alice");
  CHECK(tree.root.id == "r");
  REQUIRE(tree.replies_to("r") != nullptr);
  CHECK(tree.replies_to("r")->size() == 1);
  REQUIRE(tree.replies_to("c1") != nullptr);
  CHECK(tree.replies_to("c1")->at(0).id == "c2");
  CHECK(tree.comment_count() == 2);

  auto lone = build_tree({submission("r", "alice", "root", 10)}, "alice");
  CHECK(lone.comment_count() == 0);
}

TEST_CASE("build_tree rejects malformed threads") {
  CHECK_THROWS_AS(build_tree({comment("c1", "missing", "bob", "x", 1)}, "bob"),
                  MissingRootError);
  CHECK_THROWS_AS(build_tree({submission("a", "x", "1", 1), submission("b", "y", "2", 2)},
                             "x"),
                  MultipleRootsError);
  CHECK_THROWS_AS(build_tree({submission("r", "x", "1", 1),
                              comment("c1", "nope", "y", "2", 2)},
                             "x"),
                  OrphanCommentError);
  // c1 and c2 reference each other: parents resolve but nothing links to root
  CHECK_THROWS_AS(build_tree({submission("r", "x", "1", 1),
                              comment("c1", "c2", "y", "2", 2),
                              comment("c2", "c1", "z", "3", 3)},
                             "x"),
                  CycleDetectedError);
}

TEST_CASE("build_tree orders siblings by timestamp with id tie-break") {
  auto tree = build_tree({submission("r", "a", "root", 10),
                          comment("cb", "r", "b", "later", 30),
                          comment("ca", "r", "c", "earlier", 20),
                          comment("z", "r", "d", "tie", 30)},
                         "a");
  const auto& siblings = *tree.replies_to("r");
  REQUIRE(siblings.size() == 3);
  CHECK(siblings[0].id == "ca");
  CHECK(siblings[1].id == "cb");
  CHECK(siblings[2].id == "z");
}

TEST_CASE("build_tree then flattening recovers the input multiset") {
  std::mt19937 gen(99);
  for (int iter = 0; iter < 200; ++iter) {
    std::uniform_int_distribution<int> size(1, 20);
    int n = size(gen);
    std::vector<Message> msgs;
    msgs.push_back(submission("m0", "a0", "root", 0));
    for (int i = 1; i < n; ++i) {
      std::uniform_int_distribution<int> parent(0, i - 1);
      msgs.push_back(comment("m" + std::to_string(i),
                             "m" + std::to_string(parent(gen)),
                             "a" + std::to_string(i % 4), "b", i * 7 % 13));
    }
    std::shuffle(msgs.begin(), msgs.end(), gen);
    std::vector<std::string> want;
    for (const auto& m : msgs) want.push_back(m.id);
    std::sort(want.begin(), want.end());

    auto tree = build_tree(msgs, "a0");
    std::vector<std::string> got;
    for (const Message* m : tree.flatten()) got.push_back(m->id);
    std::sort(got.begin(), got.end());
    CHECK(got == want);
  }
}

TEST_CASE("extract_relevant: target only in the primary post keeps direct children") {
  // Root by the target with 3 direct children and 2 grandchildren; the
  // grandchildren are discarded.
  auto tree = build_tree({submission("r", "tgt", "I feel numb", 100, "Help"),
                          comment("c1", "r", "u1", "hang in there", 110),
                          comment("c2", "r", "u2", "same here", 120),
                          comment("c3", "r", "u3", "talk to someone", 130),
                          comment("g1", "c1", "u4", "agreed", 140),
                          comment("g2", "c2", "u5", "me too", 150)},
                         "tgt");
  auto kept = extract_relevant(tree);
  REQUIRE(kept.size() == 4);
  CHECK(kept[0].role == Role::Target);
  CHECK(kept[0].text == "Help I feel numb");
  for (std::size_t i = 1; i < kept.size(); ++i) CHECK(kept[i].role == Role::Context);

  int targets = 0;
  for (const auto& m : kept) targets += m.role == Role::Target ? 1 : 0;
  CHECK(targets == 1);
}

TEST_CASE("extract_relevant: target in comments keeps replies and ancestor chain") {
  // Non-target root; the target comments at depth 2; a sibling branch is
  // discarded.
  auto tree = build_tree({submission("r", "op", "original post", 100),
                          comment("c1", "r", "u1", "first reply", 110),
                          comment("c2", "c1", "tgt", "i cant sleep", 120),
                          comment("c3", "c2", "u2", "have you tried therapy", 130),
                          comment("c4", "c2", "u3", "sorry to hear", 140),
                          comment("c5", "r", "u4", "unrelated", 115)},
                         "tgt");
  auto kept = extract_relevant(tree);
  REQUIRE(kept.size() == 5);
  CHECK(kept[0].text == "original post");
  CHECK(kept[0].role == Role::Context);
  CHECK(kept[1].text == "first reply");
  CHECK(kept[1].role == Role::Context);
  CHECK(kept[2].text == "i cant sleep");
  CHECK(kept[2].role == Role::Target);
  CHECK(kept[3].text == "have you tried therapy");
  CHECK(kept[4].text == "sorry to hear");
}

TEST_CASE("extract_relevant: target root that also comments keeps both routes") {
  auto tree = build_tree({submission("r", "tgt", "root text", 100),
                          comment("c1", "r", "u1", "reply", 110),
                          comment("c2", "c1", "tgt", "self follow-up", 120),
                          comment("c3", "r", "u2", "another", 130),
                          comment("g1", "c3", "u3", "deep", 140)},
                         "tgt");
  auto kept = extract_relevant(tree);
  // Case A applies: target messages r and c2, replies to them (c1, c3), and
  // c2's ancestor chain (c1, r). g1 is discarded.
  REQUIRE(kept.size() == 4);
  int targets = 0;
  for (const auto& m : kept) targets += m.role == Role::Target ? 1 : 0;
  CHECK(targets == 2);
}

TEST_CASE("extract_relevant errors when the target authored nothing") {
  auto tree = build_tree({submission("r", "op", "post", 100),
                          comment("c1", "r", "u1", "reply", 110)},
                         "ghost");
  CHECK_THROWS_AS(extract_relevant(tree), TargetAbsentError);
}

TEST_CASE("extract_relevant output follows thread chronology") {
  std::mt19937 gen(7);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<Message> msgs;
    msgs.push_back(submission("m0", "a0", "root", 0));
    std::uniform_int_distribution<int> size(2, 15);
    int n = size(gen);
    for (int i = 1; i < n; ++i) {
      std::uniform_int_distribution<int> parent(0, i - 1);
      std::uniform_int_distribution<int> author(0, 3);
      msgs.push_back(comment("m" + std::to_string(i),
                             "m" + std::to_string(parent(gen)),
                             "a" + std::to_string(author(gen)), "text", i));
    }
    auto tree = build_tree(msgs, "a1");
    std::vector<RoleTaggedMessage> kept;
    try {
      kept = extract_relevant(tree);
    } catch (const TargetAbsentError&) {
      continue;
    }
    CHECK(!kept.empty());
    int targets = 0;
    for (const auto& m : kept) targets += m.role == Role::Target ? 1 : 0;
    CHECK(targets >= 1);
  }
}

TEST_CASE("serialize renders the training format") {
  std::vector<RoleTaggedMessage> msgs = {{Role::Target, "i cant sleep"},
                                         {Role::Context, "have you tried therapy"}};
  CHECK(serialize(msgs) ==
        "[MSG] [USER] TARGET i cant sleep [MSG] [USER] CONTEXT have you tried therapy");
  CHECK(serialize({}) == "");
  CHECK(serialize({{Role::Target, "Help I feel numb"}}) ==
        "[MSG] [USER] TARGET Help I feel numb");
}

TEST_CASE("serialize emits one well-formed block per message") {
  std::mt19937 gen(3);
  std::uniform_int_distribution<int> size(0, 12);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<RoleTaggedMessage> msgs;
    int n = size(gen);
    for (int i = 0; i < n; ++i)
      msgs.push_back({coin(gen) ? Role::Target : Role::Context,
                      "w" + std::to_string(i)});
    std::string s = serialize(msgs);
    auto blocks = split_serialized(s);
    REQUIRE(blocks.size() == msgs.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      bool target = msgs[i].role == Role::Target;
      CHECK(blocks[i].rfind(target ? "[MSG] [USER] TARGET " : "[MSG] [USER] CONTEXT ", 0) ==
            0);
    }
  }
}

TEST_CASE("empty texts keep their block slot") {
  std::vector<RoleTaggedMessage> msgs = {{Role::Target, ""}, {Role::Context, "hi"}};
  CHECK(serialize(msgs) == "[MSG] [USER] TARGET [MSG] [USER] CONTEXT hi");
  CHECK(split_serialized(serialize(msgs)).size() == 2);
}
