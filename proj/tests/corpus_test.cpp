#include "lookahead/corpus.hpp"

#include <fstream>

#include "doctest.h"
#include "lookahead/json_canon.hpp"
#include "test_util.hpp"

using namespace lookahead;

TEST_SUITE("corpus") {

TEST_CASE("tokenize splits whitespace and detaches trailing punctuation") {
  CHECK(tokenize("Natalia sold 48 clips.") ==
        std::vector<std::string>{"Natalia", "sold", "48", "clips", "."});
  CHECK(tokenize("") == std::vector<std::string>{});
  // Word-internal apostrophe stays; the final period detaches.
  CHECK(tokenize("Let's solve this problem.") ==
        std::vector<std::string>{"Let's", "solve", "this", "problem", "."});
}

TEST_CASE("tokenize corner cases") {
  CHECK(tokenize("what?!") == std::vector<std::string>{"what", "?!"});
  CHECK(tokenize("...") == std::vector<std::string>{"..."});  // all punctuation: one token
  CHECK(tokenize("  a \t b\n") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("it's'") == std::vector<std::string>{"it's", "'"});
  CHECK(tokenize("me: go") == std::vector<std::string>{"me", ":", "go"});
  for (const auto& tok : tokenize("x.. y,, !! 'a'")) {
    CHECK(!tok.empty());
  }
}

TEST_CASE("tokenize is pure") {
  const std::string text = "Some mixed text, with 3 numbers: 1 2 3!";
  CHECK(tokenize(text) == tokenize(text));
}

TEST_CASE("build_vocab counts and determinism") {
  Corpus corpus;
  corpus.instances.push_back(Instance{"a b", "c", {}});
  const Vocab v = build_vocab(corpus);
  CHECK(v.size() == 8);  // 5 specials + a, b, c

  testing::TempDir dir("vocab");
  save_vocab(v, dir.path() / "v1.json");
  const Vocab v2 = build_vocab(corpus);
  save_vocab(v2, dir.path() / "v2.json");
  CHECK(read_text_file(dir.path() / "v1.json") == read_text_file(dir.path() / "v2.json"));

  const Vocab loaded = load_vocab(dir.path() / "v1.json");
  CHECK(loaded.token_to_id == v.token_to_id);
  CHECK(loaded.id_to_token == v.id_to_token);
}

TEST_CASE("build_vocab dedupes across instances") {
  // 10 tokens total, 5 distinct: a b c a | d b | c d e | a e.
  Corpus corpus;
  corpus.instances.push_back(Instance{"a b c a", "d b", {}});
  corpus.instances.push_back(Instance{"c d e", "a e", {}});
  const Vocab v = build_vocab(corpus);
  CHECK(v.size() == Vocab::kNumSpecials + 5);
  // First-appearance order after the specials.
  CHECK(v.id_of("a") == 5);
  CHECK(v.id_of("b") == 6);
  CHECK(v.id_of("c") == 7);
  CHECK(v.id_of("d") == 8);
  CHECK(v.id_of("e") == 9);
}

TEST_CASE("instance order changes ids but not membership") {
  Corpus fwd, rev;
  fwd.instances = {Instance{"a b", "c", {}}, Instance{"d", "e f", {}}};
  rev.instances = {fwd.instances[1], fwd.instances[0]};
  const Vocab vf = build_vocab(fwd);
  const Vocab vr = build_vocab(rev);
  CHECK(vf.size() == vr.size());
  for (const auto& [tok, id] : vf.token_to_id) {
    CHECK(vr.token_to_id.count(tok) == 1);
  }
  CHECK(vf.id_of("a") != vr.id_of("a"));
}

TEST_CASE("encode falls back to UNK, decode round-trips") {
  Corpus corpus;
  corpus.instances.push_back(Instance{"a b", ".", {}});
  const Vocab v = build_vocab(corpus);
  CHECK(encode({"zzz"}, v) == std::vector<int>{Vocab::kUnk});
  CHECK(encode({"<bos>"}, v) == std::vector<int>{0});

  const auto ids = encode(tokenize("a b ."), v);
  CHECK(decode(ids, v) == "a b.");
  CHECK_THROWS_WITH_AS(decode({v.size()}, v), doctest::Contains("unknown id"),
                       std::out_of_range);
  CHECK_THROWS_AS(decode({-1}, v), std::out_of_range);
}

TEST_CASE("round trip is identity on normalized text") {
  const Corpus corpus = testing::random_word_corpus(7, 40);
  const Vocab v = build_vocab(corpus);
  for (const auto& inst : corpus.instances) {
    CHECK(decode(encode(tokenize(inst.instruction), v), v) == inst.instruction);
    CHECK(decode(encode(tokenize(inst.output), v), v) == inst.output);
  }
}

TEST_CASE("pack_example layout and mask") {
  Corpus corpus;
  corpus.instances.push_back(Instance{"q", "a", {}});
  const Vocab v = build_vocab(corpus);
  const TrainingSequence seq = pack_example(corpus.instances[0], v);
  CHECK(seq.ids.size() == 5);  // BOS q SEP a EOS
  CHECK(seq.loss_mask == std::vector<bool>{false, false, false, true, true});
  CHECK(seq.ids.front() == Vocab::kBos);
  CHECK(seq.ids[2] == Vocab::kSep);
  CHECK(seq.ids.back() == Vocab::kEos);
}

TEST_CASE("supervised count is output tokens plus EOS") {
  Corpus corpus;
  corpus.instances.push_back(Instance{"one two three", "w x y z", {}});
  const Vocab v = build_vocab(corpus);
  const TrainingSequence seq = pack_example(corpus.instances[0], v);
  CHECK(seq.supervised_count() == 5);  // 4 output tokens + EOS
  CHECK(packed_length(corpus.instances[0]) == seq.ids.size());
}

TEST_CASE("pack_example validation") {
  Corpus corpus;
  corpus.instances.push_back(Instance{"q", "a", {}});
  const Vocab v = build_vocab(corpus);
  CHECK_THROWS_WITH_AS(pack_example(Instance{"q", "   ", {}}, v, 0, 3),
                       doctest::Contains("output is empty"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(pack_example(Instance{" ", "a", {}}, v),
                       doctest::Contains("instruction is empty"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(pack_example(Instance{"q q q q", "a", {}}, v, 4, 17),
                       doctest::Contains("sequence too long: instance 17"),
                       std::invalid_argument);
}

TEST_CASE("mask invariants hold on random corpora") {
  const Corpus corpus = testing::random_word_corpus(21, 60);
  const Vocab v = build_vocab(corpus);
  const auto seqs = pack_corpus(corpus, v);
  REQUIRE(seqs.size() == corpus.instances.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto& seq = seqs[i];
    CHECK(seq.instance_index == i);
    CHECK(seq.ids.size() == seq.loss_mask.size());
    const std::size_t sep_pos =
        static_cast<std::size_t>(std::find(seq.ids.begin(), seq.ids.end(), Vocab::kSep) -
                                 seq.ids.begin());
    for (std::size_t t = 0; t <= sep_pos; ++t) CHECK(!seq.loss_mask[t]);
    for (std::size_t t = sep_pos + 1; t < seq.ids.size(); ++t) CHECK(seq.loss_mask[t]);
    CHECK(seq.supervised_count() ==
          tokenize(corpus.instances[i].output).size() + 1);
  }
}

TEST_CASE("load_corpus parses JSONL and reports line numbers") {
  testing::TempDir dir("corpus_io");
  const auto path = dir.path() / "data.jsonl";
  {
    std::ofstream f(path);
    f << R"({"instruction":"i1","output":"o1"})" << "\n";
    f << R"({"instruction":"i2","output":"o2","tags":["harmful"]})" << "\n";
  }
  const Corpus c = load_corpus(path);
  REQUIRE(c.instances.size() == 2);
  CHECK(c.instances[0].instruction == "i1");
  CHECK(c.instances[1].tags == std::vector<std::string>{"harmful"});

  const auto bad = dir.path() / "bad.jsonl";
  {
    std::ofstream f(bad);
    f << R"({"instruction":"only"})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(bad), doctest::Contains("line 1"), std::runtime_error);

  const auto bad_tag = dir.path() / "bad_tag.jsonl";
  {
    std::ofstream f(bad_tag);
    f << R"({"instruction":"i","output":"o","tags":["nonsense"]})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(bad_tag), doctest::Contains("unknown tag"),
                       std::runtime_error);

  const auto bad_json = dir.path() / "bad_json.jsonl";
  {
    std::ofstream f(bad_json);
    f << R"({"instruction":"i","output":"o"})" << "\n";
    f << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(bad_json), doctest::Contains("line 2"),
                       std::runtime_error);
  CHECK_THROWS_AS(load_corpus(dir.path() / "missing.jsonl"), std::runtime_error);
}

TEST_CASE("save_corpus round trip preserves order and tags") {
  testing::TempDir dir("corpus_save");
  Corpus corpus;
  corpus.instances.push_back(Instance{"a", "b", {"benign", "task"}});
  corpus.instances.push_back(Instance{"c", "d", {}});
  const auto path = dir.path() / "c.jsonl";
  save_corpus(corpus, path);
  const Corpus loaded = load_corpus(path);
  REQUIRE(loaded.instances.size() == 2);
  CHECK(loaded.instances[0].tags == corpus.instances[0].tags);
  CHECK(loaded.instances[1].instruction == "c");
  // Canonical form: sorted keys, compact, empty tags omitted.
  CHECK(read_text_file(path) ==
        "{\"instruction\":\"a\",\"output\":\"b\",\"tags\":[\"benign\",\"task\"]}\n"
        "{\"instruction\":\"c\",\"output\":\"d\"}\n");
}

}  // TEST_SUITE
