#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oid/corpus.hpp"
#include "oid/embeddings.hpp"
#include "oid/error.hpp"
#include "oid/synthetic.hpp"
#include "oid/tokenizer.hpp"
#include "oid/vocabulary.hpp"

using namespace oid;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / ("oid_test_" + name);
  std::ofstream(p) << content;
  return p;
}

std::vector<TaggedUtterance> column(const std::string& text) {
  std::istringstream in(text);
  return read_tagged_corpus(in, CorpusFormat::Column);
}

}  // namespace

TEST_CASE("tokenize splits punctuation") {
  auto u = tokenize("reserve a seat.");
  CHECK(u.tokens == std::vector<std::string>{"reserve", "a", "seat", "."});
  validate(u);
}

TEST_CASE("tokenize empty input") {
  CHECK(tokenize("").tokens.empty());
  CHECK(tokenize("   \t ").tokens.empty());
}

TEST_CASE("tokenize keeps clock times whole") {
  auto u = tokenize("Please make a 10:30 sharp appointment for a haircut");
  REQUIRE(u.size() == 9);
  CHECK(u.tokens[3] == "10:30");
  CHECK(u.tokens[0] == "Please");
}

TEST_CASE("tokenize offsets reproduce tokens") {
  const std::string text = "How do I don't-care e-mail 3.5 files, (quickly)?";
  auto u = tokenize(text);
  REQUIRE(u.tokens.size() == u.char_offsets.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto& o = u.char_offsets[i];
    CHECK(o.start < o.end);
    CHECK(o.end <= text.size());
    CHECK(text.substr(o.start, o.end - o.start) == u.tokens[i]);
  }
  std::string joined;
  for (const auto& t : u.tokens) joined += t + " ";
  CHECK(tokenize(joined).tokens == u.tokens);
}

TEST_CASE("load_embeddings reads vectors") {
  auto p = temp_file("emb2.txt", "a 1.0 0.0\nb 0.0 1.0\n");
  auto t = load_embeddings(p, UnkPolicy::Zero);
  CHECK(t.dimension() == 2);
  CHECK(t.lookup("a")[0] == 1.0);
  CHECK(t.lookup("a")[1] == 0.0);
  CHECK(t.lookup("zzz-unseen").isZero());
}

TEST_CASE("load_embeddings reports dimension mismatch with line") {
  auto p = temp_file("emb_bad.txt", "a 1.0 0.0\nb 0.0 1.0\nc 1.0\n");
  try {
    load_embeddings(p);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("embedding lookup is deterministic under both policies") {
  EmbeddingTable t(8, UnkPolicy::HashedRandom);
  const auto a = t.lookup("Quux");
  CHECK(a.isApprox(t.lookup("Quux")));
  CHECK(std::abs(a.norm() - 1.0) < 1e-12);
  CHECK(!a.isApprox(t.lookup("quuz")));
  CHECK(a.isApprox(t.lookup("quux")));
  t.set_unk_policy(UnkPolicy::Zero);
  CHECK(t.lookup("Quux").isZero());
}

TEST_CASE("read column corpus") {
  auto c = column("make\tACTION\nappointment\tOBJECT\n\n");
  REQUIRE(c.size() == 1);
  CHECK(c[0].tags == std::vector<TagLabel>{TagLabel::Action, TagLabel::Object});
  auto lower = column("# id = x1\n# domain = office\nthe\tnone\nchart\tobject\n");
  REQUIRE(lower.size() == 1);
  CHECK(lower[0].tags[1] == TagLabel::Object);
  CHECK(lower[0].utterance.id == "x1");
  CHECK(lower[0].domain == "office");
}

TEST_CASE("jsonl token/tag mismatch names the record") {
  std::istringstream in(R"({"text":"a b","tags":["NONE","NONE"]})"
                        "\n"
                        R"({"text":"one two three","tags":["NONE","NONE"]})"
                        "\n");
  try {
    read_tagged_corpus(in, CorpusFormat::Jsonl);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("record 2") != std::string::npos);
    CHECK(e.line() == 2);
  }
}

TEST_CASE("unknown tag is a format error") {
  CHECK_THROWS_AS(column("make\tVERBISH\n"), FormatError);
}

TEST_CASE("proxy tag corpus maps parser tags") {
  std::istringstream in("reserve\tVERB\nseat\tOBJ\n\nthe\tNONE\nend\tNONE\n");
  auto c = read_proxy_tag_corpus(in);
  REQUIRE(c.size() == 2);
  CHECK(c[0].tags == std::vector<TagLabel>{TagLabel::Action, TagLabel::Object});
  CHECK(c[1].tags == std::vector<TagLabel>{TagLabel::None, TagLabel::None});
  std::istringstream bad("seat\tNOUN\n");
  CHECK_THROWS_AS(read_proxy_tag_corpus(bad), FormatError);
}

TEST_CASE("rule-based proxy tagger") {
  auto u = tokenize("reserve a seat");
  auto t = rule_based_proxy_tagger(u, {"reserve"}, {"seat"});
  CHECK(t.tags == std::vector<TagLabel>{TagLabel::Action, TagLabel::None, TagLabel::Object});
  auto none = rule_based_proxy_tagger(u, {}, {});
  CHECK(none.tags == std::vector<TagLabel>(3, TagLabel::None));
  auto both = rule_based_proxy_tagger(u, {"seat"}, {"seat"});
  CHECK(both.tags[2] == TagLabel::Action);
}

TEST_CASE("corpus round trip in both formats") {
  SyntheticConfig sc;
  sc.count = 40;
  auto corpus = generate_synthetic_corpus(sc).tagged;
  for (auto fmt : {CorpusFormat::Column, CorpusFormat::Jsonl}) {
    std::stringstream s;
    write_tagged_corpus(corpus, s, fmt);
    auto back = read_tagged_corpus(s, fmt);
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      CHECK(back[i].utterance.tokens == corpus[i].utterance.tokens);
      CHECK(back[i].tags == corpus[i].tags);
      CHECK(back[i].domain == corpus[i].domain);
    }
    std::stringstream again;
    write_tagged_corpus(back, again, fmt);
    std::stringstream first;
    write_tagged_corpus(corpus, first, fmt);
    CHECK(again.str() == first.str());
  }
}

TEST_CASE("jsonl keeps gold intents") {
  SyntheticConfig sc;
  sc.count = 20;
  sc.positive_ratio = 1.0;
  auto corpus = generate_synthetic_corpus(sc).tagged;
  std::stringstream s;
  write_tagged_corpus(corpus, s, CorpusFormat::Jsonl);
  auto back = read_tagged_corpus(s, CorpusFormat::Jsonl);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    REQUIRE(back[i].gold_intents);
    REQUIRE(back[i].gold_intents->size() == corpus[i].gold_intents->size());
    for (std::size_t k = 0; k < corpus[i].gold_intents->size(); ++k)
      CHECK((*back[i].gold_intents)[k].phrase() == (*corpus[i].gold_intents)[k].phrase());
  }
}

TEST_CASE("synthetic corpus is deterministic and balanced") {
  SyntheticConfig sc;
  sc.count = 100;
  sc.seed = 7;
  auto a = generate_synthetic_corpus(sc);
  auto b = generate_synthetic_corpus(sc);
  std::stringstream sa, sb;
  write_tagged_corpus(a.tagged, sa, CorpusFormat::Jsonl);
  write_tagged_corpus(b.tagged, sb, CorpusFormat::Jsonl);
  CHECK(sa.str() == sb.str());
  std::size_t positives = 0;
  for (const auto& e : a.existence) positives += e.has_intent;
  CHECK(positives == 50);
  std::set<std::string> domains;
  for (std::size_t i = 0; i < a.tagged.size(); ++i) {
    validate(a.tagged[i]);
    domains.insert(a.tagged[i].domain);
    CHECK(a.existence[i].has_intent == !a.tagged[i].gold_intents->empty());
    if (a.tagged[i].gold_intents->empty())
      CHECK(a.tagged[i].tags == std::vector<TagLabel>(a.tagged[i].tags.size(), TagLabel::None));
    else
      CHECK(a.tagged[i].gold_intents->size() <= 3);
  }
  CHECK(domains.size() >= 3);
}

TEST_CASE("template expansion tags slots") {
  auto t = expand_template("please {A:1} the {O:1}", {"book"}, {{"table"}});
  CHECK(t.utterance.tokens == std::vector<std::string>{"Please", "book", "the", "table"});
  CHECK(t.tags == std::vector<TagLabel>{TagLabel::None, TagLabel::Action, TagLabel::None,
                                        TagLabel::Object});
  REQUIRE(t.gold_intents);
  REQUIRE(t.gold_intents->size() == 1);
  CHECK((*t.gold_intents)[0].phrase() == "book table");
}

TEST_CASE("to_existence marks intents") {
  std::vector<TaggedUtterance> c(2);
  c[0].utterance = tokenize("book it");
  c[0].tags = {TagLabel::Action, TagLabel::None};
  c[1].utterance = tokenize("nothing here");
  c[1].tags = {TagLabel::None, TagLabel::None};
  auto e = to_existence(c);
  CHECK(e[0].has_intent);
  CHECK(!e[1].has_intent);
}

TEST_CASE("read_utterances accepts text and jsonl") {
  std::istringstream text("book a table\n\nplease help\n");
  auto a = read_utterances(text);
  REQUIRE(a.size() == 2);
  CHECK(a[0].id == "1");
  std::istringstream js(R"({"id":"q7","text":"book a table"})"
                        "\n");
  auto b = read_utterances(js);
  REQUIRE(b.size() == 1);
  CHECK(b[0].id == "q7");
  CHECK(b[0].tokens.size() == 3);
}

TEST_CASE("vocabulary ids") {
  auto u = tokenize("Book the book");
  auto v = build_vocabulary({&u});
  auto ids = v.word_ids(u);
  CHECK(ids[0] == ids[2]);
  CHECK(ids[0] != SymbolTable::kUnk);
  CHECK(v.word_ids(tokenize("unseen"))[0] == SymbolTable::kUnk);
}
