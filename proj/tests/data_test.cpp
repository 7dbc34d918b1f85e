#include <filesystem>
#include <fstream>

#include "clslu/data.hpp"
#include "clslu/embeddings.hpp"
#include "clslu/synthetic.hpp"
#include "doctest.h"

using namespace clslu;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("clslu_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("minimal corpus parse") {
  const fs::path dir = temp_dir("parse");
  write_file(dir / "en.train.tsv", "set:O alarm:O\tintent=set_alarm\n");
  write_file(dir / "en.valid.tsv", "wake:O me:O at:B-time seven:I-time\tintent=set_alarm\n");
  write_file(dir / "en.test.tsv", "cancel:O it:O\tintent=cancel_alarm\n");

  LoadStats stats;
  Corpus c = load_corpus(dir, "tsv", &stats);
  CHECK(stats.utterances == 3);
  CHECK(stats.bio_repairs == 0);
  REQUIRE(c.train("en").size() == 1);
  const Utterance& u = c.train("en")[0];
  CHECK(u.tokens == std::vector<std::string>{"set", "alarm"});
  CHECK(u.slots == std::vector<std::string>{"O", "O"});
  CHECK(u.intent == "set_alarm");
  CHECK(u.language == "en");
  CHECK(c.slot_labels() == std::vector<std::string>{"B-time", "I-time", "O"});
}

TEST_CASE("loader errors carry location") {
  const fs::path dir = temp_dir("errors");

  SUBCASE("empty directory is a missing split") {
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("missing split"), Error);
  }
  SUBCASE("missing sibling split") {
    write_file(dir / "en.train.tsv", "a:O\tintent=x\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains("missing split"), Error);
  }
  SUBCASE("ragged pair reports the line") {
    write_file(dir / "en.train.tsv", "a:O\tintent=x\nbadtoken\tintent=x\n");
    write_file(dir / "en.valid.tsv", "a:O\tintent=x\n");
    write_file(dir / "en.test.tsv", "a:O\tintent=x\n");
    CHECK_THROWS_WITH_AS(load_corpus(dir), doctest::Contains(":2:"), ParseError);
  }
  SUBCASE("malformed BIO label") {
    write_file(dir / "en.train.tsv", "a:Q-zzz\tintent=x\n");
    write_file(dir / "en.valid.tsv", "a:O\tintent=x\n");
    write_file(dir / "en.test.tsv", "a:O\tintent=x\n");
    CHECK_THROWS_AS(load_corpus(dir), ParseError);
  }
}

TEST_CASE("BIO repair: orphan I-X becomes B-X and is counted") {
  const fs::path dir = temp_dir("repair");
  write_file(dir / "en.train.tsv",
             "a:O b:I-time c:I-time\tintent=x\n"
             "d:B-loc e:I-time\tintent=x\n");
  write_file(dir / "en.valid.tsv", "a:O\tintent=x\n");
  write_file(dir / "en.test.tsv", "a:O\tintent=x\n");
  LoadStats stats;
  Corpus c = load_corpus(dir, "tsv", &stats);
  CHECK(stats.bio_repairs == 2);
  CHECK(c.train("en")[0].slots == std::vector<std::string>{"O", "B-time", "I-time"});
  CHECK(c.train("en")[1].slots == std::vector<std::string>{"B-loc", "B-time"});
}

TEST_CASE("loader round-trip: serialize(load(x)) == normalize(x)") {
  const fs::path dir = temp_dir("roundtrip");
  // Already-normalized input survives a load/write/load cycle unchanged.
  const std::string canonical =
      "wake:O me:O at:B-time 7:I-time am:I-time\tintent=set_alarm\n"
      "check:O weather:O here:B-loc\tintent=weather\n";
  write_file(dir / "en.train.tsv", canonical);
  write_file(dir / "en.valid.tsv", "a:O\tintent=x\n");
  write_file(dir / "en.test.tsv", "a:O\tintent=x\n");
  Corpus c = load_corpus(dir);
  const fs::path out = temp_dir("roundtrip_out");
  write_corpus(c, out);
  std::ifstream in(out / "en.train.tsv");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text == canonical);
}

TEST_CASE("delexicalization rule table") {
  auto toks = [](const Utterance& u) { return u.tokens; };
  Utterance a{{"wake", "me", "at", "7", "am"}, {"O", "O", "O", "B-t", "I-t"}, "x", "en"};
  CHECK(toks(delexicalize(a)) ==
        std::vector<std::string>{"wake", "me", "at", "[TIME]", "[TIME]"});
  CHECK(delexicalize(a).slots == a.slots);  // slots untouched

  Utterance b{{"remind", "me", "tomorrow"}, {"O", "O", "B-d"}, "x", "en"};
  CHECK(toks(delexicalize(b)) == b.tokens);

  Utterance c{{"snooze", "10", "minutes"}, {"O", "B-dur", "I-dur"}, "x", "en"};
  CHECK(toks(delexicalize(c)) == std::vector<std::string>{"snooze", "[DUR]", "[DUR]"});

  Utterance d{{"at", "7:30", "buy", "3", "apples"}, {"O", "B-t", "O", "B-n", "O"}, "x", "en"};
  CHECK(toks(delexicalize(d)) ==
        std::vector<std::string>{"at", "[TIME]", "buy", "[NUM]", "apples"});
}

TEST_CASE("delexicalization is idempotent and length-preserving") {
  Rng rng(21);
  const std::vector<std::string> pool = {"wake", "7",  "am",      "minutes", "10",
                                         "3.5",  "at", "7:30",    "pm",      "hello",
                                         "day",  "o'clock", "seconds", "99"};
  for (int trial = 0; trial < 300; ++trial) {
    Utterance u;
    const int n = 1 + static_cast<int>(rng.uniform_int(8));
    for (int i = 0; i < n; ++i) {
      u.tokens.push_back(pool[static_cast<size_t>(rng.uniform_int(pool.size()))]);
      u.slots.push_back("O");
    }
    const Utterance once = delexicalize(u);
    CHECK(once.tokens.size() == u.tokens.size());
    const Utterance twice = delexicalize(once);
    CHECK(twice.tokens == once.tokens);
  }
}

TEST_CASE("embedding table") {
  const fs::path dir = temp_dir("emb");

  SUBCASE("parse and dimension inference") {
    write_file(dir / "v.txt", "cat 0.1 0.2\ndog -0.3 0.4\n");
    EmbeddingTable t = EmbeddingTable::load(dir / "v.txt");
    CHECK(t.dim() == 2);
    CHECK(t.lookup("cat")[0] == doctest::Approx(0.1));
    CHECK(t.lookup("cat")[1] == doctest::Approx(0.2));
  }
  SUBCASE("inconsistent dimension names the line") {
    write_file(dir / "bad.txt", "cat 0.1 0.2\ndog 0.1 0.2 0.3\n");
    CHECK_THROWS_WITH_AS(EmbeddingTable::load(dir / "bad.txt"), doctest::Contains(":2:"),
                         ParseError);
  }
  SUBCASE("absent word maps to the zero vector") {
    write_file(dir / "v.txt", "cat 0.1 0.2\n");
    EmbeddingTable t = EmbeddingTable::load(dir / "v.txt");
    auto z = t.lookup("zebra");
    REQUIRE(z.size() == 2);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK(t.contains("<unk>"));
    CHECK(t.contains("[TIME]"));
  }
  SUBCASE("save/load round-trip") {
    write_file(dir / "v.txt", "cat 0.125 -2.5\ndog 1 0.0001\n");
    EmbeddingTable t = EmbeddingTable::load(dir / "v.txt");
    t.save(dir / "v2.txt");
    EmbeddingTable t2 = EmbeddingTable::load(dir / "v2.txt");
    CHECK(t2.lookup("dog")[1] == doctest::Approx(0.0001).epsilon(1e-12));
  }
}

TEST_CASE("synthetic corpus") {
  SUBCASE("determinism: same seed, same corpora") {
    SynthConfig cfg;
    cfg.train_count = 30;
    cfg.valid_count = 5;
    cfg.test_count = 5;
    cfg.noise_sigma = 0.3;
    Rng r1(7), r2(7);
    SynthOutput a = make_synthetic_pair(cfg, r1);
    SynthOutput b = make_synthetic_pair(cfg, r2);
    REQUIRE(a.corpus.train("src").size() == b.corpus.train("src").size());
    for (size_t i = 0; i < a.corpus.train("src").size(); ++i) {
      CHECK(a.corpus.train("src")[i].tokens == b.corpus.train("src")[i].tokens);
      CHECK(a.corpus.train("trg")[i].tokens == b.corpus.train("trg")[i].tokens);
    }
    const auto va = a.embeddings.lookup("w000");
    const auto vb = b.embeddings.lookup("w000");
    for (size_t i = 0; i < va.size(); ++i) CHECK(va[i] == vb[i]);
  }
  SUBCASE("zero noise: cipher pairs share embeddings") {
    SynthConfig cfg;
    cfg.train_count = 5;
    cfg.valid_count = 2;
    cfg.test_count = 2;
    cfg.noise_sigma = 0.0;
    Rng rng(3);
    SynthOutput s = make_synthetic_pair(cfg, rng);
    for (const auto& [src, trg] : s.cipher) {
      const auto a = s.embeddings.lookup(src);
      const auto b = s.embeddings.lookup(trg);
      for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
  }
  SUBCASE("default config: target slot sequences equal source templates") {
    SynthConfig cfg;  // order_perturb_prob defaults to 0
    Rng rng(11);
    SynthOutput s = make_synthetic_pair(cfg, rng);
    REQUIRE(s.corpus.train("src").size() == 600);
    REQUIRE(s.corpus.valid("src").size() == 100);
    REQUIRE(s.corpus.test("src").size() == 200);
    for (size_t i = 0; i < s.corpus.train("src").size(); ++i)
      CHECK(s.corpus.train("trg")[i].slots == s.corpus.train("src")[i].slots);
  }
  SUBCASE("slot and intent distributions match across languages") {
    SynthConfig cfg;
    cfg.train_count = 80;
    cfg.valid_count = 10;
    cfg.test_count = 10;
    cfg.order_perturb_prob = 0.4;
    Rng rng(13);
    SynthOutput s = make_synthetic_pair(cfg, rng);
    std::map<std::string, int> src_slots, trg_slots, src_intents, trg_intents;
    for (const auto& u : s.corpus.train("src")) {
      for (const auto& l : u.slots) ++src_slots[l];
      ++src_intents[u.intent];
    }
    for (const auto& u : s.corpus.train("trg")) {
      for (const auto& l : u.slots) ++trg_slots[l];
      ++trg_intents[u.intent];
    }
    CHECK(src_slots == trg_slots);
    CHECK(src_intents == trg_intents);
    // Perturbed target BIO stays well formed: reload round-trip repairs nothing.
    const fs::path dir = temp_dir("synth_bio");
    write_corpus(s.corpus, dir);
    LoadStats stats;
    load_corpus(dir, "tsv", &stats);
    CHECK(stats.bio_repairs == 0);
  }
  SUBCASE("vocab too small for templates") {
    SynthConfig cfg;
    cfg.vocab_size = 20;
    Rng rng(1);
    CHECK_THROWS_WITH_AS(make_synthetic_pair(cfg, rng), doctest::Contains("vocab_size"),
                         Error);
  }
}

TEST_CASE("few-shot subsampling") {
  auto corpus_of_size = [](size_t n) {
    std::map<std::string, SplitSet> by_lang;
    SplitSet src, trg;
    src.train.push_back({{"a"}, {"O"}, "x", "en"});
    for (size_t i = 0; i < n; ++i) trg.train.push_back({{"b"}, {"O"}, "x", "es"});
    trg.valid.push_back({{"b"}, {"O"}, "x", "es"});
    by_lang.emplace("en", std::move(src));
    by_lang.emplace("es", std::move(trg));
    return Corpus(std::move(by_lang), {"O"}, {"x"});
  };

  SUBCASE("published sample counts from the full split sizes") {
    Rng rng(5);
    CHECK(few_shot_subsample(corpus_of_size(3617), "es", 0.01, rng).train("es").size() == 36);
    CHECK(few_shot_subsample(corpus_of_size(3617), "es", 0.03, rng).train("es").size() == 108);
    CHECK(few_shot_subsample(corpus_of_size(2156), "es", 0.01, rng).train("es").size() == 21);
    CHECK(few_shot_subsample(corpus_of_size(2156), "es", 0.03, rng).train("es").size() == 64);
  }
  SUBCASE("fraction zero empties the target train split only") {
    Rng rng(5);
    Corpus out = few_shot_subsample(corpus_of_size(50), "es", 0.0, rng);
    CHECK(out.train("es").empty());
    CHECK(out.valid("es").size() == 1);
    CHECK(out.train("en").size() == 1);
  }
  SUBCASE("out-of-range fraction") {
    Rng rng(5);
    CHECK_THROWS_AS(few_shot_subsample(corpus_of_size(10), "es", 1.5, rng), Error);
  }
}
