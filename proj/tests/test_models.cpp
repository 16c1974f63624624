#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"

using namespace proxplain;
using Catch::Matchers::WithinAbs;

TEST_CASE("confidence vectors") {
  auto c = ConfidenceVector::from_positive(0.7);
  CHECK(c.p_neg() == Catch::Approx(0.3));
  CHECK(c.label() == Label::positive);
  CHECK(c.of(Label::negative) == c.p_neg());
  CHECK(ConfidenceVector::from_positive(0.5).label() == Label::positive);
  CHECK(ConfidenceVector::from_positive(0.2).label() == Label::negative);
  CHECK_THROWS_AS(ConfidenceVector::from_positive(1.5), InvalidArgument);
  CHECK_NOTHROW(ConfidenceVector::from_pair(0.25, 0.7500004));
  CHECK_THROWS_AS(ConfidenceVector::from_pair(0.3, 0.6), InvalidArgument);
  CHECK(opposite(Label::positive) == Label::negative);
}

TEST_CASE("lexicon black box sums weights through a logistic") {
  toy::LexiconBlackBox bb(toy::default_lexicon());
  const auto q = TokenSequence::parse("would not recommend .");
  CHECK(bb.score(q) == Catch::Approx(-1.0));
  CHECK(bb.predict(q).label() == Label::negative);
  CHECK(bb.predict(TokenSequence::parse("would definitely recommend .")).label() == Label::positive);
  CHECK_THAT(bb.predict(TokenSequence::parse("unknown words")).p_pos(), WithinAbs(0.5, 1e-15));
  CHECK_THROWS_AS(bb.predict(TokenSequence{}), InvalidArgument);
}

TEST_CASE("lexicon files") {
  oracle::TempDir dir;
  const auto good = dir.write("lex.tsv", "# comment\ngood\t1.5\n\nbad\t-2\n");
  const auto lex = toy::read_lexicon(good);
  REQUIRE(lex.size() == 2);
  CHECK(lex.at("bad") == -2.0);
  CHECK_THROWS_WITH(toy::read_lexicon(dir.write("x.tsv", "good 1.5\n")), Catch::Matchers::ContainsSubstring(":1:"));
  CHECK_THROWS_AS(toy::read_lexicon(dir.write("y.tsv", "good\tlots\n")), Error);
  CHECK_THROWS_AS(toy::read_lexicon(dir.file("missing.tsv")), Error);
}

TEST_CASE("embedding table is deterministic and plants the sentiment axis") {
  toy::EmbeddingTable a(32, 5, toy::default_lexicon()), b(32, 5, toy::default_lexicon()), c(32, 6);
  CHECK(a.embedding("food") == b.embedding("food"));
  CHECK(a.embedding("food") != c.embedding("food"));
  const auto& axis = a.sentiment_axis();
  auto along = [&](const std::string& w) {
    const auto e = a.embedding(w);
    double s = 0;
    for (std::size_t i = 0; i < e.size(); ++i) s += e[i] * axis[i];
    return s;
  };
  CHECK(along("excellent") > along("food"));
  CHECK(along("terrible") < along("food"));
}

TEST_CASE("mean embedding encoder returns unit vectors") {
  auto table = std::make_shared<toy::EmbeddingTable>(16, 1);
  toy::MeanEmbeddingEncoder enc(table);
  const auto z = enc.encode(TokenSequence::parse("the food was good"));
  CHECK_THAT(z.norm(), WithinAbs(1.0, 1e-12));
  CHECK(enc.encode(TokenSequence::parse("a b")) == enc.encode(TokenSequence::parse("b a")));
  CHECK_THROWS_AS(enc.encode(TokenSequence{}), InvalidArgument);
}

TEST_CASE("nearest-neighbor decoder maps corpus latents back to their texts") {
  oracle::ToyStack stack(toy::generate_reviews(80, 2), /*greedy=*/false, 32);
  const auto& c = stack.corpus;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto decoded = stack.decoder->decode(c[i].latent);
    CHECK(stack.encoder->encode(decoded) == c[i].latent);
  }
  CHECK_THROWS_AS(stack.decoder->decode(LatentVector::zeros(32)), InvalidArgument);
  CHECK_THROWS_AS(stack.decoder->decode(LatentVector::zeros(3)), InvalidArgument);
}

TEST_CASE("greedy decoder stays in vocabulary and recovers short texts") {
  auto table = std::make_shared<toy::EmbeddingTable>(64, 17, toy::default_lexicon());
  toy::MeanEmbeddingEncoder enc(table);
  std::vector<std::string> vocab{"the", "food", "was", "great", "bad", "service", "."};
  toy::GreedyBagOfWordsDecoder dec(table, vocab);
  const auto z = enc.encode(TokenSequence::parse("great food"));
  const auto t = dec.decode(z);
  CHECK(t.contains("great"));
  CHECK(t.contains("food"));
  CHECK(cosine_distance(enc.encode(t), z) < 1e-9);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto r = dec.decode(oracle::gaussian(64, rng));
    CHECK(!r.empty());
    CHECK(r.size() <= toy::GreedyBagOfWordsDecoder::kDefaultMaxLength);
    for (const auto& tok : r) CHECK(std::find(vocab.begin(), vocab.end(), tok) != vocab.end());
  }
  CHECK(dec.deterministic());
}

TEST_CASE("coordinate codec round-trips to nine significant digits") {
  toy::CoordinateCodec codec(8);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto z = oracle::gaussian(8, rng);
    const auto back = codec.encode(codec.decode(z));
    for (std::size_t j = 0; j < 8; ++j) CHECK_THAT(back[j], WithinAbs(z[j], 1e-8 * (1 + std::abs(z[j]))));
    CHECK(codec.encode(codec.decode(back)) == back);
  }
  CHECK_THROWS_AS(codec.encode(TokenSequence::parse("1 2")), InvalidArgument);
  CHECK_THROWS_AS(codec.encode(TokenSequence::parse("1 2 3 4 5 6 7 x")), InvalidArgument);
}

TEST_CASE("latent linear black box classifies by the side of a hyperplane") {
  auto codec = std::make_shared<toy::CoordinateCodec>(3);
  toy::LatentLinearBlackBox bb(codec, LatentVector{1, 0, 0});
  CHECK(bb.predict(codec->decode(LatentVector{0.5, 1, 1})).label() == Label::positive);
  CHECK(bb.predict(codec->decode(LatentVector{-0.5, 1, 1})).label() == Label::negative);
  CHECK_THROWS_AS(toy::LatentLinearBlackBox(codec, LatentVector{1, 0}), InvalidArgument);
}

TEST_CASE("corpus build labels entries and rejects empty texts") {
  oracle::ToyStack stack(toy::generate_reviews(100, 4), false, 16);
  const auto& c = stack.corpus;
  CHECK(c.size() == 100);
  CHECK(c.count(Label::positive) + c.count(Label::negative) == 100);
  for (const auto& e : c.entries()) CHECK(e.label == stack.black_box->predict(e.text).label());
  const auto vocab = c.vocabulary();
  CHECK(vocab.front() == c[0].text[0]);
  CHECK(std::set<std::string>(vocab.begin(), vocab.end()).size() == vocab.size());
  std::vector<TokenSequence> bad{TokenSequence::parse("ok"), TokenSequence{}};
  CHECK_THROWS_AS(Corpus::build(bad, *stack.encoder, *stack.black_box), InvalidArgument);
}

TEST_CASE("strong opposite words are ranked by the opposite-class confidence") {
  toy::LexiconBlackBox bb(toy::default_lexicon());
  std::vector<std::string> vocab{"food", "great", "worst", "excellent", "not", "bad"};
  const auto against_pos = strong_opposite_words(bb, vocab, Label::positive, 3);
  CHECK(against_pos == std::vector<std::string>{"worst", "not", "bad"});
  const auto against_neg = strong_opposite_words(bb, vocab, Label::negative, 2);
  CHECK(against_neg == std::vector<std::string>{"excellent", "great"});
  CHECK(strong_opposite_words(bb, vocab, Label::negative, 0).empty());
}

TEST_CASE("toy review generator is seeded") {
  const auto a = toy::generate_reviews(50, 3), b = toy::generate_reviews(50, 3), c = toy::generate_reviews(50, 4);
  CHECK(a == b);
  CHECK(a != c);
  for (const auto& t : a) CHECK(!t.empty());
}
