#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"

using namespace proxplain;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Neighbor make_neighbor(const std::string& text, LatentVector z, double p_pos, const LatentVector& pivot) {
  const auto c = ConfidenceVector::from_positive(p_pos);
  const double d = cosine_distance(z, pivot);
  return {TokenSequence::parse(text), std::move(z), c, c.label(), d};
}

}  // namespace

TEST_CASE("vocabulary lists query tokens first") {
  const LatentVector pivot{1, 0};
  std::vector<Neighbor> nbs{make_neighbor("b x", LatentVector{1, 1}, 0.2, pivot),
                            make_neighbor("y a", LatentVector{0, 1}, 0.7, pivot)};
  const auto v = Vocabulary::build(TokenSequence::parse("a b a"), nbs);
  CHECK(v.tokens() == std::vector<std::string>{"a", "b", "x", "y"});
  CHECK(v.index_of("zzz") == v.size());
  CHECK(featurize(TokenSequence::parse("y y b q"), v) == std::vector<double>{0, 1, 0, 1});
}

TEST_CASE("kernel weight") {
  CHECK(kernel_weight(0.0, 0.25) == 1.0);
  CHECK_THAT(kernel_weight(0.25, 0.25), WithinAbs(std::exp(-1.0), 1e-15));
  CHECK(kernel_weight(0.5, 0.25) < kernel_weight(0.1, 0.25));
}

TEST_CASE("weighted fit matches the normal-equations oracle") {
  std::mt19937_64 rng(5);
  for (int fixture = 0; fixture < 40; ++fixture) {
    const std::size_t n = 8 + rng() % 30, p = 1 + rng() % 10;
    std::bernoulli_distribution bit(0.4);
    std::uniform_real_distribution<double> unit(0.0, 1.0), weight(0.05, 1.0);
    std::vector<std::vector<double>> X(n, std::vector<double>(p));
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& x : X[i]) x = bit(rng) ? 1.0 : 0.0;
      y[i] = unit(rng);
      w[i] = weight(rng);
    }
    X[0].assign(p, 0.0);
    X[1].assign(p, 1.0);
    const double ridge = fixture % 2 ? 1e-6 : 0.1;
    const auto model = fit_weighted(X, y, w, ridge);
    const auto expect = oracle::weighted_ridge(X, y, w, ridge);
    CHECK_THAT(model.intercept, WithinAbs(expect.intercept, 1e-6));
    for (std::size_t j = 0; j < p; ++j) CHECK_THAT(model.coefficients[j], WithinAbs(expect.coefficients[j], 1e-6));
  }
}

TEST_CASE("noiseless linear targets are recovered") {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution bit(0.5);
  std::uniform_real_distribution<double> coef(-0.3, 0.3), weight(0.1, 1.0);
  const std::size_t n = 60, p = 6;
  std::vector<double> truth(p);
  for (auto& c : truth) c = coef(rng);
  std::vector<std::vector<double>> X(n, std::vector<double>(p));
  std::vector<double> y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 0.4;
    for (std::size_t j = 0; j < p; ++j) {
      X[i][j] = bit(rng) ? 1.0 : 0.0;
      y[i] += truth[j] * X[i][j];
    }
    w[i] = weight(rng);
  }
  const auto model = fit_weighted(X, y, w, 1e-9);
  CHECK_THAT(model.intercept, WithinAbs(0.4, 1e-6));
  for (std::size_t j = 0; j < p; ++j) CHECK_THAT(model.coefficients[j], WithinAbs(truth[j], 1e-6));
}

TEST_CASE("underdetermined fits are rejected") {
  const std::vector<double> y2{0.1, 0.9}, w2{1, 1};
  CHECK_THROWS_WITH(fit_weighted({{1, 0}}, std::vector<double>{0.5}, std::vector<double>{1}, 1e-6),
                    ContainsSubstring("surrogate underdetermined"));
  CHECK_THROWS_WITH(fit_weighted({{1, 0}, {1, 0}}, y2, w2, 1e-6), ContainsSubstring("surrogate underdetermined"));
  CHECK_THROWS_WITH(fit_weighted({{1, 0}, {0, 1}}, y2, w2, 0.0), ContainsSubstring("surrogate underdetermined"));
  CHECK_NOTHROW(fit_weighted({{1, 0}, {0, 1}}, y2, w2, 1e-6));
  CHECK_THROWS_AS(fit_weighted({{1, 0}, {0, 1}}, y2, std::vector<double>{1, 0}, 1e-6), InvalidArgument);
}

TEST_CASE("fit regresses the positive-class probability with kernel weights") {
  const LatentVector pivot{1, 0, 0};
  std::vector<Neighbor> nbs{
      make_neighbor("good food", LatentVector{1, 0.1, 0}, 0.9, pivot),
      make_neighbor("bad food", LatentVector{1, 0.2, 0.1}, 0.2, pivot),
      make_neighbor("good place", LatentVector{1, 0.3, 0.1}, 0.85, pivot),
      make_neighbor("bad place", LatentVector{0.5, 1, 0}, 0.15, pivot),
  };
  const auto q = TokenSequence::parse("good food");
  const auto model = fit(nbs, pivot, q);
  const auto& v = model.vocabulary;

  std::vector<std::vector<double>> X;
  std::vector<double> y, w;
  for (const auto& nb : nbs) {
    X.push_back(featurize(nb.text, v));
    y.push_back(nb.confidence.p_pos());
    w.push_back(std::exp(-std::pow(oracle::cos_dist(nb.latent, pivot), 2) / 0.0625));
  }
  const auto expect = oracle::weighted_ridge(X, y, w, 1e-6);
  for (std::size_t j = 0; j < v.size(); ++j) CHECK_THAT(model.coefficients[j], WithinAbs(expect.coefficients[j], 1e-6));
  CHECK(model.coefficients[v.index_of("good")] > 0.0);
  CHECK(model.coefficients[v.index_of("bad")] < 0.0);
}

TEST_CASE("importances are oriented towards the decision and sorted by magnitude") {
  SurrogateModel m;
  const LatentVector pivot{1, 0};
  std::vector<Neighbor> nbs{make_neighbor("great awful not the", LatentVector{1, 1}, 0.5, pivot)};
  m.vocabulary = Vocabulary::build(TokenSequence::parse("not great"), nbs);  // not great awful the
  m.coefficients = {-0.6, 0.2, -0.05, 0.0};
  const auto q = TokenSequence::parse("not great");

  const auto neg = extract_importances(m, q, Label::negative);
  REQUIRE(neg.size() == 4);
  CHECK(neg[0].token == "not");
  CHECK(neg[0].weight == 0.6);
  CHECK(neg[0].origin == Origin::intrinsic);
  CHECK(neg[0].supports == Support::predicted_class);
  CHECK(neg[1].token == "great");
  CHECK(neg[1].weight == -0.2);
  CHECK(neg[1].supports == Support::opposite_class);
  CHECK(neg[2].token == "awful");
  CHECK(neg[2].origin == Origin::extrinsic);
  CHECK(neg[3].token == "the");

  const auto pos = extract_importances(m, q, Label::positive);
  CHECK(pos[0].weight == -0.6);

  const auto imp = important(neg, 0.2);
  REQUIRE(imp.size() == 2);
  CHECK(imp[1].token == "great");
  CHECK(with_origin(neg, Origin::extrinsic).size() == 2);
}
