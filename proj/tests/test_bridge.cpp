#include <catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <map>

#include "oracles.hpp"

using namespace proxplain;
using namespace proxplain::bridge;
using nlohmann::json;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string num9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Serves in-process models over the wire format, with reals printed to 9
// significant digits as a real server would.
CallbackTransport::Handler mirror(const Encoder& enc, const Decoder& dec, const BlackBox& bb, std::size_t dim) {
  return [&enc, &dec, &bb, dim](const std::string& line) -> std::optional<std::string> {
    const auto req = json::parse(line);
    const auto id = req["id"].get<std::uint64_t>();
    const auto op = req["op"].get<std::string>();
    std::string out = "{\"id\":" + std::to_string(id) + ",\"ok\":true,";
    auto texts = [&] {
      std::vector<TokenSequence> t;
      for (const auto& s : req["texts"]) t.push_back(TokenSequence::parse(s.get<std::string>()));
      return t;
    };
    if (op == "info") {
      out += "\"latent_dim\":" + std::to_string(dim) + ",\"deterministic\":true,\"protocol\":1}";
    } else if (op == "encode") {
      out += "\"vectors\":[";
      const auto zs = enc.encode_batch(texts());
      for (std::size_t i = 0; i < zs.size(); ++i) {
        out += i ? ",[" : "[";
        for (std::size_t j = 0; j < zs[i].dimension(); ++j) out += (j ? "," : "") + num9(zs[i][j]);
        out += "]";
      }
      out += "]}";
    } else if (op == "decode") {
      json texts_out = json::array();
      for (const auto& v : req["vectors"]) texts_out.push_back(dec.decode(LatentVector(v.get<std::vector<double>>())).str());
      out += "\"texts\":" + texts_out.dump() + "}";
    } else if (op == "predict") {
      out += "\"scores\":[";
      const auto scores = bb.predict_batch(texts());
      for (std::size_t i = 0; i < scores.size(); ++i) {
        out += (i ? ",[" : "[") + num9(scores[i].p_pos()) + "," + num9(scores[i].p_neg()) + "]";
      }
      out += "]}";
    } else {
      return "{\"id\":" + std::to_string(id) + ",\"ok\":false,\"error\":\"unknown op\"}";
    }
    return out;
  };
}

// Answers every request with `reply`, with the request id spliced in.
std::shared_ptr<BridgeClient> scripted(std::vector<std::string>& log, std::function<std::string(std::uint64_t)> reply) {
  auto transport = std::make_unique<CallbackTransport>([&log, reply](const std::string& line) -> std::optional<std::string> {
    log.push_back(line);
    return reply(json::parse(line)["id"].get<std::uint64_t>());
  });
  return std::make_shared<BridgeClient>(std::move(transport), std::chrono::milliseconds(200));
}

std::string info_reply(std::uint64_t id) {
  return "{\"id\":" + std::to_string(id) + ",\"ok\":true,\"latent_dim\":2,\"deterministic\":false}";
}

}  // namespace

TEST_CASE("handshake reads latent dimension and determinism") {
  std::vector<std::string> log;
  auto client = scripted(log, info_reply);
  const auto info = client->handshake();
  CHECK(info.latent_dim == 2);
  CHECK_FALSE(info.deterministic);
  REQUIRE(log.size() == 1);
  CHECK(log[0] == R"({"id":1,"op":"info"})");
}

TEST_CASE("requests use the exact wire field names") {
  std::vector<std::string> log;
  auto client = scripted(log, [](std::uint64_t id) {
    const std::string head = "{\"id\":" + std::to_string(id) + ",\"ok\":true,";
    switch (id) {
      case 1: return head + "\"latent_dim\":2,\"deterministic\":true}";
      case 2: return head + "\"vectors\":[[0.5,-0.25]]}";
      case 3: return head + "\"texts\":[\"great food\",\"bad\"]}";
      default: return head + "\"scores\":[[0.75,0.25]]}";
    }
  });
  client->handshake();
  const std::vector<TokenSequence> one{TokenSequence::parse("a b")};
  const auto zs = client->encode_batch(one);
  REQUIRE(zs.size() == 1);
  CHECK(zs[0] == LatentVector{0.5, -0.25});
  const std::vector<LatentVector> two{LatentVector{1.0 / 3.0, 2.0}, LatentVector{-1e-12, 123456789.123}};
  const auto texts = client->decode_batch(two);
  CHECK(texts[0].str() == "great food");
  const auto scores = client->predict_batch(one);
  CHECK(scores[0].p_pos() == 0.75);

  REQUIRE(log.size() == 4);
  CHECK(log[1] == R"({"id":2,"op":"encode","texts":["a b"]})");
  CHECK(log[2] == R"({"id":3,"op":"decode","vectors":[[0.333333333,2.0],[-1e-12,123456789.0]]})");
  CHECK(log[3] == R"({"id":4,"op":"predict","texts":["a b"]})");
  CHECK(client->requests_sent() == 4);
}

TEST_CASE("empty batches send nothing") {
  std::vector<std::string> log;
  auto client = scripted(log, info_reply);
  client->handshake();
  CHECK(client->encode_batch({}).empty());
  CHECK(client->decode_batch({}).empty());
  CHECK(client->predict_batch({}).empty());
  CHECK(log.size() == 1);
}

TEST_CASE("calls before the handshake fail") {
  std::vector<std::string> log;
  auto client = scripted(log, info_reply);
  const std::vector<TokenSequence> one{TokenSequence::parse("x")};
  CHECK_THROWS_AS(client->encode_batch(one), BridgeError);
  CHECK(log.empty());
}

TEST_CASE("server errors surface verbatim and are not retryable") {
  std::vector<std::string> log;
  auto client = scripted(log, [](std::uint64_t id) {
    if (id == 1) return info_reply(id);
    return "{\"id\":" + std::to_string(id) + ",\"ok\":false,\"error\":\"CUDA out of memory (batch 64)\"}";
  });
  client->handshake();
  const std::vector<TokenSequence> one{TokenSequence::parse("x")};
  try {
    client->predict_batch(one);
    FAIL("expected a BridgeError");
  } catch (const BridgeError& e) {
    CHECK(std::string(e.what()) == "CUDA out of memory (batch 64)");
    CHECK_FALSE(e.retryable());
  }
}

TEST_CASE("malformed responses are rejected") {
  const std::vector<TokenSequence> one{TokenSequence::parse("x")};
  std::vector<std::string> wire;
  auto with = [&](std::function<std::string(std::uint64_t)> r) {
    auto client = scripted(wire, [r](std::uint64_t id) { return id == 1 ? info_reply(id) : r(id); });
    client->handshake();
    return client;
  };
  CHECK_THROWS_WITH(with([](std::uint64_t) { return std::string("not json"); })->predict_batch(one),
                    ContainsSubstring("malformed"));
  CHECK_THROWS_WITH(with([](std::uint64_t) { return std::string(R"({"id":99,"ok":true,"scores":[[1,0]]})"); })
                        ->predict_batch(one),
                    ContainsSubstring("does not match"));
  CHECK_THROWS_WITH(with([](std::uint64_t id) {
                      return "{\"id\":" + std::to_string(id) + ",\"ok\":true,\"scores\":[[0.5,0.5],[0.5,0.5]]}";
                    })->predict_batch(one),
                    ContainsSubstring("wrong number"));
  CHECK_THROWS_WITH(with([](std::uint64_t id) {
                      return "{\"id\":" + std::to_string(id) + ",\"ok\":true,\"scores\":[[0.9,0.3]]}";
                    })->predict_batch(one),
                    ContainsSubstring("sum"));
  CHECK_THROWS_WITH(with([](std::uint64_t id) {
                      return "{\"id\":" + std::to_string(id) + ",\"ok\":true,\"vectors\":[[1,2,3]]}";
                    })->encode_batch(one),
                    ContainsSubstring("dimension"));
  CHECK_THROWS_WITH(with([](std::uint64_t id) {
                      return "{\"id\":" + std::to_string(id) + ",\"ok\":true,\"texts\":[\"  \"]}";
                    })->decode_batch(std::vector<LatentVector>{LatentVector{1, 2}}),
                    ContainsSubstring("empty"));

  std::vector<std::string> log;
  auto bad_info = scripted(log, [](std::uint64_t id) {
    return "{\"id\":" + std::to_string(id) + ",\"ok\":true,\"deterministic\":true}";
  });
  CHECK_THROWS_WITH(bad_info->handshake(), ContainsSubstring("latent_dim"));
  auto bad_protocol = scripted(log, [](std::uint64_t id) {
    return "{\"id\":" + std::to_string(id) + ",\"ok\":true,\"latent_dim\":2,\"deterministic\":true,\"protocol\":7}";
  });
  CHECK_THROWS_WITH(bad_protocol->handshake(), ContainsSubstring("protocol"));
}

TEST_CASE("a silent server times out with a retryable error") {
  auto client = std::make_shared<BridgeClient>(
      std::make_unique<CallbackTransport>([](const std::string&) { return std::nullopt; }),
      std::chrono::milliseconds(10));
  try {
    client->handshake();
    FAIL("expected a timeout");
  } catch (const BridgeError& e) {
    CHECK(e.retryable());
    CHECK_THAT(std::string(e.what()), ContainsSubstring("in time"));
  }
}

TEST_CASE("child process transport talks to a shell server") {
  const std::string server =
      R"(while IFS= read -r line; do id=$(printf '%s' "$line" | sed 's/^{"id":\([0-9]*\).*/\1/'); )"
      R"(printf '{"id":%s,"ok":true,"latent_dim":3,"deterministic":true,"scores":[[0.25,0.75]]}\n' "$id"; done)";
  BridgeClient client(std::make_unique<ChildProcessTransport>(server), std::chrono::seconds(5));
  CHECK(client.handshake().latent_dim == 3);
  const std::vector<TokenSequence> one{TokenSequence::parse("x y")};
  CHECK(client.predict_batch(one)[0].p_neg() == 0.75);
  CHECK(client.predict_batch(one)[0].p_pos() == 0.25);
}

TEST_CASE("child process failures are reported") {
  SECTION("server that never answers") {
    BridgeClient client(std::make_unique<ChildProcessTransport>("sleep 5"), std::chrono::milliseconds(100));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      client.handshake();
      FAIL("expected a timeout");
    } catch (const BridgeError& e) {
      CHECK(e.retryable());
    }
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(2));
  }
  SECTION("server that exits") {
    BridgeClient client(std::make_unique<ChildProcessTransport>("exit 0"), std::chrono::seconds(5));
    CHECK_THROWS_AS(client.handshake(), BridgeError);
  }
  SECTION("command that does not exist") {
    BridgeClient client(std::make_unique<ChildProcessTransport>("/nonexistent/model-server 2>/dev/null"),
                        std::chrono::seconds(5));
    CHECK_THROWS_AS(client.handshake(), BridgeError);
  }
}

TEST_CASE("explanations through a mirrored bridge match the in-process backend") {
  oracle::ToyStack stack(toy::generate_reviews(200, 21), /*greedy=*/true, 32);
  auto client = std::make_shared<BridgeClient>(
      std::make_unique<CallbackTransport>(mirror(*stack.encoder, *stack.decoder, *stack.black_box, 32)));
  client->handshake();
  BridgeEncoder enc(client);
  BridgeDecoder dec(client);
  BridgeBlackBox bb(client);
  std::vector<TokenSequence> texts;
  for (const auto& e : stack.corpus.entries()) texts.push_back(e.text);
  const auto remote_corpus = Corpus::build(texts, enc, bb);
  const Models remote{enc, dec, bb};

  ExplainerConfig cfg;
  cfg.neighborhood.k = 8;
  cfg.neighborhood.n = 40;
  cfg.neighborhood.max_iterations = 3;
  for (const char* q : {"the food was great .", "would not recommend .", "rude staff ."}) {
    const auto query = TokenSequence::parse(q);
    const auto local = explain(query, stack.corpus, stack.models(), cfg, 5);
    const auto far = explain(query, remote_corpus, remote, cfg, 5);
    REQUIRE(local.importances.size() == far.importances.size());
    // Tokens with identical feature columns tie in magnitude, and wire rounding
    // may swap them, so weights are matched by token.
    std::map<std::string, double> far_weight;
    for (const auto& imp : far.importances) far_weight[imp.token] = imp.weight;
    for (std::size_t i = 0; i < local.importances.size(); ++i) {
      REQUIRE(far_weight.count(local.importances[i].token) == 1);
      CHECK_THAT(far_weight[local.importances[i].token], Catch::Matchers::WithinAbs(local.importances[i].weight, 1e-6));
      if (i > 0) CHECK(std::abs(far.importances[i - 1].weight) >= std::abs(far.importances[i].weight));
    }
    REQUIRE(local.counterfactuals.size() == far.counterfactuals.size());
    for (std::size_t i = 0; i < local.counterfactuals.size(); ++i) {
      CHECK(local.counterfactuals[i].text == far.counterfactuals[i].text);
    }
    CHECK(local.editions.size() == far.editions.size());
  }
  CHECK(client->requests_sent() > 3);
}
