#pragma once

// Client side of the line-delimited model bridge. An external process
// serves encode / decode / predict / info requests, one JSON object per
// line in each direction:
//
//   -> {"id":N,"op":"encode","texts":["a b", ...]}
//   -> {"id":N,"op":"decode","vectors":[[...], ...]}
//   -> {"id":N,"op":"predict","texts":[...]}
//   -> {"id":N,"op":"info"}
//   <- {"id":N,"ok":true,"vectors":[...]} | {"id":N,"ok":true,"texts":[...]}
//   <- {"id":N,"ok":true,"scores":[[p_pos,p_neg], ...]}
//   <- {"id":N,"ok":true,"latent_dim":D,"deterministic":B}
//   <- {"id":N,"ok":false,"error":"..."}
//
// Texts travel space-joined; reals travel with 9 significant digits.

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "proxplain/error.hpp"
#include "proxplain/latent.hpp"
#include "proxplain/model.hpp"
#include "proxplain/text.hpp"

namespace proxplain::bridge {

inline constexpr int kProtocolVersion = 1;

class BridgeError : public Error {
 public:
  BridgeError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
  // True for transport failures, where reconnecting may help.
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// Rounds to the 9 significant digits carried on the wire.
inline double wire_round(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void write_line(const std::string& line) = 0;
  // nullopt on timeout; throws BridgeError when the peer is gone.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
};

// In-process transport answering each line through a callback. Useful for
// embedding a server in the same process and for protocol tests.
class CallbackTransport final : public Transport {
 public:
  // The handler returns the reply line, or nullopt to stay silent.
  using Handler = std::function<std::optional<std::string>(const std::string&)>;

  explicit CallbackTransport(Handler handler) : handler_(std::move(handler)) {}

  void write_line(const std::string& line) override {
    if (auto reply = handler_(line)) pending_.push_back(std::move(*reply));
  }

  std::optional<std::string> read_line(std::chrono::milliseconds) override {
    if (pending_.empty()) return std::nullopt;
    auto line = std::move(pending_.front());
    pending_.erase(pending_.begin());
    return line;
  }

 private:
  Handler handler_;
  std::vector<std::string> pending_;
};

// Runs `/bin/sh -c <command>` and talks to it over its stdin/stdout.
class ChildProcessTransport final : public Transport {
 public:
  explicit ChildProcessTransport(const std::string& command) {
    // A dead server must surface as an error, not kill the client.
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw BridgeError("cannot create pipe", true);
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BridgeError("cannot create pipe", true);
    }
    pid_ = ::fork();
    if (pid_ < 0) throw BridgeError("cannot fork model server", true);
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  ChildProcessTransport(const ChildProcessTransport&) = delete;
  ChildProcessTransport& operator=(const ChildProcessTransport&) = delete;

  ~ChildProcessTransport() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      // Closing stdin asks the server to exit; give it a moment, then kill.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
        ::usleep(10000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  void write_line(const std::string& line) override {
    std::string data = line;
    data += '\n';
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError("model server connection broken (write failed)", true);
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd pfd{read_fd_, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw BridgeError("poll failed on model server pipe", true);
      }
      if (r == 0) return std::nullopt;
      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError("model server connection broken (read failed)", true);
      }
      if (n == 0) throw BridgeError("model server closed the connection", true);
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

struct ServerInfo {
  std::size_t latent_dim = 0;
  bool deterministic = true;
};

// One connection, one request in flight at a time; responses are matched
// to requests by id.
class BridgeClient {
 public:
  explicit BridgeClient(std::unique_ptr<Transport> transport,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : transport_(std::move(transport)), timeout_(timeout) {}

  ServerInfo handshake() {
    auto reply = call("info");
    if (reply.contains("protocol")) {
      if (!reply["protocol"].is_number_integer() || reply["protocol"].get<int>() != kProtocolVersion) {
        throw BridgeError("model server protocol version mismatch", false);
      }
    }
    if (!reply.contains("latent_dim") || !reply["latent_dim"].is_number_integer() ||
        reply["latent_dim"].get<long long>() <= 0) {
      throw BridgeError("malformed info response: missing positive latent_dim", false);
    }
    if (!reply.contains("deterministic") || !reply["deterministic"].is_boolean()) {
      throw BridgeError("malformed info response: missing deterministic flag", false);
    }
    info_ = ServerInfo{reply["latent_dim"].get<std::size_t>(), reply["deterministic"].get<bool>()};
    return *info_;
  }

  const std::optional<ServerInfo>& info() const noexcept { return info_; }

  std::vector<LatentVector> encode_batch(std::span<const TokenSequence> texts) {
    require_handshake();
    if (texts.empty()) return {};
    auto reply = call("encode", "texts", text_array(texts));
    const auto& vectors = field(reply, "vectors");
    if (vectors.size() != texts.size()) throw BridgeError("encode response has the wrong number of vectors", false);
    std::vector<LatentVector> out;
    out.reserve(vectors.size());
    for (const auto& v : vectors) out.push_back(parse_vector(v));
    return out;
  }

  std::vector<TokenSequence> decode_batch(std::span<const LatentVector> zs) {
    require_handshake();
    if (zs.empty()) return {};
    nlohmann::json vectors = nlohmann::json::array();
    for (const auto& z : zs) {
      if (z.dimension() != info_->latent_dim) throw InvalidArgument("latent dimension mismatch");
      nlohmann::json row = nlohmann::json::array();
      for (double c : z.components()) row.push_back(wire_round(c));
      vectors.push_back(std::move(row));
    }
    auto reply = call("decode", "vectors", std::move(vectors));
    const auto& texts = field(reply, "texts");
    if (texts.size() != zs.size()) throw BridgeError("decode response has the wrong number of texts", false);
    std::vector<TokenSequence> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
      if (!t.is_string()) throw BridgeError("malformed decode response: text is not a string", false);
      auto seq = TokenSequence::parse(t.get<std::string>());
      if (seq.empty()) throw BridgeError("model server decoded an empty text", false);
      out.push_back(std::move(seq));
    }
    return out;
  }

  std::vector<ConfidenceVector> predict_batch(std::span<const TokenSequence> texts) {
    require_handshake();
    if (texts.empty()) return {};
    auto reply = call("predict", "texts", text_array(texts));
    const auto& scores = field(reply, "scores");
    if (scores.size() != texts.size()) throw BridgeError("predict response has the wrong number of scores", false);
    std::vector<ConfidenceVector> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number()) {
        throw BridgeError("malformed predict response: score is not a [p_pos, p_neg] pair", false);
      }
      try {
        out.push_back(ConfidenceVector::from_pair(s[0].get<double>(), s[1].get<double>()));
      } catch (const InvalidArgument& e) {
        throw BridgeError(std::string("malformed predict response: ") + e.what(), false);
      }
    }
    return out;
  }

  std::uint64_t requests_sent() const noexcept { return next_id_ - 1; }

 private:
  void require_handshake() const {
    if (!info_) throw BridgeError("bridge used before handshake", false);
  }

  static nlohmann::json text_array(std::span<const TokenSequence> texts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : texts) {
      if (t.empty()) throw InvalidArgument("cannot send an empty text");
      arr.push_back(t.str());
    }
    return arr;
  }

  static const nlohmann::json& field(const nlohmann::json& reply, const char* name) {
    if (!reply.contains(name) || !reply[name].is_array()) {
      throw BridgeError(std::string("malformed response: missing array field '") + name + "'", false);
    }
    return reply[name];
  }

  LatentVector parse_vector(const nlohmann::json& v) const {
    if (!v.is_array() || v.size() != info_->latent_dim) {
      throw BridgeError("malformed encode response: vector has the wrong dimension", false);
    }
    std::vector<double> c;
    c.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) throw BridgeError("malformed encode response: non-numeric component", false);
      c.push_back(x.get<double>());
    }
    try {
      return LatentVector(std::move(c));
    } catch (const InvalidArgument& e) {
      throw BridgeError(std::string("malformed encode response: ") + e.what(), false);
    }
  }

  nlohmann::json call(const char* op, const char* key = nullptr, nlohmann::json payload = {}) {
    std::lock_guard lock(mutex_);
    const std::uint64_t id = next_id_++;
    nlohmann::ordered_json wire;
    wire["id"] = id;
    wire["op"] = op;
    if (key != nullptr) wire[key] = std::move(payload);
    transport_->write_line(wire.dump());

    auto line = transport_->read_line(timeout_);
    if (!line) throw BridgeError("model server did not answer request " + std::to_string(id) + " in time", true);
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::parse_error&) {
      throw BridgeError("malformed response line from model server", false);
    }
    if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_unsigned() ||
        reply["id"].get<std::uint64_t>() != id) {
      throw BridgeError("model server response does not match request " + std::to_string(id), false);
    }
    if (!reply.contains("ok") || !reply["ok"].is_boolean()) {
      throw BridgeError("malformed response: missing ok flag", false);
    }
    if (!reply["ok"].get<bool>()) {
      std::string message = reply.contains("error") && reply["error"].is_string() ? reply["error"].get<std::string>()
                                                                                   : std::string();
      if (message.empty()) message = "model server reported a failure without a message";
      throw BridgeError(message, false);
    }
    return reply;
  }

  std::unique_ptr<Transport> transport_;
  std::chrono::milliseconds timeout_;
  std::uint64_t next_id_ = 1;
  std::optional<ServerInfo> info_;
  std::mutex mutex_;
};

// Model adapters over one shared connection.
class BridgeEncoder final : public Encoder {
 public:
  explicit BridgeEncoder(std::shared_ptr<BridgeClient> client) : client_(std::move(client)) {}
  std::size_t dimension() const override { return client_->info().value().latent_dim; }
  LatentVector encode(const TokenSequence& text) const override {
    if (text.empty()) throw InvalidArgument("cannot encode an empty text");
    return client_->encode_batch(std::span(&text, 1)).front();
  }
  std::vector<LatentVector> encode_batch(std::span<const TokenSequence> texts) const override {
    return client_->encode_batch(texts);
  }

 private:
  std::shared_ptr<BridgeClient> client_;
};

class BridgeDecoder final : public Decoder {
 public:
  explicit BridgeDecoder(std::shared_ptr<BridgeClient> client) : client_(std::move(client)) {}
  TokenSequence decode(const LatentVector& z) const override { return client_->decode_batch(std::span(&z, 1)).front(); }
  std::vector<TokenSequence> decode_batch(std::span<const LatentVector> zs) const override {
    return client_->decode_batch(zs);
  }
  bool deterministic() const override { return client_->info().value().deterministic; }

 private:
  std::shared_ptr<BridgeClient> client_;
};

class BridgeBlackBox final : public BlackBox {
 public:
  explicit BridgeBlackBox(std::shared_ptr<BridgeClient> client) : client_(std::move(client)) {}
  ConfidenceVector predict(const TokenSequence& text) const override {
    if (text.empty()) throw InvalidArgument("cannot classify an empty text");
    return client_->predict_batch(std::span(&text, 1)).front();
  }
  std::vector<ConfidenceVector> predict_batch(std::span<const TokenSequence> texts) const override {
    return client_->predict_batch(texts);
  }

 private:
  std::shared_ptr<BridgeClient> client_;
};

}  // namespace proxplain::bridge
