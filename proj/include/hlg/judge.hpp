#pragma once

// Vision-LLM judge client. Sends rendered PNGs with a rubric to an
// OpenAI-style chat-completions endpoint and parses a strict JSON verdict
// out of the reply, retrying with exponential backoff and skipping a case
// once attempts run out.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"
#include "json.hpp"

#include "hlg/config.hpp"
#include "hlg/digest.hpp"
#include "hlg/error.hpp"
#include "hlg/metrics.hpp"
#include "hlg/png_io.hpp"

namespace hlg {

enum class JudgeMode { rating, voting };

inline std::string_view to_string(JudgeMode m) { return m == JudgeMode::rating ? "rating" : "voting"; }

inline JudgeMode judge_mode_from_string(std::string_view s) {
  if (s == "rating") return JudgeMode::rating;
  if (s == "voting") return JudgeMode::voting;
  throw ConfigError("judge mode must be 'rating' or 'voting'");
}

struct RatingScores {
  double dl = 0, gi = 0, io = 0, tv = 0;
  friend bool operator==(const RatingScores&, const RatingScores&) = default;
};

enum class VoteChoice { first, second };

using JudgeVerdict = std::variant<RatingScores, VoteChoice>;

// Every network attempt made by any transport in this process.
inline std::atomic<long long>& judge_network_attempts() {
  static std::atomic<long long> n{0};
  return n;
}

// ---------------------------------------------------------------------------
// Rubrics

struct Rubric {
  std::string rating;
  std::string voting;
};

inline Rubric default_rubric() {
  return {
      "You review a single rendered graphic design. Score it on four criteria, each a real number from 0 "
      "(very poor) to 10 (excellent).\n"
      "S_DL (design and layout): is the arrangement tidy, well balanced and internally consistent?\n"
      "S_GI (graphics and imagery): do the pictures and decorative pieces suit one another and the piece "
      "as a whole?\n"
      "S_IO (innovation and originality): does the composition show fresh, imaginative choices?\n"
      "S_TV (text and visual harmony): do the lettering and the visuals support each other?\n"
      "Answer with one JSON object and nothing else, for example "
      "{\"S_DL\": 6.5, \"S_GI\": 7, \"S_IO\": 5, \"S_TV\": 6}.",
      "You compare two rendered graphic designs built from the same set of elements. The first image is "
      "design \"first\" and the second image is design \"second\". Pick the one whose composition is "
      "handled more skillfully: layering, placement, balance and legibility.\n"
      "Answer with one JSON object and nothing else: {\"choice\": \"first\"} or {\"choice\": \"second\"}.",
  };
}

// <dir>/rating.txt and <dir>/voting.txt; missing files fall back to the
// built-in text.
inline Rubric load_rubric(const std::filesystem::path& dir) {
  Rubric r = default_rubric();
  if (dir.empty()) return r;
  if (std::filesystem::exists(dir / "rating.txt")) r.rating = read_file(dir / "rating.txt");
  if (std::filesystem::exists(dir / "voting.txt")) r.voting = read_file(dir / "voting.txt");
  return r;
}

// ---------------------------------------------------------------------------
// Wire format

struct JudgeRequest {
  JudgeMode mode = JudgeMode::rating;
  std::string first_png;
  std::string second_png;  // voting only
};

// Returns the request body and a copy with image payloads replaced by
// digests, for the log.
inline std::pair<nlohmann::ordered_json, nlohmann::ordered_json> build_request(const JudgeRequest& req,
                                                                               const JudgeSettings& s,
                                                                               const Rubric& rubric) {
  if (req.first_png.empty()) throw ConfigError("judge request has no image");
  if (req.mode == JudgeMode::voting && req.second_png.empty()) throw ConfigError("voting needs two images");
  auto image_part = [](const std::string& png, bool redact) {
    const std::string url = redact ? "sha256:" + sha256_hex(png) : "data:image/png;base64," + base64_encode(png);
    return nlohmann::ordered_json{{"type", "image_url"}, {"image_url", {{"url", url}}}};
  };
  auto build = [&](bool redact) {
    nlohmann::ordered_json content = nlohmann::ordered_json::array();
    content.push_back({{"type", "text"},
                       {"text", req.mode == JudgeMode::rating ? "Rate this design." : "Which design is better?"}});
    content.push_back(image_part(req.first_png, redact));
    if (req.mode == JudgeMode::voting) content.push_back(image_part(req.second_png, redact));
    nlohmann::ordered_json body;
    body["model"] = s.model;
    body["temperature"] = 0;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "system"}, {"content", req.mode == JudgeMode::rating ? rubric.rating : rubric.voting}},
         {{"role", "user"}, {"content", std::move(content)}}});
    return body;
  };
  return {build(false), build(true)};
}

// First balanced {...} in `text` that parses as a JSON object.
inline std::optional<nlohmann::json> extract_first_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_str = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_str) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_str = false;
        continue;
      }
      if (c == '"') in_str = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        auto j = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!j.is_discarded() && j.is_object()) return j;
        break;
      }
    }
  }
  return std::nullopt;
}

// Accepts a chat-completions envelope or a bare reply; the verdict is the
// first JSON object in the message text.
inline JudgeVerdict parse_verdict(std::string_view body, JudgeMode mode) {
  std::string text(body);
  auto envelope = nlohmann::json::parse(body, nullptr, false);
  if (!envelope.is_discarded() && envelope.is_object() && envelope.contains("choices")) {
    try {
      text = envelope.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError("response envelope has no message content");
    }
  }
  auto obj = extract_first_json_object(text);
  if (!obj) throw FormatError("no JSON object in judge reply");
  if (mode == JudgeMode::rating) {
    RatingScores s;
    const std::pair<const char*, double*> fields[] = {{"S_DL", &s.dl}, {"S_GI", &s.gi}, {"S_IO", &s.io}, {"S_TV", &s.tv}};
    for (auto [key, out] : fields) {
      if (!obj->contains(key) || !obj->at(key).is_number()) throw FormatError(std::string("missing numeric ") + key);
      *out = obj->at(key).get<double>();
      if (!(std::isfinite(*out) && *out >= 0.0 && *out <= 10.0))
        throw FormatError(std::string(key) + " outside [0, 10]");
    }
    return s;
  }
  if (!obj->contains("choice")) throw FormatError("missing choice");
  const auto& c = obj->at("choice");
  if (c.is_string()) {
    std::string v = c.get<std::string>();
    for (auto& ch : v) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (v == "first") return VoteChoice::first;
    if (v == "second") return VoteChoice::second;
  } else if (c.is_number_integer()) {
    if (c.get<long long>() == 1) return VoteChoice::first;
    if (c.get<long long>() == 2) return VoteChoice::second;
  }
  throw FormatError("choice must be \"first\" or \"second\"");
}

// ---------------------------------------------------------------------------
// Transport

struct HttpReply {
  int status = 0;
  std::string body;
};

class JudgeTransport {
 public:
  virtual ~JudgeTransport() = default;
  // Throws TransportError when no reply was received.
  virtual HttpReply post(const std::string& body) = 0;
};

using TransportFactory = std::function<std::unique_ptr<JudgeTransport>()>;

class HttpTransport : public JudgeTransport {
 public:
  // endpoint: scheme://host[:port]/path
  HttpTransport(const std::string& endpoint, std::string api_key, int timeout_s) : api_key_(std::move(api_key)) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("judge endpoint must be an http(s) URL");
    const auto path_start = endpoint.find('/', scheme_end + 3);
    base_ = endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
    client_ = std::make_unique<httplib::Client>(base_);
    if (!client_->is_valid()) throw ConfigError("unsupported judge endpoint '" + endpoint + "'");
    client_->set_connection_timeout(timeout_s, 0);
    client_->set_read_timeout(timeout_s, 0);
    client_->set_write_timeout(timeout_s, 0);
  }

  HttpReply post(const std::string& body) override {
    ++judge_network_attempts();
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client_->Post(path_, headers, body, "application/json");
    if (!res) throw TransportError("request to " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  std::string base_, path_, api_key_;
  std::unique_ptr<httplib::Client> client_;
};

inline TransportFactory http_transport_factory(const JudgeSettings& s) {
  if (s.endpoint.empty()) throw ConfigError("judging is disabled: no judge endpoint configured");
  std::string key;
  if (const char* v = std::getenv(s.api_key_env.c_str())) key = v;
  // construct once up front so a bad endpoint fails before any case runs
  HttpTransport probe(s.endpoint, key, s.timeout_s);
  return [s, key] { return std::make_unique<HttpTransport>(s.endpoint, key, s.timeout_s); };
}

// ---------------------------------------------------------------------------
// Per-case protocol

struct JudgeCase {
  std::string id;
  JudgeRequest request;
};

struct JudgeOutcome {
  std::string id;
  std::optional<JudgeVerdict> verdict;
  std::string skip_reason;
  int attempts = 0;
};

class JudgeLog {
 public:
  explicit JudgeLog(const std::filesystem::path& path) {
    if (path.empty()) return;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open judge log '" + path.string() + "'");
  }
  void write(const nlohmann::ordered_json& entry) {
    if (!out_.is_open()) return;
    std::lock_guard lock(mu_);
    out_ << entry.dump() << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

inline JudgeOutcome judge_one(JudgeTransport& transport, const JudgeCase& c, const JudgeSettings& s,
                              const Rubric& rubric, JudgeLog* log = nullptr) {
  JudgeOutcome out;
  out.id = c.id;
  const auto [body, redacted] = build_request(c.request, s, rubric);
  const std::string wire = body.dump();
  for (int attempt = 1; attempt <= s.max_attempts; ++attempt) {
    out.attempts = attempt;
    nlohmann::ordered_json entry{{"case", c.id}, {"attempt", attempt}, {"request", redacted}};
    try {
      const HttpReply reply = transport.post(wire);
      entry["status"] = reply.status;
      entry["response"] = reply.body;
      if (reply.status != 200) throw TransportError("HTTP status " + std::to_string(reply.status));
      out.verdict = parse_verdict(reply.body, c.request.mode);
      if (log) log->write(entry);
      return out;
    } catch (const TransportError& e) {
      out.skip_reason = std::string("TransportError: ") + e.what();
    } catch (const FormatError& e) {
      out.skip_reason = std::string("FormatError: ") + e.what();
    }
    entry["error"] = out.skip_reason;
    if (log) log->write(entry);
    if (attempt < s.max_attempts && s.backoff_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(s.backoff_ms) << (attempt - 1)));
  }
  out.skip_reason = "gave up after " + std::to_string(s.max_attempts) + " attempts; last " + out.skip_reason;
  return out;
}

struct JudgeAggregates {
  JudgeMode mode = JudgeMode::rating;
  std::vector<JudgeOutcome> outcomes;  // input order
  long long judged = 0;
  long long skipped = 0;
  std::optional<RatingScores> mean;  // rating, when at least one case was judged
  long long first = 0, second = 0;   // voting
};

inline JudgeAggregates aggregate(JudgeMode mode, std::vector<JudgeOutcome> outcomes) {
  JudgeAggregates a;
  a.mode = mode;
  std::vector<double> dl, gi, io, tv;
  for (const auto& o : outcomes) {
    if (!o.verdict) {
      ++a.skipped;
      continue;
    }
    ++a.judged;
    if (const auto* s = std::get_if<RatingScores>(&*o.verdict)) {
      dl.push_back(s->dl);
      gi.push_back(s->gi);
      io.push_back(s->io);
      tv.push_back(s->tv);
    } else if (std::get<VoteChoice>(*o.verdict) == VoteChoice::first) {
      ++a.first;
    } else {
      ++a.second;
    }
  }
  if (mode == JudgeMode::rating && !dl.empty())
    a.mean = RatingScores{detail::order_free_mean(dl), detail::order_free_mean(gi), detail::order_free_mean(io),
                          detail::order_free_mean(tv)};
  a.outcomes = std::move(outcomes);
  return a;
}

inline nlohmann::ordered_json to_json(const JudgeAggregates& a) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(a.mode);
  j["judged"] = a.judged;
  j["skipped"] = a.skipped;
  if (a.mode == JudgeMode::rating) {
    j["mean"] = a.mean ? nlohmann::ordered_json{{"S_DL", a.mean->dl}, {"S_GI", a.mean->gi}, {"S_IO", a.mean->io},
                                                {"S_TV", a.mean->tv}}
                       : nlohmann::ordered_json();
  } else {
    j["votes"] = {{"first", a.first}, {"second", a.second}};
  }
  j["cases"] = nlohmann::ordered_json::array();
  for (const auto& o : a.outcomes) {
    nlohmann::ordered_json c{{"id", o.id}, {"attempts", o.attempts}};
    if (!o.verdict) {
      c["skip_reason"] = o.skip_reason;
    } else if (const auto* s = std::get_if<RatingScores>(&*o.verdict)) {
      c["scores"] = {{"S_DL", s->dl}, {"S_GI", s->gi}, {"S_IO", s->io}, {"S_TV", s->tv}};
    } else {
      c["choice"] = std::get<VoteChoice>(*o.verdict) == VoteChoice::first ? "first" : "second";
    }
    j["cases"].push_back(std::move(c));
  }
  return j;
}

// At most settings.max_in_flight requests are outstanding; each worker owns
// its transport.
inline JudgeAggregates judge_cases(const std::vector<JudgeCase>& cases, JudgeMode mode, const JudgeSettings& s,
                                   const TransportFactory& factory, const std::filesystem::path& log_path = {}) {
  for (const auto& c : cases)
    if (c.request.mode != mode) throw ConfigError("judge case '" + c.id + "' has the wrong mode");
  const Rubric rubric = load_rubric(s.prompt_dir);
  JudgeLog log(log_path);
  std::vector<JudgeOutcome> outcomes(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::unique_ptr<JudgeTransport> transport;
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      if (!transport) transport = factory();
      outcomes[i] = judge_one(*transport, cases[i], s, rubric, &log);
    }
  };
  const int n = std::clamp<int>(s.max_in_flight, 1, std::max<int>(1, static_cast<int>(cases.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
  }
  return aggregate(mode, std::move(outcomes));
}

// Case ids of a finished eval run, from its report.json.
inline std::vector<std::string> run_case_ids(const std::filesystem::path& run_dir) {
  const auto report = nlohmann::json::parse(read_file(run_dir / "report.json"), nullptr, false);
  if (report.is_discarded() || !report.contains("cases")) throw IoError("'" + run_dir.string() + "' is not an eval run");
  std::vector<std::string> ids;
  for (const auto& c : report.at("cases")) ids.push_back(c.at("id").get<std::string>());
  return ids;
}

// Rating: every rendered case of `run_dir`. Voting: cases rendered in both
// runs, `run_dir` as "first". Results go to <run_dir>/judge-<mode>.json and
// the log to <run_dir>/judge-log.jsonl.
inline JudgeAggregates judge_run(const std::filesystem::path& run_dir, JudgeMode mode, const JudgeSettings& s,
                                 const TransportFactory& factory,
                                 const std::filesystem::path& second_run_dir = {}) {
  std::vector<JudgeCase> cases;
  const auto ids = run_case_ids(run_dir);
  if (mode == JudgeMode::voting) {
    if (second_run_dir.empty()) throw ConfigError("voting needs a second run");
    const auto other = run_case_ids(second_run_dir);
    const std::set<std::string> other_ids(other.begin(), other.end());
    for (const auto& id : ids)
      if (other_ids.count(id))
        cases.push_back({id, {mode, read_file(run_dir / "renders" / (id + ".png")),
                              read_file(second_run_dir / "renders" / (id + ".png"))}});
  } else {
    for (const auto& id : ids) cases.push_back({id, {mode, read_file(run_dir / "renders" / (id + ".png")), {}}});
  }
  if (cases.empty()) throw EmptyCorpus("no rendered cases to judge");
  auto agg = judge_cases(cases, mode, s, factory, run_dir / "judge-log.jsonl");
  auto j = to_json(agg);
  if (mode == JudgeMode::voting) j["second_run"] = second_run_dir.filename().string();
  write_file(run_dir / ("judge-" + std::string(to_string(mode)) + ".json"), j.dump(2) + "\n");
  return agg;
}

}  // namespace hlg
