#include <random>

#include "doctest.h"
#include "tgf/http.hpp"

using namespace tgf;

namespace {

const std::string kReq1 = "GET /a HTTP/1.1\r\nHost: x\r\n\r\n";
const std::string kReq2 = "POST /b HTTP/1.1\r\nHost: x\r\nContent-Length: 3\r\n\r\nabc";
const std::string kRespCl = "HTTP/1.1 200 OK\r\nContent-Length: 5\r\n\r\nhello";
const std::string kRespChunked =
    "HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n"
    "4\r\nWiki\r\n5\r\npedia\r\n0\r\n\r\n";
const std::string kRespClose = "HTTP/1.1 200 OK\r\n\r\nstream until close";
const std::string kRespTag = "HTTP/1.1 200 OK\r\n\r\n<html><p>hi</p></html>";

void feed(SessionParser& p, const std::string& s, Direction d) {
  p.feed_bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size(), d);
}

// One wire-ordered conversation step.
struct Step {
  Direction dir;
  std::string bytes;
};

std::vector<ExchangeBoundary> run_steps(const std::vector<Step>& steps,
                                        std::mt19937_64* rng = nullptr) {
  SessionParser p;
  for (const Step& st : steps) {
    size_t pos = 0;
    while (pos < st.bytes.size()) {
      size_t n = st.bytes.size() - pos;
      if (rng) n = 1 + (*rng)() % n;
      p.feed_bytes(reinterpret_cast<const uint8_t*>(st.bytes.data()) + pos, n, st.dir);
      pos += n;
    }
  }
  p.finish();
  return p.exchanges();
}

bool same_boundaries(const std::vector<ExchangeBoundary>& a,
                     const std::vector<ExchangeBoundary>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].region_index != b[i].region_index) return false;
    if (a[i].request_complete_at != b[i].request_complete_at) return false;
    if (a[i].response_complete_at != b[i].response_complete_at) return false;
    if (a[i].request_complete_tick != b[i].request_complete_tick) return false;
    if (a[i].response_complete_tick != b[i].response_complete_tick) return false;
    if (a[i].completion_rule != b[i].completion_rule) return false;
    if (a[i].answered != b[i].answered) return false;
    if (a[i].no_response != b[i].no_response) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("http");

TEST_CASE("content-length request and response") {
  SessionParser p;
  feed(p, kReq2, Direction::ToServer);
  feed(p, kRespCl, Direction::ToClient);
  p.finish();

  REQUIRE(p.exchanges().size() == 1);
  const auto& e = p.exchanges()[0];
  CHECK(e.request_complete_at == kReq2.size());
  CHECK(e.response_complete_at == kRespCl.size());
  CHECK(e.completion_rule == CompletionRule::ContentLength);
  CHECK(e.answered);
  CHECK_FALSE(e.no_response);
  CHECK(p.orphan_bytes() == 0);
}

TEST_CASE("chunked response reassembles across chunk frames") {
  SessionParser p;
  feed(p, kReq1, Direction::ToServer);
  feed(p, kRespChunked, Direction::ToClient);
  p.finish();

  REQUIRE(p.exchanges().size() == 1);
  const auto& e = p.exchanges()[0];
  CHECK(e.completion_rule == CompletionRule::Chunked);
  CHECK(e.response_complete_at == kRespChunked.size());
}

TEST_CASE("length-less response completes at connection close") {
  SessionParser p;
  feed(p, kReq1, Direction::ToServer);
  feed(p, kRespClose, Direction::ToClient);
  CHECK(p.exchanges()[0].answered == false);
  p.finish();
  const auto& e = p.exchanges()[0];
  CHECK(e.answered);
  CHECK(e.completion_rule == CompletionRule::ConnectionClose);
  CHECK(e.response_complete_at == kRespClose.size());
}

TEST_CASE("document end tag closes an unbounded body early") {
  SessionParser p;
  feed(p, kReq1, Direction::ToServer);
  feed(p, kRespTag, Direction::ToClient);
  const auto& e = p.exchanges()[0];
  CHECK(e.answered);
  CHECK(e.completion_rule == CompletionRule::EndTag);
  CHECK(e.response_complete_at == kRespTag.size());
}

TEST_CASE("request that never gets an answer") {
  SessionParser p;
  feed(p, kReq1, Direction::ToServer);
  feed(p, kRespCl, Direction::ToClient);
  feed(p, kReq1, Direction::ToServer);
  p.finish();
  REQUIRE(p.exchanges().size() == 2);
  CHECK(p.exchanges()[1].no_response);
  CHECK_FALSE(p.exchanges()[1].answered);
}

TEST_CASE("windows partition the timeline without overlap") {
  SessionParser p;
  feed(p, kReq1, Direction::ToServer);
  p.bump_clock(50);  // simulated processing while the request is handled
  feed(p, kRespCl, Direction::ToClient);
  feed(p, kReq2, Direction::ToServer);
  p.bump_clock(30);
  feed(p, kRespChunked, Direction::ToClient);
  feed(p, kReq1, Direction::ToServer);  // never answered
  p.bump_clock(10);
  p.finish();

  auto ws = p.windows();
  REQUIRE(ws.size() == 3);
  CHECK(ws[0].begin == kReq1.size());
  CHECK(ws[0].end == p.exchanges()[0].response_complete_tick);
  // The second request was sent while the first response was still pending,
  // so its window opens only when that response lands.
  CHECK(ws[1].begin >= ws[0].end);
  CHECK(ws[1].end == p.exchanges()[1].response_complete_tick);
  CHECK(ws[2].no_response);
  // Half-open interval: events stamped at the final tick still belong to it.
  CHECK(ws[2].end == p.now() + 1);
  for (size_t i = 1; i < ws.size(); ++i) CHECK(ws[i].begin >= ws[i - 1].end);

  CHECK(p.window_of(1).region_index == 1);
  CHECK_THROWS_AS(p.window_of(9), NoWindow);
}

TEST_CASE("fragmentation does not move boundaries") {
  std::vector<Step> steps{
      {Direction::ToServer, kReq1},     {Direction::ToClient, kRespCl},
      {Direction::ToServer, kReq2},     {Direction::ToClient, kRespChunked},
      {Direction::ToServer, kReq1},     {Direction::ToClient, kRespTag},
  };
  auto want = run_steps(steps);
  REQUIRE(want.size() == 3);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    auto got = run_steps(steps, &rng);
    CHECK(same_boundaries(want, got));
  }
}

TEST_CASE("a delayed tail fragment changes nothing about message framing") {
  // Chop the chunked response right inside a chunk and hold the tail across
  // a long idle gap; a timeout-based delimiter would cut here, a
  // content-based one must not.
  SessionParser p;
  feed(p, kReq1, Direction::ToServer);
  std::string head = kRespChunked.substr(0, 55);
  std::string tail = kRespChunked.substr(55);
  feed(p, head, Direction::ToClient);
  CHECK_FALSE(p.exchanges()[0].answered);
  p.bump_clock(100000);  // idle
  feed(p, tail, Direction::ToClient);
  p.finish();
  const auto& e = p.exchanges()[0];
  CHECK(e.answered);
  CHECK(e.completion_rule == CompletionRule::Chunked);
  CHECK(e.response_complete_at == kRespChunked.size());
}

TEST_CASE("oversize header section is flagged") {
  SessionParser p(HttpModelConfig{64});
  std::string big = "GET /" + std::string(200, 'a') + " HTTP/1.1\r\n\r\n";
  feed(p, big, Direction::ToServer);
  REQUIRE(p.exchanges().size() == 1);
  CHECK(p.exchanges()[0].fault == HeaderFault::Oversize);
}

TEST_CASE("malformed start line is flagged") {
  SessionParser p;
  feed(p, "garbage without structure\r\n\r\n", Direction::ToServer);
  REQUIRE(p.exchanges().size() == 1);
  CHECK(p.exchanges()[0].fault == HeaderFault::Malformed);
}

TEST_CASE("finish is idempotent") {
  SessionParser p;
  feed(p, kReq1, Direction::ToServer);
  feed(p, kRespClose, Direction::ToClient);
  p.finish();
  auto once = p.exchanges();
  p.finish();
  CHECK(same_boundaries(once, p.exchanges()));
}

TEST_SUITE_END();
