#pragma once

#include <optional>

#include "tgf/core.hpp"

namespace tgf {

enum class Direction { ToServer, ToClient };

enum class CompletionRule { None, ContentLength, Chunked, ConnectionClose, EndTag };

enum class HeaderFault { None, Malformed, Oversize };

// One request/response pair on the session, in wire order. Stream offsets
// point one past the final byte of the message on its own direction; ticks
// are global virtual-time values shared by both directions.
struct ExchangeBoundary {
  uint32_t region_index = 0;
  uint64_t request_complete_at = 0;
  uint64_t response_complete_at = 0;
  uint64_t request_complete_tick = 0;
  uint64_t response_complete_tick = 0;
  CompletionRule completion_rule = CompletionRule::None;
  HeaderFault fault = HeaderFault::None;
  bool answered = false;
  bool no_response = false;
};

// Half-open virtual-time interval owning one region's taint events.
struct Window {
  uint32_t region_index = 0;
  uint64_t begin = 0;
  uint64_t end = 0;
  bool no_response = false;
};

struct HttpModelConfig {
  size_t max_header_bytes = 16 * 1024;
};

// Incremental model of one client connection. Bytes may arrive in arbitrary
// fragments; message boundaries depend only on content, never on how the
// stream was chopped up. Each byte advances a shared virtual clock by one
// tick, and the replay harness may insert extra ticks for taint events so
// that event timestamps interleave with message boundaries.
class SessionParser {
 public:
  explicit SessionParser(HttpModelConfig cfg = {});

  void feed_bytes(const uint8_t* data, size_t n, Direction dir);
  void feed_bytes(const Bytes& chunk, Direction dir) {
    feed_bytes(chunk.data(), chunk.size(), dir);
  }

  // Marks connection close: completes length-less responses, flags requests
  // that never got an answer. Idempotent.
  void finish();

  uint64_t now() const { return clock_; }
  void bump_clock(uint64_t ticks) { clock_ += ticks; }

  const std::vector<ExchangeBoundary>& exchanges() const { return exchanges_; }
  uint64_t orphan_bytes() const { return orphan_bytes_; }
  bool finished() const { return finished_; }

  // Only valid after finish(). Windows of successive regions never overlap:
  // a window opens when its request is complete but not before the previous
  // response landed, and closes when its own response lands (or at replay
  // end for unanswered requests).
  Window window_of(uint32_t region_index) const;
  std::vector<Window> windows() const;

 private:
  void feed_to_server(uint8_t b);
  void feed_to_client(uint8_t b);
  void complete_request();
  void complete_response(CompletionRule rule);
  void fault_request(HeaderFault f);
  void fault_response(HeaderFault f);

  enum class MsgState {
    Headers,
    Body,        // counted by Content-Length
    ChunkSize,
    ChunkData,
    ChunkDataEnd,
    ChunkTrailer,
    Unbounded,   // until close; may end early at a document end tag
    Poisoned,
  };

  struct Side {
    MsgState state = MsgState::Headers;
    std::string header_buf;
    uint64_t remaining = 0;     // Body / ChunkData countdown
    std::string chunk_line;
    bool tag_watch = false;     // Unbounded: scan for </html> / </xml>
    std::string tail;           // last few body bytes for tag detection
    uint64_t offset = 0;        // bytes consumed on this direction
  };

  HttpModelConfig cfg_;
  Side server_;  // to-server direction (requests)
  Side client_;  // to-client direction (responses)
  std::vector<ExchangeBoundary> exchanges_;
  uint32_t responses_done_ = 0;
  uint64_t clock_ = 0;
  uint64_t orphan_bytes_ = 0;
  uint64_t run_end_tick_ = 0;
  bool finished_ = false;
};

}  // namespace tgf
