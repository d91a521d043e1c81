#include "tgf/http.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace tgf {

namespace {

bool ends_with(const std::string& s, const char* suf) {
  size_t n = std::char_traits<char>::length(suf);
  return s.size() >= n && s.compare(s.size() - n, n, suf) == 0;
}

bool header_section_done(const std::string& buf) {
  return ends_with(buf, "\n\n") || ends_with(buf, "\n\r\n");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct ParsedHeader {
  bool ok = false;
  std::vector<std::string> start_line;
  std::map<std::string, std::string> fields;  // lowercased names
};

ParsedHeader parse_header_section(const std::string& buf) {
  ParsedHeader h;
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < buf.size()) {
    size_t nl = buf.find('\n', pos);
    if (nl == std::string::npos) break;
    std::string line = buf.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) return h;

  h.start_line = split_ws(lines[0]);
  for (size_t i = 1; i < lines.size(); ++i) {
    size_t colon = lines[i].find(':');
    if (colon == std::string::npos) return h;  // ok stays false
    std::string name = lower(lines[i].substr(0, colon));
    std::string value = lines[i].substr(colon + 1);
    size_t b = value.find_first_not_of(" \t");
    value = b == std::string::npos ? "" : value.substr(b);
    h.fields.emplace(std::move(name), std::move(value));
  }
  h.ok = true;
  return h;
}

bool numeric(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

SessionParser::SessionParser(HttpModelConfig cfg) : cfg_(cfg) {}

void SessionParser::feed_bytes(const uint8_t* data, size_t n, Direction dir) {
  if (finished_) throw Error("SessionParser: feed after finish");
  for (size_t i = 0; i < n; ++i) {
    ++clock_;
    if (dir == Direction::ToServer)
      feed_to_server(data[i]);
    else
      feed_to_client(data[i]);
  }
}

void SessionParser::complete_request() {
  ExchangeBoundary b;
  b.region_index = static_cast<uint32_t>(exchanges_.size());
  b.request_complete_at = server_.offset;
  b.request_complete_tick = clock_;
  exchanges_.push_back(b);
  server_ = Side{MsgState::Headers, {}, 0, {}, false, {}, server_.offset};
}

void SessionParser::fault_request(HeaderFault f) {
  ExchangeBoundary b;
  b.region_index = static_cast<uint32_t>(exchanges_.size());
  b.request_complete_at = server_.offset;
  b.request_complete_tick = clock_;
  b.fault = f;
  exchanges_.push_back(b);
  server_.state = MsgState::Poisoned;
}

void SessionParser::complete_response(CompletionRule rule) {
  if (responses_done_ >= exchanges_.size()) {
    // Response with no matching request: protocol violation, drop the rest.
    client_.state = MsgState::Poisoned;
    return;
  }
  ExchangeBoundary& b = exchanges_[responses_done_++];
  b.answered = true;
  b.response_complete_at = client_.offset;
  b.response_complete_tick = clock_;
  b.completion_rule = rule;
  client_ = Side{MsgState::Headers, {}, 0, {}, false, {}, client_.offset};
}

void SessionParser::fault_response(HeaderFault f) {
  if (responses_done_ < exchanges_.size()) {
    ExchangeBoundary& b = exchanges_[responses_done_++];
    b.answered = true;
    b.response_complete_at = client_.offset;
    b.response_complete_tick = clock_;
    b.fault = f;
  }
  client_.state = MsgState::Poisoned;
}

void SessionParser::feed_to_server(uint8_t byte) {
  Side& s = server_;
  ++s.offset;
  char c = static_cast<char>(byte);
  switch (s.state) {
    case MsgState::Poisoned:
      ++orphan_bytes_;
      break;
    case MsgState::Headers: {
      s.header_buf.push_back(c);
      if (s.header_buf.size() > cfg_.max_header_bytes) {
        fault_request(HeaderFault::Oversize);
        break;
      }
      if (!header_section_done(s.header_buf)) break;
      ParsedHeader h = parse_header_section(s.header_buf);
      bool line_ok = h.ok && h.start_line.size() == 3 &&
                     h.start_line[2].rfind("HTTP/", 0) == 0;
      if (!line_ok) {
        fault_request(HeaderFault::Malformed);
        break;
      }
      auto te = h.fields.find("transfer-encoding");
      if (te != h.fields.end() && lower(te->second).find("chunked") != std::string::npos) {
        s.state = MsgState::ChunkSize;
        s.chunk_line.clear();
        break;
      }
      auto cl = h.fields.find("content-length");
      if (cl != h.fields.end()) {
        if (!numeric(cl->second)) {
          fault_request(HeaderFault::Malformed);
          break;
        }
        uint64_t n = parse_u64(cl->second);
        if (n == 0) {
          complete_request();
        } else {
          s.state = MsgState::Body;
          s.remaining = n;
        }
        break;
      }
      complete_request();  // no body
      break;
    }
    case MsgState::Body:
      if (--s.remaining == 0) complete_request();
      break;
    case MsgState::ChunkSize: {
      if (c != '\n') {
        s.chunk_line.push_back(c);
        break;
      }
      std::string line = s.chunk_line;
      s.chunk_line.clear();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      size_t semi = line.find(';');
      if (semi != std::string::npos) line.resize(semi);
      uint64_t size = 0;
      try {
        size = parse_hex(line);
      } catch (const Error&) {
        fault_request(HeaderFault::Malformed);
        break;
      }
      if (size == 0) {
        s.state = MsgState::ChunkTrailer;
        s.chunk_line.clear();
      } else {
        s.state = MsgState::ChunkData;
        s.remaining = size;
      }
      break;
    }
    case MsgState::ChunkData:
      if (--s.remaining == 0) s.state = MsgState::ChunkDataEnd;
      break;
    case MsgState::ChunkDataEnd:
      if (c == '\n') {
        s.state = MsgState::ChunkSize;
      } else if (c != '\r') {
        fault_request(HeaderFault::Malformed);
      }
      break;
    case MsgState::ChunkTrailer: {
      if (c != '\n') {
        s.chunk_line.push_back(c);
        break;
      }
      std::string line = s.chunk_line;
      s.chunk_line.clear();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) complete_request();
      break;
    }
    case MsgState::Unbounded:
      // Requests are never framed by connection close.
      ++orphan_bytes_;
      break;
  }
}

void SessionParser::feed_to_client(uint8_t byte) {
  Side& s = client_;
  ++s.offset;
  char c = static_cast<char>(byte);
  switch (s.state) {
    case MsgState::Poisoned:
      ++orphan_bytes_;
      break;
    case MsgState::Headers: {
      s.header_buf.push_back(c);
      if (s.header_buf.size() > cfg_.max_header_bytes) {
        fault_response(HeaderFault::Oversize);
        break;
      }
      if (!header_section_done(s.header_buf)) break;
      ParsedHeader h = parse_header_section(s.header_buf);
      bool line_ok = h.ok && h.start_line.size() >= 2 &&
                     h.start_line[0].rfind("HTTP/", 0) == 0 &&
                     h.start_line[1].size() == 3 && numeric(h.start_line[1]);
      if (!line_ok) {
        fault_response(HeaderFault::Malformed);
        break;
      }
      int code = static_cast<int>(parse_u64(h.start_line[1]));
      if (code < 200 || code == 204 || code == 304) {
        complete_response(CompletionRule::ContentLength);
        break;
      }
      auto te = h.fields.find("transfer-encoding");
      if (te != h.fields.end() && lower(te->second).find("chunked") != std::string::npos) {
        s.state = MsgState::ChunkSize;
        s.chunk_line.clear();
        break;
      }
      auto cl = h.fields.find("content-length");
      if (cl != h.fields.end()) {
        if (!numeric(cl->second)) {
          fault_response(HeaderFault::Malformed);
          break;
        }
        uint64_t n = parse_u64(cl->second);
        if (n == 0) {
          complete_response(CompletionRule::ContentLength);
        } else {
          s.state = MsgState::Body;
          s.remaining = n;
        }
        break;
      }
      s.tag_watch = true;
      s.state = MsgState::Unbounded;
      s.tail.clear();
      break;
    }
    case MsgState::Body:
      if (--s.remaining == 0) complete_response(CompletionRule::ContentLength);
      break;
    case MsgState::ChunkSize: {
      if (c != '\n') {
        s.chunk_line.push_back(c);
        break;
      }
      std::string line = s.chunk_line;
      s.chunk_line.clear();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      size_t semi = line.find(';');
      if (semi != std::string::npos) line.resize(semi);
      uint64_t size = 0;
      try {
        size = parse_hex(line);
      } catch (const Error&) {
        fault_response(HeaderFault::Malformed);
        break;
      }
      if (size == 0) {
        s.state = MsgState::ChunkTrailer;
        s.chunk_line.clear();
      } else {
        s.state = MsgState::ChunkData;
        s.remaining = size;
      }
      break;
    }
    case MsgState::ChunkData:
      if (--s.remaining == 0) s.state = MsgState::ChunkDataEnd;
      break;
    case MsgState::ChunkDataEnd:
      if (c == '\n') {
        s.state = MsgState::ChunkSize;
      } else if (c != '\r') {
        fault_response(HeaderFault::Malformed);
      }
      break;
    case MsgState::ChunkTrailer: {
      if (c != '\n') {
        s.chunk_line.push_back(c);
        break;
      }
      std::string line = s.chunk_line;
      s.chunk_line.clear();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) complete_response(CompletionRule::Chunked);
      break;
    }
    case MsgState::Unbounded: {
      s.tail.push_back(static_cast<char>(std::tolower(byte)));
      if (s.tail.size() > 8) s.tail.erase(s.tail.begin());
      if (s.tag_watch && (ends_with(s.tail, "</html>") || ends_with(s.tail, "</xml>")))
        complete_response(CompletionRule::EndTag);
      break;
    }
  }
}

void SessionParser::finish() {
  if (finished_) return;
  run_end_tick_ = clock_ + 1;
  if (client_.state == MsgState::Unbounded)
    complete_response(CompletionRule::ConnectionClose);
  for (ExchangeBoundary& b : exchanges_)
    if (!b.answered) b.no_response = true;
  finished_ = true;
}

std::vector<Window> SessionParser::windows() const {
  if (!finished_) throw Error("SessionParser: windows requested before finish");
  std::vector<Window> out;
  uint64_t prev_end = 0;
  for (const ExchangeBoundary& b : exchanges_) {
    Window w;
    w.region_index = b.region_index;
    w.begin = std::max(b.request_complete_tick, prev_end);
    w.end = b.answered ? b.response_complete_tick : run_end_tick_;
    w.no_response = b.no_response;
    if (w.end < w.begin) w.end = w.begin;
    prev_end = w.end;
    out.push_back(w);
  }
  return out;
}

Window SessionParser::window_of(uint32_t region_index) const {
  auto all = windows();
  if (region_index >= all.size())
    throw NoWindow("no completed request for region " + std::to_string(region_index));
  return all[region_index];
}

}  // namespace tgf
