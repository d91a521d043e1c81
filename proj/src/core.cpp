#include "tgf/core.hpp"

#include <charconv>
#include <sstream>

namespace tgf {

std::string hex_u64(uint64_t v) {
  char buf[19];
  auto [end, ec] = std::to_chars(buf + 2, buf + 19, v, 16);
  buf[0] = '0';
  buf[1] = 'x';
  (void)ec;
  return std::string(buf, end);
}

std::string hex_byte(uint8_t v) {
  static const char digits[] = "0123456789abcdef";
  return {digits[v >> 4], digits[v & 0xf]};
}

uint64_t parse_u64(const std::string& tok) {
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, 10);
  if (ec != std::errc{} || p != tok.data() + tok.size())
    throw Error("bad decimal integer: " + tok);
  return v;
}

uint64_t parse_hex(const std::string& tok) {
  size_t off = tok.rfind("0x", 0) == 0 ? 2 : 0;
  uint64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data() + off, tok.data() + tok.size(), v, 16);
  if (ec != std::errc{} || p != tok.data() + tok.size() || off == tok.size())
    throw Error("bad hex integer: " + tok);
  return v;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace tgf
