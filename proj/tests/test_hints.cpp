#include "doctest.h"
#include "tgf/hints.hpp"

using namespace tgf;

namespace {

const CodeLocation kPcA{101, 0x1000};
const CodeLocation kPcB{101, 0x1008};
const CodeLocation kPcC{102, 0x2000};

SeedInteraction blank_seed(std::vector<size_t> region_lens) {
  SeedInteraction seed;
  seed.id = "s0";
  for (uint32_t i = 0; i < region_lens.size(); ++i) {
    seed.regions.push_back(Region{i, Bytes(region_lens[i], 'x')});
    seed.annotated_bytes.emplace_back(region_lens[i]);
  }
  return seed;
}

void mark(SeedInteraction& seed, uint32_t region, uint32_t off, uint32_t len,
          CodeLocation pc, std::set<uint32_t> deps) {
  for (uint32_t j = off; j < off + len; ++j) {
    seed.annotated_bytes[region][j].pcs.insert(pc);
    seed.annotated_bytes[region][j].deps.insert(deps.begin(), deps.end());
  }
}

std::vector<std::tuple<uint32_t, uint32_t, uint32_t>> spans(
    const std::vector<TaintHint>& hints) {
  std::vector<std::tuple<uint32_t, uint32_t, uint32_t>> out;
  for (const auto& h : hints) out.emplace_back(h.region, h.offset, h.len);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("hints");

TEST_CASE("extraction requires a prior analysis pass") {
  SeedInteraction seed;
  seed.regions.push_back(Region{0, str_bytes("GET / HTTP/1.1")});
  CHECK_THROWS_AS(extract_hints(seed), Error);
}

TEST_CASE("a contiguous byte run under one location becomes one hint") {
  auto seed = blank_seed({20});
  mark(seed, 0, 3, 5, kPcA, {});
  auto hints = extract_hints(seed);
  REQUIRE(hints.size() == 1);
  CHECK(hints[0].region == 0);
  CHECK(hints[0].offset == 3);
  CHECK(hints[0].len == 5);
  CHECK(hints[0].pc_count == 1);
  CHECK(hints[0].deps.empty());
}

TEST_CASE("an unannotated gap splits a location's run in two") {
  auto seed = blank_seed({20});
  mark(seed, 0, 2, 2, kPcA, {});
  mark(seed, 0, 5, 2, kPcA, {});
  auto hints = extract_hints(seed);
  CHECK(spans(hints) == decltype(spans(hints)){{0, 2, 2}, {0, 5, 2}});
}

TEST_CASE("locations covering the same span collapse into its pc count") {
  auto seed = blank_seed({16});
  mark(seed, 0, 4, 6, kPcA, {});
  mark(seed, 0, 4, 6, kPcB, {});
  mark(seed, 0, 4, 6, kPcC, {});
  auto hints = extract_hints(seed);
  REQUIRE(hints.size() == 1);
  CHECK(hints[0].pc_count == 3);
  CHECK(hints[0].len == 6);
}

TEST_CASE("hint dependencies union writers, readers, and never self") {
  auto seed = blank_seed({10, 10, 10, 10});
  // Region 2's bytes were consumed by regions 2 (echo) and 3.
  mark(seed, 2, 1, 4, kPcA, {2, 3});
  // Region 2 itself depends on region 0 through a file.
  seed.region_deps[2][0] = {"/var/db/x"};

  auto hints = extract_hints(seed);
  REQUIRE(hints.size() == 1);
  CHECK(hints[0].deps == std::set<uint32_t>{0, 3});
}

TEST_CASE("every hint of a region carries the whole region's reader set") {
  auto seed = blank_seed({24, 24});
  mark(seed, 0, 2, 3, kPcA, {1});   // consumed downstream
  mark(seed, 0, 10, 3, kPcB, {});   // consumed in place only
  auto hints = extract_hints(seed);
  REQUIRE(hints.size() == 2);
  for (const auto& h : hints) CHECK(h.deps == std::set<uint32_t>{1});
}

TEST_CASE("overlapping hints keep the shortest span") {
  std::vector<TaintHint> raw;
  TaintHint wide;
  wide.region = 0;
  wide.offset = 4;
  wide.len = 10;
  wide.pc_count = 5;
  TaintHint tight;
  tight.region = 0;
  tight.offset = 6;
  tight.len = 3;
  tight.pc_count = 1;
  raw = {wide, tight};

  auto kept = sort_filter_hints(raw);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].len == 3);
  CHECK(kept[0].offset == 6);
}

TEST_CASE("the overlap filter never crosses regions") {
  TaintHint a;
  a.region = 0;
  a.offset = 5;
  a.len = 4;
  TaintHint b = a;
  b.region = 1;
  auto kept = sort_filter_hints({a, b});
  CHECK(kept.size() == 2);
}

TEST_CASE("adjacent spans do not count as overlapping") {
  TaintHint a;
  a.offset = 0;
  a.len = 4;
  TaintHint b;
  b.offset = 4;
  b.len = 4;
  auto kept = sort_filter_hints({a, b});
  CHECK(kept.size() == 2);
}

TEST_CASE("survivors are ordered by descending pc count") {
  auto seed = blank_seed({40});
  mark(seed, 0, 0, 3, kPcA, {});
  mark(seed, 0, 10, 4, kPcA, {});
  mark(seed, 0, 10, 4, kPcB, {});
  mark(seed, 0, 10, 4, kPcC, {});
  mark(seed, 0, 20, 5, kPcA, {});
  mark(seed, 0, 20, 5, kPcB, {});
  auto hints = extract_hints(seed);
  REQUIRE(hints.size() == 3);
  CHECK(hints[0].pc_count == 3);
  CHECK(hints[1].pc_count == 2);
  CHECK(hints[2].pc_count == 1);
}

TEST_CASE("hints concatenate region by region") {
  auto seed = blank_seed({10, 10});
  mark(seed, 0, 0, 3, kPcA, {});
  mark(seed, 1, 0, 3, kPcA, {});
  mark(seed, 1, 0, 3, kPcB, {});
  auto hints = extract_hints(seed);
  REQUIRE(hints.size() == 2);
  // Region 1's hint has the higher pc count but region order wins.
  CHECK(hints[0].region == 0);
  CHECK(hints[1].region == 1);
}

TEST_CASE("hint lines round-trip") {
  TaintHint h;
  h.region = 2;
  h.offset = 57;
  h.len = 17;
  h.pc_count = 7;
  h.deps = {0, 1, 17, 19};
  auto line = serialize_hint("id_000004", h);
  CHECK(line == "H id_000004 2 57 17 7 deps=0,1,17,19");

  std::string seed_id;
  auto back = parse_hint_line(line, &seed_id);
  CHECK(seed_id == "id_000004");
  CHECK(back.region == h.region);
  CHECK(back.offset == h.offset);
  CHECK(back.len == h.len);
  CHECK(back.pc_count == h.pc_count);
  CHECK(back.deps == h.deps);
}

TEST_CASE("empty dependency lists round-trip") {
  TaintHint h;
  h.region = 0;
  h.offset = 8;
  h.len = 6;
  h.pc_count = 2;
  auto line = serialize_hint("s0", h);
  CHECK(line == "H s0 0 8 6 2 deps=");
  auto back = parse_hint_line(line);
  CHECK(back.deps.empty());
  CHECK(back.len == 6);
}

TEST_CASE("malformed hint lines are rejected") {
  CHECK_THROWS_AS(parse_hint_line("H s0 0 8 6 2"), Error);
  CHECK_THROWS_AS(parse_hint_line("X s0 0 8 6 2 deps="), Error);
  CHECK_THROWS_AS(parse_hint_line("H s0 0 8 6 2 d=1"), Error);
  CHECK_THROWS_AS(parse_hint_line("H s0 0 8 six 2 deps=1"), Error);
}

TEST_SUITE_END();
