#include <random>

#include "doctest.h"
#include "tgf/trace.hpp"

using namespace tgf;

namespace {

RawEvent mem_at(uint64_t tick, uint32_t region, uint64_t gpa, uint8_t value) {
  TaintMemEvent e{MemKind::Load, region, CodeLocation{1, 0x100}, gpa, value};
  return {tick, TraceRecord::of(e)};
}

RawEvent fs_at(uint64_t tick, FsKind kind, const char* file) {
  return {tick, TraceRecord::of(FsEvent{kind, 0, file})};
}

FsEvent wr(uint32_t region, const char* file) {
  return FsEvent{FsKind::Writer, region, file};
}

FsEvent rd(uint32_t region, const char* file) {
  return FsEvent{FsKind::Reader, region, file};
}

}  // namespace

TEST_SUITE_BEGIN("trace");

TEST_CASE("events are stamped with the covering window's region") {
  std::vector<Window> windows{{0, 10, 20, false}, {1, 25, 40, false}};
  std::vector<RawEvent> raw{
      mem_at(5, 99, 0x1000, 'a'),   // before any window: dropped
      mem_at(10, 99, 0x1000, 'b'),  // first tick of window 0
      mem_at(19, 99, 0x1001, 'c'),  // last tick inside window 0
      mem_at(20, 99, 0x1002, 'd'),  // windows are half-open: dropped
      mem_at(30, 99, 0x2000, 'e'),  // window 1
      mem_at(77, 99, 0x3000, 'f'),  // after every window: dropped
      fs_at(26, FsKind::Writer, "/tmp/x"),
  };
  auto trace = attribute_events(raw, windows);
  CHECK(trace.orphan_events == 3);
  auto loads = trace.mem_events(MemKind::Load);
  REQUIRE(loads.size() == 3);
  CHECK(loads[0].region_id == 0);
  CHECK(loads[1].region_id == 0);
  CHECK(loads[2].region_id == 1);
  auto fs = trace.fs_events();
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].region_id == 1);
}

TEST_CASE("attribution matches a direct interval scan on random input") {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 100; ++iter) {
    // Non-overlapping random windows.
    std::vector<Window> windows;
    uint64_t t = rng() % 5;
    for (uint32_t r = 0; r < 4; ++r) {
      uint64_t begin = t + rng() % 4;
      uint64_t end = begin + 1 + rng() % 10;
      windows.push_back({r, begin, end, false});
      t = end + rng() % 3;
    }
    std::vector<RawEvent> raw;
    for (uint64_t tick = 0; tick < t + 5; ++tick)
      raw.push_back(mem_at(tick, 0, 0x1000 + tick, uint8_t(tick)));

    auto trace = attribute_events(raw, windows);

    uint64_t orphans = 0;
    std::vector<uint32_t> want;
    for (const auto& ev : raw) {
      bool found = false;
      for (const auto& w : windows)
        if (ev.tick >= w.begin && ev.tick < w.end) {
          want.push_back(w.region_index);
          found = true;
          break;
        }
      if (!found) ++orphans;
    }
    CHECK(trace.orphan_events == orphans);
    auto loads = trace.mem_events(MemKind::Load);
    REQUIRE(loads.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) CHECK(loads[i].region_id == want[i]);
  }
}

TEST_CASE("mem event streams keep their kind separate") {
  std::vector<Window> windows{{0, 0, 100, false}};
  TaintMemEvent ld{MemKind::Load, 0, {1, 1}, 0x10, 1};
  TaintMemEvent st{MemKind::Store, 0, {1, 2}, 0x20, 2};
  std::vector<RawEvent> raw{{1, TraceRecord::of(ld)}, {2, TraceRecord::of(st)}};
  auto trace = attribute_events(raw, windows);
  CHECK(trace.mem_events(MemKind::Load).size() == 1);
  CHECK(trace.mem_events(MemKind::Store).size() == 1);
  CHECK(trace.mem_events(MemKind::Store)[0].pc.pc == 2);
}

TEST_CASE("a reader depends on every earlier writer of the file") {
  auto built = build_region_deps({
      wr(0, "/db/a"),
      wr(1, "/db/a"),
      rd(2, "/db/a"),
      rd(1, "/db/b"),  // read before any write: no dependency
      wr(3, "/db/b"),
      rd(4, "/db/b"),
  });
  REQUIRE(built.deps.count(2));
  CHECK(built.deps[2][0] == std::set<FileId>{"/db/a"});
  CHECK(built.deps[2][1] == std::set<FileId>{"/db/a"});
  CHECK_FALSE(built.deps.count(1));
  CHECK(built.deps[4][3] == std::set<FileId>{"/db/b"});
}

TEST_CASE("reading back your own write is not a dependency") {
  auto built = build_region_deps({wr(1, "/tmp/own"), rd(1, "/tmp/own")});
  CHECK(built.deps.empty());
  REQUIRE(built.self_reads.count(1));
  CHECK(built.self_reads[1] == std::set<FileId>{"/tmp/own"});
}

TEST_CASE("write after read does not create a backwards edge") {
  auto built = build_region_deps({rd(0, "/f"), wr(1, "/f"), rd(2, "/f")});
  CHECK_FALSE(built.deps.count(0));
  CHECK(built.deps[2][1] == std::set<FileId>{"/f"});
}

TEST_CASE("glob matching") {
  CHECK(glob_match("/lib/*", "/lib/libuClibc-0.9.so"));
  CHECK(glob_match("*.so*", "/lib/libpthread.so.0"));
  CHECK(glob_match("*.so*", "/usr/lib/libz.so"));
  CHECK_FALSE(glob_match("*.so*", "/var/db/config.xml"));
  CHECK(glob_match("/etc/TZ", "/etc/TZ"));
  CHECK_FALSE(glob_match("/etc/TZ", "/etc/TZx"));
  CHECK(glob_match("*", "anything"));
  CHECK_FALSE(glob_match("", "x"));
  CHECK(glob_match("", ""));
}

TEST_CASE("edges carried only by noise files disappear") {
  RegionDeps deps;
  deps[2][0] = {"/lib/libuClibc-0.9.so"};
  deps[2][1] = {"/lib/ld.so", "/var/db/config.xml"};
  deps[3][1] = {"/etc/TZ"};
  auto filtered = filter_irrelevant_files(deps);
  REQUIRE(filtered.count(2));
  CHECK_FALSE(filtered[2].count(0));
  CHECK(filtered[2][1] == std::set<FileId>{"/var/db/config.xml"});
  CHECK_FALSE(filtered.count(3));
}

TEST_CASE("trace serialization round trip") {
  std::mt19937_64 rng(17);
  SeedTrace trace;
  for (int i = 0; i < 300; ++i) {
    if (rng() % 3 == 0) {
      trace.records.push_back(TraceRecord::of(
          FsEvent{rng() % 2 ? FsKind::Writer : FsKind::Reader, uint32_t(rng() % 8),
                  "/var/file" + std::to_string(rng() % 5)}));
    } else {
      trace.records.push_back(TraceRecord::of(
          TaintMemEvent{rng() % 2 ? MemKind::Load : MemKind::Store,
                        uint32_t(rng() % 8),
                        CodeLocation{rng() % 1000, rng()},
                        rng(), uint8_t(rng())}));
    }
  }
  auto text = serialize_trace(trace);
  auto back = parse_trace(text);
  REQUIRE(back.records.size() == trace.records.size());
  for (size_t i = 0; i < back.records.size(); ++i) {
    const auto& a = trace.records[i];
    const auto& b = back.records[i];
    REQUIRE(a.type == b.type);
    if (a.type == TraceRecord::Type::Mem) {
      CHECK(a.mem.kind == b.mem.kind);
      CHECK(a.mem.region_id == b.mem.region_id);
      CHECK(a.mem.pc == b.mem.pc);
      CHECK(a.mem.gpa == b.mem.gpa);
      CHECK(a.mem.value == b.mem.value);
    } else {
      CHECK(a.fs.kind == b.fs.kind);
      CHECK(a.fs.region_id == b.fs.region_id);
      CHECK(a.fs.file == b.fs.file);
    }
  }
}

TEST_SUITE_END();
