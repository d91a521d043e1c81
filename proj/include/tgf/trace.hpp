#pragma once

#include <map>
#include <set>

#include "tgf/corpus.hpp"
#include "tgf/http.hpp"

namespace tgf {

enum class MemKind { Load, Store };

// One tainted byte access. Multi-byte accesses in the target appear as runs
// of these with consecutive guest physical addresses.
struct TaintMemEvent {
  MemKind kind = MemKind::Load;
  uint32_t region_id = 0;
  CodeLocation pc;
  uint64_t gpa = 0;
  uint8_t value = 0;
};

enum class FsKind { Writer, Reader };

struct FsEvent {
  FsKind kind = FsKind::Writer;
  uint32_t region_id = 0;
  FileId file;
};

struct TraceRecord {
  enum class Type { Mem, Fs };
  Type type = Type::Mem;
  TaintMemEvent mem;
  FsEvent fs;

  static TraceRecord of(TaintMemEvent e) { return {Type::Mem, e, {}}; }
  static TraceRecord of(FsEvent e) { return {Type::Fs, {}, std::move(e)}; }
};

// Event as emitted by the executor, before region attribution.
struct RawEvent {
  uint64_t tick = 0;
  TraceRecord rec;
};

struct SeedTrace {
  std::vector<TraceRecord> records;
  uint64_t orphan_events = 0;

  std::vector<TaintMemEvent> mem_events(MemKind kind) const;
  std::vector<FsEvent> fs_events() const;
};

// Stamps each raw event with the region whose processing window covers its
// tick. Events outside every window (boot noise, idle gaps) are dropped and
// counted. Windows must be sorted by begin, which SessionParser guarantees.
SeedTrace attribute_events(const std::vector<RawEvent>& raw,
                           const std::vector<Window>& windows);

struct BuiltDeps {
  RegionDeps deps;
  // Regions that read back a file they wrote themselves; kept out of deps so
  // downstream flattening never sees reader == writer.
  std::map<uint32_t, std::set<FileId>> self_reads;
};

// Scans fs events in stream order: a reader of file f depends on every
// region that wrote f earlier in the stream.
BuiltDeps build_region_deps(const std::vector<FsEvent>& events);

const std::vector<std::string>& default_ignore_globs();

bool glob_match(const std::string& pattern, const std::string& str);

// Removes dependency edges carried only by noisy files (shared libraries,
// timezone data, and similar always-touched paths).
RegionDeps filter_irrelevant_files(
    const RegionDeps& deps,
    const std::vector<std::string>& ignore_globs = default_ignore_globs());

// Line format, one record per line:
//   M <load|store> <region> <inode> <pc_hex> <gpa_hex> <value_hex>
//   F <writer|reader> <region> <file>
std::string serialize_trace(const SeedTrace& trace);
SeedTrace parse_trace(const std::string& text);

}  // namespace tgf
