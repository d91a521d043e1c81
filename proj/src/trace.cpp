#include "tgf/trace.hpp"

#include <algorithm>
#include <sstream>

namespace tgf {

std::vector<TaintMemEvent> SeedTrace::mem_events(MemKind kind) const {
  std::vector<TaintMemEvent> out;
  for (const TraceRecord& r : records)
    if (r.type == TraceRecord::Type::Mem && r.mem.kind == kind) out.push_back(r.mem);
  return out;
}

std::vector<FsEvent> SeedTrace::fs_events() const {
  std::vector<FsEvent> out;
  for (const TraceRecord& r : records)
    if (r.type == TraceRecord::Type::Fs) out.push_back(r.fs);
  return out;
}

SeedTrace attribute_events(const std::vector<RawEvent>& raw,
                           const std::vector<Window>& windows) {
  SeedTrace out;
  for (const RawEvent& e : raw) {
    // Last window starting at or before the tick is the only candidate.
    auto it = std::upper_bound(windows.begin(), windows.end(), e.tick,
                               [](uint64_t t, const Window& w) { return t < w.begin; });
    if (it == windows.begin()) {
      ++out.orphan_events;
      continue;
    }
    const Window& w = *std::prev(it);
    if (e.tick >= w.end) {
      ++out.orphan_events;
      continue;
    }
    TraceRecord rec = e.rec;
    if (rec.type == TraceRecord::Type::Mem)
      rec.mem.region_id = w.region_index;
    else
      rec.fs.region_id = w.region_index;
    out.records.push_back(rec);
  }
  return out;
}

BuiltDeps build_region_deps(const std::vector<FsEvent>& events) {
  BuiltDeps out;
  std::map<FileId, std::set<uint32_t>> writers;
  for (const FsEvent& e : events) {
    if (e.kind == FsKind::Writer) {
      writers[e.file].insert(e.region_id);
      continue;
    }
    auto it = writers.find(e.file);
    if (it == writers.end()) continue;
    for (uint32_t w : it->second) {
      if (w == e.region_id)
        out.self_reads[e.region_id].insert(e.file);
      else
        out.deps[e.region_id][w].insert(e.file);
    }
  }
  return out;
}

const std::vector<std::string>& default_ignore_globs() {
  static const std::vector<std::string> kGlobs{"/lib/*", "*.so*", "/etc/TZ", "/proc/*", "/dev/*"};
  return kGlobs;
}

bool glob_match(const std::string& pattern, const std::string& str) {
  // Iterative '*' matcher with single-star backtracking.
  size_t p = 0, s = 0, star = std::string::npos, mark = 0;
  while (s < str.size()) {
    if (p < pattern.size() && (pattern[p] == str[s])) {
      ++p;
      ++s;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = s;
    } else if (star != std::string::npos) {
      p = star + 1;
      s = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

RegionDeps filter_irrelevant_files(const RegionDeps& deps,
                                   const std::vector<std::string>& ignore_globs) {
  auto ignored = [&](const FileId& f) {
    return std::any_of(ignore_globs.begin(), ignore_globs.end(),
                       [&](const std::string& g) { return glob_match(g, f); });
  };
  RegionDeps out;
  for (const auto& [reader, by_writer] : deps) {
    for (const auto& [writer, files] : by_writer) {
      std::set<FileId> kept;
      for (const FileId& f : files)
        if (!ignored(f)) kept.insert(f);
      if (!kept.empty()) out[reader][writer] = std::move(kept);
    }
  }
  return out;
}

std::string serialize_trace(const SeedTrace& trace) {
  std::ostringstream out;
  for (const TraceRecord& r : trace.records) {
    if (r.type == TraceRecord::Type::Mem) {
      const TaintMemEvent& m = r.mem;
      out << "M " << (m.kind == MemKind::Load ? "load" : "store") << ' '
          << m.region_id << ' ' << m.pc.inode << ' ' << hex_u64(m.pc.pc) << ' '
          << hex_u64(m.gpa) << ' ' << hex_byte(m.value) << '\n';
    } else {
      const FsEvent& f = r.fs;
      if (f.file.find_first_of(" \t\n") != std::string::npos)
        throw Error("serialize_trace: file id contains whitespace: " + f.file);
      out << "F " << (f.kind == FsKind::Writer ? "writer" : "reader") << ' '
          << f.region_id << ' ' << f.file << '\n';
    }
  }
  return out.str();
}

SeedTrace parse_trace(const std::string& text) {
  SeedTrace out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) throw Error("trace line " + std::to_string(lineno) + ": empty");
    if (toks[0] == "M") {
      if (toks.size() != 7)
        throw Error("trace line " + std::to_string(lineno) + ": bad M record");
      TaintMemEvent m;
      if (toks[1] == "load")
        m.kind = MemKind::Load;
      else if (toks[1] == "store")
        m.kind = MemKind::Store;
      else
        throw Error("trace line " + std::to_string(lineno) + ": bad kind " + toks[1]);
      m.region_id = static_cast<uint32_t>(parse_u64(toks[2]));
      m.pc.inode = parse_u64(toks[3]);
      m.pc.pc = parse_hex(toks[4]);
      m.gpa = parse_hex(toks[5]);
      uint64_t v = parse_hex(toks[6]);
      if (v > 0xff)
        throw Error("trace line " + std::to_string(lineno) + ": value out of range");
      m.value = static_cast<uint8_t>(v);
      out.records.push_back(TraceRecord::of(m));
    } else if (toks[0] == "F") {
      if (toks.size() != 4)
        throw Error("trace line " + std::to_string(lineno) + ": bad F record");
      FsEvent f;
      if (toks[1] == "writer")
        f.kind = FsKind::Writer;
      else if (toks[1] == "reader")
        f.kind = FsKind::Reader;
      else
        throw Error("trace line " + std::to_string(lineno) + ": bad kind " + toks[1]);
      f.region_id = static_cast<uint32_t>(parse_u64(toks[2]));
      f.file = toks[3];
      out.records.push_back(TraceRecord::of(f));
    } else {
      throw Error("trace line " + std::to_string(lineno) + ": unknown record " + toks[0]);
    }
  }
  return out;
}

}  // namespace tgf
