#include "tgf/feedback.hpp"

#include <sstream>

namespace tgf {

CoverageBitmap::CoverageBitmap(size_t size) {
  if (size == 0 || (size & (size - 1)) != 0)
    throw Error("CoverageBitmap: size must be a power of two");
  bits_.assign(size / 8, 0);
  mask_ = size - 1;
}

bool CoverageBitmap::record(const CodeLocation& loc, ModuleKind kind) {
  if (kind != ModuleKind::Application) return false;
  size_t idx = index_of(loc);
  uint8_t bit = uint8_t(1u << (idx & 7));
  uint8_t& byte = bits_[idx >> 3];
  if (byte & bit) return false;
  byte |= bit;
  return true;
}

bool CoverageBitmap::test(const CodeLocation& loc) const {
  size_t idx = index_of(loc);
  return bits_[idx >> 3] & (1u << (idx & 7));
}

size_t CoverageBitmap::popcount() const {
  size_t n = 0;
  for (uint8_t b : bits_) n += size_t(__builtin_popcount(b));
  return n;
}

std::string CrashFingerprint::key() const {
  Bytes mat;
  for (const CodeLocation& b : blocks) {
    for (int i = 0; i < 8; ++i) mat.push_back(uint8_t(b.inode >> (i * 8)));
    for (int i = 0; i < 8; ++i) mat.push_back(uint8_t(b.pc >> (i * 8)));
  }
  uint64_t h = fnv1a64(process) ^ fnv1a64(mat);
  char buf[9];
  snprintf(buf, sizeof buf, "%08x", static_cast<uint32_t>(h ^ (h >> 32)));
  return process + "_" + buf;
}

CrashFingerprint make_fingerprint(const CrashRecord& rec, size_t depth) {
  CrashFingerprint fp;
  fp.process = rec.process;
  fp.blocks.assign(depth, kHistoryPad);
  size_t n = std::min(depth, rec.last_blocks.size());
  // Keep the newest n entries, right-aligned so the faulting block is last.
  for (size_t i = 0; i < n; ++i)
    fp.blocks[depth - n + i] = rec.last_blocks[rec.last_blocks.size() - n + i];
  return fp;
}

std::string render_fingerprint(const CrashFingerprint& fp, size_t index) {
  std::ostringstream out;
  out << "=== Fingerprint #" << index << " ===\n";
  out << "Faulty process: " << fp.process << "\n";
  for (size_t i = 0; i < fp.blocks.size(); ++i) {
    const CodeLocation& b = fp.blocks[i];
    bool pad = b == kHistoryPad;
    char line[128];
    snprintf(line, sizeof line, "  [%02zu] inode: %llu, pc: 0x%08llx, module: %s\n", i,
             static_cast<unsigned long long>(b.inode),
             static_cast<unsigned long long>(b.pc),
             pad ? "-" : fp.process.c_str());
    out << line;
  }
  return out.str();
}

void CrashStore::dry_run_collect(const std::vector<CrashRecord>& crashes) {
  for (const CrashRecord& c : crashes) ignored_.insert(make_fingerprint(c, depth_));
}

CrashStore::Insert CrashStore::dedup_insert(const CrashFingerprint& fp) {
  if (ignored_.count(fp)) return Insert::Ignored;
  if (!seen_.insert(fp).second) return Insert::Duplicate;
  return Insert::New;
}

std::string classify_bug(size_t request_count, const std::string& crash_process,
                         const Scenario& sc) {
  const ProcessSpec* p = sc.find_process(crash_process);
  if (!p) throw UnknownTopology("crash in undeclared process " + crash_process);

  std::string rel;
  if (crash_process == sc.service) {
    rel = "IB";
  } else {
    // Walk ancestry toward init; hitting the service means the crashing
    // process was spawned (directly or through children) by it.
    std::string cur = p->parent;
    rel = "II";
    while (cur != "init") {
      if (cur == sc.service) {
        rel = "ID";
        break;
      }
      const ProcessSpec* pp = sc.find_process(cur);
      if (!pp) throw UnknownTopology("unknown ancestor " + cur);
      cur = pp->parent;
    }
  }
  return (request_count == 1 ? "O" : "M") + rel;
}

}  // namespace tgf
