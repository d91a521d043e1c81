#pragma once

#include <map>
#include <set>

#include "tgf/core.hpp"
#include "tgf/sim.hpp"

namespace tgf {

enum class ModuleKind { Application, SharedLibrary, Kernel };

// Edge-less block coverage over a fixed-size bit array. The index is derived
// from the module-relative pc and the module inode so that same-named blocks
// in different binaries stay distinct. Kernel and shared-library blocks are
// dropped before they reach the map.
class CoverageBitmap {
 public:
  explicit CoverageBitmap(size_t size);  // must be a power of two

  size_t index_of(const CodeLocation& loc) const {
    return static_cast<size_t>(mix64(loc.inode ^ loc.pc)) & mask_;
  }

  // Sets the block's bit; true if the bit was previously clear.
  bool record(const CodeLocation& loc, ModuleKind kind = ModuleKind::Application);

  bool test(const CodeLocation& loc) const;
  size_t popcount() const;
  size_t size() const { return bits_.size() * 8; }

 private:
  std::vector<uint8_t> bits_;
  size_t mask_;
};

struct CrashFingerprint {
  std::string process;
  std::vector<CodeLocation> blocks;  // fixed depth, oldest first, front-padded

  auto operator<=>(const CrashFingerprint&) const = default;

  // Stable directory-name key: process plus a short content hash.
  std::string key() const;
};

inline const CodeLocation kHistoryPad{0, 0};

// Pads or trims the crash record's block history to exactly depth entries.
CrashFingerprint make_fingerprint(const CrashRecord& rec, size_t depth);

// Human-readable listing for triage output, one numbered fingerprint at a
// time. Pad entries render with module "-".
std::string render_fingerprint(const CrashFingerprint& fp, size_t index);

// Deduplicates fingerprints across a campaign and holds the dry-run ignore
// set of environment-caused faults.
class CrashStore {
 public:
  explicit CrashStore(size_t depth = 5) : depth_(depth) {}

  size_t depth() const { return depth_; }

  // Dry-run phase: every fault seen while replaying pristine seeds is
  // environment noise and never counts as a finding later.
  void dry_run_collect(const std::vector<CrashRecord>& crashes);

  enum class Insert { Ignored, Duplicate, New };
  Insert dedup_insert(const CrashFingerprint& fp);

  bool is_ignored(const CrashFingerprint& fp) const { return ignored_.count(fp) != 0; }
  const std::set<CrashFingerprint>& ignored() const { return ignored_; }
  const std::set<CrashFingerprint>& seen() const { return seen_; }

 private:
  size_t depth_;
  std::set<CrashFingerprint> ignored_;
  std::set<CrashFingerprint> seen_;
};

// OIB/MIB, OID/MID, OII/MII: one vs multiple requests crossed with where the
// crash lives relative to the network-facing service (the service itself, a
// descendant, or an unrelated process).
std::string classify_bug(size_t request_count, const std::string& crash_process,
                         const Scenario& sc);

}  // namespace tgf
