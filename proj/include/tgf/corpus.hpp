#pragma once

#include <map>
#include <set>

#include "tgf/core.hpp"

namespace tgf {

// One protocol request as sent over the wire, in session order.
struct Region {
  uint32_t index = 0;
  Bytes bytes;

  bool operator==(const Region&) const = default;
};

// Per-byte analysis result: which later regions consumed this byte, and at
// which code locations the consuming accesses happened.
struct ByteAnnotation {
  std::set<uint32_t> deps;
  std::set<CodeLocation> pcs;

  bool empty() const { return deps.empty() && pcs.empty(); }
};

struct TaintHint {
  uint32_t region = 0;
  uint32_t offset = 0;
  uint32_t len = 0;
  // Regions that must be replayed for mutations of this span to matter.
  // Never contains the hint's own region.
  std::set<uint32_t> deps;
  // Distinct code locations whose accesses produced exactly this span.
  uint32_t pc_count = 0;
};

// reader region -> writer region -> files carrying the dependency
using RegionDeps = std::map<uint32_t, std::map<uint32_t, std::set<FileId>>>;

struct SeedInteraction {
  std::string id;
  std::vector<Region> regions;
  // Parallel to regions; empty until the seed has been analyzed.
  std::vector<std::vector<ByteAnnotation>> annotated_bytes;
  RegionDeps region_deps;  // flattened form once analysis ran
  std::vector<TaintHint> hints;

  bool analyzed() const { return !annotated_bytes.empty(); }
};

inline const Bytes kRegionDelimiter{0x1a, 0x1a, 0x1a, 0x1a};

// Splits a raw capture on the delimiter. Throws ConsecutiveDelimiters if any
// region would come out empty. An empty capture yields zero regions.
std::vector<Region> split_into_regions(const Bytes& raw,
                                       const Bytes& delimiter = kRegionDelimiter);

// Inverse of split_into_regions. Throws Error on empty regions or regions
// that contain the delimiter (either would break the round trip).
Bytes serialize_seed(const SeedInteraction& seed,
                     const Bytes& delimiter = kRegionDelimiter);

const std::set<std::string>& static_resource_suffixes();

// Drops GET requests for static resources (images, stylesheets, scripts) and
// reindexes the survivors densely. Requests that do not parse are kept.
std::vector<Region> filter_static_requests(
    const std::vector<Region>& regions,
    const std::set<std::string>& suffixes = static_resource_suffixes());

}  // namespace tgf
