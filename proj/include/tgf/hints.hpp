#pragma once

#include "tgf/corpus.hpp"

namespace tgf {

// Collapses the per-byte annotations of one analyzed seed into mutation
// hints: maximal byte runs that share an accessing code location, carrying
// the set of regions that must be replayed alongside. Each region's hints
// are sorted and filtered as a batch; the seed's hint list is the
// concatenation in region order.
std::vector<TaintHint> extract_hints(const SeedInteraction& seed);

// Keeps the shortest hint of every overlapping cluster (ties broken by
// offset, then region), then orders the survivors by descending pc_count so
// the spans exercised from the most code come up first.
std::vector<TaintHint> sort_filter_hints(std::vector<TaintHint> hints);

// H <seed> <region> <offset> <len> <pc_count> deps=<comma list>
std::string serialize_hint(const std::string& seed_id, const TaintHint& h);
TaintHint parse_hint_line(const std::string& line, std::string* seed_id = nullptr);

}  // namespace tgf
