#pragma once

#include "tgf/corpus.hpp"
#include "tgf/subseq.hpp"
#include "tgf/trace.hpp"

namespace tgf {

// The first seed whose analysis touches a code location owns it; annotations
// from other seeds may not cite that location afterwards. Shared across the
// whole corpus in a fixed seed order to keep runs reproducible.
struct PcOwnership {
  std::map<CodeLocation, std::string> owner;

  // True when seed_id owns pc, claiming it if unowned.
  bool claim(const CodeLocation& pc, const std::string& seed_id) {
    auto [it, inserted] = owner.try_emplace(pc, seed_id);
    (void)inserted;
    return it->second == seed_id;
  }
};

struct AnnotateConfig {
  size_t min_match_len = 3;
};

// Buffer of events forming one contiguous same-region address run.
using EventRun = std::vector<TaintMemEvent>;

// Matches value subsequences of the buffered run against the region index,
// longest first. A unique occurrence in a region at or before reader_region
// annotates the matched bytes (dependency on the reader, plus the accessing
// code locations if owned) and ends the scan for this run.
void annotate_subregion(SeedInteraction& seed, const EventRun& run,
                        uint32_t reader_region, const SubseqTrie& trie,
                        PcOwnership& ownership, const AnnotateConfig& cfg);

// Streaming run splitter: an event extends the current run only if it stays
// in the same region and lands on the next guest physical address; anything
// else flushes the run through annotate_subregion first.
void process_mem_event(SeedInteraction& seed, const TaintMemEvent& event, EventRun& run,
                       const SubseqTrie& trie, PcOwnership& ownership,
                       const AnnotateConfig& cfg);

void flush_run(SeedInteraction& seed, EventRun& run, const SubseqTrie& trie,
               PcOwnership& ownership, const AnnotateConfig& cfg);

// Full pass over one seed's attributed memory events: loads first, then
// stores, each stream split into runs independently. Initializes
// seed.annotated_bytes on first use.
void annotate_seed(SeedInteraction& seed, const SubseqTrie& trie,
                   const std::vector<TaintMemEvent>& loads,
                   const std::vector<TaintMemEvent>& stores, PcOwnership& ownership,
                   const AnnotateConfig& cfg = {});

}  // namespace tgf
