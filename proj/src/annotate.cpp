#include "tgf/annotate.hpp"

namespace tgf {

void annotate_subregion(SeedInteraction& seed, const EventRun& run,
                        uint32_t reader_region, const SubseqTrie& trie,
                        PcOwnership& ownership, const AnnotateConfig& cfg) {
  if (run.empty()) return;
  size_t len_max = std::min(run.size(), trie.max_len());
  Bytes seq;
  for (size_t len = len_max; len >= cfg.min_match_len && len > 0; --len) {
    for (size_t k = 0; k + len <= run.size(); ++k) {
      seq.resize(len);
      for (size_t j = 0; j < len; ++j) seq[j] = run[k + j].value;
      auto matches = trie.find(seq);
      if (matches.size() != 1) continue;
      uint32_t src = matches[0].region_id;
      uint32_t pos = matches[0].offset;
      if (src > reader_region) continue;
      for (size_t j = 0; j < len; ++j) {
        ByteAnnotation& b = seed.annotated_bytes[src][pos + j];
        b.deps.insert(reader_region);
        const CodeLocation& pc = run[k + j].pc;
        if (ownership.claim(pc, seed.id)) b.pcs.insert(pc);
      }
      return;  // one accepted match per run
    }
  }
}

void flush_run(SeedInteraction& seed, EventRun& run, const SubseqTrie& trie,
               PcOwnership& ownership, const AnnotateConfig& cfg) {
  if (run.empty()) return;
  annotate_subregion(seed, run, run.back().region_id, trie, ownership, cfg);
  run.clear();
}

void process_mem_event(SeedInteraction& seed, const TaintMemEvent& event, EventRun& run,
                       const SubseqTrie& trie, PcOwnership& ownership,
                       const AnnotateConfig& cfg) {
  if (!run.empty()) {
    const TaintMemEvent& prev = run.back();
    bool contiguous = event.region_id == prev.region_id && event.gpa == prev.gpa + 1;
    if (!contiguous) flush_run(seed, run, trie, ownership, cfg);
  }
  run.push_back(event);
}

void annotate_seed(SeedInteraction& seed, const SubseqTrie& trie,
                   const std::vector<TaintMemEvent>& loads,
                   const std::vector<TaintMemEvent>& stores, PcOwnership& ownership,
                   const AnnotateConfig& cfg) {
  if (seed.annotated_bytes.empty()) {
    seed.annotated_bytes.resize(seed.regions.size());
    for (size_t r = 0; r < seed.regions.size(); ++r)
      seed.annotated_bytes[r].assign(seed.regions[r].bytes.size(), ByteAnnotation{});
  }
  EventRun run;
  for (const auto* stream : {&loads, &stores}) {
    for (const TaintMemEvent& e : *stream)
      process_mem_event(seed, e, run, trie, ownership, cfg);
    flush_run(seed, run, trie, ownership, cfg);
  }
}

}  // namespace tgf
