#pragma once

#include "tgf/annotate.hpp"
#include "tgf/engine.hpp"
#include "tgf/sim.hpp"
#include "tgf/subseq.hpp"

namespace tgf {

struct CampaignConfig {
  std::string scenario_path;
  std::string out_dir;  // empty keeps results in memory only
  // taint-guided = alternating hint-driven and state-aware slots; state-aware =
  // session-aware havoc only; stateless = whole-capture blob mutation, one
  // request per trial.
  std::string mode = "taint-guided";
  uint64_t exec_budget = 50000;
  uint64_t rng_seed = 1;
  uint64_t step_budget = 1 << 20;  // virtual steps per testcase before timeout
  size_t slot_len = 256;
  size_t bitmap_size = 1 << 22;
  size_t fingerprint_depth = 5;
  TrieBuildConfig trie;
  AnnotateConfig annotate;

  // key=value lines, # comments. Unknown keys throw.
  static CampaignConfig parse(const std::string& text);
  static CampaignConfig load(const std::string& path);
  void apply_override(const std::string& kv);
};

// Annotation precision against the executor's ground-truth flow map: of all
// code locations cited on annotated bytes, the fraction the target really
// executed on that byte.
struct PrecisionStats {
  uint64_t annotated = 0;  // location citations across annotated bytes
  uint64_t correct = 0;    // citations confirmed by the flow oracle

  void add(const SeedInteraction& seed, const OracleMap& oracle);
  void merge(const PrecisionStats& o) {
    annotated += o.annotated;
    correct += o.correct;
  }
  double value() const { return annotated ? double(correct) / double(annotated) : 1.0; }
};

struct SeedAnalysis {
  SeedInteraction seed;
  OracleMap oracle;
  std::vector<int> statuses;
  uint64_t steps = 0;
  uint64_t orphan_events = 0;
  size_t trie_max_len = 0;
};

// Whole analysis pipeline for one seed against a fresh target instance:
// recorded replay, window attribution, file-dependency flattening, subsequence
// indexing, byte annotation, hint extraction. The ownership table is shared
// across the corpus in seed order.
SeedAnalysis analyze_interaction(const Scenario& sc, const SeedInteraction& input,
                                 PcOwnership& ownership, const TrieBuildConfig& tcfg,
                                 const AnnotateConfig& acfg);

struct BugReport {
  CrashFingerprint fingerprint;
  std::string category;  // OIB/MIB/OID/MID/OII/MII
  std::string strategy;  // taint-guided | state-aware | stateless | dry-run
  uint64_t exec = 0;     // trials completed when first observed
  uint64_t step = 0;     // cumulative fuzzing steps when first observed
  double causality = 0.0;
  size_t request_count = 0;
  Lineage lineage;
  std::vector<Region> input;  // the crashing sequence as executed
};

struct CampaignResult {
  std::string scenario;
  std::string mode;
  uint64_t rng_seed = 0;
  uint64_t execs = 0;
  uint64_t steps = 0;
  size_t initial_seeds = 0;
  size_t queue_size = 0;
  size_t hints_total = 0;
  size_t ignored_fingerprints = 0;
  uint64_t ignored_hits = 0;
  uint64_t duplicate_hits = 0;
  std::vector<BugReport> bugs;
  PrecisionStats precision;      // initial-seed annotation
  PrecisionStats precision_min;  // re-analysis of minimized sequences
};

CampaignResult run_campaign(const CampaignConfig& cfg);

// Multi-request container for mutated inputs, which may contain the region
// delimiter and so cannot round-trip through serialize_seed.
Bytes pack_units(const std::vector<Region>& regions);
std::vector<Region> unpack_units(const Bytes& packed);

std::string render_stats(const CampaignResult& res);
std::string render_bug_line(const BugReport& bug);

}  // namespace tgf
