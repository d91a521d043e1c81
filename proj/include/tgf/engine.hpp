#pragma once

#include <optional>
#include <random>

#include "tgf/corpus.hpp"
#include "tgf/feedback.hpp"
#include "tgf/hints.hpp"
#include "tgf/sim.hpp"

namespace tgf {

enum class Strategy { TaintGuided, StateAware };

// Uniform draw without std::uniform_int_distribution: that algorithm is
// implementation-defined, and queue files must be reproducible bit for bit.
inline uint64_t rnd_below(std::mt19937_64& rng, uint64_t n) {
  return n ? rng() % n : 0;
}

// One primitive change to a byte slice. Positions are slice-relative; edits
// stack in order, so later positions see earlier length changes.
struct Edit {
  enum class Op {
    FlipBits,         // a = first bit, b = bit count
    Overwrite,        // a = pos, data = replacement bytes
    ArithAdd,         // a = pos, b = delta
    ArithSub,         // a = pos, b = delta
    CopyBlock,        // a = src, b = dst, c = len
    Insert,           // a = pos, data = inserted bytes
    Delete,           // a = pos, b = len
    ReplaceAll,       // data = entire new slice content
  };
  Op op{};
  uint64_t a = 0, b = 0, c = 0;
  Bytes data;
};

// Whole-sequence reshaping; only unwindowed havoc may produce these.
struct SeqEdit {
  enum class Op { Replace, Insert, Duplicate, Delete };
  Op op{};
  uint32_t at = 0;
  uint32_t src = 0;
};

// Everything needed to reproduce one mutation step from its base entry.
struct MutationRecord {
  Strategy strategy = Strategy::StateAware;
  std::string base_id;
  uint32_t target_region = 0;
  bool windowed = false;
  uint32_t win_off = 0;
  uint32_t win_len = 0;
  std::vector<uint32_t> kept_regions;  // base region indexes replayed, in order
  std::vector<Edit> edits;
  std::vector<SeqEdit> seq_edits;
};

// Root-first chain of mutation steps from an initial seed to an input.
using Lineage = std::vector<MutationRecord>;

// 1.0 when at least one step in the chain was taint-guided.
double causality_score(const Lineage& lineage);

std::string serialize_lineage(const Lineage& lineage);
Lineage parse_lineage(const std::string& text);

Bytes apply_edits(Bytes slice, const std::vector<Edit>& edits);

// Reproduces the executed sequence for one mutation step: selects the kept
// regions, rewrites the target's window slice, applies sequence edits, and
// reindexes. The fuzzer and lineage replay share this path.
std::vector<Region> apply_record(const std::vector<Region>& base,
                                 const MutationRecord& rec);

// Deterministic window-confined bit flips: every single bit, then adjacent
// pairs, then adjacent quads. nullopt once the enumeration is done.
std::optional<Edit> bitflip_edit(size_t trial, size_t window_len);

struct HavocConfig {
  Bytes dict_token;
  size_t max_stack = 4;
  size_t max_rep = 3;
};

// Window-slice havoc: random overwrites, small arithmetic, block copies,
// insertions, deletions, and dictionary splices.
std::vector<Edit> havoc_taint_guided(std::mt19937_64& rng, size_t slice_len,
                                     const HavocConfig& cfg);

struct SeqHavoc {
  std::vector<Edit> edits;
  std::vector<SeqEdit> seq_edits;
};

// Unwindowed havoc over a whole region, extended with region-granularity
// operations: overwriting the target with another region and reshaping the
// request sequence.
SeqHavoc havoc_state_aware(std::mt19937_64& rng, const std::vector<Region>& regions,
                           uint32_t target, const HavocConfig& cfg);

struct QueueEntry {
  std::string id;
  SeedInteraction seed;
  std::string origin;  // "initial" or the id of the entry it was mutated from
  std::string server_state_key;
  size_t hint_cursor = 0;
  // Trials already spent per hint index, so revisits resume the deterministic
  // bit-flip enumeration where the previous slot stopped instead of redoing
  // the same flips forever.
  std::map<size_t, uint64_t> hint_trials;
  Lineage lineage;
};

struct MutationPlan {
  Strategy strategy = Strategy::StateAware;
  size_t base_index = 0;  // queue position of the base entry
  uint32_t target_region = 0;
  std::optional<TaintHint> hint;       // present exactly when taint-guided
  size_t hint_index = 0;               // position in the base seed's hint list
  uint64_t start_trial = 0;            // trials this hint already consumed
  std::vector<uint32_t> kept_regions;  // ordered; always contains target_region

  std::vector<uint32_t> prefix() const;
  std::vector<uint32_t> suffix() const;
};

// Transitive closure of regions a hint needs replayed: the hint's own
// region, its recorded dependencies, and everything those depend on.
std::vector<uint32_t> minimize_sequence(const SeedInteraction& seed,
                                        const TaintHint& hint);

// Slot scheduler. In the full mode, taint-guided and state-aware slots
// alternate (taint-guided first); initial seeds take hint turns round-robin
// with a per-seed cursor. State-aware slots round-robin over server-state
// groups and draw a random member. Modes "state-aware" and "stateless" never
// schedule taint-guided slots; when no hints exist anywhere, taint-guided
// slots fall back to state-aware.
class Scheduler {
 public:
  explicit Scheduler(std::string mode) : mode_(std::move(mode)) {}

  MutationPlan schedule_next(std::vector<QueueEntry>& queue, std::mt19937_64& rng);

 private:
  std::string mode_;
  uint64_t slot_ = 0;
  size_t tg_rr_ = 0;
  size_t group_rr_ = 0;
};

struct TestcaseResult {
  std::vector<int> statuses;
  std::vector<CrashRecord> crashes;
  bool timed_out = false;
  uint64_t steps = 0;
};

std::string state_key(const std::vector<int>& statuses);

// Replays trials of one plan against a two-stage checkpoint scheme: the
// first stage sits right after boot, and the prefix of the plan is replayed
// once and checkpointed when the first trial runs. Sequence-reshaping trials
// bypass the cache and replay everything from the first stage.
class PlanRunner {
 public:
  PlanRunner(Executor& ex, const Executor::Checkpoint& first_stage,
             uint64_t step_budget);

  TestcaseResult run_target_trial(const std::vector<Region>& base_regions,
                                  const MutationPlan& plan, const Bytes& mutated_target);
  TestcaseResult run_sequence_trial(const std::vector<Region>& units);

 private:
  Executor& ex_;
  const Executor::Checkpoint& first_stage_;
  uint64_t step_budget_;
  std::optional<Executor::Checkpoint> second_stage_;
  std::vector<int> prefix_statuses_;
  std::vector<CrashRecord> prefix_crashes_;
};

// Appends a queue entry for an input that exercised new coverage. Returns
// the new entry's id. Crashing or timed-out inputs must not reach this.
std::string enqueue_entry(std::vector<QueueEntry>& queue, std::vector<Region> regions,
                          const std::string& origin, const std::string& key,
                          Lineage lineage);

}  // namespace tgf
