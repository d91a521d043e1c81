#pragma once

#include <map>
#include <memory>

#include "tgf/core.hpp"

namespace tgf {

struct TriePosition {
  uint32_t region_id = 0;
  uint32_t offset = 0;

  auto operator<=>(const TriePosition&) const = default;
};

struct TrieBuildConfig {
  size_t initial_max_len = 64;
  size_t floor_len = 4;
  size_t memory_limit = 256ull << 20;
  double threshold = 0.9;       // fraction of memory_limit that triggers a retry
  size_t check_interval = 1 << 14;  // node steps between memory checks
  size_t node_estimate = 64;        // bytes charged per node
};

// Indexes every subsequence of every region up to a maximum length, mapping
// it to all (region, offset) pairs where it occurs. If the estimated size
// crosses the memory threshold mid-build, the build restarts with half the
// maximum length, down to a floor.
class SubseqTrie {
 public:
  static SubseqTrie build(const std::vector<Bytes>& regions, TrieBuildConfig cfg = {});

  // All occurrences of seq across the indexed regions, ordered by
  // (region, offset). Throws SeqTooLong past the effective maximum length.
  std::vector<TriePosition> find(const uint8_t* seq, size_t len) const;
  std::vector<TriePosition> find(const Bytes& seq) const { return find(seq.data(), seq.size()); }

  size_t max_len() const { return max_len_; }
  size_t node_count() const { return node_count_; }
  uint64_t node_steps() const { return node_steps_; }
  size_t halvings() const { return halvings_; }

 private:
  struct Node {
    std::map<uint8_t, std::unique_ptr<Node>> children;
    std::vector<TriePosition> positions;
  };

  SubseqTrie() = default;
  bool try_build(const std::vector<Bytes>& regions, TrieBuildConfig cfg);

  std::unique_ptr<Node> root_;
  size_t max_len_ = 0;
  size_t node_count_ = 0;
  uint64_t node_steps_ = 0;
  size_t halvings_ = 0;
};

}  // namespace tgf
