#include "tgf/subseq.hpp"

namespace tgf {

bool SubseqTrie::try_build(const std::vector<Bytes>& regions, TrieBuildConfig cfg) {
  root_ = std::make_unique<Node>();
  node_count_ = 0;  // the root is bookkeeping, not an indexed position
  node_steps_ = 0;
  size_t since_check = 0;
  const size_t budget = static_cast<size_t>(cfg.threshold * double(cfg.memory_limit));

  for (uint32_t r = 0; r < regions.size(); ++r) {
    const Bytes& bytes = regions[r];
    for (uint32_t start = 0; start < bytes.size(); ++start) {
      Node* node = root_.get();
      size_t depth_limit = std::min<size_t>(max_len_, bytes.size() - start);
      for (size_t d = 0; d < depth_limit; ++d) {
        uint8_t b = bytes[start + d];
        auto& child = node->children[b];
        if (!child) {
          child = std::make_unique<Node>();
          ++node_count_;
        }
        node = child.get();
        node->positions.push_back({r, start});
        ++node_steps_;
        if (++since_check >= cfg.check_interval) {
          since_check = 0;
          if (node_count_ * cfg.node_estimate > budget) return false;
        }
      }
    }
  }
  if (node_count_ * cfg.node_estimate > budget) return false;
  return true;
}

SubseqTrie SubseqTrie::build(const std::vector<Bytes>& regions, TrieBuildConfig cfg) {
  if (cfg.floor_len == 0 || cfg.initial_max_len == 0)
    throw Error("SubseqTrie: bad length bounds");
  cfg.floor_len = std::min(cfg.floor_len, cfg.initial_max_len);
  SubseqTrie t;
  t.max_len_ = cfg.initial_max_len;
  while (true) {
    if (t.try_build(regions, cfg)) return t;
    if (t.max_len_ == cfg.floor_len)
      throw MemoryFloorReached("subsequence index exceeds memory budget at floor length " +
                               std::to_string(cfg.floor_len));
    t.max_len_ = std::max(t.max_len_ / 2, cfg.floor_len);
    ++t.halvings_;
  }
}

std::vector<TriePosition> SubseqTrie::find(const uint8_t* seq, size_t len) const {
  if (len == 0) throw Error("SubseqTrie: empty lookup");
  if (len > max_len_)
    throw SeqTooLong("lookup length " + std::to_string(len) + " exceeds indexed max " +
                     std::to_string(max_len_));
  const Node* node = root_.get();
  for (size_t i = 0; i < len; ++i) {
    auto it = node->children.find(seq[i]);
    if (it == node->children.end()) return {};
    node = it->second.get();
  }
  return node->positions;
}

}  // namespace tgf
