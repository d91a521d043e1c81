#include <random>

#include "doctest.h"
#include "tgf/subseq.hpp"

using namespace tgf;

namespace {

// Reference lookup: scan every region for every occurrence.
std::vector<TriePosition> naive_scan(const std::vector<Bytes>& regions,
                                     const Bytes& seq) {
  std::vector<TriePosition> out;
  if (seq.empty()) return out;
  for (uint32_t r = 0; r < regions.size(); ++r) {
    const Bytes& reg = regions[r];
    if (reg.size() < seq.size()) continue;
    for (uint32_t off = 0; off + seq.size() <= reg.size(); ++off)
      if (std::equal(seq.begin(), seq.end(), reg.begin() + off))
        out.push_back({r, off});
  }
  return out;
}

Bytes random_bytes_n(std::mt19937_64& rng, size_t n, int alphabet) {
  Bytes b(n);
  for (auto& v : b) v = uint8_t('a' + rng() % alphabet);
  return b;
}

}  // namespace

TEST_SUITE_BEGIN("subseq");

TEST_CASE("finds all occurrences in order") {
  std::vector<Bytes> regions{str_bytes("abcabc"), str_bytes("xabcx")};
  auto trie = SubseqTrie::build(regions);
  auto hits = trie.find(str_bytes("abc"));
  REQUIRE(hits.size() == 3);
  CHECK(hits[0] == TriePosition{0, 0});
  CHECK(hits[1] == TriePosition{0, 3});
  CHECK(hits[2] == TriePosition{1, 1});
  CHECK(trie.find(str_bytes("zzz")).empty());
}

TEST_CASE("lookup beyond the indexed length throws") {
  std::vector<Bytes> regions{str_bytes("abcdefgh")};
  TrieBuildConfig cfg;
  cfg.initial_max_len = 4;
  auto trie = SubseqTrie::build(regions, cfg);
  CHECK(trie.max_len() == 4);
  CHECK(trie.find(str_bytes("abcd")).size() == 1);
  CHECK_THROWS_AS(trie.find(str_bytes("abcde")), SeqTooLong);
}

TEST_CASE("node step count follows the suffix-window formula") {
  // Building walks min(max_len, region_len - i) nodes from each offset i.
  std::vector<Bytes> regions{str_bytes("abcdef"), str_bytes("xy")};
  TrieBuildConfig cfg;
  cfg.initial_max_len = 4;
  auto trie = SubseqTrie::build(regions, cfg);
  uint64_t want = 0;
  for (const Bytes& r : regions)
    for (size_t i = 0; i < r.size(); ++i)
      want += std::min<uint64_t>(cfg.initial_max_len, r.size() - i);
  CHECK(trie.node_steps() == want);
}

TEST_CASE("tight memory budget halves the depth until it fits") {
  std::mt19937_64 rng(5);
  std::vector<Bytes> regions;
  for (int i = 0; i < 4; ++i) regions.push_back(random_bytes_n(rng, 400, 26));

  TrieBuildConfig cfg;
  cfg.initial_max_len = 64;
  cfg.floor_len = 4;
  cfg.check_interval = 64;
  cfg.node_estimate = 64;
  cfg.memory_limit = 600 * 1024;
  auto trie = SubseqTrie::build(regions, cfg);
  CHECK(trie.halvings() >= 1);
  CHECK(trie.max_len() < 64);
  CHECK(trie.max_len() >= cfg.floor_len);
  // The abort check runs every check_interval steps, so the surviving build
  // may overshoot the threshold by one interval, never the limit itself.
  CHECK(trie.node_count() * cfg.node_estimate <= cfg.memory_limit);

  // The shallower index still answers correctly.
  Bytes probe(regions[0].begin(), regions[0].begin() + trie.max_len());
  auto hits = trie.find(probe);
  CHECK(naive_scan(regions, probe) == hits);
}

TEST_CASE("an impossible budget gives up at the floor") {
  std::mt19937_64 rng(6);
  std::vector<Bytes> regions;
  for (int i = 0; i < 4; ++i) regions.push_back(random_bytes_n(rng, 600, 26));
  TrieBuildConfig cfg;
  cfg.initial_max_len = 16;
  cfg.floor_len = 4;
  cfg.check_interval = 16;
  cfg.memory_limit = 8 * 1024;
  CHECK_THROWS_AS(SubseqTrie::build(regions, cfg), MemoryFloorReached);
}

TEST_CASE("lookups match a naive scan on random corpora") {
  std::mt19937_64 rng(9);
  int instances = 0;
  for (int build_iter = 0; build_iter < 30; ++build_iter) {
    std::vector<Bytes> regions;
    size_t nregions = 1 + rng() % 5;
    // Small alphabet so repeated substrings actually occur.
    int alphabet = 2 + int(rng() % 4);
    for (size_t r = 0; r < nregions; ++r)
      regions.push_back(random_bytes_n(rng, 10 + rng() % 60, alphabet));

    TrieBuildConfig cfg;
    cfg.initial_max_len = 1 + rng() % 12;
    auto trie = SubseqTrie::build(regions, cfg);

    for (int probe_iter = 0; probe_iter < 25; ++probe_iter) {
      size_t len = 1 + rng() % cfg.initial_max_len;
      Bytes probe;
      if (rng() % 2 && regions[0].size() >= len) {
        // Slice of a real region so positive matches are common.
        size_t r = rng() % regions.size();
        if (regions[r].size() >= len) {
          size_t off = rng() % (regions[r].size() - len + 1);
          probe.assign(regions[r].begin() + off, regions[r].begin() + off + len);
        }
      }
      if (probe.empty()) probe = random_bytes_n(rng, len, alphabet);
      CHECK(trie.find(probe) == naive_scan(regions, probe));
      ++instances;
    }
  }
  CHECK(instances == 750);
}

TEST_CASE("empty corpus") {
  auto trie = SubseqTrie::build({});
  CHECK(trie.find(str_bytes("a")).empty());
  CHECK(trie.node_count() == 0);
}

TEST_SUITE_END();
