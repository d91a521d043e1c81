#include <random>

#include "doctest.h"
#include "tgf/depfilter.hpp"

using namespace tgf;

namespace {

// Reference result computed the slow way: attribute every file to its
// earliest writer, then walk reader->writer edges to a fixed point and
// collect the reachable writers' files. Written against the intended
// behavior, not against the implementation.
RegionDeps brute_force_flatten(const RegionDeps& deps) {
  std::map<FileId, uint32_t> min_writer;
  std::map<uint32_t, std::set<uint32_t>> direct;
  for (const auto& [reader, by_writer] : deps) {
    for (const auto& [writer, files] : by_writer) {
      direct[reader].insert(writer);
      for (const FileId& f : files)
        if (!min_writer.count(f) || writer < min_writer[f]) min_writer[f] = writer;
    }
  }

  RegionDeps out;
  for (const auto& [reader, by_writer] : deps) {
    // Reachability over the direct-dependency graph, excluding the reader.
    std::set<uint32_t> reach;
    std::vector<uint32_t> frontier(direct[reader].begin(), direct[reader].end());
    while (!frontier.empty()) {
      uint32_t w = frontier.back();
      frontier.pop_back();
      if (reach.count(w)) continue;
      reach.insert(w);
      auto it = direct.find(w);
      if (it != direct.end())
        for (uint32_t next : it->second)
          if (!reach.count(next)) frontier.push_back(next);
    }
    reach.erase(reader);

    std::map<uint32_t, std::set<FileId>> flat;
    for (uint32_t w : reach)
      for (const auto& [f, mw] : min_writer)
        if (mw == w) flat[w].insert(f);
    // Reachable writers that own no files still appear if some file was ever
    // attributed to them; writers stripped of all files drop out.
    for (auto it = flat.begin(); it != flat.end();)
      it = it->second.empty() ? flat.erase(it) : std::next(it);
    if (!flat.empty()) out[reader] = std::move(flat);
  }
  return out;
}

RegionDeps random_deps(std::mt19937_64& rng, uint32_t max_regions, int max_files) {
  RegionDeps deps;
  uint32_t n = 2 + rng() % (max_regions - 1);
  int edges = 1 + int(rng() % (2 * n));
  for (int i = 0; i < edges; ++i) {
    uint32_t reader = rng() % n;
    uint32_t writer = rng() % n;
    if (reader == writer) continue;  // raw deps never self-reference
    int nf = 1 + int(rng() % 2);
    for (int j = 0; j < nf; ++j)
      deps[reader][writer].insert("/f" + std::to_string(rng() % max_files));
  }
  return deps;
}

bool same(const RegionDeps& a, const RegionDeps& b) { return a == b; }

}  // namespace

TEST_SUITE_BEGIN("depfilter");

TEST_CASE("chain dependencies flatten transitively") {
  RegionDeps deps;
  deps[2][1] = {"/staging"};
  deps[1][0] = {"/input"};
  auto flat = filter_and_flatten(deps);
  REQUIRE(flat.count(2));
  CHECK(flat[2].count(1));
  CHECK(flat[2].count(0));
  CHECK(flat[2][0] == std::set<FileId>{"/input"});
  CHECK(flat[1] == (std::map<uint32_t, std::set<FileId>>{{0, {"/input"}}}));
}

TEST_CASE("each file belongs to its earliest writer") {
  RegionDeps deps;
  deps[3][1] = {"/shared"};
  deps[3][2] = {"/shared"};  // later writer of the same file
  auto flat = filter_and_flatten(deps);
  REQUIRE(flat.count(3));
  CHECK(flat[3][1] == std::set<FileId>{"/shared"});
  // Region 2 still shows as a dependency but no longer owns the file.
  CHECK_FALSE(flat[3].count(2));
}

TEST_CASE("cycles cannot hand a reader its own files") {
  RegionDeps deps;
  deps[1][2] = {"/a"};
  deps[2][1] = {"/b"};
  auto flat = filter_and_flatten(deps);
  if (flat.count(1)) CHECK_FALSE(flat[1].count(1));
  if (flat.count(2)) CHECK_FALSE(flat[2].count(2));
}

TEST_CASE("flattening is idempotent") {
  std::mt19937_64 rng(23);
  for (int iter = 0; iter < 200; ++iter) {
    auto deps = random_deps(rng, 8, 6);
    auto once = filter_and_flatten(deps);
    auto twice = filter_and_flatten(once);
    CHECK(same(once, twice));
  }
}

TEST_CASE("flattening matches the brute-force closure") {
  std::mt19937_64 rng(29);
  int checked = 0;
  for (int iter = 0; iter < 600; ++iter) {
    auto deps = random_deps(rng, 8, 6);
    auto got = filter_and_flatten(deps);
    auto want = brute_force_flatten(deps);
    if (!same(got, want)) {
      CAPTURE(iter);
      REQUIRE(got == want);
    }
    ++checked;
  }
  CHECK(checked == 600);
}

TEST_CASE("empty input stays empty") {
  CHECK(filter_and_flatten({}).empty());
}

TEST_SUITE_END();
