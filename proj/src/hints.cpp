#include "tgf/hints.hpp"

#include <algorithm>
#include <sstream>

namespace tgf {

namespace {

struct PendingRun {
  std::vector<uint32_t> offsets;
  std::set<uint32_t> deps;
};

std::vector<TaintHint> region_hints(const SeedInteraction& seed, uint32_t r,
                                    const std::set<uint32_t>& readers_of_r) {
  const auto& bytes = seed.annotated_bytes[r];

  // Every hint of this region shares the same base dependency set: the
  // regions r depends on plus the regions that consumed r's bytes.
  std::set<uint32_t> base;
  auto dit = seed.region_deps.find(r);
  if (dit != seed.region_deps.end())
    for (const auto& [writer, files] : dit->second) base.insert(writer);
  base.insert(readers_of_r.begin(), readers_of_r.end());

  std::map<CodeLocation, PendingRun> pending;
  std::vector<TaintHint> finalized;
  for (size_t j = 0; j < bytes.size(); ++j) {
    for (const CodeLocation& pc : bytes[j].pcs) {
      PendingRun& run = pending.try_emplace(pc, PendingRun{{}, base}).first->second;
      run.offsets.push_back(static_cast<uint32_t>(j));
      run.deps.insert(bytes[j].deps.begin(), bytes[j].deps.end());
    }
    for (const CodeLocation& pc : bytes[j].pcs) {
      bool last = j + 1 == bytes.size() || !bytes[j + 1].pcs.count(pc);
      if (!last) continue;
      PendingRun& run = pending.at(pc);
      TaintHint h;
      h.region = r;
      h.offset = run.offsets.front();
      h.len = static_cast<uint32_t>(run.offsets.size());
      h.deps = std::move(run.deps);
      h.deps.erase(r);
      h.pc_count = 1;
      finalized.push_back(std::move(h));
      pending.erase(pc);
    }
  }

  // Distinct code locations often cover the same span (a value loaded and
  // re-stored several times); collapse those into one hint that remembers
  // how many locations produced it.
  std::vector<TaintHint> merged;
  for (TaintHint& h : finalized) {
    auto same = std::find_if(merged.begin(), merged.end(), [&](const TaintHint& m) {
      return m.offset == h.offset && m.len == h.len;
    });
    if (same == merged.end()) {
      merged.push_back(std::move(h));
    } else {
      same->pc_count += 1;
      same->deps.insert(h.deps.begin(), h.deps.end());
    }
  }
  return sort_filter_hints(std::move(merged));
}

}  // namespace

std::vector<TaintHint> extract_hints(const SeedInteraction& seed) {
  if (!seed.analyzed()) throw Error("extract_hints: seed not analyzed");

  // readers[r] = regions that consumed bytes of region r
  std::map<uint32_t, std::set<uint32_t>> readers;
  for (uint32_t r = 0; r < seed.annotated_bytes.size(); ++r)
    for (const ByteAnnotation& b : seed.annotated_bytes[r])
      for (uint32_t d : b.deps) readers[r].insert(d);

  std::vector<TaintHint> out;
  for (uint32_t r = 0; r < seed.annotated_bytes.size(); ++r) {
    auto batch = region_hints(seed, r, readers[r]);
    out.insert(out.end(), batch.begin(), batch.end());
  }
  return out;
}

std::vector<TaintHint> sort_filter_hints(std::vector<TaintHint> hints) {
  std::sort(hints.begin(), hints.end(), [](const TaintHint& a, const TaintHint& b) {
    return std::tie(a.len, a.offset, a.region) < std::tie(b.len, b.offset, b.region);
  });
  std::vector<TaintHint> kept;
  for (TaintHint& h : hints) {
    bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const TaintHint& k) {
      return k.region == h.region && h.offset < k.offset + k.len &&
             k.offset < h.offset + h.len;
    });
    if (!overlaps) kept.push_back(std::move(h));
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const TaintHint& a, const TaintHint& b) {
                     return a.pc_count > b.pc_count;
                   });
  return kept;
}

std::string serialize_hint(const std::string& seed_id, const TaintHint& h) {
  std::ostringstream out;
  out << "H " << seed_id << ' ' << h.region << ' ' << h.offset << ' ' << h.len << ' '
      << h.pc_count << " deps=";
  bool first = true;
  for (uint32_t d : h.deps) {
    if (!first) out << ',';
    out << d;
    first = false;
  }
  return out.str();
}

TaintHint parse_hint_line(const std::string& line, std::string* seed_id) {
  auto toks = split_ws(line);
  if (toks.size() != 7 || toks[0] != "H" || toks[6].rfind("deps=", 0) != 0)
    throw Error("bad hint line: " + line);
  if (seed_id) *seed_id = toks[1];
  TaintHint h;
  h.region = static_cast<uint32_t>(parse_u64(toks[2]));
  h.offset = static_cast<uint32_t>(parse_u64(toks[3]));
  h.len = static_cast<uint32_t>(parse_u64(toks[4]));
  h.pc_count = static_cast<uint32_t>(parse_u64(toks[5]));
  std::string list = toks[6].substr(5);
  size_t pos = 0;
  while (pos < list.size()) {
    size_t comma = list.find(',', pos);
    size_t end = comma == std::string::npos ? list.size() : comma;
    h.deps.insert(static_cast<uint32_t>(parse_u64(list.substr(pos, end - pos))));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return h;
}

}  // namespace tgf
