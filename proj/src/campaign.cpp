#include "tgf/campaign.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tgf/depfilter.hpp"
#include "tgf/trace.hpp"

namespace fs = std::filesystem;

namespace tgf {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void write_file(const fs::path& path, const void* data, size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(static_cast<const char*>(data), std::streamsize(n));
  if (!out) throw Error("short write to " + path.string());
}

void write_file(const fs::path& path, const std::string& text) {
  write_file(path, text.data(), text.size());
}

void write_file(const fs::path& path, const Bytes& bytes) {
  write_file(path, bytes.data(), bytes.size());
}

}  // namespace

CampaignConfig CampaignConfig::parse(const std::string& text) {
  CampaignConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      cfg.apply_override(line);
    } catch (const Error& e) {
      throw Error("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

CampaignConfig CampaignConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void CampaignConfig::apply_override(const std::string& kv) {
  size_t eq = kv.find('=');
  if (eq == std::string::npos) throw Error("expected key=value, got '" + kv + "'");
  std::string key = trim(kv.substr(0, eq));
  std::string value = trim(kv.substr(eq + 1));
  if (key.empty() || value.empty()) throw Error("empty key or value in '" + kv + "'");

  if (key == "scenario") {
    scenario_path = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "mode") {
    if (value != "taint-guided" && value != "state-aware" && value != "stateless")
      throw Error("unknown mode " + value);
    mode = value;
  } else if (key == "execs") {
    exec_budget = parse_u64(value);
  } else if (key == "rng_seed") {
    rng_seed = parse_u64(value);
  } else if (key == "step_budget") {
    step_budget = parse_u64(value);
  } else if (key == "slot_len") {
    slot_len = parse_u64(value);
    if (!slot_len) throw Error("slot_len must be positive");
  } else if (key == "bitmap_size") {
    bitmap_size = parse_u64(value);
  } else if (key == "fp_depth") {
    fingerprint_depth = parse_u64(value);
    if (!fingerprint_depth) throw Error("fp_depth must be positive");
  } else if (key == "trie_max_len") {
    trie.initial_max_len = parse_u64(value);
  } else if (key == "trie_floor_len") {
    trie.floor_len = parse_u64(value);
  } else if (key == "trie_mem_limit") {
    trie.memory_limit = parse_u64(value);
  } else if (key == "min_match_len") {
    annotate.min_match_len = parse_u64(value);
  } else {
    throw Error("unknown config key " + key);
  }
}

void PrecisionStats::add(const SeedInteraction& seed, const OracleMap& oracle) {
  for (size_t r = 0; r < seed.annotated_bytes.size(); ++r) {
    const auto& row = seed.annotated_bytes[r];
    for (size_t o = 0; o < row.size(); ++o) {
      if (row[o].pcs.empty()) continue;
      annotated += row[o].pcs.size();
      auto it = oracle.find({uint32_t(r), uint32_t(o)});
      if (it == oracle.end()) continue;
      for (const CodeLocation& pc : row[o].pcs)
        if (it->second.count(pc)) ++correct;
    }
  }
}

SeedAnalysis analyze_interaction(const Scenario& sc, const SeedInteraction& input,
                                 PcOwnership& ownership, const TrieBuildConfig& tcfg,
                                 const AnnotateConfig& acfg) {
  SeedAnalysis out;
  out.seed = input;
  out.seed.annotated_bytes.clear();
  out.seed.region_deps.clear();
  out.seed.hints.clear();

  Executor ex(sc);
  SessionParser session;
  std::vector<RawEvent> events;
  ex.set_recording({&events, &session, &out.oracle});
  ex.boot();
  uint64_t steps0 = ex.steps();
  for (const Region& r : out.seed.regions)
    out.statuses.push_back(ex.handle_request(r.bytes).status);
  out.steps = ex.steps() - steps0;
  session.finish();

  SeedTrace trace = attribute_events(events, session.windows());
  out.orphan_events = trace.orphan_events;

  BuiltDeps built = build_region_deps(trace.fs_events());
  out.seed.region_deps = filter_and_flatten(filter_irrelevant_files(built.deps));

  std::vector<Bytes> region_bytes;
  region_bytes.reserve(out.seed.regions.size());
  for (const Region& r : out.seed.regions) region_bytes.push_back(r.bytes);
  SubseqTrie trie = SubseqTrie::build(region_bytes, tcfg);
  out.trie_max_len = trie.max_len();

  annotate_seed(out.seed, trie, trace.mem_events(MemKind::Load),
                trace.mem_events(MemKind::Store), ownership, acfg);
  out.seed.hints = extract_hints(out.seed);
  return out;
}

Bytes pack_units(const std::vector<Region>& regions) {
  std::string head = "tgfq1 " + std::to_string(regions.size()) + "\n";
  for (size_t i = 0; i < regions.size(); ++i) {
    if (i) head += ' ';
    head += std::to_string(regions[i].bytes.size());
  }
  head += '\n';
  Bytes out(head.begin(), head.end());
  for (const Region& r : regions) out.insert(out.end(), r.bytes.begin(), r.bytes.end());
  return out;
}

std::vector<Region> unpack_units(const Bytes& packed) {
  auto line_end = [&](size_t from) {
    for (size_t i = from; i < packed.size(); ++i)
      if (packed[i] == '\n') return i;
    throw Error("unit container: truncated header");
  };
  size_t e1 = line_end(0);
  std::string head(packed.begin(), packed.begin() + e1);
  auto toks = split_ws(head);
  if (toks.size() != 2 || toks[0] != "tgfq1")
    throw Error("unit container: bad magic");
  size_t count = parse_u64(toks[1]);
  size_t e2 = line_end(e1 + 1);
  std::string lens_line(packed.begin() + e1 + 1, packed.begin() + e2);
  auto lens = split_ws(lens_line);
  if (lens.size() != count) throw Error("unit container: length list mismatch");

  std::vector<Region> out;
  size_t pos = e2 + 1;
  for (size_t i = 0; i < count; ++i) {
    size_t len = parse_u64(lens[i]);
    if (pos + len > packed.size()) throw Error("unit container: truncated data");
    Region r;
    r.index = uint32_t(i);
    r.bytes.assign(packed.begin() + pos, packed.begin() + pos + len);
    out.push_back(std::move(r));
    pos += len;
  }
  if (pos != packed.size()) throw Error("unit container: trailing data");
  return out;
}

std::string render_stats(const CampaignResult& res) {
  std::ostringstream out;
  char fbuf[32];
  out << "scenario: " << res.scenario << '\n'
      << "mode: " << res.mode << '\n'
      << "rng_seed: " << res.rng_seed << '\n'
      << "execs: " << res.execs << '\n'
      << "steps: " << res.steps << '\n'
      << "initial_seeds: " << res.initial_seeds << '\n'
      << "queue: " << res.queue_size << '\n'
      << "hints: " << res.hints_total << '\n'
      << "unique_bugs: " << res.bugs.size() << '\n'
      << "ignored_fingerprints: " << res.ignored_fingerprints << '\n'
      << "ignored_hits: " << res.ignored_hits << '\n'
      << "duplicate_hits: " << res.duplicate_hits << '\n';
  snprintf(fbuf, sizeof fbuf, "%.6f", res.precision.value());
  out << "precision: " << fbuf << " annotated=" << res.precision.annotated
      << " correct=" << res.precision.correct << '\n';
  snprintf(fbuf, sizeof fbuf, "%.6f", res.precision_min.value());
  out << "precision_min: " << fbuf << " annotated=" << res.precision_min.annotated
      << " correct=" << res.precision_min.correct << '\n';
  return out.str();
}

std::string render_bug_line(const BugReport& bug) {
  std::ostringstream out;
  char fbuf[16];
  snprintf(fbuf, sizeof fbuf, "%.1f", bug.causality);
  out << "bug category=" << bug.category << " process=" << bug.fingerprint.process
      << " key=" << bug.fingerprint.key() << " exec=" << bug.exec << " step=" << bug.step
      << " causality=" << fbuf << " requests=" << bug.request_count
      << " strategy=" << bug.strategy;
  return out.str();
}

namespace {

Bytes splice_window(const Bytes& base, size_t off, size_t len,
                    const std::vector<Edit>& edits) {
  Bytes slice(base.begin() + off, base.begin() + off + len);
  slice = apply_edits(std::move(slice), edits);
  Bytes out(base.begin(), base.begin() + off);
  out.insert(out.end(), slice.begin(), slice.end());
  out.insert(out.end(), base.begin() + off + len, base.end());
  return out;
}

// Greedy request-drop reduction of a crashing sequence, preserving the exact
// fingerprint. Classification wants the minimal reproduction: a crash that a
// lucky whole-session mutant found may still be a one-request bug.
std::vector<Region> minimize_crash(Executor& ex, const Executor::Checkpoint& boot,
                                   std::vector<Region> units,
                                   const CrashFingerprint& want, size_t depth) {
  auto reproduces = [&](const std::vector<Region>& seq) {
    ex.restore(boot);
    for (const Region& u : seq) {
      SimResponse r = ex.handle_request(u.bytes);
      for (const CrashRecord& cr : r.crashes)
        if (make_fingerprint(cr, depth) == want) return true;
    }
    return false;
  };
  bool shrunk = true;
  while (shrunk && units.size() > 1) {
    shrunk = false;
    for (size_t i = 0; i < units.size() && units.size() > 1; ++i) {
      std::vector<Region> cand = units;
      cand.erase(cand.begin() + i);
      if (reproduces(cand)) {
        units = std::move(cand);
        shrunk = true;
        --i;
      }
    }
  }
  for (size_t i = 0; i < units.size(); ++i) units[i].index = uint32_t(i);
  return units;
}

void write_outputs(const CampaignConfig& cfg, const CampaignResult& res,
                   const std::vector<QueueEntry>& queue) {
  fs::path out = cfg.out_dir;
  fs::create_directories(out / "queue");
  fs::create_directories(out / "crashes");

  write_file(out / "stats.txt", render_stats(res));

  std::string bugs_text;
  for (const BugReport& b : res.bugs) bugs_text += render_bug_line(b) + "\n";
  write_file(out / "bugs.txt", bugs_text);

  std::string hints_text;
  for (const QueueEntry& e : queue) {
    if (e.origin != "initial") continue;
    for (const TaintHint& h : e.seed.hints)
      hints_text += serialize_hint(e.id, h) + "\n";
  }
  write_file(out / "hints.txt", hints_text);

  for (const QueueEntry& e : queue) {
    write_file(out / "queue" / (e.id + ".bin"), pack_units(e.seed.regions));
    std::string meta = "origin=" + e.origin + " state=" + e.server_state_key + "\n" +
                       serialize_lineage(e.lineage);
    write_file(out / "queue" / (e.id + ".meta"), meta);
  }

  for (size_t i = 0; i < res.bugs.size(); ++i) {
    const BugReport& b = res.bugs[i];
    fs::path dir = out / "crashes" / b.fingerprint.key();
    fs::create_directories(dir);
    write_file(dir / "fingerprint.txt", render_fingerprint(b.fingerprint, i));
    write_file(dir / "input.bin", pack_units(b.input));
    write_file(dir / "lineage.txt", serialize_lineage(b.lineage));
    write_file(dir / "meta.txt", render_bug_line(b) + "\n");
  }
}

}  // namespace

CampaignResult run_campaign(const CampaignConfig& cfg) {
  Scenario sc = Scenario::load(cfg.scenario_path);
  std::mt19937_64 rng(cfg.rng_seed);

  CampaignResult res;
  res.scenario = sc.name;
  res.mode = cfg.mode;
  res.rng_seed = cfg.rng_seed;

  std::vector<SeedInteraction> seeds;
  for (const SeedSpec& spec : sc.seeds) seeds.push_back(build_seed(sc, spec.id));
  if (cfg.mode == "stateless") {
    // The stateless baseline has no session model: the capture is one blob
    // and every trial replays the whole mutated blob as a single request.
    for (SeedInteraction& seed : seeds) {
      Region blob;
      blob.index = 0;
      for (const Region& r : seed.regions)
        blob.bytes.insert(blob.bytes.end(), r.bytes.begin(), r.bytes.end());
      seed.regions = {std::move(blob)};
    }
  }
  res.initial_seeds = seeds.size();

  Executor ex(sc, cfg.fingerprint_depth);
  CoverageBitmap cov(cfg.bitmap_size);
  bool trial_new = false;
  ex.set_block_hook([&](const std::string&, CodeLocation loc) {
    if (cov.record(loc)) trial_new = true;
  });

  ex.boot();
  Executor::Checkpoint post_boot = ex.checkpoint();

  // Dry run: pristine replays. Any fault seen here is environment noise and
  // lands in the ignore set instead of the findings.
  CrashStore store(cfg.fingerprint_depth);
  std::vector<std::vector<int>> seed_statuses;
  for (const SeedInteraction& seed : seeds) {
    ex.restore(post_boot);
    std::vector<int> statuses;
    std::vector<CrashRecord> crashes;
    for (const Region& r : seed.regions) {
      SimResponse resp = ex.handle_request(r.bytes);
      statuses.push_back(resp.status);
      crashes.insert(crashes.end(), resp.crashes.begin(), resp.crashes.end());
    }
    store.dry_run_collect(crashes);
    seed_statuses.push_back(std::move(statuses));
  }
  res.ignored_fingerprints = store.ignored().size();

  if (cfg.mode == "taint-guided") {
    PcOwnership ownership;
    for (SeedInteraction& seed : seeds) {
      SeedAnalysis a = analyze_interaction(sc, seed, ownership, cfg.trie, cfg.annotate);
      res.precision.add(a.seed, a.oracle);
      seed = std::move(a.seed);
    }
    PcOwnership ownership_min;
    for (const SeedInteraction& seed : seeds) {
      if (seed.hints.empty()) continue;
      std::vector<uint32_t> kept = minimize_sequence(seed, seed.hints.front());
      SeedInteraction mini;
      mini.id = seed.id + "+min";
      for (uint32_t idx : kept)
        if (idx < seed.regions.size()) mini.regions.push_back(seed.regions[idx]);
      for (size_t i = 0; i < mini.regions.size(); ++i)
        mini.regions[i].index = uint32_t(i);
      SeedAnalysis m = analyze_interaction(sc, mini, ownership_min, cfg.trie, cfg.annotate);
      res.precision_min.add(m.seed, m.oracle);
    }
  }

  std::vector<QueueEntry> queue;
  for (size_t i = 0; i < seeds.size(); ++i) {
    QueueEntry e;
    char idbuf[16];
    snprintf(idbuf, sizeof idbuf, "id_%06zu", queue.size());
    e.id = idbuf;
    e.seed = std::move(seeds[i]);
    e.origin = "initial";
    e.server_state_key = state_key(seed_statuses[i]);
    res.hints_total += e.seed.hints.size();
    queue.push_back(std::move(e));
  }

  Scheduler sched(cfg.mode);
  // The long token is a taint-stage artifact (lifted from annotated length
  // checks), so only taint-guided havoc splices it; the baselines and the
  // state-aware slots mutate without a dictionary.
  HavocConfig tg_havoc;
  tg_havoc.dict_token.assign(1260, uint8_t('A'));
  HavocConfig plain_havoc;
  uint64_t execs = 0;
  uint64_t fuzz_steps = 0;

  while (execs < cfg.exec_budget) {
    MutationPlan plan = sched.schedule_next(queue, rng);
    PlanRunner runner(ex, post_boot, cfg.step_budget);
    uint64_t trials = std::min<uint64_t>(cfg.slot_len, cfg.exec_budget - execs);

    for (uint64_t t = 0; t < trials; ++t) {
      const QueueEntry& base = queue[plan.base_index];

      MutationRecord rec;
      rec.strategy = plan.strategy;
      rec.base_id = base.id;
      rec.target_region = plan.target_region;
      rec.kept_regions = plan.kept_regions;

      trial_new = false;
      TestcaseResult tr;
      if (plan.strategy == Strategy::TaintGuided) {
        const TaintHint& h = *plan.hint;
        const Bytes& bb = base.seed.regions[h.region].bytes;
        size_t off = std::min<size_t>(h.offset, bb.size());
        size_t len = std::min<size_t>(h.len, bb.size() - off);
        rec.windowed = true;
        rec.win_off = uint32_t(off);
        rec.win_len = uint32_t(len);
        if (auto flip = bitflip_edit(plan.start_trial + t, len))
          rec.edits = {*flip};
        else
          rec.edits = havoc_taint_guided(rng, len, tg_havoc);
        Bytes mutated = splice_window(bb, off, len, rec.edits);
        tr = runner.run_target_trial(base.seed.regions, plan, mutated);
      } else if (cfg.mode == "stateless") {
        rec.edits = havoc_taint_guided(
            rng, base.seed.regions[plan.target_region].bytes.size(), plain_havoc);
        tr = runner.run_sequence_trial(apply_record(base.seed.regions, rec));
      } else {
        SeqHavoc h =
            havoc_state_aware(rng, base.seed.regions, plan.target_region, plain_havoc);
        rec.edits = std::move(h.edits);
        rec.seq_edits = std::move(h.seq_edits);
        if (rec.seq_edits.empty()) {
          Bytes mutated =
              apply_edits(base.seed.regions[plan.target_region].bytes, rec.edits);
          tr = runner.run_target_trial(base.seed.regions, plan, mutated);
        } else {
          tr = runner.run_sequence_trial(apply_record(base.seed.regions, rec));
        }
      }
      ++execs;
      fuzz_steps += tr.steps;

      for (const CrashRecord& cr : tr.crashes) {
        CrashFingerprint fp = make_fingerprint(cr, cfg.fingerprint_depth);
        switch (store.dedup_insert(fp)) {
          case CrashStore::Insert::Ignored:
            ++res.ignored_hits;
            break;
          case CrashStore::Insert::Duplicate:
            ++res.duplicate_hits;
            break;
          case CrashStore::Insert::New: {
            BugReport br;
            br.fingerprint = fp;
            br.strategy = cfg.mode == "taint-guided"
                              ? (plan.strategy == Strategy::TaintGuided ? "taint-guided"
                                                                        : "state-aware")
                              : cfg.mode;
            br.exec = execs;
            br.step = fuzz_steps;
            br.lineage = base.lineage;
            br.lineage.push_back(rec);
            br.causality = causality_score(br.lineage);
            br.input = minimize_crash(ex, post_boot, apply_record(base.seed.regions, rec),
                                      fp, cfg.fingerprint_depth);
            br.request_count = br.input.size();
            br.category = classify_bug(br.request_count, cr.process, sc);
            res.bugs.push_back(std::move(br));
            break;
          }
        }
      }

      if (!tr.timed_out && tr.crashes.empty() && trial_new) {
        Lineage lin = base.lineage;
        lin.push_back(rec);
        std::vector<Region> units = apply_record(base.seed.regions, rec);
        std::string parent = base.id;
        enqueue_entry(queue, std::move(units), parent, state_key(tr.statuses),
                      std::move(lin));
      }
    }

    if (plan.strategy == Strategy::TaintGuided)
      queue[plan.base_index].hint_trials[plan.hint_index] += trials;
  }

  res.execs = execs;
  res.steps = fuzz_steps;
  res.queue_size = queue.size();

  if (!cfg.out_dir.empty()) write_outputs(cfg, res, queue);
  return res;
}

}  // namespace tgf
