#include "tgf/engine.hpp"

#include <algorithm>
#include <sstream>

namespace tgf {

double causality_score(const Lineage& lineage) {
  for (const MutationRecord& m : lineage)
    if (m.strategy == Strategy::TaintGuided) return 1.0;
  return 0.0;
}

Bytes apply_edits(Bytes s, const std::vector<Edit>& edits) {
  for (const Edit& e : edits) {
    switch (e.op) {
      case Edit::Op::FlipBits:
        for (uint64_t k = 0; k < e.b; ++k) {
          uint64_t bit = e.a + k;
          if (bit / 8 < s.size()) s[bit / 8] ^= uint8_t(1u << (bit % 8));
        }
        break;
      case Edit::Op::Overwrite:
        for (size_t i = 0; i < e.data.size() && e.a + i < s.size(); ++i)
          s[e.a + i] = e.data[i];
        break;
      case Edit::Op::ArithAdd:
        if (e.a < s.size()) s[e.a] = uint8_t(s[e.a] + e.b);
        break;
      case Edit::Op::ArithSub:
        if (e.a < s.size()) s[e.a] = uint8_t(s[e.a] - e.b);
        break;
      case Edit::Op::CopyBlock: {
        if (e.a >= s.size() || e.b >= s.size()) break;
        uint64_t len = std::min({e.c, s.size() - e.a, s.size() - e.b});
        Bytes tmp(s.begin() + e.a, s.begin() + e.a + len);
        std::copy(tmp.begin(), tmp.end(), s.begin() + e.b);
        break;
      }
      case Edit::Op::Insert: {
        size_t pos = std::min<size_t>(e.a, s.size());
        s.insert(s.begin() + pos, e.data.begin(), e.data.end());
        break;
      }
      case Edit::Op::Delete: {
        if (e.a >= s.size()) break;
        uint64_t len = std::min<uint64_t>(e.b, s.size() - e.a);
        s.erase(s.begin() + e.a, s.begin() + e.a + len);
        break;
      }
      case Edit::Op::ReplaceAll:
        s = e.data;
        break;
    }
  }
  return s;
}

std::vector<Region> apply_record(const std::vector<Region>& base,
                                 const MutationRecord& rec) {
  std::vector<Region> out;
  if (rec.kept_regions.empty()) {
    out = base;
  } else {
    for (uint32_t idx : rec.kept_regions) {
      if (idx >= base.size()) throw Error("apply_record: kept region out of range");
      out.push_back(base[idx]);
    }
  }

  auto target = std::find_if(out.begin(), out.end(), [&](const Region& r) {
    return r.index == rec.target_region;
  });
  if (target == out.end()) throw Error("apply_record: target region not kept");

  Bytes& bytes = target->bytes;
  size_t off = 0, len = bytes.size();
  if (rec.windowed) {
    off = std::min<size_t>(rec.win_off, bytes.size());
    len = std::min<size_t>(rec.win_len, bytes.size() - off);
  }
  Bytes slice(bytes.begin() + off, bytes.begin() + off + len);
  slice = apply_edits(std::move(slice), rec.edits);
  Bytes rebuilt(bytes.begin(), bytes.begin() + off);
  rebuilt.insert(rebuilt.end(), slice.begin(), slice.end());
  rebuilt.insert(rebuilt.end(), bytes.begin() + off + len, bytes.end());
  bytes = std::move(rebuilt);

  for (const SeqEdit& se : rec.seq_edits) {
    size_t n = out.size();
    switch (se.op) {
      case SeqEdit::Op::Replace:
        if (n) out[std::min<size_t>(se.at, n - 1)] = out[std::min<size_t>(se.src, n - 1)];
        break;
      case SeqEdit::Op::Insert:
        if (n) {
          Region copy = out[std::min<size_t>(se.src, n - 1)];
          out.insert(out.begin() + std::min<size_t>(se.at, n), std::move(copy));
        }
        break;
      case SeqEdit::Op::Duplicate:
        if (n) {
          size_t at = std::min<size_t>(se.at, n - 1);
          out.insert(out.begin() + at + 1, out[at]);
        }
        break;
      case SeqEdit::Op::Delete:
        if (n > 1) out.erase(out.begin() + std::min<size_t>(se.at, n - 1));
        break;
    }
  }

  for (size_t i = 0; i < out.size(); ++i) out[i].index = static_cast<uint32_t>(i);
  return out;
}

std::optional<Edit> bitflip_edit(size_t trial, size_t window_len) {
  size_t nbits = window_len * 8;
  if (nbits == 0) return std::nullopt;
  if (trial < nbits) return Edit{Edit::Op::FlipBits, trial, 1, 0, {}};
  trial -= nbits;
  if (nbits >= 2 && trial < nbits - 1) return Edit{Edit::Op::FlipBits, trial, 2, 0, {}};
  if (nbits >= 2) trial -= nbits - 1;
  if (nbits >= 4 && trial < nbits - 3) return Edit{Edit::Op::FlipBits, trial, 4, 0, {}};
  return std::nullopt;
}

namespace {

Bytes random_bytes(std::mt19937_64& rng, size_t n) {
  Bytes out(n);
  for (size_t i = 0; i < n; ++i) out[i] = uint8_t(rnd_below(rng, 256));
  return out;
}

// Emits one byte-level edit of the given kind against a slice of cur_len
// bytes, updating cur_len for length-changing ops. Kinds 6/7 splice the
// dictionary token; an empty slice degrades everything to an insert.
Edit byte_edit(std::mt19937_64& rng, int kind, size_t& cur_len, const HavocConfig& cfg) {
  if (cfg.dict_token.empty() && (kind == 6 || kind == 7)) kind = kind == 6 ? 4 : 0;
  if (cur_len == 0 && kind != 6) kind = 4;
  Edit e;
  switch (kind) {
    case 0:
      e = {Edit::Op::Overwrite, rnd_below(rng, cur_len), 0, 0, random_bytes(rng, 1)};
      break;
    case 1:
      e = {Edit::Op::ArithAdd, rnd_below(rng, cur_len), 1 + rnd_below(rng, 35), 0, {}};
      break;
    case 2:
      e = {Edit::Op::ArithSub, rnd_below(rng, cur_len), 1 + rnd_below(rng, 35), 0, {}};
      break;
    case 3: {
      uint64_t len = 1 + rnd_below(rng, std::min<size_t>(16, cur_len));
      e = {Edit::Op::CopyBlock, rnd_below(rng, cur_len - len + 1),
           rnd_below(rng, cur_len - len + 1), len, {}};
      break;
    }
    case 4: {
      size_t len = 1 + rnd_below(rng, 16);
      e = {Edit::Op::Insert, rnd_below(rng, cur_len + 1), 0, 0, random_bytes(rng, len)};
      cur_len += len;
      break;
    }
    case 5: {
      uint64_t len = 1 + rnd_below(rng, std::min<size_t>(16, cur_len));
      e = {Edit::Op::Delete, rnd_below(rng, cur_len - len + 1), len, 0, {}};
      cur_len -= len;
      break;
    }
    case 6:
      e = {Edit::Op::Insert, rnd_below(rng, cur_len + 1), 0, 0, cfg.dict_token};
      cur_len += cfg.dict_token.size();
      break;
    case 7:
      e = {Edit::Op::Overwrite, rnd_below(rng, cur_len), 0, 0, cfg.dict_token};
      break;
    default:
      throw Error("byte_edit: bad kind");
  }
  return e;
}

}  // namespace

std::vector<Edit> havoc_taint_guided(std::mt19937_64& rng, size_t slice_len,
                                     const HavocConfig& cfg) {
  std::vector<Edit> edits;
  size_t cur_len = slice_len;
  size_t ops = 1 + rnd_below(rng, cfg.max_stack);
  for (size_t i = 0; i < ops; ++i) {
    int kind = int(rnd_below(rng, 8));
    size_t rep = 1 + rnd_below(rng, cfg.max_rep);
    for (size_t k = 0; k < rep; ++k) edits.push_back(byte_edit(rng, kind, cur_len, cfg));
  }
  return edits;
}

SeqHavoc havoc_state_aware(std::mt19937_64& rng, const std::vector<Region>& regions,
                           uint32_t target, const HavocConfig& cfg) {
  SeqHavoc out;
  size_t cur_len = regions[target].bytes.size();
  size_t nregions = regions.size();
  size_t ops = 1 + rnd_below(rng, cfg.max_stack);
  for (size_t i = 0; i < ops; ++i) {
    int kind = int(rnd_below(rng, 13));
    size_t rep = 1 + rnd_below(rng, cfg.max_rep);
    for (size_t k = 0; k < rep; ++k) {
      if (kind < 8) {
        out.edits.push_back(byte_edit(rng, kind, cur_len, cfg));
        continue;
      }
      if (kind == 8) {
        const Bytes& src = regions[rnd_below(rng, regions.size())].bytes;
        out.edits.push_back({Edit::Op::ReplaceAll, 0, 0, 0, src});
        cur_len = src.size();
        continue;
      }
      SeqEdit se;
      if (kind == 9) {
        se = {SeqEdit::Op::Replace, uint32_t(rnd_below(rng, nregions)),
              uint32_t(rnd_below(rng, nregions))};
      } else if (kind == 10) {
        se = {SeqEdit::Op::Insert, uint32_t(rnd_below(rng, nregions + 1)),
              uint32_t(rnd_below(rng, nregions))};
        ++nregions;
      } else if (kind == 11) {
        se = {SeqEdit::Op::Duplicate, uint32_t(rnd_below(rng, nregions)), 0};
        ++nregions;
      } else {
        if (nregions <= 1) continue;
        se = {SeqEdit::Op::Delete, uint32_t(rnd_below(rng, nregions)), 0};
        --nregions;
      }
      out.seq_edits.push_back(se);
    }
  }
  return out;
}

std::vector<uint32_t> MutationPlan::prefix() const {
  std::vector<uint32_t> out;
  for (uint32_t r : kept_regions) {
    if (r == target_region) break;
    out.push_back(r);
  }
  return out;
}

std::vector<uint32_t> MutationPlan::suffix() const {
  std::vector<uint32_t> out;
  bool past = false;
  for (uint32_t r : kept_regions) {
    if (past) out.push_back(r);
    if (r == target_region) past = true;
  }
  return out;
}

std::vector<uint32_t> minimize_sequence(const SeedInteraction& seed,
                                        const TaintHint& hint) {
  std::set<uint32_t> kept{hint.region};
  kept.insert(hint.deps.begin(), hint.deps.end());
  bool grew = true;
  while (grew) {
    grew = false;
    for (uint32_t r : std::set<uint32_t>(kept)) {
      auto it = seed.region_deps.find(r);
      if (it == seed.region_deps.end()) continue;
      for (const auto& [writer, files] : it->second)
        if (kept.insert(writer).second) grew = true;
    }
  }
  return {kept.begin(), kept.end()};
}

MutationPlan Scheduler::schedule_next(std::vector<QueueEntry>& queue,
                                      std::mt19937_64& rng) {
  if (queue.empty()) throw Error("schedule_next: empty queue");
  bool want_tg = mode_ == "taint-guided" && slot_ % 2 == 0;
  ++slot_;

  if (want_tg) {
    std::vector<size_t> eligible;
    for (size_t i = 0; i < queue.size(); ++i)
      if (queue[i].origin == "initial" && !queue[i].seed.hints.empty())
        eligible.push_back(i);
    if (!eligible.empty()) {
      size_t qi = eligible[tg_rr_++ % eligible.size()];
      QueueEntry& entry = queue[qi];
      size_t hint_index = entry.hint_cursor % entry.seed.hints.size();
      const TaintHint& hint = entry.seed.hints[hint_index];
      ++entry.hint_cursor;
      MutationPlan plan;
      plan.strategy = Strategy::TaintGuided;
      plan.base_index = qi;
      plan.target_region = hint.region;
      plan.hint = hint;
      plan.hint_index = hint_index;
      auto done = entry.hint_trials.find(hint_index);
      if (done != entry.hint_trials.end()) plan.start_trial = done->second;
      plan.kept_regions = minimize_sequence(entry.seed, hint);
      return plan;
    }
    // No hints anywhere: this slot degrades to state-aware.
  }

  MutationPlan plan;
  plan.strategy = Strategy::StateAware;
  size_t qi = 0;
  if (mode_ == "stateless") {
    qi = rnd_below(rng, queue.size());
  } else {
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < queue.size(); ++i)
      groups[queue[i].server_state_key].push_back(i);
    auto git = groups.begin();
    std::advance(git, group_rr_++ % groups.size());
    qi = git->second[rnd_below(rng, git->second.size())];
  }
  plan.base_index = qi;
  const QueueEntry& entry = queue[qi];
  plan.target_region = uint32_t(rnd_below(rng, entry.seed.regions.size()));
  for (uint32_t i = 0; i < entry.seed.regions.size(); ++i)
    plan.kept_regions.push_back(i);
  return plan;
}

std::string state_key(const std::vector<int>& statuses) {
  std::string out;
  for (size_t i = 0; i < statuses.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(statuses[i]);
  }
  return out;
}

PlanRunner::PlanRunner(Executor& ex, const Executor::Checkpoint& first_stage,
                       uint64_t step_budget)
    : ex_(ex), first_stage_(first_stage), step_budget_(step_budget) {}

TestcaseResult PlanRunner::run_target_trial(const std::vector<Region>& base_regions,
                                            const MutationPlan& plan,
                                            const Bytes& mutated_target) {
  TestcaseResult res;
  uint64_t start = ex_.steps();
  auto over_budget = [&] { return ex_.steps() - start > step_budget_; };

  if (!second_stage_) {
    ex_.restore(first_stage_);
    for (uint32_t idx : plan.prefix()) {
      SimResponse r = ex_.handle_request(base_regions[idx].bytes);
      prefix_statuses_.push_back(r.status);
      prefix_crashes_.insert(prefix_crashes_.end(), r.crashes.begin(), r.crashes.end());
      if (over_budget()) {
        res.timed_out = true;
        res.steps = ex_.steps() - start;
        return res;
      }
    }
    second_stage_ = ex_.checkpoint();
  } else {
    ex_.restore(*second_stage_);
  }
  res.statuses = prefix_statuses_;
  res.crashes = prefix_crashes_;

  SimResponse r = ex_.handle_request(mutated_target);
  res.statuses.push_back(r.status);
  res.crashes.insert(res.crashes.end(), r.crashes.begin(), r.crashes.end());
  for (uint32_t idx : plan.suffix()) {
    if (over_budget()) {
      res.timed_out = true;
      break;
    }
    SimResponse sr = ex_.handle_request(base_regions[idx].bytes);
    res.statuses.push_back(sr.status);
    res.crashes.insert(res.crashes.end(), sr.crashes.begin(), sr.crashes.end());
  }
  if (over_budget()) res.timed_out = true;
  res.steps = ex_.steps() - start;
  return res;
}

TestcaseResult PlanRunner::run_sequence_trial(const std::vector<Region>& units) {
  TestcaseResult res;
  uint64_t start = ex_.steps();
  ex_.restore(first_stage_);
  for (const Region& u : units) {
    SimResponse r = ex_.handle_request(u.bytes);
    res.statuses.push_back(r.status);
    res.crashes.insert(res.crashes.end(), r.crashes.begin(), r.crashes.end());
    if (ex_.steps() - start > step_budget_) {
      res.timed_out = true;
      break;
    }
  }
  res.steps = ex_.steps() - start;
  return res;
}

std::string enqueue_entry(std::vector<QueueEntry>& queue, std::vector<Region> regions,
                          const std::string& origin, const std::string& key,
                          Lineage lineage) {
  QueueEntry e;
  char idbuf[16];
  snprintf(idbuf, sizeof idbuf, "id_%06zu", queue.size());
  e.id = idbuf;
  e.seed.id = e.id;
  for (size_t i = 0; i < regions.size(); ++i)
    regions[i].index = static_cast<uint32_t>(i);
  e.seed.regions = std::move(regions);
  e.origin = origin;
  e.server_state_key = key;
  e.lineage = std::move(lineage);
  queue.push_back(std::move(e));
  return queue.back().id;
}

namespace {

std::string hex_bytes(const Bytes& b) {
  std::string out;
  for (uint8_t v : b) out += hex_byte(v);
  return out;
}

Bytes unhex_bytes(const std::string& s) {
  if (s.size() % 2) throw Error("bad hex blob");
  Bytes out(s.size() / 2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<uint8_t>(parse_hex(s.substr(i * 2, 2)));
  return out;
}

const char* edit_name(Edit::Op op) {
  switch (op) {
    case Edit::Op::FlipBits: return "flip";
    case Edit::Op::Overwrite: return "ovw";
    case Edit::Op::ArithAdd: return "add";
    case Edit::Op::ArithSub: return "sub";
    case Edit::Op::CopyBlock: return "cpy";
    case Edit::Op::Insert: return "ins";
    case Edit::Op::Delete: return "del";
    case Edit::Op::ReplaceAll: return "rga";
  }
  return "?";
}

Edit::Op edit_op(const std::string& name) {
  if (name == "flip") return Edit::Op::FlipBits;
  if (name == "ovw") return Edit::Op::Overwrite;
  if (name == "add") return Edit::Op::ArithAdd;
  if (name == "sub") return Edit::Op::ArithSub;
  if (name == "cpy") return Edit::Op::CopyBlock;
  if (name == "ins") return Edit::Op::Insert;
  if (name == "del") return Edit::Op::Delete;
  if (name == "rga") return Edit::Op::ReplaceAll;
  throw Error("bad edit op " + name);
}

const char* seq_name(SeqEdit::Op op) {
  switch (op) {
    case SeqEdit::Op::Replace: return "rep";
    case SeqEdit::Op::Insert: return "ins";
    case SeqEdit::Op::Duplicate: return "dup";
    case SeqEdit::Op::Delete: return "del";
  }
  return "?";
}

SeqEdit::Op seq_op(const std::string& name) {
  if (name == "rep") return SeqEdit::Op::Replace;
  if (name == "ins") return SeqEdit::Op::Insert;
  if (name == "dup") return SeqEdit::Op::Duplicate;
  if (name == "del") return SeqEdit::Op::Delete;
  throw Error("bad seq op " + name);
}

std::string field(const std::vector<std::string>& toks, const std::string& key) {
  for (const std::string& t : toks)
    if (t.rfind(key + "=", 0) == 0) return t.substr(key.size() + 1);
  throw Error("lineage: missing field " + key);
}

bool has_field(const std::vector<std::string>& toks, const std::string& key) {
  for (const std::string& t : toks)
    if (t.rfind(key + "=", 0) == 0) return true;
  return false;
}

}  // namespace

std::string serialize_lineage(const Lineage& lineage) {
  std::ostringstream out;
  for (const MutationRecord& m : lineage) {
    out << "mut strategy="
        << (m.strategy == Strategy::TaintGuided ? "taint-guided" : "state-aware")
        << " base=" << m.base_id << " target=" << m.target_region << " window=";
    if (m.windowed)
      out << m.win_off << '+' << m.win_len;
    else
      out << '-';
    out << " kept=";
    if (m.kept_regions.empty()) {
      out << '-';
    } else {
      for (size_t i = 0; i < m.kept_regions.size(); ++i)
        out << (i ? "," : "") << m.kept_regions[i];
    }
    out << '\n';
    for (const Edit& e : m.edits) {
      out << "edit " << edit_name(e.op) << " a=" << e.a << " b=" << e.b << " c=" << e.c;
      if (!e.data.empty()) out << " data=" << hex_bytes(e.data);
      out << '\n';
    }
    for (const SeqEdit& se : m.seq_edits)
      out << "seq " << seq_name(se.op) << " at=" << se.at << " src=" << se.src << '\n';
    out << "end\n";
  }
  return out.str();
}

Lineage parse_lineage(const std::string& text) {
  Lineage out;
  std::istringstream in(text);
  std::string line;
  MutationRecord cur;
  bool open = false;
  while (std::getline(in, line)) {
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "mut") {
      if (open) throw Error("lineage: unterminated record");
      cur = MutationRecord{};
      open = true;
      std::string strat = field(toks, "strategy");
      if (strat == "taint-guided")
        cur.strategy = Strategy::TaintGuided;
      else if (strat == "state-aware")
        cur.strategy = Strategy::StateAware;
      else
        throw Error("lineage: bad strategy " + strat);
      cur.base_id = field(toks, "base");
      cur.target_region = uint32_t(parse_u64(field(toks, "target")));
      std::string win = field(toks, "window");
      if (win != "-") {
        size_t plus = win.find('+');
        if (plus == std::string::npos) throw Error("lineage: bad window " + win);
        cur.windowed = true;
        cur.win_off = uint32_t(parse_u64(win.substr(0, plus)));
        cur.win_len = uint32_t(parse_u64(win.substr(plus + 1)));
      }
      std::string kept = field(toks, "kept");
      if (kept != "-") {
        size_t pos = 0;
        while (pos < kept.size()) {
          size_t comma = kept.find(',', pos);
          size_t end = comma == std::string::npos ? kept.size() : comma;
          cur.kept_regions.push_back(uint32_t(parse_u64(kept.substr(pos, end - pos))));
          if (comma == std::string::npos) break;
          pos = comma + 1;
        }
      }
    } else if (toks[0] == "edit") {
      if (!open || toks.size() < 2) throw Error("lineage: stray edit");
      Edit e;
      e.op = edit_op(toks[1]);
      e.a = parse_u64(field(toks, "a"));
      e.b = parse_u64(field(toks, "b"));
      e.c = parse_u64(field(toks, "c"));
      if (has_field(toks, "data")) e.data = unhex_bytes(field(toks, "data"));
      cur.edits.push_back(std::move(e));
    } else if (toks[0] == "seq") {
      if (!open || toks.size() < 2) throw Error("lineage: stray seq edit");
      SeqEdit se;
      se.op = seq_op(toks[1]);
      se.at = uint32_t(parse_u64(field(toks, "at")));
      se.src = uint32_t(parse_u64(field(toks, "src")));
      cur.seq_edits.push_back(se);
    } else if (toks[0] == "end") {
      if (!open) throw Error("lineage: stray end");
      out.push_back(std::move(cur));
      open = false;
    } else {
      throw Error("lineage: unknown line " + toks[0]);
    }
  }
  if (open) throw Error("lineage: unterminated record");
  return out;
}

}  // namespace tgf
