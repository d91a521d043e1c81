#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tgf/campaign.hpp"
#include "tgf/corpus.hpp"
#include "tgf/depfilter.hpp"
#include "tgf/trace.hpp"

namespace fs = std::filesystem;
using namespace tgf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Bytes slurp_bytes(const std::string& path) {
  std::string s = slurp(path);
  return Bytes(s.begin(), s.end());
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

int cmd_convert(const std::string& scn_path, const std::string& out_dir,
                bool keep_static) {
  Scenario sc = Scenario::load(scn_path);
  fs::create_directories(out_dir);
  for (const SeedSpec& spec : sc.seeds) {
    SeedInteraction seed = build_seed(sc, spec.id);
    if (!keep_static) {
      seed.regions = filter_static_requests(seed.regions);
      if (seed.regions.empty()) {
        std::cout << "seed " << spec.id << ": all requests static, skipped\n";
        continue;
      }
    }
    Bytes blob = serialize_seed(seed);
    std::string path = (fs::path(out_dir) / (spec.id + ".bin")).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(blob.data()), std::streamsize(blob.size()));
    std::cout << "seed " << spec.id << ": " << seed.regions.size() << " requests, "
              << blob.size() << " bytes -> " << path << "\n";
  }
  return 0;
}

int cmd_analyze(const std::string& scn_path, const std::string& seed_id,
                const std::string& hints_out, const std::string& trace_out) {
  Scenario sc = Scenario::load(scn_path);
  TrieBuildConfig tcfg;
  AnnotateConfig acfg;
  PcOwnership ownership;
  std::string hints_text;

  for (const SeedSpec& spec : sc.seeds) {
    if (!seed_id.empty() && spec.id != seed_id) continue;
    SeedInteraction input = build_seed(sc, spec.id);
    SeedAnalysis a = analyze_interaction(sc, input, ownership, tcfg, acfg);

    size_t annotated = 0, total = 0;
    for (const auto& row : a.seed.annotated_bytes) {
      total += row.size();
      for (const ByteAnnotation& b : row) annotated += b.empty() ? 0 : 1;
    }
    std::cout << "seed " << spec.id << ": regions=" << a.seed.regions.size()
              << " annotated=" << annotated << "/" << total
              << " hints=" << a.seed.hints.size() << " deps=" << a.seed.region_deps.size()
              << " trie_len=" << a.trie_max_len << " orphans=" << a.orphan_events
              << "\n";
    for (const TaintHint& h : a.seed.hints)
      hints_text += serialize_hint(spec.id, h) + "\n";

    if (!trace_out.empty()) {
      Executor ex(sc);
      SessionParser session;
      std::vector<RawEvent> events;
      ex.set_recording({&events, &session, nullptr});
      ex.boot();
      for (const Region& r : input.regions) ex.handle_request(r.bytes);
      session.finish();
      SeedTrace trace = attribute_events(events, session.windows());
      spit(trace_out + "." + spec.id, serialize_trace(trace));
    }
  }
  if (hints_out.empty())
    std::cout << hints_text;
  else
    spit(hints_out, hints_text);
  return 0;
}

int cmd_fuzz(const CampaignConfig& cfg) {
  CampaignResult res = run_campaign(cfg);
  std::cout << "[tgfuzz] scenario " << res.scenario << " mode " << res.mode
            << " rng_seed " << res.rng_seed << "\n";
  for (const BugReport& b : res.bugs)
    std::cout << "[tgfuzz] " << render_bug_line(b) << "\n";
  std::cout << "[tgfuzz] done: execs=" << res.execs << " steps=" << res.steps
            << " bugs=" << res.bugs.size() << " queue=" << res.queue_size
            << " ignored_hits=" << res.ignored_hits << "\n";
  if (!cfg.out_dir.empty())
    std::cout << "[tgfuzz] results in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_triage(const std::string& scn_path, const std::string& crash_dir, bool force) {
  Scenario sc = Scenario::load(scn_path);
  fs::path dir = crash_dir;
  std::vector<Region> units = unpack_units(slurp_bytes((dir / "input.bin").string()));

  Lineage lineage;
  bool lineage_ok = true;
  try {
    lineage = parse_lineage(slurp((dir / "lineage.txt").string()));
  } catch (const Error& e) {
    lineage_ok = false;
    if (!force) throw Error(std::string("unreadable lineage (use --force): ") + e.what());
    std::cout << "lineage unreadable, replaying anyway: " << e.what() << "\n";
  }

  Executor ex(sc);
  ex.boot();
  std::vector<CrashRecord> crashes;
  for (const Region& u : units) {
    SimResponse r = ex.handle_request(u.bytes);
    crashes.insert(crashes.end(), r.crashes.begin(), r.crashes.end());
  }

  std::string want = dir.filename().string();
  bool reproduced = false;
  size_t idx = 0;
  for (const CrashRecord& cr : crashes) {
    CrashFingerprint fp = make_fingerprint(cr, 5);
    std::cout << render_fingerprint(fp, idx++);
    std::cout << "category: " << classify_bug(units.size(), cr.process, sc) << "\n";
    if (fp.key() == want) reproduced = true;
  }
  std::cout << "requests: " << units.size() << "\n";
  if (lineage_ok) {
    char cbuf[16];
    snprintf(cbuf, sizeof cbuf, "%.1f", causality_score(lineage));
    std::cout << "lineage: " << lineage.size() << " steps, causality " << cbuf << "\n";
  }
  std::cout << "reproduced: " << (reproduced ? "yes" : "no") << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs) {
  size_t bugs_total = 0;
  std::map<std::string, size_t> by_category;
  for (const std::string& run : run_dirs) {
    std::string stats = slurp((fs::path(run) / "stats.txt").string());
    std::string scenario, mode, execs;
    std::istringstream in(stats);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("scenario: ", 0) == 0) scenario = line.substr(10);
      if (line.rfind("mode: ", 0) == 0) mode = line.substr(6);
      if (line.rfind("execs: ", 0) == 0) execs = line.substr(7);
    }
    std::string bugs = slurp((fs::path(run) / "bugs.txt").string());
    size_t nbugs = 0;
    std::istringstream bin(bugs);
    std::string bline;
    std::string detail;
    while (std::getline(bin, bline)) {
      if (bline.empty()) continue;
      ++nbugs;
      detail += "  " + bline + "\n";
      for (const std::string& tok : split_ws(bline))
        if (tok.rfind("category=", 0) == 0) ++by_category[tok.substr(9)];
    }
    bugs_total += nbugs;
    std::cout << "run " << run << ": scenario=" << scenario << " mode=" << mode
              << " execs=" << execs << " bugs=" << nbugs << "\n"
              << detail;
  }
  std::cout << "total: runs=" << run_dirs.size() << " bugs=" << bugs_total;
  for (const auto& [cat, n] : by_category) std::cout << " " << cat << "=" << n;
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"session-aware taint-guided fuzzer for simulated firmware targets"};
  app.require_subcommand(1);

  auto* convert = app.add_subcommand("convert", "write scenario seeds as corpus files");
  std::string cv_scn, cv_out;
  bool cv_keep_static = false;
  convert->add_option("--scenario", cv_scn, "scenario file")->required();
  convert->add_option("--out", cv_out, "corpus directory")->required();
  convert->add_flag("--keep-static", cv_keep_static, "keep static-resource GETs");

  auto* analyze = app.add_subcommand("analyze", "annotate seeds and extract hints");
  std::string an_scn, an_seed, an_hints, an_trace;
  analyze->add_option("--scenario", an_scn, "scenario file")->required();
  analyze->add_option("--seed", an_seed, "analyze only this seed id");
  analyze->add_option("--hints-out", an_hints, "write hint lines here (default stdout)");
  analyze->add_option("--trace-out", an_trace, "dump attributed traces to this prefix");

  auto* fuzz = app.add_subcommand("fuzz", "run a fuzzing campaign");
  std::string fz_config, fz_scn, fz_out, fz_mode;
  uint64_t fz_execs = 0, fz_rng = 0;
  std::vector<std::string> fz_sets;
  fuzz->add_option("--config", fz_config, "key=value config file");
  fuzz->add_option("--scenario", fz_scn, "scenario file");
  fuzz->add_option("--out", fz_out, "output directory");
  fuzz->add_option("--mode", fz_mode, "taint-guided | state-aware | stateless");
  auto* fz_execs_opt = fuzz->add_option("--execs", fz_execs, "trial budget");
  auto* fz_rng_opt = fuzz->add_option("--rng-seed", fz_rng, "campaign rng seed");
  fuzz->add_option("--set", fz_sets, "extra key=value overrides")->take_all();

  auto* triage = app.add_subcommand("triage", "replay one crash directory");
  std::string tr_scn, tr_dir;
  bool tr_force = false;
  triage->add_option("--scenario", tr_scn, "scenario file")->required();
  triage->add_option("--crash-dir", tr_dir, "crashes/<key> directory")->required();
  triage->add_flag("--force", tr_force, "replay even with an unreadable lineage file");

  auto* report = app.add_subcommand("report", "summarize campaign output directories");
  std::vector<std::string> rp_dirs;
  report->add_option("dirs", rp_dirs, "campaign output directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (convert->parsed()) return cmd_convert(cv_scn, cv_out, cv_keep_static);
    if (analyze->parsed()) return cmd_analyze(an_scn, an_seed, an_hints, an_trace);
    if (fuzz->parsed()) {
      CampaignConfig cfg;
      if (!fz_config.empty()) cfg = CampaignConfig::load(fz_config);
      if (!fz_scn.empty()) cfg.apply_override("scenario=" + fz_scn);
      if (!fz_out.empty()) cfg.apply_override("out=" + fz_out);
      if (!fz_mode.empty()) cfg.apply_override("mode=" + fz_mode);
      if (fz_execs_opt->count()) cfg.exec_budget = fz_execs;
      if (fz_rng_opt->count()) cfg.rng_seed = fz_rng;
      for (const std::string& kv : fz_sets) cfg.apply_override(kv);
      if (cfg.scenario_path.empty()) throw Error("fuzz: no scenario configured");
      return cmd_fuzz(cfg);
    }
    if (triage->parsed()) return cmd_triage(tr_scn, tr_dir, tr_force);
    if (report->parsed()) return cmd_report(rp_dirs);
  } catch (const std::exception& e) {
    std::cerr << "tgfuzz: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
