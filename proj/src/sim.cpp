#include "tgf/sim.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tgf {

namespace {

// Scenario literals (template parts, response texts) may carry %xx escapes
// so that spaces survive the whitespace tokenizer. Request bytes are never
// decoded; this is for scenario authoring only.
std::string pct_decode(const std::string& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out.push_back(static_cast<char>(parse_hex(s.substr(i + 1, 2))));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

const char* reason_of(int code) {
  switch (code) {
    case 200: return "OK";
    case 302: return "Found";
    case 400: return "Bad Request";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 500: return "Internal Server Error";
    default: return "Status";
  }
}

struct LineCursor {
  std::vector<std::string> toks;
  size_t next = 1;  // toks[0] is the directive keyword
  size_t lineno = 0;

  std::string take(const char* what) {
    if (next >= toks.size())
      throw InvalidScenario("line " + std::to_string(lineno) + ": missing " +
                            std::string(what));
    return toks[next++];
  }
  bool accept(const std::string& kw) {
    if (next < toks.size() && toks[next] == kw) {
      ++next;
      return true;
    }
    return false;
  }
  void done() {
    if (next != toks.size())
      throw InvalidScenario("line " + std::to_string(lineno) + ": trailing tokens after " +
                            toks[0]);
  }
};

std::string opt_proc(LineCursor& c) {
  return c.accept("proc") ? c.take("process name") : std::string{};
}

}  // namespace

const ProcessSpec* Scenario::find_process(const std::string& name) const {
  for (const ProcessSpec& p : processes)
    if (p.name == name) return &p;
  return nullptr;
}

const Endpoint* Scenario::find_endpoint(const std::string& method,
                                        const std::string& path) const {
  for (const Endpoint& e : endpoints)
    if (e.method == method && e.path == path) return &e;
  return nullptr;
}

Scenario Scenario::parse(const std::string& text) {
  Scenario sc;
  Endpoint* ep = nullptr;
  SeedSpec* seed = nullptr;

  std::istringstream in(text);
  std::string raw;
  size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto toks = split_ws(raw);
    if (toks.empty() || toks[0][0] == '#') continue;
    LineCursor c{toks, 1, lineno};
    const std::string& kw = toks[0];

    if (kw == "scenario") {
      sc.name = c.take("name");
      c.done();
    } else if (kw == "service") {
      sc.service = c.take("process name");
      c.done();
    } else if (kw == "process") {
      ProcessSpec p;
      p.name = c.take("name");
      p.inode = parse_u64(c.take("inode"));
      if (c.accept("parent")) p.parent = c.take("parent name");
      c.done();
      sc.processes.push_back(std::move(p));
    } else if (kw == "init-fault") {
      InitFault f;
      if (!c.accept("proc")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                   ": init-fault needs proc");
      f.proc = c.take("process name");
      if (!c.accept("pcs")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                  ": init-fault needs pcs");
      while (c.next < c.toks.size()) f.pcs.push_back(parse_hex(c.take("pc")));
      if (f.pcs.empty())
        throw InvalidScenario("line " + std::to_string(lineno) + ": init-fault with no pcs");
      sc.init_fault = std::move(f);
    } else if (kw == "boot-read") {
      std::string file = c.take("file");
      if (!c.accept("proc")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                   ": boot-read needs proc");
      std::string proc = c.take("process name");
      c.done();
      sc.boot_reads.emplace_back(file, proc);
    } else if (kw == "endpoint") {
      Endpoint e;
      e.method = c.take("method");
      e.path = c.take("path");
      c.done();
      sc.endpoints.push_back(std::move(e));
      ep = &sc.endpoints.back();
      seed = nullptr;
    } else if (kw == "seed") {
      SeedSpec s;
      s.id = c.take("id");
      c.done();
      sc.seeds.push_back(std::move(s));
      seed = &sc.seeds.back();
      ep = nullptr;
    } else if (kw == "request") {
      if (!seed) throw InvalidScenario("line " + std::to_string(lineno) +
                                       ": request outside seed");
      SeedRequestSpec r;
      r.method = c.take("method");
      r.target = c.take("target");
      if (c.accept("body")) r.body = c.take("form body");
      c.done();
      seed->requests.push_back(std::move(r));
    } else if (ep) {
      Action a;
      if (kw == "proc") {
        ep->proc = c.take("process name");
        c.done();
        continue;
      } else if (kw == "check-param") {
        a.op = Action::Op::CheckParam;
        a.param = c.take("param");
      } else if (kw == "check-param-len") {
        a.op = Action::Op::CheckParamLen;
        a.param = c.take("param");
        a.n = parse_u64(c.take("length"));
      } else if (kw == "check-node") {
        a.op = Action::Op::CheckNode;
        a.path = c.take("node path");
      } else if (kw == "block") {
        a.op = Action::Op::Block;
        a.pc = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "block-if-param-len-gt") {
        a.op = Action::Op::BlockIfParamLen;
        a.param = c.take("param");
        a.n = parse_u64(c.take("length"));
        a.pc = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "flow") {
        a.op = Action::Op::Flow;
        a.param = c.take("param");
        if (!c.accept("load")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                     ": flow needs load pc");
        a.pc_load = parse_hex(c.take("pc"));
        if (!c.accept("store")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                      ": flow needs store pc");
        a.pc_store = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "node-write") {
        a.op = Action::Op::NodeWrite;
        a.path = c.take("node path");
        if (!c.accept("from-param"))
          throw InvalidScenario("line " + std::to_string(lineno) +
                                ": node-write needs from-param");
        a.param = c.take("param");
        if (!c.accept("store")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                      ": node-write needs store pc");
        a.pc = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "node-copy") {
        a.op = Action::Op::NodeCopy;
        a.path = c.take("dst node");
        if (!c.accept("from-node"))
          throw InvalidScenario("line " + std::to_string(lineno) +
                                ": node-copy needs from-node");
        a.src = c.take("src node");
        if (!c.accept("load")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                     ": node-copy needs load pc");
        a.pc_load = parse_hex(c.take("pc"));
        if (!c.accept("store")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                      ": node-copy needs store pc");
        a.pc_store = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "node-read") {
        a.op = Action::Op::NodeRead;
        a.path = c.take("node path");
        if (!c.accept("load")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                     ": node-read needs load pc");
        a.pc_load = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "node-template") {
        a.op = Action::Op::NodeTemplate;
        a.path = c.take("dst node");
        if (!c.accept("load")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                     ": node-template needs load pc");
        a.pc_load = parse_hex(c.take("pc"));
        if (!c.accept("store")) throw InvalidScenario("line " + std::to_string(lineno) +
                                                      ": node-template needs store pc");
        a.pc_store = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
        if (!c.accept("parts"))
          throw InvalidScenario("line " + std::to_string(lineno) +
                                ": node-template needs parts");
        while (c.next < c.toks.size()) {
          std::string part = c.take("part");
          if (part.rfind("lit:", 0) == 0)
            a.parts.emplace_back(false, pct_decode(part.substr(4)));
          else if (part.rfind("node:", 0) == 0)
            a.parts.emplace_back(true, part.substr(5));
          else
            throw InvalidScenario("line " + std::to_string(lineno) + ": bad part " + part);
        }
        if (a.parts.empty())
          throw InvalidScenario("line " + std::to_string(lineno) + ": empty template");
      } else if (kw == "crash-if-param-len-gt") {
        a.op = Action::Op::CrashIfParamLen;
        a.param = c.take("param");
        a.n = parse_u64(c.take("length"));
        a.pc = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "crash-if-node-len-gt") {
        a.op = Action::Op::CrashIfNodeLen;
        a.path = c.take("node path");
        a.n = parse_u64(c.take("length"));
        a.pc = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "crash-if-node-byte-at") {
        a.op = Action::Op::CrashIfNodeByte;
        a.path = c.take("node path");
        a.n = parse_u64(c.take("index"));
        a.byte = static_cast<uint8_t>(parse_hex(c.take("byte")));
        a.pc = parse_hex(c.take("pc"));
        a.proc = opt_proc(c);
      } else if (kw == "respond") {
        a.op = Action::Op::Respond;
        a.code = static_cast<int>(parse_u64(c.take("status code")));
        a.body_kind = c.accept("kind") ? c.take("kind") : "cl";
        if (c.accept("text")) a.text = pct_decode(c.take("text"));
        if (c.accept("location")) a.location = c.take("location");
      } else {
        throw InvalidScenario("line " + std::to_string(lineno) + ": unknown directive " + kw);
      }
      c.done();
      ep->actions.push_back(std::move(a));
    } else {
      throw InvalidScenario("line " + std::to_string(lineno) + ": unknown directive " + kw);
    }
  }

  // Structural validation.
  if (sc.name.empty()) throw InvalidScenario("missing scenario name");
  if (sc.processes.empty()) throw InvalidScenario("no processes declared");
  std::set<std::string> names;
  std::set<uint64_t> inodes;
  for (const ProcessSpec& p : sc.processes) {
    if (!names.insert(p.name).second)
      throw InvalidScenario("duplicate process " + p.name);
    if (p.inode == 0 || !inodes.insert(p.inode).second)
      throw InvalidScenario("bad or duplicate inode for " + p.name);
  }
  for (const ProcessSpec& p : sc.processes) {
    std::string cur = p.parent;
    size_t hops = 0;
    while (cur != "init") {
      const ProcessSpec* pp = sc.find_process(cur);
      if (!pp) throw InvalidScenario("unknown parent " + cur + " of " + p.name);
      cur = pp->parent;
      if (++hops > sc.processes.size())
        throw InvalidScenario("parent cycle involving " + p.name);
    }
  }
  if (sc.service.empty() || !sc.find_process(sc.service))
    throw InvalidScenario("service process missing or undeclared");
  if (sc.init_fault && !sc.find_process(sc.init_fault->proc))
    throw InvalidScenario("init-fault process undeclared");
  for (const auto& [file, proc] : sc.boot_reads)
    if (!sc.find_process(proc)) throw InvalidScenario("boot-read process undeclared");

  std::set<std::pair<std::string, std::string>> eps;
  for (Endpoint& e : sc.endpoints) {
    if (!eps.insert({e.method, e.path}).second)
      throw InvalidScenario("duplicate endpoint " + e.method + " " + e.path);
    if (e.proc.empty()) e.proc = sc.service;
    if (!sc.find_process(e.proc))
      throw InvalidScenario("endpoint process undeclared: " + e.proc);
    if (e.actions.empty() || e.actions.back().op != Action::Op::Respond)
      throw InvalidScenario("endpoint " + e.path + " must end with respond");
    for (size_t i = 0; i + 1 < e.actions.size(); ++i)
      if (e.actions[i].op == Action::Op::Respond)
        throw InvalidScenario("endpoint " + e.path + " has respond before the end");
    for (const Action& a : e.actions)
      if (!a.proc.empty() && !sc.find_process(a.proc))
        throw InvalidScenario("action process undeclared: " + a.proc);
  }
  std::set<std::string> seed_ids;
  for (const SeedSpec& s : sc.seeds) {
    if (!seed_ids.insert(s.id).second) throw InvalidScenario("duplicate seed " + s.id);
    if (s.requests.empty()) throw InvalidScenario("seed " + s.id + " has no requests");
  }
  return sc;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidScenario("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

Bytes build_request(const SeedRequestSpec& spec) {
  std::string s = spec.method + " " + spec.target +
                  " HTTP/1.1\r\nHost: device\r\nUser-Agent: Mozilla/5.0 (compatible; "
                  "cfgtool)\r\nAccept: */*\r\n";
  if (!spec.body.empty()) {
    s += "Content-Type: application/x-www-form-urlencoded\r\nContent-Length: " +
         std::to_string(spec.body.size()) + "\r\n\r\n" + spec.body;
  } else {
    s += "\r\n";
  }
  return str_bytes(s);
}

SeedInteraction build_seed(const Scenario& sc, const std::string& seed_id) {
  for (const SeedSpec& s : sc.seeds) {
    if (s.id != seed_id) continue;
    SeedInteraction seed;
    seed.id = s.id;
    for (const SeedRequestSpec& r : s.requests) {
      Region region;
      region.index = static_cast<uint32_t>(seed.regions.size());
      region.bytes = build_request(r);
      seed.regions.push_back(std::move(region));
    }
    return seed;
  }
  throw InvalidScenario("no seed named " + seed_id + " in scenario " + sc.name);
}

Executor::Executor(const Scenario& sc, size_t history_depth)
    : sc_(sc), history_depth_(history_depth) {}

uint64_t Executor::inode_of(const std::string& proc) const {
  const ProcessSpec* p = sc_.find_process(proc);
  if (!p) throw UnknownTopology("unknown process " + proc);
  return p->inode;
}

void Executor::exec_block(const std::string& proc, uint64_t pc) {
  CodeLocation loc{inode_of(proc), pc};
  auto& h = state_.history[proc];
  h.push_back(loc);
  if (h.size() > history_depth_) h.erase(h.begin());
  if (block_hook_) block_hook_(proc, loc);
  ++steps_;
}

void Executor::emit_fs(FsKind kind, const FileId& file) {
  ++clock_;
  ++steps_;
  if (sinks_.events) {
    FsEvent e{kind, cur_region_, file};
    sinks_.events->push_back({clock_, TraceRecord::of(e)});
  }
}

void Executor::emit_run(MemKind kind, const std::string& proc, uint64_t pc,
                        const Bytes& values, const std::vector<ByteOrigin>& origin) {
  if (values.empty()) return;
  exec_block(proc, pc);
  CodeLocation loc{inode_of(proc), pc};
  uint64_t base = state_.next_gpa;
  state_.next_gpa += ((values.size() + 0xff) & ~uint64_t{0xff}) + 0x100;
  for (size_t i = 0; i < values.size(); ++i) {
    ++clock_;
    ++steps_;
    if (sinks_.events) {
      TaintMemEvent m{kind, cur_region_, loc, base + i, values[i]};
      sinks_.events->push_back({clock_, TraceRecord::of(m)});
    }
    if (sinks_.oracle && origin[i].region >= 0)
      (*sinks_.oracle)[{static_cast<uint32_t>(origin[i].region), origin[i].offset}]
          .insert(loc);
  }
}

void Executor::crash(const std::string& proc, uint64_t pc, SimResponse& out) {
  exec_block(proc, pc);
  out.crashes.push_back({proc, state_.history[proc]});
}

Bytes Executor::error_response(int code) const {
  std::string body = "<html><body>" + std::to_string(code) + "</body></html>";
  std::string s = "HTTP/1.1 " + std::to_string(code) + " " + reason_of(code) +
                  "\r\nContent-Type: text/html\r\nContent-Length: " +
                  std::to_string(body.size()) + "\r\n\r\n" + body;
  return str_bytes(s);
}

Bytes Executor::build_response(const Action& a) const {
  std::string head = "HTTP/1.1 " + std::to_string(a.code) + " " + reason_of(a.code) + "\r\n";
  if (!a.location.empty()) head += "Location: " + a.location + "\r\n";
  std::string text = a.text.empty() ? "ok" : a.text;
  if (a.body_kind == "none") {
    head += "Content-Length: 0\r\n\r\n";
    return str_bytes(head);
  }
  if (a.body_kind == "cl") {
    std::string body = "<html><body>" + text + "</body></html>";
    head += "Content-Type: text/html\r\nContent-Length: " + std::to_string(body.size()) +
            "\r\n\r\n" + body;
    return str_bytes(head);
  }
  if (a.body_kind == "chunked") {
    std::string body = "<html><body>" + text + "</body></html>";
    size_t half = body.size() / 2;
    std::ostringstream out;
    out << head << "Content-Type: text/html\r\nTransfer-Encoding: chunked\r\n\r\n";
    out << std::hex << half << "\r\n" << body.substr(0, half) << "\r\n";
    out << std::hex << (body.size() - half) << "\r\n" << body.substr(half) << "\r\n";
    out << "0\r\n\r\n";
    return str_bytes(out.str());
  }
  if (a.body_kind == "endtag") {
    std::string body = "<html><body>" + text + "</body></html>";
    head += "Content-Type: text/html\r\n\r\n" + body;
    return str_bytes(head);
  }
  if (a.body_kind == "close") {
    head += "Content-Type: text/plain\r\n\r\n" + text;
    return str_bytes(head);
  }
  throw InvalidScenario("unknown respond kind " + a.body_kind);
}

void Executor::boot() {
  if (booted_) throw Error("Executor: boot twice");
  booted_ = true;
  for (const auto& [file, proc] : sc_.boot_reads) emit_fs(FsKind::Reader, file);
}

Executor::ParsedRequest Executor::parse_request(const Bytes& unit) {
  ParsedRequest out;
  auto nl = std::find(unit.begin(), unit.end(), '\n');
  std::string line(unit.begin(), nl);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // Positional tokenizer: parameter offsets must point into the raw unit.
  std::vector<std::pair<std::string, size_t>> toks;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) toks.emplace_back(line.substr(start, i - start), start);
  }
  if (toks.size() < 2) return out;
  const std::string& method = toks[0].first;
  bool method_ok = std::all_of(method.begin(), method.end(), [](unsigned char ch) {
    return (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z');
  });
  if (!method_ok) return out;
  out.ok = true;
  out.method = toks[0].first;
  const std::string& target = toks[1].first;
  size_t target_off = toks[1].second;
  size_t q = target.find('?');
  out.path = target.substr(0, q == std::string::npos ? target.size() : q);

  auto parse_form = [&](size_t base, size_t len) {
    size_t pos = 0;
    while (pos < len) {
      size_t amp = pos;
      while (amp < len && unit[base + amp] != '&') ++amp;
      size_t eq = pos;
      while (eq < amp && unit[base + eq] != '=') ++eq;
      if (eq < amp) {
        ParsedParam p;
        p.name.assign(unit.begin() + base + pos, unit.begin() + base + eq);
        p.value.assign(unit.begin() + base + eq + 1, unit.begin() + base + amp);
        p.value_offset = static_cast<uint32_t>(base + eq + 1);
        out.params.push_back(std::move(p));
      }
      pos = amp + 1;
    }
  };

  if (q != std::string::npos && q + 1 < target.size())
    parse_form(target_off + q + 1, target.size() - q - 1);

  // Body starts after the first blank line.
  size_t body = unit.size();
  for (size_t j = size_t(nl - unit.begin()); j + 1 < unit.size(); ++j) {
    if (unit[j] != '\n') continue;
    size_t k = j + 1;
    if (unit[k] == '\n') {
      body = k + 1;
      break;
    }
    if (unit[k] == '\r' && k + 1 < unit.size() && unit[k + 1] == '\n') {
      body = k + 2;
      break;
    }
  }
  if (body < unit.size()) parse_form(body, unit.size() - body);
  return out;
}

const Executor::ParsedParam* Executor::find_param(const ParsedRequest& req,
                                                  const std::string& name) const {
  for (const ParsedParam& p : req.params)
    if (p.name == name) return &p;
  return nullptr;
}

SimResponse Executor::handle_request(const Bytes& request) {
  if (!booted_) throw Error("Executor: request before boot");
  cur_region_ = state_.requests_handled++;
  ++steps_;

  if (sinks_.session) {
    sinks_.session->feed_bytes(request, Direction::ToServer);
    clock_ = sinks_.session->now();
  } else {
    clock_ += request.size();
  }

  SimResponse out;
  if (sc_.init_fault && cur_region_ == 0) {
    const InitFault& f = *sc_.init_fault;
    for (size_t i = 0; i + 1 < f.pcs.size(); ++i) exec_block(f.proc, f.pcs[i]);
    crash(f.proc, f.pcs.back(), out);
  }

  ParsedRequest req = parse_request(request);
  const Endpoint* ep = req.ok ? sc_.find_endpoint(req.method, req.path) : nullptr;

  if (!req.ok) {
    out.status = 400;
    out.bytes = error_response(400);
  } else if (!ep) {
    out.status = 404;
    out.bytes = error_response(404);
  } else {
    auto param_origin = [&](const ParsedParam& p) {
      std::vector<ByteOrigin> org(p.value.size());
      for (size_t j = 0; j < p.value.size(); ++j)
        org[j] = {static_cast<int32_t>(cur_region_),
                  static_cast<uint32_t>(p.value_offset + j)};
      return org;
    };
    bool responded = false;
    for (const Action& a : ep->actions) {
      const std::string& proc = a.proc.empty() ? ep->proc : a.proc;
      if (a.op == Action::Op::CheckParam) {
        const ParsedParam* p = find_param(req, a.param);
        if (!p || p->value.empty()) {
          out.status = 400;
          out.bytes = error_response(400);
          responded = true;
        }
      } else if (a.op == Action::Op::CheckParamLen) {
        const ParsedParam* p = find_param(req, a.param);
        if (p && p->value.size() != a.n) {
          out.status = 400;
          out.bytes = error_response(400);
          responded = true;
        }
      } else if (a.op == Action::Op::CheckNode) {
        emit_fs(FsKind::Reader, a.path);
        if (!state_.vfs.count(a.path)) {
          out.status = 403;
          out.bytes = error_response(403);
          responded = true;
        }
      } else if (a.op == Action::Op::Block) {
        exec_block(proc, a.pc);
      } else if (a.op == Action::Op::BlockIfParamLen) {
        const ParsedParam* p = find_param(req, a.param);
        if (p && p->value.size() > a.n) exec_block(proc, a.pc);
      } else if (a.op == Action::Op::Flow) {
        const ParsedParam* p = find_param(req, a.param);
        if (p && !p->value.empty()) {
          auto org = param_origin(*p);
          emit_run(MemKind::Load, proc, a.pc_load, p->value, org);
          emit_run(MemKind::Store, proc, a.pc_store, p->value, org);
        }
      } else if (a.op == Action::Op::NodeWrite) {
        const ParsedParam* p = find_param(req, a.param);
        if (p) {
          VfsNode node{p->value, param_origin(*p)};
          emit_fs(FsKind::Writer, a.path);
          emit_run(MemKind::Store, proc, a.pc, node.bytes, node.origin);
          state_.vfs[a.path] = std::move(node);
        }
      } else if (a.op == Action::Op::NodeCopy) {
        emit_fs(FsKind::Reader, a.src);
        auto it = state_.vfs.find(a.src);
        if (it != state_.vfs.end()) {
          VfsNode copy = it->second;
          emit_run(MemKind::Load, proc, a.pc_load, copy.bytes, copy.origin);
          emit_fs(FsKind::Writer, a.path);
          emit_run(MemKind::Store, proc, a.pc_store, copy.bytes, copy.origin);
          state_.vfs[a.path] = std::move(copy);
        }
      } else if (a.op == Action::Op::NodeRead) {
        emit_fs(FsKind::Reader, a.path);
        auto it = state_.vfs.find(a.path);
        if (it != state_.vfs.end())
          emit_run(MemKind::Load, proc, a.pc_load, it->second.bytes, it->second.origin);
      } else if (a.op == Action::Op::NodeTemplate) {
        VfsNode comp;
        for (const auto& [is_node, val] : a.parts) {
          if (!is_node) {
            for (char ch : val) {
              comp.bytes.push_back(static_cast<uint8_t>(ch));
              comp.origin.push_back({-1, 0});
            }
            continue;
          }
          emit_fs(FsKind::Reader, val);
          auto it = state_.vfs.find(val);
          if (it == state_.vfs.end()) continue;
          emit_run(MemKind::Load, proc, a.pc_load, it->second.bytes, it->second.origin);
          comp.bytes.insert(comp.bytes.end(), it->second.bytes.begin(),
                            it->second.bytes.end());
          comp.origin.insert(comp.origin.end(), it->second.origin.begin(),
                             it->second.origin.end());
        }
        emit_fs(FsKind::Writer, a.path);
        emit_run(MemKind::Store, proc, a.pc_store, comp.bytes, comp.origin);
        state_.vfs[a.path] = std::move(comp);
      } else if (a.op == Action::Op::CrashIfParamLen) {
        const ParsedParam* p = find_param(req, a.param);
        if (p && p->value.size() > a.n) {
          crash(proc, a.pc, out);
          out.status = 500;
          out.bytes = error_response(500);
          responded = true;
        }
      } else if (a.op == Action::Op::CrashIfNodeLen) {
        auto it = state_.vfs.find(a.path);
        if (it != state_.vfs.end() && it->second.bytes.size() > a.n) {
          crash(proc, a.pc, out);
          out.status = 500;
          out.bytes = error_response(500);
          responded = true;
        }
      } else if (a.op == Action::Op::CrashIfNodeByte) {
        auto it = state_.vfs.find(a.path);
        if (it != state_.vfs.end() && a.n < it->second.bytes.size() &&
            it->second.bytes[a.n] == a.byte) {
          crash(proc, a.pc, out);
          out.status = 500;
          out.bytes = error_response(500);
          responded = true;
        }
      } else if (a.op == Action::Op::Respond) {
        out.status = a.code;
        out.bytes = build_response(a);
        responded = true;
      }
      if (responded) break;
    }
    if (!responded) throw Error("endpoint fell through without responding");
  }

  if (sinks_.session) {
    sinks_.session->bump_clock(clock_ - sinks_.session->now());
    sinks_.session->feed_bytes(out.bytes, Direction::ToClient);
    clock_ = sinks_.session->now();
  } else {
    clock_ += out.bytes.size();
  }
  return out;
}

Executor::Checkpoint Executor::checkpoint() const {
  Checkpoint cp;
  cp.state_ = state_;
  cp.clock_ = clock_;
  cp.booted_ = booted_;
  return cp;
}

void Executor::restore(const Checkpoint& cp) {
  state_ = cp.state_;
  clock_ = cp.clock_;
  booted_ = cp.booted_;
}

}  // namespace tgf
