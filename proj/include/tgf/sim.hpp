#pragma once

#include <functional>
#include <optional>

#include "tgf/corpus.hpp"
#include "tgf/http.hpp"
#include "tgf/trace.hpp"

namespace tgf {

// Where a byte in the virtual filesystem came from: the request region and
// offset it was copied out of, or synthetic (-1) for literal data.
struct ByteOrigin {
  int32_t region = -1;
  uint32_t offset = 0;
};

struct VfsNode {
  Bytes bytes;
  std::vector<ByteOrigin> origin;  // parallel to bytes
};

struct ProcessSpec {
  std::string name;
  uint64_t inode = 0;
  std::string parent = "init";
};

// Scripted fault that fires when the first request of a replay arrives,
// independent of request content. Dry runs must learn to ignore it.
struct InitFault {
  std::string proc;
  std::vector<uint64_t> pcs;
};

struct Action {
  enum class Op {
    CheckParam,        // 400 unless param present and non-empty
    CheckParamLen,     // 400 if param present with length != n
    CheckNode,         // 403 unless node exists; emits a reader event
    Block,             // execute one basic block
    BlockIfParamLen,   // execute block when param length > n
    Flow,              // load run + store run over a param value
    NodeWrite,         // node := param value; writer event + store run
    NodeCopy,          // dst := src node; reader+writer events, load+store runs
    NodeRead,          // reader event + load run over node value
    NodeTemplate,      // dst := literal/node composition; per-part load runs
    CrashIfParamLen,   // fault when param length > n
    CrashIfNodeLen,    // fault when node length > n
    CrashIfNodeByte,   // fault when node byte at index n equals the value
    Respond,
  };
  Op op{};
  std::string proc;  // empty = endpoint handler process
  std::string param;
  std::string path;        // node path (dst for copies)
  std::string src;         // src node for NodeCopy
  uint64_t pc = 0;         // Block / crash site / NodeWrite store
  uint64_t pc_load = 0;
  uint64_t pc_store = 0;
  uint64_t n = 0;
  uint8_t byte = 0;
  int code = 200;
  std::string body_kind = "cl";  // cl | chunked | close | endtag | none
  std::string text;
  std::string location;
  // NodeTemplate parts: {true, node-path} or {false, literal}
  std::vector<std::pair<bool, std::string>> parts;
};

struct Endpoint {
  std::string method;
  std::string path;
  std::string proc;
  std::vector<Action> actions;
};

struct SeedRequestSpec {
  std::string method;
  std::string target;
  std::string body;
};

struct SeedSpec {
  std::string id;
  std::vector<SeedRequestSpec> requests;
};

struct Scenario {
  std::string name;
  std::string service;  // network-facing process
  std::vector<ProcessSpec> processes;
  std::optional<InitFault> init_fault;
  std::vector<std::pair<FileId, std::string>> boot_reads;  // (file, proc)
  std::vector<Endpoint> endpoints;
  std::vector<SeedSpec> seeds;

  const ProcessSpec* find_process(const std::string& name) const;
  const Endpoint* find_endpoint(const std::string& method, const std::string& path) const;

  static Scenario parse(const std::string& text);    // throws InvalidScenario
  static Scenario load(const std::string& path);
};

// Canonical HTTP/1.1 bytes for one scripted request.
Bytes build_request(const SeedRequestSpec& spec);

// Materializes a scripted seed session into regions.
SeedInteraction build_seed(const Scenario& sc, const std::string& seed_id);

struct CrashRecord {
  std::string process;
  std::vector<CodeLocation> last_blocks;  // oldest first, at most history depth
};

struct SimResponse {
  int status = 0;
  Bytes bytes;
  std::vector<CrashRecord> crashes;
};

// Ground truth: input byte (region, offset) -> code locations that touched
// a value carrying that byte.
using OracleMap = std::map<std::pair<uint32_t, uint32_t>, std::set<CodeLocation>>;

struct RecordingSinks {
  std::vector<RawEvent>* events = nullptr;
  SessionParser* session = nullptr;
  OracleMap* oracle = nullptr;
};

// Deterministic multi-process firmware stand-in. One instance models the
// whole appliance: an HTTP-facing service plus helper processes and daemons
// sharing a virtual filesystem. All behavior is scripted by the scenario;
// identical request sequences produce identical traces, responses, and
// crashes.
class Executor {
 public:
  explicit Executor(const Scenario& sc, size_t history_depth = 5);

  void set_recording(RecordingSinks sinks) { sinks_ = sinks; }
  void set_block_hook(std::function<void(const std::string&, CodeLocation)> hook) {
    block_hook_ = std::move(hook);
  }

  // Emits the scripted init trace. Must run before the first request.
  void boot();

  SimResponse handle_request(const Bytes& request);

  class Checkpoint;
  Checkpoint checkpoint() const;
  void restore(const Checkpoint& cp);

  // Cumulative work meter; deliberately not part of checkpointed state.
  uint64_t steps() const { return steps_; }
  uint64_t clock() const { return clock_; }

  const Scenario& scenario() const { return sc_; }

 private:
  struct State {
    std::map<FileId, VfsNode> vfs;
    std::map<std::string, std::vector<CodeLocation>> history;
    uint32_t requests_handled = 0;
    uint64_t next_gpa = 0x100000;
  };

  struct ParsedParam {
    std::string name;
    Bytes value;
    uint32_t value_offset = 0;
  };
  struct ParsedRequest {
    bool ok = false;
    std::string method;
    std::string path;
    std::vector<ParsedParam> params;
  };

  static ParsedRequest parse_request(const Bytes& unit);
  const ParsedParam* find_param(const ParsedRequest& req, const std::string& name) const;

  uint64_t inode_of(const std::string& proc) const;
  void exec_block(const std::string& proc, uint64_t pc);
  void emit_fs(FsKind kind, const FileId& file);
  void emit_run(MemKind kind, const std::string& proc, uint64_t pc, const Bytes& values,
                const std::vector<ByteOrigin>& origin);
  void crash(const std::string& proc, uint64_t pc, SimResponse& out);
  Bytes build_response(const Action& respond) const;
  Bytes error_response(int code) const;

  const Scenario& sc_;
  size_t history_depth_;
  State state_;
  RecordingSinks sinks_;
  std::function<void(const std::string&, CodeLocation)> block_hook_;
  uint64_t steps_ = 0;
  uint64_t clock_ = 0;
  uint32_t cur_region_ = 0;
  bool booted_ = false;
};

class Executor::Checkpoint {
 public:
  Checkpoint() = default;

 private:
  friend class Executor;
  State state_;
  uint64_t clock_ = 0;
  bool booted_ = false;
};

}  // namespace tgf
