#pragma once

#include "tgf/corpus.hpp"

namespace tgf {

// Recursive step of the flattening pass. writers_of maps each reader to the
// writers it directly depends on; files_by_min_writer carries each file under
// the earliest region that wrote it. The visited set guards recursion on
// cyclic reader/writer graphs; attachment of an already-visited writer's
// files still happens, only the descent is skipped.
std::map<uint32_t, std::set<FileId>> build_deps(
    uint32_t r, const std::map<uint32_t, std::set<uint32_t>>& writers_of,
    const std::map<uint32_t, std::set<FileId>>& files_by_min_writer,
    std::set<uint32_t>& visited);

// Rewrites raw file dependencies so that each reader maps to the transitive
// closure of regions it depends on, every file is attributed to exactly one
// writer (the earliest), and no reader maps to itself. Readers whose entry
// comes out empty are dropped. Idempotent.
RegionDeps filter_and_flatten(const RegionDeps& deps);

}  // namespace tgf
