#include "tgf/depfilter.hpp"

namespace tgf {

std::map<uint32_t, std::set<FileId>> build_deps(
    uint32_t r, const std::map<uint32_t, std::set<uint32_t>>& writers_of,
    const std::map<uint32_t, std::set<FileId>>& files_by_min_writer,
    std::set<uint32_t>& visited) {
  if (visited.count(r)) return {};
  visited.insert(r);

  std::map<uint32_t, std::set<FileId>> deps;
  auto wit = writers_of.find(r);
  if (wit == writers_of.end()) return deps;

  for (uint32_t w : wit->second) {
    auto fit = files_by_min_writer.find(w);
    if (fit != files_by_min_writer.end())
      deps[w].insert(fit->second.begin(), fit->second.end());
    auto sub = build_deps(w, writers_of, files_by_min_writer, visited);
    for (auto& [sw, files] : sub) deps[sw].insert(files.begin(), files.end());
  }
  return deps;
}

RegionDeps filter_and_flatten(const RegionDeps& deps) {
  // Attribute each file to the earliest region that wrote it.
  std::map<FileId, uint32_t> min_writer;
  for (const auto& [reader, by_writer] : deps) {
    for (const auto& [writer, files] : by_writer) {
      for (const FileId& f : files) {
        auto it = min_writer.find(f);
        if (it == min_writer.end() || writer < it->second) min_writer[f] = writer;
      }
    }
  }
  std::map<uint32_t, std::set<FileId>> files_by_min_writer;
  for (const auto& [f, w] : min_writer) files_by_min_writer[w].insert(f);

  std::map<uint32_t, std::set<uint32_t>> writers_of;
  for (const auto& [reader, by_writer] : deps)
    for (const auto& [writer, files] : by_writer) writers_of[reader].insert(writer);

  RegionDeps out;
  for (const auto& [reader, by_writer] : deps) {
    std::set<uint32_t> visited;
    auto flat = build_deps(reader, writers_of, files_by_min_writer, visited);
    flat.erase(reader);  // cycles can hand a reader its own files back
    if (!flat.empty()) out[reader] = std::move(flat);
  }
  return out;
}

}  // namespace tgf
