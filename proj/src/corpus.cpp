#include "tgf/corpus.hpp"

#include <algorithm>

namespace tgf {

namespace {

size_t find_delim(const Bytes& raw, size_t from, const Bytes& delim) {
  auto it = std::search(raw.begin() + from, raw.end(), delim.begin(), delim.end());
  return it == raw.end() ? std::string::npos : size_t(it - raw.begin());
}

}  // namespace

std::vector<Region> split_into_regions(const Bytes& raw, const Bytes& delimiter) {
  if (delimiter.empty()) throw Error("split_into_regions: empty delimiter");
  std::vector<Region> out;
  if (raw.empty()) return out;

  size_t pos = 0;
  while (true) {
    size_t hit = find_delim(raw, pos, delimiter);
    size_t end = hit == std::string::npos ? raw.size() : hit;
    if (end == pos)
      throw ConsecutiveDelimiters("split_into_regions: empty region at byte " +
                                  std::to_string(pos));
    Region r;
    r.index = static_cast<uint32_t>(out.size());
    r.bytes.assign(raw.begin() + pos, raw.begin() + end);
    out.push_back(std::move(r));
    if (hit == std::string::npos) break;
    pos = hit + delimiter.size();
    if (pos >= raw.size())
      throw ConsecutiveDelimiters("split_into_regions: trailing delimiter");
  }
  return out;
}

Bytes serialize_seed(const SeedInteraction& seed, const Bytes& delimiter) {
  Bytes out;
  for (size_t i = 0; i < seed.regions.size(); ++i) {
    const Bytes& b = seed.regions[i].bytes;
    if (b.empty())
      throw Error("serialize_seed: region " + std::to_string(i) + " is empty");
    if (std::search(b.begin(), b.end(), delimiter.begin(), delimiter.end()) != b.end())
      throw Error("serialize_seed: region " + std::to_string(i) +
                  " contains the delimiter");
    if (i) out.insert(out.end(), delimiter.begin(), delimiter.end());
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

const std::set<std::string>& static_resource_suffixes() {
  static const std::set<std::string> kSuffixes{
      ".gif", ".css", ".jpeg", ".jpg", ".png", ".js", ".ico"};
  return kSuffixes;
}

namespace {

// Extracts the path component of a request line, minus query and fragment.
// Returns false when the region does not look like an HTTP request.
bool request_path(const Bytes& region, std::string* method, std::string* path) {
  auto eol = std::find(region.begin(), region.end(), '\n');
  std::string line(region.begin(), eol);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto toks = split_ws(line);
  if (toks.size() != 3) return false;
  if (toks[2].rfind("HTTP/", 0) != 0) return false;
  *method = toks[0];
  std::string target = toks[1];
  size_t cut = target.find_first_of("?#");
  if (cut != std::string::npos) target.resize(cut);
  *path = target;
  return true;
}

bool has_static_suffix(const std::string& path, const std::set<std::string>& suffixes) {
  std::string lower(path);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (const auto& s : suffixes) {
    if (lower.size() >= s.size() &&
        lower.compare(lower.size() - s.size(), s.size(), s) == 0)
      return true;
  }
  return false;
}

}  // namespace

std::vector<Region> filter_static_requests(const std::vector<Region>& regions,
                                           const std::set<std::string>& suffixes) {
  std::vector<Region> out;
  for (const Region& r : regions) {
    std::string method, path;
    bool drop = request_path(r.bytes, &method, &path) && method == "GET" &&
                has_static_suffix(path, suffixes);
    if (drop) continue;
    Region kept = r;
    kept.index = static_cast<uint32_t>(out.size());
    out.push_back(std::move(kept));
  }
  return out;
}

}  // namespace tgf
