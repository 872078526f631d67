#include "lambdafs/path.hpp"

#include <stdexcept>

namespace lfs::path {

bool is_normalized(std::string_view p) {
  if (p.empty() || p.front() != '/') return false;
  if (p.size() == 1) return true;
  if (p.back() == '/') return false;
  std::size_t start = 1;
  while (start <= p.size()) {
    std::size_t end = p.find('/', start);
    if (end == std::string_view::npos) end = p.size();
    auto comp = p.substr(start, end - start);
    if (comp.empty() || comp == "." || comp == "..") return false;
    start = end + 1;
  }
  return true;
}

std::string normalize(std::string_view p) {
  if (p.empty() || p.front() != '/') throw std::invalid_argument("path must be absolute: '" + std::string(p) + "'");
  std::vector<std::string_view> out;
  std::size_t start = 1;
  while (start <= p.size()) {
    std::size_t end = p.find('/', start);
    if (end == std::string_view::npos) end = p.size();
    auto comp = p.substr(start, end - start);
    if (comp.empty() || comp == ".") {
    } else if (comp == "..") {
      if (!out.empty()) out.pop_back();
    } else {
      out.push_back(comp);
    }
    start = end + 1;
  }
  if (out.empty()) return "/";
  std::string result;
  for (auto c : out) {
    result += '/';
    result += c;
  }
  return result;
}

std::vector<std::string_view> components(std::string_view p) {
  std::vector<std::string_view> out;
  std::size_t start = 1;
  while (start < p.size()) {
    std::size_t end = p.find('/', start);
    if (end == std::string_view::npos) end = p.size();
    if (end > start) out.push_back(p.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string_view parent(std::string_view p) {
  if (p.size() <= 1) return "/";
  auto pos = p.rfind('/');
  if (pos == 0) return "/";
  return p.substr(0, pos);
}

std::string_view basename(std::string_view p) {
  if (p.size() <= 1) return "";
  return p.substr(p.rfind('/') + 1);
}

std::string join(std::string_view dir, std::string_view name) {
  std::string out(dir);
  if (out.empty() || out.back() != '/') out += '/';
  out += name;
  return out;
}

bool has_prefix(std::string_view p, std::string_view prefix) {
  if (prefix == "/") return !p.empty() && p.front() == '/';
  if (p.size() < prefix.size() || p.compare(0, prefix.size(), prefix) != 0) return false;
  return p.size() == prefix.size() || p[prefix.size()] == '/';
}

std::string rebase(std::string_view p, std::string_view from, std::string_view to) {
  if (!has_prefix(p, from)) throw std::invalid_argument("rebase: path outside prefix");
  std::string_view rest = from == "/" ? p : p.substr(from.size());
  if (rest.empty()) return std::string(to);
  if (to == "/") return std::string(rest);
  return std::string(to) + std::string(rest);
}

std::size_t depth(std::string_view p) {
  return components(p).size();
}

}  // namespace lfs::path
