#include "lambdafs/workload.hpp"

#include <cmath>
#include <stdexcept>

#include "lambdafs/path.hpp"

namespace lfs::workload {

OpMix OpMix::spotify() {
  OpMix m;
  m.weights[static_cast<std::size_t>(OpKind::kCreate)] = 2.7;
  m.weights[static_cast<std::size_t>(OpKind::kMkdir)] = 0.02;
  m.weights[static_cast<std::size_t>(OpKind::kDelete)] = 0.75;
  m.weights[static_cast<std::size_t>(OpKind::kMv)] = 1.3;
  m.weights[static_cast<std::size_t>(OpKind::kRead)] = 69.22;
  m.weights[static_cast<std::size_t>(OpKind::kStat)] = 17.0;
  m.weights[static_cast<std::size_t>(OpKind::kLs)] = 9.01;
  return m;
}

OpMix OpMix::only(OpKind kind) {
  OpMix m;
  m.weights[static_cast<std::size_t>(kind)] = 100.0;
  return m;
}

OpMix OpMix::read_only() { return only(OpKind::kRead); }

double OpMix::total() const {
  double t = 0.0;
  for (double w : weights) t += w;
  return t;
}

void OpMix::validate() const {
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("op mix weights must be non-negative");
  }
  if (std::abs(total() - 100.0) > 1e-9) throw std::invalid_argument("op mix weights must sum to 100");
}

OpKind OpMix::sample(sim::Rng& rng) const {
  double u = rng.uniform01() * total();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last = i;
    acc += weights[i];
    if (u < acc) return static_cast<OpKind>(i);
  }
  return static_cast<OpKind>(last);
}

void ParetoConfig::validate() const {
  if (alpha <= 1.0) throw std::invalid_argument("pareto alpha must be > 1");
  if (scale < 0.0) throw std::invalid_argument("pareto scale must be >= 0");
  if (cap_multiplier < 1.0) throw std::invalid_argument("burst cap must be >= 1");
}

double pareto_sample(double alpha, double scale, sim::Rng& rng) {
  return scale * std::pow(rng.uniform_open01(), -1.0 / alpha);
}

double next_interval_target(const ParetoConfig& cfg, sim::Rng& rng) {
  double x = pareto_sample(cfg.alpha, cfg.scale, rng);
  if (cfg.capped) x = std::min(x, cfg.cap_multiplier * cfg.scale);
  return x;
}

double RolloverLedger::per_vm_rate(double delta, int n_vms) {
  if (n_vms < 1) throw std::invalid_argument("n_vms must be >= 1");
  return delta / n_vms;
}

std::int64_t RolloverLedger::available() const {
  return static_cast<std::int64_t>(std::floor(allowance_ + 1e-9));
}

bool RolloverLedger::take() {
  if (available() < 1) return false;
  allowance_ -= 1.0;
  ++issued_;
  return true;
}

void NamespaceSeed::validate() const {
  if (depth < 1) throw std::invalid_argument("namespace depth must be >= 1");
  if (fanout < 1) throw std::invalid_argument("namespace fanout must be >= 1");
  if (files < 0) throw std::invalid_argument("namespace file count must be >= 0");
}

std::size_t NamespaceSeed::directory_count() const {
  std::size_t total = 0;
  std::size_t level = 1;
  for (int d = 1; d < depth; ++d) {
    level *= static_cast<std::size_t>(fanout);
    total += level;
  }
  return total;
}

std::vector<SeededEntry> seed_namespace(store::MetadataStore& store, const NamespaceSeed& seed) {
  seed.validate();
  std::vector<SeededEntry> out;
  std::vector<std::pair<INodeId, std::string>> level = {{kRootId, "/"}};
  for (int d = 1; d < seed.depth; ++d) {
    std::vector<std::pair<INodeId, std::string>> next;
    next.reserve(level.size() * static_cast<std::size_t>(seed.fanout));
    for (const auto& [id, p] : level) {
      for (int i = 0; i < seed.fanout; ++i) {
        std::string name = "d" + std::to_string(i);
        INodeId child = store.create_direct(id, name, NodeKind::kDirectory);
        std::string cp = path::join(p, name);
        out.push_back({cp, true});
        next.emplace_back(child, std::move(cp));
      }
    }
    level = std::move(next);
  }
  for (int f = 0; f < seed.files; ++f) {
    const auto& [dir, p] = level[static_cast<std::size_t>(f) % level.size()];
    std::string name = "f" + std::to_string(f);
    store.create_direct(dir, name, NodeKind::kFile);
    out.push_back({path::join(p, name), false});
  }
  return out;
}

void NamespaceMirror::IndexedSet::insert(const std::string& s) {
  if (index.count(s) != 0) return;
  index.emplace(s, items.size());
  items.push_back(s);
}

void NamespaceMirror::IndexedSet::erase(const std::string& s) {
  auto it = index.find(s);
  if (it == index.end()) return;
  std::size_t pos = it->second;
  index.erase(it);
  if (pos + 1 != items.size()) {
    items[pos] = std::move(items.back());
    index[items[pos]] = pos;
  }
  items.pop_back();
}

NamespaceMirror::NamespaceMirror() { entries_.emplace("/", true); }

void NamespaceMirror::add(const std::string& p, bool dir) {
  if (p == "/") return;
  auto [it, inserted] = entries_.emplace(p, dir);
  if (!inserted) {
    if (it->second == dir) return;
    (it->second ? dirs_ : files_).erase(p);
    it->second = dir;
  }
  (dir ? dirs_ : files_).insert(p);
}

void NamespaceMirror::remove_subtree(const std::string& p) {
  if (p == "/") return;
  auto it = entries_.find(p);
  if (it == entries_.end()) return;
  std::string child_prefix = p + "/";
  std::vector<std::string> doomed = {p};
  for (auto c = entries_.lower_bound(child_prefix); c != entries_.end() && c->first.compare(0, child_prefix.size(), child_prefix) == 0; ++c) {
    doomed.push_back(c->first);
  }
  for (const auto& d : doomed) {
    auto e = entries_.find(d);
    (e->second ? dirs_ : files_).erase(d);
    entries_.erase(e);
  }
}

void NamespaceMirror::move_subtree(const std::string& src, const std::string& dst) {
  auto it = entries_.find(src);
  if (it == entries_.end()) return;
  std::vector<std::pair<std::string, bool>> moved = {{src, it->second}};
  std::string child_prefix = src + "/";
  for (auto c = entries_.lower_bound(child_prefix); c != entries_.end() && c->first.compare(0, child_prefix.size(), child_prefix) == 0; ++c) {
    moved.emplace_back(c->first, c->second);
  }
  remove_subtree(src);
  for (const auto& [p, dir] : moved) add(path::rebase(p, src, dst), dir);
}

bool NamespaceMirror::is_dir(const std::string& p) const {
  auto it = entries_.find(p);
  return it != entries_.end() && it->second;
}

const std::string* NamespaceMirror::random_file(sim::Rng& rng) const {
  if (files_.items.empty()) return nullptr;
  return &files_.items[rng.index(files_.items.size())];
}

const std::string* NamespaceMirror::random_dir(sim::Rng& rng) const {
  if (dirs_.items.empty()) return nullptr;
  return &dirs_.items[rng.index(dirs_.items.size())];
}

const std::string* NamespaceMirror::random_entry(sim::Rng& rng) const {
  std::size_t total = files_.items.size() + dirs_.items.size();
  if (total == 0) return nullptr;
  std::size_t i = rng.index(total);
  if (i < files_.items.size()) return &files_.items[i];
  return &dirs_.items[i - files_.items.size()];
}

FsOp OpPicker::pick(sim::Rng& rng, const std::function<std::string()>& fresh) const {
  return pick_kind(mix_.sample(rng), rng, fresh);
}

FsOp OpPicker::pick_kind(OpKind kind, sim::Rng& rng, const std::function<std::string()>& fresh) const {
  static const std::string kRoot = "/";
  auto dir_or_root = [&]() -> const std::string& {
    const std::string* d = mirror_.random_dir(rng);
    return d == nullptr ? kRoot : *d;
  };
  FsOp op;
  op.kind = kind;
  switch (kind) {
    case OpKind::kRead:
    case OpKind::kStat:
    case OpKind::kSetattr: {
      const std::string* f = mirror_.random_file(rng);
      op.path = f != nullptr ? *f : dir_or_root();
      break;
    }
    case OpKind::kLs:
      op.path = dir_or_root();
      break;
    case OpKind::kCreate:
    case OpKind::kMkdir:
      op.path = path::join(dir_or_root(), fresh());
      op.perms = kind == OpKind::kMkdir ? 0755 : 0644;
      break;
    case OpKind::kDelete: {
      const std::string* e = mirror_.random_entry(rng);
      if (e == nullptr) return pick_kind(OpKind::kLs, rng, fresh);
      op.path = *e;
      break;
    }
    case OpKind::kMv: {
      const std::string* e = mirror_.random_entry(rng);
      if (e == nullptr) return pick_kind(OpKind::kLs, rng, fresh);
      op.path = *e;
      const std::string* dest = nullptr;
      for (int tries = 0; tries < 8 && dest == nullptr; ++tries) {
        const std::string& cand = dir_or_root();
        if (!path::has_prefix(cand, op.path)) dest = &cand;
      }
      if (dest == nullptr) dest = &kRoot;
      op.dst = path::join(*dest, fresh());
      break;
    }
  }
  return op;
}

FailureSchedule::FailureSchedule(sim::Duration period, sim::Duration duration, int n_deployments, sim::Duration offset)
    : period_(period), duration_(duration), n_(n_deployments), offset_(offset < 0 ? period : offset) {
  if (period <= 0) throw std::invalid_argument("failure period must be positive");
  if (n_deployments < 1) throw std::invalid_argument("n_deployments must be >= 1");
}

std::vector<sim::Time> FailureSchedule::times() const {
  std::vector<sim::Time> out;
  for (sim::Time t = offset_; t <= duration_; t += period_) out.push_back(t);
  return out;
}

int FailureSchedule::next_target(const std::function<bool(int)>& has_live) {
  for (int i = 0; i < n_; ++i) {
    int d = (cursor_ + i) % n_;
    if (has_live(d)) {
      cursor_ = (d + 1) % n_;
      return d;
    }
  }
  return -1;
}

}  // namespace lfs::workload
