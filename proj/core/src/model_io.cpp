#include "pedghmm/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pedghmm/error.hpp"
#include "pedghmm/text.hpp"

namespace pedghmm {
namespace {

constexpr std::array<char, 4> kMagic{'G', 'H', 'M', 'M'};
// Guards against absurd counts in corrupt files.
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void vec(Vec2 v) {
    f64(v.x);
    f64(v.y);
  }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int k = 0; k < bytes; ++k) out_.put(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const std::string& source) : in_(in), source_(source) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::uint64_t count() {
    const std::uint64_t n = u64();
    if (n > kMaxCount) fail("implausible element count");
    return n;
  }
  double f64() { return std::bit_cast<double>(le(8)); }
  Vec2 vec() {
    const double x = f64();
    return {x, f64()};
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError(source_ + ": " + what + " at byte " + std::to_string(offset_));
  }

 private:
  std::uint64_t le(int bytes) {
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) fail("truncated model file");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * k);
      ++offset_;
    }
    return v;
  }
  std::istream& in_;
  const std::string& source_;
  std::uint64_t offset_ = 0;
};

void write_model_parts(Writer& w, const GhmmModel::Parts& p) {
  w.vec(p.bounds.min);
  w.vec(p.bounds.max);
  const LearningConfig& c = p.config;
  w.f64(c.epsilon);
  w.f64(c.sigma_obs);
  w.u64(c.dwell_threshold);
  w.f64(c.bw_learning_rate);
  w.f64(c.pi0);
  w.f64(c.a0);
  w.f64(c.prior_strength);
  w.f64(c.goal_merge_radius);
  w.u8(static_cast<std::uint8_t>(p.policy));
  w.u64(p.topology_revision);

  w.u64(p.nodes.size());
  for (const auto& [id, info] : p.nodes) {
    w.u32(id);
    w.vec(info.centroid);
    w.f64(info.cost);
    w.u64(info.neighbors.size());
    for (NodeId m : info.neighbors) w.u32(m);
  }
  w.u32(p.goals.next_id);
  w.u64(p.goals.goals.size());
  for (const Goal& g : p.goals.goals) {
    w.u32(g.id);
    w.u32(g.node);
    w.vec(g.point);
  }
  w.u64(p.states.size());
  for (const GhmmState& s : p.states) {
    w.u32(s.node);
    w.u32(s.goal);
  }
  for (double v : p.prior) w.f64(v);
  w.f64(p.prior_scale);
  w.f64(p.prior_mass);

  std::uint64_t triplets = 0;
  for (const TransitionRow& r : p.rows) {
    w.f64(r.seed_scale);
    w.f64(r.mass);
    triplets += r.entries.size();
  }
  w.u64(triplets);
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    for (const Transition& t : p.rows[i].entries) {
      w.u64(i);
      w.u64(t.to);
      w.f64(t.p);
      w.f64(t.seed);
      w.u8(t.learned ? 1 : 0);
    }
  }
}

GhmmModel::Parts read_model_parts(Reader& r) {
  GhmmModel::Parts p;
  p.bounds.min = r.vec();
  p.bounds.max = r.vec();
  LearningConfig& c = p.config;
  c.epsilon = r.f64();
  c.sigma_obs = r.f64();
  c.dwell_threshold = r.u64();
  c.bw_learning_rate = r.f64();
  c.pi0 = r.f64();
  c.a0 = r.f64();
  c.prior_strength = r.f64();
  c.goal_merge_radius = r.f64();
  const std::uint8_t policy = r.u8();
  if (policy > 1) r.fail("unknown seed policy");
  p.policy = static_cast<SeedPolicy>(policy);
  p.topology_revision = r.u64();

  const std::uint64_t nodes = r.count();
  for (std::uint64_t k = 0; k < nodes; ++k) {
    const NodeId id = r.u32();
    NodeInfo info;
    info.centroid = r.vec();
    info.cost = r.f64();
    const std::uint64_t nb = r.count();
    for (std::uint64_t q = 0; q < nb; ++q) info.neighbors.insert(r.u32());
    if (!p.nodes.emplace(id, std::move(info)).second) r.fail("duplicate node id");
  }
  p.goals.next_id = r.u32();
  const std::uint64_t goals = r.count();
  for (std::uint64_t k = 0; k < goals; ++k) {
    Goal g;
    g.id = r.u32();
    g.node = r.u32();
    g.point = r.vec();
    p.goals.goals.push_back(g);
  }
  const std::uint64_t n = r.count();
  p.states.resize(n);
  for (GhmmState& s : p.states) {
    s.node = r.u32();
    s.goal = r.u32();
  }
  p.prior.resize(n);
  for (double& v : p.prior) v = r.f64();
  p.prior_scale = r.f64();
  p.prior_mass = r.f64();
  p.rows.resize(n);
  for (TransitionRow& row : p.rows) {
    row.seed_scale = r.f64();
    row.mass = r.f64();
  }
  const std::uint64_t triplets = r.count();
  for (std::uint64_t k = 0; k < triplets; ++k) {
    const std::uint64_t from = r.u64();
    Transition t;
    t.to = r.u64();
    t.p = r.f64();
    t.seed = r.f64();
    t.learned = r.u8() != 0;
    if (from >= n) r.fail("transition from a missing state");
    p.rows[from].entries.push_back(t);
  }
  return p;
}

void write_snapshot(Writer& w, const TopologicalMap::Snapshot& s) {
  w.vec(s.bounds.min);
  w.vec(s.bounds.max);
  w.f64(s.tau);
  w.f64(s.epsilon_itm);
  w.u32(s.next_id);
  w.u64(s.revision);
  w.u32(s.run_node);
  w.u64(s.run_length);
  w.u64(s.nodes.size());
  for (const TopoNode& n : s.nodes) {
    w.u32(n.id);
    w.vec(n.centroid);
    w.u64(n.hit_count);
    w.u64(n.dwell_accumulator);
    w.u8(n.pinned ? 1 : 0);
  }
  w.u64(s.edges.size());
  for (const TopoEdge& e : s.edges) {
    w.u32(e.lo);
    w.u32(e.hi);
  }
}

TopologicalMap::Snapshot read_snapshot(Reader& r) {
  TopologicalMap::Snapshot s;
  s.bounds.min = r.vec();
  s.bounds.max = r.vec();
  s.tau = r.f64();
  s.epsilon_itm = r.f64();
  s.next_id = r.u32();
  s.revision = r.u64();
  s.run_node = r.u32();
  s.run_length = r.u64();
  const std::uint64_t nodes = r.count();
  for (std::uint64_t k = 0; k < nodes; ++k) {
    TopoNode n;
    n.id = r.u32();
    n.centroid = r.vec();
    n.hit_count = r.u64();
    n.dwell_accumulator = r.u64();
    n.pinned = r.u8() != 0;
    s.nodes.push_back(n);
  }
  const std::uint64_t edges = r.count();
  for (std::uint64_t k = 0; k < edges; ++k) {
    const NodeId a = r.u32();
    s.edges.emplace_back(a, r.u32());
  }
  return s;
}

}  // namespace

void write_bundle(std::ostream& out, const GhmmModel& model, const TopologicalMap* topology) {
  out.write(kMagic.data(), kMagic.size());
  Writer w(out);
  w.u32(kModelFormatVersion);
  write_model_parts(w, model.parts());
  w.u8(topology ? 1 : 0);
  if (topology) write_snapshot(w, topology->snapshot());
}

ModelBundle read_bundle(std::istream& in, const std::string& source) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw InputError(source + ": not a model file");
  Reader r(in, source);
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw InputError(source + ": unsupported model format version " + std::to_string(version));
  }
  ModelBundle bundle;
  bundle.model = GhmmModel::from_parts(read_model_parts(r));
  if (r.u8() != 0) bundle.topology = TopologicalMap::restore(read_snapshot(r));
  if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes");
  if (bundle.topology && bundle.topology->revision() != bundle.model.topology_revision()) {
    throw InputError(source + ": model and topology revisions differ");
  }
  return bundle;
}

void save_bundle(const std::filesystem::path& path, const GhmmModel& model, const TopologicalMap* topology) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_bundle(out, model, topology);
  if (!out) throw InputError("write failed: " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_bundle(in, path.string());
}

std::string model_bytes(const GhmmModel& model) {
  std::ostringstream out(std::ios::binary);
  write_bundle(out, model);
  return std::move(out).str();
}

void dump_model_text(const GhmmModel& model, std::ostream& out) {
  using text::format_double;
  const GhmmModel::Parts& p = model.parts();
  const LearningConfig& c = p.config;
  out << "ghmm-text " << kModelFormatVersion << '\n';
  out << "bounds " << format_double(p.bounds.min.x) << ' ' << format_double(p.bounds.min.y) << ' '
      << format_double(p.bounds.max.x) << ' ' << format_double(p.bounds.max.y) << '\n';
  out << "config epsilon=" << format_double(c.epsilon) << " sigma_obs=" << format_double(c.sigma_obs)
      << " dwell_threshold=" << c.dwell_threshold << " bw_learning_rate=" << format_double(c.bw_learning_rate)
      << " pi0=" << format_double(c.pi0) << " a0=" << format_double(c.a0)
      << " prior_strength=" << format_double(c.prior_strength)
      << " goal_merge_radius=" << format_double(c.goal_merge_radius) << '\n';
  out << "policy " << (p.policy == SeedPolicy::kCostMap ? "cost-map" : "preset") << '\n';
  out << "topology_revision " << p.topology_revision << '\n';
  for (const auto& [id, info] : p.nodes) {
    out << "node " << id << ' ' << format_double(info.centroid.x) << ' ' << format_double(info.centroid.y) << ' '
        << format_double(info.cost);
    for (NodeId m : info.neighbors) out << ' ' << m;
    out << '\n';
  }
  out << "goal_next_id " << p.goals.next_id << '\n';
  for (const Goal& g : p.goals.goals) {
    out << "goal " << g.id << ' ' << g.node << ' ' << format_double(g.point.x) << ' ' << format_double(g.point.y)
        << '\n';
  }
  out << "prior_scale " << format_double(p.prior_scale) << " prior_mass " << format_double(p.prior_mass) << '\n';
  for (std::size_t i = 0; i < p.states.size(); ++i) {
    const TransitionRow& row = p.rows[i];
    out << "state " << i << ' ' << p.states[i].node << ' ' << p.states[i].goal << " pi " << format_double(p.prior[i])
        << " seed_scale " << format_double(row.seed_scale) << " mass " << format_double(row.mass) << '\n';
    for (const Transition& t : row.entries) {
      out << "  a " << i << ' ' << t.to << ' ' << format_double(t.p) << " seed " << format_double(t.seed)
          << (t.learned ? " learned" : "") << '\n';
    }
  }
}

std::string model_text(const GhmmModel& model) {
  std::ostringstream out;
  dump_model_text(model, out);
  return std::move(out).str();
}

}  // namespace pedghmm
