#include "hopgnn/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "hopgnn/rng.hpp"

namespace hopgnn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr char kCsrMagic[4] = {'C', 'S', 'R', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("CSR1: truncated stream");
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Parses one signed integer token; advances `s` past it.
bool next_int(std::string_view& s, long long& value) {
  s = trim(s);
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || (ptr != end && *ptr != ' ' && *ptr != '\t')) return false;
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return true;
}

}  // namespace

Graph Graph::from_edges(std::size_t n_vertices,
                        std::span<const std::pair<VertexId, VertexId>> edges, bool symmetrize) {
  if (n_vertices > std::numeric_limits<VertexId>::max())
    throw std::invalid_argument("graph too large for 32-bit vertex ids");
  std::vector<std::pair<VertexId, VertexId>> all;
  all.reserve(symmetrize ? 2 * edges.size() : edges.size());
  for (auto [u, v] : edges) {
    if (u >= n_vertices || v >= n_vertices) throw std::out_of_range("edge endpoint out of range");
    if (u == v) continue;
    all.emplace_back(u, v);
    if (symmetrize) all.emplace_back(v, u);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  Graph g;
  g.offsets_.assign(n_vertices + 1, 0);
  g.targets_.reserve(all.size());
  for (auto [u, v] : all) {
    ++g.offsets_[u + 1];
    g.targets_.push_back(v);
  }
  for (std::size_t i = 0; i < n_vertices; ++i) g.offsets_[i + 1] += g.offsets_[i];
  return g;
}

Graph Graph::from_csr(std::vector<std::uint64_t> offsets, std::vector<VertexId> targets) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != targets.size())
    throw FormatError("CSR offsets do not frame the target array");
  const std::size_t n = offsets.size() - 1;
  for (std::size_t v = 0; v < n; ++v) {
    if (offsets[v] > offsets[v + 1]) throw FormatError("CSR offsets decrease");
    for (std::uint64_t i = offsets[v]; i < offsets[v + 1]; ++i) {
      if (targets[i] >= n) throw FormatError("CSR target out of range");
      if (i > offsets[v] && targets[i - 1] >= targets[i])
        throw FormatError("CSR neighbor range not strictly increasing");
    }
  }
  Graph g;
  g.offsets_ = std::move(offsets);
  g.targets_ = std::move(targets);
  return g;
}

std::size_t Graph::num_undirected_edges() const {
  std::size_t count = 0;
  for (VertexId u = 0; u < num_vertices(); ++u)
    for (VertexId v : neighbors(u))
      if (u <= v) ++count;
  return count;
}

bool Graph::has_edge(VertexId u, VertexId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

Graph Graph::add_self_loops() const {
  Graph g;
  const std::size_t n = num_vertices();
  g.offsets_.assign(n + 1, 0);
  g.targets_.reserve(targets_.size() + n);
  for (VertexId u = 0; u < n; ++u) {
    auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), u);
    g.targets_.insert(g.targets_.end(), nb.begin(), it);
    if (it == nb.end() || *it != u) g.targets_.push_back(u);
    g.targets_.insert(g.targets_.end(), it, nb.end());
    g.offsets_[u + 1] = g.targets_.size();
  }
  return g;
}

Graph load_edge_list(std::istream& in, std::optional<std::size_t> declared_vertices) {
  std::vector<std::pair<VertexId, VertexId>> edges;
  std::optional<std::size_t> declared = declared_vertices;
  std::size_t max_id_plus_one = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      constexpr std::string_view kDirective = "vertices";
      std::string_view body = trim(s.substr(1));
      if (!declared_vertices && body.starts_with(kDirective)) {
        body.remove_prefix(kDirective.size());
        long long n = 0;
        if (!next_int(body, n) || n < 0 || !trim(body).empty())
          throw ParseError(line_no, "malformed vertex-count directive");
        declared = static_cast<std::size_t>(n);
      }
      continue;
    }
    long long u = 0;
    long long v = 0;
    if (!next_int(s, u) || !next_int(s, v) || !trim(s).empty())
      throw ParseError(line_no, "expected two integer vertex ids");
    if (u < 0 || v < 0)
      throw std::out_of_range("line " + std::to_string(line_no) + ": negative vertex id");
    const auto hi = static_cast<std::size_t>(std::max(u, v));
    if (hi >= std::numeric_limits<VertexId>::max())
      throw std::out_of_range("line " + std::to_string(line_no) + ": vertex id too large");
    if (declared && hi >= *declared)
      throw std::out_of_range("line " + std::to_string(line_no) + ": vertex id " +
                              std::to_string(hi) + " >= declared count " +
                              std::to_string(*declared));
    max_id_plus_one = std::max(max_id_plus_one, hi + 1);
    edges.emplace_back(static_cast<VertexId>(u), static_cast<VertexId>(v));
  }
  return Graph::from_edges(declared.value_or(max_id_plus_one), edges, true);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# vertices " << g.num_vertices() << '\n';
  for (VertexId u = 0; u < g.num_vertices(); ++u)
    for (VertexId v : g.neighbors(u))
      if (u < v) out << u << ' ' << v << '\n';
}

void write_csr_binary(std::ostream& out, const Graph& g) {
  out.write(kCsrMagic, sizeof kCsrMagic);
  write_u64(out, g.num_vertices());
  write_u64(out, g.num_entries());
  for (std::uint64_t o : g.offsets()) write_u64(out, o);
  for (VertexId t : g.targets()) write_u64(out, t);
}

Graph read_csr_binary(std::istream& in) {
  char magic[4] = {};
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 4, kCsrMagic))
    throw FormatError("CSR1: bad magic");
  const std::uint64_t n = read_u64(in);
  const std::uint64_t m = read_u64(in);
  if (n >= std::numeric_limits<VertexId>::max()) throw FormatError("CSR1: vertex count too large");
  std::vector<std::uint64_t> offsets(n + 1);
  for (auto& o : offsets) o = read_u64(in);
  std::vector<VertexId> targets(m);
  for (auto& t : targets) {
    const std::uint64_t raw = read_u64(in);
    if (raw >= n) throw FormatError("CSR1: target out of range");
    t = static_cast<VertexId>(raw);
  }
  return Graph::from_csr(std::move(offsets), std::move(targets));
}

Graph generate_sbm(const SbmSpec& spec) {
  std::size_t n = 0;
  for (std::size_t b : spec.block_sizes) {
    if (b == 0) throw std::invalid_argument("SBM block sizes must be >= 1");
    n += b;
  }
  if (n == 0) throw std::invalid_argument("SBM spec has no vertices");
  if (!(0.0 <= spec.p_out && spec.p_out <= spec.p_in && spec.p_in <= 1.0))
    throw std::invalid_argument("SBM requires 0 <= p_out <= p_in <= 1");

  std::vector<std::uint32_t> block(n);
  for (std::size_t b = 0, v = 0; b < spec.block_sizes.size(); ++b)
    for (std::size_t i = 0; i < spec.block_sizes[b]; ++i) block[v++] = static_cast<std::uint32_t>(b);

  const std::uint64_t key = hash_words({spec.seed, 0x5b3d});
  std::vector<std::pair<VertexId, VertexId>> edges;
  for (VertexId u = 0; u < n; ++u) {
    const std::uint64_t row_key = mix64(key, u);
    for (VertexId v = u + 1; v < n; ++v) {
      const double p = block[u] == block[v] ? spec.p_in : spec.p_out;
      if (p > 0.0 && to_unit(mix64(row_key, v)) < p) edges.emplace_back(u, v);
    }
  }
  return Graph::from_edges(n, edges, true);
}

}  // namespace hopgnn
