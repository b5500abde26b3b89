#include "hopgnn/gnn.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "hopgnn/cost_model.hpp"
#include "hopgnn/rng.hpp"

namespace hopgnn {

namespace {

// Per-dst neighbor ranges of one micrograph layer.
struct LayerAdjacency {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> sources;

  LayerAdjacency(std::span<const LayerEdge> edges, std::size_t n_dst) : offsets(n_dst + 1, 0) {
    for (const auto& e : edges) ++offsets[e.dst + 1];
    for (std::size_t i = 0; i < n_dst; ++i) offsets[i + 1] += offsets[i];
    sources.resize(edges.size());
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& e : edges) sources[cursor[e.dst]++] = e.src;
  }

  std::size_t degree(std::size_t i) const { return offsets[i + 1] - offsets[i]; }
  std::span<const std::uint32_t> of(std::size_t i) const {
    return {sources.data() + offsets[i], degree(i)};
  }
};

Eigen::MatrixXd aggregate(Arch arch, const Eigen::MatrixXd& prev, const LayerAdjacency& adj,
                          std::size_t n_dst) {
  const Eigen::Index in = prev.cols();
  if (arch == Arch::Gcn) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_dst), in);
    for (std::size_t i = 0; i < n_dst; ++i) {
      Eigen::RowVectorXd acc = prev.row(static_cast<Eigen::Index>(i));
      for (auto s : adj.of(i)) acc += prev.row(s);
      out.row(static_cast<Eigen::Index>(i)) = acc / static_cast<double>(adj.degree(i) + 1);
    }
    return out;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_dst), 2 * in);
  for (std::size_t i = 0; i < n_dst; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out.row(row).head(in) = prev.row(row);
    if (adj.degree(i) == 0) {
      out.row(row).tail(in) = prev.row(row);
    } else {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(in);
      for (auto s : adj.of(i)) acc += prev.row(s);
      out.row(row).tail(in) = acc / static_cast<double>(adj.degree(i));
    }
  }
  return out;
}

// Scatters d(agg) back onto d(prev).
void aggregate_backward(Arch arch, const Eigen::MatrixXd& d_agg, const LayerAdjacency& adj,
                        Eigen::MatrixXd& d_prev) {
  const Eigen::Index in = d_prev.cols();
  for (Eigen::Index i = 0; i < d_agg.rows(); ++i) {
    const auto deg = adj.degree(static_cast<std::size_t>(i));
    if (arch == Arch::Gcn) {
      const Eigen::RowVectorXd share = d_agg.row(i) / static_cast<double>(deg + 1);
      d_prev.row(i) += share;
      for (auto s : adj.of(static_cast<std::size_t>(i))) d_prev.row(s) += share;
    } else {
      d_prev.row(i) += d_agg.row(i).head(in);
      if (deg == 0) {
        d_prev.row(i) += d_agg.row(i).tail(in);
      } else {
        const Eigen::RowVectorXd share = d_agg.row(i).tail(in) / static_cast<double>(deg);
        for (auto s : adj.of(static_cast<std::size_t>(i))) d_prev.row(s) += share;
      }
    }
  }
}

void fill_uniform(Eigen::MatrixXd& m, double limit, CounterRng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = limit * (2.0 * rng.uniform() - 1.0);
}

}  // namespace

std::size_t ModelDims::weight_rows(std::size_t k) const {
  const std::size_t in = k == 1 ? in_dim : hidden;
  return arch == Arch::SageMean ? 2 * in : in;
}

std::size_t ModelDims::param_count() const {
  std::size_t total = hidden * n_classes;
  for (std::size_t k = 1; k <= n_layers; ++k) total += weight_rows(k) * hidden + hidden;
  return total;
}

Parameters Parameters::init(const ModelDims& dims, std::uint64_t seed) {
  if (dims.in_dim == 0 || dims.hidden == 0 || dims.n_layers == 0 || dims.n_classes < 2)
    throw std::invalid_argument("model dims must be positive with at least two classes");
  Parameters p;
  p.arch = dims.arch;
  for (std::size_t k = 1; k <= dims.n_layers; ++k) {
    DenseLayer layer;
    const auto rows = static_cast<Eigen::Index>(dims.weight_rows(k));
    const auto cols = static_cast<Eigen::Index>(dims.hidden);
    layer.weight.resize(rows, cols);
    layer.bias.resize(cols);
    CounterRng rng({seed, 0x77, k});
    fill_uniform(layer.weight, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
    for (Eigen::Index j = 0; j < cols; ++j) layer.bias(j) = 0.1 * (2.0 * rng.uniform() - 1.0);
    p.layers.push_back(std::move(layer));
  }
  p.classifier.resize(static_cast<Eigen::Index>(dims.hidden), static_cast<Eigen::Index>(dims.n_classes));
  CounterRng rng({seed, 0x77, 0});
  fill_uniform(p.classifier,
               std::sqrt(6.0 / static_cast<double>(dims.hidden + dims.n_classes)), rng);
  return p;
}

Parameters Parameters::zeros_like(const Parameters& shape) {
  Parameters p;
  p.arch = shape.arch;
  for (const auto& l : shape.layers)
    p.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  p.classifier = Eigen::MatrixXd::Zero(shape.classifier.rows(), shape.classifier.cols());
  return p;
}

ModelDims Parameters::dims() const {
  ModelDims d;
  d.arch = arch;
  d.n_layers = layers.size();
  d.hidden = static_cast<std::size_t>(classifier.rows());
  d.n_classes = static_cast<std::size_t>(classifier.cols());
  const auto rows = static_cast<std::size_t>(layers.front().weight.rows());
  d.in_dim = arch == Arch::SageMean ? rows / 2 : rows;
  return d;
}

std::size_t Parameters::param_count() const {
  auto total = static_cast<std::size_t>(classifier.size());
  for (const auto& l : layers) total += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return total;
}

bool Parameters::same_shape(const Parameters& other) const {
  if (arch != other.arch || layers.size() != other.layers.size()) return false;
  if (classifier.rows() != other.classifier.rows() || classifier.cols() != other.classifier.cols())
    return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& a = layers[k];
    const auto& b = other.layers[k];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size())
      return false;
  }
  return true;
}

void Parameters::add_scaled(const Parameters& other, double scale) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += scale * other.layers[k].weight;
    layers[k].bias += scale * other.layers[k].bias;
  }
  classifier += scale * other.classifier;
}

std::vector<double> Parameters::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    for (Eigen::Index j = 0; j < l.bias.size(); ++j) out.push_back(l.bias(j));
  }
  for (Eigen::Index r = 0; r < classifier.rows(); ++r)
    for (Eigen::Index c = 0; c < classifier.cols(); ++c) out.push_back(classifier(r, c));
  return out;
}

bool operator==(const Parameters& a, const Parameters& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t k = 0; k < a.layers.size(); ++k)
    if (a.layers[k].weight != b.layers[k].weight || a.layers[k].bias != b.layers[k].bias) return false;
  return a.classifier == b.classifier;
}

std::size_t LabelOracle::label(VertexId v) const {
  return static_cast<std::size_t>(mix64(hash_words({seed, 0x1abe1}), v) % n_classes);
}

ForwardCache forward(const Micrograph& m, const Eigen::MatrixXd& inputs, const ModelState& model) {
  const std::size_t L = m.num_layers();
  if (L != model.layers.size())
    throw std::invalid_argument("forward: micrograph depth does not match model depth");
  if (static_cast<std::size_t>(inputs.rows()) != m.num_vertices())
    throw std::invalid_argument("forward: missing feature rows for micrograph vertices");
  const auto expected_in = model.arch == Arch::SageMean ? model.layers[0].weight.rows() / 2
                                                       : model.layers[0].weight.rows();
  if (inputs.cols() != expected_in) throw std::invalid_argument("forward: feature width mismatch");

  ForwardCache cache;
  cache.h.resize(L + 1);
  cache.agg.resize(L + 1);
  cache.pre.resize(L + 1);
  cache.h[0] = inputs;
  for (std::size_t k = 1; k <= L; ++k) {
    const std::size_t n_dst = m.layers[k].size();
    LayerAdjacency adj(m.edges[k], n_dst);
    const auto& layer = model.layers[k - 1];
    cache.agg[k] = aggregate(model.arch, cache.h[k - 1], adj, n_dst);
    cache.pre[k] = cache.agg[k] * layer.weight;
    cache.pre[k].rowwise() += layer.bias.transpose();
    cache.h[k] = cache.pre[k].cwiseMax(0.0);
  }
  cache.logits = cache.h[L].row(0) * model.classifier;
  return cache;
}

LossGrad loss_and_backward(const Micrograph& m, const ForwardCache& cache, std::size_t label,
                           const ModelState& model) {
  const std::size_t L = m.num_layers();
  const Eigen::RowVectorXd& z = cache.logits;
  if (label >= static_cast<std::size_t>(z.size())) throw std::invalid_argument("label out of range");

  const double zmax = z.maxCoeff();
  Eigen::RowVectorXd prob = (z.array() - zmax).exp();
  const double denom = prob.sum();
  prob /= denom;

  LossGrad out;
  out.loss = std::log(denom) + zmax - z(static_cast<Eigen::Index>(label));
  out.grad = Parameters::zeros_like(model);

  Eigen::RowVectorXd d_logits = prob;
  d_logits(static_cast<Eigen::Index>(label)) -= 1.0;
  out.grad.classifier = cache.h[L].row(0).transpose() * d_logits;

  Eigen::MatrixXd d_h = Eigen::MatrixXd::Zero(cache.h[L].rows(), cache.h[L].cols());
  d_h.row(0) = d_logits * model.classifier.transpose();
  for (std::size_t k = L; k >= 1; --k) {
    const auto& layer = model.layers[k - 1];
    const Eigen::MatrixXd d_pre = d_h.cwiseProduct((cache.pre[k].array() > 0.0).cast<double>().matrix());
    out.grad.layers[k - 1].weight = cache.agg[k].transpose() * d_pre;
    out.grad.layers[k - 1].bias = d_pre.colwise().sum().transpose();
    if (k == 1) break;
    const Eigen::MatrixXd d_agg = d_pre * layer.weight.transpose();
    Eigen::MatrixXd d_prev = Eigen::MatrixXd::Zero(cache.h[k - 1].rows(), cache.h[k - 1].cols());
    aggregate_backward(model.arch, d_agg, LayerAdjacency(m.edges[k], m.layers[k].size()), d_prev);
    d_h = std::move(d_prev);
  }
  return out;
}

GradAccumulator GradAccumulator::for_model(ModelId owner, const ModelState& model) {
  return {owner, Parameters::zeros_like(model), 0};
}

void GradAccumulator::reset() {
  sum = Parameters::zeros_like(sum);
  count = 0;
}

void accumulate(GradAccumulator& acc, const Gradient& g) {
  if (!acc.sum.same_shape(g)) throw std::invalid_argument("accumulate: gradient shape mismatch");
  acc.sum.add_scaled(g, 1.0);
  ++acc.count;
}

void sync_and_update(std::span<ModelState> models, std::span<GradAccumulator> accs, double lr,
                     CommLedger* ledger) {
  if (models.empty()) return;
  if (accs.size() != models.size())
    throw std::invalid_argument("sync_and_update: one accumulator per model required");
  for (std::size_t d = 1; d < models.size(); ++d)
    if (!(models[d] == models[0]))
      throw InvariantViolation("sync_and_update: replicas diverged before synchronization");

  Gradient global = Parameters::zeros_like(models[0]);
  std::size_t active = 0;
  for (const auto& acc : accs)
    if (!acc.sum.same_shape(global)) throw std::invalid_argument("sync_and_update: shape mismatch");
  for (const auto& acc : accs) {
    if (acc.count == 0) continue;
    global.add_scaled(acc.sum, 1.0 / static_cast<double>(acc.count));
    ++active;
  }
  if (ledger) record_ring_allreduce(*ledger, models.size(), models[0].dims().param_bytes());
  if (active > 0) {
    const double step = -lr / static_cast<double>(active);
    for (auto& model : models) model.add_scaled(global, step);
  }
  for (auto& acc : accs) acc.reset();
}

void write_parameters(std::ostream& out, const ModelState& model) {
  char buf[40];
  auto dump = [&](const char* name, std::size_t idx, const Eigen::MatrixXd& m) {
    out << name << idx << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
  };
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    dump("weight", k + 1, model.layers[k].weight);
    dump("bias", k + 1, Eigen::MatrixXd(model.layers[k].bias.transpose()));
  }
  dump("classifier", 0, model.classifier);
}

}  // namespace hopgnn
