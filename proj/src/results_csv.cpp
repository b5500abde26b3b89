#include "hopgnn/results_csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

namespace hopgnn {

namespace {

void put(std::string& out, double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, ptr);
}

template <class T>
T parse_field(std::string_view s, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError(line, "bad numeric field '" + std::string(s) + "'");
  return value;
}

}  // namespace

ResultRow ResultRow::from_epoch(const EpochMetrics& m) {
  ResultRow r;
  r.epoch = m.epoch;
  r.strategy = m.strategy;
  r.sim_seconds = m.sim_seconds;
  r.steps = m.steps;
  r.feature_bytes = m.bytes(Category::Feature);
  r.model_bytes = m.bytes(Category::Model);
  r.gradient_bytes = m.bytes(Category::Gradient);
  r.intermediate_bytes = m.bytes(Category::Intermediate);
  r.topology_bytes = m.bytes(Category::Topology);
  r.miss_rate = m.fetch.miss_rate();
  r.alpha = m.alpha;
  r.imbalance = m.imbalance;
  return r;
}

ResultRow ResultRow::aggregate(std::span<const EpochMetrics> epochs, const ModelDims& dims) {
  ResultRow r;
  r.epoch = epochs.size();
  FetchStats fetch;
  std::size_t iterations = 0;
  for (const auto& m : epochs) {
    r.strategy = m.strategy;
    r.sim_seconds += m.sim_seconds;
    r.steps += m.steps;
    r.feature_bytes += m.bytes(Category::Feature);
    r.model_bytes += m.bytes(Category::Model);
    r.gradient_bytes += m.bytes(Category::Gradient);
    r.intermediate_bytes += m.bytes(Category::Intermediate);
    r.topology_bytes += m.bytes(Category::Topology);
    r.imbalance += m.imbalance;
    fetch += m.fetch;
    iterations += m.iterations;
  }
  if (!epochs.empty()) r.imbalance /= static_cast<double>(epochs.size());
  r.miss_rate = fetch.miss_rate();
  if (iterations > 0)
    r.alpha = alpha_ratio(static_cast<double>(r.feature_bytes) / static_cast<double>(iterations), dims);
  return r;
}

std::string format_result_row(const ResultRow& r) {
  std::string out = std::to_string(r.epoch) + ',' + r.strategy + ',';
  put(out, r.sim_seconds);
  out += ',' + std::to_string(r.steps) + ',' + std::to_string(r.feature_bytes) + ',' +
         std::to_string(r.model_bytes) + ',' + std::to_string(r.gradient_bytes) + ',' +
         std::to_string(r.intermediate_bytes) + ',' + std::to_string(r.topology_bytes) + ',';
  put(out, r.miss_rate);
  out += ',';
  put(out, r.alpha);
  out += ',';
  put(out, r.imbalance);
  return out;
}

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) out << format_result_row(r) << '\n';
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kResultsHeader) throw ParseError(1, "unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view s = line;
    while (true) {
      const auto comma = s.find(',');
      f.push_back(s.substr(0, comma));
      if (comma == std::string_view::npos) break;
      s.remove_prefix(comma + 1);
    }
    if (f.size() != 12) throw ParseError(line_no, "expected 12 fields");
    ResultRow r;
    r.epoch = parse_field<std::size_t>(f[0], line_no);
    r.strategy = f[1];
    r.sim_seconds = parse_field<double>(f[2], line_no);
    r.steps = parse_field<std::size_t>(f[3], line_no);
    r.feature_bytes = parse_field<std::uint64_t>(f[4], line_no);
    r.model_bytes = parse_field<std::uint64_t>(f[5], line_no);
    r.gradient_bytes = parse_field<std::uint64_t>(f[6], line_no);
    r.intermediate_bytes = parse_field<std::uint64_t>(f[7], line_no);
    r.topology_bytes = parse_field<std::uint64_t>(f[8], line_no);
    r.miss_rate = parse_field<double>(f[9], line_no);
    r.alpha = parse_field<double>(f[10], line_no);
    r.imbalance = parse_field<double>(f[11], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace hopgnn
