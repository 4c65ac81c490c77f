#include "pagan/harness/metrics_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pagan::harness {

std::string event_name(Event e) {
  switch (e) {
    case Event::None: return "none";
    case Event::LevelUp: return "level_up";
    case Event::LrDecay: return "lr_decay";
    case Event::WarmupStart: return "warmup_start";
    case Event::WarmupEnd: return "warmup_end";
  }
  return "none";
}

Event parse_event(const std::string& name) {
  for (Event e : {Event::None, Event::LevelUp, Event::LrDecay, Event::WarmupStart, Event::WarmupEnd})
    if (event_name(e) == name) return e;
  throw std::runtime_error("unknown event '" + name + "'");
}

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, p);
}

std::string format_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.iteration) + ',' + std::to_string(r.level) + ',' + format_number(r.d_loss) + ',' +
                    format_number(r.g_loss) + ',' + format_number(r.kid) + ',' + format_number(r.frechet) + ',' +
                    format_number(r.lr_d) + ',' + event_name(r.event);
  return row;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path)
    : out_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc)) {
  if (!*out_) throw std::runtime_error("cannot write " + path.string());
  *out_ << kMetricsHeader << '\n';
  out_->flush();
}

MetricsWriter::~MetricsWriter() = default;

void MetricsWriter::append(const MetricsRecord& r) {
  *out_ << format_row(r) << '\n';
  out_->flush();
}

namespace {

template <typename T>
T parse_int(const std::string& s, int line) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error("metrics line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, int line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::runtime_error("metrics line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing run data: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.empty() || text.back() != '\n') throw std::runtime_error("truncated run data: " + path.string());

  std::vector<MetricsRecord> records;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kMetricsHeader) throw std::runtime_error("unexpected metrics header in " + path.string());
      continue;
    }
    std::vector<std::string> f;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw std::runtime_error("metrics line " + std::to_string(lineno) + ": expected 8 fields");
    MetricsRecord r;
    r.iteration = parse_int<long>(f[0], lineno);
    r.level = parse_int<std::size_t>(f[1], lineno);
    r.d_loss = parse_real(f[2], lineno);
    r.g_loss = parse_real(f[3], lineno);
    r.kid = parse_real(f[4], lineno);
    r.frechet = parse_real(f[5], lineno);
    r.lr_d = parse_real(f[6], lineno);
    r.event = parse_event(f[7]);
    if (!records.empty() && r.iteration <= records.back().iteration) {
      throw std::runtime_error("metrics line " + std::to_string(lineno) + ": iterations must increase");
    }
    records.push_back(r);
  }
  return records;
}

void emit_metrics(const std::filesystem::path& run_dir, std::ostream& out) {
  if (!std::filesystem::is_directory(run_dir)) throw std::runtime_error("run directory not found: " + run_dir.string());
  const auto records = read_metrics_csv(run_dir / kMetricsFile);
  out << kMetricsHeader << '\n';
  for (const auto& r : records) out << format_row(r) << '\n';
}

}  // namespace pagan::harness
