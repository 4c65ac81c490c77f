#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace pagan::harness {

enum class Event { None, LevelUp, LrDecay, WarmupStart, WarmupEnd };

std::string event_name(Event e);
Event parse_event(const std::string& name);

struct MetricsRecord {
  long iteration = 0;
  std::size_t level = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double kid = 0.0;
  double frechet = 0.0;
  double lr_d = 0.0;
  Event event = Event::None;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline constexpr const char* kMetricsHeader = "iteration,level,d_loss,g_loss,kid,frechet,lr_d,event";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kSummaryFile = "summary.json";

// Shortest round-trip decimal form; independent of the global locale.
std::string format_number(double v);
std::string format_row(const MetricsRecord& r);

// Appends rows as they are produced; the header is written on open.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void append(const MetricsRecord& r);

 private:
  std::unique_ptr<std::ofstream> out_;
};

// Throws std::runtime_error on a missing file, a bad header, a row that is
// not newline-terminated, a malformed field or non-increasing iterations.
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Validates run_dir/metrics.csv and writes it to `out` in canonical form.
void emit_metrics(const std::filesystem::path& run_dir, std::ostream& out);

}  // namespace pagan::harness
