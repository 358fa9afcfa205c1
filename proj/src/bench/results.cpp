#include "pft/bench/results.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <map>
#include <filesystem>
#include <sstream>

#include "pft/core/binary_io.hpp"
#include "pft/core/error.hpp"

namespace pft::bench {

namespace {

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const char* column) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError(std::string("bad number '") + s + "' in column " + column);
  }
  return x;
}

std::uint64_t parse_u64(const std::string& s, const char* column) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw FormatError(std::string("bad integer '") + s + "' in column " + column);
  }
  return x;
}

std::optional<double> parse_optional(const std::string& s, const char* column) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, column);
}

class FileLock {
 public:
  explicit FileLock(const std::string& path) : fd_(::open(path.c_str(), O_RDWR | O_CREAT, 0644)) {
    if (fd_ < 0) throw Error("cannot open lock file " + path);
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error("cannot lock " + path);
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_;
};

}  // namespace

std::string ResultRow::cell_key() const {
  return method + "|" + env + "|" + teacher + "|" + std::to_string(budget) + "|" + std::to_string(offline_episodes) +
         "|" + format_optional(beta) + "|" + batch_ratio + "|" + std::to_string(seed);
}

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> columns{
      "method",         "env",          "teacher", "budget",         "offline_episodes",
      "offline_fraction", "beta",       "batch_ratio", "seed",       "success_rate",
      "stderr",         "gradient_steps", "episodes_offline_used", "episodes_online_used", "stochastic_success_rate"};
  return columns;
}

std::string results_header() {
  std::string out;
  for (const auto& c : result_columns()) out += (out.empty() ? "" : ",") + c;
  return out;
}

std::string format_row(const ResultRow& r) {
  std::ostringstream out;
  out << r.method << ',' << r.env << ',' << r.teacher << ',' << r.budget << ',' << r.offline_episodes << ','
      << format_optional(r.offline_fraction) << ',' << format_optional(r.beta) << ',' << r.batch_ratio << ','
      << r.seed << ',' << format_double(r.success_rate) << ',' << format_double(r.stderr_) << ','
      << r.gradient_steps << ',' << r.episodes_offline_used << ',' << r.episodes_online_used << ','
      << format_double(r.stochastic_success_rate);
  return out.str();
}

ResultRow parse_row(const std::string& line) {
  const auto f = split(line);
  if (f.size() != result_columns().size()) {
    throw FormatError("results row has " + std::to_string(f.size()) + " fields, expected " +
                      std::to_string(result_columns().size()));
  }
  ResultRow r;
  r.method = f[0];
  r.env = f[1];
  r.teacher = f[2];
  r.budget = parse_u64(f[3], "budget");
  r.offline_episodes = parse_u64(f[4], "offline_episodes");
  r.offline_fraction = parse_optional(f[5], "offline_fraction");
  r.beta = parse_optional(f[6], "beta");
  r.batch_ratio = f[7];
  r.seed = parse_u64(f[8], "seed");
  r.success_rate = parse_double(f[9], "success_rate");
  r.stderr_ = parse_double(f[10], "stderr");
  r.gradient_steps = parse_u64(f[11], "gradient_steps");
  r.episodes_offline_used = parse_u64(f[12], "episodes_offline_used");
  r.episodes_online_used = parse_u64(f[13], "episodes_online_used");
  r.stochastic_success_rate = parse_double(f[14], "stochastic_success_rate");
  return r;
}

std::vector<ResultRow> read_results(const std::string& path) {
  if (!std::filesystem::exists(path)) return {};
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != results_header()) throw FormatError(path + " does not have the results header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_row(line));
  }
  return rows;
}

void append_result(const std::string& path, const ResultRow& row) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  FileLock lock(path + ".lock");
  std::string contents = std::filesystem::exists(path) ? read_file(path) : std::string();
  if (contents.empty()) {
    contents = results_header() + "\n";
  } else if (contents.compare(0, results_header().size() + 1, results_header() + "\n") != 0) {
    throw FormatError(path + " does not have the results header");
  } else if (contents.back() != '\n') {
    contents += '\n';
  }
  contents += format_row(row) + "\n";
  write_file_atomic(path, contents);
}

std::vector<AggregateRow> aggregate_results(const std::vector<ResultRow>& rows, bool best_fraction) {
  std::vector<AggregateRow> groups;
  std::vector<std::vector<const ResultRow*>> members;
  std::map<std::string, std::size_t> index;
  for (const ResultRow& r : rows) {
    const std::string key = r.method + "|" + r.env + "|" + r.teacher + "|" + std::to_string(r.budget) + "|" +
                            format_optional(r.offline_fraction) + "|" + format_optional(r.beta) + "|" + r.batch_ratio;
    auto [it, fresh] = index.emplace(key, groups.size());
    if (fresh) {
      AggregateRow g;
      g.method = r.method;
      g.env = r.env;
      g.teacher = r.teacher;
      g.budget = r.budget;
      g.offline_fraction = r.offline_fraction;
      g.beta = r.beta;
      g.batch_ratio = r.batch_ratio;
      groups.push_back(g);
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& m = members[i];
    const double n = static_cast<double>(m.size());
    double sum = 0.0, sto = 0.0;
    for (const ResultRow* r : m) {
      sum += r->success_rate;
      sto += r->stochastic_success_rate;
    }
    groups[i].seeds = m.size();
    groups[i].mean = sum / n;
    groups[i].stochastic_mean = sto / n;
    double ss = 0.0;
    for (const ResultRow* r : m) ss += (r->success_rate - groups[i].mean) * (r->success_rate - groups[i].mean);
    groups[i].stderr_ = m.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
  if (!best_fraction) return groups;

  std::vector<AggregateRow> best;
  std::map<std::string, std::size_t> slot;
  for (const AggregateRow& g : groups) {
    const std::string key = g.method + "|" + g.env + "|" + g.teacher + "|" + std::to_string(g.budget) + "|" +
                            format_optional(g.beta) + "|" + g.batch_ratio;
    auto [it, fresh] = slot.emplace(key, best.size());
    if (fresh) {
      best.push_back(g);
    } else if (g.mean > best[it->second].mean) {
      best[it->second] = g;
    }
  }
  return best;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "method,env,teacher,budget,offline_fraction,beta,batch_ratio,seeds,mean,stderr,stochastic_mean\n";
  for (const AggregateRow& g : rows) {
    out << g.method << ',' << g.env << ',' << g.teacher << ',' << g.budget << ',' << format_optional(g.offline_fraction)
        << ',' << format_optional(g.beta) << ',' << g.batch_ratio << ',' << g.seeds << ',' << format_double(g.mean)
        << ',' << format_double(g.stderr_) << ',' << format_double(g.stochastic_mean) << '\n';
  }
  return out.str();
}

}  // namespace pft::bench
