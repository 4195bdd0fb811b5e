#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "csv.hpp"
#include "model.hpp"

namespace hawkes_agg {

// Loads an event log (timestamp column + process label column) as binned
// counts, or as exact event times when the log has no within-process ties.
struct IngestOptions {
  std::string name = "input";       // label for error messages
  std::string time_col = "time";
  std::string label_col = "process";
  bool events_mode = false;
  // Zero / NaN / empty mean: take the value from the file metadata if present,
  // otherwise derive it from the data (see resolve rules below).
  double delta = 0.0;
  double origin = std::numeric_limits<double>::quiet_NaN();
  double horizon = 0.0;
  std::vector<std::string> labels;  // explicit process order
};

struct IngestResult {
  bool is_events = false;
  BinnedCounts counts;              // counts mode
  EventSequence events;             // events mode
  std::vector<std::string> labels;  // process index -> label
  double origin = 0.0;
  double delta = 0.0;
};

// Resolve rules: delta/origin/horizon fall back to file metadata, then to the
// data: origin snaps to the largest grid multiple at or below the first
// timestamp (counts mode; zero in events mode for nonnegative data), and the
// horizon extends to cover the last timestamp. Labels fall back to metadata,
// then to first-seen order. Unparseable rows and labels outside an explicit
// list are fatal, reported in aggregate.
inline IngestResult ingest_events(const CsvFile& file, const IngestOptions& opt) {
  const std::size_t tcol = column_index(file, opt.time_col);
  const std::size_t lcol = column_index(file, opt.label_col);

  double delta = opt.delta;
  if (!(delta > 0.0) && has_key(file.metadata, "delta"))
    delta = get_double(file.metadata, "delta", 0.0);
  double origin = opt.origin;
  if (std::isnan(origin) && has_key(file.metadata, "origin"))
    origin = get_double(file.metadata, "origin", 0.0);
  double horizon = opt.horizon;
  if (!(horizon > 0.0) && has_key(file.metadata, "horizon"))
    horizon = get_double(file.metadata, "horizon", 0.0);
  std::vector<std::string> labels = opt.labels;
  if (labels.empty()) labels = get_list(file.metadata, "labels");
  const bool labels_pinned = !labels.empty();
  if (!opt.events_mode && !(delta > 0.0))
    throw std::invalid_argument(opt.name + ": delta is required to bin counts");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;

  std::vector<double> times;
  std::vector<std::size_t> procs;
  times.reserve(file.rows.size());
  procs.reserve(file.rows.size());
  std::size_t bad = 0;
  std::string first_bad;
  std::set<std::string> unknown;
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto line = [&] {
      return r < file.row_lines.size() ? std::to_string(file.row_lines[r])
                                       : std::to_string(r + 2);
    };
    const std::string& label = file.rows[r][lcol];
    double t = 0.0;
    try {
      t = parse_double(file.rows[r][tcol], "time");
    } catch (const std::invalid_argument&) {
      if (bad++ == 0)
        first_bad = "line " + line() + ": bad time '" + file.rows[r][tcol] + "'";
      continue;
    }
    if (!std::isfinite(t) || label.empty()) {
      if (bad++ == 0) first_bad = "line " + line() + ": bad row";
      continue;
    }
    auto it = index.find(label);
    if (it == index.end()) {
      if (labels_pinned) {
        unknown.insert(label);
        continue;
      }
      it = index.emplace(label, labels.size()).first;
      labels.push_back(label);
    }
    times.push_back(t);
    procs.push_back(it->second);
  }
  if (bad > 0)
    throw data_error(opt.name + ": " + std::to_string(bad) +
                     " unparseable row(s), first at " + first_bad);
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw data_error(opt.name + ": unknown labels: " + list);
  }
  if (times.empty()) throw data_error(opt.name + ": no event rows");

  const auto [min_it, max_it] = std::minmax_element(times.begin(), times.end());
  if (std::isnan(origin))
    origin = opt.events_mode ? std::min(0.0, *min_it)
                             : std::floor(*min_it / delta) * delta;
  if (*min_it < origin)
    throw data_error(opt.name + ": time " + format_double(*min_it) +
                     " lies before origin " + format_double(origin));
  const double span = *max_it - origin;
  if (!(horizon > 0.0)) {
    horizon = opt.events_mode ? std::floor(span) + 1.0
                              : (std::floor(span / delta) + 1.0) * delta;
  } else if (span >= horizon) {
    throw data_error(opt.name + ": time " + format_double(*max_it) +
                     " outside the grid [" + format_double(origin) + ", " +
                     format_double(origin + horizon) + ")");
  }

  IngestResult out;
  out.labels = labels;
  out.origin = origin;
  out.delta = delta;
  const std::size_t dim = labels.size();
  if (opt.events_mode) {
    out.is_events = true;
    out.events = EventSequence(dim, horizon);
    for (std::size_t k = 0; k < times.size(); ++k)
      out.events.times[procs[k]].push_back(times[k] - origin);
    for (std::size_t p = 0; p < dim; ++p) {
      auto& t = out.events.times[p];
      std::sort(t.begin(), t.end());
      const auto dup = std::adjacent_find(t.begin(), t.end());
      if (dup != t.end())
        throw data_error(opt.name + ": duplicate timestamp " +
                         format_double(*dup + origin) + " in process '" + labels[p] +
                         "'; bin at a resolution instead (counts mode)");
    }
    validate_events(out.events);
    return out;
  }

  const double ratio = horizon / delta;
  const auto bins = static_cast<std::int64_t>(std::llround(ratio));
  if (bins < 1 || std::fabs(ratio - static_cast<double>(bins)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument(opt.name +
                                ": horizon must be an integer multiple of delta");
  out.counts.delta = delta;
  out.counts.counts.assign(static_cast<std::size_t>(bins),
                           std::vector<std::int64_t>(dim, 0));
  for (std::size_t k = 0; k < times.size(); ++k) {
    auto j = static_cast<std::int64_t>(std::floor((times[k] - origin) / delta));
    j = std::clamp(j, std::int64_t{0}, bins - 1);
    ++out.counts.counts[static_cast<std::size_t>(j)][procs[k]];
  }
  return out;
}

}  // namespace hawkes_agg
