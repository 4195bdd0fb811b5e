// hawkes-agg: simulate, fit, study, gof, and ingest for aggregated Hawkes data.
//
// Every command is a pure function of (inputs, config, seed): re-running with
// the same arguments produces byte-identical output files. Wall time goes to
// stdout only, never into files. Exit codes: 0 success, 2 usage/config error,
// 3 data error, 4 numerical failure.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "hawkes_agg/csv.hpp"
#include "hawkes_agg/ingest.hpp"
#include "hawkes_agg/study.hpp"
#include "hawkes_agg/version.hpp"

using namespace hawkes_agg;

namespace {

constexpr const char* kConfigKeys =
    "Config file keys (plain `key = value` lines; flags override):\n"
    "  nu, alpha, beta      model parameters; comma lists, matrices row-major\n"
    "                       (simulate/study truth; optional starting point for fit)\n"
    "  delta                bin width\n"
    "  horizon              observation window length T\n"
    "  seed                 master seed (default 1)\n"
    "  reps                 study replications (default 10)\n"
    "  methods              study method list (default mcem,binned,inar)\n"
    "  trim                 trimmed-statistics fraction per tail (default 0.05)\n"
    "  mcem_samples         Monte Carlo samples per E-step (default 20)\n"
    "  mcem_allocations     candidate allocations per sample (default 10)\n"
    "  mcem_max_iter        EM iteration cap (default 100)\n"
    "  mcem_tol             EM parameter-step tolerance (default 1e-3)\n"
    "  lag_order            INAR lag order (default 0 = auto)\n"
    "  ridge                INAR ridge regularizer (default 1e-8)\n"
    "  fit_grad_tol         Newton gradient tolerance (default 1e-6)\n"
    "  fit_max_iter         Newton iteration cap (default 500)\n"
    "  time_col, label_col  ingest column names (default time, process)\n"
    "  labels               explicit process label order, comma list\n"
    "  origin               grid origin (default: from metadata, else derived)\n"
    "  mode                 ingest output: counts (default) or events\n"
    "  out                  output directory (excluded from the config hash)\n"
    "\n"
    "HAWKES_AGG_THREADS caps the study worker pool.";

struct CommandArgs {
  std::string config_path;
  std::string out;
  Config overrides;
};

Config resolve_config(const CommandArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = load_config_file(args.config_path);
  return merged(cfg, args.overrides);
}

std::string out_path(const CommandArgs& args, const std::string& name) {
  return args.out + "/" + name;
}

void prepare_out(const CommandArgs& args, const Config& resolved) {
  if (args.out.empty()) throw std::invalid_argument("--out is required");
  std::error_code ec;
  std::filesystem::create_directories(args.out, ec);
  if (ec)
    throw std::invalid_argument("cannot create output directory '" + args.out +
                                "': " + ec.message());
  std::ofstream echo(out_path(args, "config.txt"));
  if (!echo) throw std::invalid_argument("cannot write to '" + args.out + "'");
  echo << canonical_config(resolved);
}

Config base_metadata(const Config& resolved) {
  Config meta;
  meta["version"] = kVersion;
  meta["seed"] = get_string(resolved, "seed", "1");
  meta["config"] = config_hash(resolved);
  return meta;
}

std::string default_labels(std::size_t dim) {
  std::string labels;
  for (std::size_t p = 0; p < dim; ++p) labels += (p ? "," : "") + std::to_string(p + 1);
  return labels;
}

// time,process rows in merged chronological order; ties fall to the lower
// process index.
CsvFile events_table(const EventSequence& ev, Config meta) {
  CsvFile f;
  f.metadata = std::move(meta);
  f.columns = {"time", "process"};
  std::vector<std::size_t> cursor(ev.dim(), 0);
  while (true) {
    std::size_t best = ev.dim();
    for (std::size_t p = 0; p < ev.dim(); ++p)
      if (cursor[p] < ev.count(p) &&
          (best == ev.dim() || ev.times[p][cursor[p]] < ev.times[best][cursor[best]]))
        best = p;
    if (best == ev.dim()) break;
    f.rows.push_back(
        {format_double(ev.times[best][cursor[best]]), std::to_string(best + 1)});
    ++cursor[best];
  }
  return f;
}

CsvFile counts_table(const BinnedCounts& counts, Config meta) {
  CsvFile f;
  f.metadata = std::move(meta);
  f.columns = {"bin_index"};
  for (std::size_t p = 0; p < counts.dim(); ++p)
    f.columns.push_back("count_" + std::to_string(p + 1));
  for (std::size_t j = 0; j < counts.bins(); ++j) {
    std::vector<std::string> row{std::to_string(j)};
    for (std::size_t p = 0; p < counts.dim(); ++p)
      row.push_back(std::to_string(counts.counts[j][p]));
    f.rows.push_back(std::move(row));
  }
  return f;
}

bool has_column(const CsvFile& file, const std::string& name) {
  for (const auto& c : file.columns)
    if (c == name) return true;
  return false;
}

// Counts files carry a bin_index column and one count_<p> column per process,
// in order. The grid width comes from the caller or the file metadata.
BinnedCounts counts_from_csv(const CsvFile& file, double delta_override,
                             const std::string& name) {
  BinnedCounts bc;
  bc.delta = delta_override > 0.0 ? delta_override
                                  : get_double(file.metadata, "delta", 0.0);
  if (!(bc.delta > 0.0))
    throw std::invalid_argument(name + ": delta is required (flag, config, or metadata)");
  std::vector<std::size_t> cols;
  for (std::size_t p = 1; has_column(file, "count_" + std::to_string(p)); ++p)
    cols.push_back(column_index(file, "count_" + std::to_string(p)));
  if (cols.empty())
    throw std::invalid_argument(name + ": no count_1.. columns; not a counts file");
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto line = r < file.row_lines.size() ? file.row_lines[r]
                                                : static_cast<int>(r + 2);
    std::vector<std::int64_t> row;
    for (std::size_t c : cols) {
      std::int64_t v = 0;
      try {
        v = parse_int(file.rows[r][c], "count");
      } catch (const std::invalid_argument&) {
        throw data_error(name + " line " + std::to_string(line) + ": bad count '" +
                         file.rows[r][c] + "'");
      }
      if (v < 0)
        throw data_error(name + " line " + std::to_string(line) + ": negative count");
      row.push_back(v);
    }
    bc.counts.push_back(std::move(row));
  }
  if (bc.counts.empty()) throw data_error(name + ": no count rows");
  return bc;
}

// Parameter files are `parameter,value` tables using the flattened names
// (nu_1, alpha_1_2, ...), exactly what `fit` writes; extra rows are ignored.
ModelParams params_from_table(const CsvFile& file, const std::string& name) {
  const std::size_t pcol = column_index(file, "parameter");
  const std::size_t vcol = column_index(file, "value");
  Config kv;
  for (const auto& row : file.rows) kv[row[pcol]] = row[vcol];
  std::size_t dim = 0;
  while (has_key(kv, "nu_" + std::to_string(dim + 1))) ++dim;
  if (dim == 0) throw data_error(name + ": no nu_1 row; not a parameter file");
  ModelParams p;
  p.alpha = Matrix(dim, dim);
  p.beta = Matrix(dim, dim);
  auto need = [&](const std::string& key) {
    if (!has_key(kv, key)) throw data_error(name + ": missing row '" + key + "'");
    return parse_double(kv[key], name + " " + key);
  };
  for (std::size_t i = 0; i < dim; ++i) {
    p.nu.push_back(need("nu_" + std::to_string(i + 1)));
    for (std::size_t j = 0; j < dim; ++j) {
      const std::string suffix =
          "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
      p.alpha(i, j) = need("alpha" + suffix);
      p.beta(i, j) = need("beta" + suffix);
    }
  }
  return p;
}

CsvFile estimates_table(const FitResult& fit, Config meta) {
  CsvFile f;
  f.metadata = std::move(meta);
  f.columns = {"parameter", "value"};
  const std::size_t dim = fit.params.dim();
  const auto names = param_names(dim);
  const auto values = flatten(fit.params);
  for (std::size_t i = 0; i < values.size(); ++i)
    f.rows.push_back({names[i], format_double(values[i])});
  const Matrix gamma = branching_ratio(fit.params);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      f.rows.push_back(
          {"gamma_" + std::to_string(i + 1) + "_" + std::to_string(j + 1),
           format_double(gamma(i, j))});
  f.rows.push_back({"loglik", format_double(fit.loglik)});
  f.rows.push_back({"iterations", std::to_string(fit.iterations)});
  f.rows.push_back({"converged", fit.converged ? "1" : "0"});
  f.rows.push_back({"params_valid", fit.params_valid ? "1" : "0"});
  return f;
}

ModelParams stationary_params_from_config(const Config& cfg) {
  const ModelParams params = params_from_config(cfg);
  validate_params(params);
  const double rho = spectral_radius(branching_ratio(params));
  if (!(rho < 1.0))
    throw stationarity_error("spectral radius " + format_double(rho) +
                             " is not below 1; reduce alpha or raise beta");
  return params;
}

FitSettings fit_settings(const Config& cfg) {
  FitSettings fs;
  fs.grad_tol = get_double(cfg, "fit_grad_tol", fs.grad_tol);
  fs.max_iter = static_cast<int>(get_int(cfg, "fit_max_iter", fs.max_iter));
  return fs;
}

MCEMConfig mcem_config(const Config& cfg, std::uint64_t seed) {
  MCEMConfig mc;
  mc.samples = static_cast<int>(get_int(cfg, "mcem_samples", mc.samples));
  mc.allocations = static_cast<int>(get_int(cfg, "mcem_allocations", mc.allocations));
  mc.max_iter = static_cast<int>(get_int(cfg, "mcem_max_iter", mc.max_iter));
  mc.tol = get_double(cfg, "mcem_tol", mc.tol);
  mc.seed = seed;
  mc.fit = fit_settings(cfg);
  return mc;
}

int cmd_simulate(const CommandArgs& args) {
  const Config cfg = resolve_config(args);
  const ModelParams params = stationary_params_from_config(cfg);
  const double horizon = get_double(cfg, "horizon", 0.0);
  const double delta = get_double(cfg, "delta", 1.0);
  if (!(horizon > 0.0))
    throw std::invalid_argument("config: 'horizon' must be positive");
  const std::uint64_t seed = get_seed(cfg, "seed", 1);

  const EventSequence ev = simulate(params, horizon, seed);
  const BinnedCounts counts = aggregate(ev, delta);

  prepare_out(args, cfg);
  Config meta = base_metadata(cfg);
  meta["delta"] = format_double(delta);
  meta["horizon"] = format_double(horizon);
  meta["origin"] = "0";
  meta["labels"] = default_labels(params.dim());
  params_into_config(params, meta);
  save_csv(out_path(args, "events.csv"), events_table(ev, meta));
  save_csv(out_path(args, "counts.csv"), counts_table(counts, meta));

  std::printf("simulated %zu events over horizon %s into %zu bins\n",
              ev.total_count(), format_double(horizon).c_str(), counts.bins());
  for (std::size_t p = 0; p < ev.dim(); ++p)
    std::printf("  process %zu: %zu events\n", p + 1, ev.count(p));
  return 0;
}

int cmd_fit(const CommandArgs& args, const std::string& method) {
  const Config cfg = resolve_config(args);
  const std::uint64_t seed = get_seed(cfg, "seed", 1);
  const std::string input = require_string(cfg, "input");
  const CsvFile file = load_csv(input);
  const bool counts_file = has_column(file, "count_1");

  // Starting point: config parameters if given, else a seeded stationary draw.
  auto starting_point = [&](std::size_t dim) {
    if (has_key(cfg, "nu")) return params_from_config(cfg);
    Rng rng(mix_seed(seed, 0x1417));
    return init_params(dim, rng);
  };

  FitResult fit;
  if (method == "mle") {
    if (counts_file)
      throw std::invalid_argument(
          "fit --method mle needs exact event times, not binned counts");
    IngestOptions opt;
    opt.name = input;
    opt.events_mode = true;
    opt.time_col = get_string(cfg, "time_col", "time");
    opt.label_col = get_string(cfg, "label_col", "process");
    opt.labels = get_list(cfg, "labels");
    const EventSequence ev = ingest_events(file, opt).events;
    fit = fit_mle(ev, starting_point(ev.dim()), fit_settings(cfg));
  } else {
    if (!counts_file)
      throw std::invalid_argument("fit --method " + method +
                                  " needs binned counts; bin events with "
                                  "`hawkes-agg ingest` first");
    const BinnedCounts counts =
        counts_from_csv(file, get_double(cfg, "delta", 0.0), input);
    if (method == "mcem") {
      fit = mcem_fit(counts, mcem_config(cfg, seed));
    } else if (method == "binned") {
      fit = fit_binned_loglik(counts, starting_point(counts.dim()), fit_settings(cfg));
    } else if (method == "inar") {
      InarConfig ic;
      ic.lag_order = static_cast<int>(get_int(cfg, "lag_order", 0));
      ic.ridge = get_double(cfg, "ridge", ic.ridge);
      fit = fit_inar(counts, ic);
    } else {
      throw std::invalid_argument("unknown method '" + method + "'");
    }
  }

  prepare_out(args, cfg);
  Config meta = base_metadata(cfg);
  meta["method"] = method;
  save_csv(out_path(args, "estimates.csv"), estimates_table(fit, meta));

  std::printf("method %s: converged=%d iterations=%d loglik=%s params_valid=%d\n",
              method.c_str(), fit.converged ? 1 : 0, fit.iterations,
              format_double(fit.loglik).c_str(), fit.params_valid ? 1 : 0);
  return 0;
}

int cmd_study(const CommandArgs& args) {
  const Config cfg = resolve_config(args);
  StudyConfig sc;
  sc.truth = stationary_params_from_config(cfg);
  sc.horizon = get_double(cfg, "horizon", sc.horizon);
  sc.delta = get_double(cfg, "delta", sc.delta);
  sc.reps = static_cast<int>(get_int(cfg, "reps", sc.reps));
  sc.trim = get_double(cfg, "trim", sc.trim);
  sc.seed = get_seed(cfg, "seed", 1);
  if (has_key(cfg, "methods")) sc.methods = get_list(cfg, "methods");
  sc.mcem = mcem_config(cfg, 0);
  sc.inar.lag_order = static_cast<int>(get_int(cfg, "lag_order", 0));
  sc.inar.ridge = get_double(cfg, "ridge", sc.inar.ridge);
  sc.fit = fit_settings(cfg);

  const StudyResult res = run_study(sc);
  const std::size_t np = param_count(res.dim);
  const auto names = param_names(res.dim);

  prepare_out(args, cfg);
  Config meta = base_metadata(cfg);
  meta["reps"] = std::to_string(res.reps);
  meta["trim"] = format_double(res.trim);
  meta["delta"] = format_double(sc.delta);
  meta["horizon"] = format_double(sc.horizon);
  for (const auto& run : res.methods)
    meta["failures_" + run.method] = std::to_string(run.failures);

  CsvFile est;
  est.metadata = meta;
  est.columns = {"rep", "method", "ok", "converged", "valid"};
  for (const auto& n : names) est.columns.push_back(n);
  for (std::size_t r = 0; r < static_cast<std::size_t>(res.reps); ++r)
    for (const auto& run : res.methods) {
      std::vector<std::string> row{std::to_string(r), run.method,
                                   std::to_string(run.ok[r]),
                                   std::to_string(run.converged[r]),
                                   std::to_string(run.valid[r])};
      for (double v : run.estimates[r]) row.push_back(format_double(v));
      est.rows.push_back(std::move(row));
    }
  save_csv(out_path(args, "estimates.csv"), est);

  CsvFile bias, summary, mse;
  bias.metadata = summary.metadata = mse.metadata = meta;
  bias.columns = summary.columns = mse.columns = {"parameter", "truth"};
  for (const auto& run : res.methods) {
    bias.columns.push_back(run.method);
    mse.columns.push_back(run.method);
    summary.columns.push_back(run.method + "_mean");
    summary.columns.push_back(run.method + "_sd");
    summary.columns.push_back(run.method + "_n");
  }
  for (std::size_t i = 0; i < np; ++i) {
    const double truth = res.truth[i];
    std::vector<std::string> brow{names[i], format_double(truth)};
    std::vector<std::string> srow = brow;
    std::vector<std::string> mrow = brow;
    for (const auto& run : res.methods) {
      const auto kept = trimmed(run.column(i), res.trim);
      const Moments m = moments(kept);
      brow.push_back(format_double((m.mean - truth) / truth));
      srow.push_back(format_double(m.mean));
      srow.push_back(format_double(m.sd));
      srow.push_back(std::to_string(m.n));
      mrow.push_back(format_double(mse_against(kept, truth)));
    }
    bias.rows.push_back(std::move(brow));
    summary.rows.push_back(std::move(srow));
    mse.rows.push_back(std::move(mrow));
  }
  save_csv(out_path(args, "bias.csv"), bias);
  save_csv(out_path(args, "summary.csv"), summary);
  save_csv(out_path(args, "mse.csv"), mse);

  CsvFile by_rep;
  by_rep.metadata = meta;
  by_rep.columns = {"rep", "method", "mse"};
  for (std::size_t r = 0; r < static_cast<std::size_t>(res.reps); ++r)
    for (const auto& run : res.methods) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (run.ok[r]) {
        v = 0.0;
        for (std::size_t i = 0; i < np; ++i) {
          const double e = run.estimates[r][i] - res.truth[i];
          v += e * e;
        }
        v /= static_cast<double>(np);
      }
      by_rep.rows.push_back({std::to_string(r), run.method, format_double(v)});
    }
  save_csv(out_path(args, "mse_by_rep.csv"), by_rep);

  CsvFile gof;
  gof.metadata = meta;
  gof.columns = {"rep", "method", "process", "ks"};
  for (std::size_t r = 0; r < static_cast<std::size_t>(res.reps); ++r)
    for (const auto& run : res.methods)
      for (std::size_t p = 0; p < res.dim; ++p)
        gof.rows.push_back({std::to_string(r), run.method, std::to_string(p + 1),
                            format_double(run.ks[r][p])});
  save_csv(out_path(args, "gof.csv"), gof);

  std::printf("study: %d replications, %zu methods\n", res.reps, res.methods.size());
  for (const auto& run : res.methods)
    std::printf("  %s: %d failure(s)\n", run.method.c_str(), run.failures);
  return 0;
}

std::string stem_of(const std::string& path) {
  std::string stem = std::filesystem::path(path).stem().string();
  for (char& c : stem)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return stem.empty() ? "params" : stem;
}

int cmd_gof(const CommandArgs& args, const std::vector<std::string>& params_paths) {
  const Config cfg = resolve_config(args);
  const std::uint64_t seed = get_seed(cfg, "seed", 1);
  const std::string input = require_string(cfg, "input");
  const CsvFile file = load_csv(input);
  const bool counts_file = has_column(file, "count_1");

  BinnedCounts counts;
  EventSequence events;
  if (counts_file) {
    counts = counts_from_csv(file, get_double(cfg, "delta", 0.0), input);
  } else {
    IngestOptions opt;
    opt.name = input;
    opt.events_mode = true;
    opt.time_col = get_string(cfg, "time_col", "time");
    opt.label_col = get_string(cfg, "label_col", "process");
    opt.labels = get_list(cfg, "labels");
    events = ingest_events(file, opt).events;
  }
  const int allocations = static_cast<int>(get_int(cfg, "mcem_allocations", 10));

  prepare_out(args, cfg);
  Config meta = base_metadata(cfg);
  meta["input"] = counts_file ? "counts" : "events";
  if (counts_file) {
    // Counts carry no event times; the transform runs on one consistent
    // MC-EM superposition proposal drawn under each evaluated parameter set.
    meta["proposal"] = "single consistent superposition sample, best of " +
                       std::to_string(allocations) + " allocations";
  }

  CsvFile ks;
  ks.metadata = meta;
  ks.columns = {"params", "process", "n", "ks", "critical"};

  std::vector<std::string> used_stems;
  for (std::size_t pi = 0; pi < params_paths.size(); ++pi) {
    const ModelParams params = params_from_table(load_csv(params_paths[pi]),
                                                 params_paths[pi]);
    std::string stem = stem_of(params_paths[pi]);
    while (std::find(used_stems.begin(), used_stems.end(), stem) != used_stems.end())
      stem += "_" + std::to_string(pi);
    used_stems.push_back(stem);

    EventSequence ev;
    if (counts_file) {
      if (counts.dim() != params.dim())
        throw data_error(params_paths[pi] + ": parameter dimension " +
                         std::to_string(params.dim()) + " does not match counts");
      const SuperposedParams sp = reparameterize(params, counts);
      Rng rng(mix_seed(seed, 9000 + pi));
      auto [times, logq_seq] = sample_superposed_times(sp, superpose(counts), rng);
      ev = best_allocation(times, logq_seq, counts, allocations, params, rng).events;
    } else {
      ev = events;
    }

    const GofReport rep = transform_times(params, ev);
    CsvFile qq;
    Config qmeta = meta;
    qmeta["params"] = params_paths[pi];
    qq.metadata = std::move(qmeta);
    qq.columns = {"process", "gap", "exp_quantile"};
    for (std::size_t p = 0; p < params.dim(); ++p) {
      const std::size_t n = rep.interarrivals[p].size();
      ks.rows.push_back({stem, std::to_string(p + 1), std::to_string(n),
                         format_double(rep.ks_stat[p]),
                         n > 0 ? format_double(1.36 / std::sqrt(static_cast<double>(n)))
                               : "nan"});
      if (n == 0)
        std::printf("%s: process %zu has too few events; skipped\n", stem.c_str(),
                    p + 1);
      for (const auto& [gap, quantile] : rep.qq_pairs[p])
        qq.rows.push_back({std::to_string(p + 1), format_double(gap),
                           format_double(quantile)});
    }
    save_csv(out_path(args, "qq_" + stem + ".csv"), qq);
    std::printf("%s: max KS %s over %zu processes\n", stem.c_str(),
                format_double(*std::max_element(rep.ks_stat.begin(),
                                                rep.ks_stat.end()))
                    .c_str(),
                params.dim());
  }
  save_csv(out_path(args, "ks.csv"), ks);
  return 0;
}

int cmd_ingest(const CommandArgs& args) {
  const Config cfg = resolve_config(args);
  const std::string input = require_string(cfg, "input");
  const CsvFile file = load_csv(input);

  IngestOptions opt;
  opt.name = input;
  opt.time_col = get_string(cfg, "time_col", "time");
  opt.label_col = get_string(cfg, "label_col", "process");
  opt.delta = get_double(cfg, "delta", 0.0);
  opt.origin = get_double(cfg, "origin", opt.origin);
  opt.horizon = get_double(cfg, "horizon", 0.0);
  opt.labels = get_list(cfg, "labels");
  const std::string mode = get_string(cfg, "mode", "counts");
  if (mode != "counts" && mode != "events")
    throw std::invalid_argument("config key 'mode' must be counts or events");
  opt.events_mode = mode == "events";

  const IngestResult res = ingest_events(file, opt);

  prepare_out(args, cfg);
  Config meta = base_metadata(cfg);
  meta["origin"] = format_double(res.origin);
  if (res.delta > 0.0) meta["delta"] = format_double(res.delta);
  std::string labels;
  for (std::size_t p = 0; p < res.labels.size(); ++p)
    labels += (p ? "," : "") + res.labels[p];
  meta["labels"] = labels;

  if (res.is_events) {
    meta["horizon"] = format_double(res.events.horizon);
    save_csv(out_path(args, "events.csv"), events_table(res.events, meta));
    std::printf("ingested %zu events across %zu processes\n",
                res.events.total_count(), res.events.dim());
  } else {
    meta["horizon"] = format_double(res.counts.horizon());
    save_csv(out_path(args, "counts.csv"), counts_table(res.counts, meta));
    std::printf("ingested %lld events into %zu bins x %zu processes\n",
                static_cast<long long>(res.counts.total()), res.counts.bins(),
                res.counts.dim());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aggregated multivariate Hawkes estimation toolkit"};
  app.set_version_flag("--version", std::string("hawkes-agg ") + kVersion);
  app.footer(kConfigKeys);
  app.require_subcommand(1);

  CommandArgs args;
  std::string method;
  std::vector<std::string> params_paths;

  auto add_common = [&](CLI::App* sub, bool with_seed = true) {
    sub->add_option("--config", args.config_path, "config file (key = value lines)");
    sub->add_option("--out", args.out, "output directory")->required();
    if (with_seed)
      sub->add_option_function<std::string>(
          "--seed", [&](const std::string& v) { args.overrides["seed"] = v; },
          "master seed");
  };
  auto override_opt = [&](CLI::App* sub, const std::string& flag,
                          const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&args, key](const std::string& v) { args.overrides[key] = v; }, help);
  };

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "draw a sequence and its binned counts");
  add_common(simulate_cmd);

  CLI::App* fit_cmd = app.add_subcommand("fit", "estimate parameters from one input");
  add_common(fit_cmd);
  fit_cmd->add_option("--method", method, "mcem, mle, binned, or inar")->required();
  override_opt(fit_cmd, "--input", "input", "events or counts csv");
  override_opt(fit_cmd, "--delta", "delta", "bin width of a counts input");

  CLI::App* study_cmd =
      app.add_subcommand("study", "replicated simulate/aggregate/fit comparison");
  add_common(study_cmd);
  override_opt(study_cmd, "--reps", "reps", "replication count");
  override_opt(study_cmd, "--methods", "methods", "comma list of methods");

  CLI::App* gof_cmd =
      app.add_subcommand("gof", "time-rescaling diagnostics for parameter sets");
  add_common(gof_cmd);
  gof_cmd->add_option("--params", params_paths, "parameter csv (repeatable)")
      ->required();
  override_opt(gof_cmd, "--input", "input", "events or counts csv");
  override_opt(gof_cmd, "--delta", "delta", "bin width of a counts input");

  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "load an event log as counts or events");
  add_common(ingest_cmd);
  override_opt(ingest_cmd, "--input", "input", "event log csv");
  override_opt(ingest_cmd, "--time-col", "time_col", "timestamp column name");
  override_opt(ingest_cmd, "--label-col", "label_col", "process label column name");
  override_opt(ingest_cmd, "--delta", "delta", "bin width");
  override_opt(ingest_cmd, "--mode", "mode", "counts (default) or events");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  int status = 0;
  try {
    if (simulate_cmd->parsed()) status = cmd_simulate(args);
    else if (fit_cmd->parsed()) status = cmd_fit(args, method);
    else if (study_cmd->parsed()) status = cmd_study(args);
    else if (gof_cmd->parsed()) status = cmd_gof(args, params_paths);
    else if (ingest_cmd->parsed()) status = cmd_ingest(args);
  } catch (const stationarity_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const data_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  std::printf("wall time %.3f s\n", elapsed.count());
  return status;
}
