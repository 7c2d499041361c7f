// tailx command-line front end. Talks to the library only through tailx.h.
#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tailx/rng.hpp"
#include "tailx/tailx.h"

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

int exit_code_for(tailx_status s) {
  switch (s) {
    case TAILX_E_DEGENERATE:
    case TAILX_E_RANK:
    case TAILX_E_DIVERGED:
    case TAILX_E_INTERNAL: return kExitNumeric;
    default: return kExitInput;
  }
}

void check(tailx_status s, const std::string& context) {
  if (s != TAILX_OK) throw CliError(exit_code_for(s), context + ": " + tailx_last_error());
}

struct ParamsDeleter {
  void operator()(tailx_params* p) const { tailx_params_destroy(p); }
};
struct SchemeDeleter {
  void operator()(tailx_scheme* p) const { tailx_scheme_destroy(p); }
};
struct TaskDeleter {
  void operator()(tailx_task* p) const { tailx_task_destroy(p); }
};
struct TrajectoryDeleter {
  void operator()(tailx_trajectory* p) const { tailx_trajectory_destroy(p); }
};
using ParamsPtr = std::unique_ptr<tailx_params, ParamsDeleter>;

constexpr const char* kParamKeys[] = {"alpha",   "n_target", "eps_sigma",   "eps_norm",
                                      "k",       "j_count",  "bon_k",       "n_sel",
                                      "m_corr",  "lambda_nsel", "cat_n_target", "seed"};

std::string param_text(const tailx_params* p, const char* key) {
  std::size_t needed = 0;
  check(tailx_params_get(p, key, nullptr, 0, &needed), key);
  std::string out(needed, '\0');
  check(tailx_params_get(p, key, out.data(), out.size(), &needed), key);
  out.resize(needed - 1);
  return out;
}

// Rule parameters as text, so the library does all number parsing.
struct ParamFlags {
  std::map<std::string, std::string> values;

  void add(CLI::App* app, std::initializer_list<const char*> keys) {
    for (const char* key : keys) {
      std::string flag = std::string("--") + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app->add_option(flag, values[key], std::string("rule parameter ") + key);
    }
  }

  ParamsPtr build() const {
    tailx_params* raw = nullptr;
    check(tailx_params_create(&raw), "params");
    ParamsPtr p(raw);
    for (const auto& [k, v] : values)
      if (!v.empty()) check(tailx_params_set(p.get(), k.c_str(), v.c_str()), "--" + k);
    return p;
  }
};

ordered_json params_json(const tailx_params* p) {
  ordered_json out;
  for (const char* key : kParamKeys) {
    const std::string v = param_text(p, key);
    if (v.empty()) {
      out[key] = nullptr;
    } else if (std::string_view(key) == "seed") {
      out[key] = std::stoull(v);
    } else {
      out[key] = json::parse(v);
    }
  }
  return out;
}

ordered_json meta(const std::string& command) {
  ordered_json m;
  m["tool"] = "tailx";
  m["version"] = tailx_version();
  m["command"] = command;
  return m;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CliError(kExitInput, std::string("bad ") + what + " entry: '" + item + "'");
    }
  }
  if (out.empty()) throw CliError(kExitInput, std::string(what) + " is empty");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(text, what)) {
    if (!(v >= 1.0) || v != std::floor(v))
      throw CliError(kExitInput, std::string(what) + " entries must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

struct Record {
  std::size_t line = 0;
  std::string prompt_id;
  std::vector<double> rewards;
  std::vector<double> scores;  // rows x score_dim, row-major
  std::size_t score_dim = 0;
  bool has_scores = false;
};

std::vector<double> number_array(const json& j, const std::string& where, const char* field) {
  if (!j.is_array()) throw CliError(kExitInput, where + ": '" + field + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw CliError(kExitInput, where + ": '" + field + "' holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<Record> read_records(const std::string& path) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path);
    if (!file) throw CliError(kExitInput, "cannot open " + path);
    in = &file;
  }
  std::vector<Record> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(*in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CliError(kExitInput, where + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw CliError(kExitInput, where + ": expected a JSON object");
    Record r;
    r.line = line;
    if (!j.contains("prompt_id") || !j["prompt_id"].is_string())
      throw CliError(kExitInput, where + ": missing string 'prompt_id'");
    r.prompt_id = j["prompt_id"].get<std::string>();
    if (!j.contains("rewards")) throw CliError(kExitInput, where + ": missing 'rewards'");
    r.rewards = number_array(j["rewards"], where, "rewards");
    if (r.rewards.empty()) throw CliError(kExitInput, where + ": 'rewards' is empty");
    if (j.contains("scores") && !j["scores"].is_null()) {
      const auto& s = j["scores"];
      if (!s.is_array() || s.size() != r.rewards.size())
        throw CliError(kExitInput, where + ": 'scores' needs one row per reward");
      r.has_scores = true;
      for (const auto& row : s) {
        const auto v = number_array(row, where, "scores");
        if (r.score_dim == 0) r.score_dim = v.size();
        if (v.empty() || v.size() != r.score_dim)
          throw CliError(kExitInput, where + ": 'scores' rows must share a nonzero length");
        r.scores.insert(r.scores.end(), v.begin(), v.end());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Runs f(i) for i in [0, n) on a few threads; results go into slots by index,
// so output order never depends on scheduling.
template <class F>
void for_each_index(std::size_t n, F&& f) {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TAILX_THREADS")) workers = std::max<long>(1, std::atol(env));
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw CliError(kExitInput, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  ~Output() { stream().flush(); }

 private:
  std::ofstream file_;
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Per-record failures are collected; the worst exit code wins at the end.
struct ErrorTally {
  int code = 0;
  void note(int c, const std::string& msg) {
    std::cerr << "tailx: " << msg << "\n";
    code = std::max(code, c);
  }
};

struct RecordResult {
  std::optional<ordered_json> row;
  std::string error;
  int code = 0;
};

void report(ErrorTally& tally, const std::vector<Record>& records, const std::vector<RecordResult>& results) {
  for (std::size_t i = 0; i < results.size(); ++i)
    if (results[i].code != 0) tally.note(results[i].code, "prompt " + records[i].prompt_id + ": " + results[i].error);
}

template <class F>
RecordResult capture(F&& f) {
  RecordResult r;
  try {
    r.row = f();
  } catch (const CliError& e) {
    r.error = e.what();
    r.code = e.code();
  }
  return r;
}

// ---- commands ----

struct Common {
  std::string input = "-";
  std::string output = "-";
  std::string config;
  ParamFlags params;
};

int cmd_advantage(const Common& c, const std::string& rule_name) {
  tailx_rule rule;
  check(tailx_rule_from_name(rule_name.c_str(), &rule), "--rule");
  const ParamsPtr base = c.params.build();
  const std::string base_seed = param_text(base.get(), "seed");
  const auto records = read_records(c.input);
  std::vector<RecordResult> results(records.size());
  for_each_index(records.size(), [&](std::size_t i) {
    results[i] = capture([&] {
      const Record& r = records[i];
      tailx_params* raw = nullptr;
      check(tailx_params_clone(base.get(), &raw), "params");
      ParamsPtr p(raw);
      // each row gets its own stream for the randomized split
      const std::string seed = std::to_string(tailx::derive_seed(std::stoull(base_seed), i));
      check(tailx_params_set(p.get(), "seed", seed.c_str()), "seed");
      std::vector<double> adv(r.rewards.size());
      check(tailx_advantages(rule, r.rewards.data(), r.rewards.size(), p.get(), adv.data()), rule_name);
      ordered_json row;
      row["prompt_id"] = r.prompt_id;
      row["advantages"] = adv;
      return row;
    });
  });
  Output out(c.output);
  ordered_json m = meta("advantage");
  m["rule"] = rule_name;
  m["input"] = c.input;
  m["params"] = params_json(base.get());
  if (rule == TAILX_RULE_CHOW) {
    m["per_row_seed"] = "derived from seed and row index";
    if (param_text(base.get(), "lambda_nsel").empty())
      m["assumptions"] = {"lambda_nsel defaults to n_sel - 1"};
  }
  out.stream() << ordered_json{{"meta", m}}.dump() << "\n";
  ErrorTally tally;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (results[i].row) {
      out.stream() << results[i].row->dump() << "\n";
    } else {
      out.stream() << ordered_json{{"prompt_id", records[i].prompt_id}, {"error", results[i].error}}.dump() << "\n";
    }
  }
  report(tally, records, results);
  return tally.code;
}

int cmd_weights(const Common& c, std::size_t m, std::size_t k, std::size_t j_count, bool theory,
                const std::string& alpha) {
  tailx_scheme* raw = nullptr;
  double a = 0.25;
  if (theory) {
    a = parse_double_list(alpha, "alpha").front();
    check(tailx_scheme_theory(m, k, j_count, a, &raw), "weights");
  } else {
    check(tailx_scheme_practical(m, k, j_count, &raw), "weights");
  }
  std::unique_ptr<tailx_scheme, SchemeDeleter> scheme(raw);
  std::size_t sm = 0, sk = 0, j = 0;
  check(tailx_scheme_info(scheme.get(), &sm, &sk, &j), "weights");
  std::vector<std::size_t> sizes(j);
  std::vector<double> ratios(j), weights(j);
  check(tailx_scheme_get(scheme.get(), sizes.data(), ratios.data(), weights.data()), "weights");
  ordered_json m_ = meta("weights");
  m_["config"] = {{"m", m}, {"k", k}, {"j_count", j_count}, {"prefixes", theory ? "theory" : "practical"}};
  if (theory) m_["config"]["alpha"] = a;
  ordered_json out_json;
  out_json["meta"] = m_;
  out_json["m"] = sm;
  out_json["k"] = sk;
  out_json["sizes"] = sizes;
  out_json["ratios"] = ratios;
  out_json["weights"] = weights;
  Output out(c.output);
  out.stream() << out_json.dump(2) << "\n";
  return 0;
}

int cmd_predict_bon(const Common& c, const std::string& budgets_text) {
  const auto budgets = parse_size_list(budgets_text, "budgets");
  const ParamsPtr p = c.params.build();
  const double alpha = std::stod(param_text(p.get(), "alpha"));
  const double eps = std::stod(param_text(p.get(), "eps_sigma"));
  std::vector<tailx_tail_constants> constants(budgets.size());
  for (std::size_t b = 0; b < budgets.size(); ++b)
    check(tailx_tail_constants_compute(alpha, budgets[b], &constants[b]), "tail constants");
  const auto records = read_records(c.input);
  std::vector<RecordResult> results(records.size());
  for_each_index(records.size(), [&](std::size_t i) {
    results[i] = capture([&] {
      const Record& r = records[i];
      tailx_tail_vector eta;
      check(tailx_empirical_tail_vector(r.rewards.data(), r.rewards.size(), alpha, eps, &eta), "tail vector");
      ordered_json row = ordered_json::array();
      for (std::size_t b = 0; b < budgets.size(); ++b) {
        double v = 0.0;
        check(tailx_predict_vn(&eta, &constants[b], &v), "predict");
        row.push_back({{"prompt_id", r.prompt_id}, {"budget", budgets[b]}, {"value", v}});
      }
      return row;
    });
  });
  ordered_json m = meta("predict-bon");
  m["input"] = c.input;
  m["budgets"] = budgets;
  m["params"] = params_json(p.get());
  ordered_json curve = ordered_json::array();
  std::vector<double> sums(budgets.size(), 0.0);
  std::size_t ok = 0;
  for (const auto& r : results) {
    if (!r.row) continue;
    ++ok;
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      sums[b] += (*r.row)[b]["value"].get<double>();
      curve.push_back((*r.row)[b]);
    }
  }
  ordered_json means = ordered_json::array();
  for (std::size_t b = 0; b < budgets.size() && ok > 0; ++b)
    means.push_back({{"budget", budgets[b]}, {"value", sums[b] / static_cast<double>(ok)}});
  Output out(c.output);
  out.stream() << ordered_json{{"meta", m}, {"curve", curve}, {"mean", means}}.dump(2) << "\n";
  ErrorTally tally;
  report(tally, records, results);
  return tally.code;
}

std::vector<double> bon_values(const Record& r, const std::vector<std::size_t>& budgets) {
  std::vector<double> out(budgets.size());
  for (std::size_t b = 0; b < budgets.size(); ++b)
    check(tailx_grouped_bon(r.rewards.data(), r.rewards.size(), budgets[b], &out[b]),
          "budget " + std::to_string(budgets[b]));
  return out;
}

int cmd_eval_bon(const Common& c, const std::string& budgets_text, const std::string& baseline_path,
                 std::size_t resamples, std::size_t topk) {
  const auto budgets = parse_size_list(budgets_text, "budgets");
  const ParamsPtr p = c.params.build();
  const std::uint64_t seed = std::stoull(param_text(p.get(), "seed"));
  const auto records = read_records(c.input);
  const auto baseline = baseline_path.empty() ? std::vector<Record>{} : read_records(baseline_path);
  std::map<std::string, const Record*> base_by_id;
  for (const auto& r : baseline) base_by_id.emplace(r.prompt_id, &r);

  // every prompt must evaluate cleanly; the curve is meaningless otherwise
  std::vector<std::vector<double>> vals(records.size()), base_vals(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      vals[i] = bon_values(records[i], budgets);
      if (!baseline_path.empty()) {
        auto it = base_by_id.find(records[i].prompt_id);
        if (it == base_by_id.end()) throw CliError(kExitInput, "missing from baseline");
        base_vals[i] = bon_values(*it->second, budgets);
      }
    } catch (const CliError& e) {
      throw CliError(e.code(), c.input + ":" + std::to_string(records[i].line) + ": prompt " +
                                   records[i].prompt_id + ": " + e.what());
    }
  }
  ordered_json m = meta("eval-bon");
  m["input"] = c.input;
  m["baseline"] = baseline_path.empty() ? ordered_json(nullptr) : ordered_json(baseline_path);
  m["budgets"] = budgets;
  m["resamples"] = resamples;
  m["seed"] = seed;
  m["topk"] = topk;
  ordered_json doc{{"meta", m}};
  ordered_json curve = ordered_json::array();
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t b = 0; b < budgets.size(); ++b)
      curve.push_back({{"prompt_id", records[i].prompt_id}, {"budget", budgets[b]}, {"value", vals[i][b]}});
  doc["curve"] = curve;
  ordered_json means = ordered_json::array();
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    double s = 0.0;
    for (const auto& v : vals) s += v[b];
    means.push_back({{"budget", budgets[b]}, {"value", records.empty() ? 0.0 : s / static_cast<double>(records.size())}});
  }
  doc["mean"] = means;
  const bool rectangular = !records.empty() && std::all_of(records.begin(), records.end(), [&](const Record& r) {
    return r.rewards.size() == records.front().rewards.size();
  });
  if (rectangular) {
    std::vector<double> flat;
    for (const auto& r : records) flat.insert(flat.end(), r.rewards.begin(), r.rewards.end());
    double score = 0.0;
    check(tailx_topk_validation_score(flat.data(), records.size(), records.front().rewards.size(), topk, &score),
          "top-k score");
    doc["topk_score"] = score;
  }
  if (!baseline_path.empty()) {
    ordered_json cmp = ordered_json::array();
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      std::vector<double> a(records.size()), x(records.size());
      for (std::size_t i = 0; i < records.size(); ++i) {
        a[i] = base_vals[i][b];
        x[i] = vals[i][b];
      }
      tailx_bootstrap d;
      check(tailx_paired_bootstrap(a.data(), x.data(), records.size(), resamples, tailx::derive_seed(seed, b), &d),
            "bootstrap");
      tailx_win_tie_loss w;
      check(tailx_win_tie_loss_compute(x.data(), a.data(), records.size(), 1e-9, &w), "win/tie/loss");
      cmp.push_back({{"budget", budgets[b]},
                     {"delta_mean", d.delta_mean},
                     {"ci_lo", d.ci_lo},
                     {"ci_hi", d.ci_hi},
                     {"win", w.win},
                     {"tie", w.tie},
                     {"loss", w.loss}});
    }
    doc["versus_baseline"] = cmp;
  }
  Output out(c.output);
  out.stream() << doc.dump(2) << "\n";
  return 0;
}

int cmd_synth_bias_variance(const Common& c, const std::string& estimators_text, const std::string& m_text,
                            std::size_t replications, const std::string& thresholds_text) {
  const ParamsPtr p = c.params.build();
  const auto m_grid = parse_size_list(m_text, "m");
  const auto thresholds = parse_double_list(thresholds_text, "thresholds");
  std::vector<std::string> estimators;
  {
    std::stringstream ss(estimators_text);
    std::string item;
    while (std::getline(ss, item, ',')) estimators.push_back(item);
  }
  tailx_synth_spec spec{std::stod(param_text(p.get(), "alpha")),
                        static_cast<std::size_t>(std::stoull(param_text(p.get(), "n_target"))), thresholds.data(),
                        thresholds.size()};
  const std::uint64_t seed = std::stoull(param_text(p.get(), "seed"));
  Output out(c.output);
  std::ostream& os = out.stream();
  ordered_json m = meta("synth-bias-variance");
  m["estimators"] = estimators;
  m["m"] = m_grid;
  m["replications"] = replications;
  m["score_thresholds"] = thresholds;
  m["params"] = params_json(p.get());
  os << "# " << m.dump() << "\n";
  os << "estimator,m,bias_norm,variance,mse_p1,mse_p2048,mse_p65536,replications,seed\n";
  for (const auto& e : estimators) {
    for (std::size_t mm : m_grid) {
      tailx_bias_variance row;
      check(tailx_bias_variance_run(&spec, e.c_str(), p.get(), mm, replications, seed, &row, nullptr, nullptr),
            e + " m=" + std::to_string(mm));
      os << e << ',' << row.m << ',' << fmt17(row.bias_norm) << ',' << fmt17(row.variance) << ','
         << fmt17(row.mse_p1) << ',' << fmt17(row.mse_p2048) << ',' << fmt17(row.mse_p65536) << ','
         << row.replications << ',' << row.seed << "\n";
      os.flush();
    }
  }
  return 0;
}

int cmd_align(const Common& c, const std::string& rules_text, std::size_t n) {
  std::vector<std::string> names;
  std::vector<tailx_rule> rules;
  {
    std::stringstream ss(rules_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      tailx_rule r;
      check(tailx_rule_from_name(item.c_str(), &r), "--rule");
      names.push_back(item);
      rules.push_back(r);
    }
  }
  const ParamsPtr p = c.params.build();
  const auto records = read_records(c.input);
  std::vector<RecordResult> results(records.size());
  for_each_index(records.size(), [&](std::size_t i) {
    results[i] = capture([&] {
      const Record& r = records[i];
      if (!r.has_scores) throw CliError(kExitInput, "record has no 'scores'");
      const std::size_t m = r.rewards.size();
      std::vector<double> oracle(m);
      check(tailx_oracle_advantage(r.rewards.data(), m, n, oracle.data()), "oracle");
      ordered_json row{{"prompt_id", r.prompt_id}};
      for (std::size_t k = 0; k < rules.size(); ++k) {
        std::vector<double> adv(m);
        check(tailx_advantages(rules[k], r.rewards.data(), m, p.get(), adv.data()), names[k]);
        double cosine = 0.0;
        check(tailx_gradient_alignment(adv.data(), r.scores.data(), m, r.score_dim, oracle.data(), &cosine),
              names[k]);
        row[names[k]] = cosine;
      }
      return row;
    });
  });
  ordered_json m = meta("align");
  m["input"] = c.input;
  m["rules"] = names;
  m["n"] = n;
  m["params"] = params_json(p.get());
  ordered_json rows = ordered_json::array();
  ordered_json summary = ordered_json::array();
  std::vector<double> sums(rules.size(), 0.0);
  std::size_t ok = 0;
  for (const auto& r : results) {
    if (!r.row) continue;
    ++ok;
    rows.push_back(*r.row);
    for (std::size_t k = 0; k < rules.size(); ++k) sums[k] += (*r.row)[names[k]].get<double>();
  }
  for (std::size_t k = 0; k < rules.size() && ok > 0; ++k)
    summary.push_back({{"rule", names[k]}, {"mean_cosine", sums[k] / static_cast<double>(ok)}, {"prompts", ok}});
  Output out(c.output);
  out.stream() << ordered_json{{"meta", m}, {"rows", rows}, {"summary", summary}}.dump(2) << "\n";
  ErrorTally tally;
  report(tally, records, results);
  return tally.code;
}

struct TrainFlags {
  std::string rule = "tea";
  std::size_t m = 16;
  std::size_t p_batch = 4;
  double beta = 0.0;
  double gamma = 0.1;
  std::size_t steps = 100;
  std::size_t prompts = 8;
  std::size_t actions = 16;
  double spread = 1.0;
  std::string eval_n = "1,4,16,128";
  std::size_t eval_every = 0;
  std::size_t eval_samples = 1024;
};

int cmd_train_synth(const Common& c, const TrainFlags& f) {
  const ParamsPtr p = c.params.build();
  const std::uint64_t seed = std::stoull(param_text(p.get(), "seed"));
  const auto eval_n = parse_size_list(f.eval_n, "eval-n");
  tailx_train_config cfg;
  tailx_train_config_default(&cfg);
  check(tailx_rule_from_name(f.rule.c_str(), &cfg.rule), "--rule");
  cfg.m = f.m;
  cfg.p_batch = f.p_batch;
  cfg.beta = f.beta;
  cfg.gamma = f.gamma;
  cfg.steps = f.steps;
  cfg.seed = seed;
  cfg.eval_n = eval_n.data();
  cfg.eval_n_count = eval_n.size();
  cfg.eval_every = f.eval_every;
  cfg.eval_samples = f.eval_samples;
  tailx_task* task_raw = nullptr;
  // the task draws from its own stream so the trainer's seed stays independent
  check(tailx_task_synthetic(f.prompts, f.actions, f.spread, tailx::derive_seed(seed, 0x7a5c), &task_raw), "task");
  std::unique_ptr<tailx_task, TaskDeleter> task(task_raw);
  tailx_trajectory* traj_raw = nullptr;
  check(tailx_train(task.get(), &cfg, p.get(), &traj_raw), "train");
  std::unique_ptr<tailx_trajectory, TrajectoryDeleter> traj(traj_raw);

  ordered_json m = meta("train-synth");
  m["config"] = {{"rule", f.rule},       {"m", f.m},           {"p_batch", f.p_batch},
                 {"beta", f.beta},       {"gamma", f.gamma},   {"steps", f.steps},
                 {"prompts", f.prompts}, {"actions", f.actions}, {"spread", f.spread},
                 {"eval_n", eval_n},     {"eval_every", f.eval_every}, {"eval_samples", f.eval_samples}};
  m["params"] = params_json(p.get());
  Output out(c.output);
  std::ostream& os = out.stream();
  os << "# " << m.dump() << "\n";
  os << "step,kl";
  for (std::size_t n : eval_n) os << ",bo" << n;
  os << "\n";
  std::size_t rows = 0, budgets = 0;
  check(tailx_trajectory_rows(traj.get(), &rows, &budgets), "trajectory");
  std::vector<double> bon(budgets);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t step = 0;
    double kl = 0.0;
    check(tailx_trajectory_row(traj.get(), i, &step, bon.data(), &kl), "trajectory");
    os << step << ',' << fmt17(kl);
    for (double v : bon) os << ',' << fmt17(v);
    os << "\n";
  }
  return 0;
}

int cmd_qq_fit(const Common& c, double q_lo, double q_hi, std::size_t grid) {
  const auto records = read_records(c.input);
  std::vector<RecordResult> results(records.size());
  for_each_index(records.size(), [&](std::size_t i) {
    results[i] = capture([&] {
      const Record& r = records[i];
      tailx_qq_fit fit;
      check(tailx_qq_tail_fit(r.rewards.data(), r.rewards.size(), q_lo, q_hi, grid, &fit), "qq fit");
      return ordered_json{{"prompt_id", r.prompt_id}, {"a", fit.a}, {"b", fit.b}, {"r_squared", fit.r_squared}};
    });
  });
  ordered_json m = meta("qq-fit");
  m["input"] = c.input;
  m["config"] = {{"q_lo", q_lo}, {"q_hi", q_hi}, {"grid_points", grid}};
  ordered_json rows = ordered_json::array();
  std::vector<double> r2;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].row) {
      rows.push_back(*results[i].row);
      r2.push_back((*results[i].row)["r_squared"].get<double>());
    } else {
      rows.push_back({{"prompt_id", records[i].prompt_id}, {"error", results[i].error}});
    }
  }
  ordered_json doc{{"meta", m}, {"rows", rows}};
  if (!r2.empty()) {
    std::sort(r2.begin(), r2.end());
    const std::size_t h = r2.size() / 2;
    doc["median_r_squared"] = r2.size() % 2 == 1 ? r2[h] : 0.5 * (r2[h - 1] + r2[h]);
  }
  Output out(c.output);
  out.stream() << doc.dump(2) << "\n";
  ErrorTally tally;
  report(tally, records, results);
  return tally.code;
}

// Flat key=value file; '#' starts a comment. Values fill options the command
// line left unset, so flags always win.
void apply_config(const std::string& path, CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitInput, "cannot open config " + path);
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    const std::string where = path + ":" + std::to_string(line);
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw CliError(kExitInput, where + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw CliError(kExitInput, where + ": empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      // keys meant for other commands are allowed, unknown keys are not
      static const std::vector<std::string> known{
          "rule",   "alpha",   "n-target", "k",         "j-count",     "eps-sigma",    "eps-norm",
          "seed",   "budgets", "resamples", "replications", "bon-k",   "n-sel",        "m-corr",
          "lambda-nsel", "cat-n-target", "m", "beta", "gamma", "steps", "input", "output"};
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw CliError(kExitInput, where + ": unknown key '" + key + "'");
      continue;
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw CliError(kExitInput, where + ": " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tail-extrapolated advantage estimation and best-of-N tools"};
  app.set_version_flag("--version", std::string("tailx ") + tailx_version());
  app.require_subcommand(1);

  Common c;
  auto io = [&](CLI::App* sub, bool input) {
    if (input) sub->add_option("--input,-i", c.input, "JSONL input ('-' for stdin)");
    sub->add_option("--output,-o", c.output, "output path ('-' for stdout)");
    sub->add_option("--config", c.config, "flat key=value config file; flags win");
  };

  std::string rule = "tea";
  auto* adv = app.add_subcommand("advantage", "per-group advantages as JSONL");
  io(adv, true);
  adv->add_option("--rule", rule, "tea-raw, tea, prefix-tea, grpo, grpo-z, bonmax-mean, bonmax-second, "
                                  "bon-mean, chow, cat-bon");
  c.params.add(adv, {"alpha", "n_target", "eps_sigma", "eps_norm", "k", "j_count", "bon_k", "n_sel", "m_corr",
                     "lambda_nsel", "cat_n_target", "seed"});

  std::size_t w_m = 64, w_k = 2, w_j = 4;
  bool w_theory = false;
  std::string w_alpha = "0.25";
  auto* weights = app.add_subcommand("weights", "prefix sizes and cancellation weights as JSON");
  io(weights, false);
  weights->add_option("--m", w_m, "group size (or split size for --theory)");
  weights->add_option("--k", w_k, "cancellation order");
  weights->add_option("--j-count", w_j, "number of prefixes");
  weights->add_flag("--theory", w_theory, "tail-count aligned prefixes");
  weights->add_option("--alpha", w_alpha, "tail fraction for --theory");

  std::string budgets = "1,2,4,8,16,32,64,128";
  auto* predict = app.add_subcommand("predict-bon", "predicted best-of-N from the tail vector");
  io(predict, true);
  predict->add_option("--budgets", budgets, "comma-separated N values");
  c.params.add(predict, {"alpha", "eps_sigma"});

  std::string baseline;
  std::size_t resamples = 1000, topk = 10;
  auto* eval = app.add_subcommand("eval-bon", "grouped best-of-N curve, bootstrap deltas and win/tie/loss");
  io(eval, true);
  eval->add_option("--budgets", budgets, "comma-separated N values");
  eval->add_option("--baseline", baseline, "JSONL to compare against");
  eval->add_option("--resamples", resamples, "bootstrap resamples");
  eval->add_option("--topk", topk, "prompts in the top-k validation score");
  c.params.add(eval, {"seed"});

  std::string estimators = "tea,prefix-tea:2:4", m_list = "256,512,1024,2048,4096", thresholds = "1.0,1.5";
  std::size_t replications = 0;
  auto* synth = app.add_subcommand("synth-bias-variance", "Monte Carlo bias/variance table as CSV");
  io(synth, false);
  synth->add_option("--estimators", estimators, "tea, oracle, prefix-tea:K:J, prefix-tea-same:K:J, rule:<name>");
  synth->add_option("--m", m_list, "comma-separated rollout budgets");
  synth->add_option("--replications", replications, "0 picks the default for each m");
  synth->add_option("--thresholds", thresholds, "score thresholds, one per gradient coordinate");
  c.params.add(synth, {"alpha", "n_target", "eps_sigma", "eps_norm", "k", "j_count", "bon_k", "n_sel",
                       "lambda_nsel", "cat_n_target", "seed"});

  std::string align_rules = "tea,grpo";
  std::size_t align_n = 128;
  auto* align = app.add_subcommand("align", "cosine between rule-induced and oracle directions");
  io(align, true);
  align->add_option("--rule", align_rules, "comma-separated rules");
  align->add_option("--n", align_n, "best-of-N budget of the oracle");
  c.params.add(align, {"alpha", "n_target", "eps_sigma", "eps_norm", "k", "j_count", "bon_k", "n_sel",
                       "lambda_nsel", "cat_n_target", "seed"});

  TrainFlags tf;
  auto* train = app.add_subcommand("train-synth", "softmax bandit training trajectory as CSV");
  io(train, false);
  train->add_option("--rule", tf.rule, "advantage rule");
  train->add_option("--m", tf.m, "rollouts per prompt");
  train->add_option("--p-batch", tf.p_batch, "prompts per step");
  train->add_option("--beta", tf.beta, "KL coefficient");
  train->add_option("--gamma", tf.gamma, "step size");
  train->add_option("--steps", tf.steps, "training steps");
  train->add_option("--prompts", tf.prompts, "prompts in the synthetic task");
  train->add_option("--actions", tf.actions, "actions per prompt");
  train->add_option("--spread", tf.spread, "reward noise spread across actions");
  train->add_option("--eval-n", tf.eval_n, "comma-separated evaluation budgets");
  train->add_option("--eval-every", tf.eval_every, "evaluation interval in steps (0: first and last)");
  train->add_option("--eval-samples", tf.eval_samples, "samples per prompt for evaluation");
  c.params.add(train, {"alpha", "n_target", "eps_sigma", "eps_norm", "k", "j_count", "bon_k", "n_sel",
                       "lambda_nsel", "cat_n_target", "seed"});

  double q_lo = 0.80, q_hi = 0.99;
  std::size_t grid = 20;
  auto* qq = app.add_subcommand("qq-fit", "per-prompt Gaussian QQ fit of the upper tail");
  io(qq, true);
  qq->add_option("--q-lo", q_lo, "lower quantile level");
  qq->add_option("--q-hi", q_hi, "upper quantile level");
  qq->add_option("--grid", grid, "quantile levels in the fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!c.config.empty()) apply_config(c.config, sub);
    if (sub == adv) return cmd_advantage(c, rule);
    if (sub == weights) return cmd_weights(c, w_m, w_k, w_j, w_theory, w_alpha);
    if (sub == predict) return cmd_predict_bon(c, budgets);
    if (sub == eval) return cmd_eval_bon(c, budgets, baseline, resamples, topk);
    if (sub == synth) return cmd_synth_bias_variance(c, estimators, m_list, replications, thresholds);
    if (sub == align) return cmd_align(c, align_rules, align_n);
    if (sub == train) return cmd_train_synth(c, tf);
    if (sub == qq) return cmd_qq_fit(c, q_lo, q_hi, grid);
  } catch (const CliError& e) {
    std::cout.flush();
    std::cerr << "tailx: " << e.what() << "\n";
    return e.code();
  } catch (const std::exception& e) {
    std::cout.flush();
    std::cerr << "tailx: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
