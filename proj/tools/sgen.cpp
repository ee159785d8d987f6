#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sgen/container.hpp"
#include "sgen/error.hpp"
#include "sgen/generator.hpp"
#include "sgen/inference.hpp"
#include "sgen/parallel.hpp"
#include "sgen/synth.hpp"
#include "sgen/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;
constexpr int kExitInvariant = 3;

struct Settings {
  std::optional<std::string> variant;
  std::optional<double> lambda;
  std::optional<double> tropics_deg;
  std::optional<std::size_t> blocks;
  std::optional<bool> refit_pairs;
  std::optional<bool> ar1;
  std::optional<std::size_t> max_evals;
  std::optional<int> restarts;
  std::optional<int> max_shift;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> geo;
  std::optional<std::string> out;
  std::optional<std::string> report;
};

// Config file values fill only what no flag has set.
void merge_config(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  auto take = [&](const char* key, auto& slot) {
    if (!j.contains(key) || slot) return;
    try {
      slot = j.at(key).get<typename std::remove_reference_t<decltype(slot)>::value_type>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, std::string("config key '") + key + "': " + e.what());
    }
  };
  static const std::vector<std::string> known{"variant", "lambda", "tropics_deg", "blocks", "refit_pairs",
                                              "ar1",     "max_evals", "restarts", "max_shift", "seed",
                                              "workers", "geo",   "out",      "report"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  take("variant", s.variant);
  take("lambda", s.lambda);
  take("tropics_deg", s.tropics_deg);
  take("blocks", s.blocks);
  take("refit_pairs", s.refit_pairs);
  take("ar1", s.ar1);
  take("max_evals", s.max_evals);
  take("restarts", s.restarts);
  take("max_shift", s.max_shift);
  take("seed", s.seed);
  take("workers", s.workers);
  take("geo", s.geo);
  take("out", s.out);
  take("report", s.report);
}

FitOptions fit_options(const Settings& s) {
  FitOptions o;
  if (s.variant) o.variant = parse_variant(*s.variant);
  if (s.lambda) {
    if (!(*s.lambda > 0.0 && *s.lambda <= 1.0)) throw Error(ErrorCode::ConfigError, "lambda must lie in (0, 1]");
    o.lambda = *s.lambda;
  }
  if (s.tropics_deg) {
    if (!(*s.tropics_deg >= 0.0 && *s.tropics_deg <= 90.0))
      throw Error(ErrorCode::ConfigError, "tropics bound must lie in [0, 90]");
    o.tropics_deg = *s.tropics_deg;
  }
  if (s.blocks) o.blocks = *s.blocks;
  if (s.refit_pairs) o.refit_pairs = *s.refit_pairs;
  if (s.ar1) o.var1 = !*s.ar1;
  if (s.max_evals) {
    if (*s.max_evals < 10) throw Error(ErrorCode::ConfigError, "max_evals must be at least 10");
    o.max_evals = *s.max_evals;
  }
  if (s.restarts) {
    if (*s.restarts < 0) throw Error(ErrorCode::ConfigError, "restarts must be non-negative");
    o.restarts = *s.restarts;
  }
  if (s.max_shift) {
    if (*s.max_shift < 0) throw Error(ErrorCode::ConfigError, "max_shift must be non-negative");
    o.max_shift = *s.max_shift;
  }
  if (s.seed) o.seed = *s.seed;
  o.workers = resolve_workers(s.workers.value_or(0));
  return o;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  detail::write_file(path, text);
}

// Land mask and altitude recovered from a model's stored surface codes.
GeoDescriptors model_geo(const SGModel& model) {
  GeoDescriptors geo = GeoDescriptors::all_ocean(model.grid.M, model.grid.N);
  if (model.surface.empty()) return geo;
  for (std::size_t i = 0; i < geo.land_mask.size(); ++i) {
    geo.land_mask[i] = model.surface[i] != kSurfaceOcean;
    geo.altitude[i] = model.altitude[i];
  }
  return geo;
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

void require_seed(bool strict, const Settings& s, const char* cmd) {
  if (strict && !s.seed) throw Error(ErrorCode::ConfigError, std::string(cmd) + " --strict requires an explicit --seed");
}

int cmd_synth(const std::string& preset, const std::string& truth_file, std::size_t runs, const Settings& s,
              bool strict) {
  require_seed(strict, s, "synth");
  const fs::path dir = s.out.value_or(".");
  fs::create_directories(dir);
  const unsigned workers = resolve_workers(s.workers.value_or(0));
  const std::uint64_t seed = s.seed.value_or(0);
  SynthOutput syn;
  std::string stem;
  if (!truth_file.empty()) {
    syn.truth = load_model(truth_file);
    syn.geo = model_geo(syn.truth);
    syn.ensemble = Generator(syn.truth).generate(runs ? runs : 5, seed, workers);
    stem = fs::path(truth_file).stem().string();
  } else {
    syn = synthesize(preset, seed, workers);
    if (runs) syn.ensemble = Generator(syn.truth).generate(runs, seed, workers);
    stem = preset;
  }
  write_ensemble(syn.ensemble, dir / (stem + ".ensf"));
  write_geo(syn.geo, dir / (stem + ".geo"));
  save_model(syn.truth, dir / (stem + ".truth.sgm"));
  const auto& g = syn.truth.grid;
  std::cout << "synth " << stem << ": M=" << g.M << " N=" << g.N << " K=" << g.K << " R=" << syn.ensemble.R
            << " variant=" << to_string(syn.truth.variant) << "\n"
            << "  " << (dir / (stem + ".ensf")).string() << "\n  " << (dir / (stem + ".geo")).string() << "\n  "
            << (dir / (stem + ".truth.sgm")).string() << "\n";
  return kExitOk;
}

int cmd_fit(const std::string& ensemble_file, const Settings& s, bool strict) {
  require_seed(strict, s, "fit");
  const FitOptions opt = fit_options(s);
  const EnsembleField field = load_ensemble(ensemble_file);
  GeoDescriptors geo;
  if (s.geo) {
    geo = load_geo(*s.geo);
  } else if (opt.variant != Variant::AX) {
    throw Error(ErrorCode::ConfigError, std::string("variant '") + std::string(to_string(opt.variant)) +
                                            "' needs land/altitude descriptors: pass --geo FILE.geo");
  } else {
    geo = GeoDescriptors::all_ocean(field.spec.M, field.spec.N);
  }
  const auto out = fit(field, geo, opt);
  const fs::path model_path = s.out.value_or(fs::path(ensemble_file).replace_extension(".sgm").string());
  save_model(out.model, model_path);
  const fs::path report_path = s.report.value_or(fs::path(model_path).replace_extension(".report.json").string());
  write_text(report_path, out.report.to_json() + "\n");

  const auto& r = out.report;
  std::cout << "fit " << to_string(r.variant) << (r.var1 ? "+var1" : "+ar1") << " P=" << r.blocks << "\n"
            << "  step2 loglik/obs " << fmt(r.normalized(r.step2_loglik), 8) << "\n"
            << "  step3 loglik/obs " << fmt(r.normalized(r.step3_loglik), 8) << "\n";
  if (opt.refit_pairs) {
    std::size_t kept = 0;
    for (const auto& rec : r.refits) kept += rec.accepted;
    std::cout << "  refit loglik/obs " << fmt(r.normalized(r.refit_loglik), 8) << " (" << kept << "/"
              << r.refits.size() << " pairs kept)\n";
  }
  std::cout << "  total loglik " << fmt(r.total_loglik, 12) << "  params " << r.n_params << "  BIC "
            << fmt(r.bic, 12) << "\n"
            << "  model " << model_path.string() << " (" << fs::file_size(model_path) << " bytes)\n"
            << "  report " << report_path.string() << "\n";
  if (!r.converged) {
    std::cerr << "warning: some optimizations stopped at the evaluation budget\n";
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_generate(const std::string& model_file, std::size_t count, const Settings& s, bool strict) {
  require_seed(strict, s, "generate");
  const SGModel model = load_model(model_file);
  GenerationRequest req;
  req.count = count;
  req.seed = s.seed.value_or(0);
  req.pattern = s.out.value_or("surrogate_{i}.ensf");
  req.workers = resolve_workers(s.workers.value_or(0));
  const auto t0 = std::chrono::steady_clock::now();
  const auto files = generate_files(model, req);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "generated " << count << " surrogate(s) in " << fmt(secs, 4) << " s\n";
  for (const auto& f : files) std::cout << "  " << f.string() << "\n";
  return kExitOk;
}

struct Evaluation {
  double loglik = 0.0;
  std::size_t n_params = 0;
  double bic = 0.0;
  std::size_t n_obs = 0;
  ContrastStats emp, fitted;
};

Evaluation evaluate(const SGModel& model, const EnsembleField& field) {
  if (!(field.spec == model.grid)) throw Error(ErrorCode::GridMismatch, "ensemble grid differs from the model grid");
  Evaluation e;
  e.loglik = factorized_restricted_loglik(field, model, model.meta.blocks);
  e.n_params = model_param_count(model);
  e.n_obs = (field.R - 1) * field.spec.K * field.spec.M * field.spec.N;
  e.bic = band_bic(e.loglik, e.n_params, e.n_obs);
  const auto anoms = ensemble_mean_and_anomalies(field);
  e.emp = contrast_variances(whiten(anoms, model.temporal));
  e.fitted = fitted_contrasts(model);
  return e;
}

json quartile_json(const std::vector<double>& v) {
  const auto q = quartiles(v);
  return {{"q25", q.q25}, {"q50", q.q50}, {"q75", q.q75}};
}

std::vector<double> abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  return d;
}

// Runs of several files (e.g. single-run surrogates) pooled into one ensemble.
EnsembleField load_runs(const std::vector<std::string>& files) {
  EnsembleField field = load_ensemble(files.front());
  for (std::size_t i = 1; i < files.size(); ++i) {
    const EnsembleField more = load_ensemble(files[i]);
    if (!(more.spec == field.spec)) throw Error(ErrorCode::GridMismatch, files[i] + " has a different grid");
    field.values.insert(field.values.end(), more.values.begin(), more.values.end());
    field.R += more.R;
  }
  if (field.R < 2)
    throw Error(ErrorCode::SingleRun, "validation needs at least two runs; pass more files or a multi-run ensemble");
  return field;
}

int cmd_validate(const std::string& model_file, const std::vector<std::string>& ensemble_files, const Settings& s) {
  const SGModel model = load_model(model_file);
  const EnsembleField field = load_runs(ensemble_files);
  const auto e = evaluate(model, field);
  const auto& g = model.grid;
  json j;
  j["variant"] = std::string(to_string(model.variant));
  j["loglik"] = e.loglik;
  j["loglik_per_obs"] = e.loglik / static_cast<double>(e.n_obs);
  j["n_params"] = e.n_params;
  j["bic"] = e.bic;
  j["contrast_abs_error"] = {{"ew", quartile_json(abs_diff(e.emp.ew, e.fitted.ew))},
                             {"ns", quartile_json(abs_diff(e.emp.ns, e.fitted.ns))}};
  const auto st = storage_report(model_file, std::vector<fs::path>(ensemble_files.begin(), ensemble_files.end()));
  j["storage"] = {{"model_bytes", st.model_bytes}, {"ensemble_bytes", st.ensemble_bytes}, {"ratio", st.ratio}};

  if (s.out) {
    const fs::path dir = *s.out;
    fs::create_directories(dir);
    std::ostringstream c;
    c << "band,lon_index,latitude,longitude,ew_empirical,ew_fitted,ns_empirical,ns_fitted\n";
    for (std::size_t m = 0; m < g.M; ++m)
      for (std::size_t n = 0; n < g.N; ++n) {
        const std::size_t i = g.loc(m, n);
        c << m << ',' << n << ',' << g.latitudes[m] << ',' << g.longitudes[n] << ',' << e.emp.ew[i] << ','
          << e.fitted.ew[i] << ',' << e.emp.ns[i] << ',' << e.fitted.ns[i] << '\n';
      }
    write_text(dir / "contrasts.csv", c.str());

    const int y0 = g.start_year, y1 = g.start_year + static_cast<int>(g.K) - 1;
    std::ostringstream t;
    t << "band,lon_index,latitude,longitude";
    for (std::size_t r = 0; r < field.R; ++r) t << ",trend_run" << r;
    t << '\n';
    std::vector<std::vector<double>> trends;
    for (std::size_t r = 0; r < field.R; ++r) trends.push_back(linear_trend(field, r, y0, y1));
    for (std::size_t i = 0; i < g.locations(); ++i) {
      t << i / g.N << ',' << i % g.N << ',' << g.latitudes[i / g.N] << ',' << g.longitudes[i % g.N];
      for (const auto& tr : trends) t << ',' << tr[i];
      t << '\n';
    }
    write_text(dir / "trends.csv", t.str());

    const auto pct = ensemble_percentiles(field, g.K - 1);
    std::ostringstream p;
    p << "band,lon_index,latitude,longitude,speed_p2.5,speed_p50,speed_p97.5,wpd_p2.5,wpd_p50,wpd_p97.5\n";
    for (std::size_t i = 0; i < g.locations(); ++i) {
      p << i / g.N << ',' << i % g.N << ',' << g.latitudes[i / g.N] << ',' << g.longitudes[i % g.N];
      for (const auto& v : pct) p << ',' << v[i];
      for (const auto& v : pct) p << ',' << wind_power_density(std::max(0.0, v[i]));
      p << '\n';
    }
    write_text(dir / "percentiles.csv", p.str());
    write_text(dir / "summary.json", j.dump(2) + "\n");
  }

  std::cout << "validate " << to_string(model.variant) << " against " << field.R << " run(s)\n"
            << "  loglik/obs " << fmt(e.loglik / static_cast<double>(e.n_obs), 8) << "  params " << e.n_params
            << "  BIC " << fmt(e.bic, 12) << "\n"
            << "  |contrast error| median  ew " << fmt(j["contrast_abs_error"]["ew"]["q50"].get<double>(), 4)
            << "  ns " << fmt(j["contrast_abs_error"]["ns"]["q50"].get<double>(), 4) << "\n"
            << "  storage ratio " << fmt(st.ratio, 4) << " (" << st.ensemble_bytes << " / " << st.model_bytes
            << " bytes)\n";
  return kExitOk;
}

int cmd_compare(const std::string& a_file, const std::string& b_file, const std::string& ensemble_file,
                const Settings& s) {
  const SGModel a = load_model(a_file), b = load_model(b_file);
  if (!(a.grid == b.grid)) throw Error(ErrorCode::GridMismatch, "models were fitted on different grids");
  const EnsembleField field = load_ensemble(ensemble_file);
  const auto ea = evaluate(a, field), eb = evaluate(b, field);
  const double nobs = static_cast<double>(ea.n_obs);
  std::cout << std::left << std::setw(10) << "model" << std::setw(8) << "variant" << std::setw(10) << "params"
            << std::setw(18) << "loglik/obs" << "BIC\n";
  auto row = [&](const char* name, const SGModel& m, const Evaluation& e) {
    std::cout << std::left << std::setw(10) << name << std::setw(8) << to_string(m.variant) << std::setw(10)
              << e.n_params << std::setw(18) << fmt(e.loglik / nobs, 8) << fmt(e.bic, 12) << "\n";
  };
  row("A", a, ea);
  row("B", b, eb);
  std::cout << "delta loglik/obs (B - A) " << fmt((eb.loglik - ea.loglik) / nobs, 6) << "; lower BIC: "
            << (eb.bic < ea.bic ? "B" : "A") << "\n";
  const auto imp_ew = contrast_improvement(ea.emp.ew, ea.fitted.ew, eb.fitted.ew);
  const auto imp_ns = contrast_improvement(ea.emp.ns, ea.fitted.ns, eb.fitted.ns);
  const auto qe = quartiles(imp_ew), qn = quartiles(imp_ns);
  std::cout << "contrast improvement of B over A (q25 / q50 / q75)\n"
            << "  ew " << fmt(qe.q25, 4) << " / " << fmt(qe.q50, 4) << " / " << fmt(qe.q75, 4) << "\n"
            << "  ns " << fmt(qn.q25, 4) << " / " << fmt(qn.q50, 4) << " / " << fmt(qn.q75, 4) << "\n";
  if (s.out) {
    std::ostringstream c;
    c << "band,lon_index,latitude,longitude,ew_improvement,ns_improvement\n";
    const auto& g = a.grid;
    for (std::size_t i = 0; i < g.locations(); ++i)
      c << i / g.N << ',' << i % g.N << ',' << g.latitudes[i / g.N] << ',' << g.longitudes[i % g.N] << ','
        << imp_ew[i] << ',' << imp_ns[i] << '\n';
    write_text(*s.out, c.str());
  }
  return kExitOk;
}

int cmd_info(const std::string& model_file) {
  const SGModel m = load_model(model_file);
  const auto& g = m.grid;
  json j;
  j["file"] = model_file;
  j["bytes"] = fs::file_size(model_file);
  j["software"] = m.meta.software;
  j["variant"] = std::string(to_string(m.variant));
  j["grid"] = {{"M", g.M}, {"N", g.N}, {"K", g.K}, {"start_year", g.start_year},
               {"latitude_range", {g.latitudes.front(), g.latitudes.back()}}};
  j["mean"] = {{"lambda", m.mean.lambda}, {"rank", m.mean.rank()}};
  j["latitudinal"] = {{"model", m.meta.var1 ? "var1" : "ar1"}, {"xi", m.lat.xi_global}, {"tau", m.lat.tau_global},
                      {"a", m.lat.a}, {"b", m.lat.b}, {"tropics_bound", m.lat.tropics_bound},
                      {"blocks", m.meta.blocks}};
  j["fit"] = {{"loglik", m.meta.loglik}, {"bic", m.meta.bic}, {"n_params", m.meta.n_params},
              {"n_obs", m.meta.n_obs}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::IOError:
    case ErrorCode::ConfigError: return kExitUsage;
    default: return kExitInvariant;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sgen: fit, store and sample space-time stochastic generators for gridded ensembles"};
  app.require_subcommand(1);
  Settings s;
  std::string config;
  bool strict = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON config file; flags take precedence");
    sub->add_flag("--strict", strict, "CI mode: randomized commands require --seed");
    sub->add_option("--seed", s.seed, "random seed");
    sub->add_option("--workers", s.workers, "worker threads (default: SG_WORKERS or hardware)");
    sub->add_option("--out", s.out, "output path");
  };

  std::string preset = "ax-small", truth;
  std::size_t runs = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic ensemble, its descriptors and the truth model");
  common(synth);
  synth->add_option("--preset", preset, "built-in truth model")
      ->check(CLI::IsMember(preset_names()));
  synth->add_option("--model", truth, "simulate from this .sgm instead of a preset")->check(CLI::ExistingFile);
  synth->add_option("--runs", runs, "number of runs (default: 5)");

  std::string ensemble;
  auto* fitc = app.add_subcommand("fit", "fit a model to an ensemble");
  common(fitc);
  fitc->add_option("ensemble", ensemble, "input .ensf")->required();
  fitc->add_option("--geo", s.geo, "land mask and altitude (.geo); required for lao/alt");
  fitc->add_option("--variant", s.variant, "ax, lao or alt")->check(CLI::IsMember({"ax", "lao", "alt"}));
  fitc->add_option("--lambda", s.lambda, "mean smoothing weight in (0, 1]");
  fitc->add_option("--tropics-deg", s.tropics_deg, "tropical band bound in degrees");
  fitc->add_option("--blocks", s.blocks, "wavenumber blocks P for the latitudinal model");
  fitc->add_flag("--refit-pairs", s.refit_pairs, "re-optimize adjacent band pairs jointly");
  fitc->add_flag("--ar1", s.ar1, "restrict the latitudinal model to AR(1)");
  fitc->add_option("--max-evals", s.max_evals, "simplex evaluation budget per run");
  fitc->add_option("--restarts", s.restarts, "simplex restarts");
  fitc->add_option("--max-shift", s.max_shift, "largest indicator shift |g| searched");
  fitc->add_option("--report", s.report, "JSON report path");

  std::string model_file;
  std::size_t count = 1;
  auto* gen = app.add_subcommand("generate", "draw surrogate runs from a model");
  common(gen);
  gen->add_option("model", model_file, "input .sgm")->required()->check(CLI::ExistingFile);
  gen->add_option("--count", count, "number of surrogates")->check(CLI::PositiveNumber);

  std::vector<std::string> ensembles;
  auto* val = app.add_subcommand("validate", "contrast, trend, percentile and storage diagnostics");
  common(val);
  val->add_option("model", model_file, "input .sgm")->required()->check(CLI::ExistingFile);
  val->add_option("ensembles", ensembles, "ensemble file(s); their runs are pooled")->required();

  std::string model_b;
  auto* cmp = app.add_subcommand("compare", "compare two models on one ensemble");
  common(cmp);
  cmp->add_option("model_a", model_file, "reference .sgm")->required()->check(CLI::ExistingFile);
  cmp->add_option("model_b", model_b, "alternative .sgm")->required()->check(CLI::ExistingFile);
  cmp->add_option("ensemble", ensemble, "ensemble .ensf")->required();

  auto* info = app.add_subcommand("info", "summarize a model file");
  info->add_option("model", model_file, "input .sgm")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!config.empty()) merge_config(config, s);
    if (s.variant) parse_variant(*s.variant);
    if (synth->parsed()) return cmd_synth(truth.empty() ? preset : "", truth, runs, s, strict);
    if (fitc->parsed()) return cmd_fit(ensemble, s, strict);
    if (gen->parsed()) return cmd_generate(model_file, count, s, strict);
    if (val->parsed()) return cmd_validate(model_file, ensembles, s);
    if (cmp->parsed()) return cmd_compare(model_file, model_b, ensemble, s);
    if (info->parsed()) return cmd_info(model_file);
  } catch (const Error& e) {
    std::cerr << "sgen: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "sgen: IOError: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "sgen: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitUsage;
}
