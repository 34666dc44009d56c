// Copyright 2026 The sf2lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sf2lab: single command-line entry point for data generation, training,
// scoring, evaluation and the loss-comparison studies.
//
// Exit status: 0 on success, 1 on a library error or failed check, 2 on a
// usage error. Failures print one line to stderr:
//   error: <Category>: <detail>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sf2/sf2.hpp"

namespace {

using namespace sf2;

// ---- shared option groups ----

struct ConfigOpts {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
};

std::string config_keys_footer() {
  std::string out = "\nConfig keys (section.key = value; default in parentheses):\n";
  for (const auto& k : kConfigKeys) out += "  " + std::string(k.key) + "  " + k.help + "\n";
  return out;
}

void add_config_opts(CLI::App* sub, ConfigOpts& o) {
  sub->add_option("--config", o.config, "experiment config file; empty uses built-in defaults")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", o.sets, "override one config key, KEY=VALUE (repeatable)")
      ->type_name("KEY=VALUE");
  o.seed_opt = sub->add_option("--seed", o.seed,
                               "root random seed; required unless the config sets train.seed")
                   ->always_capture_default(false);
  sub->footer(config_keys_footer());
}

// Defaults, then the config file, then --set overrides, then --seed.
TrainConfig load_config(const ConfigOpts& o) {
  std::map<std::string, std::string> kv;
  if (!o.config.empty()) kv = parse_ini(detail::read_file(o.config));
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(ErrorKind::Usage, "--set expects KEY=VALUE, got '" + s + "'");
    kv[std::string(detail::trim(s.substr(0, eq)))] = std::string(detail::trim(s.substr(eq + 1)));
  }
  TrainConfig cfg;
  apply_config(cfg, kv);
  if (o.seed_opt->count() > 0)
    cfg.seed = o.seed;
  else if (!kv.contains("train.seed"))
    fail(ErrorKind::Usage, "--seed is required (or set train.seed in the config)");
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  detail::write_file(path, [&](std::ostream& o) { o << text; });
}

void emit_report(const Report& r, const std::string& csv_path) {
  std::cout << r.text;
  if (!csv_path.empty()) write_text(csv_path, r.csv);
}

std::vector<NamedVector> to_named(std::span<const Utterance> utts, const Matrix<double>& emb) {
  std::vector<NamedVector> rows;
  rows.reserve(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto r = emb.row(i);
    rows.push_back({utts[i].utt_id, std::vector<double>(r.begin(), r.end())});
  }
  return rows;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---- one-line usage for error messages ----

std::string usage_line(const CLI::App& app, const CLI::App* sub) {
  if (sub == nullptr) {
    std::string u = "sf2lab {";
    bool first = true;
    for (const auto* s : app.get_subcommands({})) {
      u += (first ? "" : "|") + s->get_name();
      first = false;
    }
    return u + "} [options]";
  }
  std::string u = "sf2lab " + sub->get_name();
  for (const CLI::Option* o : sub->get_options()) {
    if (o == sub->get_help_ptr()) continue;
    std::string item = o->get_lnames().empty() ? o->get_name() : "--" + o->get_lnames().front();
    if (o->get_type_size_max() != 0 && !o->get_lnames().empty()) item += " " + o->get_type_name();
    if (!o->get_required()) item = "[" + item + "]";
    u += " " + item;
  }
  return u;
}

// ---- commands ----

int cmd_gen_data(const ConfigOpts& co, const std::string& out_dir) {
  const TrainConfig cfg = load_config(co);
  const SpeakerUniverse u = gen_universe(cfg.universe, cfg.seed);
  const TrialSet trials = make_trials(u.unseen, cfg.eval.n_target, cfg.eval.n_nontarget,
                                      Rng(cfg.seed).split("trials"));
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_utterances((dir / "train_utts.txt").string(), u.train);
  write_utterances((dir / "unseen_utts.txt").string(), u.unseen);
  write_trials((dir / "trials.txt").string(), trials);
  std::cout << "train_utts " << u.train.size() << "\nunseen_utts " << u.unseen.size()
            << "\ntrials " << trials.size() << "\n";
  return 0;
}

int cmd_train(const ConfigOpts& co, const std::string& resume, const std::string& ckpt_path,
              const std::string& record_path) {
  RunRecord r = resume.empty() ? train(load_config(co))
                               : Trainer::resume(load_checkpoint(resume)).finish();
  if (!ckpt_path.empty()) save_checkpoint(r.checkpoint, ckpt_path);
  if (!record_path.empty()) write_text(record_path, render_run_record(r));
  std::cout << report({{r.system, r.metrics}}).text;
  return 0;
}

int cmd_extract(const std::string& ckpt_path, const std::string& utts_path,
                const std::string& out) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const auto utts = read_utterances(utts_path);
  write_embeddings(out, to_named(utts, embed_utterances(ck.model, utts)));
  std::cout << "embeddings " << utts.size() << "\n";
  return 0;
}

int cmd_score(const std::string& emb_path, const std::string& trials_path,
              const std::string& cohort_path, std::size_t top_n, const std::string& out) {
  const EmbeddingMap emb = to_map(read_embeddings(emb_path));
  const TrialSet trials = read_trials(trials_path);
  ScoredTrials st = score_trials(emb, trials);
  if (!cohort_path.empty()) {
    const auto rows = read_embeddings(cohort_path);
    if (rows.empty()) fail(ErrorKind::InvalidConfig, "cohort file is empty");
    Matrix<double> cohort(rows.size(), rows.front().values.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].values.size() != cohort.cols())
        fail(ErrorKind::InvalidConfig, "cohort embeddings differ in dimension");
      std::copy(rows[r].values.begin(), rows[r].values.end(), cohort.row(r).begin());
    }
    if (top_n == 0) top_n = std::max<std::size_t>(2, (cohort.rows() + 5) / 10);
    st = asnorm(st, trials, emb, cohort, top_n);
  }
  std::vector<ScoreLine> lines;
  lines.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i)
    lines.push_back({trials[i].enroll, trials[i].test, st.scores[i]});
  write_scores(out, lines);
  std::cout << "scores " << lines.size() << "\n";
  return 0;
}

int cmd_metrics(const std::string& scores_path, const std::string& trials_path,
                const std::vector<double>& p_targets) {
  const auto st = join_scores(read_scores(scores_path), read_trials(trials_path));
  for (double p : p_targets) DcfParams{p}.validate();
  const auto m = compute_metrics("trials", st, p_targets, false);
  std::size_t targets = 0;
  for (bool t : st.is_target) targets += t ? 1 : 0;
  std::printf("trials %zu targets %zu nontargets %zu\n", st.size(), targets, st.size() - targets);
  std::printf("EER %.3f %%\n", 100.0 * m.eer);
  for (const auto& d : m.dcf) std::printf("minDCF(p_target=%g) %.3f\n", d.p_target, d.min_dcf);
  return 0;
}

int cmd_grad_check(const std::string& loss, std::size_t trials, std::uint64_t seed, double eps,
                   double tol) {
  std::vector<std::string> names;
  if (loss == "all")
    for (auto n : kLossPresets) names.emplace_back(n);
  else
    names.push_back(loss);
  bool ok = true;
  for (const auto& n : names) {
    const double err = random_loss_grad_check(n, trials, Rng(seed).split(n), eps);
    const bool pass = err <= tol;
    ok = ok && pass;
    std::printf("grad-check loss=%s trials=%zu eps=%g max_rel_error=%.3e tol=%g %s\n", n.c_str(),
                trials, eps, err, tol, pass ? "PASS" : "FAIL");
  }
  if (!ok) fail(ErrorKind::InvariantViolation, "gradient check exceeded tolerance");
  return 0;
}

int cmd_sweep(const ConfigOpts& co, const std::string& grid_path, std::size_t jobs,
              const std::string& csv) {
  TrainConfig cfg = load_config(co);
  const auto grid =
      grid_path.empty() ? default_ablation_grid() : parse_ablation_grid(detail::read_file(grid_path));
  const auto rows = run_ablation(grid, cfg, jobs);
  emit_report(ablation_table(rows), csv);
  for (const auto& r : rows)
    if (r.diverged)
      std::cerr << "note: cell lambda=" << format_real(r.cell.lambda) << " t="
                << format_real(r.cell.t) << " s=" << format_real(r.cell.s)
                << " m=" << format_real(r.cell.m) << " " << r.error << "\n";
  return 0;
}

int cmd_noise_study(const ConfigOpts& co, const std::vector<double>& proportions,
                    const std::string& losses, std::size_t runs, std::size_t jobs,
                    const std::string& csv) {
  const TrainConfig cfg = load_config(co);
  if (runs < 1) fail(ErrorKind::Usage, "--runs must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < runs; ++i) seeds.push_back(cfg.seed + i);
  const auto study = run_noise_study(proportions, split_commas(losses), seeds, cfg, jobs);
  emit_report(noise_study_table(study), csv);
  return 0;
}

int cmd_lmft(const std::string& ckpt_path, const LmftConfig& lc, const std::string& out_ckpt,
             const std::string& record_path) {
  const RunRecord r = lmft(load_checkpoint(ckpt_path), lc);
  if (!out_ckpt.empty()) save_checkpoint(r.checkpoint, out_ckpt);
  if (!record_path.empty()) write_text(record_path, render_run_record(r));
  std::cout << report({{r.system, r.metrics}}).text;
  return 0;
}

int cmd_compare(const std::vector<std::string>& records, const std::string& csv) {
  std::vector<ReportRow> rows;
  for (const auto& path : records) {
    const RunRecord r = parse_run_record(detail::read_file(path));
    rows.push_back({r.system, r.metrics});
  }
  emit_report(report(rows), csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sf2lab: loss-function lab for open-set speaker verification"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  ConfigOpts co_gen, co_train, co_sweep, co_noise;
  std::string out_dir = "data", resume, ckpt = "model.ckpt", record = "run.txt", utts,
              out = "embeddings.txt", emb, trials, cohort, scores, loss = "all", grid, csv,
              losses = "aamsoftmax,sphereface2", out_ckpt = "lmft.ckpt",
              lmft_record = "lmft_run.txt", score_out = "scores.txt";
  std::vector<std::string> records;
  std::vector<double> p_targets{0.01};
  std::vector<double> proportions{0.3};
  std::size_t top_n = 0, gc_trials = 100, jobs = 1, runs = 5;
  std::uint64_t gc_seed = 0;
  double eps = kGradCheckEps, tol = kGradCheckTolerance;
  LmftConfig lc;

  auto* gen = app.add_subcommand("gen-data", "generate a speaker universe and its trial list");
  add_config_opts(gen, co_gen);
  gen->add_option("--out-dir", out_dir, "directory for train_utts.txt, unseen_utts.txt, trials.txt");

  auto* tr = app.add_subcommand("train", "train one system and evaluate it on unseen speakers");
  add_config_opts(tr, co_train);
  tr->add_option("--resume", resume, "continue from this checkpoint (its config wins)")
      ->check(CLI::ExistingFile);
  tr->add_option("--checkpoint", ckpt, "checkpoint output path; empty to skip");
  tr->add_option("--record", record, "run record output path; empty to skip");

  auto* ex = app.add_subcommand("extract", "embed utterances with a trained checkpoint");
  ex->add_option("--checkpoint", ckpt, "trained checkpoint")->check(CLI::ExistingFile);
  ex->add_option("--utterances", utts, "utterance file")->required()->check(CLI::ExistingFile);
  ex->add_option("--out", out, "embedding output path");

  auto* sc = app.add_subcommand("score", "cosine-score a trial list");
  sc->add_option("--embeddings", emb, "embedding file")->required()->check(CLI::ExistingFile);
  sc->add_option("--trials", trials, "trial file")->required()->check(CLI::ExistingFile);
  sc->add_option("--cohort", cohort, "cohort embedding file; enables adaptive score normalization")
      ->check(CLI::ExistingFile);
  sc->add_option("--top-n", top_n, "cohort top-N; 0 for 10% of the cohort");
  sc->add_option("--out", score_out, "score output path");

  auto* me = app.add_subcommand("metrics", "EER and minDCF from score and trial files");
  me->add_option("--scores", scores, "score file")->required()->check(CLI::ExistingFile);
  me->add_option("--trials", trials, "trial file")->required()->check(CLI::ExistingFile);
  me->add_option("--p-target", p_targets, "target prior(s) for minDCF")->delimiter(',');

  auto* gc = app.add_subcommand("grad-check", "finite-difference check of loss gradients");
  gc->add_option("--loss", loss, "loss preset or 'all'");
  gc->add_option("--trials", gc_trials, "random configurations per loss");
  gc->add_option("--seed", gc_seed, "random seed")->required();
  gc->add_option("--eps", eps, "central-difference step");
  gc->add_option("--tol", tol, "maximum relative error");

  auto* sw = app.add_subcommand("sweep", "SphereFace2 hyperparameter sweep, one row per cell");
  add_config_opts(sw, co_sweep);
  sw->add_option("--grid", grid, "grid file, one 'lambda t s m' row per line; empty for the "
                                 "built-in 10-cell grid")
      ->check(CLI::ExistingFile);
  sw->add_option("--jobs", jobs, "parallel cells")->check(CLI::PositiveNumber);
  sw->add_option("--csv", csv, "also write the table as CSV");

  auto* ns = app.add_subcommand("noise-study", "label-noise robustness study");
  add_config_opts(ns, co_noise);
  ns->add_option("--proportions", proportions, "noise proportions (0 is always added)")
      ->delimiter(',');
  ns->add_option("--losses", losses, "comma-separated loss presets");
  ns->add_option("--runs", runs, "seeds per cell: seed, seed+1, ...");
  ns->add_option("--jobs", jobs, "parallel cells")->check(CLI::PositiveNumber);
  ns->add_option("--csv", csv, "also write the table as CSV");

  auto* lm = app.add_subcommand("lmft", "large-margin fine-tuning of a trained checkpoint");
  lm->add_option("--checkpoint", ckpt, "trained checkpoint")->check(CLI::ExistingFile);
  lm->add_option("--margin", lc.margin, "fine-tuning margin");
  lm->add_option("--lr", lc.lr, "constant learning rate");
  lm->add_option("--epochs", lc.epochs, "fine-tuning epochs");
  lm->add_option("--noise-factor", lc.noise_factor, "within-speaker noise multiplier");
  lm->add_option("--out-checkpoint", out_ckpt, "checkpoint output path; empty to skip");
  lm->add_option("--record", lmft_record, "run record output path; empty to skip");

  auto* cmp = app.add_subcommand("compare", "one report row per run record");
  cmp->add_option("records", records, "run record files")->required()->check(CLI::ExistingFile);
  cmp->add_option("--csv", csv, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const auto parsed = app.get_subcommands();
    std::cerr << "error: Usage: " << e.what() << "; expected: "
              << usage_line(app, parsed.empty() ? nullptr : parsed.front()) << "\n";
    return 2;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    const std::string name = active->get_name();
    if (name == "gen-data") return cmd_gen_data(co_gen, out_dir);
    if (name == "train") return cmd_train(co_train, resume, ckpt, record);
    if (name == "extract") return cmd_extract(ckpt, utts, out);
    if (name == "score") return cmd_score(emb, trials, cohort, top_n, score_out);
    if (name == "metrics") return cmd_metrics(scores, trials, p_targets);
    if (name == "grad-check") return cmd_grad_check(loss, gc_trials, gc_seed, eps, tol);
    if (name == "sweep") return cmd_sweep(co_sweep, grid, jobs, csv);
    if (name == "noise-study") return cmd_noise_study(co_noise, proportions, losses, runs, jobs, csv);
    if (name == "lmft") return cmd_lmft(ckpt, lc, out_ckpt, lmft_record);
    if (name == "compare") return cmd_compare(records, csv);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what();
    if (e.kind() == ErrorKind::Usage) std::cerr << "; expected: " << usage_line(app, active);
    std::cerr << "\n";
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
