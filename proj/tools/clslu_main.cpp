// clslu: cross-lingual slot-filling / intent-detection workbench.
//
// Subcommands: synth, train, eval, ablate, probe, gradcheck. Every
// randomized command requires an explicit --seed and is deterministic
// given one; outputs land under --out-dir.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clslu/checkpoint.hpp"
#include "clslu/config.hpp"
#include "clslu/probe.hpp"
#include "clslu/training.hpp"
#include "clslu/verify.hpp"

namespace fs = std::filesystem;
using namespace clslu;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

ConfigFile load_config(const std::string& path) {
  if (path.empty()) return ConfigFile();
  return ConfigFile::load(path);
}

SynthConfig synth_config(const ConfigFile& cfg) {
  SynthConfig s;
  s.vocab_size = cfg.get_int("synth", "vocab_size", s.vocab_size);
  const std::string counts =
      cfg.get("synth", "per_split_counts",
              std::to_string(s.train_count) + "/" + std::to_string(s.valid_count) + "/" +
                  std::to_string(s.test_count));
  if (std::sscanf(counts.c_str(), "%ld/%ld/%ld", &s.train_count, &s.valid_count,
                  &s.test_count) != 3)
    throw Error("config: per_split_counts must look like 600/100/200, got '" + counts + "'");
  s.noise_sigma = cfg.get_double("synth", "noise_sigma", s.noise_sigma);
  s.order_perturb_prob = cfg.get_double("synth", "order_perturb_prob", s.order_perturb_prob);
  s.emb_dim = cfg.get_int("synth", "emb_dim", s.emb_dim);
  s.source_lang = cfg.get("synth", "source_lang", s.source_lang);
  s.target_lang = cfg.get("synth", "target_lang", s.target_lang);
  return s;
}

struct DataBundle {
  Corpus corpus;
  EmbeddingTable table;
  std::map<std::string, std::string> cipher;
  std::string source, target;
};

DataBundle load_data(const ConfigFile& cfg, uint64_t run_seed) {
  DataBundle bundle;
  const bool synthetic = cfg.get_bool("data", "synthetic", !cfg.has("data", "dir"));
  if (synthetic) {
    SynthConfig s = synth_config(cfg);
    const uint64_t seed =
        static_cast<uint64_t>(cfg.get_int("synth", "seed", static_cast<int64_t>(run_seed)));
    Rng rng(seed);
    SynthOutput out = make_synthetic_pair(s, rng);
    bundle.corpus = std::move(out.corpus);
    bundle.table = std::move(out.embeddings);
    bundle.cipher = std::move(out.cipher);
    bundle.source = s.source_lang;
    bundle.target = s.target_lang;
  } else {
    const std::string dir = cfg.get("data", "dir", "");
    if (dir.empty()) throw Error("config: [data] dir is required for file corpora");
    LoadStats stats;
    bundle.corpus = load_corpus(dir, cfg.get("data", "format", "tsv"), &stats);
    if (stats.bio_repairs > 0)
      std::cerr << "warning: repaired " << stats.bio_repairs << " BIO label(s) while loading "
                << dir << "\n";
    const std::string emb = cfg.get("data", "embeddings", "");
    if (emb.empty()) throw Error("config: [data] embeddings is required for file corpora");
    bundle.table = EmbeddingTable::load(emb);
    const auto langs = bundle.corpus.languages();
    bundle.source = cfg.get("data", "source", langs.empty() ? "" : langs.front());
    bundle.target = cfg.get("data", "target", langs.size() > 1 ? langs[1] : "");
  }
  return bundle;
}

TrainConfig train_config(const ConfigFile& cfg, const DataBundle& data, uint64_t seed) {
  TrainConfig t;
  t.seed = seed;
  t.epochs = cfg.get_int("train", "epochs", t.epochs);
  t.learning_rate = cfg.get_double("train", "learning_rate", t.learning_rate);
  t.batch_size = cfg.get_int("train", "batch_size", t.batch_size);
  t.pairs_per_step = cfg.get_int("train", "pairs_per_step", t.pairs_per_step);
  t.pretrain_epochs = cfg.get_int("train", "pretrain_epochs", t.pretrain_epochs);
  t.early_stop_patience = cfg.get_int("train", "early_stop_patience", t.early_stop_patience);
  t.fraction = cfg.get_double("train", "fraction", t.fraction);
  const std::string regime = cfg.get("train", "regime", "zero_shot");
  if (regime == "zero_shot")
    t.regime = TrainConfig::Regime::zero_shot;
  else if (regime == "few_shot")
    t.regime = TrainConfig::Regime::few_shot;
  else
    throw Error("config: unknown regime '" + regime + "'");
  const std::string decay = cfg.get("train", "alpha_decay", "linear");
  if (decay == "linear")
    t.alpha_decay = Schedule::Decay::linear;
  else if (decay == "exponential")
    t.alpha_decay = Schedule::Decay::exponential;
  else
    throw Error("config: unknown alpha_decay '" + decay + "'");
  t.use_lr = cfg.get_bool("train", "lr", t.use_lr);
  t.use_alvm = cfg.get_bool("train", "alvm", t.use_alvm);
  t.use_delex = cfg.get_bool("train", "delex", t.use_delex);
  t.use_pretrain = cfg.get_bool("train", "pretrain", t.use_pretrain);

  t.dims.utter_hidden = cfg.get_int("model", "utter_hidden", t.dims.utter_hidden);
  t.dims.utter_layers = cfg.get_int("model", "utter_layers", t.dims.utter_layers);
  t.dims.label_emb = cfg.get_int("model", "label_emb", t.dims.label_emb);
  t.dims.label_hidden = cfg.get_int("model", "label_hidden", t.dims.label_hidden);
  t.dims.latent = cfg.get_int("model", "latent", t.dims.latent);
  t.dims.dropout = cfg.get_double("model", "dropout", t.dims.dropout);

  t.source_lang = data.source;
  t.target_lang = data.target;
  return t;
}

// "--toggles lr,alvm" turns the listed features on and the rest off.
void apply_toggles(TrainConfig& cfg, const std::string& toggles) {
  cfg.use_lr = cfg.use_alvm = cfg.use_delex = cfg.use_pretrain = false;
  std::stringstream ss(toggles);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "lr")
      cfg.use_lr = true;
    else if (item == "alvm")
      cfg.use_alvm = true;
    else if (item == "delex")
      cfg.use_delex = true;
    else if (item == "pretrain")
      cfg.use_pretrain = true;
    else if (item != "none" && !item.empty())
      throw Error("unknown toggle '" + item + "' (expected lr, alvm, delex, pretrain)");
  }
}

std::string metrics_csv(const EvalResult& valid, const EvalResult& test) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "metric,value\n"
                "valid_intent_accuracy,%.6f\n"
                "valid_slot_f1,%.6f\n"
                "test_intent_accuracy,%.6f\n"
                "test_slot_precision,%.6f\n"
                "test_slot_recall,%.6f\n"
                "test_slot_f1,%.6f\n",
                valid.intent_accuracy, valid.slot_f1, test.intent_accuracy,
                test.slot_precision, test.slot_recall, test.slot_f1);
  return buf;
}

std::string per_slot_csv(const EvalResult& r) {
  std::ostringstream os;
  os << "slot_type,precision,recall,f1,gold,pred,matched\n";
  char buf[160];
  for (const auto& [type, sc] : r.per_type) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%lld,%lld,%lld\n", sc.precision,
                  sc.recall, sc.f1, static_cast<long long>(sc.gold),
                  static_cast<long long>(sc.pred), static_cast<long long>(sc.matched));
    os << type << buf;
  }
  return os.str();
}

int cmd_synth(const CommonArgs& args) {
  const ConfigFile cfg = load_config(args.config_path);
  SynthConfig s = synth_config(cfg);
  Rng rng(args.seed);
  SynthOutput out = make_synthetic_pair(s, rng);
  fs::create_directories(args.out_dir);
  write_corpus(out.corpus, args.out_dir);
  out.embeddings.save(fs::path(args.out_dir) / "embeddings.txt");
  std::ostringstream cipher;
  for (const auto& [src, trg] : out.cipher) cipher << src << '\t' << trg << '\n';
  write_text(fs::path(args.out_dir) / "cipher.tsv", cipher.str());
  std::cout << "synth: wrote " << out.corpus.train(s.source_lang).size() << "/"
            << out.corpus.valid(s.source_lang).size() << "/"
            << out.corpus.test(s.source_lang).size() << " utterances per language under "
            << args.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& regime_flag, double fraction_flag,
              const std::string& toggles_flag) {
  const ConfigFile cfg = load_config(args.config_path);
  DataBundle data = load_data(cfg, args.seed);
  TrainConfig t = train_config(cfg, data, args.seed);
  if (!regime_flag.empty()) {
    if (regime_flag == "zero_shot")
      t.regime = TrainConfig::Regime::zero_shot;
    else if (regime_flag == "few_shot")
      t.regime = TrainConfig::Regime::few_shot;
    else
      throw CLI::ValidationError("--regime must be zero_shot or few_shot");
  }
  if (fraction_flag >= 0.0) t.fraction = fraction_flag;
  if (!toggles_flag.empty()) apply_toggles(t, toggles_flag);

  ExperimentResult res = run_experiment(data.corpus, data.table, t);

  fs::create_directories(args.out_dir);
  write_text(fs::path(args.out_dir) / "train_log.csv", res.log_csv);
  save_checkpoint(fs::path(args.out_dir) / "model.ckpt", res.model);
  write_text(fs::path(args.out_dir) / "metrics.csv", metrics_csv(res.valid, res.test));
  write_text(fs::path(args.out_dir) / "per_slot.csv", per_slot_csv(res.test));

  if (t.regime == TrainConfig::Regime::few_shot)
    std::cout << "train: few_shot target train size " << res.target_train_size << "\n";
  std::cout << "train: best epoch " << res.best_epoch << " of " << res.epochs_run
            << ", valid slot F1 " << res.valid.slot_f1 << ", valid intent acc "
            << res.valid.intent_accuracy << "\n"
            << "train: test slot F1 " << res.test.slot_f1 << ", test intent acc "
            << res.test.intent_accuracy << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& out_dir,
             const std::string& checkpoint, const std::string& lang,
             const std::string& split) {
  const ConfigFile cfg = load_config(config_path);
  // Checkpoints are self-contained; the seed only matters when the config
  // asks for a synthetic corpus, whose generation seed comes from [synth].
  DataBundle data = load_data(cfg, static_cast<uint64_t>(cfg.get_int("synth", "seed", 0)));
  SluModel model = load_checkpoint(checkpoint);
  const std::string eval_lang = lang.empty() ? (data.target.empty() ? data.source : data.target)
                                             : lang;
  const std::vector<Utterance>* utts = nullptr;
  if (split == "train")
    utts = &data.corpus.train(eval_lang);
  else if (split == "valid")
    utts = &data.corpus.valid(eval_lang);
  else if (split == "test")
    utts = &data.corpus.test(eval_lang);
  else
    throw CLI::ValidationError("--split must be train, valid or test");

  EvalResult r = evaluate_model(model, data.table, *utts);
  fs::create_directories(out_dir);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "metric,value\nintent_accuracy,%.6f\nslot_precision,%.6f\n"
                "slot_recall,%.6f\nslot_f1,%.6f\n",
                r.intent_accuracy, r.slot_precision, r.slot_recall, r.slot_f1);
  write_text(fs::path(out_dir) / "metrics.csv", buf);
  write_text(fs::path(out_dir) / "per_slot.csv", per_slot_csv(r));
  std::cout << "eval: " << eval_lang << "." << split << " intent acc " << r.intent_accuracy
            << ", slot F1 " << r.slot_f1 << (r.no_spans ? " (no spans)" : "") << "\n";
  return 0;
}

int cmd_ablate(const CommonArgs& args, const std::string& rows_flag, int64_t seeds_per_row) {
  const ConfigFile cfg = load_config(args.config_path);
  DataBundle data = load_data(cfg, args.seed);
  TrainConfig base = train_config(cfg, data, args.seed);

  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(rows_flag);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<std::string> toggles;
    std::stringstream rs(row);
    std::string item;
    while (std::getline(rs, item, ','))
      if (!item.empty()) toggles.push_back(item);
    if (toggles.empty()) toggles.push_back("none");
    rows.push_back(std::move(toggles));
  }
  if (rows.empty()) throw CLI::ValidationError("--rows must name at least one configuration");

  const auto table = ablate(data.corpus, data.table, base, rows, seeds_per_row);
  fs::create_directories(args.out_dir);
  const std::string csv = ablation_csv(table);
  write_text(fs::path(args.out_dir) / "ablation.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_probe(const CommonArgs& args, const std::string& checkpoint,
              const std::string& words_flag, int64_t n_samples, int64_t n_pairs) {
  const ConfigFile cfg = load_config(args.config_path);
  DataBundle data = load_data(cfg, static_cast<uint64_t>(cfg.get_int(
                                       "synth", "seed", static_cast<int64_t>(args.seed))));
  SluModel model = load_checkpoint(checkpoint);

  auto context_for = [&](const std::string& word, const std::string& lang) {
    for (const auto& u : data.corpus.test(lang))
      for (const auto& tok : u.tokens)
        if (tok == word) return ProbeWord{word, u};
    throw Error("probe: word '" + word + "' not found in the " + lang + " test split");
  };

  std::vector<ProbeWord> words;
  if (words_flag == "auto") {
    // Slot-valued cipher pairs observed in the test splits, most wanted first.
    std::map<std::string, int64_t> freq;
    for (const auto& u : data.corpus.test(data.source))
      for (size_t i = 0; i < u.tokens.size(); ++i)
        if (u.slots[i] != "O") ++freq[u.tokens[i]];
    std::vector<std::pair<int64_t, std::string>> ranked;
    for (const auto& [w, n] : freq) ranked.emplace_back(-n, w);
    std::sort(ranked.begin(), ranked.end());
    int64_t added = 0;
    for (const auto& [neg, w] : ranked) {
      if (added >= n_pairs) break;
      auto it = data.cipher.find(w);
      if (it == data.cipher.end()) continue;
      bool found = false;
      for (const auto& u : data.corpus.test(data.target))
        for (const auto& tok : u.tokens)
          if (tok == it->second) found = true;
      if (!found) continue;
      words.push_back(context_for(w, data.source));
      words.push_back(context_for(it->second, data.target));
      ++added;
    }
    if (words.empty()) throw Error("probe: no cipher pairs available for auto selection");
  } else {
    std::stringstream ss(words_flag);
    std::string pair;
    while (std::getline(ss, pair, ',')) {
      const size_t colon = pair.find(':');
      if (colon == std::string::npos)
        throw CLI::ValidationError("--words expects src_word:trg_word pairs or 'auto'");
      words.push_back(context_for(pair.substr(0, colon), data.source));
      words.push_back(context_for(pair.substr(colon + 1), data.target));
    }
  }

  Rng rng(args.seed);
  ProbeResult res = latent_probe(model, data.table, words, n_samples, rng);
  fs::create_directories(args.out_dir);
  write_text(fs::path(args.out_dir) / "samples.csv", probe_samples_csv(res));
  write_text(fs::path(args.out_dir) / "summary.csv", probe_summary_csv(res));
  write_text(fs::path(args.out_dir) / "clouds.svg", probe_svg(res));
  std::cout << "probe: " << res.clouds.size() << " clouds x " << n_samples
            << " samples; top-2 eigenvalue sum " << res.top2_eigenvalue_sum << "\n";
  return 0;
}

int cmd_gradcheck(const CommonArgs& args, int64_t num_seeds, double h, double tol) {
  std::ostringstream report;
  double max_rel = 0.0;
  for (int64_t i = 0; i < num_seeds; ++i) {
    const uint64_t seed = args.seed + static_cast<uint64_t>(i);
    LossGradCheckSummary summary = check_loss_gradients(seed, h, tol);
    report << format_gradcheck_report(summary, seed);
    max_rel = std::max(max_rel, summary.max_rel_err);
  }
  char line[128];
  std::snprintf(line, sizeof line, "gradcheck: max relative error %.3e over %lld seed(s)\n",
                max_rel, static_cast<long long>(num_seeds));
  report << line << (max_rel < tol ? "gradcheck: PASS\n" : "gradcheck: FAIL\n");
  std::cout << report.str();
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_text(fs::path(args.out_dir) / "gradcheck.txt", report.str());
  }
  return max_rel < tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual SLU: label regularization + adversarial latent variables"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string regime_flag, toggles_flag, rows_flag = "none;lr;alvm;lr,alvm";
  std::string checkpoint, words_flag = "auto", lang, split = "test";
  double fraction_flag = -1.0;
  int64_t seeds_per_row = 5, n_samples = 3000, n_pairs = 10, gc_seeds = 5;
  double gc_h = 1e-4, gc_tol = 1e-4;

  auto add_common = [&](CLI::App* sub, bool needs_out, bool needs_seed) {
    sub->add_option("--config", common.config_path, "INI config file");
    auto* out = sub->add_option("--out-dir", common.out_dir, "Output directory");
    if (needs_out) out->required();
    auto* seed = sub->add_option("--seed", common.seed, "RNG seed (reproducibility contract)");
    if (needs_seed) seed->required();
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic cipher-language corpus");
  add_common(synth, true, true);

  CLI::App* train = app.add_subcommand("train", "Train a model and save the best checkpoint");
  add_common(train, true, true);
  train->add_option("--regime", regime_flag, "zero_shot or few_shot");
  train->add_option("--fraction", fraction_flag, "Few-shot target train fraction");
  train->add_option("--toggles", toggles_flag,
                    "Comma list from {lr,alvm,delex,pretrain}; listed on, rest off");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus split");
  eval->add_option("--config", common.config_path, "INI config file");
  eval->add_option("--out-dir", common.out_dir, "Output directory")->required();
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eval->add_option("--lang", lang, "Language to evaluate (default: target)");
  eval->add_option("--split", split, "train, valid or test");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Run toggle configurations over seeds");
  add_common(ablate_cmd, true, true);
  ablate_cmd->add_option("--rows", rows_flag,
                         "Semicolon-separated toggle lists, e.g. 'none;lr;lr,alvm'");
  ablate_cmd->add_option("--seeds", seeds_per_row, "Seeds per configuration");

  CLI::App* probe = app.add_subcommand("probe", "Sample latent clouds and project with PCA");
  add_common(probe, true, true);
  probe->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  probe->add_option("--words", words_flag, "src:trg pairs, comma separated, or 'auto'");
  probe->add_option("--samples", n_samples, "Draws per word");
  probe->add_option("--pairs", n_pairs, "Pairs to pick in auto mode");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of every loss term on a toy batch");
  add_common(gradcheck, false, true);
  gradcheck->add_option("--seeds", gc_seeds, "Number of seeds, starting at --seed");
  gradcheck->add_option("--fd-step", gc_h, "Central-difference step");
  gradcheck->add_option("--tol", gc_tol, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(common);
    if (train->parsed()) return cmd_train(common, regime_flag, fraction_flag, toggles_flag);
    if (eval->parsed())
      return cmd_eval(common.config_path, common.out_dir, checkpoint, lang, split);
    if (ablate_cmd->parsed()) return cmd_ablate(common, rows_flag, seeds_per_row);
    if (probe->parsed()) return cmd_probe(common, checkpoint, words_flag, n_samples, n_pairs);
    if (gradcheck->parsed()) return cmd_gradcheck(common, gc_seeds, gc_h, gc_tol);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
