#include <benchmark/benchmark.h>

#include "clslu/metrics.hpp"
#include "clslu/objectives.hpp"
#include "clslu/synthetic.hpp"
#include "clslu/training.hpp"

using namespace clslu;

namespace {

SynthOutput& bench_synth() {
  static SynthOutput synth = [] {
    SynthConfig cfg;
    cfg.vocab_size = 120;
    cfg.train_count = 64;
    cfg.valid_count = 16;
    cfg.test_count = 16;
    cfg.noise_sigma = 0.3;
    cfg.emb_dim = 16;
    Rng rng(1);
    return make_synthetic_pair(cfg, rng);
  }();
  return synth;
}

SluModel bench_model(int64_t hidden, int64_t latent) {
  ModelDims dims;
  dims.utter_hidden = hidden;
  dims.utter_layers = 2;
  dims.label_emb = 8;
  dims.label_hidden = 8;
  dims.latent = latent;
  dims.dropout = 0.1;
  Rng rng(2);
  return SluModel::init(dims, bench_synth().embeddings.dim(),
                        bench_synth().corpus.slot_labels(),
                        bench_synth().corpus.intent_labels(), rng);
}

}  // namespace

static void BM_MatmulBackward(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(3);
  Tensor w = xavier_uniform({n, n}, rng);
  Tensor x = xavier_uniform({n}, rng);
  for (auto _ : state) {
    Graph g;
    Tensor loss = g.mean(g.tanh(g.matmul(w, x)));
    g.backward(loss);
    w.zero_grad();
    x.zero_grad();
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(128);

static void BM_UtteranceForwardBackward(benchmark::State& state) {
  SluModel model = bench_model(state.range(0), 12);
  const auto& synth = bench_synth();
  const Utterance& utt = synth.corpus.train("src")[0];
  Rng rng(4);
  for (auto _ : state) {
    Graph g;
    UtteranceForward fwd =
        forward_utterance(g, model, synth.embeddings, utt, LvmMode::train, true, rng);
    std::vector<int64_t> targets;
    for (const auto& s : utt.slots) targets.push_back(model.slot_index(s));
    auto [l_slot, l_intent] =
        task_losses(g, fwd.prediction, targets, model.intent_index(utt.intent));
    Tensor total = g.add(l_slot, l_intent);
    g.backward(total);
    for (auto& [name, t] : model.all_params()) t.zero_grad();
    benchmark::DoNotOptimize(total.item());
  }
}
BENCHMARK(BM_UtteranceForwardBackward)->Arg(8)->Arg(16)->Arg(32);

static void BM_TrainEpoch(benchmark::State& state) {
  const auto& synth = bench_synth();
  for (auto _ : state) {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.early_stop_patience = 10;
    cfg.use_pretrain = false;
    cfg.seed = 5;
    cfg.dims.utter_hidden = state.range(0);
    cfg.dims.utter_layers = 2;
    cfg.dims.label_emb = 8;
    cfg.dims.label_hidden = 8;
    cfg.dims.latent = 12;
    cfg.source_lang = "src";
    cfg.target_lang = "trg";
    ExperimentResult res = run_experiment(synth.corpus, synth.embeddings, cfg);
    benchmark::DoNotOptimize(res.test.slot_f1);
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_BioF1(benchmark::State& state) {
  Rng rng(6);
  std::vector<std::vector<std::string>> gold, pred;
  for (int s = 0; s < 200; ++s) {
    std::vector<std::string> g_seq, p_seq;
    for (int i = 0; i < 20; ++i) {
      const auto pickg = rng.uniform_int(3);
      g_seq.push_back(pickg == 0 ? "O" : (pickg == 1 ? "B-t" : "I-t") +
                                             std::to_string(rng.uniform_int(11)));
      const auto pickp = rng.uniform_int(3);
      p_seq.push_back(pickp == 0 ? "O" : (pickp == 1 ? "B-t" : "I-t") +
                                             std::to_string(rng.uniform_int(11)));
    }
    gold.push_back(std::move(g_seq));
    pred.push_back(std::move(p_seq));
  }
  for (auto _ : state) {
    EvalResult r = bio_f1(gold, pred);
    benchmark::DoNotOptimize(r.slot_f1);
  }
}
BENCHMARK(BM_BioF1);

BENCHMARK_MAIN();
