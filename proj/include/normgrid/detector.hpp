#pragma once
// Defector detection. Two detectors share the Verdict currency: a quota rule
// that flags any single-step harvest above the allowed cap, and a small
// fully-connected network classifying fixed-length reward sequences.
// Synthetic labeled corpora for training and evaluation live here too.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "normgrid/actions.hpp"
#include "normgrid/rng.hpp"
#include "normgrid/trace.hpp"

namespace normgrid {

struct Verdict {
  int agent_id = -1;
  bool flagged = false;
  double confidence = 0.0;
};

// Rule detector: flagged iff some gather step collected more than the quota.
// Confidence is binary. An empty trace is trivially unflagged.
inline Verdict quota_detect(const BehaviorTrace& trace, double quota = 3.0) {
  Verdict v;
  v.agent_id = trace.agent_id;
  for (const TraceStep& s : trace.steps) {
    if (is_gather_action(s.action) && s.raw_reward > quota) {
      v.flagged = true;
      break;
    }
  }
  v.confidence = v.flagged ? 1.0 : 0.0;
  return v;
}

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

// Four fully-connected layers: input -> 64 -> 32 -> 16 -> 1, ReLU on the
// hidden layers and a sigmoid on the scalar output. Layers are public so
// tests can pin weights directly.
class SequenceClassifier {
 public:
  SequenceClassifier() = default;

  SequenceClassifier(int input_length, std::uint64_t seed,
                     std::vector<int> hidden = {64, 32, 16})
      : input_length_(input_length) {
    if (input_length < 1) {
      throw std::invalid_argument("SequenceClassifier: input length must be >= 1");
    }
    if (hidden.empty()) {
      throw std::invalid_argument("SequenceClassifier: need hidden layers");
    }
    Rng rng(seed);
    int in = input_length;
    for (int width : hidden) {
      layers.push_back(init_layer(in, width, rng));
      in = width;
    }
    layers.push_back(init_layer(in, 1, rng));
  }

  int input_length() const { return input_length_; }
  double decision_threshold() const { return 0.5; }
  double input_scale() const { return input_scale_; }
  void set_input_scale(double s) {
    if (!(s > 0.0)) throw std::invalid_argument("input scale must be positive");
    input_scale_ = s;
  }

  // Sigmoid output in (0, 1).
  double confidence(std::span<const double> sequence) const {
    if (static_cast<int>(sequence.size()) != input_length_) {
      throw std::invalid_argument("SequenceClassifier: sequence length mismatch");
    }
    std::vector<double> x(sequence.begin(), sequence.end());
    for (double& v : x) v /= input_scale_;
    std::vector<double> y;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      forward_layer(layers[l], x, y);
      if (l + 1 < layers.size()) {
        for (double& v : y) v = v > 0.0 ? v : 0.0;
      }
      x.swap(y);
    }
    return 1.0 / (1.0 + std::exp(-x[0]));
  }

  nlohmann::json to_json() const {
    nlohmann::json ls = nlohmann::json::array();
    for (const auto& l : layers) {
      ls.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
    }
    return {{"kind", "sequence_classifier"},
            {"version", 1},
            {"input_length", input_length_},
            {"input_scale", input_scale_},
            {"layers", ls}};
  }

  static SequenceClassifier from_json(const nlohmann::json& j) {
    if (j.at("kind") != "sequence_classifier" || j.at("version") != 1) {
      throw std::invalid_argument("SequenceClassifier: bad serialized form");
    }
    SequenceClassifier c;
    c.input_length_ = j.at("input_length").get<int>();
    c.input_scale_ = j.at("input_scale").get<double>();
    for (const auto& lj : j.at("layers")) {
      DenseLayer l;
      l.in = lj.at("in").get<int>();
      l.out = lj.at("out").get<int>();
      l.w = lj.at("w").get<std::vector<double>>();
      l.b = lj.at("b").get<std::vector<double>>();
      c.layers.push_back(std::move(l));
    }
    return c;
  }

  std::vector<DenseLayer> layers;

 private:
  static DenseLayer init_layer(int in, int out, Rng& rng) {
    DenseLayer l;
    l.in = in;
    l.out = out;
    l.w.resize(static_cast<std::size_t>(in) * static_cast<std::size_t>(out));
    l.b.assign(static_cast<std::size_t>(out), 0.0);
    const double r = std::sqrt(6.0 / in);
    for (double& w : l.w) w = (2.0 * rng.uniform() - 1.0) * r;
    return l;
  }

  static void forward_layer(const DenseLayer& l, const std::vector<double>& x,
                            std::vector<double>& y) {
    y.assign(static_cast<std::size_t>(l.out), 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double* row = &l.w[static_cast<std::size_t>(o) * l.in];
      double acc = l.b[static_cast<std::size_t>(o)];
      for (int i = 0; i < l.in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
      y[static_cast<std::size_t>(o)] = acc;
    }
  }

  int input_length_ = 0;
  double input_scale_ = 1.0;
};

// Flagged iff confidence strictly exceeds the 0.5 threshold, so an
// all-zero output layer (confidence exactly 0.5) does not flag.
inline Verdict classify(const SequenceClassifier& classifier,
                        std::span<const double> sequence, int agent_id = -1) {
  Verdict v;
  v.agent_id = agent_id;
  v.confidence = classifier.confidence(sequence);
  v.flagged = v.confidence > classifier.decision_threshold();
  return v;
}

struct LabeledExample {
  std::vector<double> rewards;
  int label = 0;  // 1 = defective
};

struct LabeledDataset {
  int sequence_length = 0;
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  int skipped_traces = 0;
  double test_fraction = 0.2;
};

// Slice each trace's reward stream into consecutive non-overlapping windows
// of length L (traces shorter than L are skipped and counted), then split
// stratified by class so balanced inputs stay balanced. Both classes must be
// present and both split sides must end up non-empty.
inline LabeledDataset build_dataset(
    const std::vector<std::pair<BehaviorTrace, int>>& labeled_traces, int length,
    double test_fraction = 0.2, std::uint64_t seed = 0,
    int max_windows_per_trace = 0) {
  if (length < 1) throw std::invalid_argument("build_dataset: length must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("build_dataset: test fraction must be in (0, 1)");
  }

  LabeledDataset ds;
  ds.sequence_length = length;
  ds.test_fraction = test_fraction;

  std::vector<LabeledExample> by_class[2];
  for (const auto& [trace, label] : labeled_traces) {
    if (label != 0 && label != 1) {
      throw std::invalid_argument("build_dataset: labels must be 0 or 1");
    }
    const std::vector<double> rewards = trace_rewards(trace);
    if (static_cast<int>(rewards.size()) < length) {
      ++ds.skipped_traces;
      continue;
    }
    int windows = static_cast<int>(rewards.size()) / length;
    if (max_windows_per_trace > 0) windows = std::min(windows, max_windows_per_trace);
    for (int w = 0; w < windows; ++w) {
      LabeledExample ex;
      ex.rewards.assign(rewards.begin() + static_cast<std::ptrdiff_t>(w) * length,
                        rewards.begin() + static_cast<std::ptrdiff_t>(w + 1) * length);
      ex.label = label;
      by_class[label].push_back(std::move(ex));
    }
  }

  if (by_class[0].empty() || by_class[1].empty()) {
    throw std::invalid_argument(
        "build_dataset: need windows from both classes (single-class corpus)");
  }

  Rng rng(seed);
  for (auto& bucket : by_class) {
    rng.shuffle(bucket);
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(bucket.size())));
    n_test = std::min(std::max<std::size_t>(n_test, 1), bucket.size() - 1);
    for (std::size_t i = 0; i < bucket.size(); ++i) {
      (i < n_test ? ds.test : ds.train).push_back(std::move(bucket[i]));
    }
  }
  return ds;
}

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClassifierTrainSpec {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct TrainingReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_loss = 0.0;
  int epochs = 0;
};

inline double dataset_accuracy(const SequenceClassifier& classifier,
                               const std::vector<LabeledExample>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const bool flagged =
        classifier.confidence(ex.rewards) > classifier.decision_threshold();
    if (flagged == (ex.label == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

// Minibatch SGD with momentum on binary cross-entropy. Throws TrainingError
// if the loss ever goes non-finite.
inline std::pair<SequenceClassifier, TrainingReport> train_classifier(
    const LabeledDataset& dataset, const ClassifierTrainSpec& spec = {}) {
  if (dataset.train.empty() || dataset.test.empty()) {
    throw std::invalid_argument("train_classifier: empty dataset split");
  }
  if (spec.epochs < 1 || spec.batch_size < 1) {
    throw std::invalid_argument("train_classifier: epochs/batch must be >= 1");
  }

  SequenceClassifier net(dataset.sequence_length,
                         derive_seed(spec.seed, kDetectorStream, 1));
  double max_abs = 1.0;
  for (const auto& ex : dataset.train) {
    for (double v : ex.rewards) max_abs = std::max(max_abs, std::abs(v));
  }
  net.set_input_scale(max_abs);

  const std::size_t n_layers = net.layers.size();
  std::vector<std::vector<double>> vel_w(n_layers), vel_b(n_layers);
  std::vector<std::vector<double>> grad_w(n_layers), grad_b(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    vel_w[l].assign(net.layers[l].w.size(), 0.0);
    vel_b[l].assign(net.layers[l].b.size(), 0.0);
  }

  Rng rng(derive_seed(spec.seed, kDetectorStream, 2));
  std::vector<std::size_t> order(dataset.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  // Per-example activations, reused across the batch.
  std::vector<std::vector<double>> acts(n_layers + 1);
  std::vector<std::vector<double>> deltas(n_layers);

  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(spec.batch_size));
      for (std::size_t l = 0; l < n_layers; ++l) {
        grad_w[l].assign(net.layers[l].w.size(), 0.0);
        grad_b[l].assign(net.layers[l].b.size(), 0.0);
      }

      for (std::size_t k = start; k < stop; ++k) {
        const LabeledExample& ex = dataset.train[order[k]];
        acts[0].assign(ex.rewards.begin(), ex.rewards.end());
        for (double& v : acts[0]) v /= net.input_scale();
        for (std::size_t l = 0; l < n_layers; ++l) {
          const DenseLayer& layer = net.layers[l];
          acts[l + 1].assign(static_cast<std::size_t>(layer.out), 0.0);
          for (int o = 0; o < layer.out; ++o) {
            const double* row = &layer.w[static_cast<std::size_t>(o) * layer.in];
            double acc = layer.b[static_cast<std::size_t>(o)];
            for (int i = 0; i < layer.in; ++i) {
              acc += row[i] * acts[l][static_cast<std::size_t>(i)];
            }
            if (l + 1 < n_layers && acc < 0.0) acc = 0.0;  // ReLU
            acts[l + 1][static_cast<std::size_t>(o)] = acc;
          }
        }
        const double z = acts[n_layers][0];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double y = ex.label == 1 ? 1.0 : 0.0;
        const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
        epoch_loss += -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));

        // Backward pass; hidden activations are post-ReLU so act > 0 marks
        // the pass-through units.
        deltas[n_layers - 1].assign(1, p - y);
        for (std::size_t l = n_layers; l-- > 0;) {
          const DenseLayer& layer = net.layers[l];
          const auto& delta = deltas[l];
          for (int o = 0; o < layer.out; ++o) {
            const double d = delta[static_cast<std::size_t>(o)];
            grad_b[l][static_cast<std::size_t>(o)] += d;
            double* grow = &grad_w[l][static_cast<std::size_t>(o) * layer.in];
            for (int i = 0; i < layer.in; ++i) {
              grow[i] += d * acts[l][static_cast<std::size_t>(i)];
            }
          }
          if (l > 0) {
            deltas[l - 1].assign(static_cast<std::size_t>(layer.in), 0.0);
            for (int i = 0; i < layer.in; ++i) {
              if (acts[l][static_cast<std::size_t>(i)] <= 0.0) continue;
              double acc = 0.0;
              for (int o = 0; o < layer.out; ++o) {
                acc += layer.w[static_cast<std::size_t>(o) * layer.in + i] *
                       delta[static_cast<std::size_t>(o)];
              }
              deltas[l - 1][static_cast<std::size_t>(i)] = acc;
            }
          }
        }
      }

      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < n_layers; ++l) {
        for (std::size_t i = 0; i < grad_w[l].size(); ++i) {
          vel_w[l][i] = spec.momentum * vel_w[l][i] -
                        spec.learning_rate * grad_w[l][i] * scale;
          net.layers[l].w[i] += vel_w[l][i];
        }
        for (std::size_t i = 0; i < grad_b[l].size(); ++i) {
          vel_b[l][i] = spec.momentum * vel_b[l][i] -
                        spec.learning_rate * grad_b[l][i] * scale;
          net.layers[l].b[i] += vel_b[l][i];
        }
      }
    }
    epoch_loss /= static_cast<double>(dataset.train.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("classifier training diverged: non-finite loss " +
                          std::to_string(epoch_loss) + " at epoch " +
                          std::to_string(epoch));
    }
  }

  TrainingReport report;
  report.epochs = spec.epochs;
  report.final_loss = epoch_loss;
  report.train_accuracy = dataset_accuracy(net, dataset.train);
  report.test_accuracy = dataset_accuracy(net, dataset.test);
  return {std::move(net), report};
}

struct LengthAccuracy {
  int length = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

// One classifier per requested window length, all built from the same trace
// corpus with the same split seed.
inline std::vector<LengthAccuracy> length_sweep(
    const std::vector<std::pair<BehaviorTrace, int>>& corpus,
    const std::vector<int>& lengths, const ClassifierTrainSpec& spec = {},
    double test_fraction = 0.2, int max_windows_per_trace = 0) {
  if (lengths.empty()) throw std::invalid_argument("length_sweep: no lengths");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1) throw std::invalid_argument("length_sweep: lengths must be >= 1");
    if (i > 0 && lengths[i] <= lengths[i - 1]) {
      throw std::invalid_argument("length_sweep: lengths must be strictly ascending");
    }
  }
  std::vector<LengthAccuracy> out;
  for (const int length : lengths) {
    const LabeledDataset ds = build_dataset(corpus, length, test_fraction,
                                            spec.seed, max_windows_per_trace);
    ClassifierTrainSpec per = spec;
    per.seed = derive_seed(spec.seed, kDetectorStream,
                           static_cast<std::uint64_t>(length));
    const auto [net, report] = train_classifier(ds, per);
    out.push_back({length, report.train_accuracy, report.test_accuracy});
  }
  return out;
}

enum class CorpusKind { kQuota, kCadence };

// Synthetic labeled traces.
//  - kQuota: compliant steps gather at most 3; defective traces salt in
//    reward-5 steps, so a single over-quota step is the separating signal.
//  - kCadence: compliant traces harvest then cool down for >= 3 steps
//    (weak 3/2-cap and strong 5-cap variants); defective traces harvest
//    densely. Pattern density separates, not peak reward, so sparse strong
//    harvesters land on the compliant side.
inline std::vector<std::pair<BehaviorTrace, int>> synthetic_corpus(
    CorpusKind kind, int traces_per_class, int trace_length, std::uint64_t seed) {
  if (traces_per_class < 1 || trace_length < 1) {
    throw std::invalid_argument("synthetic_corpus: counts must be positive");
  }
  Rng rng(seed);
  const int gather = kActionCount - 1;  // any gather index works for traces
  const int idle = noop_action();
  std::vector<std::pair<BehaviorTrace, int>> corpus;
  corpus.reserve(2 * static_cast<std::size_t>(traces_per_class));

  const auto emit = [&](int label, auto&& next_reward) {
    BehaviorTrace trace;
    trace.agent_id = static_cast<int>(corpus.size());
    for (int t = 0; t < trace_length; ++t) {
      const double r = next_reward(t);
      trace.steps.push_back(TraceStep{t, r > 0.0 ? gather : idle, r});
    }
    corpus.emplace_back(std::move(trace), label);
  };

  for (int k = 0; k < traces_per_class; ++k) {
    if (kind == CorpusKind::kQuota) {
      emit(0, [&](int) -> double {
        return rng.uniform() < 0.25 ? static_cast<double>(1 + rng.bounded(3)) : 0.0;
      });
    } else {
      // Harvest r, then >= 3 zero steps plus jitter.
      const bool strong = k % 2 == 1;
      int cooldown = 0;
      int phase = 0;
      emit(0, [&, strong](int) mutable -> double {
        if (cooldown > 0) {
          --cooldown;
          return 0.0;
        }
        cooldown = 3 + static_cast<int>(rng.bounded(3));
        if (strong) return 5.0;
        phase ^= 1;
        return phase == 1 ? 3.0 : 2.0;
      });
    }
  }
  for (int k = 0; k < traces_per_class; ++k) {
    if (kind == CorpusKind::kQuota) {
      emit(1, [&](int) -> double {
        if (rng.uniform() < 0.3) return 5.0;
        return rng.uniform() < 0.25 ? static_cast<double>(1 + rng.bounded(3)) : 0.0;
      });
    } else {
      int cooldown = 0;
      emit(1, [&](int) mutable -> double {
        if (cooldown > 0) {
          --cooldown;
          return 0.0;
        }
        cooldown = static_cast<int>(rng.bounded(3));
        return 5.0;
      });
    }
  }
  return corpus;
}

}  // namespace normgrid
