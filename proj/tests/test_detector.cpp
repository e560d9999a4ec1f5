#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "normgrid/actions.hpp"
#include "normgrid/detector.hpp"

using namespace normgrid;

namespace {

BehaviorTrace trace_of(std::vector<std::pair<int, double>> steps) {
  BehaviorTrace t;
  int i = 0;
  for (auto [action, reward] : steps) {
    t.steps.push_back(TraceStep{i++, action, reward});
  }
  return t;
}

constexpr int kGather = 32;

}  // namespace

TEST_CASE("quota detector flags only over-quota gather steps") {
  const int idle = noop_action();

  CHECK_FALSE(quota_detect(trace_of({{kGather, 3.0}, {idle, 0.0}})).flagged);
  CHECK(quota_detect(trace_of({{kGather, 3.5}})).flagged);
  CHECK(quota_detect(trace_of({{idle, 0.0}, {kGather, 5.0}})).flagged);
  // Reward on a non-gather step is not a quota violation.
  CHECK_FALSE(quota_detect(trace_of({{idle, 10.0}})).flagged);
  // Custom quota.
  CHECK(quota_detect(trace_of({{kGather, 3.0}}), 2.0).flagged);
  CHECK_FALSE(quota_detect(trace_of({}), 3.0).flagged);

  const Verdict v = quota_detect(trace_of({{kGather, 5.0}}));
  CHECK(v.confidence == 1.0);
  CHECK(quota_detect(trace_of({{kGather, 1.0}})).confidence == 0.0);
}

TEST_CASE("sequence classifier network shape and decision rule") {
  SequenceClassifier net(10, 7);
  REQUIRE(net.layers.size() == 4);
  CHECK(net.layers[0].in == 10);
  CHECK(net.layers[0].out == 64);
  CHECK(net.layers[1].out == 32);
  CHECK(net.layers[2].out == 16);
  CHECK(net.layers[3].out == 1);
  CHECK(net.input_length() == 10);

  // Zeroed output layer pins the confidence at sigmoid(0) = 0.5, which the
  // strict > threshold maps to "not flagged".
  std::fill(net.layers[3].w.begin(), net.layers[3].w.end(), 0.0);
  std::fill(net.layers[3].b.begin(), net.layers[3].b.end(), 0.0);
  const std::vector<double> seq(10, 1.0);
  const Verdict v = classify(net, seq);
  CHECK(v.confidence == 0.5);
  CHECK_FALSE(v.flagged);

  const std::vector<double> wrong(9, 1.0);
  CHECK_THROWS_AS(net.confidence(wrong), std::invalid_argument);
  CHECK_THROWS_AS(SequenceClassifier(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(net.set_input_scale(0.0), std::invalid_argument);
}

TEST_CASE("classifier serializes losslessly") {
  SequenceClassifier net(5, 11);
  net.set_input_scale(5.0);
  const SequenceClassifier loaded = SequenceClassifier::from_json(net.to_json());
  CHECK(loaded.input_length() == 5);
  CHECK(loaded.input_scale() == 5.0);
  const std::vector<double> seq{0.0, 1.0, 2.0, 3.0, 5.0};
  CHECK(loaded.confidence(seq) == net.confidence(seq));
}

TEST_CASE("build_dataset windows traces and stratifies the split") {
  std::vector<std::pair<BehaviorTrace, int>> corpus;
  for (int label = 0; label < 2; ++label) {
    for (int k = 0; k < 10; ++k) {
      BehaviorTrace t;
      for (int i = 0; i < 40; ++i) {
        t.steps.push_back(TraceStep{i, kGather, label == 0 ? 1.0 : 5.0});
      }
      corpus.emplace_back(std::move(t), label);
    }
  }

  const LabeledDataset ds = build_dataset(corpus, 20, 0.2, 0);
  // 10 traces x 2 windows x 2 classes, 20% of each class held out.
  CHECK(ds.train.size() + ds.test.size() == 40);
  CHECK(ds.test.size() == 8);
  const auto count_label = [](const std::vector<LabeledExample>& xs, int label) {
    return std::count_if(xs.begin(), xs.end(),
                         [label](const LabeledExample& e) { return e.label == label; });
  };
  CHECK(count_label(ds.test, 0) == 4);
  CHECK(count_label(ds.test, 1) == 4);
  for (const auto& ex : ds.train) CHECK(ex.rewards.size() == 20);

  SECTION("window cap") {
    const LabeledDataset capped = build_dataset(corpus, 20, 0.2, 0, 1);
    CHECK(capped.train.size() + capped.test.size() == 20);
  }
  SECTION("short traces are skipped and counted") {
    std::vector<std::pair<BehaviorTrace, int>> mixed = corpus;
    BehaviorTrace stub;
    stub.steps.push_back(TraceStep{0, kGather, 1.0});
    mixed.emplace_back(stub, 0);
    const LabeledDataset ds2 = build_dataset(mixed, 20, 0.2, 0);
    CHECK(ds2.skipped_traces == 1);
  }
  SECTION("degenerate inputs") {
    CHECK_THROWS_AS(build_dataset(corpus, 0, 0.2, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_dataset(corpus, 20, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_dataset(corpus, 20, 1.0, 0), std::invalid_argument);
    std::vector<std::pair<BehaviorTrace, int>> lone(corpus.begin(),
                                                    corpus.begin() + 10);
    CHECK_THROWS_AS(build_dataset(lone, 20, 0.2, 0), std::invalid_argument);
    // All traces shorter than the window also leaves single/no-class buckets.
    CHECK_THROWS_AS(build_dataset(corpus, 100, 0.2, 0), std::invalid_argument);
  }
}

TEST_CASE("training separates a separable corpus") {
  const auto corpus = synthetic_corpus(CorpusKind::kQuota, 60, 20, 123);
  const LabeledDataset ds = build_dataset(corpus, 20, 0.2, 9);

  ClassifierTrainSpec spec;
  spec.epochs = 60;
  spec.seed = 42;
  const auto [net, report] = train_classifier(ds, spec);
  CHECK(report.test_accuracy >= 0.9);
  CHECK(report.train_accuracy >= 0.9);
  CHECK(report.epochs == 60);
  CHECK(net.input_length() == 20);

  // Determinism: same dataset and spec reproduce the same network.
  const auto [net2, report2] = train_classifier(ds, spec);
  CHECK(report2.test_accuracy == report.test_accuracy);
  CHECK(report2.final_loss == report.final_loss);
  CHECK(net2.to_json() == net.to_json());
}

TEST_CASE("training on label noise stays near chance") {
  // Both classes drawn from the same compliant generator: nothing to learn.
  const auto base = synthetic_corpus(CorpusKind::kQuota, 60, 20, 321);
  std::vector<std::pair<BehaviorTrace, int>> scrambled;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].second == 0) {
      scrambled.emplace_back(base[i].first, static_cast<int>(i % 2));
    }
  }
  const LabeledDataset ds = build_dataset(scrambled, 20, 0.25, 5);
  ClassifierTrainSpec spec;
  spec.epochs = 40;
  spec.seed = 8;
  const auto [net, report] = train_classifier(ds, spec);
  CHECK(report.test_accuracy > 0.2);
  CHECK(report.test_accuracy < 0.8);
}

TEST_CASE("length sweep reports one row per window length") {
  const auto corpus = synthetic_corpus(CorpusKind::kQuota, 40, 20, 77);
  ClassifierTrainSpec spec;
  spec.epochs = 20;
  spec.seed = 3;
  const auto rows = length_sweep(corpus, {5, 10, 20}, spec, 0.2, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].length == 5);
  CHECK(rows[2].length == 20);
  for (const auto& r : rows) {
    CHECK(r.test_accuracy >= 0.0);
    CHECK(r.test_accuracy <= 1.0);
  }
  CHECK_THROWS_AS(length_sweep(corpus, {}, spec), std::invalid_argument);
  CHECK_THROWS_AS(length_sweep(corpus, {10, 5}, spec), std::invalid_argument);
  CHECK_THROWS_AS(length_sweep(corpus, {5, 5}, spec), std::invalid_argument);
}

TEST_CASE("synthetic corpora have the advertised shapes") {
  SECTION("quota corpus keeps compliant rewards within the cap") {
    const auto corpus = synthetic_corpus(CorpusKind::kQuota, 50, 30, 9);
    REQUIRE(corpus.size() == 100);
    bool defective_violates = false;
    for (const auto& [trace, label] : corpus) {
      REQUIRE(trace.steps.size() == 30);
      for (const auto& s : trace.steps) {
        if (label == 0) {
          CHECK(s.raw_reward <= 3.0);
        } else if (s.raw_reward > 3.0) {
          defective_violates = true;
        }
        if (s.raw_reward > 0.0) CHECK(is_gather_action(s.action));
      }
    }
    CHECK(defective_violates);
    // Label blocks: compliant first, then defective.
    CHECK(corpus[0].second == 0);
    CHECK(corpus[49].second == 0);
    CHECK(corpus[50].second == 1);
    CHECK(corpus[99].second == 1);
  }
  SECTION("cadence corpus separates by harvest density, not peak reward") {
    const auto corpus = synthetic_corpus(CorpusKind::kCadence, 30, 40, 12);
    for (const auto& [trace, label] : corpus) {
      int harvests = 0;
      for (const auto& s : trace.steps) {
        if (s.raw_reward > 0.0) ++harvests;
      }
      if (label == 0) {
        // Cooldown of at least 3 steps between harvests caps the density.
        CHECK(harvests <= 11);
      }
    }
    // Strong compliant traces reach reward 5 even though they are compliant.
    bool strong_compliant_five = false;
    for (const auto& [trace, label] : corpus) {
      if (label != 0) continue;
      for (const auto& s : trace.steps) {
        if (s.raw_reward == 5.0) strong_compliant_five = true;
      }
    }
    CHECK(strong_compliant_five);
  }
  SECTION("validation") {
    CHECK_THROWS_AS(synthetic_corpus(CorpusKind::kQuota, 0, 10, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(synthetic_corpus(CorpusKind::kQuota, 10, 0, 1),
                    std::invalid_argument);
  }
}
