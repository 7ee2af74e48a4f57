#include <doctest.h>

#include <cmath>
#include <random>

#include "lama/evaluation.hpp"
#include "lama/mock_backend.hpp"
#include "lama/report.hpp"
#include "test_support.hpp"

using namespace lama;

namespace {

const Taxonomy& tax() { return lama::test::taxonomy99(); }
Label N(const char* s) { return tax().nationalities().at(s); }

ScoredPrediction sp(const Label& gold, std::vector<Label> ranks) { return {gold, std::move(ranks)}; }

// Confusion matrix built by brute force; F1 from the textbook definitions.
double oracle_macro_f1(const std::vector<int>& gold, const std::vector<int>& pred, int classes) {
  std::vector<std::vector<double>> cm(classes, std::vector<double>(classes, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) cm[gold[i]][pred[i]] += 1;
  double sum = 0;
  for (int c = 0; c < classes; ++c) {
    double tp = cm[c][c], col = 0, row = 0;
    for (int j = 0; j < classes; ++j) col += cm[j][c], row += cm[c][j];
    const double p = col > 0 ? tp / col : 0;
    const double r = row > 0 ? tp / row : 0;
    sum += (p + r) > 0 ? 2 * p * r / (p + r) : 0;
  }
  return sum / classes;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("two-class macro-F1 example") {
    const auto& mini = lama::test::mini3().nationalities();
    const Label a = mini.at("Alpha"), b = mini.at("Beta");
    const std::vector<ScoredPrediction> preds{sp(a, {a}), sp(a, {b}), sp(b, {b}), sp(b, {b})};
    const std::vector<Label> classes{a, b};
    CHECK(macro_f1(preds, classes) == doctest::Approx(oracle_macro_f1({0, 0, 1, 1}, {0, 1, 1, 1}, 2)));
    CHECK(macro_f1(preds, classes) == doctest::Approx(0.733333333).epsilon(1e-9));
    CHECK(accuracy(preds) == doctest::Approx(0.75));
  }

  TEST_CASE("macro-F1 agrees with the oracle on random data") {
    const auto& mini = lama::test::mini5().nationalities();
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 1 + rng() % 40;
      std::vector<int> g(n), p(n);
      std::vector<ScoredPrediction> preds;
      for (std::size_t i = 0; i < n; ++i) {
        g[i] = static_cast<int>(rng() % 5);
        p[i] = static_cast<int>(rng() % 5);
        preds.push_back(sp(mini.labels()[g[i]], {mini.labels()[p[i]]}));
      }
      REQUIRE(macro_f1(preds, mini) == doctest::Approx(oracle_macro_f1(g, p, 5)).epsilon(1e-12));
    }
  }

  TEST_CASE("classes without gold or predictions score zero") {
    const auto& mini = lama::test::mini3().nationalities();
    const Label a = mini.at("Alpha");
    const std::vector<ScoredPrediction> preds{sp(a, {a})};
    CHECK(macro_f1(preds, mini) == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("perfect and empty input") {
    const std::vector<ScoredPrediction> perfect{sp(N("Irish"), {N("Irish")}), sp(N("Welsh"), {N("Welsh")})};
    CHECK(accuracy(perfect) == 1.0);
    CHECK(precision_at_k(perfect, 1) == 1.0);
    CHECK_THROWS_AS(accuracy(std::span<const ScoredPrediction>{}), EvaluationError);
  }

  TEST_CASE("P@1 equals accuracy and P@K is monotone") {
    std::mt19937_64 rng(4);
    const auto& labels = tax().nationalities().labels();
    std::vector<ScoredPrediction> preds;
    for (int i = 0; i < 500; ++i) {
      std::vector<Label> ranks(labels.begin(), labels.end());
      std::shuffle(ranks.begin(), ranks.end(), rng);
      ranks.resize(5);
      preds.push_back(sp(labels[rng() % 10], ranks));
    }
    CHECK(precision_at_k(preds, 1) == accuracy(preds));
    double prev = 0;
    for (int k = 1; k <= 5; ++k) {
      const double v = precision_at_k(preds, k);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK_THROWS_AS(precision_at_k(preds, 6), EvaluationError);
    CHECK_THROWS_AS(precision_at_k(preds, 0), EvaluationError);
  }

  TEST_CASE("uniform random rankings give P@K near K/L") {
    std::mt19937_64 rng(2025);
    const auto& labels = tax().nationalities().labels();
    const double L = static_cast<double>(labels.size());
    const int n = 40000;
    std::vector<ScoredPrediction> preds;
    preds.reserve(n);
    std::vector<Label> pool(labels.begin(), labels.end());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 5; ++j) std::swap(pool[j], pool[j + rng() % (pool.size() - j)]);
      preds.push_back(sp(labels[rng() % labels.size()], std::vector<Label>(pool.begin(), pool.begin() + 5)));
    }
    for (int k : {1, 3, 5}) {
      const double p = k / L;
      const double sigma = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(precision_at_k(preds, k) - p) < 3 * sigma);
    }
  }
}

TEST_SUITE("frequency bins") {
  TEST_CASE("relative drop") {
    CHECK(relative_drop(0.8, 0.8) == doctest::Approx(0.0));
    CHECK(*relative_drop(0.839, 0.796) == doctest::Approx(0.051).epsilon(0.01));
    CHECK_FALSE(relative_drop(0.0, 0.5).has_value());
    CHECK_FALSE(relative_drop(std::nullopt, 0.5).has_value());
  }

  TEST_CASE("per-bin metrics") {
    const auto& mini = lama::test::mini3().nationalities();
    const Label a = mini.at("Alpha"), b = mini.at("Beta"), c = mini.at("Gamma");
    FrequencyBins bins{{a}, {b}, {c}, {a, b, c}};
    const std::vector<ScoredPrediction> preds{sp(a, {a}), sp(a, {a}), sp(a, {b}), sp(a, {a}),
                                              sp(b, {b}), sp(c, {a}),  sp(c, {c})};
    const auto report = bin_stratified_eval(preds, bins);
    CHECK(report.head.samples == 4);
    CHECK(*report.head.accuracy == doctest::Approx(0.75));
    CHECK(*report.mid.accuracy == doctest::Approx(1.0));
    CHECK(*report.tail.accuracy == doctest::Approx(0.5));
    CHECK(*report.relative_drop == doctest::Approx((0.75 - 0.5) / 0.75));
    CHECK(*report.tail.macro_f1 == doctest::Approx(2.0 / 3.0));  // over the bin's own classes
  }

  TEST_CASE("empty bins and unbinned gold labels") {
    const auto& mini = lama::test::mini3().nationalities();
    const Label a = mini.at("Alpha"), b = mini.at("Beta"), c = mini.at("Gamma");
    FrequencyBins bins{{a}, {b}, {c}, {a, b, c}};
    const std::vector<ScoredPrediction> only_head{sp(a, {a})};
    const auto r = bin_stratified_eval(only_head, bins);
    CHECK(r.mid.samples == 0);
    CHECK_FALSE(r.mid.accuracy.has_value());
    CHECK_FALSE(r.relative_drop.has_value());

    FrequencyBins partial{{a}, {b}, {}, {a, b}};
    const std::vector<ScoredPrediction> unbinned{sp(c, {c})};
    CHECK_THROWS_AS(bin_stratified_eval(unbinned, partial), EvaluationError);
  }
}

TEST_SUITE("confusion") {
  TEST_CASE("pairs are sorted and flagged by region") {
    std::vector<ScoredPrediction> preds;
    for (int i = 0; i < 3; ++i) preds.push_back(sp(N("Belarusian"), {N("Russian")}));
    for (int i = 0; i < 2; ++i) preds.push_back(sp(N("Mexican"), {N("Chilean")}));
    preds.push_back(sp(N("Taiwanese"), {N("Chinese")}));
    preds.push_back(sp(N("Algerian"), {N("French")}));
    preds.push_back(sp(N("Irish"), {N("Irish")}));
    const auto summary = confusion_pairs(preds, tax());
    REQUIRE(summary.pairs.size() == 4);
    CHECK(summary.pairs[0].true_label == N("Belarusian"));
    CHECK(summary.pairs[0].count == 3);
    CHECK(summary.pairs[0].same_region);
    CHECK(summary.pairs[1].true_label == N("Mexican"));
    CHECK_FALSE(summary.pairs[1].same_region);
    CHECK(summary.pairs[2].true_label == N("Algerian"));
    CHECK_FALSE(summary.pairs[2].same_region);
    CHECK(summary.pairs[3].true_label == N("Taiwanese"));
    CHECK(summary.pairs[3].same_region);
    CHECK(*summary.region_match_rate == doctest::Approx(0.5));
  }

  TEST_CASE("top N truncation and the rate over the kept pairs") {
    std::vector<ScoredPrediction> preds;
    for (int i = 0; i < 5; ++i) preds.push_back(sp(N("English"), {N("British")}));
    for (int i = 0; i < 4; ++i) preds.push_back(sp(N("Ghanaian"), {N("German")}));
    preds.push_back(sp(N("Kenyan"), {N("Indian")}));
    const auto summary = confusion_pairs(preds, tax(), 2);
    CHECK(summary.pairs.size() == 2);
    CHECK(*summary.region_match_rate == doctest::Approx(0.5));
  }

  TEST_CASE("no errors, no rate") {
    const std::vector<ScoredPrediction> preds{sp(N("Irish"), {N("Irish")})};
    const auto summary = confusion_pairs(preds, tax());
    CHECK(summary.pairs.empty());
    CHECK_FALSE(summary.region_match_rate.has_value());
  }
}

TEST_SUITE("region decomposition") {
  TEST_CASE("three-way split of nationality outcomes") {
    const std::vector<ScoredPrediction> preds{
        sp(N("Irish"), {N("Irish")}),         sp(N("Egyptian"), {N("Iraqi")}),
        sp(N("Indian"), {N("Pakistani")}),    sp(N("Haitian"), {N("Dominican")}),
        sp(N("Ghanaian"), {N("German")}),     sp(N("Samoan"), {N("Australian")}),
        sp(N("Catalan"), {N("French")}),      sp(N("Kenyan"), {N("Indian")})};
    const auto d = region_level_breakdown(preds, tax());
    CHECK(d.nat_correct == doctest::Approx(1.0 / 8));
    CHECK(d.nat_wrong_region_correct == doctest::Approx(5.0 / 8));
    CHECK(d.nat_wrong_region_wrong == doctest::Approx(2.0 / 8));
    CHECK(d.region_accuracy == doctest::Approx(6.0 / 8));
    CHECK(direct_region_accuracy(preds, tax()) == doctest::Approx(d.region_accuracy));
  }

  TEST_CASE("components sum to one and match the direct region accuracy") {
    std::mt19937_64 rng(9);
    const auto& labels = tax().nationalities().labels();
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<ScoredPrediction> preds;
      const int n = 1 + static_cast<int>(rng() % 60);
      for (int i = 0; i < n; ++i) {
        const Label g = labels[rng() % labels.size()];
        const Label p = rng() % 3 == 0 ? g : labels[rng() % labels.size()];
        preds.push_back(sp(g, {p}));
      }
      const auto d = region_level_breakdown(preds, tax());
      CHECK(d.nat_correct + d.nat_wrong_region_correct + d.nat_wrong_region_wrong == doctest::Approx(1.0));
      CHECK(d.region_accuracy == doctest::Approx(direct_region_accuracy(preds, tax())));
      CHECK(d.nat_correct == doctest::Approx(accuracy(preds)));
    }
  }
}

TEST_SUITE("reports") {
  TEST_CASE("call summary") {
    std::vector<PredictionResult> results(3);
    results[0].calls = {2, 0, 1, 0};
    results[1].calls = {2, 0, 1, 1};
    results[2].calls = {2, 1, 1, 0};
    results[2].ranking.used_fallback = true;
    const auto s = summarize_calls(results);
    CHECK(s.samples == 3);
    CHECK(s.fallback_samples == 1);
    CHECK(s.totals.total() == 10);
    CHECK(s.totals.reprompt_calls == 1);
    CHECK(s.mean_total_calls == doctest::Approx(10.0 / 3));
  }

  TEST_CASE("default ks follow granularity and ranking length") {
    const std::vector<ScoredPrediction> five{
        sp(N("Irish"), {N("Irish"), N("Welsh"), N("British"), N("English"), N("Dutch")})};
    CHECK(evaluate(five, Granularity::nationality, tax()).precision_at.size() == 3);
    const std::vector<ScoredPrediction> three{
        sp(N("Irish"), {N("Irish"), N("Welsh"), N("British")})};
    const auto r = evaluate(three, Granularity::nationality, tax());
    CHECK(r.precision_at.size() == 2);
    CHECK(r.precision_at.count(5) == 0);

    const auto& regions = tax().regions().labels();
    const std::vector<ScoredPrediction> reg{sp(regions[0], {regions[0], regions[1], regions[2]})};
    const auto rr = evaluate(reg, Granularity::region, tax());
    CHECK(rr.precision_at.size() == 3);
    CHECK(rr.precision_at.count(2) == 1);
    CHECK_FALSE(rr.region_decomposition.has_value());
    CHECK_THROWS_AS(evaluate(std::span<const ScoredPrediction>{}, Granularity::nationality, tax()),
                    EvaluationError);
  }

  TEST_CASE("report JSON round-trip") {
    const std::vector<ScoredPrediction> preds{
        sp(N("Belarusian"), {N("Russian"), N("Belarusian"), N("Polish")}),
        sp(N("Irish"), {N("Irish"), N("Welsh"), N("British")})};
    auto report = evaluate(preds, Granularity::nationality, tax(), nullptr, EvalOptions{{1, 2}, 10});
    report.label = "full";
    report.config_fingerprint = "abc";
    const auto j = to_json(report);
    CHECK(j["precision_at"]["2"] == 1.0);
    CHECK(j["confusion"]["pairs"][0]["true"] == "Belarusian");
    const auto back = eval_report_from_json(j, tax());
    CHECK(back.label == "full");
    CHECK(back.samples == 2);
    CHECK(back.accuracy == report.accuracy);
    CHECK(back.precision_at == report.precision_at);
    CHECK(back.confusion.pairs.size() == 1);
    CHECK(back.region_decomposition->region_accuracy == report.region_decomposition->region_accuracy);
    CHECK(to_json(back) == j);
  }

  TEST_CASE("config fingerprint") {
    PipelineConfig a;
    const auto fa = config_fingerprint(a, tax(), 1);
    CHECK(fa.size() == 16);
    CHECK(fa == config_fingerprint(a, tax(), 1));
    CHECK(fa != config_fingerprint(a, tax(), 2));
    PipelineConfig b = a;
    b.max_recall = 5;
    CHECK(fa != config_fingerprint(b, tax(), 1));
    PipelineConfig c = a;
    c.ablation.drop_completion = true;
    CHECK(fa != config_fingerprint(c, tax(), 1));
  }

  TEST_CASE("ablation runs share inputs and report deltas against full") {
    MockChatBackend mock(MockKnowledgeBase::load(lama::test::fixture_dir() / "demo_kb.json"), &tax());
    const std::vector<NamedSample> test_set{{"Natalie Cook", N("Australian")},
                                            {"Junior Paulo", N("Samoan")},
                                            {"Xqz Vortly", N("Czech")},
                                            {"Hussein Ali", N("Egyptian")}};
    const auto& configs = standard_ablation_names();
    const auto runs = run_ablation(test_set, configs, mock, tax(), PipelineConfig{}, 2);
    REQUIRE(runs.size() == 5);
    CHECK(runs.at("full").report.accuracy == doctest::Approx(0.5));
    CHECK(runs.at("full").delta_accuracy == 0.0);
    CHECK(runs.at("wo_media").report.accuracy == doctest::Approx(0.25));
    CHECK(runs.at("wo_media").delta_accuracy == doctest::Approx(-0.25));
    CHECK(runs.at("wo_recall").report.calls->fallback_samples == 4);
    CHECK(runs.at("full").report.calls->totals.total() == 13);
    CHECK(runs.at("full").report.label == "full");
    CHECK(runs.at("full").report.config_fingerprint != runs.at("wo_person").report.config_fingerprint);
  }

  TEST_CASE("rendered tables") {
    const std::vector<ScoredPrediction> preds{
        sp(N("Belarusian"), {N("Russian"), N("Belarusian"), N("Polish"), N("Czech"), N("Slovak")}),
        sp(N("Irish"), {N("Irish"), N("Welsh"), N("British"), N("English"), N("Dutch")})};
    auto report = evaluate(preds, Granularity::nationality, tax());
    report.label = "full";
    const auto metrics = render_metrics_table({report});
    CHECK(metrics.find("Method") != std::string::npos);
    CHECK(metrics.find("P@5") != std::string::npos);
    CHECK(metrics.find("0.500") != std::string::npos);
    const auto confusion = render_confusion_table(report.confusion);
    CHECK(confusion.find("Belarusian -> Russian") != std::string::npos);
    CHECK(confusion.find("Region match rate:") != std::string::npos);
    auto other = report;
    other.label = "wo_media";
    other.accuracy = 0.25;
    const auto ablation = render_ablation_table({report, other}, {{"full", 0.0}, {"wo_media", -0.25}});
    CHECK(ablation.find("-0.250") != std::string::npos);
    CHECK(render_region_table({report}).find("Region Accuracy") != std::string::npos);
    CHECK(render_report(report).find("Region match rate:") != std::string::npos);
  }

  TEST_CASE("error dump lists misclassified samples only") {
    PredictionRecord wrong;
    wrong.name = "Ivan Petrov";
    wrong.gold = N("Belarusian");
    wrong.ranking.ranks = {{N("Russian"), Provenance::vote}};
    PredictionRecord right = wrong;
    right.name = "Sean Kelly";
    right.gold = N("Irish");
    right.ranking.ranks = {{N("Irish"), Provenance::vote}};
    PredictionRecord far = wrong;
    far.name = "Juan Soto";
    far.gold = N("Mexican");
    far.ranking.ranks = {{N("Chilean"), Provenance::vote}};
    const auto dump = render_error_dump({wrong, right, far}, tax());
    CHECK(dump == "name\tgold\tprediction\tregion_match\n"
                  "Ivan Petrov\tBelarusian\tRussian\tyes\n"
                  "Juan Soto\tMexican\tChilean\tno\n");
  }
}
