// Acceptance checks. One PASS/FAIL line per criterion; nonzero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <regex>

#include "ideoscale.hpp"
#include "support/oracles.hpp"
#include "support/stub_server.hpp"
#include "support/temp_dir.hpp"

using namespace ideoscale;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailed(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  require(std::abs(ideology_score(10, 5) - 0.6466271649250525) < 1e-12, "worked example");
  require(ideology_score(0, 0) == 0.0, "empty counts");
  require(ideology_score(LabelCounts{"m", 3, 7, 0}) == ideology_score(LabelCounts{"m", 3, 7, 900}), "neutral count");
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<long> count(0, 100000);
  for (int i = 0; i < 100000; ++i) {
    const long r = count(gen), l = count(gen);
    require(std::abs(ideology_score(r, l) - oracle::log_odds(r, l)) < 1e-12, "oracle mismatch");
    require(std::abs(ideology_score(r, l) + ideology_score(l, r)) < 1e-12, "antisymmetry");
    require(ideology_score(r, r) == 0.0, "equal counts");
  }
  require(seconds_since(t0) < 1.0, "took longer than 1 s");
}

void check_correlation() {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
  require(std::abs(*try_pearson(x, y) - 0.8) < 1e-12, "pearson value");
  require(!try_pearson(std::vector<double>{1}, std::vector<double>{2}).has_value(), "n < 2 defined");
  require(!try_pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}).has_value(), "constant defined");
  std::mt19937_64 gen(2);
  std::normal_distribution<double> noise;
  std::uniform_real_distribution<double> scale(0.1, 50.0), shift(-100.0, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(12), b(12);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = noise(gen);
      b[i] = a[i] + noise(gen);
    }
    const double r = *try_pearson(a, b);
    require(std::abs(r - *oracle::pearson(a, b)) < 1e-12, "oracle mismatch");
    require(std::abs(r - *try_pearson(standardize(a), standardize(b))) < 1e-12, "raw vs z");
    const double s = scale(gen), c = shift(gen);
    auto a2 = a;
    for (auto& v : a2) v = s * v + c;
    require(std::abs(r - *try_pearson(a2, b)) < 1e-12, "affine invariance");
  }
}

void check_majority() {
  const CodeMapping m;
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> code(-2, 2), len(1, 9);
  std::size_t ties = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<int> codes(len(gen));
    for (auto& c : codes) c = code(gen);
    const auto got = majority_label(std::span<const int>(codes), m);
    const auto want = oracle::majority(codes);
    if (want) {
      require(std::holds_alternative<GoldLabel>(got), "label expected");
      require(std::get<GoldLabel>(got).label == *want, "wrong label");
    } else {
      require(std::holds_alternative<Tie>(got), "tie expected");
      ++ties;
    }
  }
  require(ties > 100, "too few ties exercised");
  const auto corpus = testutil::fixture("synthetic/corpus.csv");
  const auto parsed = parse_corpus(corpus, SchemaConfig::load(testutil::fixture("synthetic/schema.ini")));
  const auto gold = gold_label_set(parsed.corpus, CoderSource::Crowd, m);
  for (const auto& t : gold.ties) require(gold.find(t.sentence_id) == nullptr, "tie kept in gold set");
}

void check_metrics() {
  constexpr auto L = IdeologyClass::Left, N = IdeologyClass::Neutral, R = IdeologyClass::Right;
  const std::vector<std::pair<IdeologyClass, IdeologyClass>> worked{{L, L}, {L, N}, {N, N}, {R, R}};
  GoldLabelSet gold;
  PredictionSet preds;
  preds.model_id = "m";
  for (std::size_t i = 0; i < worked.size(); ++i) {
    gold.add({"s" + std::to_string(i), CoderSource::Expert, worked[i].first, 1, 1});
    preds.items.push_back(make_ok("s" + std::to_string(i), worked[i].second));
  }
  const auto left = class_metrics(confusion_matrix(preds, gold), L);
  require(left.precision == 1.0 && left.recall == 0.5, "precision/recall");
  require(std::abs(left.f1 - 2.0 / 3.0) < 1e-15 && left.accuracy == 0.75, "f1/accuracy");

  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> cls(0, 2), len(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    GoldLabelSet g;
    PredictionSet p;
    std::vector<std::pair<int, int>> pairs(len(gen));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      pairs[i] = {cls(gen), cls(gen)};
      g.add({"s" + std::to_string(i), CoderSource::Expert, static_cast<IdeologyClass>(pairs[i].first), 1, 1});
      p.items.push_back(make_ok("s" + std::to_string(i), static_cast<IdeologyClass>(pairs[i].second)));
    }
    const auto cm = confusion_matrix(p, g);
    for (int c = 0; c < 3; ++c) {
      const auto b = oracle::one_vs_rest(pairs, c);
      const auto got = class_metrics(cm, static_cast<IdeologyClass>(c));
      const double n = static_cast<double>(pairs.size());
      require(std::abs(got.accuracy - (b.tp + b.tn) / n) < 1e-12, "accuracy");
      const double prec = b.tp + b.fp ? double(b.tp) / (b.tp + b.fp) : 0.0;
      const double rec = b.tp + b.fn ? double(b.tp) / (b.tp + b.fn) : 0.0;
      require(std::abs(got.precision - prec) < 1e-12 && std::abs(got.recall - rec) < 1e-12, "precision/recall");
      const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      require(std::abs(got.f1 - f1) < 1e-12, "f1");
      require(got.degenerate == (b.tp + b.fp == 0 || b.tp + b.fn == 0 || prec + rec == 0.0), "degenerate flag");
    }
  }
}

void check_keyness() {
  require(std::abs(chi_squared_2x2(10, 5, 90, 195).chi2 - 150.0 / 19.0) < 1e-12, "worked example");
  require(chi_squared_2x2(5, 10, 195, 90).signed_chi2 < 0.0, "sign");
  require(chi_squared_2x2(2, 4, 8, 16).chi2 < 1e-12, "equal rates");
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> cell(0, 500);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = cell(gen), b = cell(gen), c = cell(gen) + 1, d = cell(gen) + 1;
    const double want = oracle::chi_squared(a, b, c, d);
    require(std::abs(chi_squared_2x2(a, b, c, d).chi2 - want) <= 1e-9 * std::max(1.0, want), "oracle mismatch");
  }
  const auto rows = keyness({{"tax", "cut", "tax"}, {"market", "tax"}}, {{"spend", "public", "spend"}, {"tax", "public"}});
  require(rows.front().feature == "tax", "ranking");
  for (std::size_t i = 1; i < rows.size(); ++i) require(rows[i - 1].signed_chi2 >= rows[i].signed_chi2, "order");
}

/// Transport that records any attempt to reach the network.
struct NoNetwork : HttpTransport {
  std::atomic<int> calls{0};
  HttpResponse post_json(const std::string&, const std::string&, const HttpHeaders&) override {
    ++calls;
    return {0, "", "network disabled"};
  }
  HttpResponse get(const std::string&, const HttpHeaders&) override {
    ++calls;
    return {0, "", "network disabled"};
  }
};

void check_end_to_end() {
  testutil::TempDir out;
  auto cfg = load_experiment(testutil::fixture("synthetic/run.json"));
  cfg.output_dir = out.path();
  NoNetwork net;
  RunEnvironment env;
  env.transport = &net;
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run(cfg, env);
  require(seconds_since(t0) < 10.0, "took longer than 10 s");
  require(net.calls == 0, "network used");
  require(!report.partial, "partial run");
  for (const char* table : {"correlations.tsv", "exclusions.tsv", "gold_crowd.tsv", "gold_expert.tsv",
                            "gold_ties_crowd.tsv", "gold_ties_expert.tsv", "keyness.tsv", "metrics.tsv",
                            "scores.tsv"})
    require(testutil::slurp(out / table) == testutil::slurp(testutil::fixture(std::string("golden/") + table)),
            std::string(table) + " differs from golden");
}

void check_backend_robustness() {
  stub::Server server;
  std::atomic<int> calls{0};
  server.post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++calls;
    if (n == 1) {
      res.status = 429;
      return;
    }
    const auto content = json::parse(req.body)["messages"][0]["content"].get<std::string>();
    if (content.find("garbled") != std::string::npos) {
      res.set_content(stub::chat_reply("I am unable to help with that."), "application/json");
      return;
    }
    static const std::regex line(R"(^(\d+)\. (.*)$)");
    std::istringstream in(content.substr(content.find("Here are the texts:")));
    std::string reply;
    for (std::string l; std::getline(in, l);) {
      std::smatch m;
      if (!std::regex_match(l, m, line) || m[2].str().find("skip") != std::string::npos) continue;
      reply += "{text_number: " + m[1].str() + ", label: right-wing}\n";
    }
    res.set_content(stub::chat_reply(reply), "application/json");
  });
  server.start();

  const auto prompts = builtin_prompts();
  HttplibTransport transport{std::chrono::seconds(5)};
  ManualClock clock;
  ClassifyContext ctx;
  ctx.transport = &transport;
  ctx.clock = &clock;
  ctx.prompts = &prompts;
  ctx.getenv = [](const char*) -> const char* { return nullptr; };
  BackendConfig b;
  b.id = "llm";
  b.kind = BackendKind::BatchGenerative;
  b.endpoint_url = server.url("/v1/chat/completions");
  b.prompt = "batch_list";
  b.batch_size = 4;
  std::vector<ClassifyItem> items;
  for (int i = 0; i < 12; ++i) {
    const char* text = i == 5 ? "skip this one." : i >= 8 ? "garbled text." : "Cut taxes.";
    items.push_back({"s" + std::to_string(i), std::string(text) + " " + std::to_string(i)});
  }
  Classifier c(b, ctx);
  const auto out = c.classify(items);
  require(out.items.size() == 12, "prediction count");
  require(out.count(PredictionStatus::Ok) == 7, "ok count");
  require(out.count(PredictionStatus::ParseFailed) == 5, "parse failures");
  require(out.items[5].status == PredictionStatus::ParseFailed, "missing item not flagged");
  require(c.stats().retries == 1, "429 not retried");

  std::string dead;
  {
    stub::Server gone;
    gone.start();
    dead = gone.url("/v1/chat/completions");
  }
  b.endpoint_url = dead;
  b.max_retries = 1;
  Classifier unreachable(b, ctx);
  require(unreachable.classify(items).count(PredictionStatus::TransportFailed) == 12, "unreachable service");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> checks{
      {"scaling formula", check_scaling},
      {"correlation invariance", check_correlation},
      {"majority rule", check_majority},
      {"classification metrics", check_metrics},
      {"keyness statistic", check_keyness},
      {"end-to-end golden run", check_end_to_end},
      {"backend robustness", check_backend_robustness},
  };
  int failed = 0;
  for (const auto& [name, check] : checks) {
    try {
      check();
      std::printf("PASS %s\n", name);
    } catch (const std::exception& e) {
      std::printf("FAIL %s: %s\n", name, e.what());
      ++failed;
    }
  }
  std::printf("%zu/%zu criteria passed\n", checks.size() - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
