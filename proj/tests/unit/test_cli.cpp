#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qax/cli.hpp"
#include "qax/pipeline.hpp"
#include "support/fixtures.hpp"
#include "support/http_fake.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run qax_run(std::vector<std::string> args) {
  args.insert(args.begin(), "qax");
  std::ostringstream out, err;
  const int code = qax::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("qax_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

void write(const std::string& path, const std::string& body) { std::ofstream(path) << body; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string data_path(const std::string& name) { return std::string(QAX_TEST_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("translate-dataset with identity providers") {
  TempDir dir("translate");
  qax::testing::SyntheticOptions opt;
  opt.questions = 40;
  const auto input = qax::testing::make_synthetic_dataset(opt);
  qax::squad::write_dataset_file(input, dir / "in.json");

  const auto r = qax_run({"translate-dataset", "--in", dir / "in.json", "--out", dir / "out.json",
                          "--split", "dev", "--keep-dev", "3", "--quiet"});
  CHECK(r.code == qax::cli::kExitOk);
  CHECK(r.err.empty());
  const auto out = qax::squad::read_dataset_file(dir / "out.json");
  CHECK(qax::squad::validate_dataset(out).empty());
  const auto report = qax::pipeline::report_from_json(json::parse(slurp(dir / "out.json.report.json")));
  CHECK(report.counts.unanswerable_kept == 3);
  CHECK(out.question_count() == report.counts.total_kept());

  SUBCASE("stats on the report and on the dataset agree") {
    const auto a = qax_run({"stats", dir / "out.json.report.json", "--json"});
    const auto b = qax_run({"stats", dir / "out.json", "--json"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(json::parse(a.out)["histogram"] == json::parse(b.out)["histogram"]);
    CHECK(json::parse(a.out)["histogram"][9] == report.counts.answerable_kept);
    const auto text = qax_run({"stats", dir / "out.json"});
    CHECK(text.out.find("[0.9, 1.0]") != std::string::npos);
  }
}

TEST_CASE("translate-dataset exit codes") {
  TempDir dir("codes");
  CHECK(qax_run({"translate-dataset", "--in", dir / "missing.json", "--out", dir / "o.json"}).code ==
        qax::cli::kExitFatal);
  write(dir / "bad.json", "{\"version\": ");
  const auto bad = qax_run({"translate-dataset", "--in", dir / "bad.json", "--out", dir / "o.json"});
  CHECK(bad.code == qax::cli::kExitFatal);
  CHECK(bad.err.find("error:") == 0);
  CHECK(qax_run({"translate-dataset", "--out", dir / "o.json"}).code == qax::cli::kExitFatal);

  qax::testing::SyntheticOptions opt;
  opt.questions = 8;
  opt.unanswerable_fraction = 0;
  auto input = qax::testing::make_synthetic_dataset(opt);
  input.articles[0].paragraphs[0].qas[2].question = "Which one fails?";
  qax::squad::write_dataset_file(input, dir / "in.json");

  qax::testing::FakeProviderService svc;
  svc.reject_400.insert("Which one fails?");
  const auto partial = qax_run({"translate-dataset", "--in", dir / "in.json", "--out", dir / "o.json",
                                "--translator", "http", "--translate-url", svc.url("/translate"),
                                "--retry-base-ms", "1", "--quiet"});
  CHECK(partial.code == qax::cli::kExitPartial);
  CHECK(qax::squad::read_dataset_file(dir / "o.json").question_count() == 7);
}

TEST_CASE("align") {
  auto r = qax_run({"align", "--context", "the cat sat on the mat", "--answer", "cat sat", "--rel-pos", "0.18"});
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["char_start"] == 4);
  CHECK(j["text"] == "cat sat");
  CHECK(j["score"].get<double>() == doctest::Approx(1.0));
  CHECK(j["update_rule"] == "lexicographic");

  r = qax_run({"align", "--context", "xx abcde yy", "--rel-pos", "0.3", "--answer", "ace", "--w1", "0",
               "--update-rule", "paper_literal"});
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(j["text"] == "abcde");
  CHECK(j["update_rule"] == "paper_literal");
  CHECK(j["weights"]["w2"].get<double>() == 1.0);

  CHECK(qax_run({"align", "--context", "a b", "--answer", "a b c", "--rel-pos", "0"}).code == qax::cli::kExitFatal);
  CHECK(qax_run({"align", "--context", "a b", "--answer", "a", "--rel-pos", "0", "--w1", "0.5", "--w2", "0.6"}).code ==
        qax::cli::kExitFatal);
  CHECK(qax_run({"align", "--context", "a b", "--answer", "a", "--rel-pos", "0", "--update-rule", "greedy"}).code ==
        qax::cli::kExitFatal);
}

TEST_CASE("config file fills options not given on the command line") {
  TempDir dir("config");
  write(dir / "align.conf", "# weights\nw1 = 0\nmax-stride = 1\n");
  auto r = qax_run({"align", "--config", dir / "align.conf", "--context", "xx abcde yy", "--rel-pos", "0.3", "--answer", "ace"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["weights"]["w1"].get<double>() == 0.0);
  CHECK(json::parse(r.out)["score"].get<double>() == doctest::Approx(0.6));
  CHECK(json::parse(r.out)["candidates_examined"] == 5);

  r = qax_run({"align", "--config", dir / "align.conf", "--context", "xx abcde yy", "--rel-pos", "0.3", "--answer", "ace", "--w1", "1"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["weights"]["w1"].get<double>() == 1.0);

  write(dir / "bad.conf", "no_such_key = 1\n");
  CHECK(qax_run({"align", "--config", dir / "bad.conf", "--context", "a", "--answer", "a", "--rel-pos", "0"}).code ==
        qax::cli::kExitFatal);

  CHECK(qax::cli::parse_config_text("a = 1\n\n# c\n b=two words \n") ==
        std::map<std::string, std::string>{{"a", "1"}, {"b", "two words"}});
  CHECK_THROWS(qax::cli::parse_config_text("novalue\n"));
}

TEST_CASE("evaluate") {
  TempDir dir("eval");
  qax::testing::SyntheticOptions opt;
  opt.questions = 4;
  opt.unanswerable_fraction = 0;
  const auto gold = qax::testing::make_synthetic_dataset(opt);
  qax::squad::write_dataset_file(gold, dir / "gold.json");
  json perfect = json::object(), half = json::object();
  int k = 0;
  for (const auto& p : gold.articles[0].paragraphs)
    for (const auto& qa : p.qas) {
      perfect[qa.id] = qa.answers[0].text;
      half[qa.id] = k++ % 2 ? "nothing like it" : qa.answers[0].text;
    }
  write(dir / "perfect.json", perfect.dump());
  write(dir / "half.json", half.dump());

  auto r = qax_run({"evaluate", "--pred", dir / "perfect.json", "--gold", dir / "gold.json"});
  CHECK(r.code == 0);
  CHECK(r.out == "EM 100.00 F1 100.00\n");
  r = qax_run({"evaluate", "--pred", dir / "half.json", "--gold", dir / "gold.json", "--json-out",
               dir / "s.json", "--per-question"});
  CHECK(r.out == "EM 50.00 F1 50.00\n");
  CHECK(json::parse(slurp(dir / "s.json"))["per_question"].size() == 4);

  r = qax_run({"evaluate", "--pred", data_path("metrics_pred.json"), "--gold", data_path("metrics_gold.json")});
  CHECK(r.out == "EM 40.00 F1 59.36\n");

  write(dir / "unknown.json", R"({"nope": "x"})");
  CHECK(qax_run({"evaluate", "--pred", dir / "unknown.json", "--gold", dir / "gold.json"}).code ==
        qax::cli::kExitFatal);
}

TEST_CASE("cache inspect and clear") {
  TempDir dir("cache");
  {
    qax::testing::FakeProviderService svc;
    qax::providers::ProviderConfig cfg;
    cfg.translator = qax::providers::TranslatorKind::Http;
    cfg.translate_endpoint = svc.url("/translate");
    cfg.cache_dir = dir / "c";
    auto client = qax::providers::ProviderClient::from_config(cfg);
    client->translate_text("one");
    client->translate_text("two");
  }
  auto r = qax_run({"cache", "inspect", "--dir", dir / "c"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["translations"] == 2);
  r = qax_run({"cache", "clear", "--dir", dir / "c"});
  CHECK(r.out == "removed 2 entries\n");
  CHECK(json::parse(qax_run({"cache", "inspect", "--dir", dir / "c"}).out)["entries"] == 0);
}

TEST_CASE("help lists defaults") {
  const auto r = qax_run({"translate-dataset", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--threshold") != std::string::npos);
  CHECK(r.out.find("0.6") != std::string::npos);
  CHECK(r.out.find("6000") != std::string::npos);
  CHECK(r.out.find("700") != std::string::npos);
  CHECK(qax_run({}).code == qax::cli::kExitFatal);
}
