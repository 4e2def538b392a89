#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cli_helpers.hpp"
#include "dlmtrace/serialize.hpp"
#include "dlmtrace/trajectory.hpp"

using namespace clitest;
using dlmtrace::kExitData;
using dlmtrace::kExitOk;
using dlmtrace::kExitUsage;

TEST_CASE("end-to-end pipeline") {
  const auto dir = scratch("cli_pipeline");
  REQUIRE(pipeline(dir, "3") == 0);
  for (const char* f : {"sim/ref.jsonl", "sim/test.jsonl", "sim/manifest.json", "build/ddms.jsonl",
                        "fit/fingerprint_model_a.json", "fit/fingerprint_model_b.json", "score/scores.csv",
                        "eval/report.json", "eval/roc.csv", "eval/confusion.csv", "distance/scores.csv",
                        "svd/spectrum_model_a.csv", "svd/spectrum_model_b.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto report = dlmtrace::Json::parse(slurp(dir / "eval/report.json"));
  CHECK(report["n_pos"] == 40);
  CHECK(report["n_neg"] == 40);
  CHECK(report["auc"].get<double>() >= 0.9);

  const std::string scores = slurp(dir / "score/scores.csv");
  CHECK(scores.rfind("id,true_model,loglik:model_a,loglik:model_b,decision\n", 0) == 0);
  CHECK(slurp(dir / "svd/spectrum_model_a.csv").rfind("index,sigma\n", 0) == 0);

  // No temporary files are left behind.
  for (const auto& [name, content] : snapshot(dir)) CHECK(name.find(".tmp") == std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = scratch("cli_rerun_a");
  const auto b = scratch("cli_rerun_b");
  REQUIRE(pipeline(a, "5", "20") == 0);
  REQUIRE(pipeline(b, "5", "20") == 0);
  const auto fa = snapshot(a);
  const auto fb = snapshot(b);
  REQUIRE(fa.size() == fb.size());
  for (const auto& [name, content] : fa) {
    CHECK_MESSAGE(fb.at(name) == content, name);
  }
}

TEST_CASE("usage errors exit with 2") {
  const auto dir = scratch("cli_usage");
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"simulate", "--n-ref"}).code == kExitUsage);
  CHECK(run({"simulate", "--block-size", "5", "--out-dir", dir.string()}).code == kExitUsage);
  CHECK(run({"simulate", "--scenario", "XYZ", "--out-dir", dir.string()}).code == kExitUsage);
  CHECK(run({"simulate", "--threads", "0", "--out-dir", dir.string()}).code == kExitUsage);
  CHECK(run({"build"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("data errors exit with 3") {
  const auto dir = scratch("cli_data");
  CHECK(run({"build", "--log", (dir / "missing.jsonl").string(), "--out-dir", dir.string()}).code == kExitData);

  std::ofstream(dir / "bad.jsonl") << "{\"model_id\": 1}\n";
  const Run r = run({"fit", "--log", (dir / "bad.jsonl").string(), "--out-dir", dir.string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("line 1") != std::string::npos);

  std::ofstream(dir / "empty.jsonl").flush();
  CHECK(run({"fit", "--log", (dir / "empty.jsonl").string(), "--out-dir", dir.string()}).code == kExitData);

  std::ofstream(dir / "scores.csv") << "id,true_model,score:model_a,decision\n";
  CHECK(run({"evaluate", "--scores", (dir / "scores.csv").string(), "--out-dir", dir.string()}).code ==
        kExitData);
}

TEST_CASE("config file with flag precedence") {
  const auto dir = scratch("cli_config");
  std::ofstream(dir / "cfg.json") << R"({"n-ref": 3, "n-test": 2, "num-tokens": 8, "block-size": 4})";
  REQUIRE(run({"simulate", "--config", (dir / "cfg.json").string(), "--n-test", "5", "--out-dir",
               (dir / "out").string()})
              .code == kExitOk);
  std::ifstream ref(dir / "out/ref.jsonl");
  const auto refs = dlmtrace::read_log(ref);
  std::ifstream test(dir / "out/test.jsonl");
  const auto tests = dlmtrace::read_log(test);
  CHECK(refs.size() == 6);
  CHECK(tests.size() == 10);
  CHECK(refs[0].num_tokens == 8);
  CHECK(refs[0].block_size == 4);

  std::ofstream(dir / "broken.json") << "{";
  CHECK(run({"simulate", "--config", (dir / "broken.json").string(), "--out-dir", dir.string()}).code !=
        kExitOk);
}

TEST_CASE("scoring refuses mismatched effect values") {
  const auto dir = scratch("cli_effects");
  const std::string sim = (dir / "sim").string();
  REQUIRE(run({"simulate", "--n-ref", "10", "--n-test", "4", "--out-dir", sim}).code == kExitOk);
  REQUIRE(run({"fit", "--log", sim + "/ref.jsonl", "--alpha", "7", "--out-dir", (dir / "fit").string()}).code ==
          kExitOk);
  const std::string fa = (dir / "fit/fingerprint_model_a.json").string();
  const std::string fb = (dir / "fit/fingerprint_model_b.json").string();
  CHECK(run({"score", "--log", sim + "/test.jsonl", "--fingerprint", fa, "--fingerprint", fb, "--alpha", "10",
             "--out-dir", (dir / "s1").string()})
            .code == kExitUsage);
  CHECK(run({"score", "--log", sim + "/test.jsonl", "--fingerprint", fa, "--fingerprint", fb, "--out-dir",
             (dir / "s2").string()})
            .code == kExitOk);
  CHECK(run({"score", "--log", sim + "/test.jsonl", "--fingerprint", fa, "--out-dir", (dir / "s3").string()})
            .code == kExitUsage);
}

TEST_CASE("ablation report") {
  const auto dir = scratch("cli_ablate");
  REQUIRE(run({"ablate", "--n-ref", "20", "--n-test", "20", "--num-tokens", "8", "--block-size", "4",
               "--out-dir", dir.string()})
              .code == kExitOk);
  const auto report = dlmtrace::Json::parse(slurp(dir / "ablation.json"));
  CHECK(report.contains("settings"));
  const std::string csv = slurp(dir / "ablation.csv");
  CHECK(csv.rfind("name,group,alpha,beta,gamma,auc\n", 0) == 0);
  // original + 11 alpha + 10 beta + 11 gamma + 6 zeroing rows, plus the header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 40);
}
