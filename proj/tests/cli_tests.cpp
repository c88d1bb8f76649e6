#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_binary;
fs::path g_work;

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr merged
};

Run run(const std::string& args) {
  const std::string cmd = "'" + g_binary + "' " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string path(const std::string& name) { return (g_work / name).string(); }

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<double>> rows(const std::string& file) {
  std::vector<std::vector<double>> out;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> r;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) r.push_back(std::stod(field));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("ring dataset has the requested size") {
    const Run r = run("dataset ring --m 2000 --seed 3 --out " + path("ring.csv"));
    REQUIRE(r.code == 0);
    const auto data = rows(path("ring.csv"));
    CHECK(data.size() == 2000);
    CHECK(data.front().size() == 2);
  }

  TEST_CASE("semisphere dataset in four dimensions") {
    REQUIRE(run("dataset semisphere --d 4 --seed 5 --out " + path("s4.csv")).code == 0);
    const auto data = rows(path("s4.csv"));
    REQUIRE(data.size() == 1000);
    for (const auto& r : data) {
      REQUIRE(r.size() == 4);
      double n2 = 0.0;
      for (double v : r) n2 += v * v;
      CHECK(std::sqrt(n2) >= 1.0 - 1e-12);
      CHECK(std::sqrt(n2) <= 1.01 + 1e-12);
      CHECK(r[3] >= 0.0);
    }
  }

  TEST_CASE("same seed gives identical files") {
    REQUIRE(run("dataset gaussian2d --m 300 --seed 9 --out " + path("g1.csv")).code == 0);
    REQUIRE(run("dataset gaussian2d --m 300 --seed 9 --out " + path("g2.csv")).code == 0);
    REQUIRE(run("dataset gaussian2d --m 300 --seed 10 --out " + path("g3.csv")).code == 0);
    CHECK(slurp(path("g1.csv")) == slurp(path("g2.csv")));
    CHECK(slurp(path("g1.csv")) != slurp(path("g3.csv")));
  }

  TEST_CASE("fit on a single sample") {
    std::ofstream(path("one.csv")) << "0.5,-1\n";
    const Run r = run("fit --data " + path("one.csv") + " --epsilon 0.1 --out " + path("one.sbmd"));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["count"] == 1);
    CHECK(j["residual"].get<double>() == 0.0);
  }

  TEST_CASE("ring fit converges and refits are bitwise identical") {
    REQUIRE(run("dataset ring --m 2000 --seed 3 --out " + path("ring.csv")).code == 0);
    const Run a = run("fit --data " + path("ring.csv") + " --epsilon 0.009 --out " + path("ring-a.sbmd"));
    REQUIRE(a.code == 0);
    CHECK(nlohmann::json::parse(a.out)["residual"].get<double>() <= 1e-10);
    REQUIRE(run("fit --data " + path("ring.csv") + " --epsilon 0.009 --out " + path("ring-b.sbmd")).code == 0);
    CHECK(slurp(path("ring-a.sbmd")) == slurp(path("ring-b.sbmd")));
  }

  TEST_CASE("sample respects burn-in and thinning") {
    REQUIRE(run("dataset ring --m 300 --seed 4 --out " + path("r300.csv")).code == 0);
    REQUIRE(run("fit --data " + path("r300.csv") + " --epsilon 0.01 --out " + path("r300.sbmd")).code == 0);
    REQUIRE(run("sample --model " + path("r300.sbmd") + " --steps 10 --burn 0 --thin 1 --out " + path("s10.csv") +
                " --diagnostics-out " + path("d10.jsonl"))
                .code == 0);
    CHECK(rows(path("s10.csv")).size() == 10);
    std::ifstream diag(path("d10.jsonl"));
    std::string line;
    int n = 0;
    while (std::getline(diag, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j["step"] == ++n);
      CHECK(j["in_box"].get<bool>());
    }
    CHECK(n == 10);
    REQUIRE(run("sample --model " + path("r300.sbmd") + " --steps 50000 --burn 30000 --thin 20 --out " +
                path("s1000.csv"))
                .code == 0);
    CHECK(rows(path("s1000.csv")).size() == 1000);
  }

  TEST_CASE("config file supplies options") {
    std::ofstream(path("cfg.ini")) << "seed = 9\n[dataset]\nm = 300\n";
    REQUIRE(run("--config " + path("cfg.ini") + " dataset gaussian2d --out " + path("g4.csv")).code == 0);
    CHECK(slurp(path("g4.csv")) == slurp(path("g1.csv")));
  }

  TEST_CASE("usage errors exit with status 2") {
    const Run unknown = run("experiment no-such-preset --out " + path("x"));
    CHECK(unknown.code == 2);
    CHECK(unknown.out.find("example-2d") != std::string::npos);
    CHECK(unknown.out.find("subgrid-additive") != std::string::npos);
    CHECK(run("dataset ring --bogus 1").code == 2);
    CHECK(run("fit --data " + path("nope.csv") + " --epsilon 0.1 --out " + path("n.sbmd")).code == 2);
    CHECK(run("fit --data " + path("ring.csv") + " --epsilon -1 --out " + path("n.sbmd")).code == 2);
    CHECK(run("--help").code == 0);
  }
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path to sbridge> [doctest options]\n");
    return 2;
  }
  g_binary = fs::absolute(argv[1]).string();
  std::random_device rd;
  g_work = fs::temp_directory_path() / ("sbridge-cli-" + std::to_string(rd()));
  fs::create_directories(g_work);
  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv + 1);
  const int rc = ctx.run();
  fs::remove_all(g_work);
  return rc;
}
