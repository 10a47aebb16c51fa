#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#ifndef KANFORGE_CLI
#error "KANFORGE_CLI must be defined"
#endif
#ifndef KANFORGE_TEST_TMP
#error "KANFORGE_TEST_TMP must be defined"
#endif

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(KANFORGE_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(KANFORGE_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("compile writes the three documents") {
  const auto dir = scratch("xy");
  const Run r = run("compile -e \"x1*x2\" --samples 2000 --format json -o " + dir.string());
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["N"] == 1);
  CHECK(j["L"] == 3);
  CHECK(j["measured"]["P"] == 1.0);
  CHECK(fs::exists(dir / "network.json"));
  CHECK(fs::exists(dir / "certificate.json"));
  CHECK(fs::exists(dir / "annotations.json"));
  CHECK(Json::parse(slurp(dir / "network.json"))["format"] == "kanforge/1");

  const Run table = run("compile -e \"x1*x2\" --samples 2000 -o " + scratch("xy_table").string());
  CHECK(table.code == 0);
  CHECK(table.out.find("N") != std::string::npos);

  const Run leaf = run("compile -e x1 --samples 500 --format json -o " + scratch("leaf").string());
  REQUIRE(leaf.code == 0);
  const Json lj = Json::parse(leaf.out);
  CHECK(lj["measured"]["P"] == 1.0);
  CHECK(lj["error_bound"] == 0.0);
  CHECK(lj["measured"]["sup_error"] == 0.0);

  const Run sxy = run("compile -e \"sin(x1*x2)\" --grid 35 --samples 5000 --format json -o " + scratch("sxy").string());
  REQUIRE(sxy.code == 0);
  const Json sj = Json::parse(sxy.out);
  CHECK(sj["error_bound"].get<double>() <= 2.2e-4);
  CHECK(sj["measured"]["sup_error"].get<double>() <= sj["error_bound"].get<double>());
}

TEST_CASE("bad input exits with 2") {
  CHECK(run("compile -e \"x1+\" -o " + scratch("bad").string()).code == 2);
  CHECK(run("compile -e \"tan(x1)\" -o " + scratch("bad").string()).code == 2);
  CHECK(run("compile -e x1 --grid 1 -o " + scratch("bad").string()).code == 2);
  CHECK(run("verify -i " + scratch("empty").string()).code == 2);
  CHECK(run("no-such-command").code == 2);
}

TEST_CASE("verify: clean, tampered and mismatched") {
  const auto dir = scratch("verify");
  REQUIRE(run("compile -e \"x1*x2\" --samples 2000 -o " + dir.string()).code == 0);
  CHECK(run("verify --samples 2000 -i " + dir.string()).code == 0);
  CHECK(run("verify --samples 2000 -e \"x1*x2\" -i " + dir.string()).code == 0);
  CHECK(run("verify --samples 2000 -e \"x2*x1\" -i " + dir.string()).code == 3);

  Json net = Json::parse(slurp(dir / "network.json"));
  for (auto& c : net["layers"][0]["edges"][0]["spline"]["coefficients"]) c = c.get<double>() * 2.0;
  std::ofstream(dir / "network.json") << net.dump(2);
  const Run bad = run("verify --samples 2000 --format json -i " + dir.string());
  CHECK(bad.code == 1);
  CHECK(bad.out.find("P <= p_bound") != std::string::npos);

  net["layers"][0]["edges"][0]["from"] = 17;
  std::ofstream(dir / "network.json") << net.dump(2);
  CHECK(run("verify -i " + dir.string()).code == 2);
}

TEST_CASE("outputs are deterministic") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  REQUIRE(run("compile -e \"cos(x1-x2)*x3\" --samples 3000 -o " + a.string()).code == 0);
  REQUIRE(run("compile -e \"cos(x1-x2)*x3\" --samples 3000 -o " + b.string()).code == 0);
  for (const char* f : {"network.json", "certificate.json", "annotations.json"}) CHECK(slurp(a / f) == slurp(b / f));

  const Run t1 = run("table-products --format csv"), t2 = run("table-products --format csv");
  CHECK(t1.code == 0);
  CHECK(t1.out == t2.out);
  CHECK(t1.out.rfind("f,n,N,P_measured,P_bound\n", 0) == 0);

  const Run f1 = run("fuzz --count 20 --samples 500 --format json");
  const Run f2 = run("fuzz --count 20 --samples 500 --format json");
  CHECK(f1.code == 0);
  CHECK(f1.out == f2.out);

  const Run s1 = run("compile -e \"sin(x1)\" --samples 500 --format json -o " + scratch("s1").string(), "KANFORGE_SEED=7");
  CHECK(Json::parse(s1.out)["measured"]["seed"] == 7);
}

TEST_CASE("table commands") {
  const Run p = run("table-products --format json");
  REQUIRE(p.code == 0);
  const Json rows = Json::parse(p.out);
  CHECK(rows.size() == 12);
  for (const auto& row : rows) CHECK(row["P_measured"] == "1");

  const Run r = run("sweep-rate --format csv");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("G,error,h^4,ratio\n", 0) == 0);
  const auto dir = scratch("file");
  const Run o = run("sweep-rate --format csv -o " + (dir / "rate.csv").string());
  CHECK(o.code == 0);
  CHECK(slurp(dir / "rate.csv") == r.out);
}
