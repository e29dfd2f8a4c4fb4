#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

Run run(const std::string &args, const std::string &out) {
  fs::create_directories(WGCORR_TEST_SCRATCH);
  const std::string log = std::string(WGCORR_TEST_SCRATCH) + "/stderr.txt";
  const std::string cmd = std::string(WGCORR_CLI) + " " + args + " --out " + out + " --threads 1 >/dev/null 2>" + log;
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string data(const std::string &name) { return std::string(WGCORR_TEST_DATA) + "/" + name; }
std::string scratch(const std::string &name) {
  const auto p = fs::path(WGCORR_TEST_SCRATCH) / name;
  fs::remove_all(p);
  return p.string();
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string &path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row(1);
    bool quoted = false;
    for (char ch : line) {
      if (ch == '"')
        quoted = !quoted;
      else if (ch == ',' && !quoted)
        row.emplace_back();
      else
        row.back() += ch;
    }
    rows.push_back(row);
  }
  return rows;
}

std::size_t column(const std::vector<std::string> &header, const std::string &name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name)
      return i;
  FAIL("missing column " << name);
  return 0;
}

} // namespace

TEST_CASE("modes: finite differences on the pi x pi square") {
  const auto out = scratch("sq");
  REQUIRE(run("modes --config " + data("square_fd.ini"), out).code == 0);
  const auto rows = read_csv(out + "/modes.csv");
  REQUIRE(rows.size() >= 2);
  const double ev = std::stod(rows[1][column(rows[0], "eigenvalue")]);
  CHECK(ev == doctest::Approx(2.0).epsilon(0.01));
  CHECK(fs::exists(out + "/modes.svg"));
  CHECK(fs::exists(out + "/config.effective.ini"));
}

TEST_CASE("modes: closed-form rectangle") {
  const auto out = scratch("rect");
  REQUIRE(run("modes --config " + data("square_analytic.ini"), out).code == 0);
  const auto rows = read_csv(out + "/modes.csv");
  const auto c = column(rows[0], "eigenvalue");
  CHECK(std::stod(rows[1][c]) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(std::stod(rows[2][c]) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("single: zero packet gives zero probability") {
  const auto out = scratch("zero");
  REQUIRE(run("single --config " + data("zero_packet.ini"), out).code == 0);
  const auto rows = read_csv(out + "/single_zt.csv");
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(std::stod(rows[i][column(rows[0], "P")]) == 0.0);
}

TEST_CASE("single: reruns and the echoed config reproduce the output") {
  const auto a = scratch("rep_a"), b = scratch("rep_b"), c = scratch("rep_c");
  REQUIRE(run("single --config " + data("single.ini"), a).code == 0);
  REQUIRE(run("single --config " + data("single.ini"), b).code == 0);
  REQUIRE(run("single --config " + a + "/config.effective.ini", c).code == 0);
  for (const char *f : {"/single_zt.csv", "/single_frame.csv"}) {
    const auto x = slurp(a + f);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(b + f));
    CHECK(x == slurp(c + f));
  }
  const auto echo = [](const std::string &dir) {
    const auto text = slurp(dir + "/config.effective.ini");
    return text.substr(0, text.find("[output]"));
  };
  CHECK(echo(a) == echo(c));
}

TEST_CASE("biphoton scan writes probabilities and the profile") {
  const auto out = scratch("bi");
  REQUIRE(run("biphoton --config " + data("biphoton.ini"), out).code == 0);
  const auto rows = read_csv(out + "/biphoton.csv");
  CHECK(rows.size() == 17);
  CHECK(fs::exists(out + "/profile.csv"));
  CHECK(fs::exists(out + "/biphoton.svg"));
}

TEST_CASE("bounds: light-cone rays") {
  const auto out = scratch("lc");
  REQUIRE(run("bounds --config " + data("single.ini"), out).code == 0);
  CHECK(fs::exists(out + "/lightcone.csv"));
  CHECK(slurp(out + "/bounds_summary.txt").find("outside_lightcone") != std::string::npos);
}

TEST_CASE("validate runs the property checks") {
  const auto out = scratch("val");
  REQUIRE(run("validate --config " + data("validate.ini"), out).code == 0);
  const auto rows = read_csv(out + "/validate.csv");
  REQUIRE(rows.size() > 1);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i][column(rows[0], "passed")] == "1");
}

TEST_CASE("invalid config exits 2 with the line") {
  const auto r = run("single --config " + data("bad_width.ini"), scratch("bad"));
  CHECK(r.code == 2);
  CHECK(r.err.find("bad_width.ini:6:") != std::string::npos);
  CHECK(run("single --config " + data("missing.ini"), scratch("miss")).code == 2);
  CHECK(run("modes --config " + data("single.ini"), scratch("nomodes")).code == 2);
  CHECK(run("frobnicate --config " + data("single.ini"), scratch("sub")).code == 2);
}

TEST_CASE("unreachable tolerance exits 1") {
  const auto r = run("single --config " + data("huge_t.ini"), scratch("huge"));
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}
