// End-to-end checks of the installed CLI binary (path in $HOMLAB_CLI).
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

std::string CliPath() {
  const char* p = std::getenv("HOMLAB_CLI");
  REQUIRE_MESSAGE(p != nullptr, "HOMLAB_CLI must point at the homlab binary");
  return p;
}

struct Result {
  int exit_code;
  std::string output;
};

Result Run(const std::string& args) {
  const auto out_file = std::filesystem::temp_directory_path() /
                        ("homlab-cli-out-" + std::to_string(::getpid()) + ".txt");
  const std::string cmd = CliPath() + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::string output((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::filesystem::remove(out_file);
  return {WEXITSTATUS(status), output};
}

struct CliTempDir {
  std::filesystem::path path;
  CliTempDir() {
    path = std::filesystem::temp_directory_path() /
           ("homlab-cli-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~CliTempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("help exits cleanly") {
  const Result r = Run("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("gss-gen") != std::string::npos);
  CHECK(r.output.find("experiment") != std::string::npos);
}

TEST_CASE("gss-gen runs deterministically end to end") {
  CliTempDir tmp;
  const std::string base = "gss-gen --profile fast --seed 3 --set gss_count=2 --out ";
  const Result r1 = Run(base + (tmp.path / "a").string());
  const Result r2 = Run(base + (tmp.path / "b").string());
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);

  const auto find_run = [](const std::filesystem::path& base_dir) {
    for (const auto& e : std::filesystem::directory_iterator(base_dir)) return e.path();
    return base_dir;
  };
  const auto img = "images/gss_000000.pgm";
  std::ifstream f1(find_run(tmp.path / "a") / img, std::ios::binary);
  std::ifstream f2(find_run(tmp.path / "b") / img, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  REQUIRE(!b1.empty());
  CHECK(b1 == b2);
}

TEST_CASE("config errors exit with code 2") {
  CHECK(Run("gss-gen --set bogus_key=1").exit_code == 2);
  CHECK(Run("train --set total_steps=abc").exit_code == 2);
  CHECK(Run("experiment nonsense").exit_code == 2);  // CLI11 choice validation
  CHECK(Run("--no-such-flag").exit_code == 2);
}

TEST_CASE("data errors exit with code 3") {
  CliTempDir tmp;
  const Result r = Run("train --profile fast --corpus " + (tmp.path / "missing").string() +
                       " --out " + (tmp.path / "runs").string());
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("eval without weights is a config error") {
  CliTempDir tmp;
  const Result r = Run("eval --profile fast --corpus " + tmp.path.string() + " --out " +
                       (tmp.path / "runs").string());
  CHECK(r.exit_code == 2);
}
