#include "doctest.h"

#include <cstdlib>
#include <fstream>

#include "dyadic/config.hpp"

using namespace dyt1;

TEST_CASE("config hash and header are stable") {
    RunConfig a, b;
    CHECK(a.hash() == b.hash());
    b.N = 2;
    CHECK(a.hash() != b.hash());
    CHECK(a.header("coeff").find("config_hash=") != std::string::npos);
    CHECK(a.header("coeff").find(a.canonical_json()) != std::string::npos);
}

TEST_CASE("config validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    c.N = 5;
    c.M = 3;
    CHECK_THROWS(c.validate());
    c = RunConfig{};
    c.n1 = 2;
    CHECK_THROWS(c.validate());
    c = RunConfig{};
    c.quad.sigma = 1.5;
    CHECK_THROWS(c.validate());
}

TEST_CASE("deterministic rng") {
    DetRng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    DetRng c(43);
    CHECK(a.next_u64() != c.next_u64());
    DetRng d(0);
    for (int i = 0; i < 1000; ++i) {
        double u = d.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("atomic text output") {
    std::string path = "atomic_test.txt";
    write_text_atomic(path, "hello\n");
    std::ifstream in(path);
    std::string s;
    std::getline(in, s);
    CHECK(s == "hello");
    std::remove(path.c_str());
}

#ifdef DYADIC_CLI_PATH
TEST_CASE("cli exit-code contract") {
    std::string bin = DYADIC_CLI_PATH;
    // usage error
    CHECK(WEXITSTATUS(std::system((bin + " --nonsense 2>/dev/null").c_str())) == 2);
    CHECK(WEXITSTATUS(std::system((bin + " 2>/dev/null").c_str())) == 2);
    // config error: N > M
    CHECK(WEXITSTATUS(std::system(
              (bin + " verify --only mdt -N 4 -M 2 --out cli_tmp 2>/dev/null").c_str())) == 2);
    // missing kernel file
    CHECK(WEXITSTATUS(std::system(
              (bin + " verify --only conditions --kernel /no/such/file.json --out cli_tmp"
                     " 2>/dev/null")
                  .c_str())) == 2);
    // a cheap passing section
    CHECK(WEXITSTATUS(std::system(
              (bin + " verify --only mdt --out cli_tmp >/dev/null").c_str())) == 0);
    // impossible tolerance fails with exit 1
    CHECK(WEXITSTATUS(std::system(
              (bin + " verify --only mdt --cmax 0 --out cli_tmp >/dev/null").c_str())) == 1);
    // reproducibility: identical config gives byte-identical output
    CHECK(WEXITSTATUS(std::system(
              (bin + " verify --only counting --out cli_tmp_a >/dev/null").c_str())) == 0);
    CHECK(WEXITSTATUS(std::system(
              (bin + " verify --only counting --out cli_tmp_b >/dev/null").c_str())) == 0);
    auto slurp = [](const std::string& p) {
        std::ifstream f(p);
        return std::string((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
    };
    std::string ja = slurp("cli_tmp_a/verify.json"), jb = slurp("cli_tmp_b/verify.json");
    CHECK(!ja.empty());
    CHECK(ja == jb);
    std::system("rm -rf cli_tmp cli_tmp_a cli_tmp_b");
}
#endif
