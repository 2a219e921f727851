// Exit-status contract of the command-line tool. These tests spawn the real
// binary; ctest exports its path in AUTOEDIT_CLI and the cases are skipped
// when the variable is absent (e.g. running unit_tests by hand).

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "autoedit/config.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* env = std::getenv("AUTOEDIT_CLI");
    return env ? env : "";
}

int run(const std::string& cmd) {
    const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / "autoedit_cli_test";
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string file(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("cli exit statuses") {
    const std::string cli = cli_path();
    if (cli.empty()) return;  // only runs under ctest

    Workspace ws;
    const std::string config = ws.file("config.ini");
    {
        std::ofstream out(config);
        out << autoedit::default_config_text();
    }

    SUBCASE("success is 0") {
        CHECK(run(cli + " gen-tasks --config " + config + " --count 3 --out " +
                  ws.file("tasks.jsonl")) == 0);
    }
    SUBCASE("config errors are 2") {
        const std::string bad = ws.file("bad.ini");
        {
            std::ofstream out(bad);
            out << "[schedule]\nT = banana\n";
        }
        CHECK(run(cli + " gen-tasks --config " + bad + " --count 1 --out " +
                  ws.file("t.jsonl")) == 2);
        CHECK(run(cli + " gen-tasks --config " + ws.file("absent.ini") +
                  " --count 1 --out " + ws.file("t.jsonl")) == 2);
    }
    SUBCASE("config-hash mismatches are 2") {
        REQUIRE(run(cli + " gen-tasks --config " + config + " --count 2 --out " +
                    ws.file("tasks.jsonl")) == 0);
        const std::string other = ws.file("other.ini");
        {
            std::string text = autoedit::default_config_text();
            text.replace(text.find("T = 10"), 6, "T = 12");
            std::ofstream out(other);
            out << text;
        }
        CHECK(run(cli + " pretrain --config " + other + " --tasks " +
                  ws.file("tasks.jsonl") + " --out " + ws.file("theta1.ckpt")) == 2);
    }
    SUBCASE("missing and corrupt data files are 3") {
        CHECK(run(cli + " pretrain --config " + config + " --tasks " +
                  ws.file("missing.jsonl") + " --out " + ws.file("theta1.ckpt")) == 3);
        const std::string corrupt = ws.file("corrupt.ckpt");
        {
            std::ofstream out(corrupt);
            out << "not a checkpoint";
        }
        REQUIRE(run(cli + " gen-tasks --config " + config + " --count 2 --out " +
                    ws.file("tasks.jsonl")) == 0);
        CHECK(run(cli + " edit --config " + config + " --ckpt " + corrupt + " --tasks " +
                  ws.file("tasks.jsonl") + " --out " + ws.file("edit.json")) == 3);
    }
}
