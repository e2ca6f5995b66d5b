#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SMILANSKY_CLI) + " " + args + " > /dev/null 2>&1";
    const int r = std::system(cmd.c_str());
    return WIFEXITED(r) ? WEXITSTATUS(r) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

fs::path fresh(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("smilansky_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void same_outputs(const fs::path& a, const fs::path& b) {
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        const auto other = b / e.path().filename();
        REQUIRE(fs::exists(other));
        CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
    }
    CHECK(files >= 2);
}

}  // namespace

TEST_CASE("repeated CLI runs are byte-identical") {
    const char* commands[] = {
        "bands --alpha 1.3 --omega 1 --q-min -10 --q-max 2",
        "bands2d --alpha 1.3 --format json",
        "spectral-check --alpha 1.3 --e 2.0 --e2 2.1 --n-max 200",
        "evolve --alpha 1.3 --initial gaussian --n-bands 3 --n-max 30 --grid-points 120 --t-end 0.5",
        "band-evolve --alpha 1.3 --q-min -20 --q-max 20 --q-grid 801 --dt 0.01 --t-end 1",
    };
    int k = 0;
    for (const char* c : commands) {
        const auto a = fresh("a" + std::to_string(k)), b = fresh("b" + std::to_string(k));
        ++k;
        REQUIRE(run(std::string(c) + " --out " + a.string()) == 0);
        REQUIRE(run(std::string(c) + " --out " + b.string()) == 0);
        same_outputs(a, b);
    }
}

TEST_CASE("config file and flags") {
    const auto d = fresh("cfg");
    {
        std::ofstream f(d / "c.json");
        f << R"({"params.alpha": 0.8, "bands.q_points": 11})";
    }
    const auto out = d / "o";
    REQUIRE(run("bands --config " + (d / "c.json").string() + " --q-min -1 --out " + out.string()) == 0);
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(m["config"]["alpha"] == 0.8);
    CHECK(m["config"]["q_min"] == -1.0);
    CHECK(m["config"]["q_points"] == 11);
    CHECK(m["status"] == "ok");
    std::istringstream csv(slurp(out / m["artifacts"][0].get<std::string>()));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "# config_hash: " + m["config_hash"].get<std::string>());

    {
        std::ofstream f(d / "empty.json");
        f << "{}";
    }
    CHECK(run("bands --config " + (d / "empty.json").string() + " --out " + out.string()) == 2);
    {
        std::ofstream f(d / "bad.json");
        f << R"({"params.bogus": 1})";
    }
    CHECK(run("bands --config " + (d / "bad.json").string() + " --out " + out.string()) == 2);
    CHECK(run("--out " + out.string()) == 2);
    CHECK(run("bands --alpha -1 --out " + out.string()) == 2);
    // numerical failure: no third-band transition to bracket
    CHECK(run("transition-scan --alpha 1.3 --n 2 --oscillators 2 --alpha-min 1 --alpha-max 2 --out " + out.string()) == 1);
    CHECK(nlohmann::json::parse(slurp(out / "manifest.json"))["error"]["kind"] == "NotBracketed");
}
