#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kSmall =
    " --set data.n=40 --set graph.k=5 --set model.encoder_dims=[8,6] --set pretrain.epochs=7"
    " --set tune.epochs=5 --set tune.folds=2 --set tune.prompts=4";

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& root() {
    static const fs::path r = [] {
        fs::path p = fs::temp_directory_path() / ("phgnn_cli_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return r;
}

Run phgnn(const std::string& args) {
    const fs::path out = root() / "stdout", err = root() / "stderr";
    const std::string cmd = "cd '" + root().string() + "' && '" PHGNN_CLI "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

bool same_tree(const fs::path& a, const fs::path& b) {
    std::size_t count = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++count;
        if (slurp(e.path()) != slurp(b / e.path().filename())) return false;
    }
    return count == static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{}));
}

std::size_t line_count(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("gen-data") {
    Run r = phgnn("gen-data --out default");
    REQUIRE(r.code == 0);
    for (int i = 0; i < 3; ++i) CHECK(fs::exists(root() / "default" / ("modality_" + std::to_string(i) + ".csv")));
    CHECK_FALSE(fs::exists(root() / "default" / "modality_3.csv"));

    REQUIRE(phgnn("gen-data --set data.missing_rate=0.2 --out missing").code == 0);
    bool zero = false;
    for (int i = 0; i < 3; ++i) {
        std::istringstream in(slurp(root() / "missing" / ("present_" + std::to_string(i) + ".csv")));
        for (std::string line; std::getline(in, line);) zero |= line == "0";
    }
    CHECK(zero);

    r = phgnn("gen-data --set data.n=0 --out bad");
    CHECK(r.code == 1);
    CHECK(r.err.find("data.n") != std::string::npos);
    CHECK_FALSE(fs::exists(root() / "bad"));

    const std::string before = slurp(root() / "default" / "labels.csv");
    r = phgnn("gen-data --seed 5 --out default");
    CHECK(r.code == 1);
    CHECK(r.err.find("already exists") != std::string::npos);
    CHECK(slurp(root() / "default" / "labels.csv") == before);
    CHECK(phgnn("gen-data --seed 5 --force --out default").code == 0);

    CHECK(phgnn("gen-data --out").code == 1);
    CHECK(phgnn("gen-data --bogus --out x").code == 1);
    CHECK(phgnn("gen-data --set nokey --out x").code == 1);
    CHECK(phgnn("frobnicate").code == 1);
}

TEST_CASE("pretrain, tune and reruns") {
    REQUIRE(phgnn("gen-data" + kSmall + " --out d").code == 0);
    Run r = phgnn("pretrain" + kSmall + " --data d --out m1");
    REQUIRE(r.code == 0);
    CHECK(line_count(slurp(root() / "m1" / "loss_curve.txt")) == 7);
    REQUIRE(phgnn("pretrain" + kSmall + " --data d --out m2").code == 0);
    CHECK(same_tree(root() / "m1", root() / "m2"));
    CHECK(phgnn("pretrain" + kSmall + " --data nowhere --out m3").code == 1);
    CHECK_FALSE(fs::exists(root() / "m3"));

    r = phgnn("tune" + kSmall + " --data d --checkpoint m1 --out t1");
    REQUIRE(r.code == 0);
    const std::regex row(R"(phgnn +\d+\.\d±\d+\.\d +\d+\.\d±\d+\.\d +\d+\.\d±\d+\.\d +\d+\.\d±\d+\.\d)");
    CHECK(std::regex_search(r.out, row));
    CHECK(r.out == slurp(root() / "t1" / "report.txt"));
    REQUIRE(phgnn("tune" + kSmall + " --data d --checkpoint m1/encoder.json --out t2").code == 0);
    CHECK(same_tree(root() / "t1", root() / "t2"));

    r = phgnn("tune" + kSmall + " --strategy linear_probe --data d --checkpoint m1");
    CHECK(r.code == 0);
    CHECK(std::regex_search(r.out, std::regex(R"(linear_probe +\d)")));
    CHECK(phgnn("tune" + kSmall + " --strategy lora --data d --checkpoint m1").code == 1);

    REQUIRE(phgnn("gen-data" + kSmall + " --set data.dims=[4,4,4] --out narrow").code == 0);
    r = phgnn("tune" + kSmall + " --data narrow --checkpoint m1");
    CHECK(r.code == 1);
    CHECK(r.err.find("48") != std::string::npos);
    CHECK(slurp(root() / "m1" / "encoder.json") == slurp(root() / "m2" / "encoder.json"));
}

TEST_CASE("report commands") {
    REQUIRE(phgnn("gen-data" + kSmall + " --out rd").code == 0);
    REQUIRE(phgnn("pretrain" + kSmall + " --data rd --out rm").code == 0);

    Run r = phgnn("compare-strategies" + kSmall + " --data rd --checkpoint rm --out c1");
    REQUIRE(r.code == 0);
    for (const char* s : {"finetune", "gpf", "gpf_plus", "linear_probe", "phgnn_no_structure", "phgnn"})
        CHECK(std::regex_search(r.out, std::regex(std::string("\n") + s + R"( +\d+\.\d±)")));
    REQUIRE(phgnn("compare-strategies" + kSmall + " --data rd --checkpoint rm --out c2").code == 0);
    CHECK(same_tree(root() / "c1", root() / "c2"));

    r = phgnn("ablate-prompts" + kSmall + " --prompt-sizes 4,6 --data rd --checkpoint rm --out p1");
    REQUIRE(r.code == 0);
    CHECK(std::regex_search(r.out, std::regex(R"(\n\|P\| +4 +6\n)")));
    REQUIRE(phgnn("ablate-prompts" + kSmall + " --prompt-sizes 4,6 --data rd --checkpoint rm --out p2").code == 0);
    CHECK(same_tree(root() / "p1", root() / "p2"));

    r = phgnn("ablate-modalities" + kSmall + " --data rd --out a1");
    REQUIRE(r.code == 0);
    REQUIRE(phgnn("ablate-modalities" + kSmall + " --data rd --out a2").code == 0);
    CHECK(same_tree(root() / "a1", root() / "a2"));
    CHECK(phgnn("ablate-modalities" + kSmall + " --data rd --out a2").code == 1);
    CHECK(same_tree(root() / "a1", root() / "a2"));

    fs::remove_all(root());
}
