#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bsl/data/manifest.hpp"
#include "bsl/train/checkpoint.hpp"
#include "bsl/train/run_config.hpp"

using namespace bsl;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / ("bsl_cli_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout + stderr interleaved
};

/** Run the installed CLI binary with `args`, capturing output and exit code. */
CliResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
    const std::filesystem::path log = scratch / "cli_output.txt";
    const std::string cmd =
        std::string(BSL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(log);
    std::ostringstream os;
    os << in.rdbuf();
    r.output = os.str();
    return r;
}

std::string file_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    return file_text(a) == file_text(b);
}

} // namespace

TEST_CASE("cli synth-data writes a loadable balanced corpus", "[cli]") {
    const std::filesystem::path dir = temp_dir("synth");
    const CliResult r = run_cli(
        "synth-data --out " + (dir / "corpus").string() + " --side 32 --train 6 --test 4 --seed 3",
        dir);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);

    const Manifest m = Manifest::load(dir / "corpus" / "manifest.csv");
    REQUIRE(m.split_indices("train").size() == 12);
    REQUIRE(m.split_indices("test").size() == 8);
    std::size_t fakes = 0;
    for (const ManifestRow& row : m.rows) fakes += row.label == 1;
    REQUIRE(fakes == 10);
}

TEST_CASE("cli inspect-shuffle reruns are byte-identical", "[cli]") {
    const std::filesystem::path dir = temp_dir("inspect");
    REQUIRE(run_cli("synth-data --out " + (dir / "c").string() +
                        " --side 32 --train 2 --test 0 --seed 9",
                    dir)
                .exit_code == 0);
    const std::string img = (dir / "c" / "train_real_00000.png").string();

    const std::string flags = " --seed 11 --s-intra 4 --s-inter 8";
    REQUIRE(run_cli("inspect-shuffle " + img + flags + " --out " + (dir / "a").string(), dir)
                .exit_code == 0);
    REQUIRE(run_cli("inspect-shuffle " + img + flags + " --out " + (dir / "b").string(), dir)
                .exit_code == 0);

    for (const char* name :
         {"train_real_00000_shuffled.png", "train_real_00000_restored.png",
          "train_real_00000_shuffle.json"}) {
        REQUIRE(std::filesystem::exists(dir / "a" / name));
        REQUIRE(same_bytes(dir / "a" / name, dir / "b" / name));
    }

    // The JSON panel carries the mark and coordinate matrices.
    const std::string json = file_text(dir / "a" / "train_real_00000_shuffle.json");
    REQUIRE(json.find("\"mark\"") != std::string::npos);
    REQUIRE(json.find("\"coords\"") != std::string::npos);

    // Geometry that does not divide the image is a config error.
    const CliResult bad =
        run_cli("inspect-shuffle " + img + " --seed 1 --s-intra 5 --s-inter 10", dir);
    REQUIRE(bad.exit_code == 2);
}

TEST_CASE("cli train produces a reproducible run directory and eval reads it back", "[cli]") {
    const std::filesystem::path dir = temp_dir("train");
    REQUIRE(run_cli("synth-data --out " + (dir / "c").string() +
                        " --side 32 --train 8 --test 4 --seed 21",
                    dir)
                .exit_code == 0);
    const std::string data = (dir / "c" / "manifest.csv").string();
    const std::string run = (dir / "run").string();

    const std::string overrides =
        " --set backbone=tiny --set input_side=32 --set shuffle.s_intra=4"
        " --set shuffle.s_inter=8 --set batch_size=8 --set max_steps=4 --set eval_every=2"
        " --set run_name=clismoke";
    const CliResult r = run_cli("train --data " + data + " --out " + run + overrides, dir);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);

    // Everything needed to reproduce the run is in the directory.
    const RunConfig cfg = RunConfig::load(dir / "run" / "effective_config.json");
    CHECK(cfg.run_name == "clismoke");
    CHECK(cfg.max_steps == 4);
    CHECK(file_text(dir / "run" / "run_id.txt") == cfg.run_id() + "\n");
    REQUIRE(std::filesystem::exists(dir / "run" / "metrics.jsonl"));
    REQUIRE(std::filesystem::exists(dir / "run" / "eval.jsonl"));
    REQUIRE(std::filesystem::exists(dir / "run" / "last.ckpt"));
    REQUIRE(std::filesystem::exists(dir / "run" / "best.ckpt"));
    CHECK(Checkpoint::load(dir / "run" / "last.ckpt").step == 4);

    const CliResult ev = run_cli("eval --checkpoint " + run + "/best.ckpt --data " + data +
                                     " --degrade blur:3 --restoration --out " + run + "/eval",
                                 dir);
    INFO(ev.output);
    REQUIRE(ev.exit_code == 0);
    REQUIRE(ev.output.find("clean") != std::string::npos);
    REQUIRE(ev.output.find("blur:3") != std::string::npos);
    REQUIRE(ev.output.find("restoration within-1") != std::string::npos);
    const std::string csv = file_text(dir / "run" / "eval" / "eval.csv");
    REQUIRE(csv.rfind("tag,n,acc,auc\n", 0) == 0);
    REQUIRE(csv.find("\nblur:3,") != std::string::npos);

    const CliResult sw = run_cli("sweep --checkpoint " + run + "/last.ckpt --data " + data +
                                     " --resize 16 --blur 3 --out " + run + "/sweep",
                                 dir);
    INFO(sw.output);
    REQUIRE(sw.exit_code == 0);
    REQUIRE(file_text(dir / "run" / "sweep" / "sweep.csv").find("resize:16") != std::string::npos);
}

TEST_CASE("cli exit codes separate config errors from runtime failures", "[cli]") {
    const std::filesystem::path dir = temp_dir("codes");
    REQUIRE(run_cli("synth-data --out " + (dir / "c").string() +
                        " --side 16 --train 2 --test 2 --seed 2",
                    dir)
                .exit_code == 0);
    const std::string data = (dir / "c" / "manifest.csv").string();

    // Unknown flag and unknown config key are config errors.
    CHECK(run_cli("train --data " + data + " --bogus-flag", dir).exit_code == 2);
    CHECK(run_cli("train --data " + data + " --set not_a_key=1", dir).exit_code == 2);
    CHECK(run_cli("eval --checkpoint nope.ckpt --data " + data + " --degrade blur:4", dir)
              .exit_code == 2);

    // A missing data file surfaces as a runtime failure.
    const CliResult missing =
        run_cli("train --data " + (dir / "absent.csv").string() + " --set backbone=tiny", dir);
    CHECK(missing.exit_code == 1);

    // A checkpoint path that does not exist is a runtime failure too.
    CHECK(run_cli("eval --checkpoint " + (dir / "absent.ckpt").string() + " --data " + data, dir)
              .exit_code == 1);
}

TEST_CASE("cli ablate emits the five-row table and artifacts", "[cli]") {
    const std::filesystem::path dir = temp_dir("ablate");
    REQUIRE(run_cli("synth-data --out " + (dir / "c").string() +
                        " --side 32 --train 6 --test 3 --seed 13",
                    dir)
                .exit_code == 0);
    const std::string data = (dir / "c" / "manifest.csv").string();

    const CliResult r = run_cli(
        "ablate --data " + data + " --out " + (dir / "abl").string() +
            " --set backbone=tiny --set input_side=32 --set shuffle.s_intra=4"
            " --set shuffle.s_inter=8 --set batch_size=4 --set max_steps=2 --degrade blur:3",
        dir);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);
    for (const char* row : {"baseline", "+intra", "+adversarial", "+inter", "+restore"})
        REQUIRE(r.output.find(row) != std::string::npos);

    const std::string csv = file_text(dir / "abl" / "ablation.csv");
    REQUIRE(csv.rfind("id,row,intra,adv,inter,restore,clean_acc,clean_auc,blur:3_acc,blur:3_auc,"
                      "rest_within_1\n",
                      0) == 0);
    REQUIRE(std::filesystem::exists(dir / "abl" / "ablation.txt"));
    for (int i = 1; i <= 5; ++i)
        REQUIRE(std::filesystem::exists(dir / "abl" / ("run_row" + std::to_string(i)) /
                                        "last.ckpt"));
}
