// Command-line entrypoint: dataset synthesis, training, evaluation,
// robustness sweeps, ablations, and shuffle visualization.
//
// Exit codes: 0 success, 2 bad flags or bad configuration, 1 runtime
// failure.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "bsl/bsl.hpp"

namespace {

using namespace bsl;

std::filesystem::path default_run_root() {
    const char* env = std::getenv("BSL_RUN_DIR");
    return (env && *env) ? std::filesystem::path(env) : std::filesystem::path("runs");
}

RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides) {
    nlohmann::json j = file.empty() ? RunConfig{}.to_json() : nlohmann::json();
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw config_error("cannot open config '" + file + "'");
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw config_error("config '" + file + "': " + e.what());
        }
    }
    for (const std::string& s : overrides) apply_override(j, s);
    return RunConfig::from_json(j);
}

std::vector<Degradation> parse_degradations(const std::vector<std::string>& specs) {
    std::vector<Degradation> out;
    out.reserve(specs.size());
    for (const std::string& s : specs) {
        try {
            out.push_back(Degradation::parse(s));
        } catch (const validation_error& e) {
            throw config_error(std::string("--degrade: ") + e.what());
        }
    }
    return out;
}

nlohmann::json reports_json(const std::vector<MetricReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const MetricReport& r : reports)
        arr.push_back({{"tag", r.tag}, {"n", r.n}, {"acc", r.acc}, {"auc", r.auc}});
    return arr;
}

std::string reports_csv(const std::vector<MetricReport>& reports) {
    std::ostringstream os;
    os << "tag,n,acc,auc\n" << std::setprecision(17);
    for (const MetricReport& r : reports)
        os << r.tag << ',' << r.n << ',' << r.acc << ',' << r.auc << "\n";
    return os.str();
}

void print_reports(const std::vector<MetricReport>& reports) {
    for (const MetricReport& r : reports)
        std::cout << std::left << std::setw(12) << r.tag << std::fixed << std::setprecision(4)
                  << " acc " << r.acc << "  auc " << r.auc << "  (n=" << r.n << ")\n";
}

void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) throw structural_error("cannot write '" + file.string() + "'");
    out << text;
}

// ---------------------------------------------------------------- synth-data

struct SynthArgs {
    std::string out;
    std::size_t side = 64, train = 1000, val = 0, test = 250;
    std::uint64_t seed = 2024;
};

int cmd_synth(const SynthArgs& a) {
    SynthPlan plan;
    plan.side = a.side;
    plan.train = a.train;
    plan.val = a.val;
    plan.test = a.test;
    const Manifest m = synth_dataset(plan, a.seed, a.out);
    std::cout << "wrote " << m.rows.size() << " images under " << a.out << "\n";
    for (const std::string& split : m.split_names())
        std::cout << "  " << split << ": " << m.split_indices(split).size() << "\n";
    return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
    std::string config, data, out, train_split = "train";
    std::vector<std::string> sets;
    bool no_preload = false;
};

int cmd_train(const TrainArgs& a) {
    const RunConfig cfg = load_config(a.config, a.sets);
    const Manifest m = Manifest::load(a.data);

    const std::filesystem::path out_dir =
        a.out.empty() ? default_run_root() / (cfg.run_name + "_" + cfg.run_id())
                      : std::filesystem::path(a.out);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "run_id.txt", cfg.run_id() + "\n");

    FileBatchSource train_files(m, a.train_split, cfg.input_side, cfg.fail_fast);
    std::optional<FileBatchSource> eval_files;
    const std::vector<std::string> splits = m.split_names();
    if (std::find(splits.begin(), splits.end(), cfg.eval_split) != splits.end())
        eval_files.emplace(m, cfg.eval_split, cfg.input_side, cfg.fail_fast);
    else
        std::cerr << "note: manifest has no '" << cfg.eval_split
                  << "' split; skipping evaluation\n";

    std::optional<MemoryBatchSource> train_mem, eval_mem;
    if (!a.no_preload) {
        train_mem.emplace(preload_source(train_files));
        if (eval_files) eval_mem.emplace(preload_source(*eval_files));
    }
    const BatchSource& train_src = train_mem ? static_cast<const BatchSource&>(*train_mem)
                                             : train_files;
    const BatchSource* eval_src = eval_mem ? static_cast<const BatchSource*>(&*eval_mem)
                                           : (eval_files ? &*eval_files : nullptr);

    Trainer trainer(cfg, train_src, eval_src, out_dir);
    trainer.run();

    std::cout << "run " << cfg.run_name << " (" << cfg.run_id() << "): " << trainer.step()
              << " steps\n";
    if (!trainer.eval_history().empty()) {
        const EvalRecord& last = trainer.eval_history().back();
        std::cout << std::fixed << std::setprecision(4) << "final " << cfg.eval_split << " acc "
                  << last.acc << "  auc " << last.auc << "\n";
    }
    std::cout << "artifacts in " << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
    std::string checkpoint, data, split, out;
    std::vector<std::string> degrade;
    std::size_t batch = 64;
    bool restoration = false;
    std::uint64_t rest_seed = 0;
};

int cmd_eval(const EvalArgs& a) {
    const std::vector<Degradation> degradations = parse_degradations(a.degrade);
    LoadedModel lm = load_model(a.checkpoint);
    if (a.restoration && !lm.config.heads.attach)
        throw config_error("--restoration: checkpoint was trained without heads");

    const Manifest m = Manifest::load(a.data);
    const std::string split = a.split.empty() ? lm.config.eval_split : a.split;
    FileBatchSource files(m, split, lm.config.input_side, lm.config.fail_fast);
    const MemoryBatchSource src = preload_source(files);

    const std::vector<MetricReport> reports =
        robustness_sweep(*lm.model, src, degradations, a.batch);
    print_reports(reports);

    nlohmann::json j{{"checkpoint", a.checkpoint}, {"split", split},
                     {"reports", reports_json(reports)}};
    if (a.restoration) {
        const RestorationReport rest =
            restoration_histogram(*lm.model, src, a.rest_seed, a.batch);
        std::cout << std::fixed << std::setprecision(4) << "restoration within-1 "
                  << rest.frac_within_1 << "  (grid " << rest.grid_m << "x" << rest.grid_n
                  << ", " << rest.images << " images)\n";
        j["restoration"] = {{"grid_m", rest.grid_m},
                            {"grid_n", rest.grid_n},
                            {"images", rest.images},
                            {"counts", rest.counts},
                            {"frac_within_1", rest.frac_within_1}};
    }
    if (!a.out.empty()) {
        std::filesystem::create_directories(a.out);
        write_text(std::filesystem::path(a.out) / "eval.json", j.dump(2) + "\n");
        write_text(std::filesystem::path(a.out) / "eval.csv", reports_csv(reports));
        std::cout << "reports in " << a.out << "\n";
    }
    return 0;
}

// --------------------------------------------------------------------- sweep

struct SweepArgs {
    std::string checkpoint, data, split, out;
    std::vector<int> resize{160, 112, 80, 56};
    std::vector<int> blur{3, 5, 7, 9};
    std::size_t batch = 64;
};

int cmd_sweep(const SweepArgs& a) {
    std::vector<std::string> specs;
    for (const int p : a.resize) specs.push_back("resize:" + std::to_string(p));
    for (const int k : a.blur) specs.push_back("blur:" + std::to_string(k));
    const std::vector<Degradation> degradations = parse_degradations(specs);

    LoadedModel lm = load_model(a.checkpoint);
    const Manifest m = Manifest::load(a.data);
    const std::string split = a.split.empty() ? lm.config.eval_split : a.split;
    FileBatchSource files(m, split, lm.config.input_side, lm.config.fail_fast);
    const MemoryBatchSource src = preload_source(files);

    const std::vector<MetricReport> reports =
        robustness_sweep(*lm.model, src, degradations, a.batch);
    print_reports(reports);

    if (!a.out.empty()) {
        std::filesystem::create_directories(a.out);
        const nlohmann::json j{{"checkpoint", a.checkpoint}, {"split", split},
                               {"reports", reports_json(reports)}};
        write_text(std::filesystem::path(a.out) / "sweep.json", j.dump(2) + "\n");
        write_text(std::filesystem::path(a.out) / "sweep.csv", reports_csv(reports));
        std::cout << "reports in " << a.out << "\n";
    }
    return 0;
}

// -------------------------------------------------------------------- ablate

struct AblateArgs {
    std::string config, data, out, train_split = "train";
    std::vector<std::string> sets;
    std::vector<std::string> degrade{"blur:5", "resize:24"};
};

int cmd_ablate(const AblateArgs& a) {
    const RunConfig base = load_config(a.config, a.sets);
    const std::vector<Degradation> degradations = parse_degradations(a.degrade);
    const Manifest m = Manifest::load(a.data);

    FileBatchSource train_files(m, a.train_split, base.input_side, base.fail_fast);
    FileBatchSource eval_files(m, base.eval_split, base.input_side, base.fail_fast);
    const MemoryBatchSource train_src = preload_source(train_files);
    const MemoryBatchSource eval_src = preload_source(eval_files);

    const std::filesystem::path out_dir =
        a.out.empty() ? default_run_root() / (base.run_name + "_ablation_" + base.run_id())
                      : std::filesystem::path(a.out);
    std::filesystem::create_directories(out_dir);

    const std::vector<AblationRow> rows =
        run_ablation(base, train_src, eval_src, degradations, out_dir);
    const std::string table = ablation_table(rows);
    std::cout << table;
    write_text(out_dir / "ablation.txt", table);
    write_text(out_dir / "ablation.csv", ablation_csv(rows));
    std::cout << "artifacts in " << out_dir.string() << "\n";
    return 0;
}

// ----------------------------------------------------------- inspect-shuffle

struct InspectArgs {
    std::string image, out = ".";
    std::uint64_t seed = 0;
    std::size_t side = 0; // 0 keeps the native size
    std::size_t s_intra = 16, s_inter = 32;
    double q_lo = 0.4, q_hi = 0.6, p_inter = 1.0;
};

int cmd_inspect(const InspectArgs& a) {
    ImageTensor img = load_image(a.image);
    if (a.side) img = resize_bilinear(img, a.side, a.side);

    ShuffleConfig sc;
    sc.s_intra = a.s_intra;
    sc.s_inter = a.s_inter;
    sc.q_lo = a.q_lo;
    sc.q_hi = a.q_hi;
    sc.p_inter = a.p_inter;
    try {
        sc.validate_for(img.dim(0), img.dim(1));
    } catch (const validation_error& e) {
        throw config_error(e.what());
    }

    RngStream stream = RngStream::derive(a.seed, "inspect");
    const ShuffleOutcome outcome = shuffle_image(img, sc, stream);
    const ImageTensor restored = unshuffle_image(outcome);

    std::filesystem::create_directories(a.out);
    const std::string stem = std::filesystem::path(a.image).stem().string();
    const std::filesystem::path dir(a.out);
    save_png(outcome.image, dir / (stem + "_shuffled.png"));
    save_png(restored, dir / (stem + "_restored.png"));

    nlohmann::json mark_rows = nlohmann::json::array();
    for (std::size_t i = 0; i < outcome.mark.m; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < outcome.mark.n; ++j) row.push_back(int(outcome.mark.at(i, j)));
        mark_rows.push_back(std::move(row));
    }
    nlohmann::json src_rows = nlohmann::json::array();
    for (std::size_t i = 0; i < outcome.coords.m; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < outcome.coords.n; ++j) {
            const GridPos& p = outcome.coords.at(i, j);
            row.push_back({p.row, p.col});
        }
        src_rows.push_back(std::move(row));
    }
    const nlohmann::json j{
        {"seed", a.seed},
        {"shuffle",
         {{"s_intra", sc.s_intra},
          {"s_inter", sc.s_inter},
          {"q_lo", sc.q_lo},
          {"q_hi", sc.q_hi},
          {"p_inter", sc.p_inter}}},
        {"inter_applied", outcome.inter_applied},
        {"mark", {{"m", outcome.mark.m}, {"n", outcome.mark.n},
                  {"mean", outcome.mark.mean()}, {"rows", mark_rows}}},
        {"coords", {{"m", outcome.coords.m}, {"n", outcome.coords.n},
                    {"source", src_rows}}},
    };
    write_text(dir / (stem + "_shuffle.json"), j.dump(2) + "\n");

    std::cout << std::fixed << std::setprecision(4) << "mark mean " << outcome.mark.mean()
              << "  inter_applied " << (outcome.inter_applied ? "true" : "false") << "\n"
              << "wrote " << (dir / (stem + "_shuffled.png")).string() << ", "
              << (dir / (stem + "_restored.png")).string() << ", "
              << (dir / (stem + "_shuffle.json")).string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"block shuffling learning toolkit"};
    app.require_subcommand(1);

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth-data", "generate a spliced-forgery corpus");
    synth->add_option("--out", sa.out, "output directory")->required();
    synth->add_option("--side", sa.side, "image side in pixels");
    synth->add_option("--train", sa.train, "train images per class");
    synth->add_option("--val", sa.val, "val images per class");
    synth->add_option("--test", sa.test, "test images per class");
    synth->add_option("--seed", sa.seed, "corpus seed");

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "train a model");
    train->add_option("--config", ta.config, "run config JSON (defaults when omitted)");
    train->add_option("--set", ta.sets, "dotted-path override, e.g. weights.alpha=0");
    train->add_option("--data", ta.data, "manifest.csv")->required();
    train->add_option("--out", ta.out, "run directory (default $BSL_RUN_DIR/<name>_<id>)");
    train->add_option("--train-split", ta.train_split, "split used for training");
    train->add_flag("--no-preload", ta.no_preload, "decode images per batch instead of upfront");

    EvalArgs ea;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", ea.checkpoint, "checkpoint archive")->required();
    eval->add_option("--data", ea.data, "manifest.csv")->required();
    eval->add_option("--split", ea.split, "split to score (default: config eval_split)");
    eval->add_option("--degrade", ea.degrade, "degradation spec, e.g. blur:7 or resize:112");
    eval->add_option("--batch", ea.batch, "evaluation batch size");
    eval->add_flag("--restoration", ea.restoration, "also report restoration accuracy");
    eval->add_option("--restoration-seed", ea.rest_seed, "seed for restoration shuffles");
    eval->add_option("--out", ea.out, "directory for eval.json / eval.csv");

    SweepArgs wa;
    CLI::App* sweep = app.add_subcommand("sweep", "robustness sweep over degradation ladders");
    sweep->add_option("--checkpoint", wa.checkpoint, "checkpoint archive")->required();
    sweep->add_option("--data", wa.data, "manifest.csv")->required();
    sweep->add_option("--split", wa.split, "split to score (default: config eval_split)");
    sweep->add_option("--resize", wa.resize, "resize ladder sides");
    sweep->add_option("--blur", wa.blur, "blur ladder kernel sizes");
    sweep->add_option("--batch", wa.batch, "evaluation batch size");
    sweep->add_option("--out", wa.out, "directory for sweep.json / sweep.csv");

    AblateArgs aa;
    CLI::App* ablate = app.add_subcommand("ablate", "train and compare the five module rows");
    ablate->add_option("--config", aa.config, "base (full-method) run config JSON");
    ablate->add_option("--set", aa.sets, "dotted-path override on the base config");
    ablate->add_option("--data", aa.data, "manifest.csv")->required();
    ablate->add_option("--train-split", aa.train_split, "split used for training");
    ablate->add_option("--degrade", aa.degrade, "degradation specs (default blur:5 resize:24)");
    ablate->add_option("--out", aa.out, "output directory");

    InspectArgs ia;
    CLI::App* inspect = app.add_subcommand("inspect-shuffle", "dump shuffle panels for an image");
    inspect->add_option("image", ia.image, "input image")->required();
    inspect->add_option("--seed", ia.seed, "shuffle seed");
    inspect->add_option("--out", ia.out, "output directory");
    inspect->add_option("--side", ia.side, "resize input to side x side first (0 keeps size)");
    inspect->add_option("--s-intra", ia.s_intra, "fine block side");
    inspect->add_option("--s-inter", ia.s_inter, "coarse block side");
    inspect->add_option("--q-lo", ia.q_lo, "intra ratio lower bound");
    inspect->add_option("--q-hi", ia.q_hi, "intra ratio upper bound");
    inspect->add_option("--p-inter", ia.p_inter, "coarse shuffle probability");

    try {
        app.parse(argc, argv);
        if (*synth) return cmd_synth(sa);
        if (*train) return cmd_train(ta);
        if (*eval) return cmd_eval(ea);
        if (*sweep) return cmd_sweep(wa);
        if (*ablate) return cmd_ablate(aa);
        if (*inspect) return cmd_inspect(ia);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const bsl::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
