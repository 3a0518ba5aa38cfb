#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "bsl/data/synth.hpp"
#include "bsl/train/trainer.hpp"

using namespace bsl;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / ("bsl_train_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/** Small labelled in-memory set: portraits as reals, splices as fakes. */
MemoryBatchSource toy_source(std::size_t n_per_class, std::size_t side, std::uint64_t seed) {
    std::vector<ImageTensor> images;
    std::vector<int> labels;
    const std::vector<ImageTensor> pool = synth_real_pool(n_per_class, side, seed);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        images.push_back(pool[i]);
        labels.push_back(0);
    }
    for (std::size_t i = 0; i < n_per_class; ++i) {
        RngStream s = RngStream::derive(seed, "synth/fake", i);
        images.push_back(synth_fake_image(pool, s).image);
        labels.push_back(1);
    }
    return MemoryBatchSource(std::move(images), std::move(labels));
}

RunConfig toy_config() {
    RunConfig cfg;
    cfg.seed = 5;
    cfg.backbone = "tiny";
    cfg.input_side = 16;
    cfg.shuffle.s_intra = 4;
    cfg.shuffle.s_inter = 8;
    cfg.batch_size = 4;
    cfg.max_steps = 10;
    cfg.optimizer.lr = 1e-3;
    return cfg;
}

std::vector<double> param_values(const std::vector<nn::Param>& params) {
    std::vector<double> out;
    for (const nn::Param& p : params)
        out.insert(out.end(), p.value->data(), p.value->data() + p.value->numel());
    return out;
}

} // namespace

TEST_CASE("run config round trips through json", "[train][config]") {
    RunConfig cfg = toy_config();
    cfg.weights.alpha = 0.5;
    cfg.heads.tap_u = "s2";
    cfg.eval_every = 7;
    const RunConfig back = RunConfig::from_json(cfg.to_json());
    REQUIRE(back.to_json() == cfg.to_json());
    REQUIRE(back.run_id() == cfg.run_id());
    REQUIRE(back.shuffle.s_intra == 4);
    REQUIRE(back.weights.alpha == 0.5);
    REQUIRE(back.heads.tap_u == "s2");

    RunConfig other = cfg;
    other.seed = 6;
    REQUIRE(other.run_id() != cfg.run_id());
}

TEST_CASE("run config rejects unknown keys and bad values", "[train][config]") {
    nlohmann::json j = RunConfig{}.to_json();
    SECTION("top level") {
        j["batchsize"] = 4;
        REQUIRE_THROWS_AS(RunConfig::from_json(j), config_error);
    }
    SECTION("nested") {
        j["optimizer"]["momentum"] = 0.9;
        REQUIRE_THROWS_AS(RunConfig::from_json(j), config_error);
    }
    SECTION("wrong type") {
        j["batch_size"] = "many";
        REQUIRE_THROWS_AS(RunConfig::from_json(j), config_error);
    }
    SECTION("bad backbone") {
        j["backbone"] = "resnet101";
        REQUIRE_THROWS_AS(RunConfig::from_json(j), config_error);
    }
    SECTION("invalid shuffle geometry surfaces as config_error") {
        j["shuffle"]["s_intra"] = 5; // s_inter 32 not a multiple
        REQUIRE_THROWS_AS(RunConfig::from_json(j), config_error);
    }
    SECTION("zero lr") {
        j["optimizer"]["lr"] = 0.0;
        REQUIRE_THROWS_AS(RunConfig::from_json(j), config_error);
    }
}

TEST_CASE("dotted overrides set nested values", "[train][config]") {
    nlohmann::json j = RunConfig{}.to_json();
    apply_override(j, "optimizer.lr=0.001");
    apply_override(j, "backbone=tiny");
    apply_override(j, "heads.attach=false");
    apply_override(j, "shuffle.p_inter=0.25");
    apply_override(j, "input_side=16");
    apply_override(j, "shuffle.s_intra=4");
    apply_override(j, "shuffle.s_inter=8");
    apply_override(j, "run_name=abl_row1");
    const RunConfig cfg = RunConfig::from_json(j);
    REQUIRE(cfg.optimizer.lr == 0.001);
    REQUIRE(cfg.backbone == "tiny");
    REQUIRE_FALSE(cfg.heads.attach);
    REQUIRE(cfg.shuffle.p_inter == 0.25);
    REQUIRE(cfg.run_name == "abl_row1");

    REQUIRE_THROWS_AS(apply_override(j, "no_equals"), config_error);
    REQUIRE_THROWS_AS(apply_override(j, "=5"), config_error);
    nlohmann::json j2 = RunConfig{}.to_json();
    apply_override(j2, "optimizr.lr=1"); // typo becomes an unknown key
    REQUIRE_THROWS_AS(RunConfig::from_json(j2), config_error);
}

TEST_CASE("checkpoint archives round trip bitwise", "[train][checkpoint]") {
    const auto dir = temp_dir("ckpt");
    Checkpoint c;
    c.run_config = RunConfig{}.to_json();
    c.step = 1234;
    c.best_metric = 0.875;
    RngStream s(derive_key(3, "ckpt"));
    DTensor a({3, 4});
    for (std::size_t i = 0; i < a.numel(); ++i) a[i] = s.normal();
    DTensor b({2, 2, 2, 2});
    for (std::size_t i = 0; i < b.numel(); ++i) b[i] = s.uniform(-1e300, 1e300);
    c.add("layer.weight", a);
    c.add("layer.bias", b);
    c.add_scalar("opt.theta.steps", 17.0);
    c.save(dir / "x.ckpt");

    const Checkpoint back = Checkpoint::load(dir / "x.ckpt");
    REQUIRE(back.step == 1234);
    REQUIRE(back.best_metric == 0.875);
    REQUIRE(back.run_config == c.run_config);
    REQUIRE(back.tensors.size() == 3);
    REQUIRE(back.require("layer.weight").shape == std::vector<std::size_t>{3, 4});
    for (std::size_t i = 0; i < a.numel(); ++i)
        REQUIRE(back.require("layer.weight").data[i] == a[i]);
    for (std::size_t i = 0; i < b.numel(); ++i)
        REQUIRE(back.require("layer.bias").data[i] == b[i]);
    REQUIRE(back.find("nope") == nullptr);
    REQUIRE_THROWS_AS(back.require("nope"), config_error);

    SECTION("NaN best metric becomes null and back") {
        Checkpoint fresh;
        fresh.run_config = nlohmann::json::object();
        fresh.save(dir / "fresh.ckpt");
        REQUIRE(std::isnan(Checkpoint::load(dir / "fresh.ckpt").best_metric));
    }
    SECTION("garbage file rejected") {
        std::ofstream(dir / "bad.ckpt") << "not an archive";
        REQUIRE_THROWS_AS(Checkpoint::load(dir / "bad.ckpt"), validation_error);
        REQUIRE_THROWS_AS(Checkpoint::load(dir / "missing.ckpt"), validation_error);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("two identical runs match bit for bit", "[train]") {
    const MemoryBatchSource src = toy_source(6, 16, 31);
    const RunConfig cfg = toy_config();

    Trainer a(cfg, src, nullptr);
    Trainer b(cfg, src, nullptr);
    for (int i = 0; i < 10; ++i) {
        const LossBundle la = a.train_step();
        const LossBundle lb = b.train_step();
        REQUIRE(la.l_cls == lb.l_cls);
        REQUIRE(la.l_adv == lb.l_adv);
        REQUIRE(la.l_loc == lb.l_loc);
        REQUIRE(la.l_total == lb.l_total);
    }
    REQUIRE(param_values(a.model().theta()) == param_values(b.model().theta()));
    REQUIRE(param_values(a.model().psi()) == param_values(b.model().psi()));
    REQUIRE(param_values(a.model().phi()) == param_values(b.model().phi()));
}

TEST_CASE("resume reproduces the uninterrupted run exactly", "[train]") {
    const auto dir = temp_dir("resume");
    const MemoryBatchSource src = toy_source(6, 16, 32);
    RunConfig cfg = toy_config();
    cfg.max_steps = 10;

    Trainer straight(cfg, src, nullptr);
    for (int i = 0; i < 10; ++i) straight.train_step();

    Trainer first_half(cfg, src, nullptr);
    for (int i = 0; i < 5; ++i) first_half.train_step();
    first_half.save_checkpoint(dir / "mid.ckpt");

    auto resumed = Trainer::resume(dir / "mid.ckpt", src, nullptr);
    REQUIRE(resumed->step() == 5);
    for (int i = 0; i < 5; ++i) resumed->train_step();

    REQUIRE(param_values(resumed->model().theta()) == param_values(straight.model().theta()));
    REQUIRE(param_values(resumed->model().psi()) == param_values(straight.model().psi()));
    REQUIRE(param_values(resumed->model().phi()) == param_values(straight.model().phi()));
    // Steps 6..10 of the resumed run reproduce the straight run's losses.
    for (int i = 0; i < 5; ++i) {
        REQUIRE(resumed->history()[i].step == straight.history()[5 + i].step);
        REQUIRE(resumed->history()[i].losses.l_total == straight.history()[5 + i].losses.l_total);
    }

    SECTION("restore rejects a mismatched config") {
        RunConfig other = cfg;
        other.seed = 999;
        Trainer t(other, src, nullptr);
        REQUIRE_THROWS_AS(t.restore(Checkpoint::load(dir / "mid.ckpt")), config_error);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("zero-weight heads stay frozen", "[train]") {
    const MemoryBatchSource src = toy_source(6, 16, 33);

    SECTION("alpha 0 freezes psi") {
        RunConfig cfg = toy_config();
        cfg.weights.alpha = 0.0;
        Trainer t(cfg, src, nullptr);
        const std::vector<double> psi0 = param_values(t.model().psi());
        const std::vector<double> phi0 = param_values(t.model().phi());
        for (int i = 0; i < 5; ++i) t.train_step();
        REQUIRE(param_values(t.model().psi()) == psi0);
        REQUIRE(param_values(t.model().phi()) != phi0);
    }
    SECTION("beta 0 freezes phi") {
        RunConfig cfg = toy_config();
        cfg.weights.beta = 0.0;
        Trainer t(cfg, src, nullptr);
        const std::vector<double> psi0 = param_values(t.model().psi());
        const std::vector<double> phi0 = param_values(t.model().phi());
        for (int i = 0; i < 5; ++i) t.train_step();
        REQUIRE(param_values(t.model().phi()) == phi0);
        REQUIRE(param_values(t.model().psi()) != psi0);
    }
}

TEST_CASE("zero-weight heads leave the trunk bitwise untouched", "[train]") {
    // Attached-but-frozen heads with inactive shuffling must reproduce a
    // plain backbone run exactly: same classification losses, same trunk.
    const MemoryBatchSource src = toy_source(6, 16, 34);
    RunConfig with_heads = toy_config();
    with_heads.weights.alpha = 0.0;
    with_heads.weights.beta = 0.0;
    with_heads.shuffle.q_lo = 0.0;
    with_heads.shuffle.q_hi = 0.0;
    with_heads.shuffle.p_inter = 0.0;
    RunConfig plain = with_heads;
    plain.heads.attach = false;

    Trainer a(with_heads, src, nullptr);
    Trainer b(plain, src, nullptr);
    for (int i = 0; i < 5; ++i) {
        const LossBundle la = a.train_step();
        const LossBundle lb = b.train_step();
        REQUIRE(la.l_cls == lb.l_cls);
        REQUIRE(lb.l_adv == 0.0);
        REQUIRE(lb.l_loc == 0.0);
    }
    REQUIRE(param_values(a.model().theta()) == param_values(b.model().theta()));
}

TEST_CASE("evaluation cadence and run artifacts", "[train]") {
    const auto dir = temp_dir("artifacts");
    const MemoryBatchSource src = toy_source(6, 16, 35);
    RunConfig cfg = toy_config();
    cfg.max_steps = 20;
    cfg.eval_every = 5;

    Trainer t(cfg, src, &src, dir / "run");
    t.run();

    REQUIRE(t.eval_history().size() == 5); // steps 5,10,15,20 periodic + final
    for (int i = 0; i < 4; ++i) {
        REQUIRE(t.eval_history()[i].tag == "periodic");
        REQUIRE(t.eval_history()[i].step == static_cast<std::uint64_t>(5 * (i + 1)));
    }
    REQUIRE(t.eval_history()[4].tag == "final");
    REQUIRE(t.eval_history()[4].step == 20);
    REQUIRE_FALSE(std::isnan(t.best_auc()));

    REQUIRE(std::filesystem::exists(dir / "run" / "effective_config.json"));
    REQUIRE(std::filesystem::exists(dir / "run" / "last.ckpt"));
    REQUIRE(std::filesystem::exists(dir / "run" / "best.ckpt"));
    REQUIRE(RunConfig::load(dir / "run" / "effective_config.json").to_json() == cfg.to_json());

    std::ifstream metrics(dir / "run" / "metrics.jsonl");
    std::string line;
    std::size_t metric_lines = 0, eval_lines = 0;
    while (std::getline(metrics, line)) {
        const nlohmann::json j = nlohmann::json::parse(line);
        REQUIRE(j.at("step").get<int>() == static_cast<int>(++metric_lines));
        REQUIRE(j.contains("l_total"));
        REQUIRE(j.contains("lr"));
    }
    REQUIRE(metric_lines == 20);
    std::ifstream evals(dir / "run" / "eval.jsonl");
    while (std::getline(evals, line)) {
        const nlohmann::json j = nlohmann::json::parse(line);
        REQUIRE(j.at("split").get<std::string>() == "test");
        ++eval_lines;
    }
    REQUIRE(eval_lines == 5);

    // The best checkpoint reloads into a model that reproduces its AUC.
    auto best = Trainer::resume(dir / "run" / "best.ckpt", src, &src);
    const MetricReport r = evaluate(best->model(), src);
    REQUIRE(r.auc == t.best_auc());
    std::filesystem::remove_all(dir);
}

TEST_CASE("trainer rejects impossible setups", "[train]") {
    const MemoryBatchSource src = toy_source(2, 16, 36); // 4 samples
    RunConfig cfg = toy_config();
    SECTION("batch larger than split") {
        cfg.batch_size = 8;
        REQUIRE_THROWS_AS(Trainer(cfg, src, nullptr), config_error);
    }
    SECTION("eval cadence without eval source") {
        cfg.eval_every = 5;
        REQUIRE_THROWS_AS(Trainer(cfg, src, nullptr), config_error);
    }
}

TEST_CASE("non-finite loss raises divergence_error with step context", "[train]") {
    const MemoryBatchSource src = toy_source(6, 16, 37);
    Trainer t(toy_config(), src, nullptr);
    t.train_step();
    (*t.model().theta()[0].value)[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        t.train_step();
        FAIL("expected divergence_error");
    } catch (const divergence_error& e) {
        REQUIRE(std::string(e.what()).find("step 2") != std::string::npos);
    }
}

TEST_CASE("preload matches the backing source", "[train]") {
    const auto dir = temp_dir("preload");
    SynthPlan plan;
    plan.side = 32;
    plan.train = 3;
    synth_dataset(plan, 8, dir);
    const Manifest m = Manifest::load(dir / "manifest.csv");
    FileBatchSource files(m, "train", 32);
    const MemoryBatchSource mem = preload_source(files);
    REQUIRE(mem.size() == files.size());
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const Sample a = mem.get(i), b = files.get(i);
        REQUIRE(a.label == b.label);
        REQUIRE(a.image.same_shape(b.image));
        for (std::size_t p = 0; p < a.image.numel(); ++p) REQUIRE(a.image[p] == b.image[p]);
    }
    std::filesystem::remove_all(dir);
}
