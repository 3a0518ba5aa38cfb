#pragma once

#include <fstream>

#include <json.hpp>

#include "../core/rng.hpp"
#include "../loss/objectives.hpp"
#include "../nn/model.hpp"

namespace bsl {

// =====================================================================
// Run configuration. The JSON schema is strict: unknown keys anywhere
// raise config_error, so typos cannot silently fall back to defaults.
// Values can be overridden from the command line with dotted paths,
// e.g. "optimizer.lr=0.001" or "shuffle.p_inter=0".
// =====================================================================

struct RunConfig {
    std::uint64_t seed = 0;
    std::string run_name = "run";
    std::string backbone = "small";
    std::size_t input_side = 224;

    struct Heads {
        bool attach = true;
        std::string tap_u; ///< adversarial tap; empty selects by stride
        std::string tap_v; ///< restoration tap; empty selects by stride
    } heads;

    ShuffleConfig shuffle; ///< seed field is ignored; streams derive from `seed`
    LossWeights weights;
    bool gradient_reversal = false;

    struct Opt {
        std::string kind = "adam";
        double lr = 1e-4;
        double weight_decay = 1e-6;
    } optimizer;

    std::size_t batch_size = 64;
    std::size_t max_steps = 1000;
    std::size_t eval_every = 0; ///< 0 disables periodic evaluation
    std::string eval_split = "test";
    bool hflip = true;
    bool fail_fast = true;

    void validate() const {
        shuffle.validate();
        weights.validate();
        if (input_side == 0) throw config_error("run config: input_side must be positive");
        if (batch_size == 0) throw config_error("run config: batch_size must be positive");
        if (max_steps == 0) throw config_error("run config: max_steps must be positive");
        if (optimizer.kind != "adam" && optimizer.kind != "sgd")
            throw config_error("run config: unknown optimizer kind '" + optimizer.kind + "'");
        if (!(optimizer.lr > 0.0)) throw config_error("run config: lr must be positive");
        if (optimizer.weight_decay < 0.0)
            throw config_error("run config: weight_decay must be non-negative");
        const std::vector<std::string> known = nn::backbone_names();
        if (std::find(known.begin(), known.end(), backbone) == known.end())
            throw config_error("run config: unknown backbone '" + backbone + "'");
        if (eval_split.empty()) throw config_error("run config: eval_split must be non-empty");
    }

    nn::ModelConfig model_config() const {
        nn::ModelConfig mc;
        mc.backbone = backbone;
        mc.input_side = input_side;
        mc.in_channels = 3;
        mc.shuffle = shuffle;
        mc.attach_heads = heads.attach;
        mc.tap_u = heads.tap_u;
        mc.tap_v = heads.tap_v;
        return mc;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"seed", seed},
            {"run_name", run_name},
            {"backbone", backbone},
            {"input_side", input_side},
            {"heads", {{"attach", heads.attach}, {"tap_u", heads.tap_u}, {"tap_v", heads.tap_v}}},
            {"shuffle",
             {{"s_intra", shuffle.s_intra},
              {"s_inter", shuffle.s_inter},
              {"q_lo", shuffle.q_lo},
              {"q_hi", shuffle.q_hi},
              {"p_inter", shuffle.p_inter}}},
            {"weights", {{"alpha", weights.alpha}, {"beta", weights.beta}}},
            {"adversarial", {{"gradient_reversal", gradient_reversal}}},
            {"optimizer",
             {{"kind", optimizer.kind},
              {"lr", optimizer.lr},
              {"weight_decay", optimizer.weight_decay}}},
            {"batch_size", batch_size},
            {"max_steps", max_steps},
            {"eval_every", eval_every},
            {"eval_split", eval_split},
            {"augment", {{"hflip", hflip}}},
            {"data", {{"fail_fast", fail_fast}}},
        };
    }

    /** Stable hex id of the effective configuration. */
    std::string run_id() const {
        const std::uint64_t h = fnv1a64(to_json().dump());
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const {
        std::ofstream out(file);
        if (!out) throw config_error("run config: cannot write '" + file.string() + "'");
        out << to_json().dump(2) << "\n";
    }
};

namespace config_detail {

inline void expect_keys(const nlohmann::json& j, const std::string& ctx,
                        std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw config_error(ctx + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw config_error(ctx + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, const T& fallback,
         const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(ctx + ": bad value for '" + key + "': " + e.what());
    }
}

} // namespace config_detail

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    using config_detail::expect_keys;
    using config_detail::get_or;
    expect_keys(j, "run config",
                {"seed", "run_name", "backbone", "input_side", "heads", "shuffle", "weights",
                 "adversarial", "optimizer", "batch_size", "max_steps", "eval_every", "eval_split",
                 "augment", "data"});
    RunConfig c;
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "run config");
    c.run_name = get_or<std::string>(j, "run_name", c.run_name, "run config");
    c.backbone = get_or<std::string>(j, "backbone", c.backbone, "run config");
    c.input_side = get_or<std::size_t>(j, "input_side", c.input_side, "run config");
    if (j.contains("heads")) {
        const nlohmann::json& h = j.at("heads");
        expect_keys(h, "heads", {"attach", "tap_u", "tap_v"});
        c.heads.attach = get_or<bool>(h, "attach", c.heads.attach, "heads");
        c.heads.tap_u = get_or<std::string>(h, "tap_u", c.heads.tap_u, "heads");
        c.heads.tap_v = get_or<std::string>(h, "tap_v", c.heads.tap_v, "heads");
    }
    if (j.contains("shuffle")) {
        const nlohmann::json& s = j.at("shuffle");
        expect_keys(s, "shuffle", {"s_intra", "s_inter", "q_lo", "q_hi", "p_inter"});
        c.shuffle.s_intra = get_or<std::size_t>(s, "s_intra", c.shuffle.s_intra, "shuffle");
        c.shuffle.s_inter = get_or<std::size_t>(s, "s_inter", c.shuffle.s_inter, "shuffle");
        c.shuffle.q_lo = get_or<double>(s, "q_lo", c.shuffle.q_lo, "shuffle");
        c.shuffle.q_hi = get_or<double>(s, "q_hi", c.shuffle.q_hi, "shuffle");
        c.shuffle.p_inter = get_or<double>(s, "p_inter", c.shuffle.p_inter, "shuffle");
    }
    if (j.contains("weights")) {
        const nlohmann::json& w = j.at("weights");
        expect_keys(w, "weights", {"alpha", "beta"});
        c.weights.alpha = get_or<double>(w, "alpha", c.weights.alpha, "weights");
        c.weights.beta = get_or<double>(w, "beta", c.weights.beta, "weights");
    }
    if (j.contains("adversarial")) {
        const nlohmann::json& a = j.at("adversarial");
        expect_keys(a, "adversarial", {"gradient_reversal"});
        c.gradient_reversal = get_or<bool>(a, "gradient_reversal", c.gradient_reversal, "adversarial");
    }
    if (j.contains("optimizer")) {
        const nlohmann::json& o = j.at("optimizer");
        expect_keys(o, "optimizer", {"kind", "lr", "weight_decay"});
        c.optimizer.kind = get_or<std::string>(o, "kind", c.optimizer.kind, "optimizer");
        c.optimizer.lr = get_or<double>(o, "lr", c.optimizer.lr, "optimizer");
        c.optimizer.weight_decay =
            get_or<double>(o, "weight_decay", c.optimizer.weight_decay, "optimizer");
    }
    c.batch_size = get_or<std::size_t>(j, "batch_size", c.batch_size, "run config");
    c.max_steps = get_or<std::size_t>(j, "max_steps", c.max_steps, "run config");
    c.eval_every = get_or<std::size_t>(j, "eval_every", c.eval_every, "run config");
    c.eval_split = get_or<std::string>(j, "eval_split", c.eval_split, "run config");
    if (j.contains("augment")) {
        const nlohmann::json& a = j.at("augment");
        expect_keys(a, "augment", {"hflip"});
        c.hflip = get_or<bool>(a, "hflip", c.hflip, "augment");
    }
    if (j.contains("data")) {
        const nlohmann::json& d = j.at("data");
        expect_keys(d, "data", {"fail_fast"});
        c.fail_fast = get_or<bool>(d, "fail_fast", c.fail_fast, "data");
    }
    try {
        c.validate();
    } catch (const validation_error& e) {
        throw config_error(std::string("run config: ") + e.what());
    }
    return c;
}

inline RunConfig RunConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw config_error("run config: cannot open '" + file.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("run config: parse error in '" + file.string() + "': " + e.what());
    }
    return RunConfig::from_json(j);
}

/** Apply "dotted.path=value" onto a config JSON; value parses as a JSON
    scalar when possible and falls back to a string. */
inline void apply_override(nlohmann::json& j, const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        throw config_error("override: expected 'path=value', got '" + spec + "'");
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);

    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(value);
        if (parsed.is_object() || parsed.is_array())
            throw config_error("override: '" + path + "' must be a scalar");
    } catch (const nlohmann::json::exception&) {
        parsed = value; // bare strings like "small" stay strings
    }

    nlohmann::json* node = &j;
    std::size_t begin = 0;
    while (true) {
        const std::size_t dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot - begin);
        if (key.empty()) throw config_error("override: empty key in '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        begin = dot + 1;
    }
}

} // namespace bsl
