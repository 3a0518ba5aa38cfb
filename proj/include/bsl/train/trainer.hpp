#pragma once

#include <memory>

#include "../data/dataset.hpp"
#include "../eval/evaluate.hpp"
#include "../loss/objectives.hpp"
#include "../nn/model.hpp"
#include "../nn/optimizer.hpp"
#include "checkpoint.hpp"
#include "run_config.hpp"

namespace bsl {

// =====================================================================
// Training loop. Every random decision is drawn from a stream derived
// statelessly from (seed, purpose, epoch, index), so a run is a pure
// function of its config and data: two runs match bit for bit, and a
// resumed run continues exactly where the original would have gone.
//
// Parameter groups route as: the trunk and classifier (theta) receive
// gradient from every loss term, the adversarial head (psi) only from
// the weighted adversarial term, the restoration head (phi) only from
// the weighted restoration term. Zero-weight terms are skipped
// structurally: their heads get no backward pass and their optimizers
// are never created, so a disabled term cannot perturb anything.
// =====================================================================

struct StepRecord {
    std::uint64_t step = 0; ///< 1-based count of completed steps
    LossBundle losses;
};

struct EvalRecord {
    std::uint64_t step = 0;
    std::string tag; ///< "periodic" or "final"
    double acc = 0.0;
    double auc = 0.0;
};

class Trainer {
public:
    /** out_dir may be empty: no files are written then. eval_src may be null
        when no evaluation is requested. */
    Trainer(const RunConfig& cfg, const BatchSource& train_src, const BatchSource* eval_src,
            std::filesystem::path out_dir = {})
        : cfg_(cfg), train_src_(train_src), eval_src_(eval_src), out_dir_(std::move(out_dir)) {
        cfg_.validate();
        batches_per_epoch_ = train_src_.size() / cfg_.batch_size;
        if (batches_per_epoch_ == 0)
            throw config_error("trainer: train split (" + std::to_string(train_src_.size()) +
                               ") smaller than batch_size (" + std::to_string(cfg_.batch_size) +
                               ") under drop-last batching");
        if (cfg_.eval_every > 0 && !eval_src_)
            throw config_error("trainer: eval_every > 0 but no eval source");

        model_ = std::make_unique<nn::Model>(cfg_.model_config(), cfg_.seed);
        theta_opt_ = make_opt();
        theta_opt_->register_params(model_->theta());
        if (cfg_.heads.attach && cfg_.weights.alpha > 0.0) {
            psi_opt_ = make_opt();
            psi_opt_->register_params(model_->psi());
        }
        if (cfg_.heads.attach && cfg_.weights.beta > 0.0) {
            phi_opt_ = make_opt();
            phi_opt_->register_params(model_->phi());
        }

        if (!out_dir_.empty()) {
            std::filesystem::create_directories(out_dir_);
            cfg_.save(out_dir_ / "effective_config.json");
            metrics_out_.open(out_dir_ / "metrics.jsonl", std::ios::app);
            eval_out_.open(out_dir_ / "eval.jsonl", std::ios::app);
            if (!metrics_out_ || !eval_out_)
                throw validation_error("trainer: cannot open log files under '" +
                                       out_dir_.string() + "'");
        }
    }

    /** One optimizer step. Returns the losses of the processed batch. */
    LossBundle train_step() {
        const std::size_t B = cfg_.batch_size;
        const std::size_t epoch = step_ / batches_per_epoch_;
        const std::size_t pos = step_ % batches_per_epoch_;
        const std::vector<std::size_t> order =
            RngStream::derive(cfg_.seed, "order", epoch).permutation(train_src_.size());

        const std::size_t side = cfg_.input_side;
        DTensor batch({B, side, side, std::size_t{3}});
        std::vector<int> labels(B);
        std::vector<IntraMark> marks;
        std::vector<CoordTarget> coords;
        marks.reserve(B);
        coords.reserve(B);

        for (std::size_t k = 0; k < B; ++k) {
            const std::size_t i = order[pos * B + k];
            Sample sample = train_src_.get(i);
            if (sample.image.dim(0) != side || sample.image.dim(1) != side ||
                sample.image.dim(2) != 3)
                throw validation_error("trainer: sample " + std::to_string(i) + " has shape " +
                                       sample.image.shape_str() + ", expected [" +
                                       std::to_string(side) + "," + std::to_string(side) + ",3]");
            labels[k] = sample.label;
            ImageTensor img = std::move(sample.image);
            if (cfg_.hflip) {
                RngStream aug = RngStream::derive(cfg_.seed, "aug", epoch, i);
                if (aug.bernoulli(0.5)) img = flip_horizontal(img);
            }
            RngStream stream = RngStream::derive(cfg_.seed, "shuffle", epoch, i);
            ShuffleOutcome outcome = shuffle_image(img, cfg_.shuffle, stream);
            std::memcpy(batch.data() + k * outcome.image.numel(), outcome.image.data(),
                        outcome.image.numel() * sizeof(double));
            marks.push_back(std::move(outcome.mark));
            coords.push_back(std::move(outcome.coords));
        }

        const nn::Model::Forward f = model_->forward(batch, true);
        DTensor g_cls, g_adv, g_loc;
        LossBundle bundle;
        {
            double l_adv = 0.0, l_loc = 0.0;
            const double l_cls = loss_cls(f.logits, labels, &g_cls);
            if (cfg_.heads.attach) {
                l_adv = loss_adv(f.adv, pack_marks(marks), &g_adv);
                l_loc = loss_loc(f.coords, pack_coords(coords), &g_loc);
            }
            bundle = combine_losses(l_cls, l_adv, l_loc, cfg_.weights);
        }
        if (!std::isfinite(bundle.l_total))
            throw divergence_error("step " + std::to_string(step_ + 1) +
                                   ": non-finite loss (l_cls=" + std::to_string(bundle.l_cls) +
                                   ", l_adv=" + std::to_string(bundle.l_adv) +
                                   ", l_loc=" + std::to_string(bundle.l_loc) + ")");

        // Scale head gradients by their loss weights; a zero weight hands the
        // head no gradient at all (empty tensor skips its backward pass).
        DTensor g_adv_w, g_loc_w;
        if (cfg_.heads.attach && cfg_.weights.alpha > 0.0) {
            g_adv_w = g_adv;
            for (std::size_t i = 0; i < g_adv_w.numel(); ++i) g_adv_w[i] *= cfg_.weights.alpha;
        }
        if (cfg_.heads.attach && cfg_.weights.beta > 0.0) {
            g_loc_w = g_loc;
            for (std::size_t i = 0; i < g_loc_w.numel(); ++i) g_loc_w[i] *= cfg_.weights.beta;
        }

        model_->zero_grads();
        model_->backward(g_cls, g_adv_w, g_loc_w, cfg_.gradient_reversal);
        theta_opt_->step();
        if (psi_opt_) psi_opt_->step();
        if (phi_opt_) phi_opt_->step();

        ++step_;
        history_.push_back({step_, bundle});
        if (metrics_out_.is_open()) {
            metrics_out_ << nlohmann::json{{"step", step_},
                                           {"l_cls", bundle.l_cls},
                                           {"l_adv", bundle.l_adv},
                                           {"l_loc", bundle.l_loc},
                                           {"l_total", bundle.l_total},
                                           {"lr", cfg_.optimizer.lr}}
                                .dump()
                         << "\n"
                         << std::flush;
        }
        if (cfg_.eval_every > 0 && step_ % cfg_.eval_every == 0) run_eval("periodic");
        return bundle;
    }

    /** Train to max_steps, then take a final evaluation and checkpoint. */
    void run() {
        while (step_ < cfg_.max_steps) train_step();
        if (eval_src_) run_eval("final");
        if (!out_dir_.empty()) save_checkpoint(out_dir_ / "last.ckpt");
    }

    Checkpoint snapshot() const {
        Checkpoint c;
        c.run_config = cfg_.to_json();
        c.step = step_;
        c.best_metric = best_auc_;
        for (const nn::Param& p : model_->theta()) c.add(p.name, *p.value);
        for (const nn::Param& p : model_->psi()) c.add(p.name, *p.value);
        for (const nn::Param& p : model_->phi()) c.add(p.name, *p.value);
        snapshot_opt(c, "theta", theta_opt_.get(), model_->theta());
        snapshot_opt(c, "psi", psi_opt_.get(), model_->psi());
        snapshot_opt(c, "phi", phi_opt_.get(), model_->phi());
        return c;
    }

    void save_checkpoint(const std::filesystem::path& file) const { snapshot().save(file); }

    /** Restore parameters, optimizer state, and position from an archive made
        with an identical config. */
    void restore(const Checkpoint& c) {
        if (c.run_config != cfg_.to_json())
            throw config_error("restore: checkpoint config does not match this trainer");
        restore_params(c, model_->theta());
        restore_params(c, model_->psi());
        restore_params(c, model_->phi());
        restore_opt(c, "theta", theta_opt_.get(), model_->theta());
        restore_opt(c, "psi", psi_opt_.get(), model_->psi());
        restore_opt(c, "phi", phi_opt_.get(), model_->phi());
        step_ = c.step;
        best_auc_ = c.best_metric;
    }

    /** Rebuild a trainer from an archive: config comes from the archive. */
    static std::unique_ptr<Trainer> resume(const std::filesystem::path& checkpoint_file,
                                           const BatchSource& train_src,
                                           const BatchSource* eval_src,
                                           std::filesystem::path out_dir = {}) {
        const Checkpoint c = Checkpoint::load(checkpoint_file);
        auto trainer = std::make_unique<Trainer>(RunConfig::from_json(c.run_config), train_src,
                                                 eval_src, std::move(out_dir));
        trainer->restore(c);
        return trainer;
    }

    nn::Model& model() { return *model_; }
    const RunConfig& config() const { return cfg_; }
    std::uint64_t step() const { return step_; }
    double best_auc() const { return best_auc_; }
    const std::vector<StepRecord>& history() const { return history_; }
    const std::vector<EvalRecord>& eval_history() const { return eval_history_; }

private:
    std::unique_ptr<nn::Optimizer> make_opt() const {
        return std::make_unique<nn::Optimizer>(cfg_.optimizer.kind, cfg_.optimizer.lr,
                                               cfg_.optimizer.weight_decay);
    }

    void run_eval(const std::string& tag) {
        EvalOptions opt;
        opt.batch_size = cfg_.batch_size;
        const MetricReport r = evaluate(*model_, *eval_src_, opt);
        eval_history_.push_back({step_, tag, r.acc, r.auc});
        if (eval_out_.is_open()) {
            eval_out_ << nlohmann::json{{"step", step_},
                                        {"tag", tag},
                                        {"split", cfg_.eval_split},
                                        {"n", r.n},
                                        {"acc", r.acc},
                                        {"auc", r.auc}}
                             .dump()
                      << "\n"
                      << std::flush;
        }
        if (std::isnan(best_auc_) || r.auc > best_auc_) {
            best_auc_ = r.auc;
            if (!out_dir_.empty()) save_checkpoint(out_dir_ / "best.ckpt");
        }
        if (!out_dir_.empty()) save_checkpoint(out_dir_ / "last.ckpt");
    }

    static void snapshot_opt(Checkpoint& c, const std::string& group, const nn::Optimizer* opt,
                             const std::vector<nn::Param>& params) {
        if (!opt) return;
        c.add_scalar("opt." + group + ".steps", static_cast<double>(opt->steps()));
        for (std::size_t i = 0; i < params.size(); ++i) {
            c.add("opt." + group + ".m1." + params[i].name, opt->moment1(i));
            c.add("opt." + group + ".m2." + params[i].name, opt->moment2(i));
        }
    }

    static void restore_tensor(const TensorEntry& e, DTensor& into, const std::string& what) {
        if (e.shape != into.shape())
            throw config_error("restore: shape mismatch for " + what);
        std::memcpy(into.data(), e.data.data(), e.data.size() * sizeof(double));
    }

    void restore_params(const Checkpoint& c, const std::vector<nn::Param>& params) {
        for (const nn::Param& p : params)
            restore_tensor(c.require(p.name), *p.value, "parameter '" + p.name + "'");
    }

    static void restore_opt(const Checkpoint& c, const std::string& group, nn::Optimizer* opt,
                            const std::vector<nn::Param>& params) {
        if (!opt) return;
        opt->set_steps(static_cast<std::int64_t>(c.require("opt." + group + ".steps").data[0]));
        for (std::size_t i = 0; i < params.size(); ++i) {
            restore_tensor(c.require("opt." + group + ".m1." + params[i].name), opt->moment1(i),
                           "moment1 of '" + params[i].name + "'");
            restore_tensor(c.require("opt." + group + ".m2." + params[i].name), opt->moment2(i),
                           "moment2 of '" + params[i].name + "'");
        }
    }

    RunConfig cfg_;
    const BatchSource& train_src_;
    const BatchSource* eval_src_ = nullptr;
    std::filesystem::path out_dir_;
    std::ofstream metrics_out_, eval_out_;

    std::unique_ptr<nn::Model> model_;
    std::unique_ptr<nn::Optimizer> theta_opt_, psi_opt_, phi_opt_;
    std::size_t batches_per_epoch_ = 0;
    std::uint64_t step_ = 0;
    double best_auc_ = std::numeric_limits<double>::quiet_NaN();
    std::vector<StepRecord> history_;
    std::vector<EvalRecord> eval_history_;
};

/** A model rebuilt from an archive, for evaluation without a trainer. */
struct LoadedModel {
    RunConfig config;
    std::unique_ptr<nn::Model> model;
};

/** Rebuild the model parameters from an archive; optimizer state and the
    training position are left behind. */
inline LoadedModel load_model(const std::filesystem::path& checkpoint_file) {
    const Checkpoint c = Checkpoint::load(checkpoint_file);
    LoadedModel out;
    out.config = RunConfig::from_json(c.run_config);
    out.model = std::make_unique<nn::Model>(out.config.model_config(), out.config.seed);
    for (const std::vector<nn::Param>* group :
         {&out.model->theta(), &out.model->psi(), &out.model->phi()})
        for (const nn::Param& p : *group) {
            const TensorEntry& e = c.require(p.name);
            if (e.shape != p.value->shape())
                throw config_error("load_model: shape mismatch for parameter '" + p.name + "'");
            std::memcpy(p.value->data(), e.data.data(), e.data.size() * sizeof(double));
        }
    return out;
}

/** Decode a whole source into memory; useful when the same files will be
    visited for many epochs. */
inline MemoryBatchSource preload_source(const BatchSource& src) {
    std::vector<ImageTensor> images;
    std::vector<int> labels;
    images.reserve(src.size());
    labels.reserve(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        Sample s = src.get(i);
        images.push_back(std::move(s.image));
        labels.push_back(s.label);
    }
    return MemoryBatchSource(std::move(images), std::move(labels));
}

} // namespace bsl
