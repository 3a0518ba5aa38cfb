#pragma once

#include <iomanip>
#include <sstream>

#include "../train/trainer.hpp"
#include "evaluate.hpp"

namespace bsl {

// =====================================================================
// Ablation grid: five configurations that add one module at a time.
//
//   1 baseline      no shuffling, no heads
//   2 +intra        fine-grid pixel shuffling as augmentation
//   3 +adversarial  adds the anti-noise head (alpha on)
//   4 +inter        adds coarse-grid tile shuffling
//   5 +restore      adds the position head (beta on), the full method
//
// Every row trains from the same seed. Row 1 is exactly the plain
// backbone: the trunk trains bit-identically to a run that never
// constructs heads or shuffle supervision.
// =====================================================================

struct AblationRow {
    int id = 0;
    std::string name;
    RunConfig config;
    MetricReport clean;
    std::vector<MetricReport> degraded; ///< one per requested degradation
    double rest_frac = std::numeric_limits<double>::quiet_NaN();
    std::vector<StepRecord> trace;
};

/** Derive the five row configs from a full-method base config. */
inline std::vector<std::pair<int, RunConfig>> ablation_configs(const RunConfig& base) {
    if (!(base.weights.alpha > 0.0) || !(base.weights.beta > 0.0) || !base.heads.attach ||
        !(base.shuffle.p_inter > 0.0) || !(base.shuffle.q_hi > 0.0))
        throw config_error("ablation: base config must enable every module");
    std::vector<std::pair<int, RunConfig>> rows;

    RunConfig r1 = base; // baseline: plain classifier
    r1.run_name = base.run_name + "_row1";
    r1.heads.attach = false;
    r1.shuffle.q_lo = r1.shuffle.q_hi = 0.0;
    r1.shuffle.p_inter = 0.0;
    r1.weights.alpha = r1.weights.beta = 0.0;
    rows.emplace_back(1, r1);

    RunConfig r2 = r1; // +intra: shuffling as pure augmentation
    r2.run_name = base.run_name + "_row2";
    r2.heads.attach = true;
    r2.shuffle.q_lo = base.shuffle.q_lo;
    r2.shuffle.q_hi = base.shuffle.q_hi;
    rows.emplace_back(2, r2);

    RunConfig r3 = r2; // +adversarial
    r3.run_name = base.run_name + "_row3";
    r3.weights.alpha = base.weights.alpha;
    rows.emplace_back(3, r3);

    RunConfig r4 = r3; // +inter
    r4.run_name = base.run_name + "_row4";
    r4.shuffle.p_inter = base.shuffle.p_inter;
    rows.emplace_back(4, r4);

    RunConfig r5 = base; // full method
    r5.run_name = base.run_name + "_row5";
    rows.emplace_back(5, r5);
    return rows;
}

inline const char* ablation_row_name(int id) {
    switch (id) {
        case 1: return "baseline";
        case 2: return "+intra";
        case 3: return "+adversarial";
        case 4: return "+inter";
        case 5: return "+restore";
        default: throw validation_error("ablation: bad row id");
    }
}

/** Train and evaluate all five rows. Restoration accuracy is reported for
    rows that train the restoration head. Row run directories are created
    under out_dir when it is non-empty. */
inline std::vector<AblationRow> run_ablation(const RunConfig& base, const BatchSource& train_src,
                                             const BatchSource& eval_src,
                                             const std::vector<Degradation>& degradations,
                                             const std::filesystem::path& out_dir = {}) {
    std::vector<AblationRow> rows;
    for (const auto& [id, cfg] : ablation_configs(base)) {
        Trainer trainer(cfg, train_src, &eval_src,
                        out_dir.empty() ? std::filesystem::path{} : out_dir / cfg.run_name);
        trainer.run();

        AblationRow row;
        row.id = id;
        row.name = ablation_row_name(id);
        row.config = cfg;
        row.trace = trainer.history();
        std::vector<MetricReport> reports =
            robustness_sweep(trainer.model(), eval_src, degradations, cfg.batch_size);
        row.clean = reports.front();
        row.degraded.assign(reports.begin() + 1, reports.end());
        if (cfg.heads.attach && cfg.weights.beta > 0.0)
            row.rest_frac =
                restoration_histogram(trainer.model(), eval_src, cfg.seed, cfg.batch_size)
                    .frac_within_1;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(3) << "id" << std::setw(14) << "row" << std::setw(7) << "intra"
       << std::setw(5) << "adv" << std::setw(7) << "inter" << std::setw(9) << "restore"
       << std::setw(11) << "clean_acc" << std::setw(11) << "clean_auc";
    if (!rows.empty())
        for (const MetricReport& d : rows.front().degraded)
            os << std::setw(11) << (d.tag + "_auc");
    os << std::setw(8) << "rest<=1" << "\n";
    for (const AblationRow& r : rows) {
        const auto mark = [](bool on) { return on ? "x" : "-"; };
        os << std::left << std::setw(3) << r.id << std::setw(14) << r.name << std::setw(7)
           << mark(r.config.shuffle.q_hi > 0.0) << std::setw(5)
           << mark(r.config.weights.alpha > 0.0) << std::setw(7)
           << mark(r.config.shuffle.p_inter > 0.0) << std::setw(9)
           << mark(r.config.weights.beta > 0.0);
        os << std::fixed << std::setprecision(4) << std::setw(11) << r.clean.acc << std::setw(11)
           << r.clean.auc;
        for (const MetricReport& d : r.degraded) os << std::setw(11) << d.auc;
        if (std::isnan(r.rest_frac)) os << std::setw(8) << "-";
        else os << std::setw(8) << r.rest_frac;
        os << "\n";
    }
    return os.str();
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "id,row,intra,adv,inter,restore,clean_acc,clean_auc";
    if (!rows.empty())
        for (const MetricReport& d : rows.front().degraded)
            os << ',' << d.tag << "_acc," << d.tag << "_auc";
    os << ",rest_within_1\n";
    os << std::setprecision(17);
    for (const AblationRow& r : rows) {
        os << r.id << ',' << r.name << ',' << (r.config.shuffle.q_hi > 0.0 ? 1 : 0) << ','
           << (r.config.weights.alpha > 0.0 ? 1 : 0) << ','
           << (r.config.shuffle.p_inter > 0.0 ? 1 : 0) << ','
           << (r.config.weights.beta > 0.0 ? 1 : 0) << ',' << r.clean.acc << ',' << r.clean.auc;
        for (const MetricReport& d : r.degraded) os << ',' << d.acc << ',' << d.auc;
        if (std::isnan(r.rest_frac)) os << ",";
        else os << ',' << r.rest_frac;
        os << "\n";
    }
    return os.str();
}

} // namespace bsl
