#include "hfgpi/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "hfgpi/checkpoint.hpp"
#include "hfgpi/config.hpp"
#include "hfgpi/errors.hpp"
#include "hfgpi/eval.hpp"
#include "hfgpi/gradcheck.hpp"
#include "hfgpi/io.hpp"
#include "hfgpi/model.hpp"
#include "hfgpi/rng.hpp"
#include "hfgpi/synthetic.hpp"
#include "hfgpi/train.hpp"

namespace hfgpi::cli {

namespace {

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << body;
    if (!out) throw IoError("write failed for " + path);
}

std::string config_block(const RunConfig& cfg) {
    return "[config]\n" + config_echo(cfg) + "\n";
}

void add_config_flags(CLI::App* cmd, RunConfig& cfg, std::string& drop) {
    cmd->add_option("--ng", cfg.ng, "highly variable genes kept");
    cmd->add_option("--kg", cfg.kg, "gene kNN degree");
    cmd->add_option("--kp", cfg.kp, "protein kNN degree");
    cmd->add_option("--topk", cfg.topk, "patches per hyperedge");
    cmd->add_option("--d", cfg.d, "shared token width");
    cmd->add_option("--heads", cfg.heads, "encoder attention heads");
    cmd->add_option("--layers", cfg.layers, "encoder layers");
    cmd->add_option("--dattn", cfg.d_attn, "pooling gate width");
    cmd->add_option("--bins", cfg.bins, "survival time bins");
    cmd->add_option("--lambda", cfg.lambda, "structure loss weight");
    cmd->add_option("--lr", cfg.lr, "learning rate");
    cmd->add_option("--weight-decay", cfg.weight_decay, "decoupled weight decay");
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--accumulation", cfg.accumulation, "gradient accumulation window");
    cmd->add_option("--folds", cfg.folds, "cross-validation folds");
    cmd->add_option("--val-fraction", cfg.val_fraction, "validation split fraction");
    cmd->add_option("--seed", cfg.seed, "root RNG seed");
    cmd->add_option("--drop", drop, "ablation: blank one modality (none|genes|proteins|patches)");
    cmd->add_flag_callback("--no-zscore-proteins", [&cfg] { cfg.zscore_proteins = false; },
                           "pass protein abundances through without z-scoring");
}

// deterministic train/validation split from the (seed, "split") stream
void split_train_val(std::size_t n, const RunConfig& cfg, std::vector<std::size_t>& train,
                     std::vector<std::size_t>& val) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = seeded_stream(cfg.seed, "split");
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                     std::floor(cfg.val_fraction * n + 0.5)));
    if (n_val >= n) throw ConfigError("train: validation split leaves no training patients");
    val.assign(idx.begin(), idx.begin() + n_val);
    train.assign(idx.begin() + n_val, idx.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
}

std::string km_table(const eval::KmCurve& km) {
    std::ostringstream out;
    out << "time\tsurvival\tat_risk\n";
    for (std::size_t i = 0; i < km.times.size(); ++i)
        out << io::format_double(km.times[i]) << '\t' << io::format_double(km.survival[i]) << '\t'
            << io::format_double(km.at_risk[i]) << '\n';
    return out.str();
}

struct LoadedModel {
    RunConfig cfg;
    model::CohortContext ctx;
    model::HfgpiModel model;
};

LoadedModel load_for_inference(const std::string& manifest, const ckpt::Checkpoint& ck) {
    RunConfig cfg = parse_config_echo(ck.config_echo);
    io::LoadReport report;
    io::Cohort cohort = io::load_cohort(manifest, &report);
    for (const std::string& msg : report.excluded) std::cerr << "excluded " << msg << '\n';
    model::CohortContext ctx = model::preprocess(cohort, cfg, ck.bin_edges);
    model::HfgpiModel m(cfg, ctx.genes.dim(), ctx.proteins.dim(), ctx.proteins.count());
    if (ck.names != m.param_names())
        throw IoError("checkpoint parameter names do not match the configured architecture");
    m.params() = ck.params;
    return {cfg, std::move(ctx), std::move(m)};
}

// ---------------------------------------------------------------- synth ---

int cmd_synth(const synth::CohortSpec& spec, const std::string& out_dir, bool overwrite,
              bool include_hidden) {
    synth::SyntheticCohort cohort = synth::generate(spec);
    std::string manifest = io::write_cohort(cohort, out_dir, overwrite, include_hidden);
    std::cerr << "wrote " << cohort.sample_ids.size() << " patients, oracle c-index "
              << io::format_double(synth::oracle_cindex(cohort)) << '\n';
    std::cout << manifest << '\n';
    return 0;
}

// ---------------------------------------------------------------- train ---

int cmd_train(const std::string& manifest, const RunConfig& cfg, const std::string& out_ckpt,
              const std::string& log_path, const std::string& resume_path) {
    cfg.validate();
    io::LoadReport report;
    io::Cohort cohort = io::load_cohort(manifest, &report);
    for (const std::string& msg : report.excluded) std::cerr << "excluded " << msg << '\n';

    train::TrainState resume_state;
    const train::TrainState* resume = nullptr;
    std::vector<double> bin_edges;
    model::CohortContext ctx = model::preprocess(cohort, cfg);
    model::HfgpiModel m(cfg, ctx.genes.dim(), ctx.proteins.dim(), ctx.proteins.count());
    if (!resume_path.empty()) {
        ckpt::Checkpoint ck = ckpt::load(resume_path);
        if (!ck.has_resume) throw IoError(resume_path + ": checkpoint has no resume section");
        RunConfig ck_cfg = parse_config_echo(ck.config_echo);
        ck_cfg.epochs = cfg.epochs; // extending the epoch budget is what resume is for
        if (config_echo(ck_cfg) != config_echo(cfg))
            throw ConfigError("resume: checkpoint configuration differs from the requested run");
        ctx = model::preprocess(cohort, cfg, ck.bin_edges);
        resume_state.params = ck.current_params;
        resume_state.opt = ck.opt;
        resume_state.best_params = ck.params;
        resume_state.best_metric = ck.best_metric;
        resume_state.best_epoch = ck.best_epoch;
        resume_state.epochs_done = ck.epochs_done;
        resume = &resume_state;
    }

    std::vector<std::size_t> train_idx, val_idx;
    split_train_val(ctx.n_patients(), cfg, train_idx, val_idx);
    train::TrainResult result = train::fit(m, ctx, train_idx, val_idx, resume);

    ckpt::Checkpoint ck;
    ck.seed = cfg.seed;
    ck.config_echo = config_echo(cfg);
    ck.bin_edges = ctx.bin_edges;
    ck.names = m.param_names();
    ck.params = result.state.best_params;
    ck.has_resume = true;
    ck.current_params = result.state.params;
    ck.opt = result.state.opt;
    ck.epochs_done = result.state.epochs_done;
    ck.best_metric = result.state.best_metric;
    ck.best_epoch = result.state.best_epoch;
    ckpt::save(out_ckpt, ck);

    if (!log_path.empty()) {
        std::ostringstream out;
        out << config_block(cfg);
        out << "epoch\tmean_loss\tmean_surv\tstruct_measured\tstruct_contribution\tval_cindex\n";
        for (const auto& e : result.epochs)
            out << e.epoch << '\t' << io::format_double(e.mean_loss) << '\t'
                << io::format_double(e.mean_surv) << '\t' << io::format_double(e.mean_struct)
                << '\t' << io::format_double(e.struct_contribution) << '\t'
                << (std::isnan(e.val_cindex) ? "nan" : io::format_double(e.val_cindex)) << '\n';
        write_file(log_path, out.str());
    }
    if (result.aborted_nan) {
        std::cerr << "training aborted on non-finite loss; last good state saved to " << out_ckpt
                  << '\n';
        return 3;
    }
    std::cerr << "trained " << result.state.epochs_done << " epochs, best epoch "
              << result.state.best_epoch << " (metric "
              << io::format_double(result.state.best_metric) << "), checkpoint " << out_ckpt
              << '\n';
    return 0;
}

// ------------------------------------------------------------- evaluate ---

int cmd_evaluate(const std::string& manifest, const std::string& ckpt_path,
                 const std::string& out_path) {
    LoadedModel lm = load_for_inference(manifest, ckpt::load(ckpt_path));

    std::vector<double> risks, times;
    std::vector<bool> censored;
    for (std::size_t p = 0; p < lm.ctx.n_patients(); ++p) {
        risks.push_back(eval::risk_score(lm.model.predict(lm.ctx, p)));
        times.push_back(lm.ctx.records[p].time_months);
        censored.push_back(lm.ctx.records[p].censored);
    }
    double c = eval::concordance_index(risks, times, censored);
    eval::MedianSplit split = eval::stratify_median(risks);
    auto subset = [&](const std::vector<std::size_t>& idx, std::vector<double>& t,
                      std::vector<bool>& cen) {
        for (std::size_t i : idx) {
            t.push_back(times[i]);
            cen.push_back(censored[i]);
        }
    };
    std::vector<double> t_hi, t_lo;
    std::vector<bool> c_hi, c_lo;
    subset(split.high, t_hi, c_hi);
    subset(split.low, t_lo, c_lo);

    std::ostringstream out;
    out << config_block(lm.cfg);
    out << "c_index=" << io::format_double(c) << "\n\n";
    out << "[km_high]\n" << km_table(eval::kaplan_meier(t_hi, c_hi)) << '\n';
    out << "[km_low]\n" << km_table(eval::kaplan_meier(t_lo, c_lo)) << '\n';
    eval::LogRankResult lr = eval::log_rank(t_hi, c_hi, t_lo, c_lo);
    out << "[log_rank]\n"
        << "chi_square=" << io::format_double(lr.chi_square) << '\n'
        << "p_value=" << io::format_double(lr.p_value) << '\n'
        << "observed_high=" << io::format_double(lr.observed_a) << '\n'
        << "expected_high=" << io::format_double(lr.expected_a) << '\n'
        << "observed_low=" << io::format_double(lr.observed_b) << '\n'
        << "expected_low=" << io::format_double(lr.expected_b) << '\n';
    write_file(out_path, out.str());
    std::cerr << "evaluation written to " << out_path << '\n';
    std::cout << "c_index=" << io::format_double(c) << '\n';
    return 0;
}

// ------------------------------------------------------------- crossval ---

int cmd_crossval(const std::string& manifest, const RunConfig& cfg, const std::string& out_path) {
    cfg.validate();
    io::LoadReport report;
    io::Cohort cohort = io::load_cohort(manifest, &report);
    for (const std::string& msg : report.excluded) std::cerr << "excluded " << msg << '\n';
    model::CohortContext ctx = model::preprocess(cohort, cfg);

    std::size_t fold_counter = 0;
    eval::CrossValResult cv = eval::cross_validate(
        ctx.n_patients(), cfg.folds, cfg.seed,
        [&](const std::vector<std::size_t>& train_idx, const std::vector<std::size_t>& test_idx) {
            RunConfig fold_cfg = cfg;
            fold_cfg.seed = mix_seed(cfg.seed, "fold", fold_counter);
            std::size_t fold = fold_counter++;
            model::HfgpiModel m(fold_cfg, ctx.genes.dim(), ctx.proteins.dim(),
                                ctx.proteins.count());
            train::TrainResult r = train::fit(m, ctx, train_idx, {});
            if (r.aborted_nan) throw NumericError("fold " + std::to_string(fold) + ": NaN loss");
            m.params() = r.state.best_params;
            double c = train::cindex_of(m, ctx, test_idx);
            std::cerr << "fold " << fold << " c-index " << io::format_double(c) << '\n';
            return c;
        });

    std::ostringstream out;
    out << config_block(cfg);
    out << "fold\tc_index\tvalid\n";
    for (std::size_t f = 0; f < cv.fold_cindex.size(); ++f)
        out << f << '\t' << (cv.fold_valid[f] ? io::format_double(cv.fold_cindex[f]) : "nan")
            << '\t' << (cv.fold_valid[f] ? 1 : 0) << '\n';
    out << "mean=" << io::format_double(cv.mean) << '\n'
        << "std=" << io::format_double(cv.stddev) << '\n'
        << "valid_folds=" << cv.valid_folds << '\n';
    write_file(out_path, out.str());
    std::cout << "mean=" << io::format_double(cv.mean) << " std=" << io::format_double(cv.stddev)
              << '\n';
    return 0;
}

// ------------------------------------------------------------ gradcheck ---

int cmd_gradcheck(double tolerance, std::uint64_t seed, const std::string& out_path) {
    synth::CohortSpec spec;
    spec.n_patients = 8;
    spec.n_genes = 6;
    spec.n_proteins = 3;
    spec.n_mapped = 2;
    spec.patches_min = spec.patches_max = 5;
    spec.d_g = 4;
    spec.d = 4;
    spec.bins = 2;
    spec.beta = 1.0;
    spec.hazard_sharpness = 1.0;
    spec.censor_target = 0.25;
    spec.seed = seed;

    RunConfig cfg;
    cfg.ng = 6;
    cfg.kg = 2;
    cfg.kp = 1;
    cfg.topk = 2;
    cfg.d = 4;
    cfg.heads = 2;
    cfg.d_attn = 3;
    cfg.bins = 2;
    cfg.lambda = 0.3;
    cfg.seed = seed;

    model::CohortContext ctx = model::preprocess(io::to_cohort(synth::generate(spec)), cfg);
    model::HfgpiModel m(cfg, ctx.genes.dim(), ctx.proteins.dim(), ctx.proteins.count());
    m.init(seed);

    // pin the non-differentiable top-k incidence from the reference forward
    ad::Tape ref_tape;
    pghl::Incidence frozen = m.forward(ref_tape, ctx, 0).incidence;

    auto value_of = [&](const std::vector<Matrix>& params) {
        ad::Tape tape;
        auto f = m.forward(tape, ctx, 0, params, &frozen);
        return tape.value(f.loss)(0, 0);
    };
    auto grad_of = [&](const std::vector<Matrix>& params) {
        ad::Tape tape;
        auto f = m.forward(tape, ctx, 0, params, &frozen);
        tape.backward(f.loss);
        std::vector<Matrix> grads;
        for (ad::Var v : f.param_vars) grads.push_back(tape.grad(v));
        return grads;
    };
    FdReport report =
        finite_difference_check(m.param_names(), m.params(), value_of, grad_of, tolerance);
    std::string text = config_block(cfg) + format_report(report);
    if (out_path.empty()) std::cout << text;
    else write_file(out_path, text);
    if (!report.all_pass) {
        std::cerr << "gradient check FAILED at tolerance " << io::format_double(tolerance) << '\n';
        return 3;
    }
    std::cerr << "gradient check passed for " << report.entries.size() << " parameter groups\n";
    return 0;
}

// -------------------------------------------------------------- inspect ---

int cmd_inspect(const std::string& manifest, const std::string& ckpt_path,
                const std::string& protein, std::size_t top_n, const std::string& out_path) {
    LoadedModel lm = load_for_inference(manifest, ckpt::load(ckpt_path));
    auto it = std::find(lm.ctx.proteins.names.begin(), lm.ctx.proteins.names.end(), protein);
    if (it == lm.ctx.proteins.names.end()) {
        std::string names;
        for (const auto& n : lm.ctx.proteins.names) names += (names.empty() ? "" : ", ") + n;
        throw InputError("unknown protein '" + protein + "'; available: " + names);
    }
    std::size_t pi = static_cast<std::size_t>(it - lm.ctx.proteins.names.begin());

    std::vector<double> mean_attention(lm.ctx.genes.count(), 0.0);
    std::vector<std::string> member_lines;
    for (std::size_t p = 0; p < lm.ctx.n_patients(); ++p) {
        ad::Tape tape;
        auto f = lm.model.forward(tape, lm.ctx, p);
        const Matrix& t = tape.value(f.attention);
        for (std::size_t g = 0; g < lm.ctx.genes.count(); ++g) mean_attention[g] += t(pi, g);
        std::string line = lm.ctx.sample_ids[p] + "\t";
        auto members = f.incidence.members(pi);
        for (std::size_t j = 0; j < members.size(); ++j)
            line += (j ? "," : "") + std::to_string(members[j]);
        member_lines.push_back(line);
    }
    for (double& a : mean_attention) a /= static_cast<double>(lm.ctx.n_patients());

    std::vector<std::size_t> order(mean_attention.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mean_attention[a] != mean_attention[b]) return mean_attention[a] > mean_attention[b];
        return a < b;
    });

    std::ostringstream out;
    out << config_block(lm.cfg);
    out << "protein=" << protein << "\n\n[top_genes]\ngene\tmean_attention\n";
    for (std::size_t r = 0; r < std::min(top_n, order.size()); ++r)
        out << lm.ctx.genes.names[order[r]] << '\t'
            << io::format_double(mean_attention[order[r]]) << '\n';
    out << "\n[hyperedge_members]\nsample_id\tpatch_ids\n";
    for (const auto& line : member_lines) out << line << '\n';
    if (out_path.empty()) std::cout << out.str();
    else write_file(out_path, out.str());
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"HFGPI: gene/protein/patch fusion for discrete-time survival analysis"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort");
    synth::CohortSpec spec;
    std::string synth_out;
    bool overwrite = false, include_hidden = false;
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--patients", spec.n_patients, "cohort size");
    synth_cmd->add_option("--genes", spec.n_genes, "gene count");
    synth_cmd->add_option("--proteins", spec.n_proteins, "protein count");
    synth_cmd->add_option("--mapped", spec.n_mapped, "proteins with planted drivers");
    synth_cmd->add_option("--patches-min", spec.patches_min, "min patches per patient");
    synth_cmd->add_option("--patches-max", spec.patches_max, "max patches per patient");
    synth_cmd->add_option("--dg", spec.d_g, "gene identity width");
    synth_cmd->add_option("--d", spec.d, "protein identity / patch width");
    synth_cmd->add_option("--bins", spec.bins, "suggested time bins");
    synth_cmd->add_option("--beta", spec.beta, "planted signal strength");
    synth_cmd->add_option("--sharpness", spec.hazard_sharpness, "hazard sharpness");
    synth_cmd->add_option("--censor", spec.censor_target, "target censored fraction");
    synth_cmd->add_option("--seed", spec.seed, "root RNG seed");
    synth_cmd->add_flag("--overwrite", overwrite, "replace an existing cohort");
    synth_cmd->add_flag("--include-hidden", include_hidden, "export hidden ground truth");

    // train
    auto* train_cmd = app.add_subcommand("train", "train on a cohort manifest");
    RunConfig train_cfg;
    std::string train_drop = "none", train_manifest, train_out, train_log, train_resume;
    train_cmd->add_option("--manifest", train_manifest, "cohort manifest path")->required();
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
    train_cmd->add_option("--log", train_log, "per-epoch loss log path");
    train_cmd->add_option("--resume", train_resume, "checkpoint to resume from");
    add_config_flags(train_cmd, train_cfg, train_drop);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint on a cohort");
    std::string eval_manifest, eval_ckpt, eval_out;
    eval_cmd->add_option("--manifest", eval_manifest, "cohort manifest path")->required();
    eval_cmd->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
    eval_cmd->add_option("--out", eval_out, "report output path")->required();

    // crossval
    auto* cv_cmd = app.add_subcommand("crossval", "k-fold cross-validation");
    RunConfig cv_cfg;
    std::string cv_drop = "none", cv_manifest, cv_out;
    cv_cmd->add_option("--manifest", cv_manifest, "cohort manifest path")->required();
    cv_cmd->add_option("--out", cv_out, "report output path")->required();
    add_config_flags(cv_cmd, cv_cfg, cv_drop);

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    double gc_tol = 1e-4;
    std::uint64_t gc_seed = 0;
    std::string gc_out;
    gc_cmd->add_option("--tolerance", gc_tol, "max relative error");
    gc_cmd->add_option("--seed", gc_seed, "root RNG seed");
    gc_cmd->add_option("--out", gc_out, "report output path (default stdout)");

    // inspect
    auto* ins_cmd = app.add_subcommand("inspect", "attention and hyperedge inspection");
    std::string ins_manifest, ins_ckpt, ins_protein, ins_out;
    std::size_t ins_top = 10;
    ins_cmd->add_option("--manifest", ins_manifest, "cohort manifest path")->required();
    ins_cmd->add_option("--checkpoint", ins_ckpt, "trained checkpoint")->required();
    ins_cmd->add_option("--protein", ins_protein, "protein name to inspect")->required();
    ins_cmd->add_option("--top", ins_top, "number of top genes to report");
    ins_cmd->add_option("--out", ins_out, "report output path (default stdout)");

    std::vector<const char*> argv;
    argv.push_back("hfgpi");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(spec, synth_out, overwrite, include_hidden);
        if (train_cmd->parsed()) {
            train_cfg.drop = parse_drop_modality(train_drop);
            return cmd_train(train_manifest, train_cfg, train_out, train_log, train_resume);
        }
        if (eval_cmd->parsed()) return cmd_evaluate(eval_manifest, eval_ckpt, eval_out);
        if (cv_cmd->parsed()) {
            cv_cfg.drop = parse_drop_modality(cv_drop);
            return cmd_crossval(cv_manifest, cv_cfg, cv_out);
        }
        if (gc_cmd->parsed()) return cmd_gradcheck(gc_tol, gc_seed, gc_out);
        if (ins_cmd->parsed())
            return cmd_inspect(ins_manifest, ins_ckpt, ins_protein, ins_top, ins_out);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) { // InputError, IoError, DimensionError
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace hfgpi::cli
