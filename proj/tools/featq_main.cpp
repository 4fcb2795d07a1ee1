// featq: budgeted feature acquisition on data streams.
//
// Subcommands: train, eval, synth, inspect. Flags override config-file
// values, which override defaults. Relative output directories resolve
// under $FEATQ_OUTPUT_ROOT when it is set.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include <featq/featq.hpp>

namespace {

using namespace featq;
namespace fs = std::filesystem;

fs::path resolve_output(const std::string& dir) {
    fs::path p(dir);
    if (p.is_absolute()) return p;
    if (const char* root = std::getenv("FEATQ_OUTPUT_ROOT"))
        return fs::path(root) / p;
    return p;
}

Dataset load_dataset(const DataConfig& dc) {
    Dataset ds;
    if (dc.source == "idx") {
        if (dc.images.empty() || dc.image_labels.empty())
            throw InputError("idx source needs data.images and data.image_labels");
        ds = load_idx(dc.images, dc.image_labels);
    } else if (dc.source == "delimited") {
        if (dc.table.empty())
            throw InputError("delimited source needs data.table");
        DelimitedOptions opts;
        opts.delimiter = dc.delimiter;
        opts.label_column = dc.label_column;
        ds = load_delimited(dc.table, dc.costs, opts);
    } else if (dc.source == "synth") {
        if (dc.generator == "one-informative")
            ds = synth::one_informative(dc.synth_n, dc.synth_seed);
        else if (dc.generator == "two-gaussian")
            ds = synth::two_gaussian(dc.synth_n, dc.separation, dc.synth_seed);
        else if (dc.generator == "tiny-dp")
            ds = synth::tiny_dp(dc.synth_n, dc.synth_seed);
        else
            throw InputError("unknown generator '" + dc.generator + "'");
    } else {
        throw InputError("data.source must be idx, delimited, or synth");
    }
    if (dc.limit > 0 && ds.n() > dc.limit) {
        std::vector<int> rows(dc.limit);
        for (int i = 0; i < dc.limit; ++i) rows[i] = i;
        ds = ds.subset(rows);
    }
    return ds;
}

const Dataset& pick_split(const SplitDatasets& s, const std::string& name) {
    if (name == "train") return s.train;
    if (name == "validation") return s.validation;
    return s.test;
}

Dataset head(const Dataset& ds, int n) {
    if (n <= 0 || n >= ds.n()) return ds;
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = i;
    return ds.subset(rows);
}

template <typename S>
PQArchitecture<S> build_architecture(const RunConfig& rc, const Dataset& ds) {
    PQArchitecture<S> arch;
    arch.input_dim = ds.dim();
    arch.n_classes = ds.n_classes;
    arch.n_actions = ds.costs.n_groups();
    arch.p_hidden = rc.model.p_hidden;
    arch.sharing = rc.model.sharing;
    arch.p_dropout = static_cast<S>(rc.model.dropout);
    // the no-sharing ablation widens its own layers to keep per-layer
    // parameter counts comparable
    arch.q_own = rc.model.sharing
                     ? rc.model.q_own
                     : matched_widths_without_sharing(ds.dim(), rc.model.p_hidden,
                                                      rc.model.q_own);
    return arch;
}

struct TrainCliOverrides {
    std::string config_path;
    std::string out;
    std::string resume;
    long episodes = -1;
    int repetitions = -1;
    std::int64_t seed = -1;
    std::string reward;
    std::string precision;
    double budget = std::numeric_limits<double>::quiet_NaN();
    bool no_sharing = false;
    bool quiet = false;
};

RunConfig build_run_config(const std::string& config_path) {
    if (config_path.empty()) return RunConfig{};
    return load_run_config(config_path);
}

template <typename S>
int run_train(RunConfig rc, const TrainCliOverrides& cli) {
    const fs::path out_root = resolve_output(rc.output_dir);

    Dataset full = load_dataset(rc.data);
    if (full.n() == 0) throw InputError("dataset is empty");
    const SplitDatasets splits = split(full, rc.data.split_seed);
    if (splits.train.n() == 0) throw InputError("train split is empty");
    const Dataset val_probe = head(splits.validation, rc.trace_samples);

    if (!cli.resume.empty() && rc.repetitions > 1)
        throw InputError("resume works with a single repetition");

    nlohmann::json echo = run_config_to_json(rc);
    for (int rep = 0; rep < rc.repetitions; ++rep) {
        const fs::path out =
            rc.repetitions > 1 ? out_root / ("rep" + std::to_string(rep))
                               : out_root;
        fs::create_directories(out);

        TrainerConfig tc = rc.train;
        tc.seed = rc.train.seed + static_cast<std::uint64_t>(rep);

        long start_episode = 0;
        std::unique_ptr<Trainer<S>> trainer;
        if (!cli.resume.empty()) {
            trainer = std::make_unique<Trainer<S>>(
                trainer_from_json<S>(load_checkpoint(cli.resume)));
            start_episode = trainer->episodes();
            if (trainer->model().architecture().input_dim != full.dim())
                throw InputError("checkpoint expects " +
                                 std::to_string(
                                     trainer->model().architecture().input_dim) +
                                 " features, dataset has " +
                                 std::to_string(full.dim()));
        } else {
            const auto arch = build_architecture<S>(rc, full);
            Rng init_rng = Rng(tc.seed).derive(0x17);
            trainer = std::make_unique<Trainer<S>>(
                PQModel<S>(arch, init_rng), full.costs,
                Normalizer::fit(splits.train), tc);
        }

        const std::uint64_t stream_seed = Rng(tc.seed).derive(0x57).seed();
        const long trace_cadence =
            std::max<long>(1, rc.episodes / std::max(1, rc.trace_points));
        const double auacc_limit = std::isfinite(tc.budget)
                                       ? tc.budget
                                       : trainer->schedule().total_cost();
        EvalParams probe_params;
        probe_params.budget = tc.budget;
        probe_params.budget_mode = tc.budget_mode;
        probe_params.certainty_mode = tc.certainty_mode;
        probe_params.t_test = tc.t_test;
        probe_params.seed = Rng(tc.seed).derive(0x7A).seed();

        const bool resuming = start_episode > 0;
        EpisodeLogWriter log(out / "episodes.csv", resuming);
        TraceWriter trace(out / "trace.csv", resuming);

        const int n_train = splits.train.n();
        std::vector<int> order;
        long order_epoch = -1;
        for (long e = start_episode; e < rc.episodes; ++e) {
            const long epoch = e / n_train;
            if (epoch != order_epoch) {
                order = epoch_order(n_train, stream_seed, epoch);
                order_epoch = epoch;
            }
            const int row = order[static_cast<std::size_t>(e % n_train)];
            const EpisodeOutcome outcome = trainer->run_episode(
                splits.train.instance(row), splits.train.labels[row]);
            log.write(outcome);

            if ((e + 1) % trace_cadence == 0 || e + 1 == rc.episodes) {
                if (val_probe.n() > 0)
                    trace.write(trace_point(trainer->model(),
                                            trainer->normalizer(),
                                            trainer->schedule(), val_probe,
                                            probe_params, e + 1, auacc_limit));
            }
            if (rc.checkpoint_every > 0 && (e + 1) % rc.checkpoint_every == 0)
                save_checkpoint(out / "checkpoint.ckpt",
                                trainer_to_json(*trainer, echo,
                                                full.feature_names,
                                                full.n_classes));
        }
        log.flush();
        save_checkpoint(out / "model.ckpt",
                        trainer_to_json(*trainer, echo, full.feature_names,
                                        full.n_classes));

        nlohmann::json summary;
        summary["episodes"] = trainer->episodes();
        summary["experiences"] = trainer->experiences();
        summary["updates"] = trainer->updates();
        summary["skipped_p_updates"] = trainer->skipped_p_updates();
        summary["skipped_q_updates"] = trainer->skipped_q_updates();
        summary["exploration_probability"] =
            trainer->exploration().probability();
        summary["seed"] = tc.seed;
        summary["repetition"] = rep;
        summary["config"] = echo;
        auto sj = open_out(out / "summary.json");
        sj << summary.dump(2) << '\n';

        if (!cli.quiet)
            std::cout << "rep " << rep << ": " << trainer->episodes()
                      << " episodes, " << trainer->experiences()
                      << " experiences, " << trainer->updates()
                      << " updates -> " << (out / "model.ckpt").string() << "\n";
    }
    return 0;
}

template <typename S>
int run_eval(const RunConfig& rc, const std::string& checkpoint_path,
             const nlohmann::json& ckpt) {
    const fs::path out = resolve_output(rc.output_dir);
    fs::create_directories(out);

    Trainer<S> trainer = trainer_from_json<S>(ckpt);
    const auto& arch = trainer.model().architecture();
    if (arch.p_hidden != rc.model.p_hidden ||
        arch.sharing != rc.model.sharing)
        throw InputError(
            "checkpoint architecture is incompatible with the config "
            "(hidden sizes or sharing flag differ)");

    Dataset full = load_dataset(rc.data);
    if (full.dim() != arch.input_dim)
        throw InputError("checkpoint expects " + std::to_string(arch.input_dim) +
                         " features, dataset has " + std::to_string(full.dim()));
    const SplitDatasets splits = split(full, rc.data.split_seed);
    Dataset eval_set = head(pick_split(splits, rc.eval.split), rc.eval.samples);
    if (eval_set.n() == 0) throw InputError("evaluation split is empty");

    const auto& model = trainer.model();
    const auto& norm = trainer.normalizer();
    const auto& sched = trainer.schedule();
    const double total = sched.total_cost();

    EvalParams params;
    params.seed = rc.eval.seed;
    params.t_test = rc.eval.t_test;
    params.certainty_mode = rc.eval.certainty_mode;
    params.budget = rc.eval.budget;
    params.budget_mode = rc.eval.budget_mode;

    std::vector<EvalEpisodeRecord> records;
    const AccuracyCostCurve curve =
        accuracy_cost_curve(model, norm, sched, eval_set, params, &records);
    write_curve_csv(out / "curve.csv", curve);
    const double limit = std::isfinite(params.budget) ? params.budget : total;
    const double area = auacc(curve, limit);

    nlohmann::json summary;
    summary["auacc"] = area;
    summary["auacc_cost_limit"] = limit;
    summary["final_accuracy"] = curve.final_accuracy();
    summary["samples"] = eval_set.n();
    summary["split"] = rc.eval.split;
    summary["checkpoint"] = checkpoint_path;
    summary["trained_episodes"] = ckpt.value("episodes", 0L);
    summary["eval_seed"] = rc.eval.seed;

    std::cout << "auacc " << format_double(area) << " over [0, "
              << format_double(limit) << "], final accuracy "
              << format_double(curve.final_accuracy()) << " ("
              << eval_set.n() << " samples)\n";

    nlohmann::json fractions = nlohmann::json::array();
    for (double frac : rc.eval.budget_fractions) {
        if (!(frac > 0) || frac > 1)
            throw InputError("budget fractions must lie in (0, 1]");
        EvalParams p2 = params;
        p2.budget = frac * total;
        const AccuracyCostCurve c2 =
            accuracy_cost_curve(model, norm, sched, eval_set, p2);
        const int pct = static_cast<int>(std::lround(frac * 100));
        write_curve_csv(out / ("curve_frac" + std::to_string(pct) + ".csv"), c2);
        nlohmann::json f;
        f["fraction"] = frac;
        f["budget"] = p2.budget;
        f["accuracy"] = c2.final_accuracy();
        f["auacc"] = auacc(c2, p2.budget);
        fractions.push_back(f);
        std::cout << "  " << pct << "% budget (" << format_double(p2.budget)
                  << "): accuracy " << format_double(c2.final_accuracy())
                  << ", auacc " << format_double(f["auacc"].get<double>())
                  << "\n";
    }
    if (!fractions.empty()) summary["budget_fractions"] = fractions;

    const auto pairs = certainty_correct_pairs(
        model, norm, eval_set, rc.eval.certainty_mode, rc.eval.t_test,
        Rng(rc.eval.seed).derive(0xCA).seed());
    const CalibrationTable cal =
        calibration_table(pairs, rc.eval.calibration_bins);
    write_calibration_csv(out / "calibration.csv", cal);
    summary["ece"] = cal.ece;
    std::cout << "  calibration ece " << format_double(cal.ece) << " ("
              << (rc.eval.certainty_mode == CertaintyMode::McDropout
                      ? "mc"
                      : "softmax")
              << " mode)\n";

    if (rc.eval.order_matrix_samples > 0) {
        const int n = std::min<int>(rc.eval.order_matrix_samples,
                                    static_cast<int>(records.size()));
        std::vector<EvalEpisodeRecord> subset(records.begin(),
                                              records.begin() + n);
        write_order_matrix_csv(out / "order_matrix.csv",
                               acquisition_order_matrix(subset, sched),
                               full.feature_names);
        summary["order_matrix_rows"] = n;
    }

    summary["config"] = run_config_to_json(rc);
    auto sj = open_out(out / "summary.json");
    sj << summary.dump(2) << '\n';
    return 0;
}

int run_synth(const std::string& generator, int n, std::uint64_t seed,
              double separation, const std::string& out_dir) {
    const fs::path out = resolve_output(out_dir);
    Dataset ds;
    if (generator == "one-informative")
        ds = synth::one_informative(n, seed);
    else if (generator == "two-gaussian")
        ds = synth::two_gaussian(n, separation, seed);
    else if (generator == "tiny-dp")
        ds = synth::tiny_dp(n, seed);
    else
        throw InputError("unknown generator '" + generator +
                         "' (expected one-informative, two-gaussian, or tiny-dp)");
    fs::create_directories(out);
    synth::write_csv(ds, (out / "data.csv").string(), (out / "costs.csv").string());
    std::cout << "wrote " << ds.n() << " samples, " << ds.dim()
              << " features to " << out.string() << "\n";
    return 0;
}

int run_inspect(const std::string& checkpoint_path) {
    const nlohmann::json summary =
        checkpoint_summary(load_checkpoint(checkpoint_path));
    std::cout << summary.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Budgeted feature acquisition: joint training of a predictor "
                 "and an action-value network on data streams"};
    app.require_subcommand(1);

    TrainCliOverrides tcli;
    auto* train_cmd =
        app.add_subcommand("train", "Train on a stream and write checkpoints");
    train_cmd->add_option("--config", tcli.config_path, "Run config (JSON)");
    train_cmd->add_option("--episodes", tcli.episodes, "Episode count");
    train_cmd->add_option("--seed", tcli.seed, "Training seed");
    train_cmd->add_option("--out", tcli.out, "Output directory");
    train_cmd->add_option("--repetitions", tcli.repetitions,
                          "Independent repetitions (seed offset per rep)");
    train_cmd->add_option("--reward", tcli.reward,
                          "Reward mode: certainty | baseline");
    train_cmd->add_option("--budget", tcli.budget, "Per-episode budget");
    train_cmd->add_option("--precision", tcli.precision,
                          "Numeric precision: f32 | f64");
    train_cmd->add_option("--resume", tcli.resume, "Checkpoint to resume from");
    train_cmd->add_flag("--no-sharing", tcli.no_sharing,
                        "Disable P-to-Q activation sharing (ablation)");
    train_cmd->add_flag("--quiet", tcli.quiet, "Suppress progress output");

    std::string eval_config, eval_checkpoint, eval_out, eval_certainty,
        eval_fracs, eval_split;
    int eval_order = -1, eval_samples = -1;
    std::int64_t eval_seed = -1;
    auto* eval_cmd =
        app.add_subcommand("eval", "Evaluate a checkpoint: curves, AUACC, "
                                   "calibration, acquisition orders");
    eval_cmd->add_option("--config", eval_config, "Run config (JSON)");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Model checkpoint")
        ->required();
    eval_cmd->add_option("--out", eval_out, "Output directory");
    eval_cmd->add_option("--budget-fracs", eval_fracs,
                         "Comma-separated budget fractions, e.g. 0.25,0.5,1.0");
    eval_cmd->add_option("--certainty", eval_certainty,
                         "Certainty mode: mc | softmax");
    eval_cmd->add_option("--order-matrix", eval_order,
                         "Rows of the acquisition-order matrix to write");
    eval_cmd->add_option("--samples", eval_samples, "Evaluation sample cap");
    eval_cmd->add_option("--split", eval_split,
                         "Evaluation split: train | validation | test");
    eval_cmd->add_option("--seed", eval_seed, "Evaluation seed");

    std::string synth_gen = "one-informative", synth_out = "synth";
    int synth_n = 4000;
    std::uint64_t synth_seed = 1;
    double synth_sep = 1.0;
    auto* synth_cmd =
        app.add_subcommand("synth", "Generate a synthetic dataset + costs file");
    synth_cmd->add_option("--generator", synth_gen,
                          "one-informative | two-gaussian | tiny-dp");
    synth_cmd->add_option("--n", synth_n, "Sample count");
    synth_cmd->add_option("--seed", synth_seed, "Generator seed");
    synth_cmd->add_option("--separation", synth_sep,
                          "Class separation (two-gaussian)");
    synth_cmd->add_option("--out", synth_out, "Output directory");

    std::string inspect_ckpt;
    auto* inspect_cmd =
        app.add_subcommand("inspect", "Print checkpoint metadata");
    inspect_cmd->add_option("--checkpoint", inspect_ckpt, "Checkpoint path")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            RunConfig rc = build_run_config(tcli.config_path);
            if (tcli.episodes >= 0) rc.episodes = tcli.episodes;
            if (tcli.repetitions >= 0) rc.repetitions = tcli.repetitions;
            if (tcli.seed >= 0)
                rc.train.seed = static_cast<std::uint64_t>(tcli.seed);
            if (!tcli.out.empty()) rc.output_dir = tcli.out;
            if (!tcli.reward.empty())
                rc.train.reward_mode = reward_mode_from_string(tcli.reward);
            if (!std::isnan(tcli.budget)) rc.train.budget = tcli.budget;
            if (!tcli.precision.empty()) {
                if (tcli.precision != "f32" && tcli.precision != "f64")
                    throw InputError("--precision must be f32 or f64");
                rc.model.precision = tcli.precision;
            }
            if (tcli.no_sharing) rc.model.sharing = false;
            return rc.model.precision == "f32" ? run_train<float>(rc, tcli)
                                               : run_train<double>(rc, tcli);
        }
        if (eval_cmd->parsed()) {
            RunConfig rc = build_run_config(eval_config);
            if (!eval_out.empty()) rc.output_dir = eval_out;
            if (!eval_certainty.empty())
                rc.eval.certainty_mode = certainty_mode_from_string(eval_certainty);
            if (eval_order >= 0) rc.eval.order_matrix_samples = eval_order;
            if (eval_samples >= 0) rc.eval.samples = eval_samples;
            if (eval_seed >= 0)
                rc.eval.seed = static_cast<std::uint64_t>(eval_seed);
            if (!eval_split.empty()) {
                if (eval_split != "train" && eval_split != "validation" &&
                    eval_split != "test")
                    throw InputError(
                        "--split must be train, validation, or test");
                rc.eval.split = eval_split;
            }
            if (!eval_fracs.empty()) {
                rc.eval.budget_fractions.clear();
                std::istringstream is(eval_fracs);
                std::string tok;
                while (std::getline(is, tok, ','))
                    rc.eval.budget_fractions.push_back(std::stod(tok));
            }
            const nlohmann::json ckpt = load_checkpoint(eval_checkpoint);
            const std::string scalar = ckpt.at("scalar").get<std::string>();
            return scalar == "f32"
                       ? run_eval<float>(rc, eval_checkpoint, ckpt)
                       : run_eval<double>(rc, eval_checkpoint, ckpt);
        }
        if (synth_cmd->parsed())
            return run_synth(synth_gen, synth_n, synth_seed, synth_sep,
                             synth_out);
        if (inspect_cmd->parsed()) return run_inspect(inspect_ckpt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
