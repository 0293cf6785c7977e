// fluidlab command-line entry point.

#include "fluidlab/fluidlab.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fluidlab;

namespace {

struct Common {
    std::uint64_t seed = 0;
    std::vector<std::string> argv;
};

struct DataOpts {
    std::string features, labels, target = "fluidity";
    int folds = 10;
};

void add_data_opts(CLI::App* sub, DataOpts& d)
{
    sub->add_option("--features", d.features, "features.csv")->required()->check(CLI::ExistingFile);
    sub->add_option("--labels", d.labels, "labels.csv")->required()->check(CLI::ExistingFile);
    sub->add_option("--target", d.target, "fluidity, enjoyment or both")
        ->check(CLI::IsMember({"fluidity", "enjoyment", "both"}))
        ->capture_default_str();
    sub->add_option("--folds", d.folds, "number of session-grouped folds")->capture_default_str();
}

std::vector<Target> targets_of(const std::string& s)
{
    if (s == "both")
        return {Target::fluidity, Target::enjoyment};
    return {parse_target(s)};
}

/// Wall clock plus RunRecord bookkeeping for one command.
struct Recorder {
    RunRecord rec;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    Recorder(std::string cmd, const Common& c)
    {
        rec.command = std::move(cmd);
        rec.argv = c.argv;
        rec.seed = c.seed;
    }
    void finish(const fs::path& primary_output)
    {
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.write(run_record_path(primary_output));
    }
};

ParamsBook load_book(const std::string& path)
{
    ParamsBook book;
    if (path.empty())
        return book;
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return params_book_from_json(j, MethodParams{});
}

std::vector<Arm> method_arms(const FeatureTable& t, const std::vector<std::string>& names)
{
    std::vector<Arm> arms;
    for (const auto& n : names)
        arms.push_back(method_arm(t, parse_method(n)));
    return arms;
}

void write_json(const nlohmann::ordered_json& j, const fs::path& p)
{
    auto out = open_output(p);
    out << j.dump(2) << "\n";
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"fluidlab: semi-supervised detection of negative-experience moments in multi-party calls"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
    app.set_version_flag("--version", kVersion);

    Common common;
    for (int i = 0; i < argc; ++i)
        common.argv.emplace_back(argv[i]);
    app.add_option("--seed", common.seed, "global seed (default: $FLUIDLAB_SEED or 0)")
        ->envname("FLUIDLAB_SEED")
        ->capture_default_str();

    // segment
    auto* seg = app.add_subcommand("segment", "detect gaps/overlaps and cut 7 s clips from per-speaker WAVs");
    std::string audio_dir, seg_out;
    SegmentationConfig scfg;
    seg->add_option("--audio-dir", audio_dir, "session dir of <speaker>.wav, or a dir of session dirs")
        ->required()
        ->check(CLI::ExistingDirectory);
    seg->add_option("--out", seg_out, "manifest.jsonl")->required();
    seg->add_option("--rms-threshold", scfg.rms_threshold)->capture_default_str();
    seg->add_option("--min-gap", scfg.min_gap, "seconds")->capture_default_str();
    seg->add_option("--frame-len", scfg.frame_len, "seconds")->capture_default_str();
    seg->add_option("--hop", scfg.hop, "seconds")->capture_default_str();
    seg->add_option("--edge-exclusion", scfg.edge_exclusion, "seconds")->capture_default_str();

    // annotate
    auto* ann = app.add_subcommand("annotate", "filter annotators, aggregate ratings and binarize");
    std::string ratings, rel_clips, ann_out;
    double r_min = 0.2, ann_threshold = 2.5;
    int min_annotators = 4;
    ann->add_option("--ratings", ratings, "annotations.csv")->required()->check(CLI::ExistingFile);
    ann->add_option("--reliability-clips", rel_clips, "one clip id per line")->required()->check(CLI::ExistingFile);
    ann->add_option("--out", ann_out, "labels.csv")->required();
    ann->add_option("--r-min", r_min, "annotators need reliability r > r-min")->capture_default_str();
    ann->add_option("--threshold", ann_threshold, "label 1 iff mean < threshold")->capture_default_str();
    ann->add_option("--min-annotators", min_annotators)->capture_default_str();

    // featurize
    auto* fea = app.add_subcommand("featurize", "pool per-clip embeddings into the fused feature table");
    std::string emb, manifest_path, fea_out;
    FusionLayout layout;
    fea->add_option("--embeddings", emb, "embeddings.csv")->required()->check(CLI::ExistingFile);
    fea->add_option("--manifest", manifest_path, "manifest.jsonl")->required()->check(CLI::ExistingFile);
    fea->add_option("--out", fea_out, "features.csv")->required();
    fea->add_option("--audio-dim", layout.audio_dim)->capture_default_str();
    fea->add_option("--face-aus", layout.face_aus)->capture_default_str();
    fea->add_option("--text-dim", layout.text_dim)->capture_default_str();

    // synth
    auto* syn = app.add_subcommand("synth", "write a synthetic dataset with known ground truth");
    std::string preset = "paper-scale", syn_out;
    std::optional<int> syn_sessions;
    std::optional<double> syn_sep, syn_red, syn_pos;
    syn->add_option("--preset", preset, "paper-scale, ssl-advantage or small")->capture_default_str();
    syn->add_option("--out", syn_out, "output directory")->required();
    syn->add_option("--sessions", syn_sessions);
    syn->add_option("--separation", syn_sep);
    syn->add_option("--redundancy", syn_red);
    syn->add_option("--positive-rate", syn_pos);

    // tune
    auto* tun = app.add_subcommand("tune", "TPE search per (algorithm, target, labeled-fold count) cell");
    DataOpts tune_data;
    add_data_opts(tun, tune_data);
    std::vector<std::string> tune_methods{"sl", "self", "cotrain-split", "cotrain-fused"};
    std::vector<int> tune_counts;
    std::size_t trials = 50;
    bool tune_ablation = false;
    std::string tune_out;
    tun->add_option("--method", tune_methods, "methods to tune")->capture_default_str();
    tun->add_option("--labeled-folds", tune_counts, "labeled-fold counts (default: all)");
    tun->add_option("--trials", trials)->capture_default_str();
    tun->add_flag("--ablation", tune_ablation, "tune the modality-ablation arms instead of --method");
    tun->add_option("--out", tune_out, "params.json")->required();

    // train
    auto* trn = app.add_subcommand("train", "train one model on one fold combination");
    DataOpts train_data;
    add_data_opts(trn, train_data);
    std::string train_method, train_params, model_out, trace_out;
    int train_k = 1;
    std::optional<std::size_t> train_combo;
    trn->add_option("--method", train_method, "sl, self, cotrain-split or cotrain-fused")->required();
    trn->add_option("--labeled-folds", train_k, "number of labeled folds")->capture_default_str();
    trn->add_option("--combo", train_combo, "combination id (default: first with --labeled-folds)");
    trn->add_option("--params", train_params, "params.json from tune")->check(CLI::ExistingFile);
    trn->add_option("--out", model_out, "model.json")->required();
    trn->add_option("--trace", trace_out, "pseudo-label trace (default: <out>.trace.json)");

    // sweep / ablate
    struct SweepOpts {
        DataOpts data;
        std::vector<std::string> methods{"sl", "self", "cotrain-split", "cotrain-fused"};
        std::vector<int> counts;
        std::size_t max_combos = 0;
        int jobs = 1;
        std::string params, out;
    };
    SweepOpts sw, ab;
    auto add_sweep = [](CLI::App* sub, SweepOpts& o, bool methods) {
        add_data_opts(sub, o.data);
        if (methods)
            sub->add_option("--methods", o.methods)->capture_default_str();
        sub->add_option("--labeled-folds", o.counts, "labeled-fold counts (default: all)");
        sub->add_option("--max-combos", o.max_combos, "seeded subsample of combinations (0 = all)")
            ->capture_default_str();
        sub->add_option("--jobs", o.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--params", o.params, "params.json from tune")->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "results.csv")->required();
    };
    auto* swp = app.add_subcommand("sweep", "evaluate methods over fold combinations");
    add_sweep(swp, sw, true);
    auto* abl = app.add_subcommand("ablate", "self-training over the seven modality combinations");
    add_sweep(abl, ab, false);

    // report
    auto* rep = app.add_subcommand("report", "aggregate results into CSV tables and SVG charts");
    std::string results_in, rep_out;
    rep->add_option("--results", results_in, "results.csv")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", rep_out, "report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        if (app.get_subcommands().empty()) {
            std::cout << app.help("", CLI::AppFormatMode::All);
            return 0;
        }
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    auto prepare = [&](const DataOpts& d, FeatureTable& table, std::vector<Experiment>& exps, RunRecord& rec) {
        table = read_features(d.features);
        const auto labels = read_labels(d.labels);
        rec.add_input(d.features);
        rec.add_input(d.labels);
        for (Target t : targets_of(d.target))
            exps.push_back(make_experiment(table, labels, t, d.folds, common.seed));
    };

    if (*seg) {
        scfg.validate();
        Recorder r("segment", common);
        r.rec.config = {{"rms_threshold", scfg.rms_threshold}, {"min_gap", scfg.min_gap},
                        {"frame_len", scfg.frame_len},         {"hop", scfg.hop},
                        {"edge_exclusion", scfg.edge_exclusion}};
        std::vector<fs::path> sessions;
        bool has_wav = false;
        for (const auto& e : fs::directory_iterator(audio_dir))
            has_wav |= e.is_regular_file() && e.path().extension() == ".wav";
        if (has_wav) {
            sessions.push_back(audio_dir);
        } else {
            for (const auto& e : fs::directory_iterator(audio_dir))
                if (e.is_directory())
                    sessions.push_back(e.path());
            std::sort(sessions.begin(), sessions.end());
        }
        require(!sessions.empty(), audio_dir + ": no .wav files or session directories");
        std::vector<ClipManifest> all;
        for (const auto& s : sessions) {
            r.rec.add_input(s);
            const auto res = segment_session(read_session_audio(s), scfg);
            std::cout << s.filename().string() << ": " << res.gaps.size() << " gap, " << res.overlaps.size()
                      << " overlap, " << res.non_targeted.size() << " non-targeted clips\n";
            const auto v = res.all();
            all.insert(all.end(), v.begin(), v.end());
        }
        write_manifest(all, seg_out);
        r.rec.add_output(seg_out);
        r.finish(seg_out);
    } else if (*ann) {
        Recorder r("annotate", common);
        r.rec.config = {{"r_min", r_min}, {"threshold", ann_threshold}, {"min_annotators", min_annotators}};
        AnnotationSet set{read_annotations(ratings), read_id_list(rel_clips)};
        r.rec.add_input(ratings);
        r.rec.add_input(rel_clips);
        for (const auto& [id, rv] : reliability_scores(set))
            std::cout << "annotator " << id << ": r = " << (rv ? format_double(*rv, 4) : "undefined") << "\n";
        const auto kept = filter_annotators(set, r_min);
        auto labels = aggregate_and_binarize(kept, ann_threshold, min_annotators);
        require(!labels.empty(), "annotate: no clip has enough annotators after filtering");
        write_labels(labels, ann_out);
        const auto t = label_table(labels);
        std::cout << labels.size() << " labeled clips; enjoyment x fluidity table [[" << t[0][0] << "," << t[0][1]
                  << "],[" << t[1][0] << "," << t[1][1] << "]]";
        try {
            const auto chi = contingency_chi2(t);
            std::cout << "; chi2 = " << format_double(chi.chi2, 6) << ", p = " << format_double(chi.p, 4);
        } catch (const ValidationError&) {
            std::cout << "; chi2 undefined (empty margin)";
        }
        std::cout << "\n";
        r.rec.add_output(ann_out);
        r.finish(ann_out);
    } else if (*fea) {
        Recorder r("featurize", common);
        r.rec.config = {{"audio_dim", layout.audio_dim}, {"face_aus", layout.face_aus}, {"text_dim", layout.text_dim}};
        const auto table = featurize(read_embeddings(emb), read_manifest(manifest_path), layout);
        r.rec.add_input(emb);
        r.rec.add_input(manifest_path);
        write_features(table, fea_out);
        r.rec.add_output(fea_out);
        r.finish(fea_out);
    } else if (*syn) {
        Recorder r("synth", common);
        SynthConfig c = synth_preset(preset);
        c.seed = common.seed;
        if (syn_sessions)
            c.n_sessions = *syn_sessions;
        if (syn_sep)
            c.cluster_separation = *syn_sep;
        if (syn_red)
            c.view_redundancy = *syn_red;
        if (syn_pos)
            c.positive_rate = *syn_pos;
        r.rec.config = {{"preset", preset},
                        {"n_sessions", c.n_sessions},
                        {"cluster_separation", c.cluster_separation},
                        {"view_redundancy", c.view_redundancy},
                        {"positive_rate", c.positive_rate}};
        const auto ds = generate(c);
        fs::create_directories(syn_out);
        const fs::path dir(syn_out);
        write_features(ds.table, dir / "features.csv");
        write_labels(ds.labels, dir / "labels.csv");
        write_manifest(ds.manifest, dir / "manifest.jsonl");
        for (const char* f : {"features.csv", "labels.csv", "manifest.jsonl"})
            r.rec.add_output(dir / f);
        std::cout << ds.table.rows() << " clips, " << ds.labels.size() << " labeled\n";
        r.finish(dir);
    } else if (*tun) {
        Recorder r("tune", common);
        FeatureTable table;
        std::vector<Experiment> exps;
        prepare(tune_data, table, exps, r.rec);
        const auto arms = tune_ablation ? ablation_arms(table) : method_arms(table, tune_methods);
        std::vector<int> counts = tune_counts;
        if (counts.empty())
            for (int k = 1; k <= tune_data.folds - 2; ++k)
                counts.push_back(k);
        r.rec.config = {{"trials", trials}, {"labeled_folds", counts}, {"ablation", tune_ablation}};
        ParamsBook book;
        const SearchSpace space = default_search_space();
        for (std::size_t t = 0; t < exps.size(); ++t)
            for (std::size_t a = 0; a < arms.size(); ++a)
                for (int k : counts) {
                    const std::uint64_t cell_seed = mix_seed(common.seed, (t * 1000 + a) * 100 + static_cast<std::uint64_t>(k));
                    Study study;
                    try {
                        study = optimize(cell_objective(exps[t], arms[a], k, MethodParams{}, cell_seed), space, trials,
                                         cell_seed);
                    } catch (const Error& e) {
                        std::cerr << arms[a].name << " " << to_string(exps[t].target) << " k=" << k
                                  << ": not tuned, defaults apply (" << e.what() << ")\n";
                        continue;
                    }
                    const auto& best = study.best_trial();
                    book.entries.push_back({arms[a].name, to_string(exps[t].target), k,
                                            apply_params(best.params, MethodParams{}), *best.objective});
                    std::cout << arms[a].name << " " << to_string(exps[t].target) << " k=" << k
                              << ": validation AUC " << format_double(*best.objective, 4) << "\n";
                }
        write_json(to_json(book), tune_out);
        r.rec.add_output(tune_out);
        r.finish(tune_out);
    } else if (*trn) {
        Recorder r("train", common);
        const Method method = parse_method(train_method);
        FeatureTable table;
        std::vector<Experiment> exps;
        require(train_data.target != "both", "train: --target must be fluidity or enjoyment");
        prepare(train_data, table, exps, r.rec);
        const Experiment& ex = exps.front();
        const auto all = enumerate_combos(ex.n_folds, 2);
        std::size_t combo_id = 0;
        if (train_combo) {
            require(*train_combo < all.size(), "train: --combo out of range (0.." + std::to_string(all.size() - 1) + ")");
            combo_id = *train_combo;
        } else {
            require(train_k >= 1 && train_k <= ex.n_folds - 2, "train: --labeled-folds must be in 1.." +
                                                                    std::to_string(ex.n_folds - 2));
            combo_id = select_combos(ex.n_folds, 2, {train_k}, 0, 0).front().first;
        }
        const Combo& combo = all[combo_id];
        const ParamsBook book = load_book(train_params);
        if (!train_params.empty())
            r.rec.add_input(train_params);
        const MethodParams& params =
            book.lookup(to_string(method), to_string(ex.target), static_cast<int>(combo.labeled_folds.size()));
        r.rec.config = {{"method", to_string(method)}, {"combo", combo_id}, {"params", params_to_json(params)}};
        const ComboRows rows = combo_rows(ex, combo);
        require(has_both_classes(rows.y), "train: labeled folds contain a single class");
        const auto tp = train_pipeline(method, table, all_columns(table),
                                       split_data(table, rows.labeled, rows.y, rows.unlabeled), params, common.seed);
        if (has_both_classes(rows.y_test)) {
            const Vector p = tp.predict_proba(take_rows(table.values, rows.test));
            const std::vector<double> pv(p.data(), p.data() + p.size());
            std::cout << "combo " << combo_id << " holdout: roc_auc " << format_double(roc_auc(pv, rows.y_test), 4)
                      << ", macro_f1 " << format_double(macro_f1(threshold_predictions(pv), rows.y_test), 4) << "\n";
        }
        auto model = to_json(tp);
        model["columns"] = table.columns;
        write_json(model, model_out);
        const std::string trace_path = trace_out.empty() ? model_out + ".trace.json" : trace_out;
        write_json(trace_to_json(tp), trace_path);
        r.rec.add_output(model_out);
        r.rec.add_output(trace_path);
        r.finish(model_out);
    } else if (*swp || *abl) {
        const bool ablate = abl->parsed();
        const SweepOpts& o = ablate ? ab : sw;
        Recorder r(ablate ? "ablate" : "sweep", common);
        FeatureTable table;
        std::vector<Experiment> exps;
        prepare(o.data, table, exps, r.rec);
        SweepConfig cfg;
        cfg.arms = ablate ? ablation_arms(table) : method_arms(table, o.methods);
        cfg.targets = targets_of(o.data.target);
        cfg.labeled_fold_counts = o.counts;
        cfg.max_combos = o.max_combos;
        cfg.seed = common.seed;
        cfg.jobs = o.jobs;
        const ParamsBook book = load_book(o.params);
        if (!o.params.empty())
            r.rec.add_input(o.params);
        std::vector<std::string> arm_names;
        for (const auto& a : cfg.arms)
            arm_names.push_back(a.name);
        r.rec.config = {{"algorithms", arm_names},
                        {"target", o.data.target},
                        {"folds", o.data.folds},
                        {"labeled_folds", o.counts},
                        {"max_combos", o.max_combos}};
        const auto outcome = run_sweep(exps, cfg, book);
        write_results(outcome.rows, o.out);
        std::cout << outcome.runs << " runs, " << outcome.skipped << " skipped\n";
        for (const auto& s : outcome.skip_reasons)
            std::cerr << "skipped: " << s << "\n";
        r.rec.add_output(o.out);
        r.finish(o.out);
    } else if (*rep) {
        Recorder r("report", common);
        const auto rows = read_results(results_in);
        r.rec.add_input(results_in);
        for (const auto& p : write_report(rows, rep_out))
            r.rec.add_output(p);
        r.finish(fs::path(rep_out));
    }
    return 0;
}

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "fluidlab: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fluidlab: internal error: " << e.what() << "\n";
        return 2;
    }
}
