#include "icmvc/cli/app.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "CLI11.hpp"

#include "icmvc/cli/pool.hpp"
#include "icmvc/cli/report.hpp"
#include "icmvc/dataio.hpp"
#include "icmvc/error.hpp"
#include "icmvc/rng.hpp"

namespace icmvc::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct TrainFlags {
    std::optional<int> epochs;
    std::optional<int> knn;
    std::optional<int> target_interval;
    std::optional<double> lr;
    std::optional<double> tau_i;
    std::optional<double> tau_c;
    std::optional<double> tau_att;
    std::optional<double> bandwidth;
    std::optional<std::size_t> dim;
    std::optional<std::size_t> embed_dim;
    std::optional<std::size_t> layers;
    std::optional<std::string> transfer;
    std::optional<std::string> guidance;
    bool exclude_self = false;
    std::string config_path;
    bool no_scale = false;
    std::string data;
    std::string out;
};

void add_train_flags(CLI::App& cmd, TrainFlags& f) {
    cmd.add_option("--data", f.data, "Dataset directory")->required();
    cmd.add_option("--out", f.out, "Output directory")->required();
    cmd.add_option("--config", f.config_path, "Flat JSON config file (flags take precedence)");
    cmd.add_option("--epochs", f.epochs, "Training epochs (default 500)");
    cmd.add_option("--lr", f.lr, "Adam learning rate (default 0.001)");
    cmd.add_option("--knn", f.knn, "Neighbors per node in the view graphs (default 10)");
    cmd.add_option("--bandwidth", f.bandwidth, "RBF bandwidth (default: median squared distance)");
    cmd.add_option("--tau-i", f.tau_i, "Instance contrast temperature (default 1.0)");
    cmd.add_option("--tau-c", f.tau_c, "Cluster contrast temperature (default 0.5)");
    cmd.add_option("--tau-att", f.tau_att, "Attention softmax temperature (default 1.0)");
    cmd.add_option("--dim", f.dim, "Latent width of the view encoders (default 128)");
    cmd.add_option("--embed-dim", f.embed_dim, "Contrastive head output width (default 64)");
    cmd.add_option("--layers", f.layers, "GCN layers per view (default 2)");
    cmd.add_option("--transfer", f.transfer, "Relation transfer rule: copy, union or intersection");
    cmd.add_option("--guidance", f.guidance, "Guidance loss reduction over instances: mean or sum");
    cmd.add_option("--target-interval", f.target_interval, "Epochs between guidance target refreshes");
    cmd.add_flag("--exclude-self", f.exclude_self, "Drop the self-similarity term from the contrast denominator");
    cmd.add_flag("--no-scale", f.no_scale, "Skip per-feature min-max scaling on load");
}

json read_config_file(const std::string& path) {
    if (path.empty()) return nullptr;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

const std::vector<std::string> kPassthrough = {"eta", "etas", "seeds", "jobs"};

trainer::TrainConfig resolve_config(const TrainFlags& f, const json& file, const std::optional<std::string>& ablate) {
    trainer::TrainConfig c;
    if (!file.is_null()) apply_config_json(c, file, kPassthrough);
    if (f.epochs) c.epochs = *f.epochs;
    if (f.lr) c.lr = *f.lr;
    if (f.knn) c.knn = *f.knn;
    if (f.bandwidth) c.bandwidth = *f.bandwidth;
    if (f.tau_i) c.tau_i = *f.tau_i;
    if (f.tau_c) c.tau_c = *f.tau_c;
    if (f.tau_att) c.tau_att = *f.tau_att;
    if (f.dim) c.latent_dim = *f.dim;
    if (f.embed_dim) c.embed_dim = *f.embed_dim;
    if (f.layers) c.layers = *f.layers;
    if (f.transfer) c.rule = graphs::parse_transfer_rule(*f.transfer);
    if (f.guidance) {
        if (*f.guidance == "mean") c.guidance = objectives::GuidanceReduction::mean;
        else if (*f.guidance == "sum") c.guidance = objectives::GuidanceReduction::sum;
        else throw ConfigError("unknown guidance reduction '" + *f.guidance + "'");
    }
    if (f.target_interval) c.target_interval = *f.target_interval;
    if (f.exclude_self) c.include_self = false;
    if (ablate) apply_ablation(c, *ablate);
    c.validate();
    return c;
}

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
    std::size_t used = 0;
    try {
        const unsigned long long v = std::stoull(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(source + ": not a seed: '" + text + "'");
}

// flag > ICMVC_SEED > config file > 1
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const json& file) {
    if (flag) return *flag;
    if (const char* env = std::getenv("ICMVC_SEED"); env && *env) return parse_seed(env, "ICMVC_SEED");
    if (file.is_object() && file.contains("seed")) return file["seed"].get<std::uint64_t>();
    return 1;
}

std::vector<std::uint64_t> resolve_seeds(const std::vector<std::uint64_t>& flag, const json& file) {
    if (!flag.empty()) return flag;
    if (file.is_object() && file.contains("seeds")) return file["seeds"].get<std::vector<std::uint64_t>>();
    std::uint64_t base = 1;
    if (const char* env = std::getenv("ICMVC_SEED"); env && *env) base = parse_seed(env, "ICMVC_SEED");
    return {base, base + 1, base + 2, base + 3, base + 4};
}

std::optional<double> resolve_eta(const std::optional<double>& flag, const json& file) {
    if (flag) return flag;
    if (file.is_object() && file.contains("eta")) return file["eta"].get<double>();
    return std::nullopt;
}

void check_eta(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
}

dataio::Dataset load(const TrainFlags& f) {
    dataio::LoadOptions opts;
    opts.minmax_scale = !f.no_scale;
    return dataio::load_dataset(f.data, opts);
}

struct MaskChoice {
    ObservationMask mask;
    RunContext context;
};

MaskChoice resolve_mask(const dataio::Dataset& ds, std::optional<double> eta, std::uint64_t seed) {
    const std::size_t n = ds.views.num_instances();
    if (ds.mask) {
        if (eta) throw ConfigError("--eta conflicts with the mask.csv shipped in the dataset");
        MaskChoice c{*ds.mask, {}};
        c.context.incomplete = c.mask.incomplete_count();
        c.context.eta = static_cast<double>(c.context.incomplete) / static_cast<double>(n);
        c.context.mask_from_file = true;
        return c;
    }
    const double e = eta.value_or(0.0);
    check_eta(e);
    MaskChoice c{dataio::make_mask(n, ds.views.num_views(), e, derive_seed(seed, kMaskStream)), {}};
    c.context.eta = e;
    c.context.incomplete = c.mask.incomplete_count();
    return c;
}

std::string join_args(const std::vector<std::string>& args) {
    std::string s;
    for (const auto& a : args) {
        if (!s.empty()) s += ' ';
        s += a;
    }
    return s;
}

json base_manifest(const std::string& command, const std::string& sub, const trainer::TrainConfig* config,
                   const json& file, const std::string& dataset, const std::vector<std::uint64_t>& seeds,
                   const fs::path& out) {
    json m;
    m["command"] = command;
    m["subcommand"] = sub;
    if (config) m["config"] = config_to_json(*config);
    m["config_file"] = file;
    m["dataset"] = dataset;
    m["seeds"] = seeds;
    m["output_dir"] = out.string();
    return m;
}

struct Outcome {
    int code = kExitOk;
    std::string status = "ok";
    std::optional<metrics::MetricsReport> report;
};

// One complete run into `dir`. Throws on failure.
metrics::MetricsReport execute_run(const dataio::Dataset& ds, std::optional<double> eta, trainer::TrainConfig config,
                                   const fs::path& dir, json manifest, const DumpOptions& dumps) {
    const auto start = Clock::now();
    const MaskChoice mc = resolve_mask(ds, eta, config.seed);
    const trainer::TrainResult result = trainer::train(ds.views, mc.mask, config, &ds.labels);
    std::optional<trainer::Prepared> prepared;
    if (dumps.graphs) prepared = trainer::prepare(ds.views, mc.mask, config);
    const auto files = write_run_outputs(dir, result, mc.context, dumps, prepared ? &*prepared : nullptr);
    manifest["eta"] = mc.context.eta;
    manifest["incomplete"] = mc.context.incomplete;
    write_manifest(dir, std::move(manifest), files, seconds_since(start));
    return *result.final_metrics;
}

Outcome guarded_run(const dataio::Dataset& ds, double eta, const trainer::TrainConfig& config, const fs::path& dir,
                    const json& manifest) {
    Outcome o;
    try {
        o.report = execute_run(ds, eta, config, dir, manifest, {});
    } catch (const std::exception& e) {
        o.code = exit_code_for(e);
        o.status = std::string("error: ") + e.what();
    }
    return o;
}

std::string fmt(double v) { return dataio::format_double(v); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void print_metrics(std::ostream& out, const metrics::MetricsReport& r) {
    out << "ACC " << fmt(r.acc) << " NMI " << fmt(r.nmi) << " ARI " << fmt(r.ari) << "\n";
}

int first_failure(const std::vector<Outcome>& outcomes) {
    for (const auto& o : outcomes)
        if (o.code != kExitOk) return o.code;
    return kExitOk;
}

int cmd_gen(const std::string& command, dataio::SynthSpec spec, const std::optional<std::uint64_t>& seed_flag,
            const std::string& out_dir, std::ostream& out) {
    const auto start = Clock::now();
    spec.seed = resolve_seed(seed_flag, nullptr);
    auto [views, labels] = dataio::synth_blobs(spec);
    const auto written = dataio::save_dataset(out_dir, views, labels);
    std::vector<std::string> files;
    for (const auto& p : written) files.push_back(p.filename().string());
    json m = base_manifest(command, "gen", nullptr, nullptr, "", {spec.seed}, out_dir);
    m["synth"] = {{"n", spec.n},           {"views", spec.views},
                  {"clusters", spec.clusters}, {"dims", spec.dims},
                  {"sigma", spec.noise_sigma}, {"center_scale", spec.center_scale},
                  {"seed", spec.seed}};
    write_manifest(out_dir, std::move(m), files, seconds_since(start));
    out << "wrote " << files.size() + 1 << " files to " << out_dir << "\n";
    return kExitOk;
}

int cmd_run(const std::string& command, const TrainFlags& f, const std::optional<double>& eta_flag,
            const std::optional<std::uint64_t>& seed_flag, const std::optional<std::string>& ablate,
            const DumpOptions& dumps, std::ostream& out) {
    const json file = read_config_file(f.config_path);
    trainer::TrainConfig config = resolve_config(f, file, ablate);
    config.seed = resolve_seed(seed_flag, file);
    const std::optional<double> eta = resolve_eta(eta_flag, file);
    if (eta) check_eta(*eta);
    const dataio::Dataset ds = load(f);
    const json manifest = base_manifest(command, "run", &config, file, f.data, {config.seed}, f.out);
    const metrics::MetricsReport r = execute_run(ds, eta, config, f.out, manifest, dumps);
    print_metrics(out, r);
    return kExitOk;
}

int cmd_sweep(const std::string& command, const TrainFlags& f, const std::vector<double>& eta_flag,
              const std::vector<std::uint64_t>& seed_flag, unsigned jobs, std::ostream& out, std::ostream& err) {
    const auto start = Clock::now();
    const json file = read_config_file(f.config_path);
    const trainer::TrainConfig config = resolve_config(f, file, std::nullopt);
    const std::vector<std::uint64_t> seeds = resolve_seeds(seed_flag, file);
    std::vector<double> etas = eta_flag;
    if (etas.empty()) {
        etas = file.is_object() && file.contains("etas") ? file["etas"].get<std::vector<double>>()
                                                          : std::vector<double>{0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
    }
    for (double e : etas) check_eta(e);
    if (seeds.empty()) throw ConfigError("no seeds given");
    const dataio::Dataset ds = load(f);
    if (ds.mask) throw ConfigError("sweep generates its own masks; the dataset ships mask.csv");

    struct Cell {
        double eta;
        std::uint64_t seed;
        std::string name;
    };
    std::vector<Cell> cells;
    for (double e : etas)
        for (auto s : seeds) cells.push_back({e, s, "eta_" + fmt(e) + "_seed_" + std::to_string(s)});
    std::vector<Outcome> outcomes(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        trainer::TrainConfig c = config;
        c.seed = cells[i].seed;
        const fs::path dir = fs::path(f.out) / "cells" / cells[i].name;
        outcomes[i] = guarded_run(ds, cells[i].eta, c, dir,
                                  base_manifest(command, "sweep", &c, file, f.data, {c.seed}, dir));
    });

    std::string csv = "row,eta,seed,status,acc,nmi,ari,acc_std,nmi_std,ari_std,runs\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Outcome& o = outcomes[i];
        csv += "cell," + fmt(cells[i].eta) + "," + std::to_string(cells[i].seed) + "," + csv_field(o.status) + ",";
        if (o.report) csv += fmt(o.report->acc) + "," + fmt(o.report->nmi) + "," + fmt(o.report->ari) + ",,,,1\n";
        else csv += ",,,,,,0\n";
        if (o.code != kExitOk) err << "cell " << cells[i].name << " failed: " << o.status << "\n";
    }
    for (double e : etas) {
        std::vector<double> acc, nmi, ari;
        std::size_t total = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].eta != e) continue;
            ++total;
            if (!outcomes[i].report) continue;
            acc.push_back(outcomes[i].report->acc);
            nmi.push_back(outcomes[i].report->nmi);
            ari.push_back(outcomes[i].report->ari);
        }
        const Summary sa = summarize(acc), sn = summarize(nmi), sr = summarize(ari);
        const std::string status = acc.size() == total ? "ok" : acc.empty() ? "failed" : "partial";
        csv += "aggregate," + fmt(e) + ",," + status + ",";
        if (acc.empty()) {
            csv += ",,,,,,0\n";
        } else {
            csv += fmt(sa.mean) + "," + fmt(sn.mean) + "," + fmt(sr.mean) + "," + fmt(sa.stddev) + "," +
                   fmt(sn.stddev) + "," + fmt(sr.stddev) + "," + std::to_string(sa.count) + "\n";
        }
        out << "eta " << fmt(e) << ": ACC " << fmt(sa.mean) << " +- " << fmt(sa.stddev) << " (" << sa.count << "/"
            << total << " runs)\n";
    }
    fs::create_directories(f.out);
    dataio::write_text_atomic(fs::path(f.out) / "sweep.csv", csv);
    json m = base_manifest(command, "sweep", &config, file, f.data, seeds, f.out);
    m["etas"] = etas;
    write_manifest(f.out, std::move(m), {"sweep.csv"}, seconds_since(start));
    return first_failure(outcomes);
}

int cmd_ablate(const std::string& command, const TrainFlags& f, const std::optional<double>& eta_flag,
               const std::vector<std::uint64_t>& seed_flag, unsigned jobs, std::ostream& out, std::ostream& err) {
    const auto start = Clock::now();
    const json file = read_config_file(f.config_path);
    const trainer::TrainConfig config = resolve_config(f, file, std::nullopt);
    const std::vector<std::uint64_t> seeds = resolve_seeds(seed_flag, file);
    if (seeds.empty()) throw ConfigError("no seeds given");
    const std::optional<double> eta = resolve_eta(eta_flag, file);
    if (eta) check_eta(*eta);
    const dataio::Dataset ds = load(f);
    if (ds.mask && eta) throw ConfigError("--eta conflicts with the mask.csv shipped in the dataset");

    const std::vector<std::string> variants = {"full", "no-ins", "no-hg", "no-hg-no-clu"};
    struct Cell {
        std::size_t variant;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t v = 0; v < variants.size(); ++v)
        for (auto s : seeds) cells.push_back({v, s});
    std::vector<Outcome> outcomes(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        trainer::TrainConfig c = config;
        c.seed = cells[i].seed;
        const std::string name = variants[cells[i].variant];
        const fs::path dir = fs::path(f.out) / "cells" / (name + "_seed_" + std::to_string(c.seed));
        try {
            apply_ablation(c, name);
            outcomes[i].report =
                execute_run(ds, eta, c, dir, base_manifest(command, "ablate", &c, file, f.data, {c.seed}, dir), {});
        } catch (const std::exception& e) {
            outcomes[i].code = exit_code_for(e);
            outcomes[i].status = std::string("error: ") + e.what();
        }
    });

    std::string csv = "config,use_ins,use_clu,use_hg,runs,acc_mean,acc_std,nmi_mean,nmi_std,ari_mean,ari_std\n";
    std::vector<Summary> acc_by_variant;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        trainer::TrainConfig flags;
        apply_ablation(flags, variants[v]);
        std::vector<double> acc, nmi, ari;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].variant != v) continue;
            if (!outcomes[i].report) {
                err << variants[v] << " seed " << cells[i].seed << " failed: " << outcomes[i].status << "\n";
                continue;
            }
            acc.push_back(outcomes[i].report->acc);
            nmi.push_back(outcomes[i].report->nmi);
            ari.push_back(outcomes[i].report->ari);
        }
        const Summary sa = summarize(acc), sn = summarize(nmi), sr = summarize(ari);
        acc_by_variant.push_back(sa);
        csv += variants[v] + "," + (flags.use_ins ? "1" : "0") + "," + (flags.use_clu ? "1" : "0") + "," +
               (flags.use_hg ? "1" : "0") + "," + std::to_string(sa.count) + ",";
        if (acc.empty()) {
            csv += ",,,,,\n";
        } else {
            csv += fmt(sa.mean) + "," + fmt(sa.stddev) + "," + fmt(sn.mean) + "," + fmt(sn.stddev) + "," +
                   fmt(sr.mean) + "," + fmt(sr.stddev) + "\n";
        }
        out << variants[v] << ": ACC " << fmt(sa.mean) << " +- " << fmt(sa.stddev) << " NMI " << fmt(sn.mean)
            << " ARI " << fmt(sr.mean) << "\n";
    }
    if (acc_by_variant[0].count && acc_by_variant[1].count &&
        acc_by_variant[0].mean < acc_by_variant[1].mean - 0.02) {
        err << "warning: full mean ACC " << fmt(acc_by_variant[0].mean) << " is more than 0.02 below no-ins mean ACC "
            << fmt(acc_by_variant[1].mean) << "\n";
    }
    fs::create_directories(f.out);
    dataio::write_text_atomic(fs::path(f.out) / "ablation.csv", csv);
    json m = base_manifest(command, "ablate", &config, file, f.data, seeds, f.out);
    m["eta"] = eta ? json(*eta) : json(nullptr);
    write_manifest(f.out, std::move(m), {"ablation.csv"}, seconds_since(start));
    return first_failure(outcomes);
}

int cmd_eval(const std::string& command, const std::string& pred_path, const std::string& truth_path,
             const std::string& out_dir, std::ostream& out) {
    const auto start = Clock::now();
    const LabelVector pred = dataio::read_labels_csv(pred_path);
    const LabelVector truth = dataio::read_labels_csv(truth_path);
    const metrics::MetricsReport r = metrics::evaluate(pred, truth);
    print_metrics(out, r);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        dataio::write_text_atomic(fs::path(out_dir) / "metrics.json", metrics_to_json(r).dump(2) + "\n");
        json m = base_manifest(command, "eval", nullptr, nullptr, "", {}, out_dir);
        m["pred"] = pred_path;
        m["truth"] = truth_path;
        write_manifest(out_dir, std::move(m), {"metrics.json"}, seconds_since(start));
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Incomplete multi-view clustering with graph encoders and contrastive objectives", "icmvc"};
    app.require_subcommand(1);

    dataio::SynthSpec spec;
    std::optional<std::uint64_t> gen_seed;
    std::string gen_out;
    std::vector<std::size_t> gen_dims;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic Gaussian-blob dataset");
    gen->add_option("--n", spec.n, "Instances")->capture_default_str();
    gen->add_option("--views", spec.views, "Views")->capture_default_str();
    gen->add_option("--clusters", spec.clusters, "Clusters")->capture_default_str();
    gen->add_option("--dim", gen_dims, "Feature dimension, shared or one per view")->delimiter(',');
    gen->add_option("--sigma", spec.noise_sigma, "Within-cluster noise stddev")->capture_default_str();
    gen->add_option("--center-scale", spec.center_scale, "Stddev of cluster centers")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Seed (default: ICMVC_SEED, else 1)");
    gen->add_option("--out", gen_out, "Output directory")->required();

    TrainFlags run_flags;
    std::optional<double> run_eta;
    std::optional<std::uint64_t> run_seed;
    std::optional<std::string> run_ablate;
    DumpOptions dumps;
    auto* run = app.add_subcommand("run", "Train on one dataset and write metrics, history and labels");
    add_train_flags(*run, run_flags);
    run->add_option("--eta", run_eta, "Missing rate for a generated mask (default 0)");
    run->add_option("--seed", run_seed, "Seed (default: ICMVC_SEED, else 1)");
    run->add_option("--ablate", run_ablate, "Drop loss terms: no-ins, no-hg or no-hg-no-clu");
    run->add_flag("--dump-embeddings", dumps.embeddings, "Write fused latent rows to embeddings.csv");
    run->add_flag("--dump-graphs", dumps.graphs, "Write the final per-view adjacency matrices");
    run->add_flag("--checkpoint", dumps.checkpoint, "Write trained parameters under checkpoint/");

    TrainFlags sweep_flags;
    std::vector<double> sweep_etas;
    std::vector<std::uint64_t> sweep_seeds;
    unsigned sweep_jobs = 0;
    auto* sweep = app.add_subcommand("sweep", "Run a missing-rate x seed grid and write sweep.csv");
    add_train_flags(*sweep, sweep_flags);
    sweep->add_option("--eta", sweep_etas, "Missing rates (default 0,0.1,0.3,0.5,0.7,0.9)")->delimiter(',');
    sweep->add_option("--seeds,--seed", sweep_seeds, "Seeds (default: five starting at ICMVC_SEED, else 1)")
        ->delimiter(',');
    sweep->add_option("--jobs", sweep_jobs, "Worker threads (default: available cores)");

    TrainFlags ablate_flags;
    std::optional<double> ablate_eta;
    std::vector<std::uint64_t> ablate_seeds;
    unsigned ablate_jobs = 0;
    auto* ablate = app.add_subcommand("ablate", "Run the four loss configurations and write ablation.csv");
    add_train_flags(*ablate, ablate_flags);
    ablate->add_option("--eta", ablate_eta, "Missing rate (default 0)");
    ablate->add_option("--seeds,--seed", ablate_seeds, "Seeds (default: five starting at ICMVC_SEED, else 1)")
        ->delimiter(',');
    ablate->add_option("--jobs", ablate_jobs, "Worker threads (default: available cores)");

    std::string eval_pred, eval_truth, eval_out;
    auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
    eval->add_option("--pred", eval_pred, "Predicted labels.csv")->required();
    eval->add_option("--truth", eval_truth, "True labels.csv")->required();
    eval->add_option("--out", eval_out, "Directory for metrics.json");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::string command = join_args(args);
    try {
        if (*gen) {
            if (!gen_dims.empty()) spec.dims = gen_dims;
            return cmd_gen(command, spec, gen_seed, gen_out, out);
        }
        if (*run) return cmd_run(command, run_flags, run_eta, run_seed, run_ablate, dumps, out);
        if (*sweep) {
            return cmd_sweep(command, sweep_flags, sweep_etas, sweep_seeds, sweep_jobs ? sweep_jobs : default_jobs(),
                             out, err);
        }
        if (*ablate) {
            return cmd_ablate(command, ablate_flags, ablate_eta, ablate_seeds,
                              ablate_jobs ? ablate_jobs : default_jobs(), out, err);
        }
        if (*eval) return cmd_eval(command, eval_pred, eval_truth, eval_out, out);
    } catch (const trainer::DivergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitUsage;
}

}  // namespace icmvc::cli
