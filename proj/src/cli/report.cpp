#include "icmvc/cli/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "icmvc/dataio.hpp"
#include "icmvc/error.hpp"
#include "icmvc/network.hpp"
#include "icmvc/rng.hpp"

namespace icmvc::cli {

namespace {

const char* guidance_name(objectives::GuidanceReduction g) {
    return g == objectives::GuidanceReduction::mean ? "mean" : "sum";
}

objectives::GuidanceReduction parse_guidance(const std::string& s) {
    if (s == "mean") return objectives::GuidanceReduction::mean;
    if (s == "sum") return objectives::GuidanceReduction::sum;
    throw ConfigError("unknown guidance reduction '" + s + "' (expected mean or sum)");
}

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const trainer::DivergenceError*>(&e)) return kExitDivergence;
    if (dynamic_cast<const DomainError*>(&e)) return kExitDivergence;
    if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
    if (dynamic_cast<const GenerationError*>(&e)) return kExitUsage;
    if (dynamic_cast<const DataError*>(&e)) return kExitData;
    if (dynamic_cast<const DimensionError*>(&e)) return kExitData;
    if (dynamic_cast<const ContractError*>(&e)) return kExitData;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitData;
    return kExitInternal;
}

json config_to_json(const trainer::TrainConfig& c) {
    json j;
    j["knn"] = c.knn;
    j["bandwidth"] = c.bandwidth ? json(*c.bandwidth) : json(nullptr);
    j["lr"] = c.lr;
    j["epochs"] = c.epochs;
    j["tau_i"] = c.tau_i;
    j["tau_c"] = c.tau_c;
    j["tau_att"] = c.tau_att;
    j["dim"] = c.latent_dim;
    j["embed_dim"] = c.embed_dim;
    j["layers"] = c.layers;
    j["seed"] = c.seed;
    j["use_ins"] = c.use_ins;
    j["use_clu"] = c.use_clu;
    j["use_hg"] = c.use_hg;
    j["transfer"] = graphs::to_string(c.rule);
    j["include_self"] = c.include_self;
    j["guidance"] = guidance_name(c.guidance);
    j["target_interval"] = c.target_interval;
    j["clusters"] = c.clusters;
    j["kmeans_restarts"] = c.kmeans_restarts;
    return j;
}

void apply_config_json(trainer::TrainConfig& c, const json& flat, const std::vector<std::string>& passthrough) {
    if (!flat.is_object()) throw ConfigError("config file must hold a flat JSON object");
    for (const auto& [key, v] : flat.items()) {
        if (std::find(passthrough.begin(), passthrough.end(), key) != passthrough.end()) continue;
        if (key == "knn") c.knn = get_as<int>(v, key);
        else if (key == "bandwidth") c.bandwidth = v.is_null() ? std::nullopt : std::optional(get_as<double>(v, key));
        else if (key == "lr") c.lr = get_as<double>(v, key);
        else if (key == "epochs") c.epochs = get_as<int>(v, key);
        else if (key == "tau_i") c.tau_i = get_as<double>(v, key);
        else if (key == "tau_c") c.tau_c = get_as<double>(v, key);
        else if (key == "tau_att") c.tau_att = get_as<double>(v, key);
        else if (key == "dim") c.latent_dim = get_as<std::size_t>(v, key);
        else if (key == "embed_dim") c.embed_dim = get_as<std::size_t>(v, key);
        else if (key == "layers") c.layers = get_as<std::size_t>(v, key);
        else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
        else if (key == "use_ins") c.use_ins = get_as<bool>(v, key);
        else if (key == "use_clu") c.use_clu = get_as<bool>(v, key);
        else if (key == "use_hg") c.use_hg = get_as<bool>(v, key);
        else if (key == "transfer") c.rule = graphs::parse_transfer_rule(get_as<std::string>(v, key));
        else if (key == "include_self") c.include_self = get_as<bool>(v, key);
        else if (key == "guidance") c.guidance = parse_guidance(get_as<std::string>(v, key));
        else if (key == "target_interval") c.target_interval = get_as<int>(v, key);
        else if (key == "clusters") c.clusters = get_as<std::size_t>(v, key);
        else if (key == "kmeans_restarts") c.kmeans_restarts = get_as<int>(v, key);
        else if (key == "ablate") apply_ablation(c, get_as<std::string>(v, key));
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_ablation(trainer::TrainConfig& c, const std::string& name) {
    c.use_ins = c.use_clu = c.use_hg = true;
    if (name == "full") return;
    if (name == "no-ins") c.use_ins = false;
    else if (name == "no-hg") c.use_hg = false;
    else if (name == "no-hg-no-clu") c.use_hg = c.use_clu = false;
    else throw ConfigError("unknown ablation '" + name + "' (expected no-ins, no-hg or no-hg-no-clu)");
}

json metrics_to_json(const metrics::MetricsReport& r) {
    json j;
    j["acc"] = r.acc;
    j["nmi"] = r.nmi;
    j["ari"] = r.ari;
    j["mapping"] = r.mapping;
    j["confusion"] = r.confusion;
    return j;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_checksum(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

std::string history_csv(const trainer::TrainResult& r) {
    std::string out = "epoch,l_ins,l_clu,l_hg,total,acc,nmi,ari\n";
    for (std::size_t e = 0; e < r.history.size(); ++e) {
        const auto& h = r.history[e];
        out += std::to_string(e + 1) + "," + dataio::format_double(h.l_ins) + "," + dataio::format_double(h.l_clu) +
               "," + dataio::format_double(h.l_hg) + "," + dataio::format_double(h.total);
        if (e < r.epoch_metrics.size()) {
            const auto& m = r.epoch_metrics[e];
            out += "," + dataio::format_double(m.acc) + "," + dataio::format_double(m.nmi) + "," +
                   dataio::format_double(m.ari);
        } else {
            out += ",,,";
        }
        out += "\n";
    }
    return out;
}

std::vector<std::string> write_run_outputs(const fs::path& dir, const trainer::TrainResult& r,
                                           const RunContext& context, const DumpOptions& dumps,
                                           const trainer::Prepared* prepared) {
    fs::create_directories(dir);
    std::vector<std::string> files;

    json m = r.final_metrics ? metrics_to_json(*r.final_metrics) : json::object();
    m["instances"] = r.labels.size();
    m["clusters"] = r.fused_assignment.cols();
    m["views"] = r.view_assignments.size();
    m["epochs"] = r.history.size();
    m["seed"] = r.config.seed;
    m["eta"] = context.eta;
    m["incomplete"] = context.incomplete;
    m["mask_from_file"] = context.mask_from_file;
    const auto& last = r.history.back();
    m["final_loss"] = {{"l_ins", last.l_ins}, {"l_clu", last.l_clu}, {"l_hg", last.l_hg}, {"total", last.total}};
    m["label_source"] = r.config.use_clu ? "classifier" : "kmeans";
    dataio::write_text_atomic(dir / "metrics.json", m.dump(2) + "\n");
    files.push_back("metrics.json");

    dataio::write_text_atomic(dir / "history.csv", history_csv(r));
    files.push_back("history.csv");
    dataio::write_labels_csv(dir / "labels.csv", r.labels);
    files.push_back("labels.csv");

    if (dumps.embeddings) {
        dataio::write_matrix_csv(dir / "embeddings.csv", r.fused_latent);
        files.push_back("embeddings.csv");
    }
    if (dumps.graphs && prepared) {
        for (std::size_t v = 0; v < prepared->graphs.finalized.size(); ++v) {
            const std::string name = "graph_view" + std::to_string(v + 1) + ".csv";
            graphs::write_adjacency_csv(prepared->graphs.finalized[v], (dir / name).string());
            files.push_back(name);
        }
    }
    if (dumps.checkpoint) {
        const fs::path ckpt = dir / "checkpoint";
        network::save_checkpoint(ckpt, r.params, fnv1a_hex(config_to_json(r.config).dump()));
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(ckpt)) names.push_back("checkpoint/" + entry.path().filename().string());
        std::sort(names.begin(), names.end());
        files.insert(files.end(), names.begin(), names.end());
    }
    return files;
}

void write_manifest(const fs::path& dir, json manifest, const std::vector<std::string>& artifacts,
                    double wall_seconds) {
    json sums = json::object();
    for (const auto& a : artifacts) sums[a] = file_checksum(dir / a);
    manifest["artifacts"] = sums;
    manifest["checksum"] = "fnv1a-64";
    manifest["prng"] = SplitMix64::kAlgorithm;
    manifest["created_utc"] = utc_timestamp();
    manifest["wall_seconds"] = wall_seconds;
    dataio::write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
    return s;
}

}  // namespace icmvc::cli
