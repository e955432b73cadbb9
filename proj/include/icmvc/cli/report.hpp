#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "icmvc/metrics.hpp"
#include "icmvc/trainer.hpp"

namespace icmvc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitUsage = 2,
    kExitData = 3,
    kExitDivergence = 4,
};

/// Maps a library exception onto the CLI exit-code contract.
int exit_code_for(const std::exception& e);

/// Mask stream used with derive_seed when a run generates its own mask.
inline constexpr std::uint64_t kMaskStream = 0;

json config_to_json(const trainer::TrainConfig& config);
/// Applies a flat JSON object of training keys. Keys listed in `passthrough`
/// are skipped; any other unknown key is a ConfigError.
void apply_config_json(trainer::TrainConfig& config, const json& flat,
                       const std::vector<std::string>& passthrough = {});

/// Sets the loss flags for an ablation name: full, no-ins, no-hg, no-hg-no-clu.
void apply_ablation(trainer::TrainConfig& config, const std::string& name);

json metrics_to_json(const metrics::MetricsReport& report);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string file_checksum(const fs::path& path);

std::string history_csv(const trainer::TrainResult& result);

struct RunContext {
    double eta = 0.0;
    std::size_t incomplete = 0;
    bool mask_from_file = false;
};

struct DumpOptions {
    bool embeddings = false;
    bool graphs = false;
    bool checkpoint = false;
};

/// metrics.json, history.csv, labels.csv and any requested dumps. Returns the
/// file names relative to `dir`.
std::vector<std::string> write_run_outputs(const fs::path& dir, const trainer::TrainResult& result,
                                           const RunContext& context, const DumpOptions& dumps = {},
                                           const trainer::Prepared* prepared = nullptr);

/// Writes manifest.json with FNV-1a checksums of `artifacts`. The timestamp
/// and wall time live only here.
void write_manifest(const fs::path& dir, json manifest, const std::vector<std::string>& artifacts,
                    double wall_seconds);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t count = 0;
};

Summary summarize(const std::vector<double>& values);

}  // namespace icmvc::cli
