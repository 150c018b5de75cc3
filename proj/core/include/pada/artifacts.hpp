#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pada/config.hpp"
#include "pada/ranking.hpp"
#include "pada/sampling.hpp"

namespace pada {

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Ground-truth table: one `path,accuracy,seed` row per sub-model.
struct GroundTruthRow {
    std::string path;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
};
std::string ground_truth_csv(const std::vector<GroundTruthRow>& rows);
std::vector<GroundTruthRow> parse_ground_truth_csv(const std::string& text,
                                                   const std::string& origin);

// Distribution dumps for inspection: `edge,op,prob` / `sample_id,prob`.
std::string path_dist_csv(const PathDistribution& dist);
std::string data_dist_csv(const DataDistribution& dist);

// Structured-text ranking report (all RankingReport fields; the
// timestamp line is informational and excluded from determinism
// guarantees).
std::string ranking_report_text(const RankingReport& report);

// Run manifest JSON: resolved config echo, master seed, dataset
// fingerprint, artifact paths, tool version. Written before training so
// a crashed run still documents what it was. Deterministic bytes.
std::string manifest_json(const std::string& command, const RunConfig& cfg,
                          std::uint64_t dataset_fingerprint,
                          const std::map<std::string, std::string>& artifact_paths);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace pada
