#include "pada/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "pada/csvfmt.hpp"
#include "pada/errors.hpp"

#include "json.hpp"

namespace pada {

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write file: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string ground_truth_csv(const std::vector<GroundTruthRow>& rows) {
    std::string s = "path,accuracy,seed\n";
    for (const GroundTruthRow& r : rows) {
        s += '"' + r.path + "\"," + format_double(r.accuracy) + ',' +
             std::to_string(r.seed) + '\n';
    }
    return s;
}

std::vector<GroundTruthRow> parse_ground_truth_csv(const std::string& text,
                                                   const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<GroundTruthRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "path,accuracy,seed")
                throw IoError(origin + " line 1: expected header 'path,accuracy,seed'");
            continue;
        }
        GroundTruthRow r;
        std::size_t at = 0;
        if (line.size() >= 2 && line[0] == '"') {
            const auto close = line.find('"', 1);
            if (close == std::string::npos)
                throw IoError(origin + " line " + std::to_string(line_no) +
                              ": unterminated quoted path");
            r.path = line.substr(1, close - 1);
            at = close + 1;
            if (at >= line.size() || line[at] != ',')
                throw IoError(origin + " line " + std::to_string(line_no) +
                              ": expected comma after path");
            ++at;
        } else {
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw IoError(origin + " line " + std::to_string(line_no) +
                              ": expected 3 fields");
            r.path = line.substr(0, comma);
            at = comma + 1;
        }
        const auto comma2 = line.find(',', at);
        if (comma2 == std::string::npos)
            throw IoError(origin + " line " + std::to_string(line_no) +
                          ": expected 3 fields");
        try {
            r.accuracy = std::stod(line.substr(at, comma2 - at));
            r.seed = std::stoull(line.substr(comma2 + 1));
        } catch (const std::exception&) {
            throw IoError(origin + " line " + std::to_string(line_no) +
                          ": malformed accuracy or seed");
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw IoError(origin + ": no data rows");
    return rows;
}

std::string path_dist_csv(const PathDistribution& dist) {
    std::string s = "edge,op,prob\n";
    for (std::size_t e = 0; e < dist.probs.size(); ++e)
        for (std::size_t k = 0; k < dist.probs[e].size(); ++k)
            s += std::to_string(e) + ',' + std::to_string(k) + ',' +
                 format_double(dist.probs[e][k]) + '\n';
    return s;
}

std::string data_dist_csv(const DataDistribution& dist) {
    std::string s = "sample_id,prob\n";
    for (std::size_t i = 0; i < dist.probs.size(); ++i)
        s += std::to_string(i) + ',' + format_double(dist.probs[i]) + '\n';
    return s;
}

std::string ranking_report_text(const RankingReport& report) {
    std::ostringstream out;
    out << "ranking_report\n";
    out << "  paths: " << report.path_strings.size() << '\n';
    out << "  kendall_tau: " << format_double(report.kt) << '\n';
    out << "  p_at_topk: " << format_double(report.p_at_topk)
        << " (k_frac=" << format_double(report.k_frac) << ")\n";
    out << "  seed: " << report.seed << '\n';
    if (!report.timestamp.empty()) out << "  timestamp: " << report.timestamp << '\n';
    out << "  path,supernet_acc,truth_acc\n";
    for (std::size_t i = 0; i < report.path_strings.size(); ++i)
        out << "  \"" << report.path_strings[i] << "\","
            << format_double(report.supernet_acc[i]) << ','
            << format_double(report.truth_acc[i]) << '\n';
    return out.str();
}

std::string manifest_json(const std::string& command, const RunConfig& cfg,
                          std::uint64_t dataset_fingerprint,
                          const std::map<std::string, std::string>& artifact_paths) {
    nlohmann::ordered_json j;
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    j["label"] = cfg.label;
    j["master_seed"] = cfg.train.master_seed;
    {
        std::ostringstream fp;
        fp << "0x" << std::hex << dataset_fingerprint;
        j["dataset_fingerprint"] = fp.str();
    }
    nlohmann::ordered_json conf;
    for (const auto& [k, v] : cfg.resolved()) conf[k] = v;
    j["config"] = conf;
    nlohmann::ordered_json arts;
    for (const auto& [k, v] : artifact_paths) arts[k] = v;
    j["artifacts"] = arts;
    return j.dump(2) + "\n";
}

}  // namespace pada
