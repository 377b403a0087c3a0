// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/trace_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bfisim {

using nlohmann::json;

std::string content_digest(const std::string& data)
{
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return std::string(buf);
}

namespace {

json csi_to_json(const CsiTensor& csi)
{
    json entries = json::array();
    for (int k = 0; k < csi.subcarriers; ++k)
        for (int v = 0; v < csi.rx; ++v)
            for (int u = 0; u < csi.tx; ++u)
                entries.push_back({csi[k](v, u).real(), csi[k](v, u).imag()});
    return json{{"k", csi.subcarriers}, {"n", csi.rx}, {"m", csi.tx}, {"entries", std::move(entries)}};
}

CsiTensor csi_from_json(const json& j)
{
    CsiTensor csi(j.at("k").get<int>(), j.at("n").get<int>(), j.at("m").get<int>());
    const auto& entries = j.at("entries");
    if (static_cast<int>(entries.size()) != csi.subcarriers * csi.rx * csi.tx)
        throw std::runtime_error("csi record: entry count mismatch");
    size_t idx = 0;
    for (int k = 0; k < csi.subcarriers; ++k)
        for (int v = 0; v < csi.rx; ++v)
            for (int u = 0; u < csi.tx; ++u) {
                csi[k](v, u) = cxd(entries[idx][0].get<double>(), entries[idx][1].get<double>());
                ++idx;
            }
    return csi;
}

json report_to_json(const BfiReport& r)
{
    json angles = json::array();
    for (const auto& a : r.angles) angles.push_back(json{{"phi", a.phi}, {"psi", a.psi}});
    return json{{"m", r.tx_antennas},
                {"ns", r.streams},
                {"k", r.subcarriers},
                {"psi_bits", r.quant.psi_bits},
                {"phi_bits", r.quant.phi_bits},
                {"asnr_step_db", r.quant.asnr_step_db},
                {"asnr_min_db", r.quant.asnr_min_db},
                {"asnr_max_db", r.quant.asnr_max_db},
                {"angles", std::move(angles)},
                {"asnr_db", r.asnr_db},
                {"sigma_floor_hit", r.sigma_floor_hit}};
}

BfiReport report_from_json(const json& j)
{
    BfiReport r;
    r.tx_antennas = j.at("m").get<int>();
    r.streams = j.at("ns").get<int>();
    r.subcarriers = j.at("k").get<int>();
    r.quant.psi_bits = j.at("psi_bits").get<int>();
    r.quant.phi_bits = j.at("phi_bits").get<int>();
    r.quant.asnr_step_db = j.at("asnr_step_db").get<double>();
    r.quant.asnr_min_db = j.at("asnr_min_db").get<double>();
    r.quant.asnr_max_db = j.at("asnr_max_db").get<double>();
    for (const auto& a : j.at("angles")) {
        QuantizedAngles qa;
        qa.phi = a.at("phi").get<std::vector<std::vector<int>>>();
        qa.psi = a.at("psi").get<std::vector<std::vector<int>>>();
        r.angles.push_back(std::move(qa));
    }
    r.asnr_db = j.at("asnr_db").get<std::vector<double>>();
    r.sigma_floor_hit = j.value("sigma_floor_hit", false);
    if (static_cast<int>(r.angles.size()) != r.subcarriers)
        throw std::runtime_error("bfi record: angle count mismatch");
    return r;
}

std::vector<json> read_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line));
    }
    return out;
}

void check_digest(const std::string& found, const std::string& expected, std::string& first,
                  const std::string& path)
{
    if (!expected.empty() && found != expected)
        throw std::runtime_error("digest mismatch in " + path + ": expected " + expected + ", found " + found);
    if (first.empty())
        first = found;
    else if (found != first)
        throw std::runtime_error("mixed config digests in " + path);
}

} // namespace

void write_csi_trace(const std::string& path, const std::vector<CsiRecord>& records)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& r : records) {
        json j = csi_to_json(r.csi);
        j["packet_id"] = r.packet_id;
        j["digest"] = r.digest;
        out << j.dump() << '\n';
    }
}

std::vector<CsiRecord> read_csi_trace(const std::string& path, const std::string& expected_digest)
{
    std::vector<CsiRecord> out;
    std::string first;
    for (const auto& j : read_jsonl(path)) {
        CsiRecord r;
        r.packet_id = j.at("packet_id").get<uint64_t>();
        r.digest = j.at("digest").get<std::string>();
        check_digest(r.digest, expected_digest, first, path);
        r.csi = csi_from_json(j);
        out.push_back(std::move(r));
    }
    return out;
}

void write_bfi_trace(const std::string& path, const std::vector<BfiRecord>& records)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& r : records) {
        json j = report_to_json(r.report);
        j["packet_id"] = r.packet_id;
        j["digest"] = r.digest;
        out << j.dump() << '\n';
    }
}

std::vector<BfiRecord> read_bfi_trace(const std::string& path, const std::string& expected_digest)
{
    std::vector<BfiRecord> out;
    std::string first;
    for (const auto& j : read_jsonl(path)) {
        BfiRecord r;
        r.packet_id = j.at("packet_id").get<uint64_t>();
        r.digest = j.at("digest").get<std::string>();
        check_digest(r.digest, expected_digest, first, path);
        r.report = report_from_json(j);
        out.push_back(std::move(r));
    }
    return out;
}

void write_candidate_dump(const std::string& path, const std::vector<std::vector<ReconCandidate>>& per_packet)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (size_t pkt = 0; pkt < per_packet.size(); ++pkt) {
        for (const auto& c : per_packet[pkt]) {
            json paths = json::array();
            for (const auto& p : c.omega.paths)
                paths.push_back({{"gain_re", p.gain.real()},
                                 {"gain_im", p.gain.imag()},
                                 {"delay", p.delay},
                                 {"aoa", p.aoa},
                                 {"aod", p.aod}});
            json j{{"packet_id", pkt},
                   {"loss", c.loss},
                   {"t_rec", c.los_delay},
                   {"assumed_paths", c.assumed_paths},
                   {"restart", c.restart_index},
                   {"theory_pass", c.theory_pass},
                   {"tof_pass", c.tof_pass},
                   {"paths", std::move(paths)},
                   {"ul_phi", c.omega.ul_angles.phi},
                   {"ul_psi", c.omega.ul_angles.psi}};
            out << j.dump() << '\n';
        }
    }
}

nlohmann::json refinement_model_to_json(const RefinementModel& model)
{
    std::vector<std::vector<double>> corr(static_cast<size_t>(model.correlations.rows()));
    for (Eigen::Index r = 0; r < model.correlations.rows(); ++r)
        for (Eigen::Index c = 0; c < model.correlations.cols(); ++c)
            corr[static_cast<size_t>(r)].push_back(model.correlations(r, c));
    return json{{"rx", model.rx},
                {"tx", model.tx},
                {"reference_pair", model.reference_pair},
                {"weights", model.weights},
                {"correlations", corr}};
}

RefinementModel refinement_model_from_json(const nlohmann::json& j)
{
    RefinementModel m;
    m.rx = j.at("rx").get<int>();
    m.tx = j.at("tx").get<int>();
    m.reference_pair = j.at("reference_pair").get<int>();
    m.weights = j.at("weights").get<std::vector<double>>();
    const auto corr = j.at("correlations").get<std::vector<std::vector<double>>>();
    m.correlations.resize(static_cast<Eigen::Index>(corr.size()), static_cast<Eigen::Index>(corr.size()));
    for (size_t r = 0; r < corr.size(); ++r)
        for (size_t c = 0; c < corr[r].size(); ++c)
            m.correlations(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = corr[r][c];
    return m;
}

// ---- CSV ---------------------------------------------------------------------

std::string results_csv_header()
{
    return "scenario,application,m,n,bandwidth_hz,psi_bits,phi_bits,q,trials,successes,asr_percent,seed,"
           "config_digest,version";
}

std::string to_csv_line(const ResultRow& row)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%.0f,%d,%d,%d,%d,%d,%.4f,%" PRIu64 ",%s,%s",
                  row.scenario.c_str(), row.application.c_str(), row.m, row.n, row.bandwidth, row.psi_bits,
                  row.phi_bits, row.q, row.trials, row.successes, row.asr_percent, row.seed,
                  row.digest.c_str(), row.version.c_str());
    return std::string(buf);
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << results_csv_header() << '\n';
    for (const auto& r : rows) out << to_csv_line(r) << '\n';
}

std::vector<ResultRow> read_results_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty results file " + path);
    if (line != results_csv_header()) throw std::runtime_error("unexpected header in " + path);
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 14) throw std::runtime_error("malformed row in " + path + ": " + line);
        ResultRow r;
        r.scenario = f[0];
        r.application = f[1];
        r.m = std::stoi(f[2]);
        r.n = std::stoi(f[3]);
        r.bandwidth = std::stod(f[4]);
        r.psi_bits = std::stoi(f[5]);
        r.phi_bits = std::stoi(f[6]);
        r.q = std::stoi(f[7]);
        r.trials = std::stoi(f[8]);
        r.successes = std::stoi(f[9]);
        r.asr_percent = std::stod(f[10]);
        r.seed = std::stoull(f[11]);
        r.digest = f[12];
        r.version = f[13];
        rows.push_back(std::move(r));
    }
    return rows;
}

ReportSummary summarize_results(const std::vector<std::vector<ResultRow>>& row_sets)
{
    if (row_sets.empty()) throw std::runtime_error("report: no input row sets");
    ReportSummary summary;
    std::set<std::string> seen;
    for (const auto& rows : row_sets) {
        for (const auto& r : rows) {
            char key[512];
            std::snprintf(key, sizeof(key), "%s|%s|%d|%d|%.0f|%d|%d|%d|%" PRIu64, r.scenario.c_str(),
                          r.application.c_str(), r.m, r.n, r.bandwidth, r.psi_bits, r.phi_bits, r.q, r.seed);
            if (!seen.insert(key).second)
                throw std::runtime_error(std::string("report: duplicate row ") + key);
            summary.rows.push_back(r);
        }
    }
    if (summary.rows.empty()) throw std::runtime_error("report: no rows to aggregate");

    struct Acc {
        double asr = 0.0;
        int count = 0;
    };
    const auto axis_summary = [&](const std::string& axis_name, auto key_of) {
        std::map<std::string, Acc> acc;
        for (const auto& r : summary.rows) {
            auto& a = acc[key_of(r) + "," + r.application];
            a.asr += r.asr_percent;
            a.count += 1;
        }
        std::vector<std::string> lines;
        lines.push_back(axis_name + ",application,rows,mean_asr_percent");
        for (const auto& [key, a] : acc) {
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%s,%d,%.4f", key.c_str(), a.count, a.asr / a.count);
            lines.push_back(buf);
        }
        summary.summaries.emplace_back(axis_name, std::move(lines));
    };

    axis_summary("antennas", [](const ResultRow& r) { return std::to_string(r.m) + "x" + std::to_string(r.n); });
    axis_summary("bandwidth_mhz", [](const ResultRow& r) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", r.bandwidth / 1e6);
        return std::string(buf);
    });
    axis_summary("q", [](const ResultRow& r) { return std::to_string(r.q); });
    axis_summary("scenario", [](const ResultRow& r) { return r.scenario; });
    return summary;
}

void write_report(const std::string& out_dir, const ReportSummary& summary)
{
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_results_csv((fs::path(out_dir) / "combined_results.csv").string(), summary.rows);
    for (const auto& [axis, lines] : summary.summaries) {
        std::ofstream out((fs::path(out_dir) / ("summary_" + axis + ".csv")).string());
        if (!out) throw std::runtime_error("cannot write report summary for " + axis);
        for (const auto& l : lines) out << l << '\n';
    }
}

} // namespace bfisim
