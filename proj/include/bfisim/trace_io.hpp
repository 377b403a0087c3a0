// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/attack_apps.hpp"
#include "bfisim/bfi_codec.hpp"
#include "bfisim/refine.hpp"
#include "bfisim/types.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace bfisim {

inline constexpr const char* kArtifactVersion = "0.1.0";

// Stable 64-bit FNV-1a content hash, hex-encoded.
std::string content_digest(const std::string& data);

struct CsiRecord {
    uint64_t packet_id = 0;
    std::string digest;
    CsiTensor csi;
};

struct BfiRecord {
    uint64_t packet_id = 0;
    std::string digest;
    BfiReport report;
};

// JSON-lines trace files; every record embeds the generating config digest
// and loads refuse mixed or unexpected digests.
void write_csi_trace(const std::string& path, const std::vector<CsiRecord>& records);
std::vector<CsiRecord> read_csi_trace(const std::string& path, const std::string& expected_digest = "");

void write_bfi_trace(const std::string& path, const std::vector<BfiRecord>& records);
std::vector<BfiRecord> read_bfi_trace(const std::string& path, const std::string& expected_digest = "");

void write_candidate_dump(const std::string& path, const std::vector<std::vector<ReconCandidate>>& per_packet);

nlohmann::json refinement_model_to_json(const RefinementModel& model);
RefinementModel refinement_model_from_json(const nlohmann::json& j);

// ---- results CSV -------------------------------------------------------------

struct ResultRow {
    std::string scenario;
    std::string application;
    int m = 0;
    int n = 0;
    double bandwidth = 0.0;
    int psi_bits = 0;
    int phi_bits = 0;
    int q = 0;
    int trials = 0;
    int successes = 0;
    double asr_percent = 0.0;
    uint64_t seed = 0;
    std::string digest;
    std::string version = kArtifactVersion;
};

std::string results_csv_header();
std::string to_csv_line(const ResultRow& row);
void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

// Aggregation for the report command: concatenates row sets, rejects
// duplicate (scenario, application, dims, q, seed) keys, and emits per-axis
// mean-ASR summaries.
struct ReportSummary {
    std::vector<ResultRow> rows;
    // axis -> lines of "axis_value,application,rows,mean_asr"
    std::vector<std::pair<std::string, std::vector<std::string>>> summaries;
};

ReportSummary summarize_results(const std::vector<std::vector<ResultRow>>& row_sets);
void write_report(const std::string& out_dir, const ReportSummary& summary);

} // namespace bfisim
