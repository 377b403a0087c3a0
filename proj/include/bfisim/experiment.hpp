// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/attack_apps.hpp"
#include "bfisim/trace_io.hpp"

#include <json.hpp>

namespace bfisim {

// One declarative experiment: a scenario family, a target application, the
// pipeline toggles and the trial budget. Every field has a default; flags
// override file values which override defaults.
struct ExperimentConfig {
    std::string name = "default";
    ScenarioConfig family;
    AppConfig app;
    PipelineConfig pipe;
    std::vector<int> q_values = {5};
    int trials = 100;
    uint64_t seed = 1;
    bool ablation = false;
    bool with_random_baseline = false;
    ExecMode mode = ExecMode::parallel;
};

nlohmann::json experiment_to_json(const ExperimentConfig& config);
// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical digest over the serialized config (seed included).
std::string experiment_digest(const ExperimentConfig& config);

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::vector<AttackTrial> full_trials; // full-pipeline trials, for diagnostics and dumps
};

// Deterministic for a fixed config+seed regardless of mode/thread count.
ExperimentOutput run_attack_experiment(const ExperimentConfig& config);

struct SimulatedTraces {
    std::vector<CsiRecord> csi;
    std::vector<BfiRecord> bfi;
};

// Ground-truth and report traces for `trials` scenario draws (one packet each).
SimulatedTraces simulate_traces(const ExperimentConfig& config);

// Station-side encoding of an existing CSI trace.
std::vector<BfiRecord> encode_trace(const std::vector<CsiRecord>& csi, const QuantConfig& quant,
                                    double p_tx, double p_n, const std::string& digest);

// Reconstruction of every report in a BFI trace (closed form when the family
// is single-antenna, the multi-start search otherwise).
std::vector<std::vector<ReconCandidate>> reconstruct_trace(const std::vector<BfiRecord>& bfi,
                                                           const ExperimentConfig& config);

} // namespace bfisim
