// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#pragma once

#include "bfisim/constraints.hpp"
#include "bfisim/recon_closed.hpp"
#include "bfisim/recon_mle.hpp"
#include "bfisim/refine.hpp"

#include <cstdint>
#include <optional>

namespace bfisim {

// ---- device authentication -------------------------------------------------

// Distance-threshold verifier over normalized amplitude templates. The
// decision statistic is the RMS distance between unit-RMS amplitude vectors;
// tau sits at the impostor-distance quantile matching the FPR target.
struct DeviceProfile {
    int subcarriers = 0;
    int rx = 0;
    int tx = 0;
    int packets_per_decision = 1;
    double fpr_target = 0.05;
    double tau = 0.0;
    std::vector<double> template_amps; // unit-RMS mean enrollment vector
};

// Each impostor entry is one validation decision (batch-aggregated upstream).
DeviceProfile enroll_device(const std::vector<CsiTensor>& genuine,
                            const std::vector<CsiTensor>& impostor_decisions, double fpr_target,
                            int packets_per_decision);

struct AuthDecision {
    bool accept = false;
    double distance = 0.0;
};

// Distance of one (already batch-averaged) observation to the template.
AuthDecision authenticate(const DeviceProfile& profile, const CsiTensor& observation);
// Averages a batch of packets_per_decision packets, then decides.
AuthDecision authenticate(const DeviceProfile& profile, const std::vector<CsiTensor>& batch);

CsiTensor batch_mean(const std::vector<CsiTensor>& batch);

// ---- secret key generation ---------------------------------------------------

struct KeyConfig {
    int levels = 4;                    // power of two
    double guard_band = 0.3;           // fraction of a cell width excluded around internal edges
    double agreement_threshold = 0.9;  // reconciliation closes up to 10% mismatch
};

struct KeyMaterial {
    std::vector<uint8_t> bits;
    std::vector<uint8_t> kept; // per amplitude sample; the publicly exchanged index mask
};

// Min-max normalization, uniform quantization with guard-band dropping,
// Gray-coded bits. Deterministic.
KeyMaterial generate_key(const CsiTensor& csi, const KeyConfig& cfg);

// Key on a given public index mask (what the adversary computes after seeing
// the legitimate side's kept-index list).
std::vector<uint8_t> generate_key_with_mask(const CsiTensor& csi, const KeyConfig& cfg,
                                            const std::vector<uint8_t>& kept);

struct KeyAttackResult {
    bool success = false;
    double agreement = 0.0;
};

KeyAttackResult key_attack_success(const std::vector<uint8_t>& true_bits,
                                   const std::vector<uint8_t>& adversary_bits, const KeyConfig& cfg);

// ---- attack trials -----------------------------------------------------------

enum class AttackApp { device_auth, multi_packet_auth, key_gen };

const char* to_string(AttackApp app);
std::optional<AttackApp> attack_app_from_string(const std::string& s);

struct AppConfig {
    AttackApp app = AttackApp::device_auth;
    double fpr_target = 0.05;
    int enroll_packets = 24;
    int validation_impostors = 300;
    int packets_per_decision = 1;   // multi_packet_auth typically 50..500
    double noise_snr_db = 25.0;     // verifier-side measurement noise
    double drift_rate = 0.01;       // per-packet relative random walk of path gains
    KeyConfig key;
};

struct PipelineConfig {
    QuantConfig quant;
    SearchConfig search;
    BoundSearchConfig bounds;
    double filter_slack = 0.02;
    bool use_constraints = true;
    bool use_refine = true;
    int refine_training_packets = 48;
    double refine_blend = 1.0;
    double p_tx = 1.0;
    double p_n = 1e-3;
    PhasePolicy phase_policy = PhasePolicy::zero_phase;
};

struct AttemptOutcome {
    bool success = false;
    double metric = 0.0; // auth distance or key agreement
};

struct AttackTrial {
    uint64_t scenario_id = 0;
    Scenario scenario;
    int q = 0;                 // attempted budget after the single-antenna coercion
    bool q_coerced = false;    // true when a single-antenna scenario forced q = 1
    int candidates_total = 0;
    int candidates_after_filter = 0;
    std::vector<AttemptOutcome> attempts; // one per consumed candidate, at most q
    bool success = false;

    // Success within the first q_sub attempts (prefix inclusion).
    bool success_within(int q_sub) const;
};

// One full scenario instance end to end: synthesize, sound, reconstruct,
// filter, refine, then play the candidates against the target application.
AttackTrial run_attack_trial(const ScenarioConfig& family, const AppConfig& app,
                             const PipelineConfig& pipe, int q, uint64_t root_seed,
                             uint64_t trial_index);

// Same accounting with uniformly random amplitude candidates.
AttackTrial random_attack_baseline(const ScenarioConfig& family, const AppConfig& app,
                                   const PipelineConfig& pipe, int q, uint64_t root_seed,
                                   uint64_t trial_index);

// The three pipeline arms of the ablation on one scenario instance. The
// reconstruction search runs once; each arm re-applies its own filter and
// refinement stages to the same candidate pool, so `full` is identical to
// run_attack_trial with both stages enabled.
struct AblationOutcome {
    AttackTrial mle_only;
    AttackTrial dual_constraints;
    AttackTrial full;
};

AblationOutcome run_ablation_trial(const ScenarioConfig& family, const AppConfig& app,
                                   const PipelineConfig& pipe, int q, uint64_t root_seed,
                                   uint64_t trial_index);

double compute_asr(const std::vector<AttackTrial>& trials);        // percentage
double compute_asr_at(const std::vector<AttackTrial>& trials, int q); // prefix ASR

} // namespace bfisim
