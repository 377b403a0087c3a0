// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/attack_apps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bfisim {

namespace {

std::vector<double> normalize_rms(std::vector<double> v)
{
    double acc = 0.0;
    for (double x : v) acc += x * x;
    const double rms = std::sqrt(acc / static_cast<double>(v.size()));
    if (rms <= 0.0) return v;
    for (double& x : v) x /= rms;
    return v;
}

double rms_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

} // namespace

CsiTensor batch_mean(const std::vector<CsiTensor>& batch)
{
    if (batch.empty()) throw std::invalid_argument("batch_mean: empty batch");
    CsiTensor out = batch.front();
    for (size_t i = 1; i < batch.size(); ++i) {
        if (!out.same_shape(batch[i])) throw std::invalid_argument("batch_mean: shape mismatch");
        for (int k = 0; k < out.subcarriers; ++k) out[k] += batch[i][k];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (int k = 0; k < out.subcarriers; ++k) out[k] *= inv;
    return out;
}

DeviceProfile enroll_device(const std::vector<CsiTensor>& genuine,
                            const std::vector<CsiTensor>& impostor_decisions, double fpr_target,
                            int packets_per_decision)
{
    if (genuine.size() < 10) throw std::invalid_argument("enroll_device: need >= 10 genuine packets");
    if (impostor_decisions.empty()) throw std::invalid_argument("enroll_device: need impostor validation data");
    if (fpr_target <= 0.0 || fpr_target >= 1.0) throw std::invalid_argument("enroll_device: bad FPR target");
    if (packets_per_decision < 1) throw std::invalid_argument("enroll_device: packets_per_decision >= 1");

    DeviceProfile prof;
    prof.subcarriers = genuine.front().subcarriers;
    prof.rx = genuine.front().rx;
    prof.tx = genuine.front().tx;
    prof.packets_per_decision = packets_per_decision;
    prof.fpr_target = fpr_target;

    std::vector<double> mean(static_cast<size_t>(prof.subcarriers) * prof.rx * prof.tx, 0.0);
    for (const auto& g : genuine) {
        const auto a = normalize_rms(g.amplitudes());
        if (a.size() != mean.size()) throw std::invalid_argument("enroll_device: genuine shape mismatch");
        for (size_t i = 0; i < a.size(); ++i) mean[i] += a[i];
    }
    for (double& x : mean) x /= static_cast<double>(genuine.size());
    prof.template_amps = normalize_rms(std::move(mean));

    std::vector<double> dists;
    dists.reserve(impostor_decisions.size());
    for (const auto& imp : impostor_decisions)
        dists.push_back(rms_distance(normalize_rms(imp.amplitudes()), prof.template_amps));
    std::sort(dists.begin(), dists.end());
    const size_t n = dists.size();
    const size_t k = std::clamp<size_t>(static_cast<size_t>(std::floor(fpr_target * static_cast<double>(n))),
                                        1, n);
    prof.tau = dists[k - 1];
    return prof;
}

AuthDecision authenticate(const DeviceProfile& profile, const CsiTensor& observation)
{
    if (observation.subcarriers != profile.subcarriers || observation.rx != profile.rx ||
        observation.tx != profile.tx)
        throw std::invalid_argument("authenticate: observation shape mismatch");
    AuthDecision d;
    d.distance = rms_distance(normalize_rms(observation.amplitudes()), profile.template_amps);
    d.accept = d.distance <= profile.tau;
    return d;
}

AuthDecision authenticate(const DeviceProfile& profile, const std::vector<CsiTensor>& batch)
{
    if (static_cast<int>(batch.size()) != profile.packets_per_decision)
        throw std::invalid_argument("authenticate: batch size != packets_per_decision");
    return authenticate(profile, batch_mean(batch));
}

// ---- keys -------------------------------------------------------------------

namespace {

int bits_per_sample(int levels)
{
    if (levels < 2 || (levels & (levels - 1)) != 0)
        throw std::invalid_argument("key: quantization levels must be a power of two >= 2");
    int b = 0;
    while ((1 << b) < levels) ++b;
    return b;
}

void append_gray_bits(std::vector<uint8_t>& bits, int cell, int nbits)
{
    const int gray = cell ^ (cell >> 1);
    for (int b = nbits - 1; b >= 0; --b) bits.push_back(static_cast<uint8_t>((gray >> b) & 1));
}

} // namespace

KeyMaterial generate_key(const CsiTensor& csi, const KeyConfig& cfg)
{
    const int nbits = bits_per_sample(cfg.levels);
    const auto amps = csi.amplitudes();
    double lo = amps.empty() ? 0.0 : amps[0];
    double hi = lo;
    for (double a : amps) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    const double span = hi - lo;

    KeyMaterial km;
    km.kept.resize(amps.size(), 1);
    const double cell_w = 1.0 / static_cast<double>(cfg.levels);
    const double guard = 0.5 * cfg.guard_band * cell_w;
    for (size_t i = 0; i < amps.size(); ++i) {
        const double x = span > 0.0 ? (amps[i] - lo) / span : 0.5; // flat profile maps to mid scale
        int cell = std::min(static_cast<int>(std::floor(x * cfg.levels)), cfg.levels - 1);
        // drop samples inside the guard band of an internal cell edge
        bool keep = true;
        for (int e = 1; e < cfg.levels; ++e) {
            if (std::abs(x - static_cast<double>(e) * cell_w) < guard) {
                keep = false;
                break;
            }
        }
        km.kept[i] = keep ? 1 : 0;
        if (keep) append_gray_bits(km.bits, cell, nbits);
    }
    return km;
}

std::vector<uint8_t> generate_key_with_mask(const CsiTensor& csi, const KeyConfig& cfg,
                                            const std::vector<uint8_t>& kept)
{
    const int nbits = bits_per_sample(cfg.levels);
    const auto amps = csi.amplitudes();
    if (kept.size() != amps.size()) throw std::invalid_argument("generate_key_with_mask: mask length mismatch");
    double lo = amps.empty() ? 0.0 : amps[0];
    double hi = lo;
    for (double a : amps) {
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    const double span = hi - lo;

    std::vector<uint8_t> bits;
    for (size_t i = 0; i < amps.size(); ++i) {
        if (!kept[i]) continue;
        const double x = span > 0.0 ? (amps[i] - lo) / span : 0.5;
        const int cell = std::min(static_cast<int>(std::floor(x * cfg.levels)), cfg.levels - 1);
        append_gray_bits(bits, cell, nbits);
    }
    return bits;
}

KeyAttackResult key_attack_success(const std::vector<uint8_t>& true_bits,
                                   const std::vector<uint8_t>& adversary_bits, const KeyConfig& cfg)
{
    if (true_bits.size() != adversary_bits.size())
        throw std::invalid_argument("key_attack_success: key length mismatch");
    KeyAttackResult r;
    if (true_bits.empty()) return r; // nothing agreed on, counted as failure
    size_t match = 0;
    for (size_t i = 0; i < true_bits.size(); ++i)
        if (true_bits[i] == adversary_bits[i]) ++match;
    r.agreement = static_cast<double>(match) / static_cast<double>(true_bits.size());
    r.success = r.agreement >= cfg.agreement_threshold;
    return r;
}

// ---- trials ----------------------------------------------------------------

const char* to_string(AttackApp app)
{
    switch (app) {
    case AttackApp::device_auth: return "device_auth";
    case AttackApp::multi_packet_auth: return "multi_packet_auth";
    case AttackApp::key_gen: return "key_gen";
    }
    return "unknown";
}

std::optional<AttackApp> attack_app_from_string(const std::string& s)
{
    if (s == "device_auth") return AttackApp::device_auth;
    if (s == "multi_packet_auth") return AttackApp::multi_packet_auth;
    if (s == "key_gen") return AttackApp::key_gen;
    return std::nullopt;
}

bool AttackTrial::success_within(int q_sub) const
{
    const int n = std::min<int>(q_sub, static_cast<int>(attempts.size()));
    for (int i = 0; i < n; ++i)
        if (attempts[static_cast<size_t>(i)].success) return true;
    return false;
}

namespace {

// Per-packet multiplicative random walk on the path gains.
std::vector<std::vector<PathParams>> drift_series(const std::vector<PathParams>& base, int count,
                                                  double rate, Rng& rng)
{
    std::vector<std::vector<PathParams>> out;
    out.reserve(static_cast<size_t>(count));
    std::vector<PathParams> cur = base;
    for (int t = 0; t < count; ++t) {
        out.push_back(cur);
        for (auto& p : cur) {
            const cxd step(1.0 + rate * rng.normal() / std::sqrt(2.0), rate * rng.normal() / std::sqrt(2.0));
            p.gain *= step;
        }
    }
    return out;
}

struct TrialContext {
    Scenario scenario;
    std::vector<std::vector<PathParams>> drift; // enrollment packets then the attack instant
    CsiTensor attack_csi;                       // channel at sounding time, noiseless
    DeviceProfile profile;                      // auth apps
    KeyMaterial true_key;                       // key app
    double amp_range = 0.0;                     // physical amplitude cap for the random baseline
};

// Everything the verifier and the legitimate side contribute to one trial;
// identical between the reconstruction attack and the random baseline.
TrialContext build_trial_context(const ScenarioConfig& family, const AppConfig& app,
                                 uint64_t root_seed, uint64_t trial_index)
{
    TrialContext ctx;
    Rng chan = Rng::substream(root_seed, "chan", trial_index);
    ctx.scenario = sample_random_scenario(chan, family);

    const int t_batch = app.app == AttackApp::multi_packet_auth ? app.packets_per_decision : 1;
    Rng drift_rng = Rng::substream(root_seed, "drift", trial_index);
    ctx.drift = drift_series(ctx.scenario.paths, app.enroll_packets + 1, app.drift_rate, drift_rng);
    ctx.attack_csi = synthesize_csi(ctx.drift.back(), ctx.scenario.array);

    ctx.amp_range = family.los_gain *
                    (1.0 + family.nlos_gain_ratio_max * static_cast<double>(family.path_count_max - 1));

    Rng noise = Rng::substream(root_seed, "noise", trial_index);
    if (app.app == AttackApp::key_gen) {
        const CsiTensor measured = add_measurement_noise(ctx.attack_csi, app.noise_snr_db, noise);
        ctx.true_key = generate_key(measured, app.key);
        return ctx;
    }

    std::vector<CsiTensor> genuine;
    genuine.reserve(static_cast<size_t>(app.enroll_packets));
    for (int e = 0; e < app.enroll_packets; ++e)
        genuine.push_back(add_measurement_noise(synthesize_csi(ctx.drift[static_cast<size_t>(e)], ctx.scenario.array),
                                                app.noise_snr_db, noise));

    // Impostor decisions: independent channels from the same family; batch
    // averaging only attenuates the measurement noise, so the batch mean is
    // drawn directly at the equivalent SNR.
    const double batch_snr = app.noise_snr_db + 10.0 * std::log10(static_cast<double>(t_batch));
    Rng imp = Rng::substream(root_seed, "impostor", trial_index);
    std::vector<CsiTensor> impostors;
    impostors.reserve(static_cast<size_t>(app.validation_impostors));
    for (int i = 0; i < app.validation_impostors; ++i) {
        const Scenario s = sample_random_scenario(imp, family);
        impostors.push_back(add_measurement_noise(synthesize_csi(s.paths, s.array), batch_snr, imp));
    }
    ctx.profile = enroll_device(genuine, impostors, app.fpr_target, t_batch);
    return ctx;
}

AttemptOutcome evaluate_attempt(const TrialContext& ctx, const AppConfig& app, const CsiTensor& candidate)
{
    AttemptOutcome out;
    if (app.app == AttackApp::key_gen) {
        const auto adv = generate_key_with_mask(candidate, app.key, ctx.true_key.kept);
        const auto r = key_attack_success(ctx.true_key.bits, adv, app.key);
        out.success = r.success;
        out.metric = r.agreement;
    } else {
        // The precoded signal arrives as the candidate CSI itself; the batch
        // mean of identical presentations is the candidate.
        const auto d = authenticate(ctx.profile, candidate);
        out.success = d.accept;
        out.metric = d.distance;
    }
    return out;
}

struct SearchOutput {
    bool single_antenna = false;
    BfiReport report;
    std::vector<ReconCandidate> candidates; // multi-antenna pool, pre-filter
    CsiTensor closed_form;                  // single-antenna payload
};

SearchOutput search_stage(const TrialContext& ctx, const PipelineConfig& pipe, uint64_t root_seed,
                          uint64_t trial_index)
{
    SearchOutput out;
    const ArrayConfig& arr = ctx.scenario.array;
    out.report = encode_bfi(ctx.attack_csi, pipe.quant, pipe.p_tx, pipe.p_n);
    out.single_antenna = arr.rx_antennas == 1;
    if (out.single_antenna) {
        const ClosedFormResult cf = reconstruct_single_antenna(out.report, pipe.p_tx, pipe.p_n);
        out.closed_form = to_csi_tensor(cf, pipe.phase_policy);
        return out;
    }
    SearchConfig search = pipe.search;
    search.dist_ap_sta = ctx.scenario.distance;
    out.candidates = multi_start_search(out.report, arr, search,
                                        Rng::substream_seed(root_seed, "search", trial_index), pipe.p_tx,
                                        pipe.p_n);
    return out;
}

std::vector<CsiTensor> arm_candidates(const TrialContext& ctx, const ScenarioConfig& family,
                                      const PipelineConfig& pipe, const SearchOutput& search,
                                      bool use_constraints, bool use_refine, uint64_t root_seed,
                                      uint64_t trial_index, int* total, int* after_filter)
{
    if (search.single_antenna) {
        *total = 1;
        *after_filter = 1;
        return {search.closed_form};
    }

    const ArrayConfig& arr = ctx.scenario.array;
    std::vector<ReconCandidate> cands = search.candidates;
    *total = static_cast<int>(cands.size());

    if (use_constraints) {
        const AmplitudeBounds bounds = amplitude_bounds(search.report, arr, pipe.bounds, pipe.p_tx, pipe.p_n);
        const TofContext tof{ctx.scenario.distance, arr.bandwidth};
        cands = filter_candidates(std::move(cands), bounds, tof, pipe.filter_slack);
    }
    *after_filter = static_cast<int>(cands.size());

    if (use_refine && !cands.empty()) {
        // Adversary-side training data: same propagation family, fresh
        // endpoints, collected offline.
        Rng train_rng = Rng::substream(root_seed, "refine", trial_index);
        ScenarioConfig train_family = family;
        train_family.array = arr;
        std::vector<CsiTensor> training;
        training.reserve(static_cast<size_t>(pipe.refine_training_packets));
        for (int i = 0; i < pipe.refine_training_packets; ++i) {
            const Scenario s = sample_random_scenario(train_rng, train_family);
            training.push_back(synthesize_csi(s.paths, s.array));
        }
        const int ref = select_reference_pair(training);
        const RefinementModel model = fit_weights(training, ref);
        for (auto& c : cands) c = apply_refinement(c, model, pipe.refine_blend);
    }

    std::vector<CsiTensor> out;
    out.reserve(cands.size());
    for (auto& c : cands) out.push_back(std::move(c.csi));
    return out;
}

AttackTrial evaluate_arm(const TrialContext& ctx, const ScenarioConfig& family, const AppConfig& app,
                         const PipelineConfig& pipe, const SearchOutput& search, bool use_constraints,
                         bool use_refine, int q, uint64_t root_seed, uint64_t trial_index)
{
    AttackTrial trial;
    trial.scenario_id = trial_index;
    trial.scenario = ctx.scenario;
    trial.q_coerced = ctx.scenario.array.rx_antennas == 1 && q > 1;
    trial.q = trial.q_coerced ? 1 : q;

    const auto candidates = arm_candidates(ctx, family, pipe, search, use_constraints, use_refine,
                                           root_seed, trial_index, &trial.candidates_total,
                                           &trial.candidates_after_filter);
    const int attempts = std::min<int>(trial.q, static_cast<int>(candidates.size()));
    for (int a = 0; a < attempts; ++a) {
        trial.attempts.push_back(evaluate_attempt(ctx, app, candidates[static_cast<size_t>(a)]));
        if (trial.attempts.back().success) trial.success = true;
    }
    return trial;
}

} // namespace

AttackTrial run_attack_trial(const ScenarioConfig& family, const AppConfig& app,
                             const PipelineConfig& pipe, int q, uint64_t root_seed, uint64_t trial_index)
{
    if (q < 1) throw std::invalid_argument("run_attack_trial: q must be >= 1");
    const TrialContext ctx = build_trial_context(family, app, root_seed, trial_index);
    const SearchOutput search = search_stage(ctx, pipe, root_seed, trial_index);
    return evaluate_arm(ctx, family, app, pipe, search, pipe.use_constraints, pipe.use_refine, q,
                        root_seed, trial_index);
}

AblationOutcome run_ablation_trial(const ScenarioConfig& family, const AppConfig& app,
                                   const PipelineConfig& pipe, int q, uint64_t root_seed,
                                   uint64_t trial_index)
{
    if (q < 1) throw std::invalid_argument("run_ablation_trial: q must be >= 1");
    const TrialContext ctx = build_trial_context(family, app, root_seed, trial_index);
    const SearchOutput search = search_stage(ctx, pipe, root_seed, trial_index);
    AblationOutcome out;
    out.mle_only = evaluate_arm(ctx, family, app, pipe, search, false, false, q, root_seed, trial_index);
    out.dual_constraints = evaluate_arm(ctx, family, app, pipe, search, true, false, q, root_seed, trial_index);
    out.full = evaluate_arm(ctx, family, app, pipe, search, true, true, q, root_seed, trial_index);
    return out;
}

AttackTrial random_attack_baseline(const ScenarioConfig& family, const AppConfig& app,
                                   const PipelineConfig& pipe, int q, uint64_t root_seed,
                                   uint64_t trial_index)
{
    if (q < 1) throw std::invalid_argument("random_attack_baseline: q must be >= 1");
    TrialContext ctx = build_trial_context(family, app, root_seed, trial_index);

    AttackTrial trial;
    trial.scenario_id = trial_index;
    trial.scenario = ctx.scenario;
    trial.q_coerced = ctx.scenario.array.rx_antennas == 1 && q > 1;
    trial.q = trial.q_coerced ? 1 : q;
    trial.candidates_total = trial.q;
    trial.candidates_after_filter = trial.q;

    Rng rng = Rng::substream(root_seed, "baseline", trial_index);
    const ArrayConfig& arr = ctx.scenario.array;
    for (int a = 0; a < trial.q; ++a) {
        CsiTensor guess(arr.n_subcarriers(), arr.rx_antennas, arr.tx_antennas);
        for (int k = 0; k < guess.subcarriers; ++k)
            for (int v = 0; v < guess.rx; ++v)
                for (int u = 0; u < guess.tx; ++u)
                    guess[k](v, u) = cxd(rng.uniform(0.0, ctx.amp_range), 0.0);
        trial.attempts.push_back(evaluate_attempt(ctx, app, guess));
        if (trial.attempts.back().success) trial.success = true;
    }
    return trial;
}

double compute_asr(const std::vector<AttackTrial>& trials)
{
    if (trials.empty()) throw std::invalid_argument("compute_asr: empty trial list");
    size_t wins = 0;
    for (const auto& t : trials)
        if (t.success) ++wins;
    return 100.0 * static_cast<double>(wins) / static_cast<double>(trials.size());
}

double compute_asr_at(const std::vector<AttackTrial>& trials, int q)
{
    if (trials.empty()) throw std::invalid_argument("compute_asr_at: empty trial list");
    size_t wins = 0;
    for (const auto& t : trials)
        if (t.success_within(q)) ++wins;
    return 100.0 * static_cast<double>(wins) / static_cast<double>(trials.size());
}

} // namespace bfisim
