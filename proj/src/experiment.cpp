// SPDX-License-Identifier: Apache-2.0
//
// bfisim — beamforming-feedback channel reconstruction and spoofing simulator

#include "bfisim/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace bfisim {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known, const std::string& where)
{
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

json array_to_json(const ArrayConfig& a)
{
    return json{{"tx_antennas", a.tx_antennas}, {"rx_antennas", a.rx_antennas},
                {"streams", a.streams},         {"spacing", a.spacing},
                {"carrier_freq", a.carrier_freq}, {"bandwidth", a.bandwidth},
                {"subcarrier_count", a.subcarrier_count}};
}

ArrayConfig array_from_json(const json& j)
{
    ArrayConfig a;
    reject_unknown_keys(j, {"tx_antennas", "rx_antennas", "streams", "spacing", "carrier_freq", "bandwidth",
                            "subcarrier_count"},
                        "array");
    a.tx_antennas = j.value("tx_antennas", a.tx_antennas);
    a.rx_antennas = j.value("rx_antennas", a.rx_antennas);
    a.streams = j.value("streams", a.streams);
    a.spacing = j.value("spacing", a.spacing);
    a.carrier_freq = j.value("carrier_freq", a.carrier_freq);
    a.bandwidth = j.value("bandwidth", a.bandwidth);
    a.subcarrier_count = j.value("subcarrier_count", a.subcarrier_count);
    return a;
}

json family_to_json(const ScenarioConfig& f)
{
    return json{{"array", array_to_json(f.array)},
                {"path_count_min", f.path_count_min},
                {"path_count_max", f.path_count_max},
                {"dist_min", f.dist_min},
                {"dist_max", f.dist_max},
                {"los_gain", f.los_gain},
                {"nlos_gain_ratio_min", f.nlos_gain_ratio_min},
                {"nlos_gain_ratio_max", f.nlos_gain_ratio_max},
                {"excess_delay_min", f.excess_delay_min},
                {"excess_delay_max", f.excess_delay_max},
                {"angle_max", f.angle_max}};
}

ScenarioConfig family_from_json(const json& j)
{
    ScenarioConfig f;
    reject_unknown_keys(j, {"array", "path_count_min", "path_count_max", "dist_min", "dist_max", "los_gain",
                            "nlos_gain_ratio_min", "nlos_gain_ratio_max", "excess_delay_min",
                            "excess_delay_max", "angle_max"},
                        "family");
    if (j.contains("array")) f.array = array_from_json(j.at("array"));
    f.path_count_min = j.value("path_count_min", f.path_count_min);
    f.path_count_max = j.value("path_count_max", f.path_count_max);
    f.dist_min = j.value("dist_min", f.dist_min);
    f.dist_max = j.value("dist_max", f.dist_max);
    f.los_gain = j.value("los_gain", f.los_gain);
    f.nlos_gain_ratio_min = j.value("nlos_gain_ratio_min", f.nlos_gain_ratio_min);
    f.nlos_gain_ratio_max = j.value("nlos_gain_ratio_max", f.nlos_gain_ratio_max);
    f.excess_delay_min = j.value("excess_delay_min", f.excess_delay_min);
    f.excess_delay_max = j.value("excess_delay_max", f.excess_delay_max);
    f.angle_max = j.value("angle_max", f.angle_max);
    return f;
}

json quant_to_json(const QuantConfig& q)
{
    return json{{"psi_bits", q.psi_bits},
                {"phi_bits", q.phi_bits},
                {"asnr_step_db", q.asnr_step_db},
                {"asnr_min_db", q.asnr_min_db},
                {"asnr_max_db", q.asnr_max_db}};
}

QuantConfig quant_from_json(const json& j)
{
    QuantConfig q;
    reject_unknown_keys(j, {"psi_bits", "phi_bits", "asnr_step_db", "asnr_min_db", "asnr_max_db"}, "quant");
    q.psi_bits = j.value("psi_bits", q.psi_bits);
    q.phi_bits = j.value("phi_bits", q.phi_bits);
    q.asnr_step_db = j.value("asnr_step_db", q.asnr_step_db);
    q.asnr_min_db = j.value("asnr_min_db", q.asnr_min_db);
    q.asnr_max_db = j.value("asnr_max_db", q.asnr_max_db);
    return q;
}

json search_to_json(const SearchConfig& s)
{
    return json{{"restarts", s.restarts},
                {"path_counts", s.path_counts},
                {"coarse_probes", s.coarse_probes},
                {"angle_coarse", s.angle_coarse},
                {"angle_fine", s.angle_fine},
                {"gain_mag_points", s.gain_mag_points},
                {"gain_lo", s.gain_lo},
                {"gain_hi", s.gain_hi},
                {"gain_phase_points", s.gain_phase_points},
                {"delay_max_factor", s.delay_max_factor},
                {"delay_fine_div", s.delay_fine_div},
                {"zoom_stages", s.zoom_stages},
                {"max_cycles", s.max_cycles},
                {"rel_tol", s.rel_tol}};
}

SearchConfig search_from_json(const json& j)
{
    SearchConfig s;
    reject_unknown_keys(j, {"restarts", "path_counts", "coarse_probes", "angle_coarse", "angle_fine",
                            "gain_mag_points", "gain_lo", "gain_hi", "gain_phase_points", "delay_max_factor",
                            "delay_fine_div", "zoom_stages", "max_cycles", "rel_tol"},
                        "search");
    s.restarts = j.value("restarts", s.restarts);
    s.path_counts = j.value("path_counts", s.path_counts);
    s.coarse_probes = j.value("coarse_probes", s.coarse_probes);
    s.angle_coarse = j.value("angle_coarse", s.angle_coarse);
    s.angle_fine = j.value("angle_fine", s.angle_fine);
    s.gain_mag_points = j.value("gain_mag_points", s.gain_mag_points);
    s.gain_lo = j.value("gain_lo", s.gain_lo);
    s.gain_hi = j.value("gain_hi", s.gain_hi);
    s.gain_phase_points = j.value("gain_phase_points", s.gain_phase_points);
    s.delay_max_factor = j.value("delay_max_factor", s.delay_max_factor);
    s.delay_fine_div = j.value("delay_fine_div", s.delay_fine_div);
    s.zoom_stages = j.value("zoom_stages", s.zoom_stages);
    s.max_cycles = j.value("max_cycles", s.max_cycles);
    s.rel_tol = j.value("rel_tol", s.rel_tol);
    return s;
}

json bounds_to_json(const BoundSearchConfig& b)
{
    return json{{"phi_points", b.phi_points},
                {"psi_points", b.psi_points},
                {"phi_range", b.phi_range},
                {"pool_subcarriers", b.pool_subcarriers}};
}

BoundSearchConfig bounds_from_json(const json& j)
{
    BoundSearchConfig b;
    reject_unknown_keys(j, {"phi_points", "psi_points", "phi_range", "pool_subcarriers"}, "bounds");
    b.phi_points = j.value("phi_points", b.phi_points);
    b.psi_points = j.value("psi_points", b.psi_points);
    b.phi_range = j.value("phi_range", b.phi_range);
    b.pool_subcarriers = j.value("pool_subcarriers", b.pool_subcarriers);
    return b;
}

json key_to_json(const KeyConfig& k)
{
    return json{{"levels", k.levels},
                {"guard_band", k.guard_band},
                {"agreement_threshold", k.agreement_threshold}};
}

KeyConfig key_from_json(const json& j)
{
    KeyConfig k;
    reject_unknown_keys(j, {"levels", "guard_band", "agreement_threshold"}, "key");
    k.levels = j.value("levels", k.levels);
    k.guard_band = j.value("guard_band", k.guard_band);
    k.agreement_threshold = j.value("agreement_threshold", k.agreement_threshold);
    return k;
}

json app_to_json(const AppConfig& a)
{
    return json{{"app", to_string(a.app)},
                {"fpr_target", a.fpr_target},
                {"enroll_packets", a.enroll_packets},
                {"validation_impostors", a.validation_impostors},
                {"packets_per_decision", a.packets_per_decision},
                {"noise_snr_db", a.noise_snr_db},
                {"drift_rate", a.drift_rate},
                {"key", key_to_json(a.key)}};
}

AppConfig app_from_json(const json& j)
{
    AppConfig a;
    reject_unknown_keys(j, {"app", "fpr_target", "enroll_packets", "validation_impostors",
                            "packets_per_decision", "noise_snr_db", "drift_rate", "key"},
                        "app");
    if (j.contains("app")) {
        const auto parsed = attack_app_from_string(j.at("app").get<std::string>());
        if (!parsed) throw std::invalid_argument("config: unknown application id");
        a.app = *parsed;
    }
    a.fpr_target = j.value("fpr_target", a.fpr_target);
    a.enroll_packets = j.value("enroll_packets", a.enroll_packets);
    a.validation_impostors = j.value("validation_impostors", a.validation_impostors);
    a.packets_per_decision = j.value("packets_per_decision", a.packets_per_decision);
    a.noise_snr_db = j.value("noise_snr_db", a.noise_snr_db);
    a.drift_rate = j.value("drift_rate", a.drift_rate);
    if (j.contains("key")) a.key = key_from_json(j.at("key"));
    return a;
}

json pipe_to_json(const PipelineConfig& p)
{
    return json{{"quant", quant_to_json(p.quant)},
                {"search", search_to_json(p.search)},
                {"bounds", bounds_to_json(p.bounds)},
                {"filter_slack", p.filter_slack},
                {"use_constraints", p.use_constraints},
                {"use_refine", p.use_refine},
                {"refine_training_packets", p.refine_training_packets},
                {"refine_blend", p.refine_blend},
                {"p_tx", p.p_tx},
                {"p_n", p.p_n},
                {"relative_phase", p.phase_policy == PhasePolicy::relative_anchored_last}};
}

PipelineConfig pipe_from_json(const json& j)
{
    PipelineConfig p;
    reject_unknown_keys(j, {"quant", "search", "bounds", "filter_slack", "use_constraints", "use_refine",
                            "refine_training_packets", "refine_blend", "p_tx", "p_n", "relative_phase"},
                        "pipeline");
    if (j.contains("quant")) p.quant = quant_from_json(j.at("quant"));
    if (j.contains("search")) p.search = search_from_json(j.at("search"));
    if (j.contains("bounds")) p.bounds = bounds_from_json(j.at("bounds"));
    p.filter_slack = j.value("filter_slack", p.filter_slack);
    p.use_constraints = j.value("use_constraints", p.use_constraints);
    p.use_refine = j.value("use_refine", p.use_refine);
    p.refine_training_packets = j.value("refine_training_packets", p.refine_training_packets);
    p.refine_blend = j.value("refine_blend", p.refine_blend);
    p.p_tx = j.value("p_tx", p.p_tx);
    p.p_n = j.value("p_n", p.p_n);
    if (j.value("relative_phase", false)) p.phase_policy = PhasePolicy::relative_anchored_last;
    return p;
}

} // namespace

json experiment_to_json(const ExperimentConfig& c)
{
    return json{{"name", c.name},
                {"family", family_to_json(c.family)},
                {"app", app_to_json(c.app)},
                {"pipeline", pipe_to_json(c.pipe)},
                {"q_values", c.q_values},
                {"trials", c.trials},
                {"seed", c.seed},
                {"ablation", c.ablation},
                {"with_random_baseline", c.with_random_baseline},
                {"serial", c.mode == ExecMode::serial}};
}

ExperimentConfig experiment_from_json(const json& j)
{
    ExperimentConfig c;
    reject_unknown_keys(j, {"name", "family", "app", "pipeline", "q_values", "trials", "seed", "ablation",
                            "with_random_baseline", "serial"},
                        "experiment");
    c.name = j.value("name", c.name);
    if (j.contains("family")) c.family = family_from_json(j.at("family"));
    if (j.contains("app")) c.app = app_from_json(j.at("app"));
    if (j.contains("pipeline")) c.pipe = pipe_from_json(j.at("pipeline"));
    c.q_values = j.value("q_values", c.q_values);
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    c.ablation = j.value("ablation", c.ablation);
    c.with_random_baseline = j.value("with_random_baseline", c.with_random_baseline);
    if (j.value("serial", false)) c.mode = ExecMode::serial;
    if (c.q_values.empty() || c.trials < 1) throw std::invalid_argument("config: need q_values and trials >= 1");
    for (int q : c.q_values)
        if (q < 1) throw std::invalid_argument("config: q values must be >= 1");
    c.family.validate();
    c.pipe.quant.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    in >> j;
    return experiment_from_json(j);
}

std::string experiment_digest(const ExperimentConfig& config)
{
    // The execution mode is a run knob like the thread count; it never
    // changes what an experiment computes, so it stays out of the digest.
    ExperimentConfig canonical = config;
    canonical.mode = ExecMode::parallel;
    return content_digest(experiment_to_json(canonical).dump());
}

ExperimentOutput run_attack_experiment(const ExperimentConfig& config)
{
    const int q_max = *std::max_element(config.q_values.begin(), config.q_values.end());
    const std::string digest = experiment_digest(config);

    struct TrialSet {
        std::vector<AttackTrial> mle_only, dual, full, baseline;
    };
    TrialSet set;
    set.full.resize(static_cast<size_t>(config.trials));
    if (config.ablation) {
        set.mle_only.resize(static_cast<size_t>(config.trials));
        set.dual.resize(static_cast<size_t>(config.trials));
    }
    if (config.with_random_baseline) set.baseline.resize(static_cast<size_t>(config.trials));

    const auto run_one = [&](int t) {
        const auto ti = static_cast<uint64_t>(t);
        if (config.ablation) {
            AblationOutcome abl = run_ablation_trial(config.family, config.app, config.pipe, q_max,
                                                     config.seed, ti);
            set.mle_only[static_cast<size_t>(t)] = std::move(abl.mle_only);
            set.dual[static_cast<size_t>(t)] = std::move(abl.dual_constraints);
            set.full[static_cast<size_t>(t)] = std::move(abl.full);
        } else {
            set.full[static_cast<size_t>(t)] =
                run_attack_trial(config.family, config.app, config.pipe, q_max, config.seed, ti);
        }
        if (config.with_random_baseline)
            set.baseline[static_cast<size_t>(t)] =
                random_attack_baseline(config.family, config.app, config.pipe, q_max, config.seed, ti);
    };

    if (config.mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int t = 0; t < config.trials; ++t) run_one(t);
    } else {
        for (int t = 0; t < config.trials; ++t) run_one(t);
    }

    ExperimentOutput out;
    const auto emit_rows = [&](const std::vector<AttackTrial>& trials, const std::string& arm) {
        for (int q : config.q_values) {
            ResultRow row;
            row.scenario = config.name + (arm.empty() ? "" : "/" + arm);
            row.application = to_string(config.app.app);
            row.m = config.family.array.tx_antennas;
            row.n = config.family.array.rx_antennas;
            row.bandwidth = config.family.array.bandwidth;
            row.psi_bits = config.pipe.quant.psi_bits;
            row.phi_bits = config.pipe.quant.phi_bits;
            row.q = q;
            row.trials = static_cast<int>(trials.size());
            int wins = 0;
            for (const auto& t : trials)
                if (t.success_within(q)) ++wins;
            row.successes = wins;
            row.asr_percent = 100.0 * static_cast<double>(wins) / static_cast<double>(trials.size());
            row.seed = config.seed;
            row.digest = digest;
            out.rows.push_back(std::move(row));
        }
    };

    if (config.ablation) {
        emit_rows(set.mle_only, "mle_only");
        emit_rows(set.dual, "dual_constraints");
        emit_rows(set.full, "full");
    } else {
        emit_rows(set.full, "");
    }
    if (config.with_random_baseline) emit_rows(set.baseline, "random");

    out.full_trials = std::move(set.full);
    return out;
}

SimulatedTraces simulate_traces(const ExperimentConfig& config)
{
    const std::string digest = experiment_digest(config);
    SimulatedTraces traces;
    traces.csi.resize(static_cast<size_t>(config.trials));
    traces.bfi.resize(static_cast<size_t>(config.trials));

    const auto run_one = [&](int t) {
        Rng chan = Rng::substream(config.seed, "chan", static_cast<uint64_t>(t));
        const Scenario sc = sample_random_scenario(chan, config.family);
        CsiRecord c;
        c.packet_id = static_cast<uint64_t>(t);
        c.digest = digest;
        c.csi = synthesize_csi(sc.paths, sc.array);
        BfiRecord b;
        b.packet_id = c.packet_id;
        b.digest = digest;
        b.report = encode_bfi(c.csi, config.pipe.quant, config.pipe.p_tx, config.pipe.p_n);
        traces.csi[static_cast<size_t>(t)] = std::move(c);
        traces.bfi[static_cast<size_t>(t)] = std::move(b);
    };

    if (config.mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int t = 0; t < config.trials; ++t) run_one(t);
    } else {
        for (int t = 0; t < config.trials; ++t) run_one(t);
    }
    return traces;
}

std::vector<BfiRecord> encode_trace(const std::vector<CsiRecord>& csi, const QuantConfig& quant,
                                    double p_tx, double p_n, const std::string& digest)
{
    std::vector<BfiRecord> out(csi.size());
    for (size_t i = 0; i < csi.size(); ++i) {
        out[i].packet_id = csi[i].packet_id;
        out[i].digest = digest.empty() ? csi[i].digest : digest;
        out[i].report = encode_bfi(csi[i].csi, quant, p_tx, p_n);
    }
    return out;
}

std::vector<std::vector<ReconCandidate>> reconstruct_trace(const std::vector<BfiRecord>& bfi,
                                                           const ExperimentConfig& config)
{
    std::vector<std::vector<ReconCandidate>> out(bfi.size());
    const ArrayConfig& arr = config.family.array;

    const auto run_one = [&](size_t i) {
        const BfiReport& rep = bfi[i].report;
        if (arr.rx_antennas == 1) {
            const ClosedFormResult cf = reconstruct_single_antenna(rep, config.pipe.p_tx, config.pipe.p_n);
            ReconCandidate c;
            c.csi = to_csi_tensor(cf, config.pipe.phase_policy);
            c.loss = 0.0;
            c.los_delay = 0.0;
            c.assumed_paths = 0;
            out[i] = {std::move(c)};
            return;
        }
        SearchConfig search = config.pipe.search;
        search.dist_ap_sta = 0.5 * (config.family.dist_min + config.family.dist_max);
        out[i] = multi_start_search(rep, arr, search,
                                    Rng::substream_seed(config.seed, "search", bfi[i].packet_id),
                                    config.pipe.p_tx, config.pipe.p_n);
    };

    if (config.mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(bfi.size()); ++i) run_one(static_cast<size_t>(i));
    } else {
        for (size_t i = 0; i < bfi.size(); ++i) run_one(i);
    }
    return out;
}

} // namespace bfisim
