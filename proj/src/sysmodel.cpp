#include "urllc/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace urllc {

void SystemConfig::validate() const {
    auto fail = [](const std::string &msg) { throw std::invalid_argument("SystemConfig: " + msg); };
    if (K <= 0) fail("K must be positive");
    if (M_u <= 0 || M_d <= 0) fail("sub-carrier counts must be positive");
    if (N_u <= 0 || N_d <= 0) fail("slot counts must be positive");
    if (tau < 0 || tau > N_u) fail("tau must satisfy 0 <= tau <= N_u");
    if (bw_subcarrier_hz <= 0) fail("sub-carrier bandwidth must be positive");
    if (p_max_w <= 0) fail("P_max must be positive");
    if (r_inner_m <= 0 || r_outer_m < r_inner_m) fail("radii must satisfy 0 < r1 <= r2");
    auto need_k = [&](size_t n, const char *name) {
        if (n != static_cast<size_t>(K)) fail(std::string(name) + " must have K entries");
    };
    need_k(p_user_max_w.size(), "p_user_max");
    need_k(task_bits.size(), "task_bits");
    need_k(deadline_slots.size(), "deadline_slots");
    need_k(gamma_ratio.size(), "gamma");
    need_k(eps_u.size(), "eps_uplink");
    need_k(eps_d.size(), "eps_downlink");
    need_k(weights.size(), "weights");
    for (int k = 0; k < K; ++k) {
        if (p_user_max_w[k] <= 0) fail("per-user power budget must be positive");
        if (task_bits[k] <= 0) fail("B_k must be positive");
        if (!(deadline_slots[k] > tau && deadline_slots[k] <= tau + N_d))
            fail("deadline must satisfy tau < D_k <= tau + N_d");
        if (gamma_ratio[k] <= 0) fail("Gamma_k must be positive");
        if (!(eps_u[k] > 0 && eps_u[k] < 1)) fail("eps_u must be in (0,1)");
        if (!(eps_d[k] > 0 && eps_d[k] < 1)) fail("eps_d must be in (0,1)");
        if (weights[k] < 1.0) fail("weights must be >= 1");
    }
}

void SystemConfig::apply_default_penalties() {
    if (eta1_w <= 0) {
        double pk = p_user_max_w.empty() ? 0.0
                                         : *std::max_element(p_user_max_w.begin(), p_user_max_w.end());
        eta1_w = 10.0 * K * pk;
    }
    if (eta2_w <= 0) eta2_w = 10.0 * p_max_w;
}

double path_loss_db(double distance_m) {
    if (distance_m <= 0.0) throw std::domain_error("path_loss_db: distance must be positive");
    return 35.3 + 37.6 * std::log10(distance_m);
}

double noise_power_w(const SystemConfig &cfg) {
    double dbm = cfg.noise_psd_dbm_hz + 10.0 * std::log10(cfg.bw_subcarrier_hz);
    return dbm_to_watt(dbm);
}

double snr(double gain_per_w, double power_w) {
    if (gain_per_w <= 0.0) throw std::domain_error("snr: gain must be positive");
    if (power_w < 0.0) throw std::domain_error("snr: power must be nonnegative");
    return gain_per_w * power_w;
}

ChannelRealization draw_realization(const SystemConfig &cfg, uint64_t seed) {
    ChannelRealization real;
    real.seed = seed;
    Rng rng(seed);
    const double sigma2 = noise_power_w(cfg);

    // Fixed draw order: distances for k = 0..K-1, then uplink gains (k-major,
    // then m), then downlink gains.
    real.distance_m.resize(cfg.K);
    const double r1sq = cfg.r_inner_m * cfg.r_inner_m;
    const double r2sq = cfg.r_outer_m * cfg.r_outer_m;
    for (int k = 0; k < cfg.K; ++k)
        real.distance_m[k] = std::sqrt(r1sq + rng.next_u01() * (r2sq - r1sq));

    auto draw_link = [&](int M) {
        std::vector<std::vector<double>> g(cfg.K, std::vector<double>(M));
        for (int k = 0; k < cfg.K; ++k) {
            double large_scale = db_to_linear(-path_loss_db(real.distance_m[k]));
            for (int m = 0; m < M; ++m) g[k][m] = rng.next_exp() * large_scale / sigma2;
        }
        return g;
    };
    real.g_u = draw_link(cfg.M_u);
    real.g_d = draw_link(cfg.M_d);
    return real;
}

namespace {

using nlohmann::json;

std::vector<double> per_user(const json &j, const char *key, int K, double fallback,
                             bool required = false) {
    if (!j.contains(key)) {
        if (required) throw std::invalid_argument(std::string("config: missing field ") + key);
        return std::vector<double>(K, fallback);
    }
    const json &v = j.at(key);
    if (v.is_array()) {
        std::vector<double> out = v.get<std::vector<double>>();
        if (out.size() != static_cast<size_t>(K))
            throw std::invalid_argument(std::string("config: ") + key + " must have K entries");
        return out;
    }
    return std::vector<double>(K, v.get<double>());
}

} // namespace

SystemConfig parse_config(const std::string &json_text) {
    json j = json::parse(json_text);
    SystemConfig cfg;
    cfg.K = j.at("K").get<int>();
    cfg.M_u = j.at("M_u").get<int>();
    cfg.M_d = j.at("M_d").get<int>();
    cfg.N_u = j.at("N_u").get<int>();
    cfg.N_d = j.at("N_d").get<int>();
    cfg.tau = j.at("tau").get<int>();
    cfg.bw_subcarrier_hz = j.at("bw_subcarrier_hz").get<double>();
    cfg.noise_psd_dbm_hz = j.at("noise_psd_dbm_hz").get<double>();
    cfg.p_max_w = dbm_to_watt(j.at("p_max_dbm").get<double>());
    for (double v : per_user(j, "p_user_max_dbm", cfg.K, 0.0, true))
        cfg.p_user_max_w.push_back(dbm_to_watt(v));
    cfg.task_bits = per_user(j, "task_bits", cfg.K, 0.0, true);
    for (double v : per_user(j, "deadline_slots", cfg.K, 0.0, true))
        cfg.deadline_slots.push_back(static_cast<int>(std::lround(v)));
    cfg.gamma_ratio = per_user(j, "gamma", cfg.K, 1.0);
    cfg.eps_u = per_user(j, "eps_uplink", cfg.K, 1e-6);
    cfg.eps_d = per_user(j, "eps_downlink", cfg.K, 1e-6);
    cfg.weights = per_user(j, "weights", cfg.K, 1.0);
    cfg.r_inner_m = j.value("r_inner_m", 50.0);
    cfg.r_outer_m = j.value("r_outer_m", 100.0);
    cfg.eta1_w = j.value("eta1_w", 0.0);
    cfg.eta2_w = j.value("eta2_w", 0.0);
    cfg.apply_default_penalties();
    cfg.validate();
    return cfg;
}

SystemConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

SystemConfig make_scenario(int K, int M, int N, int tau, double task_bits, double eps) {
    SystemConfig cfg;
    cfg.K = K;
    cfg.M_u = cfg.M_d = M;
    cfg.N_u = cfg.N_d = N;
    cfg.tau = tau;
    cfg.bw_subcarrier_hz = 30e3;
    cfg.noise_psd_dbm_hz = -174.0;
    cfg.p_max_w = dbm_to_watt(45.0);
    cfg.p_user_max_w.assign(K, dbm_to_watt(23.0));
    cfg.task_bits.assign(K, task_bits);
    cfg.deadline_slots.assign(K, tau + N);
    cfg.gamma_ratio.assign(K, 1.0);
    cfg.eps_u.assign(K, eps);
    cfg.eps_d.assign(K, eps);
    cfg.weights.assign(K, 1.0);
    cfg.r_inner_m = 50.0;
    cfg.r_outer_m = 100.0;
    cfg.apply_default_penalties();
    cfg.validate();
    return cfg;
}

} // namespace

SystemConfig default_desk_config() {
    // 2M = 16 sub-carriers; a longer frame keeps the per-user load per
    // resource cell comparable to the full-scale setup.
    return make_scenario(/*K=*/2, /*M=*/8, /*N=*/8, /*tau=*/7, /*bits=*/160.0, /*eps=*/1e-6);
}

SystemConfig default_full_config() {
    return make_scenario(/*K=*/4, /*M=*/32, /*N=*/4, /*tau=*/3, /*bits=*/160.0, /*eps=*/1e-6);
}

void apply_delay_scenario(SystemConfig &cfg, const std::string &scenario) {
    if (scenario == "none" || scenario.empty()) return;
    int relaxed = cfg.tau + cfg.N_d;
    if (scenario == "S0" || scenario == "Sbar0") {
        cfg.deadline_slots.assign(cfg.K, relaxed);
    } else if (scenario == "S1" || scenario == "Sbar1") {
        int strict = relaxed - 2;
        if (strict <= cfg.tau)
            throw std::invalid_argument("apply_delay_scenario: frame too short for strict deadlines");
        int n_strict = (cfg.K + 1) / 2;
        for (int k = 0; k < cfg.K; ++k)
            cfg.deadline_slots[k] = (k < n_strict) ? strict : relaxed;
    } else {
        throw std::invalid_argument("apply_delay_scenario: unknown scenario " + scenario);
    }
    cfg.validate();
}

} // namespace urllc
