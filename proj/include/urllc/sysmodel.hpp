#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urllc/common.hpp"

namespace urllc {

/// Static scenario parameters. Powers are stored in watts; dBm only appears in
/// the config file and in reports.
struct SystemConfig {
    int K = 0;                     // number of users
    int M_u = 0, M_d = 0;          // sub-carriers per link
    int N_u = 0, N_d = 0;          // time slots per link
    int tau = 0;                   // downlink start offset in slots
    double bw_subcarrier_hz = 0;   // BW_s
    double noise_psd_dbm_hz = 0;   // noise power spectral density
    double p_max_w = 0;            // BS power budget
    std::vector<double> p_user_max_w;   // per-user power budget
    std::vector<double> task_bits;      // B_k
    std::vector<int> deadline_slots;    // D_k, absolute slots
    std::vector<double> gamma_ratio;    // downlink/uplink size ratio
    std::vector<double> eps_u, eps_d;   // packet error probabilities
    std::vector<double> weights;        // uplink power weights, >= 1
    double r_inner_m = 0, r_outer_m = 0;
    double eta1_w = 0, eta2_w = 0;      // penalty factors

    int overlap() const { return N_u - tau; }
    double symbol_duration_s() const { return 1.0 / bw_subcarrier_hz; }

    /// Throws std::invalid_argument when any invariant fails.
    void validate() const;

    /// Fills eta1/eta2 with the default 10*K*max_k(P_k_max) and 10*P_max when
    /// they are unset (<= 0).
    void apply_default_penalties();
};

/// Per-user, per-sub-carrier normalized channel gains |h|^2 / sigma^2 (1/W).
struct ChannelRealization {
    std::vector<std::vector<double>> g_u;  // [k][m_u]
    std::vector<std::vector<double>> g_d;  // [k][m_d]
    std::vector<double> distance_m;        // d_k
    uint64_t seed = 0;
};

/// 35.3 + 37.6*log10(d); throws std::domain_error for d <= 0.
double path_loss_db(double distance_m);

/// Noise power per sub-carrier in watts from the PSD and sub-carrier bandwidth.
double noise_power_w(const SystemConfig &cfg);

/// SNR of one resource: gamma = g * p.
double snr(double gain_per_w, double power_w);

/// Draws user placement (area-uniform in the [r1, r2] annulus) and i.i.d.
/// unit-mean exponential small-scale power gains for every (user, sub-carrier)
/// on both links. Deterministic for a given seed.
ChannelRealization draw_realization(const SystemConfig &cfg, uint64_t seed);

/// Loads a JSON config (schema in README); powers in dBm in the file.
SystemConfig load_config(const std::string &path);
SystemConfig parse_config(const std::string &json_text);

/// Built-in scenarios. Desk scale keeps the frame geometry proportions at
/// 2M=16; full scale is the K=4, 2M=64 setup.
SystemConfig default_desk_config();
SystemConfig default_full_config();

/// Applies a delay scenario label: "S0"/"Sbar0" lifts all deadlines to
/// tau+N_d, "S1"/"Sbar1" tightens the first ceil(K/2) users to tau+N_d-2.
/// "none" leaves the config untouched. Throws on unknown labels.
void apply_delay_scenario(SystemConfig &cfg, const std::string &scenario);

} // namespace urllc
