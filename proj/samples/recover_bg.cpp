// Recovers a Bernoulli-Gaussian signal from noisy Gaussian measurements with
// parametric SURE-AMP (PWL1 and EXP kernels), genie BAMP and L1-AMP, and
// prints the reconstruction SNR of each.
//
// usage: recover_bg [n] [gamma] [snr_y_db] [seed]

#include <psamp/psamp.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

using namespace psamp;

int main(int argc, char** argv)
{
    const Eigen::Index n = argc > 1 ? std::atol(argv[1]) : 2000;
    const double gamma = argc > 2 ? std::atof(argv[2]) : 0.3;
    const double snr_y = argc > 3 ? std::atof(argv[3]) : 25.0;
    const Seed seed = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 1;

    const auto prior = SignalPrior::bernoulli_gaussian(0.1, 1.0);
    const auto m = static_cast<Eigen::Index>(std::lround(gamma * static_cast<double>(n)));
    try {
        const auto op = gaussian_operator(m, n, derive_seed(seed, {0}));
        const Vector x = sample_prior(prior, n, derive_seed(seed, {1}));
        const auto meas = measure(op, x, snr_y, derive_seed(seed, {2}));

        std::printf("%s, n = %ld, m = %ld, SNR_y = %.1f dB\n", describe(prior).c_str(), static_cast<long>(n),
                    static_cast<long>(m), snr_y);
        const std::vector<DenoiserPolicy> policies{parametric_sure_policy(KernelFamily::piecewise_linear1()),
                                                   parametric_sure_policy(KernelFamily::exponential()),
                                                   bamp_policy(prior), l1amp_policy(2.0)};
        for (const auto& policy : policies) {
            const auto res = amp_run(op, meas.y, policy);
            std::printf("  %-6s SNR_x = %6.2f dB  (%d iterations, %.1f ms)\n", policy_name(policy).c_str(),
                        snr_x(x, res.x_hat), res.iterations, res.wall_ms);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "recover_bg: %s\n", e.what());
        return 1;
    }
    return 0;
}
