// Fits SURE-optimal denoisers to noisy k-dense samples and prints each
// fitted curve next to the exact posterior mean on a grid, as CSV.
//
// usage: denoiser_shapes [c] [samples] > shapes.csv

#include <psamp/psamp.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

using namespace psamp;

int main(int argc, char** argv)
{
    const double c = argc > 1 ? std::atof(argv[1]) : 0.1;
    const Eigen::Index n = argc > 2 ? std::atol(argv[2]) : 200000;

    const auto prior = SignalPrior::k_dense(0.1, 1.0);
    try {
        const Vector r = sample_prior(prior, n, 1) + gaussian_vector(n, 2, std::sqrt(c));
        const std::vector<KernelFamily> families{KernelFamily::piecewise_linear1(), KernelFamily::piecewise_linear2(),
                                                 KernelFamily::exponential()};
        std::vector<DenoiserSpec> specs;
        for (const auto& f : families) specs.push_back(optimize_weights(r, c, f));

        constexpr int points = 121;
        Vector grid(points);
        for (int i = 0; i < points; ++i) grid[i] = -3.0 + 6.0 * i / (points - 1);
        std::vector<Vector> curves;
        for (const auto& s : specs) curves.push_back(apply_denoiser(s, grid).x_hat);

        std::printf("r,mmse");
        for (const auto& f : families) std::printf(",%s", f.name().c_str());
        std::printf("\n");
        for (int i = 0; i < points; ++i) {
            std::printf("%.4f,%.6f", grid[i], mmse_denoise(prior, grid[i], c).value);
            for (const auto& curve : curves) std::printf(",%.6f", curve[i]);
            std::printf("\n");
        }
        for (std::size_t k = 0; k < specs.size(); ++k) {
            std::fprintf(stderr, "%s: SURE %.5f, weights", families[k].name().c_str(), sure_value(r, c, specs[k]));
            for (double w : specs[k].weights) std::fprintf(stderr, " %.4f", w);
            std::fprintf(stderr, "\n");
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "denoiser_shapes: %s\n", e.what());
        return 1;
    }
    return 0;
}
