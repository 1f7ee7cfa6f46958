#include "emtwin/kernels.hpp"

#include "kernels_detail.hpp"

namespace emtwin::kernels {

namespace {
constexpr std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix(splitmix(seed) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

CounterRng::result_type CounterRng::operator()() {
    return splitmix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
}

namespace serial {

void flux_sweep(const ResonatorGeometry& geom, const SquidParams& squid, std::span<const double> phi,
                std::span<double> f_c, std::span<double> resp, std::span<std::uint8_t> divergent) {
    for (std::size_t i = 0; i < phi.size(); ++i)
        detail::flux_point(geom, squid, phi[i], f_c[i], resp[i], divergent[i]);
}

void suu(std::span<const double> f, const SuuModel& m, std::span<double> out) {
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = detail::suu_point(f[i], m);
}

void s21_driven(std::span<const double> delta, const DrivenModel& m, std::span<double> out) {
    for (std::size_t i = 0; i < delta.size(); ++i) out[i] = detail::s21_driven_point(delta[i], m);
}

void gamma_noise(std::span<const double> clean, int n_avg, std::uint64_t seed, std::span<double> out) {
    for (std::size_t i = 0; i < clean.size(); ++i) out[i] = detail::gamma_point(clean[i], n_avg, seed, i);
}

void gaussian_noise(std::span<const double> clean, double sigma, std::uint64_t seed,
                    std::span<double> out) {
    for (std::size_t i = 0; i < clean.size(); ++i)
        out[i] = detail::gaussian_point(clean[i], sigma, seed, i);
}

void amplitude_scan(std::span<const double> delta, std::span<const double> y, const LineshapeParams& line,
                    double f_m, std::span<const double> betas, std::span<double> sse) {
    for (std::size_t k = 0; k < betas.size(); ++k) sse[k] = detail::scan_point(delta, y, line, f_m, betas[k]);
}

}  // namespace serial
}  // namespace emtwin::kernels
