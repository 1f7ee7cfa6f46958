#include <doctest.h>
#include <omp.h>

#include <cstring>
#include <vector>

#include "device_fixture.hpp"
#include "emtwin/bessel.hpp"
#include "emtwin/kernels.hpp"

using namespace emtwin;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Threads {
    explicit Threads(int n) : saved(kernels::max_threads()) { kernels::set_max_threads(n); }
    ~Threads() { kernels::set_max_threads(saved); }
    int saved;
};

}  // namespace

TEST_CASE("flux sweep: serial and parallel agree bit for bit") {
    Threads t(4);
    const auto phi = linspace(-0.5, 0.5, 10001);
    std::vector<double> f1(phi.size()), r1(phi.size()), f2(phi.size()), r2(phi.size());
    std::vector<std::uint8_t> d1(phi.size()), d2(phi.size());
    kernels::serial::flux_sweep(fixture::geometry, fixture::squid, phi, f1, r1, d1);
    kernels::omp::flux_sweep(fixture::geometry, fixture::squid, phi, f2, r2, d2);
    CHECK(std::memcmp(f1.data(), f2.data(), f1.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(r1.data(), r2.data(), r1.size() * sizeof(double)) == 0);
    CHECK(d1 == d2);
    CHECK(d1.front() == 1);
    CHECK(d1.back() == 1);
    CHECK(d1[5000] == 0);
    CHECK(f1[5000] == resonance_frequency(fixture::geometry, fixture::squid, 0.0));
}

TEST_CASE("PSD and driven-transmission kernels agree") {
    Threads t(3);
    const auto f = linspace(6.3e6, 6.4e6, 65537);
    const kernels::SuuModel m{1620, 607, 6.34311e6, 33.6, 4e-18, 5e-3, 5e-14};
    std::vector<double> a(f.size()), b(f.size());
    kernels::serial::suu(f, m, a);
    kernels::omp::suu(f, m, b);
    CHECK(same_bits(a, b));

    const auto delta = linspace(-8e7, 8e7, 40001);
    const auto j = bessel_j_orders(20, 5.0);
    std::vector<double> w(41);
    for (int n = 0; n <= 20; ++n) w[static_cast<std::size_t>(20 + n)] = w[static_cast<std::size_t>(20 - n)] = j[static_cast<std::size_t>(n)] * j[static_cast<std::size_t>(n)];
    const kernels::DrivenModel dm{0.45e6, 2.5e6, 6.34311e6, w};
    std::vector<double> s1(delta.size()), s2(delta.size());
    kernels::serial::s21_driven(delta, dm, s1);
    kernels::omp::s21_driven(delta, dm, s2);
    CHECK(same_bits(s1, s2));
}

TEST_CASE("noise kernels are counter based") {
    Threads t(4);
    const std::vector<double> clean(50000, 2.5);
    std::vector<double> a(clean.size()), b(clean.size()), c(clean.size());
    kernels::serial::gamma_noise(clean, 50, 1234, a);
    kernels::omp::gamma_noise(clean, 50, 1234, b);
    CHECK(same_bits(a, b));
    // a bin's draw depends only on (seed, bin), not on the rest of the array
    const std::vector<double> head(clean.begin(), clean.begin() + 100);
    std::vector<double> h(100);
    kernels::serial::gamma_noise(head, 50, 1234, h);
    CHECK(std::memcmp(h.data(), a.data(), 100 * sizeof(double)) == 0);
    kernels::omp::gamma_noise(clean, 50, 1235, c);
    CHECK_FALSE(same_bits(a, c));

    kernels::serial::gaussian_noise(clean, 0.01, 9, a);
    kernels::omp::gaussian_noise(clean, 0.01, 9, b);
    CHECK(same_bits(a, b));

    kernels::CounterRng r1(5, 7), r2(5, 7), r3(5, 8);
    for (int i = 0; i < 10; ++i) {
        const auto x = r1();
        CHECK(x == r2());
        CHECK(x != r3());
    }
}

TEST_CASE("amplitude scan kernels agree") {
    Threads t(4);
    const LineshapeParams& line = fixture::line_d;
    const auto delta = linspace(-6e7, 6e7, 1001);
    const auto y = s21_driven_trace(delta, line, 4.0, fixture::mode.f_m(), 16);
    std::vector<double> betas;
    for (int k = 0; k <= 200; ++k) betas.push_back(0.05 * k);
    std::vector<double> a(betas.size()), b(betas.size());
    kernels::serial::amplitude_scan(delta, y, line, fixture::mode.f_m(), betas, a);
    kernels::omp::amplitude_scan(delta, y, line, fixture::mode.f_m(), betas, b);
    CHECK(same_bits(a, b));
    CHECK(a[80] < 1e-20);
}

TEST_CASE("thread cap") {
    Threads t(2);
    CHECK(kernels::max_threads() == std::min(2, omp_get_max_threads()));
    kernels::set_max_threads(1);
    CHECK(kernels::max_threads() == 1);
}
