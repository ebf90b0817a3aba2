#include "test_util.hpp"
#include "vmtu/simd/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace vmtu;
using vmtu::simd::KernelTable;

namespace {

std::vector<double> rand_vec(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v)
        x = d(g);
    return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol)
{
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        ASSERT_NEAR(a[i], b[i], tol * std::max(1.0, std::abs(a[i]))) << "index " << i;
}

class SimdTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        vec = simd::avx2_kernels();
        if (vec == nullptr)
            GTEST_SKIP() << "AVX2 variant not available on this machine";
    }
    const KernelTable& ref = simd::scalar_kernels();
    const KernelTable* vec = nullptr;
};

}  // namespace

TEST(Simd, DispatchHonoursTable)
{
    const KernelTable& k = simd::kernels();
    EXPECT_TRUE(k.isa == simd::Isa::Scalar || k.isa == simd::Isa::Avx2);
    EXPECT_STREQ(simd::scalar_kernels().name, "scalar");
}

TEST_F(SimdTest, AxpyAndDotMatchReference)
{
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
        const auto x = rand_vec(n, n + 1);
        auto y1 = rand_vec(n, n + 2);
        auto y2 = y1;
        ref.axpy(n, 0.37, x.data(), y1.data());
        vec->axpy(n, 0.37, x.data(), y2.data());
        expect_close(y1, y2, 1e-14);
        EXPECT_NEAR(ref.dot(n, x.data(), y1.data()), vec->dot(n, x.data(), y1.data()), 1e-12);
    }
}

TEST_F(SimdTest, Stencil5MatchesReference)
{
    for (auto [rows, cols] : {std::pair{3, 3}, {8, 8}, {5, 13}, {64, 64}, {17, 31}}) {
        const auto padded = rand_vec(static_cast<std::size_t>(rows + 2) * (cols + 2), rows * 100 + cols);
        std::vector<double> a(static_cast<std::size_t>(rows) * cols), b(a.size());
        ref.stencil5(padded.data(), cols + 2, a.data(), cols, rows, cols, 0.5, -2.0);
        vec->stencil5(padded.data(), cols + 2, b.data(), cols, rows, cols, 0.5, -2.0);
        expect_close(a, b, 1e-14);
    }
}

TEST_F(SimdTest, TfpmCombineMatchesReference)
{
    for (auto [rows, cols] : {std::pair{3, 3}, {8, 9}, {64, 64}, {11, 23}}) {
        const std::size_t n = static_cast<std::size_t>(rows) * cols;
        const auto padded = rand_vec(static_cast<std::size_t>(rows + 2) * (cols + 2), n);
        const auto kappa = rand_vec(n, n + 1);
        const auto c0 = rand_vec(n, n + 2);
        std::vector<double> a(n), b(n);
        ref.tfpm_combine(padded.data(), cols + 2, kappa.data(), c0.data(), a.data(), cols, rows, cols);
        vec->tfpm_combine(padded.data(), cols + 2, kappa.data(), c0.data(), b.data(), cols, rows, cols);
        expect_close(a, b, 1e-14);
    }
}

TEST_F(SimdTest, CorrelationMatchesReference)
{
    for (int k : {1, 3, 5}) {
        for (auto [rows, cols] : {std::pair{4, 4}, {8, 13}, {32, 32}, {7, 5}}) {
            const int ir = rows + k - 1, ic = cols + k - 1;
            const auto in = rand_vec(static_cast<std::size_t>(ir) * ic, k * 1000 + rows);
            const auto taps = rand_vec(static_cast<std::size_t>(k) * k, k);
            auto a = rand_vec(static_cast<std::size_t>(rows) * cols, 5);
            auto b = a;
            ref.corr2d_accumulate(in.data(), ic, taps.data(), k, a.data(), cols, rows, cols);
            vec->corr2d_accumulate(in.data(), ic, taps.data(), k, b.data(), cols, rows, cols);
            expect_close(a, b, 1e-13);

            const auto g = rand_vec(static_cast<std::size_t>(rows) * cols, 77);
            std::vector<double> ga(static_cast<std::size_t>(k) * k, 0.25), gb = ga;
            ref.corr2d_weight_grad(in.data(), ic, g.data(), cols, rows, cols, k, ga.data());
            vec->corr2d_weight_grad(in.data(), ic, g.data(), cols, rows, cols, k, gb.data());
            expect_close(ga, gb, 1e-12);
        }
    }
}

TEST(Simd, ScalarCorrelationMatchesLoop)
{
    const int k = 3, rows = 6, cols = 7, ic = cols + 2;
    const auto in = rand_vec(static_cast<std::size_t>(rows + 2) * ic, 3);
    const auto taps = rand_vec(9, 4);
    std::vector<double> out(static_cast<std::size_t>(rows) * cols, 0.0);
    simd::scalar_kernels().corr2d_accumulate(in.data(), ic, taps.data(), k, out.data(), cols, rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double s = 0.0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    s += taps[i * k + j] * in[(r + i) * ic + c + j];
            EXPECT_NEAR(out[r * cols + c], s, 1e-14);
        }
}
