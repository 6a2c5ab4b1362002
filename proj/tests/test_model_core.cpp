#include "doctest.h"

#include "cgdft/density.hpp"
#include "cgdft/model.hpp"
#include "cgdft/sampling.hpp"

#include <cmath>
#include <numbers>

using namespace cgdft;

namespace {

const Grid kGrid(1.0, 128);

/// Per-cell Riemann sums located by coordinate, independent of the cell bookkeeping in ScaleHierarchy.
Vector brute_force_cell_averages(const FineDensity& rho, int level)
{
    const Scalar h = rho.grid.spacing();
    const int cells = 1 << level;
    const Scalar width = rho.grid.span() / cells;
    Vector sums = Vector::Zero(cells);
    Vector counts = Vector::Zero(cells);
    for (int i = 0; i < rho.grid.points(); ++i) {
        const Scalar left_edge = rho.grid.coordinate(i) - 0.5 * h;
        const int c = static_cast<int>(std::floor((left_edge + 1e-9 * h) / width));
        sums[c] += h * rho.values[i];
        counts[c] += h;
    }
    return sums.cwiseQuotient(counts);
}

}  // namespace

TEST_CASE("grid rejects non power-of-two and small point counts")
{
    CHECK_THROWS_AS(Grid(1.0, 100), InvalidArgument);
    CHECK_THROWS_AS(Grid(1.0, 8), InvalidArgument);
    CHECK_THROWS_AS(Grid(-1.0, 16), InvalidArgument);
    const Grid g(2.0, 64);
    CHECK(g.spacing() * (g.points() + 1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g.depth() == 6);
}

TEST_CASE("hierarchy levels refine dyadically and diameters halve")
{
    const ScaleHierarchy hierarchy(kGrid);
    CHECK(hierarchy.deepest_level() == 7);
    for (int n = 0; n < hierarchy.deepest_level(); ++n) {
        CHECK(hierarchy.diameter(n + 1) == doctest::Approx(hierarchy.diameter(n) / 2).epsilon(1e-14));
        for (int c = 0; c < hierarchy.cell_count(n + 1); ++c) {
            const int first = hierarchy.first_point(c, n + 1);
            const int last = first + hierarchy.points_per_cell(n + 1) - 1;
            CHECK(hierarchy.cell_of(first, n) == c / 2);
            CHECK(hierarchy.cell_of(last, n) == c / 2);
        }
    }
    CHECK(hierarchy.points_per_cell(hierarchy.deepest_level()) == 1);
    CHECK_THROWS_AS(hierarchy.require_level(8), InvalidArgument);
}

TEST_CASE("project: uniform density gives uniform averages")
{
    const FineDensity rho = uniform_density(kGrid, 2);
    for (int n = 0; n <= 7; ++n) {
        const CoarseDensity c = project(rho, n);
        CHECK(c.particles == 2);
        for (Scalar a : c.values)
            CHECK(a == doctest::Approx(2 / kGrid.span()).epsilon(1e-13));
    }
}

TEST_CASE("project: density on the left half at level 1")
{
    Vector values = Vector::Zero(128);
    values.head(64).setConstant(1.0);
    const FineDensity rho = normalized_density(kGrid, values, 1);
    const CoarseDensity c = project(rho, 1);
    CHECK(c.values[0] == doctest::Approx(2.0 / kGrid.span()).epsilon(1e-13));
    CHECK(c.values[1] == 0.0);
    CHECK_THROWS_AS(project(rho, 9), InvalidArgument);
}

TEST_CASE("project matches brute-force Riemann sums")
{
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const FineDensity rho = random_smooth_density(kGrid, 1, rng);
        for (int n : {0, 1, 3, 5, 7}) {
            const Vector oracle = brute_force_cell_averages(rho, n);
            const CoarseDensity c = project(rho, n);
            CHECK((c.values - oracle).cwiseAbs().maxCoeff() < 1e-12 * oracle.cwiseAbs().maxCoeff());
            CHECK(c.mass() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("embed is a right inverse of project and an L1 isometry")
{
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 5;
        Vector cells(1 << n);
        std::uniform_real_distribution<Scalar> u(-2, 3);
        for (auto& value : cells)
            value = u(rng);
        const CoarseDensity rho{kGrid, n, cells, 0};
        const FineDensity fine = embed(rho);
        CHECK(project(fine, n).values == rho.values);
        CHECK(norm_lp(fine, 1) == doctest::Approx(rho.cell_width() * cells.cwiseAbs().sum()).epsilon(1e-13));
        // Embedding then projecting at a finer level repeats each value in its sub-cells.
        const int m = n + 2;
        const CoarseDensity finer = project(fine, m);
        for (int c = 0; c < finer.values.size(); ++c)
            CHECK(finer.values[c] == cells[c / 4]);
    }
}

TEST_CASE("norm_lp special values")
{
    const FineDensity uniform = uniform_density(kGrid, 3);
    CHECK(norm_lp(uniform, 1) == doctest::Approx(3.0).epsilon(1e-13));
    const CoarseDensity step{kGrid, 1, (Vector(2) << 1.5, -4.0).finished(), 0};
    CHECK(norm_lp(step, kInfinity) == 4.0);
    CHECK(norm_lp(embed(step), kInfinity) == 4.0);
    CHECK_THROWS_AS(norm_lp(uniform, 0.5), InvalidArgument);
    CHECK(norm_lp(step, 3) == doctest::Approx(norm_lp(embed(step), 3)).epsilon(1e-13));
}

TEST_CASE("inner product: constants, projection invariance, brute force")
{
    Rng rng(5);
    const FineDensity rho = random_smooth_density(kGrid, 2, rng);
    Potential c = make_potential(kGrid, 3, Vector::Constant(8, 1.75));
    CHECK(inner(c, rho) == doctest::Approx(1.75 * 2).epsilon(1e-13));
    for (int trial = 0; trial < 20; ++trial) {
        const int n = trial % 6;
        const Potential v = random_potential(kGrid, n, rng);
        const FineDensity sample = random_smooth_density(kGrid, 1, rng);
        CHECK(inner(v, sample) == doctest::Approx(inner(v, embed(project(sample, n)))).epsilon(1e-12));
        CHECK(inner(v, sample) == doctest::Approx(inner(v, project(sample, std::min(7, n + 1)))).epsilon(1e-12));
        Scalar oracle = 0;
        for (int i = kGrid.points() - 1; i >= 0; --i) {
            const int cell = static_cast<int>(std::floor((kGrid.coordinate(i) - 0.5 * kGrid.spacing()) /
                                                         (kGrid.span() / (1 << n)) + 1e-9));
            oracle += v.values[cell] * sample.values[i] * kGrid.spacing();
        }
        CHECK(inner(v, sample) == doctest::Approx(oracle).epsilon(1e-12));
    }
    const Potential fine_v = random_potential(kGrid, 5, rng);
    CHECK_THROWS_AS(inner(fine_v, project(rho, 3)), InvalidArgument);
    CHECK_THROWS_AS(inner(make_potential(Grid(1.0, 64), 1, Vector::Zero(2)), rho), InvalidArgument);
}

TEST_CASE("discrete gradient: constant, ramp and second-order accuracy")
{
    CHECK(discrete_gradient(uniform_density(kGrid, 1)).cwiseAbs().maxCoeff() == 0.0);

    Vector ramp(128);
    for (int i = 0; i < 128; ++i)
        ramp[i] = 3 * kGrid.coordinate(i) + 1;
    const Vector g = discrete_gradient(FineDensity{kGrid, ramp, 0});
    CHECK((g.array() - 3).abs().maxCoeff() < 1e-10);

    auto interior_error = [](const Grid& grid) {
        Vector f(grid.points());
        for (int i = 0; i < grid.points(); ++i)
            f[i] = std::sin(2 * std::numbers::pi * grid.coordinate(i));
        const Vector d = discrete_gradient(FineDensity{grid, f, 0});
        Scalar err = 0;
        for (int i = 1; i + 1 < grid.points(); ++i)
            err = std::max(err, std::abs(d[i] - 2 * std::numbers::pi * std::cos(2 * std::numbers::pi * grid.coordinate(i))));
        return err;
    };
    const Scalar coarse = interior_error(Grid(1.0, 64));
    const Scalar fine = interior_error(Grid(1.0, 128));
    const Scalar h = kGrid.spacing();
    CHECK(fine < std::pow(2 * std::numbers::pi, 3) / 6 * h * h);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("von Weizsacker: uniform, zero-density sentinel, two formulas agree for smooth densities")
{
    const VonWeizsacker flat = von_weizsacker(uniform_density(kGrid, 1), WallTerms::exclude);
    CHECK(flat.value == 0.0);
    CHECK(flat.gradient_form == 0.0);

    Vector values(128);
    for (int i = 0; i < 128; ++i)
        values[i] = i < 40 ? 0.0 : 1.0;
    const FineDensity cliff = normalized_density(kGrid, values, 1);
    CHECK(von_weizsacker(cliff).value == kInfinity);

    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const FineDensity rho = random_smooth_density(kGrid, 1, rng);
        const VonWeizsacker tw = von_weizsacker(rho);
        CHECK(tw.value > 0);
        CHECK(tw.discrepancy < 0.05 * tw.value);
        CHECK(sqrt_h1_seminorm_sq(rho) == doctest::Approx(2 * tw.value));
    }
}

TEST_CASE("von Weizsacker grows like eps^2 / l^2 under oscillatory modulation")
{
    const Grid grid(1.0, 512);
    Vector base(grid.points());
    for (int i = 0; i < grid.points(); ++i) {
        const Scalar s = std::sin(std::numbers::pi * grid.coordinate(i));
        base[i] = s * s;
    }
    const FineDensity rho = normalized_density(grid, base, 1);
    const Scalar t0 = von_weizsacker(rho).value;
    const Scalar eps = 0.05;
    std::vector<Scalar> logs_l;
    std::vector<Scalar> logs_t;
    for (Scalar ell : {0.04, 0.028, 0.02, 0.014, 0.01}) {
        Vector modulated(grid.points());
        for (int i = 0; i < grid.points(); ++i) {
            const Scalar x = grid.coordinate(i);
            const Scalar eta = std::exp(-std::pow((x - 0.5) / 0.15, 2));
            modulated[i] = std::pow(1 + eps * eta * std::sin(x / ell), 2) * rho.values[i];
        }
        const FineDensity rho_l = normalized_density(grid, modulated, 1);
        logs_l.push_back(std::log(ell));
        logs_t.push_back(std::log(von_weizsacker(rho_l).value - t0));
    }
    const int n = static_cast<int>(logs_l.size());
    Scalar mx = 0, my = 0;
    for (int k = 0; k < n; ++k) {
        mx += logs_l[k] / n;
        my += logs_t[k] / n;
    }
    Scalar sxy = 0, sxx = 0;
    for (int k = 0; k < n; ++k) {
        sxy += (logs_l[k] - mx) * (logs_t[k] - my);
        sxx += (logs_l[k] - mx) * (logs_l[k] - mx);
    }
    const Scalar slope = sxy / sxx;
    CHECK(slope > -2.2);
    CHECK(slope < -1.8);
}

TEST_CASE("f_max: particle in a box, monotone in level")
{
    ModelSpec one{kGrid, 1, 1.0, 0.5};
    const ScaleHierarchy hierarchy(kGrid);
    for (int n = 0; n <= 4; ++n) {
        const Scalar w = hierarchy.confinement_length(n);
        const Scalar oracle = std::numbers::pi * std::numbers::pi / (2 * w * w);
        CHECK(std::abs(f_max(one, n) - oracle) <= 0.02 * oracle);
    }
    for (int particles : {1, 2})
        for (int n = 0; n < 6; ++n) {
            ModelSpec spec{kGrid, particles, 1.0, 0.5};
            CHECK(f_max(spec, n + 1) > f_max(spec, n));
        }
    ModelSpec two{kGrid, 2, 1.0, 0.5};
    CHECK(f_max(two, 7) == kInfinity);
}

TEST_CASE("coarse-graining properties on random smooth densities")
{
    Rng rng(2024);
    const ScaleHierarchy hierarchy(kGrid);
    for (int trial = 0; trial < 200; ++trial) {
        const int particles = 1 + trial % 2;
        SmoothDensityOptions opts;
        opts.wall_envelope = trial % 3 != 0;
        const FineDensity rho = random_smooth_density(kGrid, particles, rng, opts);
        const Scalar grad_l1 = lp_norm(discrete_gradient(rho), kGrid.spacing(), 1);
        const Scalar seminorm = sqrt_h1_seminorm_sq(rho);
        CHECK(grad_l1 <= 2 * std::sqrt(static_cast<Scalar>(particles)) * std::sqrt(seminorm));
        for (int n = 1; n <= 6; ++n) {
            const CoarseDensity c = project(rho, n);
            CHECK(c.mass() == doctest::Approx(particles).epsilon(1e-12));
            for (int m = n; m <= 7; ++m)
                CHECK((project(embed(project(rho, m)), n).values - c.values).cwiseAbs().maxCoeff() <
                      1e-12 * c.values.maxCoeff());
            for (Scalar p : {1.0, 2.0, 3.0})
                CHECK(norm_lp(c, p) <= norm_lp(rho, p) * (1 + 1e-13));
            const Vector residual = rho.values - embed(c).values;
            const Scalar poincare = std::numbers::pi / 2 * hierarchy.diameter(n) * grad_l1;
            CHECK(lp_norm(residual, kGrid.spacing(), 1) <= poincare);
            const Potential test_cell = random_potential(kGrid, n, rng);
            CHECK(std::abs(kGrid.spacing() * residual.dot(fine_values(test_cell))) < 1e-12);
        }
    }
}
