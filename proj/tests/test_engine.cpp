#include "doctest.h"

#include "cgdft/engine.hpp"
#include "cgdft/sampling.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace cgdft;

namespace {

const Grid kGrid(1.0, 128);
constexpr Scalar kPi = std::numbers::pi;

/// Full spectrum of a dense symmetric matrix, used as an oracle.
Vector full_spectrum(const Matrix& h) { return Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues(); }

/// Engine that always takes the dense path (full spectrum available).
Engine dense_engine(const Grid& grid, int particles, Scalar coupling = 1.0)
{
    EngineOptions opts;
    opts.dense_threshold = 1000;
    return Engine(ModelSpec{grid, particles, coupling, 0.5}, opts);
}

EnsembleState pure(const GroundSpace& g)
{
    return EnsembleState{Vector::Ones(1), g.basis.leftCols(1)};
}

}  // namespace

TEST_CASE("one particle in an empty box: spectrum, density and kinetic energy")
{
    const Engine engine(ModelSpec{kGrid, 1, 1.0, 0.5});
    CHECK(engine.dimension() == 128);
    const Vector levels = full_spectrum(engine.dense_hamiltonian(Vector::Zero(128)));
    for (int k = 1; k <= 3; ++k) {
        const Scalar oracle = k * k * kPi * kPi / 2;
        CHECK(std::abs(levels[k - 1] - oracle) < 0.02 * oracle);
    }

    const GroundSpace g = engine.ground_space(Vector::Zero(128));
    CHECK(g.degeneracy == 1);
    CHECK(g.energy == doctest::Approx(levels[0]).epsilon(1e-12));
    const FineDensity rho = engine.density_of(pure(g));
    CHECK(rho.mass() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 128; ++i) {
        const Scalar x = kGrid.coordinate(i);
        const Scalar oracle = 2 * std::pow(std::sin(kPi * x), 2);
        CHECK(std::abs(rho.values[i] - oracle) <= 0.02 * oracle + 1e-12);
    }
    const Scalar t = engine.intrinsic_energy_of(pure(g));
    CHECK(std::abs(t - kPi * kPi / 2) < 0.02 * kPi * kPi / 2);
}

TEST_CASE("two non-interacting fermions fill the two lowest orbitals")
{
    const Grid grid(1.0, 32);
    Rng rng(4);
    const Potential v = random_potential(grid, 3, rng, 20);
    const Vector fine = fine_values(v);
    const Engine one(ModelSpec{grid, 1, 0.0, 0.5});
    const Vector orbitals = full_spectrum(one.dense_hamiltonian(fine));
    const Engine two(ModelSpec{grid, 2, 0.0, 0.5});
    CHECK(two.dimension() == 32 * 31 / 2);
    const GroundSpace g = two.ground_space(fine);
    CHECK(g.energy == doctest::Approx(orbitals[0] + orbitals[1]).epsilon(1e-11));
}

TEST_CASE("constant shift moves every level by N c and keeps the eigenvectors")
{
    Rng rng(6);
    for (int particles : {1, 2}) {
        const Grid grid(1.0, particles == 1 ? 128 : 32);
        const Engine engine = dense_engine(grid, particles);
        const Potential v = random_potential(grid, 4, rng);
        const Scalar c = 3.25;
        const GroundSpace a = engine.ground_space(fine_values(v));
        const GroundSpace b = engine.ground_space(fine_values(shifted(v, c)));
        CHECK(b.energy - a.energy == doctest::Approx(particles * c).epsilon(1e-10));
        CHECK((a.spectrum->energies.array() + particles * c - b.spectrum->energies.array()).abs().maxCoeff() < 1e-9);
        CHECK((a.basis - b.basis).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("mirror-symmetric potential gives a mirror-symmetric ground density")
{
    Vector cells(16);
    for (int c = 0; c < 8; ++c)
        cells[c] = cells[15 - c] = 5.0 * std::cos(0.7 * c);
    const Potential v = make_potential(kGrid, 4, cells);
    for (int particles : {1, 2}) {
        const Grid grid = particles == 1 ? kGrid : Grid(1.0, 32);
        const Engine engine(ModelSpec{grid, particles, 1.0, 0.5});
        const GroundSpace g = engine.ground_space(fine_values(refine(make_potential(grid, 4, cells), 4)));
        const FineDensity rho = engine.density_of(pure(g));
        CHECK((rho.values - rho.values.reverse()).cwiseAbs().maxCoeff() < 1e-8);
    }
    (void)v;
}

TEST_CASE("generic potentials have a simple ground state")
{
    Rng rng(9);
    const Engine engine(ModelSpec{kGrid, 1, 1.0, 0.5});
    for (int trial = 0; trial < 20; ++trial) {
        const Vector fine = fine_values(random_potential(kGrid, 1 + trial % 6, rng));
        const GroundSpace g = engine.ground_space(fine);
        const Vector oracle = full_spectrum(engine.dense_hamiltonian(fine));
        CHECK(g.degeneracy == 1);
        CHECK(g.gap == doctest::Approx(oracle[1] - oracle[0]).epsilon(1e-9));
        CHECK(g.gap > g.degeneracy_tolerance);
    }
}

TEST_CASE("double well: tunnelling doublet is reported as degenerate only above the splitting")
{
    Vector fine(128);
    for (int i = 0; i < 128; ++i) {
        const Scalar x = kGrid.coordinate(i);
        fine[i] = std::abs(x - 0.5) < 0.1 ? 4000.0 : 0.0;
    }
    const Engine strict(ModelSpec{kGrid, 1, 1.0, 0.5}, EngineOptions{.degeneracy_tolerance = 1e-12});
    const Vector oracle = full_spectrum(strict.dense_hamiltonian(fine));
    const Scalar splitting = oracle[1] - oracle[0];
    REQUIRE(splitting > 0);
    REQUIRE(splitting < 1e-3 * (oracle[2] - oracle[1]));
    CHECK(strict.ground_space(fine).degeneracy == 1);

    const Engine loose(ModelSpec{kGrid, 1, 1.0, 0.5}, EngineOptions{.degeneracy_tolerance = 2 * splitting});
    const GroundSpace g = loose.ground_space(fine);
    CHECK(g.degeneracy == 2);
    CHECK(g.gap == doctest::Approx(oracle[2] - oracle[0]).epsilon(1e-9));
    CHECK((g.basis.transpose() * g.basis - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("densities of ensembles: linearity and normalization")
{
    Rng rng(12);
    for (int particles : {1, 2}) {
        const Grid grid(1.0, particles == 1 ? 128 : 32);
        const Engine engine = dense_engine(grid, particles);
        const Potential v = random_potential(grid, 3, rng);
        const GroundSpace g = engine.ground_space(fine_values(v));
        const Matrix& u = g.spectrum->vectors;
        const EnsembleState mix{(Vector(2) << 0.5, 0.5).finished(), u.leftCols(2)};
        const Vector expected = 0.5 * (engine.density_values(u.col(0)) + engine.density_values(u.col(1)));
        CHECK((engine.density_of(mix).values - expected).cwiseAbs().maxCoeff() < 1e-12);

        for (int trial = 0; trial < 10; ++trial) {
            const int k = 1 + trial % 5;
            Vector w(k);
            std::uniform_real_distribution<Scalar> uniform(0, 1);
            for (auto& x : w)
                x = uniform(rng);
            w /= w.sum();
            const EnsembleState state{w, u.middleCols(trial, k)};
            CHECK(engine.density_of(state).mass() == doctest::Approx(particles).epsilon(1e-10));
            CHECK(engine.intrinsic_energy_of(state) >= 0);
        }
    }
}

TEST_CASE("ground state: intrinsic energy identity and variational principle")
{
    Rng rng(13);
    for (int particles : {1, 2}) {
        const Grid grid(1.0, particles == 1 ? 128 : 32);
        const Engine engine = dense_engine(grid, particles);
        const Engine fast(ModelSpec{grid, particles, 1.0, 0.5});
        const Potential v0 = random_potential(grid, 4, rng);
        const GroundSpace g0 = engine.ground_space(fine_values(v0));
        const Matrix& u = g0.spectrum->vectors;
        const FineDensity rho0 = engine.density_of(pure(g0));
        CHECK(engine.intrinsic_energy_of(pure(g0)) == doctest::Approx(g0.energy - inner(v0, rho0)).epsilon(1e-9));

        for (int trial = 0; trial < 50; ++trial) {
            const int k = 1 + trial % 4;
            Vector w(k);
            std::uniform_real_distribution<Scalar> uniform(0, 1);
            for (auto& x : w)
                x = uniform(rng);
            w /= w.sum();
            const EnsembleState state{w, u.middleCols(trial % 6, k)};
            const FineDensity rho = engine.density_of(state);
            const Potential v = random_potential(grid, 1 + trial % 5, rng, 30);
            const Scalar e0 = fast.ground_space(fine_values(v)).energy;
            CHECK(e0 <= engine.intrinsic_energy_of(state) + inner(v, rho) + 1e-9);
        }
    }
}

TEST_CASE("Hellmann-Feynman and the linear-response matrix agree with finite differences")
{
    Rng rng(21);
    for (int particles : {1, 2}) {
        const Grid grid(1.0, particles == 1 ? 128 : 32);
        for (bool dense : {true, false}) {
            EngineOptions opts;
            opts.dense_threshold = dense ? 1000 : 0;
            const Engine engine(ModelSpec{grid, particles, 1.0, 0.5}, opts);
            const int level = 3;
            const Potential v = random_smooth_potential(grid, level, rng, 5);
            const GroundSpace g = engine.ground_space(fine_values(v));
            REQUIRE(g.degeneracy == 1);
            const CoarseDensity cells = project(engine.density_of(pure(g)), level);
            const Scalar width = cells.cell_width();
            const Matrix chi = engine.response(g, Vector::Ones(1), fine_values(v), level);
            const Scalar step = 1e-3;
            for (int r = 0; r < 8; ++r) {
                Potential plus = v, minus = v;
                plus.values[r] += step;
                minus.values[r] -= step;
                const GroundSpace gp = engine.ground_space(fine_values(plus), g.basis.col(0));
                const GroundSpace gm = engine.ground_space(fine_values(minus), g.basis.col(0));
                const Scalar derivative = (gp.energy - gm.energy) / (2 * step);
                const Scalar occupancy = width * cells.values[r];
                CHECK(std::abs(derivative - occupancy) <= 1e-5 * occupancy);

                const Vector np = project(engine.density_of(pure(gp)), level).values * width;
                const Vector nm = project(engine.density_of(pure(gm)), level).values * width;
                const Vector column = (np - nm) / (2 * step);
                CHECK((column - chi.col(r)).cwiseAbs().maxCoeff() < 1e-5 * chi.cwiseAbs().maxCoeff());
            }
            CHECK((chi * Vector::Ones(8)).cwiseAbs().maxCoeff() < 1e-8 * chi.cwiseAbs().maxCoeff());
            const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(chi).eigenvalues();
            CHECK(eig.maxCoeff() < 1e-8 * chi.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("Lanczos path agrees with the dense path")
{
    Rng rng(30);
    const Grid grid(1.0, 32);
    EngineOptions iterative;
    iterative.dense_threshold = 0;
    const Engine lanczos(ModelSpec{grid, 2, 1.0, 0.5}, iterative);
    const Engine dense = dense_engine(grid, 2);
    for (int trial = 0; trial < 5; ++trial) {
        const Vector fine = fine_values(random_potential(grid, 2 + trial % 3, rng));
        const GroundSpace a = lanczos.ground_space(fine);
        const GroundSpace b = dense.ground_space(fine);
        CHECK(a.energy == doctest::Approx(b.energy).epsilon(1e-12));
        CHECK(a.gap == doctest::Approx(b.gap).epsilon(1e-8));
        CHECK((lanczos.density_values(a.basis.col(0)) - dense.density_values(b.basis.col(0))).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("size guard and model validation")
{
    CHECK_THROWS_AS(Engine(ModelSpec{Grid(1.0, 256), 2, 1.0, 0.5}), DimensionOverflow);
    CHECK_THROWS_AS(Engine(ModelSpec{kGrid, 3, 1.0, 0.5}), InvalidArgument);
    CHECK_THROWS_AS(Engine(ModelSpec{kGrid, 1, -1.0, 0.5}), InvalidArgument);
    CHECK_THROWS_AS(Engine(ModelSpec{kGrid, 1, 1.0, 0.0}), InvalidArgument);
    const SparseMatrix h = assemble_hamiltonian(ModelSpec{Grid(1.0, 16), 2, 1.0, 0.5}, make_potential(Grid(1.0, 16), 0, Vector::Zero(1)));
    CHECK(h.rows() == 120);
    CHECK((Matrix(h) - Matrix(h).transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Matrix(h).diagonal().minCoeff() > 0);
}
