#include "doctest.h"

#include "cgdft/calculus.hpp"
#include "cgdft/kohn_sham.hpp"

#include <cmath>

using namespace cgdft;

namespace {

const Grid kSmall(1.0, 32);

Vector unit_charges(int cells, int a, int b, Scalar width)
{
    Vector q = Vector::Zero(cells);
    q[a] = 1 / width;
    q[b] = 1 / width;
    return q;
}

}  // namespace

TEST_CASE("Hartree energy: zero, scaling, positivity and convexity")
{
    const ModelSpec spec{Grid(1.0, 64), 2, 1.0, 0.5};
    const CoarseDensity zero{spec.grid, 3, Vector::Zero(8), 0};
    CHECK(hartree_energy(spec, zero) == 0);
    CHECK(hartree_potential(spec, zero).values.cwiseAbs().maxCoeff() == 0);

    Rng rng(2);
    std::uniform_real_distribution<Scalar> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        Vector a(8), b(8);
        for (int i = 0; i < 8; ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
        }
        const CoarseDensity ra{spec.grid, 3, a, 0};
        const CoarseDensity rb{spec.grid, 3, b, 0};
        const CoarseDensity twice{spec.grid, 3, 2 * a, 0};
        const CoarseDensity mid{spec.grid, 3, (a + b) / 2, 0};
        const Scalar ea = hartree_energy(spec, ra);
        const Scalar eb = hartree_energy(spec, rb);
        CHECK(ea >= 0);
        CHECK(hartree_energy(spec, twice) == doctest::Approx(4 * ea).epsilon(1e-12));
        CHECK(hartree_energy(spec, mid) <= (ea + eb) / 2 + 1e-12);

        const CoarseDensity sum{spec.grid, 3, a + b, 0};
        const Vector split = hartree_potential(spec, ra).values + hartree_potential(spec, rb).values;
        CHECK((hartree_potential(spec, sum).values - split).cwiseAbs().maxCoeff() <= 1e-13);
    }
}

TEST_CASE("Hartree cross term of two unit charges against a direct kernel sum")
{
    const ModelSpec spec{Grid(1.0, 256), 2, 1.0, 0.01};
    const ScaleHierarchy hierarchy(spec.grid);
    const int level = 4;
    const int cells = hierarchy.cell_count(level);
    const int per = hierarchy.points_per_cell(level);
    const Scalar width = hierarchy.cell_width(level);
    const Scalar h = spec.grid.spacing();
    for (int separation : {4, 6, 10}) {
        const int a = 2, b = 2 + separation;
        auto self = [&](int c) {
            Vector q = Vector::Zero(cells);
            q[c] = 1 / width;
            return hartree_energy(spec, CoarseDensity{spec.grid, level, q, 0});
        };
        const Scalar both = hartree_energy(spec, CoarseDensity{spec.grid, level, unit_charges(cells, a, b, width), 0});
        Scalar cross = 0;
        for (int i = a * per; i < (a + 1) * per; ++i)
            for (int j = b * per; j < (b + 1) * per; ++j)
                cross += h * h / (width * width) / std::sqrt(std::pow((i - j) * h, 2) + 0.01 * 0.01);
        CHECK(both - self(a) - self(b) == doctest::Approx(cross).epsilon(1e-10));
        const Scalar distance = separation * width;
        CHECK(cross * distance == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("Hartree potential is the derivative of the Hartree energy")
{
    const ModelSpec spec{Grid(1.0, 64), 2, 1.0, 0.5};
    Rng rng(4);
    const CoarseDensity rho = random_interior_density(spec.grid, 3, 2, rng);
    const Vector delta = random_direction(spec.grid, 3, rng);
    const Potential phi = hartree_potential(spec, rho);
    const CoarseDensity d{spec.grid, 3, delta, 0};
    const Scalar e0 = hartree_energy(spec, rho);
    const Scalar coefficient = hartree_energy(spec, d);
    for (Scalar t : {1e-2, 1e-3}) {
        const CoarseDensity moved{spec.grid, 3, rho.values + t * delta, 2};
        const Scalar remainder = hartree_energy(spec, moved) - e0 - t * inner(phi, d);
        CHECK(remainder / (t * t) == doctest::Approx(coefficient).epsilon(0.1));
    }
}

TEST_CASE("Kohn-Sham split for one particle: no exchange-correlation beyond self-Hartree")
{
    const Engine engine(ModelSpec{Grid(1.0, 64), 1, 1.0, 0.5});
    Rng rng(6);
    const CoarseDensity rho = random_interior_density(engine.spec().grid, 3, 1, rng, 0.5);
    const KsReport r = ks_decompose(engine, rho);
    CHECK(r.T_s == doctest::Approx(r.F).epsilon(1e-12));
    CHECK(r.E_xc == doctest::Approx(-r.E_H).epsilon(1e-10));
    CHECK((r.v_xc.values + r.phi.values).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(r.F - (r.T_s + r.E_H + r.E_xc) == doctest::Approx(0).epsilon(1e-12));
    CHECK((r.v_s.values - (r.v.values + r.phi.values + r.v_xc.values)).cwiseAbs().maxCoeff() <= 1e-12);

    const CoarseDensity uniform = make_coarse_density(engine.spec().grid, 1, Vector::Constant(2, 1.0 / engine.spec().grid.span()), 1);
    CHECK(ts(engine, uniform).F_value > 0);
}

TEST_CASE("Kohn-Sham split for two interacting fermions")
{
    const Engine engine(ModelSpec{kSmall, 2, 1.0, 0.5});
    Rng rng(8);
    const CoarseDensity rho = random_interior_density(kSmall, 2, 2, rng, 0.4);
    const KsReport r = ks_decompose(engine, rho);
    CHECK(r.T_s <= r.F);
    CHECK(r.E_xc < 0);
    CHECK(std::abs(r.F - (r.T_s + r.E_H + r.E_xc)) <= 1e-12);
    CHECK((r.v_s.values - (r.v.values + r.phi.values + r.v_xc.values)).cwiseAbs().maxCoeff() <= 1e-12);

    // Gauge bookkeeping: shifting v by c and v_s by c' moves v_xc by c' - c.
    const Potential moved = exchange_correlation_potential(shifted(r.v, 0.3), shifted(r.v_s, -1.1), r.phi);
    const Vector change = moved.values - r.v_xc.values;
    CHECK(change.maxCoeff() == doctest::Approx(-1.4).epsilon(1e-12));
    CHECK(change.minCoeff() == doctest::Approx(-1.4).epsilon(1e-12));

    // E_xc'[rho; delta] = F' - T_s' - <phi, delta> against the pairing with v_xc.
    const Engine free_engine = non_interacting(engine);
    for (int trial = 0; trial < 2; ++trial) {
        const Vector delta = random_direction(kSmall, 2, rng);
        const Scalar f_prime = directional_derivative(engine, rho, delta).limit_estimate;
        const Scalar ts_prime = directional_derivative(free_engine, rho, delta).limit_estimate;
        const CoarseDensity d{kSmall, 2, delta, 0};
        const Scalar exc_prime = f_prime - ts_prime - inner(r.phi, d);
        const Scalar pairing = inner(r.v_xc, d);
        CHECK(std::abs(exc_prime - pairing) <= 1e-3 * std::max<Scalar>(std::abs(pairing), 1e-3));
    }
}
