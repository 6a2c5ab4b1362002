#include "cgdft/engine.hpp"
#include "cgdft/lanczos.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>

namespace cgdft {

namespace {

struct IntrinsicOperator {
    std::vector<int> first;
    std::vector<int> second;
    SparseMatrix matrix;
};

long long basis_dimension(int points, int particles)
{
    return particles == 1 ? points : static_cast<long long>(points) * (points - 1) / 2;
}

/// T + V_ee for `particles` fermions on `points` interior points of spacing h.
IntrinsicOperator build_intrinsic(int points, Scalar h, const ModelSpec& spec)
{
    IntrinsicOperator op;
    const Scalar hop = -0.5 / (h * h);
    const Scalar onsite = 1.0 / (h * h);
    std::vector<Eigen::Triplet<Scalar>> entries;

    if (spec.particles == 1) {
        for (int i = 0; i < points; ++i) {
            op.first.push_back(i);
            op.second.push_back(-1);
            entries.emplace_back(i, i, onsite);
            if (i > 0)
                entries.emplace_back(i, i - 1, hop);
            if (i + 1 < points)
                entries.emplace_back(i, i + 1, hop);
        }
    } else {
        std::vector<int> index(static_cast<std::size_t>(points) * points, -1);
        for (int i = 0; i < points; ++i)
            for (int j = i + 1; j < points; ++j) {
                index[static_cast<std::size_t>(i) * points + j] = static_cast<int>(op.first.size());
                op.first.push_back(i);
                op.second.push_back(j);
            }
        auto at = [&](int i, int j) { return index[static_cast<std::size_t>(i) * points + j]; };
        for (int b = 0; b < static_cast<int>(op.first.size()); ++b) {
            const int i = op.first[b];
            const int j = op.second[b];
            const Scalar separation = (j - i) * h;
            entries.emplace_back(b, b, 2 * onsite + spec.pair_interaction(separation));
            // A hop onto the partner's site would double-occupy it; the pair
            // amplitude vanishes there, so that neighbour simply drops out.
            if (i > 0)
                entries.emplace_back(b, at(i - 1, j), hop);
            if (i + 1 < j)
                entries.emplace_back(b, at(i + 1, j), hop);
            if (j - 1 > i)
                entries.emplace_back(b, at(i, j - 1), hop);
            if (j + 1 < points)
                entries.emplace_back(b, at(i, j + 1), hop);
        }
    }
    const int dim = static_cast<int>(op.first.size());
    op.matrix.resize(dim, dim);
    op.matrix.setFromTriplets(entries.begin(), entries.end());
    op.matrix.makeCompressed();
    return op;
}

/// Gershgorin estimate of (lambda_max - lambda_min).
Scalar gershgorin_width(const SparseMatrix& a, const Vector& extra_diagonal)
{
    Scalar lo = kInfinity;
    Scalar hi = -kInfinity;
    for (int k = 0; k < a.outerSize(); ++k) {
        Scalar diag = extra_diagonal[k];
        Scalar radius = 0;
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            if (it.row() == it.col())
                diag += it.value();
            else
                radius += std::abs(it.value());
        }
        lo = std::min(lo, diag - radius);
        hi = std::max(hi, diag + radius);
    }
    return hi - lo;
}

}  // namespace

void validate(const ModelSpec& spec)
{
    if (spec.particles != 1 && spec.particles != 2)
        throw InvalidArgument("ModelSpec: particle number must be 1 or 2");
    if (!(spec.coupling >= 0) || !std::isfinite(spec.coupling))
        throw InvalidArgument("ModelSpec: interaction strength must be finite and >= 0");
    if (!(spec.softening > 0) || !std::isfinite(spec.softening))
        throw InvalidArgument("ModelSpec: softening length must be positive");
}

Scalar f_max(const ModelSpec& spec, int level)
{
    validate(spec);
    const ScaleHierarchy hierarchy(spec.grid);
    hierarchy.require_level(level);
    const int points = hierarchy.points_per_cell(level);
    if (points < spec.particles)
        return kInfinity;
    const IntrinsicOperator op = build_intrinsic(points, spec.grid.spacing(), spec);
    const int dim = op.matrix.rows();
    if (dim <= 600) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(op.matrix), Eigen::EigenvaluesOnly);
        return solver.eigenvalues()[0];
    }
    LanczosOptions opts;
    opts.wanted = 1;
    auto apply = [&](const Vector& x, Vector& y) { y.noalias() = op.matrix * x; };
    const LanczosResult r = lowest_eigenpairs(apply, dim, opts);
    if (!r.converged)
        throw NonConvergence("f_max: Lanczos did not converge");
    return r.values[0];
}

void canonicalize_signs(Matrix& vectors)
{
    for (int c = 0; c < vectors.cols(); ++c) {
        const Scalar big = vectors.col(c).cwiseAbs().maxCoeff();
        for (int i = 0; i < vectors.rows(); ++i) {
            if (std::abs(vectors(i, c)) > 1e-8 * big) {
                if (vectors(i, c) < 0)
                    vectors.col(c) *= -1;
                break;
            }
        }
    }
}

Engine::Engine(ModelSpec spec, EngineOptions options) : spec_(spec), options_(options)
{
    validate(spec_);
    const long long dim = basis_dimension(spec_.grid.points(), spec_.particles);
    if (dim > options_.max_dimension)
        throw DimensionOverflow("Engine: basis dimension " + std::to_string(dim) + " exceeds guard " +
                                std::to_string(options_.max_dimension));
    IntrinsicOperator op = build_intrinsic(spec_.grid.points(), spec_.grid.spacing(), spec_);
    first_ = std::move(op.first);
    second_ = std::move(op.second);
    intrinsic_ = std::move(op.matrix);
    intrinsic_diagonal_ = intrinsic_.diagonal();
}

Vector Engine::potential_diagonal(const Vector& fine_potential) const
{
    if (fine_potential.size() != spec_.grid.points())
        throw InvalidArgument("Engine: potential is not on the fine grid");
    Vector d(dimension());
    for (int b = 0; b < dimension(); ++b)
        d[b] = fine_potential[first_[b]] + (second_[b] >= 0 ? fine_potential[second_[b]] : 0);
    return d;
}

SparseMatrix Engine::hamiltonian(const Vector& fine_potential) const
{
    SparseMatrix h = intrinsic_;
    const Vector d = potential_diagonal(fine_potential);
    for (int b = 0; b < dimension(); ++b)
        h.coeffRef(b, b) += d[b];
    return h;
}

Matrix Engine::dense_hamiltonian(const Vector& fine_potential) const
{
    Matrix h(intrinsic_);
    h.diagonal() += potential_diagonal(fine_potential);
    return h;
}

void Engine::apply(const Vector& diagonal_potential, const Vector& x, Vector& y) const
{
    y.noalias() = intrinsic_ * x;
    y += diagonal_potential.cwiseProduct(x);
}

GroundSpace Engine::ground_space(const Vector& fine_potential, const Vector& warm_start) const
{
    const Vector external = potential_diagonal(fine_potential);
    GroundSpace out;
    Vector energies;
    Matrix vectors;
    Scalar width = 0;

    if (uses_dense_path()) {
        auto spectrum = std::make_shared<Spectrum>();
        if (spec_.particles == 1) {
            const Vector diag = intrinsic_diagonal_ + external;
            const Vector sub = Vector::Constant(dimension() - 1, -0.5 / (spec_.grid.spacing() * spec_.grid.spacing()));
            Eigen::SelfAdjointEigenSolver<Matrix> solver;
            solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            spectrum->energies = solver.eigenvalues();
            spectrum->vectors = solver.eigenvectors();
        } else {
            Eigen::SelfAdjointEigenSolver<Matrix> solver(dense_hamiltonian(fine_potential));
            spectrum->energies = solver.eigenvalues();
            spectrum->vectors = solver.eigenvectors();
        }
        energies = spectrum->energies;
        width = energies[energies.size() - 1] - energies[0];
        out.spectrum = std::move(spectrum);
    } else {
        width = gershgorin_width(intrinsic_, external);
        LanczosOptions opts;
        opts.wanted = std::min(options_.lanczos_wanted, dimension());
        opts.tolerance = options_.lanczos_tolerance;
        auto op = [&](const Vector& x, Vector& y) { apply(external, x, y); };
        for (;;) {
            LanczosResult r = lowest_eigenpairs(op, dimension(), opts, warm_start);
            if (!r.converged)
                throw NonConvergence("ground_space: Lanczos did not converge");
            energies = r.values;
            vectors = std::move(r.vectors);
            const Scalar tol = options_.degeneracy_tolerance >= 0 ? options_.degeneracy_tolerance : 1e-8 * width;
            const int cluster = static_cast<int>((energies.array() <= energies[0] + tol).count());
            if (cluster < energies.size() || opts.wanted >= std::min(dimension(), 10))
                break;
            opts.wanted = std::min(dimension(), opts.wanted + 4);
        }
    }

    const Scalar tol = options_.degeneracy_tolerance >= 0 ? options_.degeneracy_tolerance : 1e-8 * width;
    const int k = static_cast<int>((energies.array() <= energies[0] + tol).count());
    out.energy = energies[0];
    out.degeneracy = k;
    out.degeneracy_tolerance = tol;
    out.gap = k < energies.size() ? energies[k] - energies[0] : kInfinity;
    out.low_energies = energies.head(std::min<Eigen::Index>(energies.size(), 8));
    out.basis = out.spectrum ? Matrix(out.spectrum->vectors.leftCols(k)) : Matrix(vectors.leftCols(k));
    canonicalize_signs(out.basis);
    return out;
}

Vector Engine::density_values(const Eigen::Ref<const Vector>& state) const
{
    Vector rho = Vector::Zero(spec_.grid.points());
    for (int b = 0; b < dimension(); ++b) {
        const Scalar p = state[b] * state[b];
        rho[first_[b]] += p;
        if (second_[b] >= 0)
            rho[second_[b]] += p;
    }
    return rho / spec_.grid.spacing();
}

FineDensity Engine::density_of(const EnsembleState& state) const
{
    Vector rho = Vector::Zero(spec_.grid.points());
    for (int i = 0; i < state.weights.size(); ++i)
        if (state.weights[i] != 0)
            rho += state.weights[i] * density_values(state.vectors.col(i));
    return FineDensity{spec_.grid, std::move(rho), spec_.particles};
}

Scalar Engine::intrinsic_energy_of(const EnsembleState& state) const
{
    Scalar e = 0;
    for (int i = 0; i < state.weights.size(); ++i) {
        const Vector psi = state.vectors.col(i);
        e += state.weights[i] * psi.dot(intrinsic_ * psi);
    }
    return e;
}

Scalar Engine::energy_of(const EnsembleState& state, const Vector& fine_potential) const
{
    const Vector external = potential_diagonal(fine_potential);
    Scalar e = intrinsic_energy_of(state);
    for (int i = 0; i < state.weights.size(); ++i)
        e += state.weights[i] * state.vectors.col(i).cwiseAbs2().dot(external);
    return e;
}

Matrix Engine::cell_occupation_images(const Eigen::Ref<const Vector>& psi, int level) const
{
    const ScaleHierarchy hierarchy(spec_.grid);
    Matrix y = Matrix::Zero(dimension(), hierarchy.cell_count(level));
    for (int b = 0; b < dimension(); ++b) {
        y(b, hierarchy.cell_of(first_[b], level)) += psi[b];
        if (second_[b] >= 0)
            y(b, hierarchy.cell_of(second_[b], level)) += psi[b];
    }
    return y;
}

Matrix Engine::response(const GroundSpace& ground, const Vector& weights, const Vector& fine_potential,
                        int level) const
{
    ScaleHierarchy(spec_.grid).require_level(level);
    const int cells = 1 << level;
    Matrix chi = Matrix::Zero(cells, cells);
    const int k = ground.degeneracy;

    if (ground.spectrum) {
        const Spectrum& s = *ground.spectrum;
        const int excited = dimension() - k;
        if (excited == 0)
            return chi;
        const Vector denominators = (ground.energy - s.energies.tail(excited).array()).inverse();
        for (int i = 0; i < k; ++i) {
            if (weights[i] == 0)
                continue;
            const Matrix images = cell_occupation_images(ground.basis.col(i), level);
            const Matrix a = s.vectors.rightCols(excited).transpose() * images;
            chi += 2 * weights[i] * (a.transpose() * denominators.asDiagonal() * a);
        }
    } else {
        const Vector external = potential_diagonal(fine_potential);
        auto shifted_op = [&](const Vector& x, Vector& y) {
            apply(external, x, y);
            y -= ground.energy * x;
        };
        for (int i = 0; i < k; ++i) {
            if (weights[i] == 0)
                continue;
            const Matrix images = cell_occupation_images(ground.basis.col(i), level);
            Vector x;
            for (int r = 0; r < cells; ++r) {
                deflated_conjugate_gradient(shifted_op, ground.basis, images.col(r), x, options_.response_tolerance,
                                            20 * dimension());
                chi.col(r) -= 2 * weights[i] * (images.transpose() * x);
            }
        }
    }
    return 0.5 * (chi + chi.transpose());
}

SparseMatrix assemble_hamiltonian(const ModelSpec& spec, const Potential& v)
{
    return Engine(spec).hamiltonian(fine_values(v));
}

GroundSpace ground_space(const ModelSpec& spec, const Potential& v, Scalar degeneracy_tolerance)
{
    EngineOptions opts;
    opts.degeneracy_tolerance = degeneracy_tolerance;
    return Engine(spec, opts).ground_space(fine_values(v));
}

}  // namespace cgdft
