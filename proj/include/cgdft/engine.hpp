#pragma once

#include "cgdft/density.hpp"
#include "cgdft/model.hpp"
#include "cgdft/types.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <utility>
#include <vector>

namespace cgdft {

using SparseMatrix = Eigen::SparseMatrix<Scalar>;

struct EngineOptions {
    /// Ground-cluster width; a negative value means 1e-8 * spectral width.
    Scalar degeneracy_tolerance = -1;
    /// Dense symmetric eigensolve up to this many basis states, Lanczos above.
    int dense_threshold = 256;
    /// Hard guard on the many-body dimension.
    int max_dimension = 20000;
    /// Number of low eigenpairs requested from Lanczos.
    int lanczos_wanted = 6;
    Scalar lanczos_tolerance = 1e-12;
    /// Relative residual for the linear-response (Sternheimer) solves.
    Scalar response_tolerance = 1e-9;
};

/// Full eigendecomposition kept by the dense path for sum-over-states response.
struct Spectrum {
    Vector energies;
    Matrix vectors;
};

/// Lowest eigenvalue cluster of T + V_ee + v.
struct GroundSpace {
    Scalar energy = 0;
    int degeneracy = 1;
    /// Orthonormal columns spanning the cluster.
    Matrix basis;
    /// E_k - E_0 for the first level outside the cluster (+inf if none).
    Scalar gap = kInfinity;
    /// Lowest computed eigenvalues, ascending.
    Vector low_energies;
    Scalar degeneracy_tolerance = 0;
    std::shared_ptr<const Spectrum> spectrum;
};

/// Weighted orthonormal many-body vectors (a mixed state diagonal in `vectors`).
struct EnsembleState {
    Vector weights;
    Matrix vectors;
};

/// N-fermion Hamiltonian machinery on the fine grid.
///
/// One particle: basis = grid points. Two particles: ordered pairs i < j
/// (antisymmetry is carried by the basis). The kinetic term is the 3-point
/// Laplacian per particle with Dirichlet walls; the pair interaction and the
/// external potential are diagonal. An Engine is immutable once built.
class Engine {
public:
    explicit Engine(ModelSpec spec, EngineOptions options = {});

    const ModelSpec& spec() const { return spec_; }
    const EngineOptions& options() const { return options_; }
    int dimension() const { return static_cast<int>(first_.size()); }
    bool uses_dense_path() const { return dimension() <= options_.dense_threshold; }

    /// Grid points occupied by basis state b (second is -1 for one particle).
    std::pair<int, int> occupied(int b) const { return {first_[b], second_[b]}; }

    /// T + V_ee as a sparse matrix.
    const SparseMatrix& intrinsic_operator() const { return intrinsic_; }
    /// Diagonal of T + V_ee + v for a fine-grid potential.
    Vector potential_diagonal(const Vector& fine_potential) const;
    SparseMatrix hamiltonian(const Vector& fine_potential) const;
    Matrix dense_hamiltonian(const Vector& fine_potential) const;
    /// y = (T + V_ee + v) x.
    void apply(const Vector& diagonal_potential, const Vector& x, Vector& y) const;

    /// Ground cluster of T + V_ee + v. `warm_start` seeds the Lanczos path.
    GroundSpace ground_space(const Vector& fine_potential, const Vector& warm_start = {}) const;

    /// Fine density of one normalized many-body vector.
    Vector density_values(const Eigen::Ref<const Vector>& state) const;
    FineDensity density_of(const EnsembleState& state) const;
    Scalar intrinsic_energy_of(const EnsembleState& state) const;
    Scalar energy_of(const EnsembleState& state, const Vector& fine_potential) const;

    /// Static density response chi_{RR'} = d(int_R rho) / d v_{R'} of the
    /// ensemble sum_i w_i |g_i><g_i| over the ground cluster, for cell-wise
    /// constant perturbations at `level`. Negative semidefinite.
    Matrix response(const GroundSpace& ground, const Vector& weights, const Vector& fine_potential, int level) const;

private:
    /// Columns: (P_R psi) for the level-n cells.
    Matrix cell_occupation_images(const Eigen::Ref<const Vector>& psi, int level) const;

    ModelSpec spec_;
    EngineOptions options_;
    std::vector<int> first_;
    std::vector<int> second_;
    SparseMatrix intrinsic_;
    Vector intrinsic_diagonal_;
};

/// Free-function forms of the engine operations.
SparseMatrix assemble_hamiltonian(const ModelSpec& spec, const Potential& v);
GroundSpace ground_space(const ModelSpec& spec, const Potential& v, Scalar degeneracy_tolerance = -1);

/// Reorder/resign eigenvector columns deterministically: each column's first
/// entry of magnitude > 1e-8 max|entry| is made positive.
void canonicalize_signs(Matrix& vectors);

}  // namespace cgdft
