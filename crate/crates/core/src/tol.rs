//! Numerical tolerances shared by the solvers and the test suites.

/// Every threshold the pipeline compares against, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Off-diagonal Frobenius norm at which a Jacobi sweep is declared converged.
    pub jacobi_off_diag: f64,
    /// Maximum number of cyclic Jacobi sweeps.
    pub jacobi_max_sweeps: usize,
    /// PSD / completeness tolerance for POVMs.
    pub povm: f64,
    /// Target duality gap for MEM-type solves.
    pub mem_gap: f64,
    /// Newton-step cap for the MEM barrier solver.
    pub mem_max_newton: usize,
    /// Clip applied to sampled priors so every component is strictly positive.
    pub prior_clip: f64,
    /// Halfspace dedup tolerance on normal and offset.
    pub halfspace_dedup: f64,
    /// Vertex feasibility / dedup radius.
    pub vertex: f64,
    /// Plane triples with a smaller determinant are skipped by the brute-force enumerator.
    pub triple_det: f64,
    /// Feasibility target for the DP' cutting-plane solver.
    pub dp_violation: f64,
    /// LP objective change below which a cutting-plane round counts as stationary.
    pub dp_objective_change: f64,
    /// Rounds without progress before the cutting-plane solver reports a stall.
    pub dp_stall_rounds: usize,
    /// Symmetric/general DP' trace agreement.
    pub mode_agreement: f64,
    /// Gap threshold the report uses to call a point "strict".
    pub strict_gap: f64,
}

pub const TOL: Tolerances = Tolerances {
    jacobi_off_diag: 1e-13,
    jacobi_max_sweeps: 100,
    povm: 1e-9,
    mem_gap: 1e-7,
    mem_max_newton: 10_000,
    prior_clip: 1e-6,
    halfspace_dedup: 1e-9,
    vertex: 1e-7,
    triple_det: 1e-10,
    dp_violation: 1e-7,
    dp_objective_change: 1e-9,
    dp_stall_rounds: 50,
    mode_agreement: 1e-6,
    strict_gap: 1e-5,
};
