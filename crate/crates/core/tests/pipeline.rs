use seqbound::dpsolver::{solve_dp_prime, DpMode};
use seqbound::ensemble::CoherentEnsemble;
use seqbound::mem::quantum_limit;
use seqbound::primal::{default_library, optimize_alice};
use seqbound::qregion::{build_qpolytope, sample_priors, SamplingScheme};
use seqbound::sweep::{run_point, SweepConfig};
use seqbound::vertexenum::enumerate_vertices;

#[test]
fn primal_stays_below_dual_at_one_photon() {
    let e = CoherentEnsemble::equiprobable(1.0).unwrap();
    let mut poly = build_qpolytope(&e, &sample_priors(21, SamplingScheme::Grid).unwrap()).unwrap();
    let vs = enumerate_vertices(&mut poly).unwrap();
    let dual = solve_dp_prime(&e, &vs, DpMode::Symmetric).unwrap();
    let primal = optimize_alice(&e, &default_library(&e, 66).unwrap()).unwrap();
    assert!(primal.success_value <= dual.certified_upper + 1e-7);
    // both sequential bounds sit below the joint quantum limit
    assert!(dual.certified_upper < quantum_limit(&e).unwrap());
    assert!(primal.success_value > 0.9, "{}", primal.success_value);
}

#[test]
fn more_priors_shrink_the_polytope() {
    let e = CoherentEnsemble::equiprobable(1.3).unwrap();
    let a = sample_priors(5, SamplingScheme::Grid).unwrap();
    let mut ab = a.clone();
    ab.extend(sample_priors(8, SamplingScheme::Fibonacci).unwrap());
    let coarse = build_qpolytope(&e, &a).unwrap();
    let mut fine = build_qpolytope(&e, &ab).unwrap();
    let vs = enumerate_vertices(&mut fine).unwrap();
    for q in &vs.points {
        assert!(coarse.contains(*q, 1e-7), "{q:?}");
    }
}

#[test]
fn nested_refinement_tightens_the_bound() {
    let coarse = SweepConfig { planes_per_edge: 6, ..SweepConfig::default() };
    // 2n - 1 per edge contains the n lattice
    let fine = SweepConfig { planes_per_edge: 11, ..SweepConfig::default() };
    for nbar in [0.4, 1.1, 1.9] {
        let a = run_point(&coarse, nbar, 0).record;
        let b = run_point(&fine, nbar, 0).record;
        assert!(a.is_ok() && b.is_ok());
        assert!(b.dual_upper_success <= a.dual_upper_success + 1e-8, "nbar {nbar}");
    }
}
