//! End-to-end runs: profile, solve, lower-bound probes.

use hardylab::field::Grid;
use hardylab::kernel::{shared_table, KernelSpec};
use hardylab::lowerbound::{envelope_check, lemma31_probe, w_functional};
use hardylab::measure::MeasureData;
use hardylab::picard::*;
use hardylab::problem::Problem;
use hardylab::profiles::{make_power, ProfileSpec};

fn problem() -> Problem {
    Problem::new(1, 2.0, 0.5, 3.0, 0.5).unwrap()
}

fn solve(c: f64, m: usize) -> (SolveReport, EvolutionState) {
    let cfg = SolverConfig {
        time_nodes: m,
        ..Default::default()
    };
    iterate_to_fixed_point(
        &make_power(1, c, 0.75, 5.0).unwrap(),
        &problem(),
        &default_grid(1).unwrap(),
        &cfg,
    )
    .unwrap()
}

#[test]
fn small_and_large_amplitudes() {
    let (small, st) = solve(0.01, 64);
    assert_eq!(small.verdict, Verdict::Converged);
    assert!(small.residual <= 1e-8);
    assert!(small.wrap_contamination_estimate < 1e-8);
    assert!(small.min_increment >= -1e-12);
    assert!(st.sup_norm().is_finite());
    let (large, _) = solve(1e3, 64);
    assert_eq!(large.verdict, Verdict::BlowupProxy);
    // the monotone iterates grow along the way
    assert!(large
        .sup_norm_history
        .windows(2)
        .all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
}

#[test]
fn time_refinement_is_stable() {
    let (_, coarse) = solve(0.01, 32);
    let (_, fine) = solve(0.01, 64);
    let mut worst: f64 = 0.0;
    for (j, t) in coarse.time_nodes[1..].iter().enumerate() {
        let f = fine.at(*t).unwrap();
        worst = worst.max(coarse.iterates[j].sup_distance(f) / f.sup_norm());
    }
    assert!(worst <= 0.05, "{worst}");
}

#[test]
fn comparison_of_solutions() {
    let (_, a) = solve(0.01, 16);
    let (_, b) = solve(0.02, 16);
    for (u, v) in a.iterates.iter().zip(&b.iterates) {
        assert!(u
            .values()
            .iter()
            .zip(v.values())
            .all(|(x, y)| *x <= *y + 1e-14));
    }
}

#[test]
fn lemma31_and_envelopes_on_a_converged_run() {
    // critical p = p_gamma = 2.5; dt = 0.01, so (2 rho)^2 = 0.04 and rho^2 = 0.01 are nodes
    let pr = Problem::new(1, 2.0, 0.5, 2.5, 0.5).unwrap();
    let cfg = SolverConfig {
        time_nodes: 50,
        ..Default::default()
    };
    let solver = Solver::new(pr, default_grid(1).unwrap(), cfg).unwrap();
    let mu = make_power(1, 0.01, 0.75, 5.0).unwrap();
    let (rep, st) = solver.solve(&mu).unwrap();
    assert_eq!(rep.verdict, Verdict::Converged);
    let table = shared_table(&KernelSpec::new(1, 2.0).unwrap()).unwrap();
    let c = lemma31_probe(&st, &table, &mu, &[0.0], 0.1).unwrap();
    assert!(c > 0.0 && c <= 1.0, "{c}");
    let w = w_functional(&st, &table, &[0.0], 0.1, 0.04).unwrap();
    assert!(w > 0.0 && w.is_finite());
    let env = envelope_check(&solver, &st, &mu, &[0.0], 0.1, 8).unwrap();
    assert!(env.c1 > 0.0 && env.c2 > 0.0);
    assert!(
        env.min_ratio >= 1.0 - 1e-12,
        "{} {} {}",
        env.c1,
        env.c2,
        env.min_ratio
    );
    // off the critical exponent the log envelopes do not apply
    let off = Solver::new(
        Problem::new(1, 2.0, 0.5, 3.0, 0.5).unwrap(),
        default_grid(1).unwrap(),
        cfg,
    )
    .unwrap();
    let (_, st_off) = off.solve(&mu).unwrap();
    assert!(matches!(
        envelope_check(&off, &st_off, &mu, &[0.0], 0.1, 8),
        Err(hardylab::Error::Hypothesis(_))
    ));
    assert!(envelope_check(&off, &st, &mu, &[0.0], 0.1, 8).is_err());
}

#[test]
fn two_dimensional_solve() {
    let pr = Problem::new(2, 2.0, 0.5, 2.0, 0.25).unwrap();
    let g = Grid::new(2, 20.0, 128).unwrap();
    let cfg = SolverConfig {
        time_nodes: 16,
        ..Default::default()
    };
    let mu = ProfileSpec::Power {
        c: 0.05,
        a: 1.0,
        trunc: None,
    }
    .build(&pr, 20.0)
    .unwrap();
    let (rep, st) = iterate_to_fixed_point(&mu, &pr, &g, &cfg).unwrap();
    assert_eq!(rep.verdict, Verdict::Converged);
    assert!(rep.min_increment >= -1e-12);
    // the source only adds mass, and S(t) keeps mu's
    for u in &st.iterates {
        assert!(u.values().iter().all(|v| *v >= 0.0));
        assert!(u.mass() >= mu.total_mass() * (1.0 - 1e-6));
    }
    let (big, _) = iterate_to_fixed_point(&mu.scaled(1e3).unwrap(), &pr, &g, &cfg).unwrap();
    assert_eq!(big.verdict, Verdict::BlowupProxy);
}

#[test]
fn dirac_data_solve_from_the_first_node() {
    let pr = Problem::new(1, 1.5, 0.5, 1.6, 0.5).unwrap();
    let mu = MeasureData::dirac(1, &[0.0], 0.1).unwrap();
    let cfg = SolverConfig {
        time_nodes: 16,
        ..Default::default()
    };
    let (rep, st) = iterate_to_fixed_point(&mu, &pr, &default_grid(1).unwrap(), &cfg).unwrap();
    assert_eq!(rep.verdict, Verdict::Converged);
    // tail mass beyond the box is lost; the source makes the rest grow
    let masses: Vec<f64> = st.iterates.iter().map(|u| u.mass()).collect();
    assert!(masses[0] >= 0.1 * (1.0 - 1e-3), "{masses:?}");
    assert!(masses.windows(2).all(|w| w[1] > w[0]));
}
