//! Whole-run behaviour of the solver against the diagnostics and the dense
//! oracle.

use fpflow::diagnostics::{
    ckp_check, envelope_violation, free_energy_lower_bound, l1_distance, max_principle_envelope,
    relative_entropy,
};
use fpflow::oracle::{build_linear_operator, implicit_step, reference_evolve};
use fpflow::params::{
    preset_gaussian_ic, preset_mobility, preset_potential, preset_potential_1d,
    resolve_diffusion, DEFAULT_IC_VARIANCE,
};
use fpflow::solver::run_with_observer;
use fpflow::{
    backward_euler_step, equilibrium_state, run, solve_normalization, Boundary, DiffusionField,
    MobilityField, ParameterSet, PotentialField, ScalarField, SolverConfig, TensorGrid,
};

fn preset(dim: usize, d: &str, n: usize) -> ParameterSet {
    ParameterSet::new(
        d,
        preset_potential(dim).unwrap(),
        resolve_diffusion(d, dim, n).unwrap(),
        preset_mobility(dim).unwrap(),
    )
}

fn linear() -> ParameterSet {
    ParameterSet::new(
        "linear",
        preset_potential_1d(2).unwrap(),
        DiffusionField::constant(1.0).unwrap(),
        MobilityField::unit(),
    )
}

fn gaussian(g: &TensorGrid) -> ScalarField {
    preset_gaussian_ic(g.dim(), DEFAULT_IC_VARIANCE).unwrap().discretize(g).unwrap()
}

#[test]
fn preset_runs_satisfy_trace_invariants() {
    let cases = [(1, 200, 50, 2.0), (2, 16, 10, 1.0)];
    for (dim, n, steps, t_final) in cases {
        for bc in [Boundary::Periodic, Boundary::NoFlux] {
            for d in ["D:homogeneous", "D:single", "D:multi"] {
                let g = TensorGrid::new(dim, n, bc).unwrap();
                let p = preset(dim, d, n);
                let f0 = gaussian(&g);
                let cfg = SolverConfig::new(t_final, steps);
                let eq = equilibrium_state(&p, &g).unwrap();
                let (lo, hi) = max_principle_envelope(&f0, &eq, &p).unwrap();
                let mut worst_env: f64 = 0.0;
                let mut ckp_ok = true;
                let mut entropy_min = f64::INFINITY;
                let (_, trace) = run_with_observer(&f0, &p, &cfg, |s| {
                    worst_env = worst_env.max(envelope_violation(s.density, &lo, &hi));
                    ckp_ok &= ckp_check(s.density, s.equilibrium).holds;
                    entropy_min = entropy_min.min(relative_entropy(s.density, s.equilibrium, &p).unwrap());
                })
                .unwrap();
                let tag = format!("{dim}D {bc} {d}");
                assert!(trace.max_mass_error(1.0) <= 1e-11, "{tag}");
                assert!(trace.max_energy_increase() <= 10.0 * cfg.newton_tol, "{tag}");
                assert!(trace.rows.iter().all(|r| r.f_min > 0.0), "{tag}");
                assert!(ckp_ok, "{tag}");
                assert!(worst_env <= 5.0 * g.spacing(), "{tag}: {worst_env}");
                for r in &trace.rows {
                    let lb = free_energy_lower_bound(r.f_min, r.f_max, r.mass, &p, &g);
                    assert!(r.free_energy >= lb, "{tag}");
                }
                if d == "D:homogeneous" {
                    assert!(worst_env <= 1e-10, "{tag}: {worst_env}");
                    assert!(entropy_min >= -1e-14, "{tag}: {entropy_min}");
                }
            }
        }
    }
}

#[test]
fn linear_step_matches_dense_implicit_solve() {
    let g = TensorGrid::new(1, 32, Boundary::NoFlux).unwrap();
    let p = linear();
    let op = build_linear_operator(&p, &g).unwrap();
    let f0 = gaussian(&g);
    let a = backward_euler_step(&f0, &p, 0.01, 0.01, &SolverConfig::default()).unwrap();
    let b = implicit_step(&op, &f0, 0.01).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
    }
}

#[test]
fn solver_converges_to_oracle_at_first_order() {
    let mut errors = Vec::new();
    for (n, steps) in [(32, 100), (64, 200)] {
        let g = TensorGrid::new(1, n, Boundary::Periodic).unwrap();
        let p = linear();
        let f0 = gaussian(&g);
        let op = build_linear_operator(&p, &g).unwrap();
        let reference = reference_evolve(&op, &f0, 0.1).unwrap();
        let (f, _) = run(&f0, &p, &SolverConfig::new(0.1, steps)).unwrap();
        errors.push(l1_distance(&f, &reference));
    }
    let ratio = errors[0] / errors[1];
    assert!((ratio - 2.0).abs() <= 0.4, "{errors:?}");
}

#[test]
fn oracle_error_is_first_order_over_the_whole_interval() {
    let g = TensorGrid::new(1, 32, Boundary::Periodic).unwrap();
    let p = linear();
    let f0 = gaussian(&g);
    let op = build_linear_operator(&p, &g).unwrap();
    let mut worsts = Vec::new();
    for steps in [100usize, 200] {
        let mut worst: f64 = 0.0;
        let mut t_prev = 0.0;
        let mut reference = f0.clone();
        run_with_observer(&f0, &p, &SolverConfig::new(0.1, steps), |s| {
            if s.step > 0 && s.step % 10 == 0 {
                reference = reference_evolve(&op, &reference, s.row.t - t_prev).unwrap();
                t_prev = s.row.t;
                worst = worst.max(l1_distance(s.density, &reference));
            }
        })
        .unwrap();
        worsts.push(worst);
    }
    let ratio = worsts[0] / worsts[1];
    assert!((ratio - 2.0).abs() <= 0.4, "{worsts:?}");
}

fn energy_law_mismatch(n: usize, steps: usize) -> f64 {
    let g = TensorGrid::new(1, n, Boundary::Periodic).unwrap();
    let cfg = SolverConfig::new(0.1, steps);
    let (_, trace) = run(&gaussian(&g), &linear(), &cfg).unwrap();
    trace
        .rows
        .windows(2)
        .map(|w| ((w[1].free_energy - w[0].free_energy) / cfg.dt() + w[1].dissipation).abs() / w[1].dissipation)
        .fold(0.0, f64::max)
}

#[test]
fn discrete_energy_law_refines() {
    let coarse = energy_law_mismatch(200, 400);
    let fine = energy_law_mismatch(400, 800);
    assert!(coarse <= 0.1, "{coarse}");
    assert!(fine <= 0.6 * coarse, "{coarse} -> {fine}");
}

fn constants(p: &ParameterSet, ladder: &[usize]) -> Vec<f64> {
    ladder
        .iter()
        .map(|&n| solve_normalization(p, &TensorGrid::new(1, n, Boundary::NoFlux).unwrap()).unwrap())
        .collect()
}

#[test]
fn normalization_constant_refines_at_second_order_or_better() {
    // Midpoint sums of smooth periodic integrands converge faster than h^2.
    let c = constants(&preset(1, "D:single", 0), &[50, 100]);
    assert!((c[0] - c[1]).abs() <= (2.0f64 / 50.0).powi(2), "{c:?}");
    let quad = ParameterSet::new(
        "q",
        PotentialField::quadratic(1.0, 1.0),
        DiffusionField::constant(1.0).unwrap(),
        MobilityField::unit(),
    );
    let c = constants(&quad, &[50, 100, 200]);
    let ratio = (c[0] - c[1]) / (c[1] - c[2]);
    assert!((ratio - 4.0).abs() <= 0.2, "{c:?}");
}

#[test]
fn equilibrium_start_stays_put_in_three_dimensions() {
    let g = TensorGrid::new(3, 8, Boundary::NoFlux).unwrap();
    let p = preset(3, "D:multi", 8);
    let eq = equilibrium_state(&p, &g).unwrap();
    let (_, trace) = run(&eq.density, &p, &SolverConfig::new(0.5, 10)).unwrap();
    for r in &trace.rows {
        assert!(r.f_rel.abs() <= 1e-12 && r.dissipation <= 1e-10);
    }
}
