use dgflow_core::prelude::*;
use std::f64::consts::PI;

/// Legendre `P_k` and `P_k'` by the three-term recurrence.
fn legendre(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=k {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Interior Lobatto nodes as roots of `P_k'`, bracketed on a fine grid and bisected.
fn bisection_nodes(k: usize) -> Vec<f64> {
    let dp = |x: f64| legendre(k, x).1;
    let grid = 20_000;
    let mut roots = vec![-1.0];
    for i in 0..grid {
        let (mut a, mut b) = (-1.0 + 2.0 * i as f64 / grid as f64, -1.0 + 2.0 * (i + 1) as f64 / grid as f64);
        if i == 0 {
            a += 1e-12;
        }
        if i == grid - 1 {
            b -= 1e-12;
        }
        if dp(a) == 0.0 {
            roots.push(a);
            continue;
        }
        if dp(a) * dp(b) < 0.0 {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if dp(a) * dp(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots.push(1.0);
    roots
}

#[test]
fn lobatto_nodes_and_weights_match_oracles() {
    let r3 = gauss_lobatto_rule(3).unwrap();
    let s = 1.0 / 5f64.sqrt();
    for (x, e) in r3.nodes().iter().zip([-1.0, -s, s, 1.0]) {
        assert!((x - e).abs() < 1e-15);
    }
    for (w, e) in r3.weights().iter().zip([1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 6.0]) {
        assert!((w - e).abs() < 1e-15);
    }
    for k in 1..=8 {
        let rule = gauss_lobatto_rule(k).unwrap();
        let oracle = bisection_nodes(k);
        assert_eq!(oracle.len(), k + 1);
        for (x, e) in rule.nodes().iter().zip(&oracle) {
            assert!((x - e).abs() < 1e-13, "k={k}: {x} vs {e}");
        }
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let pk = legendre(k, *x).0;
            let e = 2.0 / ((k * (k + 1)) as f64 * pk * pk);
            assert!((w - e).abs() < 1e-13);
        }
    }
}

#[test]
fn cell_average_matches_midpoint_oracle() {
    // a cubic is reproduced by the k=3 interpolant, so averages agree to roundoff
    let space = Space1D::new(uniform_mesh_1d(-1.0, 2.0, 6).unwrap(), 3).unwrap();
    let p = |x: f64| 1.0 + x - 0.5 * x.powi(3);
    let field = space.interpolate(&|x| p(x[0]));
    let edges = space.mesh().edges().to_vec();
    for (c, a) in space.cell_averages(&field).iter().enumerate() {
        let (lo, hi) = (edges[c], edges[c + 1]);
        let m = 100_000;
        let dx = (hi - lo) / m as f64;
        let mid: f64 = (0..m).map(|i| p(lo + (i as f64 + 0.5) * dx)).sum::<f64>() / m as f64;
        assert!((a - mid).abs() < 1e-9, "cell {c}: {a} vs {mid}");
    }
}

#[test]
fn heat_rhs_matches_finite_difference_oracle() {
    // second-order central differences of ∂x(ρ ∂x log ρ) = ∂xx ρ on a dense stencil
    let rho = |x: f64| 2.0 + x.sin();
    let delta = 1e-4;
    let fd = |x: f64| (rho(x + delta) - 2.0 * rho(x) + rho(x - delta)) / (delta * delta);
    let model = ModelSpec::new(|r| r, |r| xlogx(r) - r, |r: f64| r.ln());
    let mut errs = Vec::new();
    for n in [160, 320] {
        let space = Space1D::new(uniform_mesh_1d(-PI, PI, n).unwrap(), 2).unwrap();
        let h = space.mesh().h(0);
        let s = Scheme1D::new(space, model.clone(), SchemeOptions::default()).unwrap();
        let rhs = s.rhs(&s.space().interpolate(&|x| rho(x[0])), 0.0).unwrap();
        // interior nodes: pointwise
        let mut interior = 0.0f64;
        for c in 0..n {
            let d = c * 3 + 1;
            interior = interior.max((rhs.values()[d] - fd(s.space().point(d)[0])).abs());
        }
        // cell averages: against the same oracle integrated by a fine midpoint rule
        let edges = s.space().mesh().edges().to_vec();
        let mut avg = 0.0f64;
        for (c, a) in s.space().cell_averages(&rhs).iter().enumerate() {
            let m = 64;
            let dx = (edges[c + 1] - edges[c]) / m as f64;
            let o = (0..m).map(|i| fd(edges[c] + (i as f64 + 0.5) * dx)).sum::<f64>() / m as f64;
            avg = avg.max((a - o).abs());
        }
        assert!(interior <= h * h && avg <= h * h, "n={n}: {interior} {avg}");
        errs.push((interior, avg));
    }
    assert!(errs[0].0 / errs[1].0 > 3.5 && errs[0].1 / errs[1].1 > 3.5, "{errs:?}");
}

#[test]
fn oversized_step_is_halved_and_stays_positive() {
    // upwind transport of a bump; τ/h = 4 would empty cells below zero
    let space = Space1D::new(uniform_mesh_1d(-PI, PI, 40).unwrap(), 1).unwrap();
    let h = space.mesh().h(0);
    let model = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0)
        .with_potential(|x| x[0])
        .with_xi_override(XiBoundaryOverride { left: Some(-PI), right: Some(PI) });
    let s = Scheme1D::new(space, model, SchemeOptions::default()).unwrap();
    let rho0 = s.space().interpolate(&|x| (-(x[0] * x[0]) / 0.1).exp());
    let schedule = Schedule { t_final: 0.5, tau: 4.0 * h, snapshot_times: vec![], diag_every: 0 };
    let out = run(&s, rho0, &schedule, RkOrder::Euler, true).unwrap();
    assert!(out.error.is_none(), "{:?}", out.error);
    assert!(out.state.halving_count >= 1);
    assert!(out.state.tau < 4.0 * h);
    assert!(out.min_rho >= 0.0);
    assert!(out.max_mass_drift < 1e-12);
    assert_eq!(out.state.t, 0.5);
}

#[test]
fn zero_final_time_keeps_only_the_initial_state() {
    let space = Space1D::new(uniform_mesh_1d(0.0, 1.0, 4).unwrap(), 2).unwrap();
    let model = ModelSpec::new(|r| r, |r| 0.5 * r * r, |r| r);
    let s = Scheme1D::new(space, model, SchemeOptions::default()).unwrap();
    let rho0 = s.space().interpolate(&|x| 1.0 + x[0]);
    let schedule = Schedule { t_final: 0.0, tau: 0.01, snapshot_times: vec![0.5], diag_every: 1 };
    let out = run(&s, rho0.clone(), &schedule, RkOrder::Ssp2, true).unwrap();
    assert_eq!(out.snapshots.len(), 1);
    assert_eq!(out.snapshots[0].1, rho0);
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.state.step_count, 0);
}

#[test]
fn snapshots_land_on_requested_times() {
    let space = Space1D::new(uniform_mesh_1d(0.0, 1.0, 4).unwrap(), 2).unwrap();
    let model = ModelSpec::new(|r| r, |r| 0.5 * r * r, |r| r);
    let s = Scheme1D::new(space, model, SchemeOptions::default()).unwrap();
    let rho0 = s.space().interpolate(&|x| 1.0 + 0.1 * (2.0 * PI * x[0]).sin());
    let schedule = Schedule { t_final: 0.1, tau: 0.003, snapshot_times: vec![0.05, 0.01], diag_every: 0 };
    let out = run(&s, rho0, &schedule, RkOrder::Ssp3, false).unwrap();
    let times: Vec<f64> = out.snapshots.iter().map(|(t, _)| *t).collect();
    assert_eq!(times, vec![0.0, 0.01, 0.05, 0.1]);
    // the base step survives the shortened landing steps
    assert_eq!(out.state.tau, 0.003);
}

#[test]
fn compactly_supported_steady_state_is_fixed() {
    // ρ = max(½ − x²/2, 0) with H' = ρ and V = x²/2 gives ξ = ½ on the support
    let space = Space1D::new(uniform_mesh_1d(-2.0, 2.0, 8).unwrap(), 2).unwrap();
    let h = space.mesh().h(0);
    let model = ModelSpec::new(|r| r, |r| 0.5 * r * r, |r| r).with_potential(|x| 0.5 * x[0] * x[0]);
    let s = Scheme1D::new(space, model, SchemeOptions::default()).unwrap();
    let rho0 = s.space().interpolate(&|x| (0.5 - 0.5 * x[0] * x[0]).max(0.0));
    let mut state = SolverState::new(rho0.clone(), 0.005 * h * h);
    let controls = StepControls { order: RkOrder::Ssp2, limiter: true, t_final: 1.0 };
    for _ in 0..10 {
        advance(&s, &mut state, &controls).unwrap();
    }
    let diff = rho0
        .values()
        .iter()
        .zip(state.rho.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff <= 1e-13, "drift {diff}");
}

#[test]
fn advection_overrides_transport_exactly_in_average() {
    // with u ≡ 1 each Euler step shifts cell averages by the upwind flux difference
    let space = Space1D::new(uniform_mesh_1d(-PI, PI, 16).unwrap(), 1).unwrap();
    let model = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0)
        .with_potential(|x| x[0])
        .with_xi_override(XiBoundaryOverride { left: Some(-PI), right: Some(PI) });
    let s = Scheme1D::new(space, model, SchemeOptions::default()).unwrap();
    let rho = s.space().interpolate(&|x| 1.0 + x[0].sin());
    let u = s.compute_velocity(&rho).unwrap();
    for v in u[0].values() {
        assert!((v - 1.0).abs() < 1e-13);
    }
}
