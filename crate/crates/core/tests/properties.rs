use dgflow_core::prelude::*;
use proptest::prelude::*;

fn heat_log() -> ModelSpec {
    ModelSpec::new(|r| r, |r| xlogx(r) - r, |r: f64| r.ln())
}

fn porous() -> ModelSpec {
    ModelSpec::new(|r| r, |r| 0.5 * r * r, |r| r)
}

fn gaussian_kernel() -> Kernel {
    Kernel::smooth(|d| (-d[0] * d[0] / 0.3).exp())
}

fn scheme(model: ModelSpec, n: usize, k: usize) -> Scheme1D {
    let space = Space1D::new(uniform_mesh_1d(-2.0, 2.0, n).unwrap(), k).unwrap();
    Scheme1D::new(space, model, SchemeOptions::default()).unwrap()
}

fn field_from(values: &[f64], len: usize, npc: usize) -> NodalField {
    NodalField::new(values.iter().cycle().take(len).copied().collect(), npc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lobatto_rule_is_exact_to_degree_2k_minus_1(k in 1usize..=8, coeffs in prop::collection::vec(-1.0f64..1.0, 16)) {
        let rule = gauss_lobatto_rule(k).unwrap();
        let deg = 2 * k - 1;
        let p = |x: f64| coeffs[..=deg].iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = (0..=deg)
            .map(|j| if j % 2 == 0 { 2.0 * coeffs[j] / (j as f64 + 1.0) } else { 0.0 })
            .sum();
        let q: f64 = rule.nodes().iter().zip(rule.weights()).map(|(x, w)| w * p(*x)).sum();
        prop_assert!((q - exact).abs() < 1e-13);
    }

    #[test]
    fn derivative_matrix_reproduces_polynomials(k in 1usize..=8, coeffs in prop::collection::vec(-1.0f64..1.0, 9)) {
        let rule = gauss_lobatto_rule(k).unwrap();
        let ops = lagrange_operators(&rule).unwrap();
        let n = k + 1;
        let p = |x: f64| coeffs[..=k].iter().rev().fold(0.0, |acc, c| acc * x + c);
        let dp = |x: f64| (1..=k).rev().fold(0.0, |acc, j| acc * x + j as f64 * coeffs[j]);
        let vals: Vec<f64> = rule.nodes().iter().map(|&x| p(x)).collect();
        for r in 0..n {
            let d: f64 = (0..n).map(|s| ops.d(r, s) * vals[s]).sum();
            prop_assert!((d - dp(rule.nodes()[r])).abs() < 1e-10 * (1.0 + k as f64).powi(2));
        }
    }

    #[test]
    fn limiter_keeps_averages_and_positivity(k in 1usize..=5, n in 1usize..8, raw in prop::collection::vec(-1.0f64..2.0, 48)) {
        let space = Space1D::new(uniform_mesh_1d(0.0, 1.0, n).unwrap(), k).unwrap();
        let mut field = field_from(&raw, n * (k + 1), k + 1);
        // shift each cell so its average is non-negative
        let avgs = space.cell_averages(&field);
        for (c, a) in avgs.iter().enumerate() {
            if *a < 0.0 {
                for v in field.cell_mut(c) {
                    *v -= a;
                }
            }
        }
        let before = space.cell_averages(&field);
        let (out, _) = apply_positivity_limiter(&space, &field).unwrap();
        let after = space.cell_averages(&out);
        prop_assert!(out.min() >= 0.0);
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
        }
        let (again, rep) = apply_positivity_limiter(&space, &out).unwrap();
        prop_assert_eq!(again, out);
        prop_assert_eq!(rep.cells_modified, 0);
    }

    #[test]
    fn fft_matches_direct(k in 1usize..=4, n in 1usize..=48, hat in any::<bool>(), raw in prop::collection::vec(-1.0f64..1.0, 64)) {
        let mesh = uniform_mesh_1d(-1.0, 1.0, n).unwrap();
        let rule = gauss_lobatto_rule(k).unwrap();
        let (kernel, mode) = if hat {
            (Kernel::nonsmooth(|d| (0.2 - d[0].abs()).max(0.0), vec![-0.2, 0.0, 0.2]), ConvolutionMode::Exact)
        } else {
            (gaussian_kernel(), ConvolutionMode::Quadrature)
        };
        let m = kernel_moments(&kernel, &mesh, &rule, mode, 1e-12).unwrap();
        let field = field_from(&raw, n * (k + 1), k + 1);
        let a = convolve_direct(&m, &field).unwrap();
        let b = convolve_fft(&m, &field).unwrap();
        let scale = a.max_abs().max(1e-300);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn quadrature_convolution_is_self_adjoint(k in 1usize..=4, n in 2usize..=20, ra in prop::collection::vec(-1.0f64..1.0, 40), rb in prop::collection::vec(-1.0f64..1.0, 40)) {
        let space = Space1D::new(uniform_mesh_1d(-1.0, 1.0, n).unwrap(), k).unwrap();
        let conv = Convolver::for_space_1d(&gaussian_kernel(), &space, ConvolutionMode::Quadrature, ConvolutionBackend::Direct, 1e-12).unwrap();
        let a = field_from(&ra, n * (k + 1), k + 1);
        let b = field_from(&rb, n * (k + 1), k + 1);
        let ab = space.inner(&a, &conv.apply(&space, &b).unwrap());
        let ba = space.inner(&b, &conv.apply(&space, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-13);
    }

    #[test]
    fn rhs_conserves_mass(k in 1usize..=4, n in 2usize..=24, raw in prop::collection::vec(0.1f64..2.0, 40)) {
        let model = heat_log().with_potential(|x| x[0] * x[0]).with_kernel(gaussian_kernel());
        let s = scheme(model, n, k);
        let rho = field_from(&raw, n * (k + 1), k + 1);
        let rhs = s.rhs(&rho, 0.0).unwrap();
        let scale = rhs.max_abs() * 4.0;
        prop_assert!(s.space().integrate(&rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn entropy_identity_holds(k in 1usize..=4, n in 2usize..=24, raw in prop::collection::vec(0.1f64..2.0, 40)) {
        let model = heat_log().with_potential(|x| x[0].cos()).with_kernel(gaussian_kernel());
        let s = scheme(model, n, k);
        let rho = field_from(&raw, n * (k + 1), k + 1);
        let b = s.entropy_budget(&rho, 0.0).unwrap();
        let scale = b.pairing.abs().max(b.dissipation).max(b.jump_dissipation.abs()).max(1e-300);
        prop_assert!(b.residual().abs() <= 1e-10 * scale);
    }

    #[test]
    fn interface_jumps_dissipate(k in 1usize..=4, n in 2usize..=24, heat in any::<bool>(), raw in prop::collection::vec(0.0f64..2.0, 40)) {
        let model = if heat { heat_log() } else { porous() };
        let s = scheme(model, n, k);
        let rho = field_from(&raw, n * (k + 1), k + 1);
        let ev = s.evaluate(&rho, 0.0).unwrap();
        prop_assert!(ev.jump_dissipation >= 0.0);
        prop_assert!(ev.dissipation >= 0.0);
    }

    #[test]
    fn euler_within_bound_keeps_averages_non_negative(k in 1usize..=4, n in 2usize..=16, raw in prop::collection::vec(0.0f64..2.0, 40)) {
        let s = scheme(porous().with_potential(|x| x[0] * x[0]), n, k);
        let mut rho = field_from(&raw, n * (k + 1), k + 1);
        limit_in_place(s.space(), &mut rho).unwrap();
        let dt = max_stable_dt(&s, &rho).unwrap();
        prop_assume!(dt.is_finite() && dt > 0.0);
        let next = euler_stage(&s, &rho, 0.0, dt).unwrap();
        for a in s.space().cell_averages(&next) {
            prop_assert!(a >= -1e-13);
        }
    }
}

#[test]
fn summation_by_parts_for_all_degrees() {
    for k in 1..=8 {
        let rule = gauss_lobatto_rule(k).unwrap();
        let ops = lagrange_operators(&rule).unwrap();
        let n = k + 1;
        for r in 0..n {
            let row: f64 = (0..n).map(|s| ops.d(r, s)).sum();
            assert!(row.abs() < 1e-12, "k={k} row {r} sums to {row}");
            for s in 0..n {
                let sbp = ops.mass()[r] * ops.d(r, s) + ops.mass()[s] * ops.d(s, r);
                let b = if r == s { ops.boundary()[r] } else { 0.0 };
                assert!((sbp - b).abs() < 1e-12, "k={k} ({r},{s})");
            }
        }
    }
}
