use super::{check_finite, lax_friedrichs_flux, side_bound, Evaluation, InterfaceState, SchemeOptions, SpatialOperator, Trace};
use crate::convolution::{ConvolutionMode, Convolver};
use crate::error::Result;
use crate::field::{CellSpace, NodalField, Space1D};
use crate::model::ModelSpec;

/// The 1D scheme on a periodic interval partition.
#[derive(Debug)]
pub struct Scheme1D {
    space: Space1D,
    model: ModelSpec,
    potential: Vec<f64>,
    convolver: Option<Convolver>,
    alpha_factor: f64,
}

impl Scheme1D {
    pub fn new(space: Space1D, model: ModelSpec, options: SchemeOptions) -> Result<Self> {
        options.validate()?;
        let potential = match model.potential() {
            Some(v) => space.nodes().iter().map(|x| v(std::slice::from_ref(x))).collect(),
            None => vec![0.0; space.n_dofs()],
        };
        let convolver = match model.kernel() {
            Some(kernel) => {
                let mode = options.convolution.unwrap_or_else(|| ConvolutionMode::for_kernel(kernel));
                Some(Convolver::for_space_1d(kernel, &space, mode, options.backend, options.moment_tol)?)
            }
            None => None,
        };
        Ok(Self {
            space,
            model,
            potential,
            convolver,
            alpha_factor: options.alpha_factor,
        })
    }

    pub fn convolver(&self) -> Option<&Convolver> {
        self.convolver.as_ref()
    }

    /// Interface `j` separates cell `j` (minus side) from cell `j+1` (plus side).
    fn interface(&self, j: usize, rho: &[f64], u: &[f64], xi: &[f64]) -> InterfaceState {
        let n = self.space.nodes_per_cell();
        let nc = self.space.n_cells();
        let lm = j * n + n - 1;
        let rp = ((j + 1) % nc) * n;
        let trace = |d: usize| Trace {
            rho: rho[d],
            f: self.model.f(rho[d]),
            g: self.model.g(rho[d]),
            u: u[d],
            xi: xi[d],
        };
        InterfaceState {
            minus: trace(lm),
            plus: trace(rp),
        }
    }

    /// `u` from `ξ` with the central flux and the model's edge overrides.
    pub fn velocity_from_xi(&self, xi: &NodalField) -> NodalField {
        let n = self.space.nodes_per_cell();
        let nc = self.space.n_cells();
        let mesh = self.space.mesh();
        let ops = self.space.ops();
        let x = xi.values();
        let xi_hat: Vec<f64> = (0..nc)
            .map(|j| 0.5 * (x[j * n + n - 1] + x[((j + 1) % nc) * n]))
            .collect();
        let over = self.model.xi_override();
        let mut u = self.space.zeros();
        for i in 0..nc {
            let left = match (i, over.left) {
                (0, Some(v)) => v,
                _ => xi_hat[(i + nc - 1) % nc],
            };
            let right = match over.right {
                Some(v) if i == nc - 1 => v,
                _ => xi_hat[i],
            };
            ops.weak_divergence(mesh.h(i), xi.cell(i), left, right, u.cell_mut(i));
        }
        u
    }
}

impl SpatialOperator for Scheme1D {
    type Space = Space1D;

    fn space(&self) -> &Space1D {
        &self.space
    }

    fn model(&self) -> &ModelSpec {
        &self.model
    }

    fn potential_values(&self) -> &[f64] {
        &self.potential
    }

    fn convolve(&self, rho: &NodalField) -> Result<Option<NodalField>> {
        match &self.convolver {
            Some(c) => Ok(Some(c.apply(&self.space, rho)?)),
            None => Ok(None),
        }
    }

    fn compute_xi(&self, rho: &NodalField) -> Result<NodalField> {
        self.space.check_shape(rho)?;
        let conv = self.convolve(rho)?;
        let mut xi = self.space.zeros();
        for (d, v) in xi.values_mut().iter_mut().enumerate() {
            *v = self.model.h_prime(rho.values()[d]) + self.potential[d];
        }
        if let Some(c) = conv {
            xi.axpy(1.0, &c);
        }
        Ok(xi)
    }

    fn evaluate(&self, rho: &NodalField, t: f64) -> Result<Evaluation> {
        let xi = self.compute_xi(rho)?;
        let u = self.velocity_from_xi(&xi);
        let n = self.space.nodes_per_cell();
        let nc = self.space.n_cells();
        let mesh = self.space.mesh();
        let ops = self.space.ops();
        let r = rho.values();

        let fvals: Vec<f64> = r.iter().map(|&v| self.model.f(v)).collect();
        let fu: Vec<f64> = fvals.iter().zip(u.values()).map(|(f, u)| f * u).collect();

        let mut flux = vec![0.0; nc];
        let mut jumps = 0.0;
        for (j, fl) in flux.iter_mut().enumerate() {
            let st = self.interface(j, r, u.values(), xi.values());
            let alpha = self.alpha_factor * st.alpha();
            *fl = lax_friedrichs_flux(&st, alpha);
            jumps += 0.5 * alpha * (st.plus.g - st.minus.g) * (st.plus.xi - st.minus.xi);
        }

        let mut rhs = self.space.zeros();
        for i in 0..nc {
            let left = flux[(i + nc - 1) % nc];
            ops.weak_divergence(mesh.h(i), &fu[i * n..(i + 1) * n], left, flux[i], rhs.cell_mut(i));
        }
        if let Some(src) = self.model.source() {
            for (d, v) in rhs.values_mut().iter_mut().enumerate() {
                *v += src(self.space.point(d), t);
            }
        }
        check_finite(&rhs, "right-hand side")?;

        let w = self.space.reference_weights();
        let mut dissipation = 0.0;
        for i in 0..nc {
            let mut s = 0.0;
            for q in 0..n {
                let d = i * n + q;
                s += w[q] * fvals[d] * u.values()[d] * u.values()[d];
            }
            dissipation += mesh.h(i) * s;
        }

        Ok(Evaluation {
            xi,
            velocity: vec![u],
            rhs,
            dissipation,
            jump_dissipation: jumps,
        })
    }

    fn max_stable_dt(&self, rho: &NodalField) -> Result<f64> {
        let xi = self.compute_xi(rho)?;
        let u = self.velocity_from_xi(&xi);
        let nc = self.space.n_cells();
        let w = self.space.rule().weights();
        let (w_first, w_last) = (w[0], w[w.len() - 1]);
        let mesh = self.space.mesh();
        let mut bound = f64::INFINITY;
        for j in 0..nc {
            let st = self.interface(j, rho.values(), u.values(), xi.values());
            let alpha = self.alpha_factor * st.alpha();
            let p = &st.plus;
            let m = &st.minus;
            let plus = side_bound(mesh.h((j + 1) % nc), w_first, p.rho, p.f * p.u + alpha * p.g);
            let minus = side_bound(mesh.h(j), w_last, m.rho, alpha * m.g - m.f * m.u);
            bound = bound.min(plus).min(minus);
        }
        Ok(bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_mesh_1d;
    use crate::model::{xlogx, FluxSplit, Kernel, XiBoundaryOverride};
    use std::f64::consts::PI;

    fn heat_log() -> ModelSpec {
        ModelSpec::new(|r| r, |r| xlogx(r) - r, |r: f64| r.ln())
    }

    fn scheme(model: ModelSpec, a: f64, b: f64, n: usize, k: usize) -> Scheme1D {
        let space = Space1D::new(uniform_mesh_1d(a, b, n).unwrap(), k).unwrap();
        Scheme1D::new(space, model, SchemeOptions::default()).unwrap()
    }

    #[test]
    fn xi_examples() {
        let s = scheme(heat_log(), -PI, PI, 8, 2);
        let rho = s.space().interpolate(&|_| 2.0);
        let xi = s.compute_xi(&rho).unwrap();
        assert!(xi.values().iter().all(|v| (v - 2f64.ln()).abs() < 1e-15));

        let adv = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0).with_potential(|x| x[0]);
        let s = scheme(adv, -PI, PI, 8, 3);
        let xi = s.compute_xi(&s.space().interpolate(&|_| 1.0)).unwrap();
        assert_eq!(xi.values(), s.space().nodes());

        let porous = ModelSpec::new(|r| r, |r| r * r, |r| 2.0 * r).with_potential(|x| 0.5 * x[0] * x[0]);
        let s = scheme(porous, -2.0, 2.0, 6, 2);
        let xi = s.compute_xi(&s.space().interpolate(&|_| 0.3)).unwrap();
        for (v, x) in xi.values().iter().zip(s.space().nodes()) {
            assert!((v - (0.6 + 0.5 * x * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_xi_gives_zero_velocity() {
        let s = scheme(heat_log(), 0.0, 1.0, 5, 4);
        let xi = s.space().interpolate(&|_| 3.7);
        let u = s.velocity_from_xi(&xi);
        assert!(u.max_abs() < 1e-12);
    }

    #[test]
    fn advection_overrides_give_unit_velocity() {
        let adv = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0)
            .with_potential(|x| x[0])
            .with_xi_override(XiBoundaryOverride {
                left: Some(-PI),
                right: Some(PI),
            });
        let s = scheme(adv, -PI, PI, 10, 3);
        let rho = s.space().interpolate(&|x| 1.0 + x[0].sin());
        let ev = s.evaluate(&rho, 0.0).unwrap();
        for v in ev.velocity[0].values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_matches_dense_matrix_assembly() {
        // four cells, ξ = x on [0, 4), periodic jump at the seam
        let s = scheme(heat_log(), 0.0, 4.0, 4, 2);
        let xi = s.space().interpolate(&|x| x[0]);
        let u = s.velocity_from_xi(&xi);
        let ops = s.space().ops();
        let (m, d) = (ops.mass(), ops.diff());
        let xv = xi.values();
        let hat = |j: usize| 0.5 * (xv[j * 3 + 2] + xv[((j + 1) % 4) * 3]);
        for i in 0..4 {
            let star = [hat((i + 3) % 4), 0.0, hat(i)];
            let b = [-1.0, 0.0, 1.0];
            for r in 0..3 {
                // (2/h) M^{-1} (-D^T M ξ + B ξ*)
                let mut acc = 0.0;
                for q in 0..3 {
                    acc -= d[q * 3 + r] * m[q] * xv[i * 3 + q];
                }
                acc += b[r] * star[r];
                let expect = 2.0 * acc / m[r];
                assert!((u.cell(i)[r] - expect).abs() < 1e-13);
            }
        }
        // interior cells see a continuous linear ξ and recover the slope
        for v in u.cell(1).iter().chain(u.cell(2)) {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_state_is_steady() {
        let model = heat_log().with_potential(|_| 0.25);
        let s = scheme(model, -1.0, 1.0, 7, 3);
        let rhs = s.rhs(&s.space().interpolate(&|_| 1.7), 0.0).unwrap();
        assert!(rhs.max_abs() < 1e-13);
    }

    #[test]
    fn mass_is_conserved_by_rhs() {
        let model = ModelSpec::new(|r| r, |r| r * r, |r| 2.0 * r)
            .with_potential(|x| x[0].cos())
            .with_kernel(Kernel::smooth(|d| (-10.0 * d[0] * d[0]).exp()));
        let s = scheme(model, -1.0, 1.0, 9, 3);
        let rho = s.space().interpolate(&|x| (2.0 * x[0]).exp());
        let rhs = s.rhs(&rho, 0.0).unwrap();
        assert!(s.space().integrate(&rhs).abs() < 1e-12 * s.space().integrate(&rho));
    }

    #[test]
    fn cell_average_evolution_is_flux_difference() {
        let s = scheme(heat_log(), -1.0, 1.0, 6, 2);
        let rho = s.space().interpolate(&|x| 1.5 + x[0] * x[0]);
        let rhs = s.rhs(&rho, 0.0).unwrap();
        let avg = s.space().cell_averages(&rhs);
        let ev = s.evaluate(&rho, 0.0).unwrap();
        let nc = 6;
        let flux: Vec<f64> = (0..nc)
            .map(|j| {
                let st = s.interface(j, rho.values(), ev.velocity[0].values(), ev.xi.values());
                super::super::interface_flux_fu(&st)
            })
            .collect();
        for i in 0..nc {
            let expect = (flux[i] - flux[(i + nc - 1) % nc]) / s.space().mesh().h(i);
            assert!((avg[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn stable_dt_examples() {
        // u ≡ 0 gives no constraint
        let s = scheme(heat_log(), 0.0, 1.0, 4, 1);
        let rho = s.space().interpolate(&|_| 1.0);
        assert_eq!(s.max_stable_dt(&rho).unwrap(), f64::INFINITY);

        // unit transport with ρ ≡ 1 and k = 1: the plus side gives h/2
        let adv = ModelSpec::new(|r| r, |_| 0.0, |_| 0.0)
            .with_potential(|x| x[0])
            .with_xi_override(XiBoundaryOverride {
                left: Some(0.0),
                right: Some(1.0),
            })
            .with_flux_split(FluxSplit::Linear(1.0));
        let s = scheme(adv, 0.0, 1.0, 4, 1);
        let rho = s.space().interpolate(&|_| 1.0);
        assert!((s.max_stable_dt(&rho).unwrap() - 0.25 / 2.0).abs() < 1e-14);

        // vacuum everywhere
        let rho = s.space().zeros();
        assert_eq!(s.max_stable_dt(&rho).unwrap(), f64::INFINITY);
    }
}
