use super::{check_finite, side_bound, Evaluation, SchemeOptions, SpatialOperator};
use crate::convolution::{ConvolutionMode, Convolver};
use crate::error::Result;
use crate::field::{CellSpace, NodalField, Space2D};
use crate::model::ModelSpec;

/// The 2D scheme on a periodic Cartesian mesh with tensor elements.
#[derive(Debug)]
pub struct Scheme2D {
    space: Space2D,
    model: ModelSpec,
    potential: Vec<f64>,
    convolver: Option<Convolver>,
    alpha_factor: f64,
}

/// A Lobatto line through a row (axis 0) or column (axis 1) of cells.
#[derive(Clone, Copy)]
struct Line {
    /// Offset of the line's first node inside a cell.
    local: usize,
    /// Stride between consecutive line nodes inside a cell.
    stride: usize,
}

impl Scheme2D {
    pub fn new(space: Space2D, model: ModelSpec, options: SchemeOptions) -> Result<Self> {
        options.validate()?;
        let potential = match model.potential() {
            Some(v) => (0..space.n_dofs()).map(|d| v(space.point(d))).collect(),
            None => vec![0.0; space.n_dofs()],
        };
        let convolver = match model.kernel() {
            Some(kernel) => {
                let mode = options.convolution.unwrap_or_else(|| ConvolutionMode::for_kernel(kernel));
                Some(Convolver::for_space_2d(kernel, &space, mode, options.backend, options.moment_tol)?)
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

    fn n(&self) -> usize {
        self.space.rule().len()
    }

    /// Line `t` along `axis`: x-lines are `s·n + r` for fixed `s`, y-lines
    /// are `s·n + r` for fixed `r`.
    fn line(&self, axis: usize, t: usize) -> Line {
        let n = self.n();
        if axis == 0 {
            Line { local: t * n, stride: 1 }
        } else {
            Line { local: t, stride: n }
        }
    }

    /// Cell index of `(i, j)` stepping `along` cells on `axis`, with wrap.
    fn neighbour(&self, axis: usize, c: usize) -> usize {
        let (nx, ny) = (self.space.cells_x(), self.space.cells_y());
        let (i, j) = (c % nx, c / nx);
        if axis == 0 {
            j * nx + (i + 1) % nx
        } else {
            ((j + 1) % ny) * nx + i
        }
    }

    fn width(&self, axis: usize, c: usize) -> f64 {
        let nx = self.space.cells_x();
        if axis == 0 {
            self.space.mesh().x.h(c % nx)
        } else {
            self.space.mesh().y.h(c / nx)
        }
    }

    /// Cell width across the line direction, i.e. the interface length.
    fn cross_width(&self, axis: usize, c: usize) -> f64 {
        self.width(1 - axis, c)
    }

    /// Applies the per-line weak divergence along `axis` with interface
    /// values `flux(c, t)` on the right/top edge of cell `c`, line `t`.
    fn sweep(&self, axis: usize, values: &[f64], edge: &[f64], out: &mut [f64]) {
        let n = self.n();
        let npc = n * n;
        let nc = self.space.n_cells();
        let ops = self.space.ops();
        let (nx, ny) = (self.space.cells_x(), self.space.cells_y());
        for c in 0..nc {
            let (i, j) = (c % nx, c / nx);
            let prev = if axis == 0 {
                j * nx + (i + nx - 1) % nx
            } else {
                ((j + ny - 1) % ny) * nx + i
            };
            for t in 0..n {
                let line = self.line(axis, t);
                ops.weak_divergence_strided(
                    self.width(axis, c),
                    values,
                    c * npc + line.local,
                    line.stride,
                    edge[prev * n + t],
                    edge[c * n + t],
                    out,
                );
            }
        }
    }

    /// Node indices `(minus, plus)` of the interface on the right/top of
    /// cell `c` along line `t`.
    fn interface_nodes(&self, axis: usize, c: usize, t: usize) -> (usize, usize) {
        let n = self.n();
        let npc = n * n;
        let line = self.line(axis, t);
        let minus = c * npc + line.local + (n - 1) * line.stride;
        let plus = self.neighbour(axis, c) * npc + line.local;
        (minus, plus)
    }

    fn velocity_from_xi(&self, xi: &NodalField) -> [NodalField; 2] {
        let n = self.n();
        let nc = self.space.n_cells();
        let x = xi.values();
        let mut u = [self.space.zeros(), self.space.zeros()];
        for (axis, comp) in u.iter_mut().enumerate() {
            let mut hat = vec![0.0; nc * n];
            for c in 0..nc {
                for t in 0..n {
                    let (m, p) = self.interface_nodes(axis, c, t);
                    hat[c * n + t] = 0.5 * (x[m] + x[p]);
                }
            }
            self.sweep(axis, x, &hat, comp.values_mut());
        }
        u
    }
}

impl SpatialOperator for Scheme2D {
    type Space = Space2D;

    fn space(&self) -> &Space2D {
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
        let n = self.n();
        let nc = self.space.n_cells();
        let r = rho.values();
        let w = self.space.rule().weights();
        let fvals: Vec<f64> = r.iter().map(|&v| self.model.f(v)).collect();
        let gvals: Vec<f64> = r.iter().map(|&v| self.model.g(v)).collect();

        let mut rhs = self.space.zeros();
        let mut tmp = self.space.zeros();
        let mut jumps = 0.0;
        for axis in 0..2 {
            let uv = u[axis].values();
            let fu: Vec<f64> = fvals.iter().zip(uv).map(|(f, u)| f * u).collect();
            let mut flux = vec![0.0; nc * n];
            for c in 0..nc {
                let half_len = 0.5 * self.cross_width(axis, c);
                for t in 0..n {
                    let (m, p) = self.interface_nodes(axis, c, t);
                    let alpha = self.alpha_factor * uv[m].abs().max(uv[p].abs());
                    flux[c * n + t] = 0.5 * (fu[p] + fu[m]) + 0.5 * alpha * (gvals[p] - gvals[m]);
                    jumps += half_len * w[t] * 0.5 * alpha * (gvals[p] - gvals[m]) * (xi.values()[p] - xi.values()[m]);
                }
            }
            let target = if axis == 0 { rhs.values_mut() } else { tmp.values_mut() };
            self.sweep(axis, &fu, &flux, target);
        }
        rhs.axpy(1.0, &tmp);

        if let Some(src) = self.model.source() {
            for (d, v) in rhs.values_mut().iter_mut().enumerate() {
                *v += src(self.space.point(d), t);
            }
        }
        check_finite(&rhs, "right-hand side")?;

        let rw = self.space.reference_weights();
        let npc = n * n;
        let mut dissipation = 0.0;
        for c in 0..nc {
            let mut s = 0.0;
            for a in 0..npc {
                let d = c * npc + a;
                let (ux, uy) = (u[0].values()[d], u[1].values()[d]);
                s += rw[a] * fvals[d] * (ux * ux + uy * uy);
            }
            dissipation += self.space.cell_volume(c) * s;
        }

        let [ux, uy] = u;
        Ok(Evaluation {
            xi,
            velocity: vec![ux, uy],
            rhs,
            dissipation,
            jump_dissipation: jumps,
        })
    }

    fn max_stable_dt(&self, rho: &NodalField) -> Result<f64> {
        let xi = self.compute_xi(rho)?;
        let u = self.velocity_from_xi(&xi);
        let n = self.n();
        let nc = self.space.n_cells();
        let w = self.space.rule().weights();
        let (w_first, w_last) = (w[0], w[n - 1]);
        let r = rho.values();
        let mut bound = f64::INFINITY;
        for axis in 0..2 {
            let uv = u[axis].values();
            for c in 0..nc {
                let next = self.neighbour(axis, c);
                for t in 0..n {
                    let (m, p) = self.interface_nodes(axis, c, t);
                    let alpha = self.alpha_factor * uv[m].abs().max(uv[p].abs());
                    let (fp, gp) = (self.model.f(r[p]), self.model.g(r[p]));
                    let (fm, gm) = (self.model.f(r[m]), self.model.g(r[m]));
                    let plus = side_bound(self.width(axis, next), w_first, r[p], 2.0 * (fp * uv[p] + alpha * gp));
                    let minus = side_bound(self.width(axis, c), w_last, r[m], 2.0 * (alpha * gm - fm * uv[m]));
                    bound = bound.min(plus).min(minus);
                }
            }
        }
        Ok(bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{uniform_mesh_1d, Mesh2D};
    use crate::model::xlogx;
    use crate::spatial::Scheme1D;
    use crate::field::Space1D;

    fn heat() -> ModelSpec {
        ModelSpec::new(|r| r, |r| xlogx(r) - r, |r: f64| r.ln())
    }

    #[test]
    fn y_independent_field_reduces_to_1d() {
        let k = 3;
        let (nx, ny) = (6, 3);
        let s2 = Scheme2D::new(
            Space2D::new(Mesh2D::uniform((-1.0, 1.0), (0.0, 0.7), nx, ny).unwrap(), k).unwrap(),
            heat().with_potential(|x| x[0] * x[0]),
            SchemeOptions::default(),
        )
        .unwrap();
        let s1 = Scheme1D::new(
            Space1D::new(uniform_mesh_1d(-1.0, 1.0, nx).unwrap(), k).unwrap(),
            heat().with_potential(|x| x[0] * x[0]),
            SchemeOptions::default(),
        )
        .unwrap();
        let prof = |x: f64| 1.2 + (3.0 * x).sin() * 0.5;
        let r2 = s2.space().interpolate(&|p| prof(p[0]));
        let r1 = s1.space().interpolate(&|p| prof(p[0]));
        let a = s2.rhs(&r2, 0.0).unwrap();
        let b = s1.rhs(&r1, 0.0).unwrap();
        let n = k + 1;
        for j in 0..ny {
            for i in 0..nx {
                let cell = a.cell(j * nx + i);
                for s in 0..n {
                    for r in 0..n {
                        assert!((cell[s * n + r] - b.cell(i)[r]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn mass_conserved_and_entropy_identity() {
        let s = Scheme2D::new(
            Space2D::new(Mesh2D::uniform((0.0, 2.0), (0.0, 1.0), 5, 4).unwrap(), 2).unwrap(),
            heat()
                .with_potential(|x| x[0] * x[1])
                .with_kernel(crate::model::Kernel::smooth(|d| (-(d[0] * d[0] + d[1] * d[1])).exp())),
            SchemeOptions::default(),
        )
        .unwrap();
        let rho = s.space().interpolate(&|p| 1.0 + 0.5 * (3.0 * p[0]).sin() * (5.0 * p[1]).cos());
        let ev = s.evaluate(&rho, 0.0).unwrap();
        let mass = s.space().integrate(&rho);
        assert!(s.space().integrate(&ev.rhs).abs() < 1e-12 * mass);
        let b = s.entropy_budget(&rho, 0.0).unwrap();
        let scale = b.dissipation.abs() + b.jump_dissipation.abs();
        assert!(b.residual().abs() < 1e-10 * scale, "{b:?}");
        assert!(b.pairing <= 1e-12);
    }

    #[test]
    fn stable_dt_unconstrained_at_rest() {
        let s = Scheme2D::new(
            Space2D::new(Mesh2D::uniform((0.0, 1.0), (0.0, 1.0), 3, 3).unwrap(), 1).unwrap(),
            heat(),
            SchemeOptions::default(),
        )
        .unwrap();
        let rho = s.space().interpolate(&|_| 2.0);
        assert_eq!(s.max_stable_dt(&rho).unwrap(), f64::INFINITY);
    }
}
