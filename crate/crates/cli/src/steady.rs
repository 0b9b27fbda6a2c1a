//! Steady-state report for a finished 1D run: `max |ρ ∂x ξ|` over the nodes
//! and the spread of `ξ` on each connected piece of the support.

use dgflow_core::prelude::*;

/// Nodes with `ρ` above this belong to the numerical support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

/// One connected piece of the support.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportComponent {
    pub x_start: f64,
    pub x_end: f64,
    pub xi_min: f64,
    pub xi_max: f64,
}

impl SupportComponent {
    pub fn spread(&self) -> f64 {
        self.xi_max - self.xi_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    /// `max |ρ · ∂x ξ|` with the derivative taken cell by cell through `D`.
    pub max_flux: f64,
    pub components: Vec<SupportComponent>,
}

impl SteadyReport {
    pub fn disconnected(&self) -> bool {
        self.components.len() > 1
    }
}

pub fn steady_state_check(space: &Space1D, rho: &NodalField, xi: &NodalField) -> Result<SteadyReport> {
    space.check_shape(rho)?;
    space.check_shape(xi)?;
    let npc = space.nodes_per_cell();
    let mut dxi = vec![0.0; npc];
    let mut max_flux = 0.0f64;
    for c in 0..space.n_cells() {
        space.ops().derivative(space.mesh().h(c), xi.cell(c), &mut dxi);
        for (r, d) in rho.cell(c).iter().zip(&dxi) {
            max_flux = max_flux.max((r * d).abs());
        }
    }

    // runs of supported nodes in dof order; the periodic seam joins the ends
    let nodes = space.nodes();
    let mut comps: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (d, r) in rho.values().iter().enumerate() {
        match (r > &SUPPORT_THRESHOLD, start) {
            (true, None) => start = Some(d),
            (false, Some(s)) => {
                comps.push((s, d - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        comps.push((s, rho.len() - 1));
    }
    let wraps = comps.len() > 1 && comps[0].0 == 0 && comps.last().map_or(false, |c| c.1 == rho.len() - 1);
    let mut components: Vec<SupportComponent> = Vec::new();
    let span = |a: usize, b: usize, acc: &mut SupportComponent| {
        for v in &xi.values()[a..=b] {
            acc.xi_min = acc.xi_min.min(*v);
            acc.xi_max = acc.xi_max.max(*v);
        }
    };
    for &(a, b) in &comps {
        let mut c = SupportComponent {
            x_start: nodes[a],
            x_end: nodes[b],
            xi_min: f64::INFINITY,
            xi_max: f64::NEG_INFINITY,
        };
        span(a, b, &mut c);
        components.push(c);
    }
    if wraps {
        let last = components.pop().expect("at least two components");
        let first = &mut components[0];
        first.x_start = last.x_start;
        first.xi_min = first.xi_min.min(last.xi_min);
        first.xi_max = first.xi_max.max(last.xi_max);
    }
    Ok(SteadyReport { max_flux, components })
}
