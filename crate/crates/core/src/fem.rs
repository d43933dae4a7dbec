//! Convex minimization over cell-based scalar fields.

use crate::elastic::{corner_forces, corner_gradients, corner_stiffness, corner_weight, SolveOptions, SolveReport};
use crate::energy::CellLaw;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, pcg, CellPattern};

/// `J(u) = Σ_cells Σ_q W f_c(G_q u) − load·u` over a list of 4-node cells.
pub struct CellSystem<'a> {
    pub h: f64,
    pub cells: &'a [[usize; 4]],
    pub laws: &'a [CellLaw],
    pub fixed: &'a [bool],
    pub load: Option<&'a [f64]>,
}

struct Assembly {
    free: Vec<usize>,
    free_idx: Vec<u32>,
    pattern: CellPattern,
}

impl<'a> CellSystem<'a> {
    fn assembly(&self) -> Assembly {
        let n = self.fixed.len();
        let mut free_idx = vec![u32::MAX; n];
        let mut free = Vec::new();
        for d in 0..n {
            if !self.fixed[d] {
                free_idx[d] = free.len() as u32;
                free.push(d);
            }
        }
        let cells: Vec<[Option<u32>; 4]> = self
            .cells
            .iter()
            .map(|c| c.map(|k| (free_idx[k] != u32::MAX).then_some(free_idx[k])))
            .collect();
        let pattern = CellPattern::new(free.len(), &cells);
        Assembly { free, free_idx, pattern }
    }

    fn cell_values(&self, c: usize, u: &[f64]) -> [f64; 4] {
        self.cells[c].map(|d| u[d])
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let w = corner_weight(self.h);
        let mut e = 0.0;
        for c in 0..self.cells.len() {
            let g = corner_gradients(self.cell_values(c, u), self.h);
            let law = &self.laws[c];
            e += w * (law.f(g[0]) + law.f(g[1]) + law.f(g[2]) + law.f(g[3]));
        }
        if let Some(b) = self.load {
            e -= dot(b, u);
        }
        e
    }

    fn gradient(&self, asm: &mut Assembly, u: &[f64], metric: Option<f64>) -> Vec<f64> {
        let mut g = vec![0.0; asm.free.len()];
        if metric.is_some() {
            asm.pattern.clear();
        }
        for c in 0..self.cells.len() {
            let law = &self.laws[c];
            let gr = corner_gradients(self.cell_values(c, u), self.h);
            let s = [law.grad(gr[0]), law.grad(gr[1]), law.grad(gr[2]), law.grad(gr[3])];
            let fc = corner_forces(&s, self.h);
            for a in 0..4 {
                let k = asm.free_idx[self.cells[c][a]];
                if k != u32::MAX {
                    g[k as usize] += fc[a];
                }
            }
            if let Some(eps) = metric {
                let hs = [
                    law.hessian(gr[0], eps),
                    law.hessian(gr[1], eps),
                    law.hessian(gr[2], eps),
                    law.hessian(gr[3], eps),
                ];
                asm.pattern.add_cell(c, &corner_stiffness(&hs, self.h));
            }
        }
        if let Some(b) = self.load {
            for (k, &d) in asm.free.iter().enumerate() {
                g[k] -= b[d];
            }
        }
        g
    }

    /// Norm of the gradient with all free values set to zero: the size of the data.
    fn reference(&self, asm: &mut Assembly, u: &[f64]) -> f64 {
        let mut zeroed = u.to_vec();
        for &d in &asm.free {
            zeroed[d] = 0.0;
        }
        norm2(&self.gradient(asm, &zeroed, None))
    }

    /// Minimize in place from the given start; fixed entries of `u` are left unchanged.
    ///
    /// Quadratic laws are solved by one conjugate-gradient solve to relative residual
    /// `opts.linear_tol`; otherwise damped Newton with metric regularization `eps`, stopped when the gradient
    /// norm falls below `opts.newton_tol` times the data norm.
    pub fn minimize(&self, u: &mut [f64], quadratic: bool, eps: f64, opts: SolveOptions) -> Result<SolveReport> {
        let mut asm = self.assembly();
        if asm.free.is_empty() {
            return Ok(SolveReport::default());
        }
        let reference = self.reference(&mut asm, u);
        if reference == 0.0 {
            for &d in &asm.free {
                u[d] = 0.0;
            }
            return Ok(SolveReport::default());
        }
        if quadratic {
            self.linear(&mut asm, u, reference, opts.linear_tol)
        } else {
            self.newton(&mut asm, u, reference, eps, opts)
        }
    }

    fn linear(&self, asm: &mut Assembly, u: &mut [f64], reference: f64, tol: f64) -> Result<SolveReport> {
        let g = self.gradient(asm, u, Some(0.0));
        let gn = norm2(&g);
        if gn <= tol * reference {
            return Ok(SolveReport { residual: gn / reference, ..Default::default() });
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut delta = vec![0.0; rhs.len()];
        let rep = pcg(&asm.pattern.matrix, &rhs, &mut delta, tol * reference / gn, 20 * rhs.len() + 100)?;
        for (k, &d) in asm.free.iter().enumerate() {
            u[d] += delta[k];
        }
        Ok(SolveReport {
            iterations: rep.iterations,
            newton_steps: 1,
            residual: rep.residual * gn / reference,
            ..Default::default()
        })
    }

    fn newton(&self, asm: &mut Assembly, u: &mut [f64], reference: f64, eps: f64, opts: SolveOptions) -> Result<SolveReport> {
        let mut energy = self.energy(u);
        let mut total_iters = 0;
        let mut trial = u.to_vec();
        for step in 1..=opts.max_newton {
            let g = self.gradient(asm, u, Some(eps));
            let gn = norm2(&g);
            if gn <= opts.newton_tol * reference {
                return Ok(SolveReport {
                    iterations: total_iters,
                    newton_steps: step - 1,
                    residual: gn / reference,
                    ..Default::default()
                });
            }
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut delta = vec![0.0; rhs.len()];
            let forcing = (gn / reference).sqrt().clamp(1e-10, 1e-2);
            let rep = pcg(&asm.pattern.matrix, &rhs, &mut delta, forcing, 20 * rhs.len() + 100)?;
            total_iters += rep.iterations;
            let slope = dot(&g, &delta);
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..60 {
                for (k, &d) in asm.free.iter().enumerate() {
                    trial[d] = u[d] + alpha * delta[k];
                }
                let e = self.energy(&trial);
                if e <= energy + 1e-4 * alpha * slope {
                    accepted = Some(e);
                    break;
                }
                alpha *= 0.5;
            }
            let Some(new_energy) = accepted else {
                // No further descent at floating-point resolution.
                return Ok(SolveReport {
                    iterations: total_iters,
                    newton_steps: step,
                    residual: gn / reference,
                    ..Default::default()
                });
            };
            u.copy_from_slice(&trial);
            let decrement = energy - new_energy;
            energy = new_energy;
            if decrement <= 1e-16 * energy.abs() {
                // Stagnated at floating-point resolution of the energy.
                let g = self.gradient(asm, u, None);
                return Ok(SolveReport {
                    iterations: total_iters,
                    newton_steps: step,
                    residual: norm2(&g) / reference,
                    ..Default::default()
                });
            }
        }
        let g = self.gradient(asm, u, None);
        Err(Error::NoConvergence { iterations: opts.max_newton, residual: norm2(&g) / reference })
    }
}
