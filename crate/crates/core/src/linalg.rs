//! Compressed sparse rows and a Jacobi-preconditioned conjugate gradient.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k] as usize];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.col[k] as usize == i)
                    .map_or(0.0, |k| self.val[k])
            })
            .collect()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&(j as u32)).ok().map(|k| self.row_ptr[i] + k)
    }
}

const NONE: u32 = u32::MAX;

/// Sparsity pattern of small dense cell matrices over a subset of unknowns.
///
/// Entry `(a, b)` of cell `c` is stored at value index `slots[c·A² + A·a + b]`, or `u32::MAX`
/// when either local unknown is eliminated.
#[derive(Clone, Debug)]
pub struct CellPattern {
    pub matrix: Csr,
    arity: usize,
    slots: Vec<u32>,
}

impl CellPattern {
    /// `cells[c]` lists the unknown index of each local slot, `None` for eliminated ones.
    pub fn new<const A: usize>(n: usize, cells: &[[Option<u32>; A]]) -> Self {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for cell in cells {
            for a in cell.iter().flatten() {
                for b in cell.iter().flatten() {
                    rows[*a as usize].push(*b);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        row_ptr.push(0);
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col.extend_from_slice(r);
            row_ptr.push(col.len());
        }
        let nnz = col.len();
        let matrix = Csr { n, row_ptr, col, val: vec![0.0; nnz] };
        let mut slots = Vec::with_capacity(cells.len() * A * A);
        for cell in cells {
            for a in 0..A {
                for b in 0..A {
                    slots.push(match (cell[a], cell[b]) {
                        (Some(i), Some(j)) => matrix
                            .position(i as usize, j as usize)
                            .expect("pattern contains every cell pair")
                            as u32,
                        _ => NONE,
                    });
                }
            }
        }
        CellPattern { matrix, arity: A, slots }
    }

    pub fn clear(&mut self) {
        self.matrix.val.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn add_cell<const A: usize>(&mut self, c: usize, local: &[[f64; A]; A]) {
        debug_assert_eq!(A, self.arity);
        let s = &self.slots[c * A * A..(c + 1) * A * A];
        for a in 0..A {
            for b in 0..A {
                let k = s[A * a + b];
                if k != NONE {
                    self.matrix.val[k as usize] += local[a][b];
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `A x = b` for symmetric positive definite `A`, starting from the given `x`.
///
/// Stops when `|b - A x| <= tol |b|`.
pub fn pcg(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgReport> {
    let n = a.n();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport { iterations: 0, residual: 0.0 });
    }
    let inv_d: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = tol * bnorm;
    let mut res = norm2(&r);
    let mut it = 0;
    while res > target {
        if it >= max_iter {
            return Err(Error::NoConvergence { iterations: it, residual: res / bnorm });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularSystem(format!(
                "non-positive curvature {pap:e} in conjugate gradient"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_d[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = norm2(&r);
        it += 1;
    }
    Ok(CgReport { iterations: it, residual: res / bnorm })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
