//! Compressed sparse rows and a Jacobi-preconditioned BiCGSTAB.

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (c, v) in r {
                match cols.last() {
                    Some(&last) if cols.len() > row_ptr[row_ptr.len() - 1] && last == c => {
                        *vals.last_mut().unwrap() += v;
                    }
                    _ => {
                        cols.push(c);
                        vals.push(v);
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).find(|&(c, _)| c == r).map_or(0.0, |e| e.1))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    /// True relative residual `‖b − Ax‖ / ‖b‖` at exit.
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(a: &Csr, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    a.matvec(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Solves `A x = b` to relative residual `tol`, starting from the given `x`.
/// The recurrence is restarted from the true residual whenever it stagnates
/// or breaks down.
pub fn bicgstab(a: &Csr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> KrylovReport {
    let n = a.n;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovReport {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    let mut rhat = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];

    let mut iterations = 0;
    let mut res = true_residual(a, b, x, &mut r) / bnorm;
    while res > tol && iterations < max_iter {
        rhat.copy_from_slice(&r);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&rhat, &r);
            if rho_new == 0.0 || omega == 0.0 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                y[i] = inv_diag[i] * p[i];
            }
            a.matvec(&y, &mut v);
            let rv = dot(&rhat, &v);
            if rv == 0.0 {
                break;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) <= tol * bnorm {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                break;
            }
            for i in 0..n {
                z[i] = inv_diag[i] * s[i];
            }
            a.matvec(&z, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm(&r) <= tol * bnorm {
                break;
            }
        }
        res = true_residual(a, b, x, &mut r) / bnorm;
    }
    KrylovReport {
        iterations,
        residual: res,
        converged: res <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_merges_duplicates() {
        let m = Csr::from_rows(vec![vec![(1, 2.0), (0, 1.0), (1, 3.0)], vec![(1, 4.0)]]);
        assert_eq!(m.cols, vec![0, 1, 1]);
        assert_eq!(m.vals, vec![1.0, 5.0, 4.0]);
        assert_eq!(m.diagonal(), vec![1.0, 4.0]);
    }

    #[test]
    fn solves_nonsymmetric_tridiagonal() {
        let n = 200;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 4.0)];
                if i > 0 {
                    r.push((i - 1, -1.5));
                }
                if i + 1 < n {
                    r.push((i + 1, -0.5));
                }
                r
            })
            .collect();
        let a = Csr::from_rows(rows);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&xs, &mut b);
        let mut x = vec![0.0; n];
        let rep = bicgstab(&a, &b, &mut x, 1e-12, 10 * n);
        assert!(rep.converged);
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
