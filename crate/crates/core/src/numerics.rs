//! Small dense vector/matrix arithmetic, a symmetric eigensolver, and a
//! fixed-step classical Runge–Kutta integrator on an event-aligned grid.
//!
//! Everything here is sized for control-loop use (dimensions 2–8); there is
//! deliberately no general linear-algebra dependency. The eigensolver is a
//! cyclic Jacobi iteration, the simplest method with certifiable accuracy at
//! this size.

use crate::error::{Error, Result};

/// Dense real vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector { data: vec![0.0; dim] }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Vector { data: v.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector { data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector { data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// self + c * other, the only compound update the integrator needs.
    pub fn axpy(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector { data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect() }
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from nested rows; all rows must share a length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimensions");
        let mut out = Vector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| c * x).collect() }
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrize(&self) -> Matrix {
        assert!(self.is_square());
        let mut s = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Quadratic form xᵀ A x.
    pub fn quad_form(&self, x: &Vector) -> f64 {
        x.dot(&self.matvec(x))
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    ///
    /// A pivot with magnitude ≤ [`SINGULAR_TOL`] makes the system ill-posed at
    /// working precision and is reported as a domain error.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        let x = self.solve_columns(&[b.clone()])?;
        Ok(x.into_iter().next().unwrap())
    }

    /// Matrix inverse via column-wise elimination; same pivot tolerance as
    /// [`Matrix::solve`].
    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.rows;
        let cols: Vec<Vector> = (0..n)
            .map(|j| {
                let mut e = Vector::zeros(n);
                e[j] = 1.0;
                e
            })
            .collect();
        let sol = self.solve_columns(&cols)?;
        let mut inv = Matrix::zeros(n, n);
        for (j, col) in sol.iter().enumerate() {
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    fn solve_columns(&self, rhs: &[Vector]) -> Result<Vec<Vector>> {
        if !self.is_square() {
            return Err(Error::domain("solve requires a square matrix"));
        }
        let n = self.rows;
        for b in rhs {
            if b.dim() != n {
                return Err(Error::domain("solve: right-hand side dimension mismatch"));
            }
        }
        let mut a = self.data.clone();
        let mut bs: Vec<Vec<f64>> = rhs.iter().map(|b| b.as_slice().to_vec()).collect();
        for k in 0..n {
            let (mut piv, mut piv_abs) = (k, a[k * n + k].abs());
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > piv_abs {
                    piv = i;
                    piv_abs = v;
                }
            }
            if !(piv_abs > SINGULAR_TOL) {
                return Err(Error::domain(format!(
                    "matrix numerically singular (pivot {piv_abs:.3e} ≤ {SINGULAR_TOL:.0e})"
                )));
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                for b in bs.iter_mut() {
                    b.swap(k, piv);
                }
            }
            for i in k + 1..n {
                let factor = a[i * n + k] / a[k * n + k];
                if factor == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
                for b in bs.iter_mut() {
                    b[i] -= factor * b[k];
                }
            }
        }
        let mut out = Vec::with_capacity(bs.len());
        for b in bs {
            let mut x = vec![0.0; n];
            for i in (0..n).rev() {
                let mut acc = b[i];
                for j in i + 1..n {
                    acc -= a[i * n + j] * x[j];
                }
                x[i] = acc / a[i * n + i];
            }
            out.push(Vector::from_slice(&x));
        }
        Ok(out)
    }
}

/// Pivot magnitude below which elimination treats a matrix as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of an orthogonal matrix. Intended for dimensions ≤ 8.
pub fn sym_eig(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::domain("sym_eig requires a nonempty square matrix"));
    }
    if !a.is_finite() {
        return Err(Error::divergence(f64::NAN, "non-finite matrix entry in eigensolver"));
    }
    let n = a.rows();
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    // Cyclic sweeps; quadratic convergence makes 30 sweeps an extreme bound
    // for n ≤ 8 (typical runs finish in 5-8).
    for _sweep in 0..30 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Classic stable rotation computation.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new_col)] = v[(k, old_col)];
        }
    }
    Ok((eigenvalues, vectors))
}

/// Smallest and largest eigenvalues of a (symmetrized) square matrix.
///
/// With `assume_symmetric` the input is trusted; otherwise it is replaced by
/// (A+Aᵀ)/2 first, which is what every definiteness certificate needs.
pub fn sym_eig_extrema(a: &Matrix, assume_symmetric: bool) -> Result<(f64, f64)> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::domain("sym_eig_extrema requires a nonempty square matrix"));
    }
    if a.rows() > 8 {
        return Err(Error::domain("sym_eig_extrema sized for dimension ≤ 8"));
    }
    let m = if assume_symmetric { a.clone() } else { a.symmetrize() };
    let (eigenvalues, _) = sym_eig(&m)?;
    Ok((eigenvalues[0], *eigenvalues.last().unwrap()))
}

/// Smallest singular value of a square matrix, via eigenvalues of AᵀA.
pub fn min_singular_value(a: &Matrix) -> Result<f64> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::domain("min_singular_value requires a nonempty square matrix"));
    }
    if !a.is_finite() {
        return Err(Error::divergence(f64::NAN, "non-finite matrix entry in min_singular_value"));
    }
    let ata = a.transpose().matmul(a);
    let (eigenvalues, _) = sym_eig(&ata)?;
    // AᵀA is PSD; clamp tiny negative round-off before the square root.
    Ok(eigenvalues[0].max(0.0).sqrt())
}

/// One classical Runge–Kutta step. The derivative is evaluated exactly at
/// t, t+h/2 (twice), and t+h — nowhere else — so discontinuous coefficients
/// pinned per step stay consistent across stages.
pub fn rk4_step<F>(deriv: &mut F, t: f64, y: &Vector, h: f64) -> Result<Vector>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    if !(h > 0.0) {
        return Err(Error::domain("rk4_step requires h > 0"));
    }
    let check = |t_stage: f64, k: Vector| -> Result<Vector> {
        if k.is_finite() {
            Ok(k)
        } else {
            Err(Error::divergence(t_stage, "derivative returned non-finite value"))
        }
    };
    let k1 = check(t, deriv(t, y)?)?;
    let k2 = check(t + 0.5 * h, deriv(t + 0.5 * h, &y.axpy(0.5 * h, &k1))?)?;
    let k3 = check(t + 0.5 * h, deriv(t + 0.5 * h, &y.axpy(0.5 * h, &k2))?)?;
    let k4 = check(t + h, deriv(t + h, &y.axpy(h, &k3))?)?;
    let mut out = y.clone();
    for i in 0..y.dim() {
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Fixed-step integration grid whose nodes include every event instant.
///
/// Between consecutive events the step is uniform and never exceeds the
/// nominal step; coefficient discontinuities (fault switches) therefore land
/// exactly on nodes and no step straddles one.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGrid {
    pub t0: f64,
    pub t_end: f64,
    /// Nominal (maximum) step.
    pub h: f64,
    /// Event instants, sorted, all inside [t0, t_end].
    pub events: Vec<f64>,
    /// Per-segment (start, end, step count); contiguous cover of [t0, t_end].
    segments: Vec<(f64, f64, usize)>,
}

impl StepGrid {
    pub fn segments(&self) -> &[(f64, f64, usize)] {
        &self.segments
    }

    pub fn step_count(&self) -> usize {
        self.segments.iter().map(|&(_, _, n)| n).sum()
    }

    pub fn node_count(&self) -> usize {
        self.step_count() + 1
    }

    /// All node times, in order. Segment endpoints are produced exactly, so
    /// event instants appear verbatim.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.node_count());
        out.push(self.t0);
        for &(a, b, n) in &self.segments {
            let h = (b - a) / n as f64;
            for i in 1..n {
                out.push(a + i as f64 * h);
            }
            out.push(b);
        }
        out
    }

    /// (t_i, t_{i+1}) pairs covering the horizon.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let nodes = self.nodes();
        nodes.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Build an event-aligned grid. Within each inter-event segment the step
/// count is the smallest that keeps the uniform step at or below `h_nominal`
/// (a 1e-12 relative slack forgives binary representation of decimal steps).
pub fn build_grid(t0: f64, t_end: f64, h_nominal: f64, events: &[f64]) -> Result<StepGrid> {
    if !(h_nominal > 0.0) || !h_nominal.is_finite() {
        return Err(Error::domain("build_grid requires finite h > 0"));
    }
    if !(t0 < t_end) {
        return Err(Error::domain("build_grid requires t0 < t_end"));
    }
    for &e in events {
        if !(t0 <= e && e <= t_end) {
            return Err(Error::domain(format!("event {e} outside horizon [{t0}, {t_end}]")));
        }
    }
    let mut boundaries = vec![t0];
    let mut sorted: Vec<f64> = events.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for e in sorted {
        if e > *boundaries.last().unwrap() && e < t_end {
            boundaries.push(e);
        }
    }
    boundaries.push(t_end);

    let mut segments = Vec::with_capacity(boundaries.len() - 1);
    for w in boundaries.windows(2) {
        let (a, b) = (w[0], w[1]);
        let raw = (b - a) / h_nominal;
        let n = (raw * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        segments.push((a, b, n));
    }
    let mut events_kept: Vec<f64> = boundaries[1..boundaries.len() - 1].to_vec();
    events_kept.dedup();
    Ok(StepGrid { t0, t_end, h: h_nominal, events: events_kept, segments })
}
