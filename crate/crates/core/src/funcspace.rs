//! Discretized Hilbert-space primitives.
//!
//! Curves live on an equispaced grid over a compact interval. Inner
//! products use the trapezoidal rule, so an operator with kernel matrix
//! `M` acts as `(Af)_i = sum_j M_ij w_j f_j` with trapezoid weights `w`.
//! Eigen-problems for such operators are solved in the symmetrized form
//! `W^{1/2} M W^{1/2}`, which has the same spectrum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

/// Equispaced grid over `[lo, hi]`.
///
/// A one-point grid is allowed and stands for scalar series: its single
/// quadrature weight is 1, so inner products reduce to ordinary products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: f64,
    hi: f64,
    len: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Config(format!("grid needs at least 2 points, got {len}")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Config(format!("invalid grid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, len })
    }

    /// `len` points on `[0, 1]`.
    pub fn unit(len: usize) -> Result<Self> {
        Self::new(0.0, 1.0, len)
    }

    /// Single-point grid for scalar series.
    pub fn scalar() -> Self {
        Self { lo: 0.0, hi: 0.0, len: 1 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_scalar(&self) -> bool {
        self.len == 1
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn spacing(&self) -> f64 {
        if self.len < 2 {
            1.0
        } else {
            (self.hi - self.lo) / (self.len - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.len).map(|i| self.lo + h * i as f64).collect()
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        if self.len == 1 {
            return vec![1.0];
        }
        let h = self.spacing();
        let mut w = vec![h; self.len];
        w[0] = 0.5 * h;
        w[self.len - 1] = 0.5 * h;
        w
    }

    fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "grid mismatch: {} points on [{}, {}] vs {} points on [{}, {}]",
                self.len, self.lo, self.hi, other.len, other.lo, other.hi
            )))
        }
    }
}

/// A function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at grid index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        inner_unchecked(&self.grid.weights(), &self.values, &self.values).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }
}

fn inner_unchecked(w: &[f64], f: &[f64], g: &[f64]) -> f64 {
    w.iter().zip(f).zip(g).map(|((w, f), g)| w * f * g).sum()
}

/// Trapezoidal approximation of the L2 inner product.
pub fn inner(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.grid.ensure_same(&g.grid)?;
    Ok(inner_unchecked(&f.grid.weights(), &f.values, &g.values))
}

/// Curve-valued time series on a shared grid, stored row-major (rows = time).
///
/// Rows before `t0` (1-based) are retained but are not part of the sample;
/// every estimator works on rows `t0..=T` only.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalPanel {
    grid: Grid,
    data: Vec<f64>,
    n_rows: usize,
    t0: usize,
}

impl FunctionalPanel {
    pub fn new(grid: Grid, data: Vec<f64>, n_rows: usize, t0: usize) -> Result<Self> {
        let g = grid.len();
        if data.len() != n_rows * g {
            return Err(Error::Dimension(format!(
                "panel data has {} values, expected {} rows x {} grid points",
                data.len(),
                n_rows,
                g
            )));
        }
        if t0 == 0 || t0 > n_rows {
            return Err(Error::EmptyPanel(format!("t0 = {t0} with {n_rows} rows")));
        }
        if n_rows + 1 - t0 < 2 {
            return Err(Error::EmptyPanel(format!("need at least 2 valid rows, have {}", n_rows + 1 - t0)));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data { row: i / g + 1, col: i % g + 1, msg: "non-finite value".into() });
        }
        Ok(Self { grid, data, n_rows, t0 })
    }

    pub fn from_rows(grid: Grid, rows: &[Vec<f64>]) -> Result<Self> {
        let g = grid.len();
        let mut data = Vec::with_capacity(rows.len() * g);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != g {
                return Err(Error::Dimension(format!("row {} has {} values, grid has {g}", i + 1, r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::new(grid, data, rows.len(), 1)
    }

    /// Scalar series as a panel on the one-point grid.
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::new(Grid::scalar(), values.to_vec(), values.len(), 1)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    /// Number of rows in the sample range `t0..=T`.
    pub fn n_valid(&self) -> usize {
        self.n_rows + 1 - self.t0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row `t` (1-based, any row including pre-sample ones).
    pub fn row(&self, t: usize) -> &[f64] {
        let g = self.grid.len();
        &self.data[(t - 1) * g..t * g]
    }

    /// Rows `t0..=T`, contiguous.
    pub fn valid_data(&self) -> &[f64] {
        &self.data[(self.t0 - 1) * self.grid.len()..]
    }

    pub fn valid_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.valid_data().chunks_exact(self.grid.len())
    }

    /// Same shape and `t0`, new values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, data, self.n_rows, self.t0)
    }

    /// Drops the pre-sample rows and sets `t0 = 1`.
    pub fn trimmed(&self) -> Self {
        Self { grid: self.grid, data: self.valid_data().to_vec(), n_rows: self.n_valid(), t0: 1 }
    }

    /// Marks one more leading row as pre-sample.
    pub fn advance_t0(&self) -> Result<Self> {
        Self::new(self.grid, self.data.clone(), self.n_rows, self.t0 + 1)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { data: self.data.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Adds `mu` to every row.
    pub fn shifted(&self, mu: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&mu.grid)?;
        let g = self.grid.len();
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(g) {
            for (x, m) in row.iter_mut().zip(&mu.values) {
                *x += m;
            }
        }
        Ok(Self { data, ..self.clone() })
    }

    /// Sample mean of rows `t0..=T`.
    pub fn mean_curve(&self) -> GridFunction {
        let g = self.grid.len();
        let mut mean = vec![0.0; g];
        for row in self.valid_rows() {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        let n = self.n_valid() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        GridFunction { grid: self.grid, values: mean }
    }

    /// Valid rows with the sample mean removed (pre-sample rows untouched).
    pub fn demeaned(&self) -> Self {
        let mean = self.mean_curve();
        let g = self.grid.len();
        let start = (self.t0 - 1) * g;
        let mut data = self.data.clone();
        for row in data[start..].chunks_exact_mut(g) {
            for (x, m) in row.iter_mut().zip(&mean.values) {
                *x -= m;
            }
        }
        Self { data, ..self.clone() }
    }

    /// Reorders grid columns: new column `i` is old column `perm[i]`.
    pub fn permute_grid(&self, perm: &[usize]) -> Result<Self> {
        let g = self.grid.len();
        check_permutation(perm, g)?;
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks_exact(g) {
            data.extend(perm.iter().map(|&j| row[j]));
        }
        Ok(Self { data, ..self.clone() })
    }

    /// Valid rows as an `n_valid x G` matrix.
    pub fn valid_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_valid(), self.grid.len(), self.valid_data())
    }

    /// `<Z_t, h>` for each valid row.
    pub fn project(&self, h: &GridFunction) -> Result<Vec<f64>> {
        self.grid.ensure_same(&h.grid)?;
        let wh: Vec<f64> = self.grid.weights().iter().zip(&h.values).map(|(w, h)| w * h).collect();
        Ok(self.valid_rows().map(|row| row.iter().zip(&wh).map(|(x, y)| x * y).sum()).collect())
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::Dimension(format!("permutation of length {} for {n} points", perm.len())));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Domain("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Discretized linear operator: kernel matrix plus the grid whose
/// quadrature weights it integrates against.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOperator {
    grid: Grid,
    matrix: DMatrix<f64>,
}

impl GridOperator {
    pub fn new(grid: Grid, matrix: DMatrix<f64>) -> Result<Self> {
        let g = grid.len();
        if matrix.nrows() != g || matrix.ncols() != g {
            return Err(Error::Dimension(format!(
                "{}x{} kernel on a grid of {g} points",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite operator entry".into()));
        }
        Ok(Self { grid, matrix })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, matrix: DMatrix::zeros(grid.len(), grid.len()) }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|m_ij - m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() <= 1e-10 * self.max_abs()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, matrix: &self.matrix * c }
    }

    /// `<A h, h>` without materializing `A h`.
    pub fn quadratic_form(&self, h: &GridFunction) -> Result<f64> {
        let ah = apply(self, h)?;
        inner(&ah, h)
    }

    /// `W^{1/2} M W^{1/2}`: symmetric when `M` is, same spectrum as the operator.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let sw: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        let n = sw.len();
        DMatrix::from_fn(n, n, |i, j| sw[i] * self.matrix[(i, j)] * sw[j])
    }

    /// All eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let b = self.symmetrized();
        let b = 0.5 * (&b + b.transpose());
        let mut ev: Vec<f64> = b.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

/// `f ⊗ g`, the rank-one operator `h ↦ <g, h> f`.
pub fn tensor(f: &GridFunction, g: &GridFunction) -> Result<GridOperator> {
    f.grid.ensure_same(&g.grid)?;
    let n = f.grid.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| f.values[i] * g.values[j]);
    Ok(GridOperator { grid: f.grid, matrix })
}

/// Quadrature-weighted matrix-vector product.
pub fn apply(a: &GridOperator, f: &GridFunction) -> Result<GridFunction> {
    a.grid.ensure_same(&f.grid)?;
    let wf: DVector<f64> =
        DVector::from_iterator(f.values.len(), a.grid.weights().iter().zip(&f.values).map(|(w, v)| w * v));
    let out = &a.matrix * wf;
    Ok(GridFunction { grid: f.grid, values: out.iter().copied().collect() })
}

/// Leading part of a symmetric eigen-problem.
#[derive(Debug, Clone)]
pub struct TopEigen {
    pub first: f64,
    pub second: f64,
    /// Unit Euclidean-norm eigenvector of the symmetrized matrix.
    pub vector: DVector<f64>,
}

/// Strategy for extracting the dominant eigenpair of a symmetric matrix.
pub trait EigenSolver: Named + Send + Sync {
    fn top_two(&self, sym: &DMatrix<f64>) -> Result<TopEigen>;
}

/// Full symmetric eigendecomposition.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSymmetric;

impl Named for DenseSymmetric {
    fn name(&self) -> &str {
        "dense"
    }
}

impl EigenSolver for DenseSymmetric {
    fn top_two(&self, sym: &DMatrix<f64>) -> Result<TopEigen> {
        let n = sym.nrows();
        let eig = sym.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let first = eig.eigenvalues[order[0]];
        let second = if n > 1 { eig.eigenvalues[order[1]] } else { f64::NEG_INFINITY };
        Ok(TopEigen { first, second, vector: eig.eigenvectors.column(order[0]).into_owned() })
    }
}

/// Power iteration with a deflated second pass for the runner-up eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 10_000 }
    }
}

impl Named for PowerIteration {
    fn name(&self) -> &str {
        "power"
    }
}

impl PowerIteration {
    fn start(n: usize) -> DVector<f64> {
        let v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt() / n as f64);
        let norm = v.norm();
        v / norm
    }

    /// Returns (Rayleigh quotient, vector, converged).
    fn iterate(&self, m: &DMatrix<f64>) -> (f64, DVector<f64>, bool) {
        let n = m.nrows();
        let mut x = Self::start(n);
        let mut lambda = 0.0;
        for _ in 0..self.max_iter {
            let y = m * &x;
            let norm = y.norm();
            if norm == 0.0 {
                return (0.0, x, true);
            }
            lambda = x.dot(&y);
            let next = y / norm;
            let delta = (&next - &x).amax();
            x = next;
            if delta < self.tol {
                return (lambda, x, true);
            }
        }
        (lambda, x, false)
    }
}

impl EigenSolver for PowerIteration {
    fn top_two(&self, sym: &DMatrix<f64>) -> Result<TopEigen> {
        let (first, vector, ok) = self.iterate(sym);
        if !ok {
            return Err(Error::NoConvergence(self.max_iter));
        }
        let deflated = sym - first * &vector * vector.transpose();
        // The runner-up only feeds the gap diagnostic; an unconverged estimate is kept.
        let (second, _, _) = self.iterate(&deflated);
        Ok(TopEigen { first, second, vector })
    }
}

/// Dense solve up to `dense_limit` grid points, power iteration above.
#[derive(Debug, Clone, Copy)]
pub struct AutoSolver {
    pub dense_limit: usize,
}

impl Default for AutoSolver {
    fn default() -> Self {
        Self { dense_limit: 256 }
    }
}

impl Named for AutoSolver {
    fn name(&self) -> &str {
        "auto"
    }
}

impl EigenSolver for AutoSolver {
    fn top_two(&self, sym: &DMatrix<f64>) -> Result<TopEigen> {
        if sym.nrows() <= self.dense_limit {
            DenseSymmetric.top_two(sym)
        } else {
            PowerIteration::default().top_two(sym)
        }
    }
}

pub fn eigen_solvers() -> Registry<dyn EigenSolver> {
    let mut reg: Registry<dyn EigenSolver> = Registry::new();
    reg.register(Box::new(AutoSolver::default()))
        .register(Box::new(DenseSymmetric))
        .register(Box::new(PowerIteration::default()));
    reg
}

/// Dominant eigenvalue and unit-norm eigenfunction of a symmetric operator.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: GridFunction,
    pub second: f64,
    /// `(λ1 - λ2) / λ1`, zero for the zero operator.
    pub relative_gap: f64,
    /// Top two eigenvalues closer than `1e-12 · λ1`.
    pub degenerate: bool,
}

pub fn dominant_eigenpair(a: &GridOperator) -> Result<EigenPair> {
    dominant_eigenpair_with(a, &AutoSolver::default())
}

pub fn dominant_eigenpair_with(a: &GridOperator, solver: &dyn EigenSolver) -> Result<EigenPair> {
    let scale = a.max_abs();
    let asym = a.asymmetry();
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric { asym, scale });
    }
    let grid = a.grid;
    let weights = grid.weights();
    let n = grid.len();
    if scale == 0.0 {
        let mut values = vec![0.0; n];
        values[0] = 1.0 / weights[0].sqrt();
        return Ok(EigenPair {
            value: 0.0,
            vector: GridFunction { grid, values },
            second: 0.0,
            relative_gap: 0.0,
            degenerate: true,
        });
    }
    let b = a.symmetrized();
    let b = 0.5 * (&b + b.transpose());
    let top = solver.top_two(&b)?;
    let mut values: Vec<f64> = top.vector.iter().zip(&weights).map(|(g, w)| g / w.sqrt()).collect();
    // Re-normalize in the quadrature norm and fix the sign.
    let norm = inner_unchecked(&weights, &values, &values).sqrt();
    let pivot = values
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(bi, bv), (i, v)| if v.abs() > bv.abs() { (i, *v) } else { (bi, bv) })
        .1;
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    values.iter_mut().for_each(|v| *v *= sign / norm);
    let first = top.first;
    let second = if n > 1 { top.second } else { 0.0 };
    let gap = if first > 0.0 { (first - second) / first } else { 0.0 };
    Ok(EigenPair {
        value: first,
        vector: GridFunction { grid, values },
        second,
        relative_gap: gap,
        degenerate: n > 1 && (first - second) < 1e-12 * first.abs(),
    })
}
