//! Covariate matrices and basis matrices: Moran's I eigenvector bases and
//! thin-plate spline bases assembled block-diagonally across series.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::{MultiResponseDataset, ResponseKind};
use crate::error::{HgtError, Result};

/// Relative residual norm below which a column counts as linearly dependent.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<String>,
}

impl DesignMatrix {
    pub fn new(matrix: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != matrix.ncols() {
            return Err(HgtError::Dimension(format!(
                "{} column labels for a matrix with {} columns",
                labels.len(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, labels })
    }

    /// Labels the columns `x0, x1, ...`.
    pub fn unlabeled(matrix: DMatrix<f64>) -> Self {
        let labels = (0..matrix.ncols()).map(|j| format!("x{j}")).collect();
        Self { matrix, labels }
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Labels of columns that lie in the span of the columns before them.
    pub fn dependent_columns(&self) -> Vec<String> {
        let n = self.matrix.nrows();
        let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
        let mut dependent = Vec::new();
        for j in 0..self.matrix.ncols() {
            let col = self.matrix.column(j).into_owned();
            let scale = col.norm();
            let mut v = col;
            // Two passes of modified Gram-Schmidt for stability.
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&v);
                    v.axpy(-c, q, 1.0);
                }
            }
            let resid = v.norm();
            if n == 0 || scale == 0.0 || resid <= RANK_TOLERANCE * scale {
                dependent.push(self.labels[j].clone());
            } else {
                basis.push(v / resid);
            }
        }
        dependent
    }

    pub fn check_full_rank(&self) -> Result<()> {
        let dependent = self.dependent_columns();
        if dependent.is_empty() {
            Ok(())
        } else {
            Err(HgtError::RankDeficient(dependent))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Moran,
    ThinPlateAssembled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisMatrix {
    pub matrix: DMatrix<f64>,
    pub kind: BasisKind,
    /// Moran eigenvalues of the retained columns (empty for thin-plate bases).
    pub eigenvalues: Vec<f64>,
    pub column_labels: Vec<String>,
}

impl BasisMatrix {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Writes the nonzero entries as `row,col,value` triplets.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["row", "col", "value"])?;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                let v = self.matrix[(i, j)];
                if v != 0.0 {
                    wtr.write_record([i.to_string(), j.to_string(), format!("{v:.17e}")])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_symmetric(w: &DMatrix<f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(HgtError::Dimension(format!(
            "adjacency must be square, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let scale = w.amax().max(1.0);
    for i in 0..w.nrows() {
        for j in 0..i {
            if (w[(i, j)] - w[(j, i)]).abs() > 1e-10 * scale {
                return Err(HgtError::domain(format!(
                    "adjacency is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// `G = P W P` with `P = I - X (X'X)^{-1} X'`, returned exactly symmetric.
pub fn morans_operator(x: &DesignMatrix, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(w)?;
    if x.nrows() != w.nrows() {
        return Err(HgtError::Dimension(format!(
            "X has {} rows but W is {}x{}",
            x.nrows(),
            w.nrows(),
            w.ncols()
        )));
    }
    x.check_full_rank()?;
    let q = x.matrix.clone().qr().q();
    // M = P W, then G = M P.
    let m = w - &q * (q.transpose() * w);
    let g = &m - (&m * &q) * q.transpose();
    Ok((&g + g.transpose()) * 0.5)
}

/// Leading `r` eigenvectors of the Moran operator, ordered by descending
/// signed eigenvalue, each with its largest-magnitude entry positive.
pub fn morans_basis(x: &DesignMatrix, w: &DMatrix<f64>, r: usize) -> Result<BasisMatrix> {
    let n = w.nrows();
    if r == 0 || r > n {
        return Err(HgtError::domain(format!(
            "basis rank r = {r} must lie in 1..={n}"
        )));
    }
    let g = morans_operator(x, w)?;
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut s = DMatrix::zeros(n, r);
    let mut eigenvalues = Vec::with_capacity(r);
    for (k, &idx) in order.iter().take(r).enumerate() {
        let col = eig.eigenvectors.column(idx);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        s.column_mut(k).copy_from(&(col * sign));
        eigenvalues.push(eig.eigenvalues[idx]);
    }
    Ok(BasisMatrix {
        matrix: s,
        kind: BasisKind::Moran,
        eigenvalues,
        column_labels: (0..r).map(|k| format!("moran{k}")).collect(),
    })
}

/// Symmetric k-nearest-neighbour graph on the rows of `points` (Euclidean
/// distance, ties broken by row index). An edge exists if either endpoint
/// lists the other among its k nearest.
pub fn knn_adjacency(points: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = points.nrows();
    if k == 0 || k >= n {
        return Err(HgtError::domain(format!(
            "k = {k} must lie in 1..{n} for {n} points"
        )));
    }
    let mut w = DMatrix::zeros(n, n);
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        dist.clear();
        for j in 0..n {
            if j != i {
                let d: f64 = points
                    .row(i)
                    .iter()
                    .zip(points.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                dist.push((d, j));
            }
        }
        let cmp = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        };
        dist.select_nth_unstable_by(k - 1, cmp);
        for &(_, j) in &dist[..k] {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
    }
    Ok(w)
}

/// Cycle graph on `n` nodes.
pub fn ring_adjacency(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    if n < 2 {
        return w;
    }
    for i in 0..n {
        let j = (i + 1) % n;
        if i != j {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
    }
    w
}

/// Thin-plate radial value `u^2 ln|u|` at `u = t/T - c`, defined as 0 at `u = 0`.
pub fn thin_plate_value(t: usize, total_days: usize, knot: f64) -> f64 {
    let u = t as f64 / total_days as f64 - knot;
    if u == 0.0 {
        0.0
    } else {
        u * u * u.abs().ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnotGrid {
    knots: Vec<f64>,
}

impl KnotGrid {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(HgtError::domain("knot grid must not be empty"));
        }
        if knots.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(HgtError::domain("knots must lie in [0, 1]"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HgtError::domain("knots must be strictly increasing"));
        }
        Ok(Self { knots })
    }

    /// `count` equally spaced knots from 0 to 1 inclusive.
    pub fn equally_spaced(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(HgtError::domain(
                "an equally spaced grid needs at least 2 knots",
            ));
        }
        let step = (count - 1) as f64;
        Self::new((0..count).map(|m| m as f64 / step).collect())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }
}

/// Column layout of an assembled joint basis.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLayout {
    pub shared: std::ops::Range<usize>,
    pub regions: Vec<(String, std::ops::Range<usize>)>,
    pub gaussian: Option<std::ops::Range<usize>>,
    pub binomial: Option<std::ops::Range<usize>>,
}

/// Joint thin-plate basis `[shared | count regions | gaussian | binomial]`.
///
/// The shared block covers every row. Count rows get a per-region block,
/// Gaussian and binomial rows a per-series block sized like the shared grid.
/// Blocks exist only for the series present. `T` is the largest day.
pub fn assemble_joint_basis(
    dataset: &MultiResponseDataset,
    per_region: &KnotGrid,
    shared: &KnotGrid,
) -> Result<(BasisMatrix, JointLayout)> {
    let n = dataset.len();
    let total_days = dataset.max_day();
    for (i, obs) in dataset.observations.iter().enumerate() {
        if obs.day == 0 {
            return Err(HgtError::domain("missing day index").at_observation(i));
        }
        if obs.kind == ResponseKind::Poisson && obs.region.is_none() {
            return Err(HgtError::domain("count row without a region").at_observation(i));
        }
    }
    let counts = dataset.kind_counts();
    let ks = shared.len();
    let kr = per_region.len();
    let mut labels: Vec<String> = (0..ks).map(|m| format!("shared{m}")).collect();
    let mut cursor = ks;
    let mut regions = Vec::new();
    if counts[ResponseKind::Poisson.index()] > 0 {
        let mut seen: Vec<String> = Vec::new();
        for obs in &dataset.observations {
            if obs.kind == ResponseKind::Poisson {
                let r = obs.region.as_ref().expect("checked above");
                if !seen.contains(r) {
                    seen.push(r.clone());
                }
            }
        }
        for r in seen {
            labels.extend((0..kr).map(|m| format!("region[{r}]{m}")));
            regions.push((r, cursor..cursor + kr));
            cursor += kr;
        }
    }
    let mut series_block = |kind: ResponseKind, labels: &mut Vec<String>| {
        if counts[kind.index()] > 0 {
            labels.extend((0..ks).map(|m| format!("{}{m}", kind.name())));
            let range = cursor..cursor + ks;
            cursor += ks;
            Some(range)
        } else {
            None
        }
    };
    let gaussian = series_block(ResponseKind::Gaussian, &mut labels);
    let binomial = series_block(ResponseKind::Binomial, &mut labels);

    let mut s = DMatrix::zeros(n, cursor);
    for (i, obs) in dataset.observations.iter().enumerate() {
        for (m, &c) in shared.knots().iter().enumerate() {
            s[(i, m)] = thin_plate_value(obs.day, total_days, c);
        }
        let (start, grid) = match obs.kind {
            ResponseKind::Poisson => {
                let r = obs.region.as_ref().expect("checked above");
                let range = &regions
                    .iter()
                    .find(|(name, _)| name == r)
                    .expect("region registered above")
                    .1;
                (range.start, per_region)
            }
            ResponseKind::Gaussian => (gaussian.as_ref().expect("present").start, shared),
            ResponseKind::Binomial => (binomial.as_ref().expect("present").start, shared),
        };
        for (m, &c) in grid.knots().iter().enumerate() {
            s[(i, start + m)] = thin_plate_value(obs.day, total_days, c);
        }
    }
    let layout = JointLayout {
        shared: 0..ks,
        regions,
        gaussian,
        binomial,
    };
    Ok((
        BasisMatrix {
            matrix: s,
            kind: BasisKind::ThinPlateAssembled,
            eigenvalues: Vec::new(),
            column_labels: labels,
        },
        layout,
    ))
}
