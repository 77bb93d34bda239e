//! Families of control variates on the unit hypercube.
//!
//! Every control is a tensor product `h_l(x) = prod_j h_{l_j}(x_j)` of
//! univariate functions with zero mean under the uniform law on `[0, 1]`,
//! with `h_0 = 1`. Two univariate families are provided: shifted Legendre
//! polynomials `L_j(2x - 1)` and the trigonometric (Fourier) family, the
//! latter only in dimension one.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{CvError, Result};

/// Default upper bound on the number of enumerated multi-indices.
pub const DEFAULT_MAX_INDICES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(alias = "legendre")]
    LegendreShifted,
    Fourier,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::LegendreShifted => f.write_str("legendre"),
            Family::Fourier => f.write_str("fourier"),
        }
    }
}

/// Univariate degrees of one tensor-product control.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    degrees: Vec<u16>,
    total_degree: u32,
}

impl MultiIndex {
    pub fn new(degrees: Vec<u16>) -> Result<Self> {
        let total_degree = degrees.iter().map(|&l| u32::from(l)).sum();
        if total_degree == 0 {
            return Err(CvError::invalid("degrees", "the all-zero multi-index is the constant function"));
        }
        Ok(Self {
            degrees,
            total_degree,
        })
    }

    pub fn degrees(&self) -> &[u16] {
        &self.degrees
    }

    pub fn total_degree(&self) -> u32 {
        self.total_degree
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// `(coordinate, degree)` pairs with nonzero degree.
    pub fn active(&self) -> impl Iterator<Item = (usize, u16)> + '_ {
        self.degrees
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0)
            .map(|(c, &l)| (c, l))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Total degree first, then lexicographic on the degree vector.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total_degree
            .cmp(&other.total_degree)
            .then_with(|| self.degrees.cmp(&other.degrees))
    }
}

/// JSON form of a [`BasisSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub family: Family,
    pub d: usize,
    pub k: usize,
    pub deg: usize,
    /// Maximum number of coordinates with nonzero degree (interaction order).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

/// A fully enumerated family of `m` tensor-product controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisConfig", into = "BasisConfig")]
pub struct BasisSpec {
    family: Family,
    d: usize,
    k: usize,
    deg: usize,
    order: Option<usize>,
    indices: Vec<MultiIndex>,
}

impl BasisSpec {
    /// All controls with every degree `<= k` and total degree `<= deg`.
    pub fn new(family: Family, d: usize, k: usize, deg: usize) -> Result<Self> {
        Self::with_order(family, d, k, deg, None)
    }

    /// As [`BasisSpec::new`], additionally keeping at most `order` nonzero
    /// coordinates per multi-index when `order` is set.
    pub fn with_order(
        family: Family,
        d: usize,
        k: usize,
        deg: usize,
        order: Option<usize>,
    ) -> Result<Self> {
        if family == Family::Fourier && d != 1 {
            return Err(CvError::invalid("d", "the Fourier family is defined on [0, 1] only"));
        }
        let indices = enumerate_indices_capped(d, k, deg, order, DEFAULT_MAX_INDICES)?;
        Ok(Self {
            family,
            d,
            k,
            deg,
            order,
            indices,
        })
    }

    /// Controls varying in at most `order` coordinates, each of degree `<= k`,
    /// without a total-degree restriction unless `deg` is given.
    pub fn interaction(d: usize, k: usize, order: usize, deg: Option<usize>) -> Result<Self> {
        if order == 0 || order > d {
            return Err(CvError::invalid("order", format!("must lie in 1..={d}, got {order}")));
        }
        let deg = deg.unwrap_or(k * order);
        Self::with_order(Family::LegendreShifted, d, k, deg, Some(order))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn deg(&self) -> usize {
        self.deg
    }

    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn config(&self) -> BasisConfig {
        BasisConfig {
            family: self.family,
            d: self.d,
            k: self.k,
            deg: self.deg,
            order: self.order,
        }
    }

    /// Sub-family made of the first `m` controls (lowest total degrees).
    pub fn truncated(&self, m: usize) -> Self {
        let mut out = self.clone();
        out.indices.truncate(m);
        out
    }
}

impl TryFrom<BasisConfig> for BasisSpec {
    type Error = CvError;

    fn try_from(c: BasisConfig) -> Result<Self> {
        BasisSpec::with_order(c.family, c.d, c.k, c.deg, c.order)
    }
}

impl From<BasisSpec> for BasisConfig {
    fn from(s: BasisSpec) -> Self {
        s.config()
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(CvError::Domain(format!("{x} is outside [0, 1]")))
    }
}

/// Shifted Legendre polynomial `L_j(2x - 1)` by the Bonnet recurrence.
pub fn legendre_eval(j: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(legendre_unchecked(j, 2.0 * x - 1.0))
}

fn legendre_unchecked(j: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if j == 0 {
        return prev;
    }
    for n in 1..j {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * t * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `sqrt(2) cos((j+1) pi x)` for odd `j`, `sqrt(2) sin(j pi x)` for even `j`.
pub fn fourier_eval(j: usize, x: f64) -> Result<f64> {
    if j == 0 {
        return Err(CvError::invalid("j", "Fourier controls are indexed from 1"));
    }
    check_unit(x)?;
    Ok(fourier_unchecked(j, x))
}

fn fourier_unchecked(j: usize, x: f64) -> f64 {
    if j % 2 == 1 {
        SQRT_2 * ((j + 1) as f64 * PI * x).cos()
    } else {
        SQRT_2 * (j as f64 * PI * x).sin()
    }
}

fn univariate(family: Family, j: u16, x: f64) -> f64 {
    match (family, j) {
        (_, 0) => 1.0,
        (Family::LegendreShifted, j) => legendre_unchecked(j as usize, 2.0 * x - 1.0),
        (Family::Fourier, j) => fourier_unchecked(j as usize, x),
    }
}

/// Number of `l in {0..k}^d \ {0}` with total degree `<= deg` and at most
/// `order` nonzero entries.
pub fn count_indices(d: usize, k: usize, deg: usize, order: Option<usize>) -> u128 {
    let order = order.unwrap_or(d).min(d);
    // ways[s][a]: vectors over the coordinates seen so far with sum s and a nonzero entries
    let mut ways = vec![vec![0u128; order + 1]; deg + 1];
    ways[0][0] = 1;
    for _ in 0..d {
        let mut next = vec![vec![0u128; order + 1]; deg + 1];
        for s in 0..=deg {
            for a in 0..=order {
                let w = ways[s][a];
                if w == 0 {
                    continue;
                }
                next[s][a] += w;
                if a < order {
                    for l in 1..=k.min(deg - s) {
                        next[s + l][a + 1] += w;
                    }
                }
            }
        }
        ways = next;
    }
    ways.iter().flatten().sum::<u128>() - 1
}

/// Multi-indices of `{0..k}^d \ {0}` with total degree `<= deg`, sorted by
/// total degree and then lexicographically.
pub fn enumerate_indices(d: usize, k: usize, deg: usize) -> Result<Vec<MultiIndex>> {
    enumerate_indices_capped(d, k, deg, None, DEFAULT_MAX_INDICES)
}

pub fn enumerate_indices_capped(
    d: usize,
    k: usize,
    deg: usize,
    order: Option<usize>,
    cap: usize,
) -> Result<Vec<MultiIndex>> {
    if d == 0 || k == 0 || deg == 0 {
        return Err(CvError::invalid("d, k, deg", "all must be at least 1"));
    }
    if k > u16::MAX as usize {
        return Err(CvError::invalid("k", "univariate degree too large"));
    }
    let count = count_indices(d, k, deg, order);
    if count > cap as u128 {
        return Err(CvError::TooManyIndices { count, cap });
    }
    let max_active = order.unwrap_or(d).min(d);
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0u16; d];
    fill(&mut current, 0, deg, k, max_active, &mut out);
    out.sort_unstable();
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn fill(
    current: &mut [u16],
    pos: usize,
    budget: usize,
    k: usize,
    active_left: usize,
    out: &mut Vec<MultiIndex>,
) {
    if pos == current.len() {
        if current.iter().any(|&l| l > 0) {
            out.push(MultiIndex {
                degrees: current.to_vec(),
                total_degree: current.iter().map(|&l| u32::from(l)).sum(),
            });
        }
        return;
    }
    current[pos] = 0;
    fill(current, pos + 1, budget, k, active_left, out);
    if active_left > 0 {
        for l in 1..=k.min(budget) {
            current[pos] = l as u16;
            fill(current, pos + 1, budget - l, k, active_left - 1, out);
        }
    }
    current[pos] = 0;
}

/// Value of the control `idx` at `x`.
pub fn eval_control(spec: &BasisSpec, idx: &MultiIndex, x: &[f64]) -> Result<f64> {
    if x.len() != spec.d {
        return Err(CvError::DimensionMismatch {
            expected: spec.d,
            got: x.len(),
            context: "point vs basis dimension",
        });
    }
    if idx.dim() != spec.d {
        return Err(CvError::DimensionMismatch {
            expected: spec.d,
            got: idx.dim(),
            context: "multi-index vs basis dimension",
        });
    }
    if idx.degrees.iter().any(|&l| l as usize > spec.k) {
        return Err(CvError::invalid("idx", "degree exceeds the family's k"));
    }
    let mut v = 1.0;
    for (c, l) in idx.active() {
        check_unit(x[c])?;
        v *= univariate(spec.family, l, x[c]);
    }
    Ok(v)
}

/// Evaluate every control at every row of `points`, giving the `n x m`
/// design matrix in column-major layout.
pub fn build_design(spec: &BasisSpec, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (n, d) = points.dim();
    if d != spec.d {
        return Err(CvError::DimensionMismatch {
            expected: spec.d,
            got: d,
            context: "points columns vs basis dimension",
        });
    }
    if let Some(bad) = points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(CvError::Domain(format!("{bad} is outside [0, 1]")));
    }

    // tables[c][l][i] = h_l(points[i, c]) for the degrees actually used
    let mut max_deg = vec![0u16; d];
    for idx in &spec.indices {
        for (c, l) in idx.active() {
            max_deg[c] = max_deg[c].max(l);
        }
    }
    let tables: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|c| univariate_table(spec.family, max_deg[c], points.column(c).iter().copied(), n))
        .collect();

    let mut h = Array2::<f64>::zeros((n, spec.m()).f());
    for (j, idx) in spec.indices.iter().enumerate() {
        let mut col = h.column_mut(j);
        let col = col.as_slice_mut().expect("column-major design");
        let mut active = idx.active();
        let (c0, l0) = active.next().expect("nonzero multi-index");
        col.copy_from_slice(&tables[c0][l0 as usize]);
        for (c, l) in active {
            for (v, t) in col.iter_mut().zip(&tables[c][l as usize]) {
                *v *= t;
            }
        }
    }
    Ok(h)
}

fn univariate_table(
    family: Family,
    max_deg: u16,
    xs: impl Iterator<Item = f64>,
    n: usize,
) -> Vec<Vec<f64>> {
    let rows = max_deg as usize + 1;
    let mut table = vec![vec![0.0; n]; rows];
    match family {
        Family::LegendreShifted => {
            for (i, x) in xs.enumerate() {
                let t = 2.0 * x - 1.0;
                table[0][i] = 1.0;
                if rows > 1 {
                    table[1][i] = t;
                }
                for l in 1..rows.saturating_sub(1) {
                    let lf = l as f64;
                    table[l + 1][i] =
                        ((2.0 * lf + 1.0) * t * table[l][i] - lf * table[l - 1][i]) / (lf + 1.0);
                }
            }
        }
        Family::Fourier => {
            for (i, x) in xs.enumerate() {
                table[0][i] = 1.0;
                for (l, row) in table.iter_mut().enumerate().skip(1) {
                    row[i] = fourier_unchecked(l, x);
                }
            }
        }
    }
    table
}

/// Closed-form second-moment facts of a family under the uniform law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDiagnostics {
    /// Diagonal of the (diagonal) Gram matrix `P(h h^T)`.
    pub gram_diagonal: Vec<f64>,
    /// Smallest Gram eigenvalue.
    pub gamma: f64,
    /// Uniform bound on `|h_l|`.
    pub u_h: f64,
    /// Upper bound on `B = sup_x h(x)^T G^{-1} h(x)`.
    pub b_bound: f64,
}

pub fn diagnostics(spec: &BasisSpec) -> BasisDiagnostics {
    match spec.family {
        Family::LegendreShifted => {
            let gram_diagonal: Vec<f64> = spec
                .indices
                .iter()
                .map(|idx| {
                    idx.degrees
                        .iter()
                        .map(|&l| 1.0 / (2.0 * f64::from(l) + 1.0))
                        .product()
                })
                .collect();
            let gamma = gram_diagonal.iter().copied().fold(f64::INFINITY, f64::min);
            let b_bound = gram_diagonal.iter().map(|g| 1.0 / g).sum();
            BasisDiagnostics {
                gram_diagonal,
                gamma,
                u_h: 1.0,
                b_bound,
            }
        }
        Family::Fourier => {
            let m = spec.m();
            BasisDiagnostics {
                gram_diagonal: vec![1.0; m],
                gamma: 1.0,
                u_h: SQRT_2,
                b_bound: 2.0 * m as f64,
            }
        }
    }
}

/// Leverage `h(x)^T G^{-1} h(x)` of a point, using the diagonal Gram matrix.
pub fn leverage(spec: &BasisSpec, diag: &BasisDiagnostics, x: &[f64]) -> Result<f64> {
    spec.indices
        .iter()
        .zip(&diag.gram_diagonal)
        .map(|(idx, g)| eval_control(spec, idx, x).map(|h| h * h / g))
        .sum()
}
