//! Optimal curvature-dimension bounds per vertex.
//!
//! A graph satisfies CD(K,n) at `x` when `gamma2 f(x) >= (1/n)(Lf(x))^2 +
//! K gamma f(x)` for every function `f`. On the local coordinates this is
//! positive semidefiniteness of `A - K B - (1/n) c c'`, which is monotone in
//! K, so the optimal K is found by bisection with an eigenvalue PSD test at
//! each step.

use crate::calculus::{local_forms, CalculusError, LocalForms, VertexFunction};
use crate::exec;
use crate::graph::Graph;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("dimension must be positive, got {0}")]
    NonpositiveDimension(f64),
    #[error("invalid dimension {0:?}")]
    BadDimension(String),
}

/// The dimension parameter: a positive real or infinity (which drops the
/// `(Lf)^2/n` term).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dimension {
    Finite(f64),
    Infinite,
}

impl Dimension {
    pub fn finite(n: f64) -> Result<Self, CurvatureError> {
        if n.is_finite() && n > 0.0 {
            Ok(Dimension::Finite(n))
        } else {
            Err(CurvatureError::NonpositiveDimension(n))
        }
    }

    /// `1/n`, with zero for the infinite dimension.
    pub fn inverse(&self) -> f64 {
        match self {
            Dimension::Finite(n) => 1.0 / n,
            Dimension::Infinite => 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Dimension::Finite(_))
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dimension::Finite(n) => write!(f, "{n}"),
            Dimension::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Dimension {
    type Err = CurvatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(Dimension::Infinite),
            other => {
                let n: f64 = other
                    .parse()
                    .map_err(|_| CurvatureError::BadDimension(other.to_string()))?;
                Dimension::finite(n)
            }
        }
    }
}

impl Serialize for Dimension {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Dimension::Finite(n) => serializer.serialize_f64(*n),
            Dimension::Infinite => serializer.serialize_str("inf"),
        }
    }
}

/// An optimal curvature value, with explicit sentinels: `PlusInfinity` when
/// the gamma form vanishes identically at the vertex (no outgoing edges) and
/// `MinusInfinity` when no finite K satisfies the inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KBound {
    MinusInfinity,
    Finite(f64),
    PlusInfinity,
}

impl KBound {
    pub fn as_finite(&self) -> Option<f64> {
        match self {
            KBound::Finite(k) => Some(*k),
            _ => None,
        }
    }

    /// True when this bound is at least `k` up to the given slack.
    pub fn at_least(&self, k: f64, slack: f64) -> bool {
        match self {
            KBound::PlusInfinity => true,
            KBound::MinusInfinity => false,
            KBound::Finite(v) => *v >= k - slack,
        }
    }

    fn rank(&self) -> (u8, f64) {
        match self {
            KBound::MinusInfinity => (0, 0.0),
            KBound::Finite(v) => (1, *v),
            KBound::PlusInfinity => (2, 0.0),
        }
    }

    pub fn min(self, other: KBound) -> KBound {
        let (ra, va) = self.rank();
        let (rb, vb) = other.rank();
        if ra < rb || (ra == rb && va <= vb) {
            self
        } else {
            other
        }
    }
}

impl fmt::Display for KBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KBound::Finite(k) => write!(f, "{k}"),
            KBound::PlusInfinity => write!(f, "inf"),
            KBound::MinusInfinity => write!(f, "-inf"),
        }
    }
}

impl Serialize for KBound {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            KBound::Finite(k) => serializer.serialize_f64(*k),
            KBound::PlusInfinity => serializer.serialize_str("inf"),
            KBound::MinusInfinity => serializer.serialize_str("-inf"),
        }
    }
}

/// Outcome of a single CD(K,n) test at a vertex.
#[derive(Debug, Clone)]
pub struct CdReport {
    pub holds: bool,
    /// A violating direction when the check fails, gauge value 0 at the
    /// vertex and zero outside its two-ball.
    pub witness: Option<VertexFunction>,
}

/// Optimal curvature at one vertex with the minimizing direction.
#[derive(Debug, Clone)]
pub struct CurvatureResult {
    pub vertex: usize,
    pub dimension: Dimension,
    pub optimal_k: KBound,
    pub witness: Option<VertexFunction>,
}

/// Per-vertex optimal curvature and the global bound (minimum over
/// vertices).
#[derive(Debug, Clone)]
pub struct CurvatureFunction {
    pub per_vertex: Vec<CurvatureResult>,
    pub global_k: KBound,
}

// PSD up to eigenvalue jitter of double-precision solvers.
const PSD_SLACK: f64 = 1e-11;
const BISECTION_TOL: f64 = 1e-10;

struct EigenInfo {
    min_value: f64,
    min_vector: DVector<f64>,
    norm: f64,
}

fn smallest_eigenpair(m: &DMatrix<f64>) -> EigenInfo {
    let eig = SymmetricEigen::new(m.clone());
    let mut min_idx = 0;
    let mut norm = 0.0f64;
    for i in 0..eig.eigenvalues.len() {
        norm = norm.max(eig.eigenvalues[i].abs());
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
    }
    EigenInfo {
        min_value: eig.eigenvalues[min_idx],
        min_vector: eig.eigenvectors.column(min_idx).into_owned(),
        norm,
    }
}

fn is_psd(info: &EigenInfo) -> bool {
    info.min_value >= -PSD_SLACK * info.norm.max(1.0)
}

fn shifted_form(forms: &LocalForms, k: f64, inv_n: f64) -> DMatrix<f64> {
    let mut s = forms.a.clone();
    s -= &forms.b * k;
    if inv_n != 0.0 {
        s -= &forms.c * forms.c.transpose() * inv_n;
    }
    s
}

fn lift(g: &Graph, forms: &LocalForms, v: &DVector<f64>) -> VertexFunction {
    let mut values = vec![0.0; g.vertex_count()];
    for (i, &coord) in forms.coordinates.iter().enumerate() {
        values[coord] = v[i];
    }
    VertexFunction::new(values).expect("eigenvector entries are finite")
}

/// Tests CD(K,n) at `x`: whether `A - K B - (1/n) c c'` is positive
/// semidefinite on the local coordinates.
pub fn cd_check(g: &Graph, x: usize, k: f64, n: Dimension) -> Result<CdReport, CurvatureError> {
    let forms = local_forms(g, x)?;
    Ok(cd_check_forms(g, &forms, k, n.inverse()))
}

fn cd_check_forms(g: &Graph, forms: &LocalForms, k: f64, inv_n: f64) -> CdReport {
    if forms.coordinates.is_empty() {
        return CdReport {
            holds: true,
            witness: None,
        };
    }
    let info = smallest_eigenpair(&shifted_form(forms, k, inv_n));
    if is_psd(&info) {
        CdReport {
            holds: true,
            witness: None,
        }
    } else {
        CdReport {
            holds: false,
            witness: Some(lift(g, forms, &info.min_vector)),
        }
    }
}

/// The optimal curvature `sup { K : CD(K,n) holds at x }` to absolute
/// tolerance 1e-10, by bisection over K.
///
/// The kernel of the gamma form (directions vanishing on out-neighbors) is
/// screened first: there the inequality reads `v'(A - (1/n)cc')v >= 0`
/// independently of K, and a violation makes every K infeasible.
pub fn curvature_at(g: &Graph, x: usize, n: Dimension) -> Result<CurvatureResult, CurvatureError> {
    let forms = local_forms(g, x)?;
    let inv_n = n.inverse();
    let m = forms.coordinates.len();

    // Vanishing gamma form: every K holds vacuously.
    let b_max = (0..m).fold(0.0f64, |acc, i| acc.max(forms.b[(i, i)]));
    if m == 0 || b_max == 0.0 {
        return Ok(CurvatureResult {
            vertex: x,
            dimension: n,
            optimal_k: KBound::PlusInfinity,
            witness: None,
        });
    }

    // Kernel screening. B is diagonal, so the kernel is spanned by the
    // coordinates without an outgoing edge from x.
    let kernel: Vec<usize> = (0..m)
        .filter(|&i| forms.b[(i, i)] <= 1e-14 * b_max)
        .collect();
    if !kernel.is_empty() {
        // c vanishes on the kernel, so the restricted form is just A.
        let block = DMatrix::from_fn(kernel.len(), kernel.len(), |i, j| {
            forms.a[(kernel[i], kernel[j])]
        });
        let info = smallest_eigenpair(&block);
        if !is_psd(&info) {
            let mut v = DVector::zeros(m);
            for (i, &ki) in kernel.iter().enumerate() {
                v[ki] = info.min_vector[i];
            }
            return Ok(CurvatureResult {
                vertex: x,
                dimension: n,
                optimal_k: KBound::MinusInfinity,
                witness: Some(lift(g, &forms, &v)),
            });
        }
    }

    let holds = |k: f64| {
        let info = smallest_eigenpair(&shifted_form(&forms, k, inv_n));
        (is_psd(&info), info)
    };

    // Bracket: the lower end from matrix norms over the smallest positive
    // gamma eigenvalue, both ends expanded geometrically.
    let lambda_plus = (0..m)
        .filter(|&i| forms.b[(i, i)] > 1e-14 * b_max)
        .fold(f64::INFINITY, |acc, i| acc.min(forms.b[(i, i)]));
    let scale = (forms.a.norm() + forms.c.norm_squared() * inv_n) / lambda_plus + 1.0;
    let mut lo = -scale;
    let mut found_lo = false;
    for _ in 0..70 {
        if holds(lo).0 {
            found_lo = true;
            break;
        }
        lo *= 2.0;
    }
    if !found_lo {
        // No finite K admits the form; kernel coupling can cause this even
        // when the kernel block itself is semidefinite.
        let (_, info) = holds(lo);
        return Ok(CurvatureResult {
            vertex: x,
            dimension: n,
            optimal_k: KBound::MinusInfinity,
            witness: Some(lift(g, &forms, &info.min_vector)),
        });
    }
    let mut hi = scale;
    let mut found_hi = false;
    for _ in 0..70 {
        if !holds(hi).0 {
            found_hi = true;
            break;
        }
        hi *= 2.0;
    }
    if !found_hi {
        return Ok(CurvatureResult {
            vertex: x,
            dimension: n,
            optimal_k: KBound::PlusInfinity,
            witness: None,
        });
    }

    // The iteration cap guards against stalling when the bracket is so wide
    // that float spacing exceeds the absolute tolerance.
    let mut iterations = 0;
    while hi - lo > BISECTION_TOL && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid).0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let optimal = 0.5 * (lo + hi);

    // Witness: the negative direction just past the optimum, normalized to
    // unit gamma when that form is nondegenerate on it.
    let (_, info) = holds(hi);
    let v = &info.min_vector;
    let gamma_v = (v.transpose() * &forms.b * v)[(0, 0)];
    let witness = if gamma_v > 1e-12 {
        lift(g, &forms, &(v / gamma_v.sqrt()))
    } else {
        lift(g, &forms, v)
    };
    Ok(CurvatureResult {
        vertex: x,
        dimension: n,
        optimal_k: KBound::Finite(optimal),
        witness: Some(witness),
    })
}

/// Optimal curvature at every vertex (evaluated in parallel with the
/// `parallel` feature) and the global bound.
pub fn curvature_function(g: &Graph, n: Dimension) -> Result<CurvatureFunction, CurvatureError> {
    let results = exec::map_indexed(g.vertex_count(), |x| curvature_at(g, x, n));
    let mut per_vertex = Vec::with_capacity(results.len());
    for r in results {
        per_vertex.push(r?);
    }
    let global_k = per_vertex
        .iter()
        .map(|r| r.optimal_k)
        .fold(KBound::PlusInfinity, KBound::min);
    Ok(CurvatureFunction {
        per_vertex,
        global_k,
    })
}
