//! The Laplacian and the iterated carré du champ operators, plus the local
//! quadratic-form matrices they induce on a two-ball.
//!
//! The operator hierarchy starts from the pointwise product and iterates
//! `2 G_{k+1}(f,h) = L G_k(f,h) - G_k(f, Lh) - G_k(Lf, h)` where `L` is the
//! Laplacian; `gamma` is the k=1 form and `gamma2` its iterate. Everything
//! here is a pure function of the graph and the vertex functions.

use crate::graph::{Graph, GraphError};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalculusError {
    #[error("function domain has {got} entries, graph has {expected} vertices")]
    DomainMismatch { got: usize, expected: usize },
    #[error("non-finite value {value} at vertex {vertex:?}")]
    NonFinite { vertex: String, value: f64 },
    #[error("function value missing for vertex {0:?}")]
    MissingVertex(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid function file: {0}")]
    Syntax(String),
}

/// A real-valued function on the whole vertex set, stored in declared
/// vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self, CalculusError> {
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(CalculusError::NonFinite {
                vertex: i.to_string(),
                value: v,
            });
        }
        Ok(VertexFunction { values })
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        VertexFunction { values }
    }

    pub fn constant(g: &Graph, c: f64) -> Self {
        VertexFunction {
            values: vec![c; g.vertex_count()],
        }
    }

    pub fn zero(g: &Graph) -> Self {
        Self::constant(g, 0.0)
    }

    pub fn from_fn(g: &Graph, f: impl FnMut(usize) -> f64) -> Result<Self, CalculusError> {
        Self::new((0..g.vertex_count()).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, CalculusError> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Parses the JSON object format `{vertex: number, ...}`; the domain
    /// must be exactly the graph's vertex set.
    pub fn from_json(g: &Graph, text: &str) -> Result<Self, CalculusError> {
        let map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| CalculusError::Syntax(e.to_string()))?;
        let mut values = vec![f64::NAN; g.vertex_count()];
        for (name, value) in &map {
            let x = g.index_of(name)?;
            let v = value
                .as_f64()
                .ok_or_else(|| CalculusError::Syntax(format!("value for {name:?} not a number")))?;
            values[x] = v;
        }
        for x in 0..g.vertex_count() {
            if values[x].is_nan() && !map.contains_key(g.vertex_name(x)) {
                return Err(CalculusError::MissingVertex(g.vertex_name(x).to_string()));
            }
        }
        Self::new(values)
    }

    /// Serializes as a JSON object in declared vertex order.
    pub fn to_json(&self, g: &Graph) -> String {
        self.to_json_value(g).to_string()
    }

    pub fn to_json_value(&self, g: &Graph) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for x in 0..self.values.len() {
            map.insert(g.vertex_name(x).to_string(), self.values[x].into());
        }
        serde_json::Value::Object(map)
    }

    fn check_domain(&self, g: &Graph) -> Result<(), CalculusError> {
        if self.values.len() == g.vertex_count() {
            Ok(())
        } else {
            Err(CalculusError::DomainMismatch {
                got: self.values.len(),
                expected: g.vertex_count(),
            })
        }
    }
}

/// `(Lf)(x) = sum_y q(x,y) (f(y) - f(x))`.
pub fn laplacian(g: &Graph, f: &VertexFunction) -> Result<VertexFunction, CalculusError> {
    f.check_domain(g)?;
    Ok(VertexFunction::from_raw(laplacian_raw(g, f.values())))
}

pub(crate) fn laplacian_raw(g: &Graph, f: &[f64]) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|x| g.out_edges(x).iter().map(|&(y, q)| q * (f[y] - f[x])).sum())
        .collect()
}

/// The iterated bilinear forms: k=0 is the pointwise product, and each level
/// applies `2 G_{k+1}(f,h) = L G_k(f,h) - G_k(f,Lh) - G_k(Lf,h)`.
pub fn gamma_bilinear(
    g: &Graph,
    k: u32,
    f: &VertexFunction,
    h: &VertexFunction,
) -> Result<VertexFunction, CalculusError> {
    f.check_domain(g)?;
    h.check_domain(g)?;
    Ok(VertexFunction::from_raw(gamma_bilinear_raw(
        g,
        k,
        f.values(),
        h.values(),
    )))
}

fn gamma_bilinear_raw(g: &Graph, k: u32, f: &[f64], h: &[f64]) -> Vec<f64> {
    if k == 0 {
        return f.iter().zip(h).map(|(a, b)| a * b).collect();
    }
    let prev = gamma_bilinear_raw(g, k - 1, f, h);
    let lf = laplacian_raw(g, f);
    let lh = laplacian_raw(g, h);
    let term1 = laplacian_raw(g, &prev);
    let term2 = gamma_bilinear_raw(g, k - 1, f, &lh);
    let term3 = gamma_bilinear_raw(g, k - 1, &lf, h);
    (0..f.len())
        .map(|x| 0.5 * (term1[x] - term2[x] - term3[x]))
        .collect()
}

/// The carré du champ `Gf(x) = 1/2 sum_y q(x,y)(f(y)-f(x))^2`, the expanded
/// form of the k=1 recursion (the two agree; a test asserts it).
pub fn gamma(g: &Graph, f: &VertexFunction) -> Result<VertexFunction, CalculusError> {
    f.check_domain(g)?;
    Ok(VertexFunction::from_raw(gamma_raw(g, f.values())))
}

pub(crate) fn gamma_raw(g: &Graph, f: &[f64]) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|x| {
            0.5 * g
                .out_edges(x)
                .iter()
                .map(|&(y, q)| {
                    let d = f[y] - f[x];
                    q * d * d
                })
                .sum::<f64>()
        })
        .collect()
}

/// The iterated form `gamma2 = G_2(f,f)` via the recursion.
pub fn gamma2(g: &Graph, f: &VertexFunction) -> Result<VertexFunction, CalculusError> {
    gamma_bilinear(g, 2, f, f)
}

/// Quadratic-form realization of `gamma2`, `gamma` and the Laplacian at one
/// vertex, on coordinates indexed by the punctured two-ball with the gauge
/// `f(center) = 0` (all three operators are invariant under adding
/// constants, so the gauge loses nothing).
#[derive(Debug, Clone)]
pub struct LocalForms {
    pub center: usize,
    /// Vertices of `B_2(center)` excluding the center, ascending.
    pub coordinates: Vec<usize>,
    /// Symmetric matrix with `v' A v = gamma2(f_v)(center)`.
    pub a: DMatrix<f64>,
    /// Positive-semidefinite diagonal matrix with `v' B v = gamma(f_v)(center)`.
    pub b: DMatrix<f64>,
    /// Vector with `c . v = (L f_v)(center)`.
    pub c: DVector<f64>,
}

/// Assembles the local forms at `x` by evaluating the bilinear `gamma2` on
/// coordinate basis functions. Evaluation stays inside the two-ball.
pub fn local_forms(g: &Graph, x: usize) -> Result<LocalForms, CalculusError> {
    g.check_vertex(x)?;
    let coordinates: Vec<usize> = g.ball(x, 2)?.into_iter().filter(|&v| v != x).collect();
    let m = coordinates.len();
    let mut a = DMatrix::zeros(m, m);
    let mut b = DMatrix::zeros(m, m);
    let mut c = DVector::zeros(m);
    for i in 0..m {
        c[i] = g.rate(x, coordinates[i]);
        b[(i, i)] = 0.5 * g.rate(x, coordinates[i]);
        for j in 0..m {
            let vi = coordinates[i];
            let vj = coordinates[j];
            let fi = |v: usize| if v == vi { 1.0 } else { 0.0 };
            let fj = |v: usize| if v == vj { 1.0 } else { 0.0 };
            a[(i, j)] = gamma2_pair_at(g, x, &fi, &fj);
        }
    }
    // quadratic forms only see the symmetric part
    let a = (&a + a.transpose()) * 0.5;
    Ok(LocalForms {
        center: x,
        coordinates,
        a,
        b,
        c,
    })
}

/// Bilinear `gamma2(f,h)(x)` evaluated locally: only values of `f`, `h` on
/// the out-out-neighborhood of `x` are read.
fn gamma2_pair_at(g: &Graph, x: usize, f: &dyn Fn(usize) -> f64, h: &dyn Fn(usize) -> f64) -> f64 {
    let gfh = |v: usize| {
        0.5 * g
            .out_edges(v)
            .iter()
            .map(|&(w, q)| q * (f(w) - f(v)) * (h(w) - h(v)))
            .sum::<f64>()
    };
    let lap = |v: usize, func: &dyn Fn(usize) -> f64| {
        g.out_edges(v)
            .iter()
            .map(|&(w, q)| q * (func(w) - func(v)))
            .sum::<f64>()
    };
    let gfh_x = gfh(x);
    let mut dgamma = 0.0;
    let mut gf_dh = 0.0;
    let mut gh_df = 0.0;
    for &(y, q) in g.out_edges(x) {
        dgamma += q * (gfh(y) - gfh_x);
        gf_dh += q * (f(y) - f(x)) * (lap(y, h) - lap(x, h));
        gh_df += q * (h(y) - h(x)) * (lap(y, f) - lap(x, f));
    }
    0.5 * (dgamma - 0.5 * gf_dh - 0.5 * gh_df)
}
