//! Time evolution: the linear heat semigroup and the nonlinear flow solving
//! `du/dt = Lu + Gu`, with snapshot traces and finite-time blow-up
//! detection.
//!
//! Both flows run through one adaptive Dormand-Prince 5(4) integrator with
//! fourth-order dense output. The nonlinear right-hand side is quadratic, so
//! solutions can escape to infinity in finite time; that event is detected
//! by a sup-norm threshold (with step underflow as a fallback) and reported
//! as an expected outcome carrying the last accepted state.

use crate::calculus::{CalculusError, VertexFunction};
use crate::graph::Graph;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("time grid must be increasing and start at 0")]
    BadGrid,
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
}

/// Tolerances and guards for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Sup-norm bound beyond which the flow is declared blown up.
    pub blowup_threshold: f64,
    pub min_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 0.1,
            blowup_threshold: 1e8,
            min_step: 1e-12,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), EvolutionError> {
        let all_pos = [
            self.rel_tol,
            self.abs_tol,
            self.max_step,
            self.blowup_threshold,
            self.min_step,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !all_pos {
            return Err(EvolutionError::BadConfig(
                "all fields must be positive and finite".into(),
            ));
        }
        if self.min_step >= self.max_step {
            return Err(EvolutionError::BadConfig(
                "min_step must be below max_step".into(),
            ));
        }
        Ok(())
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FlowStatus {
    Completed,
    /// The sup-norm crossed the threshold; the time is the last accepted
    /// step time, an underestimate of the true blow-up time.
    BlewUpAt {
        t: f64,
    },
    StepUnderflow {
        t: f64,
    },
}

impl FlowStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, FlowStatus::Completed)
    }
}

/// Time-stamped snapshots of one flow.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub states: Vec<VertexFunction>,
    pub status: FlowStatus,
}

/// Final state of a single-horizon integration; on abort the state is the
/// last accepted one.
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub state: VertexFunction,
    pub time: f64,
    pub status: FlowStatus,
}

// Dormand-Prince 5(4) coefficients. The stage times are not materialized:
// both fields here are autonomous.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus the embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output weights for the continuous fourth-order extension
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step's interpolation polynomial.
struct DenseSegment {
    t0: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + theta1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + theta1 * self.cont[4][i])));
        }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Core adaptive loop. `observe` sees every accepted step's dense segment in
/// order; the return carries the status, last accepted time and state.
fn integrate<F>(
    field: F,
    y0: &[f64],
    t_end: f64,
    cfg: &SolverConfig,
    mut observe: impl FnMut(&DenseSegment),
) -> (FlowStatus, f64, Vec<f64>)
where
    F: Fn(&[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut t = 0.0;
    let mut y = y0.to_vec();
    if t_end == 0.0 {
        return (FlowStatus::Completed, 0.0, y);
    }
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let (first, rest) = k.split_at_mut(1);
    field(&y, &mut first[0]);
    let _ = rest;
    let mut h = cfg.max_step.min(t_end);
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > 50_000_000 {
            return (FlowStatus::StepUnderflow { t }, t, y);
        }
        if h < cfg.min_step {
            return (FlowStatus::StepUnderflow { t }, t, y);
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        // stages 2..7; stage 7 is the FSAL evaluation at the new point
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            if s == 6 {
                y_new.copy_from_slice(&y_stage);
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            field(&y_stage, &mut tail[0]);
        }
        let mut err_sq = 0.0;
        let mut finite = y_new.iter().all(|v| v.is_finite());
        if finite {
            for i in 0..dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                e *= h;
                let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            finite = err_sq.is_finite();
        }
        let err_norm = if finite {
            (err_sq / dim as f64).sqrt()
        } else {
            f64::INFINITY
        };
        if err_norm <= 1.0 {
            // accept: build the interpolation polynomial, then advance
            let mut cont = [
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
            ];
            for i in 0..dim {
                let dy = y_new[i] - y[i];
                cont[0][i] = y[i];
                cont[1][i] = dy;
                cont[2][i] = h * k[0][i] - dy;
                cont[3][i] = dy - h * k[6][i] - cont[2][i];
                let mut d5 = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    d5 += D[j] * kj[i];
                }
                cont[4][i] = h * d5;
            }
            let seg = DenseSegment { t0: t, h, cont };
            observe(&seg);
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            if sup_norm(&y) > cfg.blowup_threshold {
                return (FlowStatus::BlewUpAt { t }, t, y);
            }
            if last {
                return (FlowStatus::Completed, t_end, y);
            }
        }
        let factor = if err_norm.is_finite() && err_norm > 0.0 {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 10.0)
        } else if err_norm == 0.0 {
            10.0
        } else {
            0.2
        };
        h = (h * factor).min(cfg.max_step);
    }
}

fn nonlinear_field(g: &Graph) -> impl Fn(&[f64], &mut [f64]) + '_ {
    move |u: &[f64], out: &mut [f64]| {
        for x in 0..out.len() {
            out[x] = g
                .out_edges(x)
                .iter()
                .map(|&(y, q)| {
                    let d = u[y] - u[x];
                    q * d * (1.0 + 0.5 * d)
                })
                .sum();
        }
    }
}

fn linear_field(g: &Graph) -> impl Fn(&[f64], &mut [f64]) + '_ {
    move |u: &[f64], out: &mut [f64]| {
        for x in 0..out.len() {
            out[x] = g.out_edges(x).iter().map(|&(y, q)| q * (u[y] - u[x])).sum();
        }
    }
}

fn check_inputs(
    g: &Graph,
    f: &VertexFunction,
    t: f64,
    cfg: &SolverConfig,
) -> Result<(), EvolutionError> {
    cfg.validate()?;
    if f.len() != g.vertex_count() {
        return Err(CalculusError::DomainMismatch {
            got: f.len(),
            expected: g.vertex_count(),
        }
        .into());
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(EvolutionError::NegativeTime(t));
    }
    Ok(())
}

/// The heat semigroup applied at one time. The linear flow is a sup-norm
/// contraction, so the blow-up threshold does not apply to it.
pub fn heat_semigroup(
    g: &Graph,
    f: &VertexFunction,
    t: f64,
    cfg: &SolverConfig,
) -> Result<VertexFunction, EvolutionError> {
    check_inputs(g, f, t, cfg)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let cfg = linear_config(cfg);
    let (_, _, y) = integrate(linear_field(g), f.values(), t, &cfg, |_| {});
    Ok(VertexFunction::from_raw(y))
}

fn linear_config(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        blowup_threshold: f64::MAX,
        ..*cfg
    }
}

/// The nonlinear flow at one time; blow-up is reported in the outcome, not
/// as an error.
pub fn nonlinear_flow(
    g: &Graph,
    u0: &VertexFunction,
    t: f64,
    cfg: &SolverConfig,
) -> Result<FlowOutcome, EvolutionError> {
    check_inputs(g, u0, t, cfg)?;
    if t == 0.0 {
        return Ok(FlowOutcome {
            state: u0.clone(),
            time: 0.0,
            status: FlowStatus::Completed,
        });
    }
    let (status, time, y) = integrate(nonlinear_field(g), u0.values(), t, cfg, |_| {});
    Ok(FlowOutcome {
        state: VertexFunction::from_raw(y),
        time,
        status,
    })
}

fn trace_with_field<F>(
    g: &Graph,
    u0: &VertexFunction,
    grid: &[f64],
    cfg: &SolverConfig,
    field: F,
) -> Result<FlowTrace, EvolutionError>
where
    F: Fn(&[f64], &mut [f64]),
{
    cfg.validate()?;
    if u0.len() != g.vertex_count() {
        return Err(CalculusError::DomainMismatch {
            got: u0.len(),
            expected: g.vertex_count(),
        }
        .into());
    }
    if grid.is_empty() || grid[0] != 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvolutionError::BadGrid);
    }
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let t_end = *grid.last().unwrap();
    if t_end == 0.0 {
        return Ok(FlowTrace {
            times,
            states,
            status: FlowStatus::Completed,
        });
    }
    let mut next = 1usize;
    let mut buf = vec![0.0; u0.len()];
    let (status, _, y_final) = integrate(field, u0.values(), t_end, cfg, |seg| {
        while next < grid.len() && grid[next] <= seg.t0 + seg.h * (1.0 + 1e-12) {
            seg.eval(grid[next], &mut buf);
            times.push(grid[next]);
            states.push(VertexFunction::from_raw(buf.clone()));
            next += 1;
        }
    });
    // the final clipped step can land an ulp short of the horizon; on
    // completion any remaining grid times are the horizon itself
    if status.is_completed() {
        while next < grid.len() {
            times.push(grid[next]);
            states.push(VertexFunction::from_raw(y_final.clone()));
            next += 1;
        }
    }
    Ok(FlowTrace {
        times,
        states,
        status,
    })
}

/// Snapshots of the nonlinear flow on an increasing grid starting at 0;
/// recorded via dense output, so the step sequence matches a single
/// integration to the horizon. On blow-up the trace stops at the last
/// reachable grid time.
pub fn flow_trace(
    g: &Graph,
    u0: &VertexFunction,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<FlowTrace, EvolutionError> {
    trace_with_field(g, u0, grid, cfg, nonlinear_field(g))
}

/// Snapshots of the heat semigroup on an increasing grid starting at 0.
pub fn heat_trace(
    g: &Graph,
    f: &VertexFunction,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<FlowTrace, EvolutionError> {
    trace_with_field(g, f, grid, &linear_config(cfg), linear_field(g))
}

/// The right-hand side `Lu + Gu` of the nonlinear flow, exactly as the
/// integrator evaluates it.
pub fn flow_field(g: &Graph, u: &VertexFunction) -> Result<VertexFunction, EvolutionError> {
    if u.len() != g.vertex_count() {
        return Err(CalculusError::DomainMismatch {
            got: u.len(),
            expected: g.vertex_count(),
        }
        .into());
    }
    let mut out = vec![0.0; u.len()];
    nonlinear_field(g)(u.values(), &mut out);
    Ok(VertexFunction::from_raw(out))
}
