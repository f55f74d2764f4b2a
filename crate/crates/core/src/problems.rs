//! Benchmark catalog: three scalar problems (two of them nonautonomous), an
//! elastic pendulum, a genetic toggle switch and a coupled rational system.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::oracle::jet::{Jet, JetError};
use crate::stepper::{run, EvalCounter, IntegrateError, Stepper};
use crate::system::{autonomize_field, autonomized_exact, OdeSystem, TimeDependentField, VectorField};

/// Labels accepted by [`make_problem`]; `rational-M` takes any dimension `M`.
pub const CATALOG: [&str; 6] = ["sin", "riccati", "log", "pendulum", "toggle", "rational-6"];

pub const DEFAULT_RATIONAL_DIM: usize = 6;
pub const DEFAULT_RATIONAL_SEED: u64 = 2017;

/// Denominators of the rational system smaller than this count as divergence.
pub const RATIONAL_DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown problem label `{0}`")]
    UnknownLabel(String),
    #[error("invalid problem parameters: {0}")]
    InvalidParameters(String),
    #[error("problem `{0}` has a closed-form solution; no refined reference is needed")]
    ClosedFormAvailable(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// How errors against the true solution are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactKind {
    ClosedForm,
    RefinedReference,
}

/// A fully parameterized benchmark problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub label: String,
    pub system: OdeSystem,
    pub params: Vec<(String, f64)>,
    pub exact: ExactKind,
    pub description: &'static str,
}

impl ProblemSpec {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

fn params(list: &[(&str, f64)]) -> Vec<(String, f64)> {
    list.iter().map(|&(n, v)| (n.to_string(), v)).collect()
}

/// Builds a catalog problem by label.
pub fn make_problem(label: &str) -> Result<ProblemSpec, ProblemError> {
    match label {
        "sin" => Ok(sin_problem(0.0, FRAC_PI_2, 1.0)),
        "riccati" => riccati_problem(2.0, 1.0, 10.0),
        "log" => log_problem(1.0, 1.0, 8.0),
        "pendulum" => Ok(pendulum_problem(PendulumParams::default())),
        "toggle" => Ok(toggle_problem(ToggleParams::default())),
        "rational" => default_rational(DEFAULT_RATIONAL_DIM),
        other => match other.strip_prefix("rational-").map(str::parse::<usize>) {
            Some(Ok(m)) if m >= 1 => default_rational(m),
            _ => Err(ProblemError::UnknownLabel(other.to_string())),
        },
    }
}

fn default_rational(m: usize) -> Result<ProblemSpec, ProblemError> {
    let (alpha, beta) = default_rational_coefficients(m, DEFAULT_RATIONAL_SEED);
    rational_system(m, alpha, beta)
}

// ---------------------------------------------------------------- sin

/// `u' = sin u`.
#[derive(Debug, Clone, Copy)]
pub struct SineField;

impl VectorField<f64> for SineField {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        out[0] = libm::sin(u[0]);
    }
    fn has_jet(&self) -> bool {
        true
    }
    fn eval_jet(&self, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
        out[0] = u[0].sin();
        Ok(())
    }
}

/// `u(t) = 2 arccot(e^{t0-t} cot(u0/2))`, on the branch through `u0`.
pub fn sin_exact(t0: f64, u0: f64, t: f64) -> f64 {
    let half = 0.5 * u0;
    2.0 * libm::atan2(libm::sin(half) * libm::exp(t - t0), libm::cos(half))
}

pub fn sin_problem(t0: f64, u0: f64, t_end: f64) -> ProblemSpec {
    let system = OdeSystem::new("sin", Arc::new(SineField), vec![u0], t0, t_end)
        .with_exact(Arc::new(move |t| vec![sin_exact(t0, u0, t)]));
    ProblemSpec {
        label: "sin".into(),
        system,
        params: params(&[("t0", t0), ("u0", u0), ("T", t_end)]),
        exact: ExactKind::ClosedForm,
        description: "u' = sin(u)",
    }
}

// ---------------------------------------------------------------- riccati

/// `u' = -2tu + u² + t² + 1`.
#[derive(Debug, Clone, Copy)]
pub struct RiccatiField;

impl TimeDependentField for RiccatiField {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let u = u[0];
        out[0] = -2.0 * t * u + u * u + t * t + 1.0;
    }
    fn has_jet(&self) -> bool {
        true
    }
    fn eval_jet(&self, t: &Jet, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
        let u = &u[0];
        let tu = t.try_mul(u)?.scale(-2.0);
        out[0] = tu.try_add(&u.try_mul(u)?)?.try_add(&t.try_mul(t)?)?.add_const(1.0);
        Ok(())
    }
}

/// `C` of the closed form `u = 1/(C - t) + t`.
pub fn riccati_constant(t0: f64, u0: f64) -> f64 {
    (1.0 + (u0 - t0) * t0) / (u0 - t0)
}

pub fn riccati_problem(t0: f64, u0: f64, t_end: f64) -> Result<ProblemSpec, ProblemError> {
    if !(u0 < t0) {
        return Err(ProblemError::InvalidParameters(format!(
            "riccati closed form needs u0 < t0 (u0 = {u0}, t0 = {t0})"
        )));
    }
    let c = riccati_constant(t0, u0);
    if (t0..=t_end).contains(&c) {
        return Err(ProblemError::InvalidParameters(format!(
            "riccati solution is singular at t = {c} inside [{t0}, {t_end}]"
        )));
    }
    let system = autonomize_field("riccati", RiccatiField, &[u0], t0, t_end)
        .with_exact(autonomized_exact(move |t| vec![1.0 / (c - t) + t]));
    Ok(ProblemSpec {
        label: "riccati".into(),
        system,
        params: params(&[("t0", t0), ("u0", u0), ("T", t_end), ("C", c)]),
        exact: ExactKind::ClosedForm,
        description: "u' = -2tu + u^2 + t^2 + 1 (autonomized)",
    })
}

// ---------------------------------------------------------------- log

/// `u' = (u/t) log(u/t)`.
#[derive(Debug, Clone, Copy)]
pub struct LogField;

impl TimeDependentField for LogField {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) {
        let w = u[0] / t;
        out[0] = w * libm::log(w);
    }
    fn has_jet(&self) -> bool {
        true
    }
    fn eval_jet(&self, t: &Jet, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
        let w = u[0].try_div(t)?;
        out[0] = w.try_mul(&w.ln()?)?;
        Ok(())
    }
}

/// `C` of the closed form `u = t e^{Ct + 1}`.
pub fn log_constant(t0: f64, u0: f64) -> f64 {
    (libm::log(u0 / t0) - 1.0) / t0
}

pub fn log_problem(t0: f64, u0: f64, t_end: f64) -> Result<ProblemSpec, ProblemError> {
    if !(t0 > 0.0 && u0 > 0.0) {
        return Err(ProblemError::InvalidParameters(format!(
            "log problem needs t0 > 0 and u0 > 0 (t0 = {t0}, u0 = {u0})"
        )));
    }
    let c = log_constant(t0, u0);
    let system = autonomize_field("log", LogField, &[u0], t0, t_end)
        .with_exact(autonomized_exact(move |t| vec![t * libm::exp(c * t + 1.0)]));
    Ok(ProblemSpec {
        label: "log".into(),
        system,
        params: params(&[("t0", t0), ("u0", u0), ("T", t_end), ("C", c)]),
        exact: ExactKind::ClosedForm,
        description: "u' = (u/t) log(u/t) (autonomized)",
    })
}

// ---------------------------------------------------------------- pendulum

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    pub g: f64,
    /// Cord elasticity.
    pub k1: f64,
    /// Friction.
    pub k2: f64,
    /// `(r1, r2, v1, v2)` at `t = 0`.
    pub initial: [f64; 4],
    pub t_end: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            g: 9.81,
            k1: 100.0,
            k2: 1.0,
            initial: [0.7, -0.8, 0.1, -0.6],
            t_end: 10.0,
        }
    }
}

/// Pendulum on an elastic cord of unit rest length, state `(r1, r2, v1, v2)`.
#[derive(Debug, Clone, Copy)]
pub struct PendulumField {
    pub g: f64,
    pub k1: f64,
    pub k2: f64,
}

impl VectorField<f64> for PendulumField {
    fn dim(&self) -> usize {
        4
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        let (r1, r2, v1, v2) = (u[0], u[1], u[2], u[3]);
        let stretch = self.k1 * (1.0 / libm::sqrt(r1 * r1 + r2 * r2) - 1.0);
        out[0] = v1;
        out[1] = v2;
        out[2] = stretch * r1 - self.k2 * v1;
        out[3] = stretch * r2 - self.k2 * v2 - self.g;
    }
    fn has_jet(&self) -> bool {
        true
    }
    fn eval_jet(&self, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
        let (r1, r2, v1, v2) = (&u[0], &u[1], &u[2], &u[3]);
        let norm = r1.try_mul(r1)?.try_add(&r2.try_mul(r2)?)?.sqrt()?;
        let stretch = norm.recip()?.add_const(-1.0).scale(self.k1);
        out[0] = v1.clone();
        out[1] = v2.clone();
        out[2] = stretch.try_mul(r1)?.try_sub(&v1.scale(self.k2))?;
        out[3] = stretch
            .try_mul(r2)?
            .try_sub(&v2.scale(self.k2))?
            .add_const(-self.g);
        Ok(())
    }
}

/// Mechanical energy per unit mass; conserved when `k2 = 0`.
pub fn pendulum_energy(u: &[f64], g: f64, k1: f64) -> f64 {
    let (r1, r2, v1, v2) = (u[0], u[1], u[2], u[3]);
    let stretch = libm::sqrt(r1 * r1 + r2 * r2) - 1.0;
    0.5 * (v1 * v1 + v2 * v2) + g * r2 + 0.5 * k1 * stretch * stretch
}

pub fn pendulum_problem(p: PendulumParams) -> ProblemSpec {
    let field = PendulumField {
        g: p.g,
        k1: p.k1,
        k2: p.k2,
    };
    let system = OdeSystem::new("pendulum", Arc::new(field), p.initial.to_vec(), 0.0, p.t_end);
    ProblemSpec {
        label: "pendulum".into(),
        system,
        params: params(&[
            ("g", p.g),
            ("k1", p.k1),
            ("k2", p.k2),
            ("r1", p.initial[0]),
            ("r2", p.initial[1]),
            ("v1", p.initial[2]),
            ("v2", p.initial[3]),
            ("T", p.t_end),
        ]),
        exact: ExactKind::RefinedReference,
        description: "elastic pendulum with friction",
    }
}

// ---------------------------------------------------------------- toggle

/// Parameters of one gene of the toggle switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneParams {
    /// Maximal transcription rate.
    pub k1: f64,
    /// Translation rate.
    pub k2: f64,
    /// mRNA decay.
    pub d1: f64,
    /// Protein decay.
    pub d2: f64,
    /// Repression threshold applied by this gene's protein.
    pub threshold: f64,
    /// Hill exponent of this gene's protein.
    pub hill: f64,
}

impl Default for GeneParams {
    fn default() -> Self {
        Self {
            k1: 10.0,
            k2: 1.0,
            d1: 1.0,
            d2: 1.0,
            threshold: 1.0,
            hill: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToggleParams {
    pub left: GeneParams,
    pub right: GeneParams,
    /// `(m_L, p_L, m_R, p_R)` at `t = 0`.
    pub initial: [f64; 4],
    pub t_end: f64,
}

impl Default for ToggleParams {
    fn default() -> Self {
        Self {
            left: GeneParams::default(),
            right: GeneParams::default(),
            initial: [0.5, 0.4, 0.5, 0.3],
            t_end: 10.0,
        }
    }
}

/// Two mutually repressing genes, state `(m_L, p_L, m_R, p_R)`.
#[derive(Debug, Clone, Copy)]
pub struct ToggleField {
    pub left: GeneParams,
    pub right: GeneParams,
}

fn hill_repression(k: f64, threshold: f64, n: f64, p: f64) -> f64 {
    let kn = libm::pow(threshold, n);
    k * kn / (kn + libm::pow(p, n))
}

fn hill_repression_jet(k: f64, threshold: f64, n: f64, p: &Jet) -> Result<Jet, JetError> {
    let kn = libm::pow(threshold, n);
    let pn = if n >= 0.0 && libm::trunc(n) == n && n <= u32::MAX as f64 {
        p.powi(n as u32)
    } else {
        p.powf(n)?
    };
    Jet::constant(k * kn, p.order()).try_div(&pn.add_const(kn))
}

impl VectorField<f64> for ToggleField {
    fn dim(&self) -> usize {
        4
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        let (ml, pl, mr, pr) = (u[0], u[1], u[2], u[3]);
        let (l, r) = (&self.left, &self.right);
        out[0] = hill_repression(l.k1, r.threshold, r.hill, pr) - l.d1 * ml;
        out[1] = l.k2 * ml - l.d2 * pl;
        out[2] = hill_repression(r.k1, l.threshold, l.hill, pl) - r.d1 * mr;
        out[3] = r.k2 * mr - r.d2 * pr;
    }
    fn has_jet(&self) -> bool {
        true
    }
    fn eval_jet(&self, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
        let (ml, pl, mr, pr) = (&u[0], &u[1], &u[2], &u[3]);
        let (l, r) = (&self.left, &self.right);
        out[0] = hill_repression_jet(l.k1, r.threshold, r.hill, pr)?.try_sub(&ml.scale(l.d1))?;
        out[1] = ml.scale(l.k2).try_sub(&pl.scale(l.d2))?;
        out[2] = hill_repression_jet(r.k1, l.threshold, l.hill, pl)?.try_sub(&mr.scale(r.d1))?;
        out[3] = mr.scale(r.k2).try_sub(&pr.scale(r.d2))?;
        Ok(())
    }
}

pub fn toggle_problem(p: ToggleParams) -> ProblemSpec {
    let field = ToggleField {
        left: p.left,
        right: p.right,
    };
    let system = OdeSystem::new("toggle", Arc::new(field), p.initial.to_vec(), 0.0, p.t_end);
    ProblemSpec {
        label: "toggle".into(),
        system,
        params: params(&[
            ("k_L1", p.left.k1),
            ("k_R1", p.right.k1),
            ("n_L", p.left.hill),
            ("n_R", p.right.hill),
            ("m_L", p.initial[0]),
            ("p_L", p.initial[1]),
            ("m_R", p.initial[2]),
            ("p_R", p.initial[3]),
            ("T", p.t_end),
        ]),
        exact: ExactKind::RefinedReference,
        description: "genetic toggle switch",
    }
}

// ---------------------------------------------------------------- rational

/// `u_i' = (Σ_j α_ij u_j) / (Σ_j β_ij u_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalField {
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl RationalField {
    pub fn new(alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self, ProblemError> {
        let m = alpha.len();
        let square = |a: &Vec<Vec<f64>>| a.len() == m && a.iter().all(|row| row.len() == m);
        if m == 0 || !square(&alpha) || !square(&beta) {
            return Err(ProblemError::InvalidParameters(
                "alpha and beta must be non-empty m x m matrices".into(),
            ));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    /// `c_i` with `α_i = c_i β_i` for every row, if all rows are proportional.
    fn constant_rates(&self) -> Option<Vec<f64>> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| {
                let (j, &bj) = b.iter().enumerate().find(|(_, &x)| x != 0.0)?;
                let c = a[j] / bj;
                a.iter()
                    .zip(b)
                    .all(|(&x, &y)| (x - c * y).abs() <= 1e-15 * x.abs().max(1.0))
                    .then_some(c)
            })
            .collect()
    }
}

fn dot(row: &[f64], u: &[f64]) -> f64 {
    row.iter().zip(u).map(|(a, b)| a * b).sum()
}

impl VectorField<f64> for RationalField {
    fn dim(&self) -> usize {
        self.alpha.len()
    }
    fn eval(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let den = dot(&self.beta[i], u);
            *o = if den.abs() < RATIONAL_DENOMINATOR_FLOOR {
                f64::NAN
            } else {
                dot(&self.alpha[i], u) / den
            };
        }
    }
    fn has_jet(&self) -> bool {
        true
    }
    fn eval_jet(&self, u: &[Jet], out: &mut [Jet]) -> Result<(), JetError> {
        let order = u[0].order();
        let lin = |row: &[f64]| {
            row.iter().zip(u).fold(Ok(Jet::constant(0.0, order)), |acc: Result<Jet, JetError>, (&c, x)| {
                acc?.try_add(&x.scale(c))
            })
        };
        for (i, o) in out.iter_mut().enumerate() {
            let den = lin(&self.beta[i])?;
            if den.value().abs() < RATIONAL_DENOMINATOR_FLOOR {
                return Err(JetError::ZeroDenominator);
            }
            *o = lin(&self.alpha[i])?.try_div(&den)?;
        }
        Ok(())
    }
}

/// Seeded coefficients with entries uniform in `[1, 2)`.
pub fn default_rational_coefficients(m: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| (0..m).map(|_| rng.gen_range(1.0..2.0)).collect())
            .collect()
    };
    let alpha = matrix(&mut rng);
    let beta = matrix(&mut rng);
    (alpha, beta)
}

/// The rational system with `u_i(0) = 1` on `[0, 10]`.
pub fn rational_system(m: usize, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<ProblemSpec, ProblemError> {
    let field = RationalField::new(alpha, beta)?;
    if field.dim() != m {
        return Err(ProblemError::InvalidParameters(format!(
            "coefficient matrices are {0}x{0}, expected {m}x{m}",
            field.dim()
        )));
    }
    let u0 = vec![1.0; m];
    if !field.beta.iter().all(|row| dot(row, &u0).abs() >= RATIONAL_DENOMINATOR_FLOOR) {
        return Err(ProblemError::InvalidParameters(
            "a denominator vanishes at the initial state".into(),
        ));
    }
    let rates = field.constant_rates();
    let label = format!("rational-{m}");
    let mut system = OdeSystem::new(label.clone(), Arc::new(field), u0, 0.0, 10.0);
    let exact = match rates {
        Some(rates) => {
            system = system.with_exact(Arc::new(move |t| rates.iter().map(|c| 1.0 + c * t).collect()));
            ExactKind::ClosedForm
        }
        None => ExactKind::RefinedReference,
    };
    Ok(ProblemSpec {
        label,
        system,
        params: params(&[("m", m as f64), ("T", 10.0)]),
        exact,
        description: "u_i' = (alpha_i . u) / (beta_i . u)",
    })
}

// ---------------------------------------------------------------- references

/// Endpoint of a run refined by `REFINEMENT` over the finest study grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedReference {
    pub n_steps: usize,
    pub endpoint: Vec<f64>,
}

pub const REFINEMENT: usize = 10;

/// Reference endpoint for problems without a closed form: the given method
/// on `REFINEMENT × finest_n` steps.
pub fn refined_reference<S: Stepper + ?Sized>(
    spec: &ProblemSpec,
    stepper: &S,
    finest_n: usize,
) -> Result<RefinedReference, ProblemError> {
    if spec.exact == ExactKind::ClosedForm {
        return Err(ProblemError::ClosedFormAvailable(spec.label.clone()));
    }
    let n_steps = finest_n * REFINEMENT;
    let endpoint = run(&spec.system, stepper, n_steps, &mut EvalCounter::new(), |_, _| {})?;
    Ok(RefinedReference { n_steps, endpoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::{integrate, ApproxTaylor, IntegratorConfig};

    /// `|u'(t) - f(u(t))|` via a fourth-order central difference of the closed form.
    fn residual(spec: &ProblemSpec, t: f64) -> f64 {
        let sys = &spec.system;
        let h = 1e-3;
        let u = |s: f64| sys.exact_at(s).unwrap();
        let (a, b, c, d) = (u(t - 2.0 * h), u(t - h), u(t + h), u(t + 2.0 * h));
        let mut f = vec![0.0; sys.dim()];
        sys.rhs.eval(&u(t), &mut f);
        (0..sys.dim())
            .map(|i| {
                let du = (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h);
                (du - f[i]).abs() / f[i].abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn closed_forms_satisfy_their_odes() {
        let ones = vec![vec![1.5, 1.2], vec![1.1, 1.7]];
        let specs = [
            make_problem("sin").unwrap(),
            make_problem("riccati").unwrap(),
            make_problem("log").unwrap(),
            rational_system(2, ones.clone(), ones).unwrap(),
        ];
        for spec in &specs {
            let sys = &spec.system;
            let u0 = sys.exact_at(sys.t0).unwrap();
            for (a, b) in u0.iter().zip(&sys.initial_state) {
                assert!((a - b).abs() < 1e-12, "{}", spec.label);
            }
            for k in 0..20 {
                let t = sys.t0 + 0.01 + (sys.span() - 0.02) * k as f64 / 19.0;
                assert!(residual(spec, t) < 1e-10, "{} at t={t}: {}", spec.label, residual(spec, t));
            }
        }
    }

    #[test]
    fn catalog_constants() {
        let r = make_problem("riccati").unwrap();
        assert_eq!(r.param("C"), Some(1.0));
        let l = make_problem("log").unwrap();
        assert_eq!(l.param("C"), Some(-1.0));
        let s = make_problem("sin").unwrap();
        assert!((s.system.exact_at(1.0).unwrap()[0] - 2.0 * libm::atan(libm::exp(1.0))).abs() < 1e-15);
    }

    #[test]
    fn labels() {
        for label in CATALOG {
            assert!(make_problem(label).is_ok(), "{label}");
        }
        assert_eq!(make_problem("rational-4").unwrap().system.dim(), 4);
        assert!(matches!(make_problem("lorenz"), Err(ProblemError::UnknownLabel(_))));
        assert!(matches!(make_problem("rational-0"), Err(ProblemError::UnknownLabel(_))));
    }

    #[test]
    fn riccati_precondition() {
        assert!(matches!(riccati_problem(2.0, 3.0, 10.0), Err(ProblemError::InvalidParameters(_))));
        assert!(matches!(log_problem(0.0, 1.0, 8.0), Err(ProblemError::InvalidParameters(_))));
    }

    #[test]
    fn rational_collapses_when_alpha_equals_beta() {
        let (_, beta) = default_rational_coefficients(3, 7);
        let spec = rational_system(3, beta.clone(), beta).unwrap();
        assert_eq!(spec.exact, ExactKind::ClosedForm);
        let mut out = vec![0.0; 3];
        spec.system.rhs.eval(&[1.0, 2.0, 3.0], &mut out);
        for x in out {
            assert!((x - 1.0).abs() < 1e-15);
        }
        assert_eq!(spec.system.exact_at(2.0).unwrap(), vec![3.0, 3.0, 3.0]);

        let one = rational_system(1, vec![vec![2.0]], vec![vec![1.0]]).unwrap();
        let traj = integrate(&one.system, &IntegratorConfig::new(2, 5)).unwrap();
        assert!((traj.endpoint().1[0] - 21.0).abs() < 1e-12);
    }

    #[test]
    fn rational_small_denominator_diverges() {
        let spec = rational_system(2, vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert!(matches!(spec, Err(ProblemError::InvalidParameters(_))));
        let field = RationalField::new(vec![vec![1.0, 1.0]; 2], vec![vec![1.0, -1.0], vec![1.0, 1.0]]).unwrap();
        let mut out = vec![0.0; 2];
        field.eval(&[2.0, 2.0], &mut out);
        assert!(out[0].is_nan());
    }

    #[test]
    fn default_coefficients_are_reproducible() {
        let a = default_rational_coefficients(4, 11);
        let b = default_rational_coefficients(4, 11);
        assert_eq!(a, b);
        assert!(a.0.iter().chain(&a.1).flatten().all(|&x| (1.0..2.0).contains(&x)));
        assert_ne!(a, default_rational_coefficients(4, 12));
    }

    #[test]
    fn refined_reference_protocol() {
        let sin = make_problem("sin").unwrap();
        let stepper = ApproxTaylor::new(2).unwrap();
        assert!(matches!(
            refined_reference(&sin, &stepper, 10),
            Err(ProblemError::ClosedFormAvailable(_))
        ));
        let toggle = make_problem("toggle").unwrap();
        let r = refined_reference(&toggle, &stepper, 256).unwrap();
        assert_eq!(r.n_steps, 2560);
        assert_eq!(r.endpoint.len(), 4);
    }

    #[test]
    fn jets_agree_with_plain_evaluation() {
        for label in ["sin", "riccati", "log", "pendulum", "toggle", "rational-5"] {
            let spec = make_problem(label).unwrap();
            let sys = &spec.system;
            let u = &sys.initial_state;
            let mut plain = vec![0.0; sys.dim()];
            sys.rhs.eval(u, &mut plain);
            let jets: Vec<Jet> = u.iter().map(|&x| Jet::constant(x, 3)).collect();
            let mut out: Vec<Jet> = (0..sys.dim()).map(|_| Jet::constant(0.0, 3)).collect();
            sys.rhs.eval_jet(&jets, &mut out).unwrap();
            for (p, j) in plain.iter().zip(&out) {
                assert!((p - j.value()).abs() <= 1e-14 * p.abs().max(1.0), "{label}");
            }
        }
    }
}
