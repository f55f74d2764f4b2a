//! Convergence studies and method comparisons.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use approx_taylor::oracle::{ButcherTableau, ExactTaylor, RungeKutta};
use approx_taylor::problems::{
    default_rational_coefficients, make_problem, rational_system, refined_reference, ExactKind,
    RefinedReference,
    ProblemSpec, DEFAULT_RATIONAL_DIM, DEFAULT_RATIONAL_SEED,
};
use approx_taylor::scalar::{max_norm, max_norm_diff};
use approx_taylor::stepper::run;
use approx_taylor::{ApproxTaylor, EvalCounter, IntegrateError, Stepper};

use crate::fit::{fit_slope, SlopeFit};
use crate::HarnessError;

/// Errors below `ROUNDING_FLOOR · max(1, ‖u(T)‖)` are not used for fitting.
pub const ROUNDING_FLOOR: f64 = 1e-13;

/// Default number of rows used by the slope fit.
pub const DEFAULT_WINDOW: usize = 5;

/// `20 · 2^j`, `j = 0..=6`.
pub fn default_ladder() -> Vec<usize> {
    geometric_ladder(20, 7)
}

pub fn geometric_ladder(start: usize, rungs: usize) -> Vec<usize> {
    (0..rungs).map(|j| start << j).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ApproxTaylor,
    /// Exact Taylor through jet arithmetic.
    ExactTaylor,
    Rk4,
    /// The Butcher tableau equivalent to approximate Taylor of order 2 or 3.
    RkTableau,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ApproxTaylor, Method::ExactTaylor, Method::Rk4, Method::RkTableau];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ApproxTaylor => "approx-taylor",
            Method::ExactTaylor => "exact-taylor",
            Method::Rk4 => "rk4",
            Method::RkTableau => "rk-tableau",
        }
    }

    /// Label used in reports.
    pub fn display_label(self) -> &'static str {
        match self {
            Method::ExactTaylor => "exact (jet)",
            other => other.as_str(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected one of approx-taylor, exact-taylor, rk4, rk-tableau)"))
    }
}

/// Builds the stepper for `method` at order `order`.
pub fn make_stepper(method: Method, order: usize) -> Result<Box<dyn Stepper>, HarnessError> {
    if order == 0 {
        return Err(HarnessError::InvalidSpec("order must be at least 1".into()));
    }
    Ok(match method {
        Method::ApproxTaylor => Box::new(ApproxTaylor::new(order).map_err(IntegrateError::from)?),
        Method::ExactTaylor => Box::new(ExactTaylor::new(order)),
        Method::Rk4 => {
            if order != 4 {
                return Err(HarnessError::InvalidSpec(format!("rk4 has order 4, requested {order}")));
            }
            Box::new(RungeKutta::rk4())
        }
        Method::RkTableau => Box::new(RungeKutta::new(match order {
            2 => ButcherTableau::approx_taylor_3_stage(),
            3 => ButcherTableau::approx_taylor_5_stage(),
            4 => ButcherTableau::classical_rk4(),
            _ => {
                return Err(HarnessError::InvalidSpec(format!(
                    "no tableau stored for order {order} (available: 2, 3, 4)"
                )))
            }
        })),
    })
}

/// Rational coefficient matrices `(α, β)`.
pub type Coefficients = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Catalog problem by label. Rational systems use `coeffs` when given, else
/// the seeded default generator.
pub fn build_problem(label: &str, seed: u64, coeffs: Option<&Coefficients>) -> Result<ProblemSpec, HarnessError> {
    let rational_dim = if label == "rational" {
        Some(DEFAULT_RATIONAL_DIM)
    } else {
        label.strip_prefix("rational-").and_then(|m| m.parse::<usize>().ok())
    };
    match (rational_dim, coeffs) {
        (Some(m), Some((alpha, beta))) => Ok(rational_system(m, alpha.clone(), beta.clone())?),
        (Some(m), None) if m >= 1 => {
            let (alpha, beta) = default_rational_coefficients(m, seed);
            Ok(rational_system(m, alpha, beta)?)
        }
        (None, Some(_)) => Err(HarnessError::InvalidSpec(format!(
            "coefficients only apply to rational systems, not `{label}`"
        ))),
        _ => Ok(make_problem(label)?),
    }
}

/// What errors are measured against when no closed form exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// The studied method itself on a 10× refined grid.
    SameMethod,
    /// Classical RK4 on the same refined grid.
    Rk4,
    /// Classical RK4 with a fixed number of steps.
    Rk4Steps(usize),
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub problem: String,
    pub method: Method,
    pub order: usize,
    /// Step counts, strictly increasing.
    pub ladder: Vec<usize>,
    pub window: usize,
    pub seed: u64,
    /// Timed repetitions per rung; the median is reported.
    pub repeats: usize,
    pub reference: ReferenceKind,
    pub coefficients: Option<Coefficients>,
}

impl StudySpec {
    pub fn new(problem: impl Into<String>, method: Method, order: usize, ladder: Vec<usize>) -> Self {
        Self {
            problem: problem.into(),
            method,
            order,
            ladder,
            window: DEFAULT_WINDOW,
            seed: DEFAULT_RATIONAL_SEED,
            repeats: 5,
            reference: ReferenceKind::SameMethod,
            coefficients: None,
        }
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.repeats = repeats;
        self
    }

    pub fn with_reference(mut self, reference: ReferenceKind) -> Self {
        self.reference = reference;
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.ladder.len() < 4 {
            return Err(HarnessError::InvalidSpec(format!(
                "ladder needs at least 4 rungs, got {}",
                self.ladder.len()
            )));
        }
        if self.ladder[0] == 0 || !self.ladder.windows(2).all(|w| w[0] < w[1]) {
            return Err(HarnessError::InvalidSpec("ladder must be positive and strictly increasing".into()));
        }
        if self.window < 2 {
            return Err(HarnessError::InvalidSpec("fit window needs at least 2 rows".into()));
        }
        if self.repeats == 0 {
            return Err(HarnessError::InvalidSpec("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    /// Used by the slope fit.
    Fitted,
    /// Finite, above the floor, but outside the fit window.
    Unused,
    BelowFloor,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub n_steps: usize,
    pub h: f64,
    /// Max-norm endpoint error; NaN when the run diverged.
    pub error: f64,
    /// Total right-hand-side evaluations of the run.
    pub evals: u64,
    pub time_ns: u128,
    pub status: RowStatus,
}

impl Row {
    pub fn evals_per_step(&self) -> f64 {
        self.evals as f64 / self.n_steps as f64
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub problem: String,
    pub method: Method,
    pub order: usize,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub fit: Option<SlopeFit>,
    pub floor: f64,
    /// Steps of the reference run, when one was needed.
    pub reference_steps: Option<usize>,
}

impl ConvergenceReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn fitted_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.status == RowStatus::Fitted)
    }

    /// Rows excluded because they diverged or fell below the floor.
    pub fn excluded_rows(&self) -> impl Iterator<Item = (usize, &Row)> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r.status, RowStatus::BelowFloor | RowStatus::Diverged))
    }
}

fn median(mut xs: Vec<u128>) -> u128 {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

/// Integrates each rung and fits the convergence order.
///
/// A diverging rung is recorded and the study continues; a failing
/// reference run aborts the study.
pub fn run_study(spec: &StudySpec) -> Result<ConvergenceReport, HarnessError> {
    spec.validate()?;
    let problem = build_problem(&spec.problem, spec.seed, spec.coefficients.as_ref())?;
    let stepper = make_stepper(spec.method, spec.order)?;
    let sys = &problem.system;
    if !stepper.supports(sys.rhs.as_ref()) {
        return Err(HarnessError::Unsupported {
            method: spec.method.to_string(),
            problem: spec.problem.clone(),
            reason: "right-hand side has no jet evaluator".into(),
        });
    }

    let finest = *spec.ladder.last().unwrap();
    let (target, reference_steps) = match problem.exact {
        ExactKind::ClosedForm => (sys.exact_at(sys.t_end).expect("closed form present"), None),
        ExactKind::RefinedReference => {
            let reference = match spec.reference {
                ReferenceKind::SameMethod => refined_reference(&problem, stepper.as_ref(), finest)?,
                ReferenceKind::Rk4 => refined_reference(&problem, &RungeKutta::rk4(), finest)?,
                ReferenceKind::Rk4Steps(n) => {
                    let end = run(sys, &RungeKutta::rk4(), n, &mut EvalCounter::new(), |_, _| {})?;
                    RefinedReference { n_steps: n, endpoint: end }
                }
            };
            (reference.endpoint, Some(reference.n_steps))
        }
    };
    let floor = ROUNDING_FLOOR * max_norm(&target).max(1.0);

    let mut rows = Vec::with_capacity(spec.ladder.len());
    for &n in &spec.ladder {
        let h = sys.span() / n as f64;
        let mut times = Vec::with_capacity(spec.repeats);
        let mut outcome = None;
        for _ in 0..spec.repeats {
            let mut counter = EvalCounter::new();
            let start = Instant::now();
            let result = run(sys, stepper.as_ref(), n, &mut counter, |_, _| {});
            times.push(start.elapsed().as_nanos());
            if outcome.is_none() {
                outcome = Some((result, counter.total()));
            }
        }
        let (result, evals) = outcome.expect("at least one repetition");
        let (error, status) = match result {
            Ok(end) => {
                let e = max_norm_diff(&end, &target);
                let status = if e.is_finite() && e > floor {
                    RowStatus::Unused
                } else {
                    RowStatus::BelowFloor
                };
                (e, status)
            }
            Err(IntegrateError::Divergence { .. }) => (f64::NAN, RowStatus::Diverged),
            Err(other) => return Err(other.into()),
        };
        rows.push(Row {
            n_steps: n,
            h,
            error,
            evals,
            time_ns: median(times),
            status,
        });
    }

    // finest `window` rows above the floor
    let usable: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.status == RowStatus::Unused)
        .map(|(i, _)| i)
        .collect();
    let chosen = &usable[usable.len().saturating_sub(spec.window)..];
    for &i in chosen {
        rows[i].status = RowStatus::Fitted;
    }
    let samples: Vec<(f64, f64)> = chosen.iter().map(|&i| (rows[i].h, rows[i].error)).collect();
    let fit = fit_slope(&samples);

    Ok(ConvergenceReport {
        problem: problem.label.clone(),
        method: spec.method,
        order: spec.order,
        seed: spec.seed,
        rows,
        fit,
        floor,
        reference_steps,
    })
}

/// Approximate Taylor against another method on the same ladder.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub approx: ConvergenceReport,
    pub other: ConvergenceReport,
}

impl Comparison {
    /// Both fitted slopes within `tol` of their method orders.
    pub fn slopes_within(&self, tol: f64) -> bool {
        [&self.approx, &self.other]
            .iter()
            .all(|r| r.slope().is_some_and(|s| (s - r.order as f64).abs() <= tol))
    }

    /// Side-by-side table: `h, error_a, time_a, error_b, time_b`.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:>12} {:>14} {:>12} {:>14} {:>12}\n",
            "h",
            format!("err[{}]", self.approx.method),
            "time_ns",
            format!("err[{}]", self.other.method),
            "time_ns"
        );
        for (a, b) in self.approx.rows.iter().zip(&self.other.rows) {
            out.push_str(&format!(
                "{:>12.5e} {:>14.6e} {:>12} {:>14.6e} {:>12}\n",
                a.h, a.error, a.time_ns, b.error, b.time_ns
            ));
        }
        out
    }
}

/// Runs approximate Taylor of order `order` and `other` on identical ladders
/// against the same kind of reference.
pub fn compare_methods(
    problem: &str,
    order: usize,
    ladder: &[usize],
    other: Method,
    repeats: usize,
    seed: u64,
    reference: ReferenceKind,
) -> Result<Comparison, HarnessError> {
    let base = |method| {
        let mut s = StudySpec::new(problem, method, order, ladder.to_vec())
            .with_repeats(repeats)
            .with_reference(reference);
        s.seed = seed;
        s
    };
    Ok(Comparison {
        approx: run_study(&base(Method::ApproxTaylor))?,
        other: run_study(&base(other))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_taylor::predicted_eval_count;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("euler".parse::<Method>().is_err());
        assert_eq!(Method::ExactTaylor.display_label(), "exact (jet)");
    }

    #[test]
    fn invalid_ladders() {
        let bad = StudySpec::new("sin", Method::ApproxTaylor, 2, vec![10, 20, 40]);
        assert!(matches!(run_study(&bad), Err(HarnessError::InvalidSpec(_))));
        let bad = StudySpec::new("sin", Method::ApproxTaylor, 2, vec![10, 20, 20, 40]);
        assert!(matches!(run_study(&bad), Err(HarnessError::InvalidSpec(_))));
    }

    #[test]
    fn sin_second_order() {
        let spec = StudySpec::new("sin", Method::ApproxTaylor, 2, default_ladder()).with_repeats(1);
        let report = run_study(&spec).unwrap();
        assert_eq!(report.rows.len(), 7);
        let slope = report.slope().unwrap();
        assert!((slope - 2.0).abs() < 0.25, "slope {slope}");
        for row in &report.rows {
            assert_eq!(row.evals, row.n_steps as u64 * predicted_eval_count(2) as u64);
        }
        assert_eq!(report.fitted_rows().count(), DEFAULT_WINDOW);
    }

    #[test]
    fn unsupported_combinations() {
        assert!(make_stepper(Method::Rk4, 3).is_err());
        assert!(make_stepper(Method::RkTableau, 5).is_err());
        assert!(build_problem("sin", 1, Some(&(vec![vec![1.0]], vec![vec![1.0]]))).is_err());
    }

    #[test]
    fn rational_coefficients_from_seed() {
        let a = build_problem("rational-3", 5, None).unwrap();
        let b = build_problem("rational-3", 5, None).unwrap();
        let mut fa = vec![0.0; 3];
        let mut fb = vec![0.0; 3];
        a.system.rhs.eval(&[1.0, 2.0, 3.0], &mut fa);
        b.system.rhs.eval(&[1.0, 2.0, 3.0], &mut fb);
        assert_eq!(fa, fb);
    }
}
