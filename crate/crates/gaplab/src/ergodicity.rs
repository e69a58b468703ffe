//! Semigroup decay diagnostics: L2 variance decay, total-variation decay,
//! algebraic decay, and truncation-family probes of the ergodicity
//! implication diagram.
//!
//! The semigroup P_t = exp(tQ) of a reversible chain is evaluated through
//! the pi-symmetrized eigendecomposition, which is exact for reversible
//! generators and stays stable for stiff rate ratios and large times. On
//! top of it sit three checks tied to classical equivalences: the Poincare
//! inequality pins Var(P_t f) under Var(f) e^(-2 lambda_1 t), algebraic
//! L2 convergence bounds Var(P_t f) by C V(f)/t^(q-1) for contraction
//! functionals V, and total-variation curves measure ordinary, exponential
//! and strong ergodicity. Truncation families exhibit how those properties
//! degenerate (or fail to) as finite sections grow.

use crate::cheeger::{
    self, cheeger_constant, cheeger_constant_intervals, CheegerError, CheegerVariant, RateWeight,
};
use crate::forms::{
    self, spectral_gap_exact, variance_and_entropy, FormsError, LogSobolevOptions, ReversibleChain,
};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ErgodicityError {
    #[error("ergodicity: {0}")]
    InvalidInput(String),
    #[error("ergodicity: time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("ergodicity: expression error: {0}")]
    Expr(String),
    #[error("ergodicity: family JSON: {0}")]
    FamilyJson(String),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Cheeger(#[from] CheegerError),
}

/// Which decay quantity a curve tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayQuantity {
    Variance,
    TvSup,
    TvAtState(usize),
}

/// A sampled decay curve: strictly increasing positive times with finite
/// nonnegative values.
#[derive(Debug, Clone)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub quantity: DecayQuantity,
}

impl DecayCurve {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        quantity: DecayQuantity,
    ) -> Result<Self, ErgodicityError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(ErgodicityError::InvalidInput(format!(
                "curve needs matching nonempty times/values, got {}/{}",
                times.len(),
                values.len()
            )));
        }
        if times[0] <= 0.0 || !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(ErgodicityError::InvalidInput(
                "curve times must be positive and strictly increasing".into(),
            ));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(ErgodicityError::InvalidInput(
                "curve values must be finite and nonnegative".into(),
            ));
        }
        Ok(DecayCurve {
            times,
            values,
            quantity,
        })
    }
}

fn validate_times(times: &[f64]) -> Result<(), ErgodicityError> {
    if times.is_empty() {
        return Err(ErgodicityError::InvalidInput("times grid is empty".into()));
    }
    if times[0] <= 0.0 || !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(ErgodicityError::InvalidInput(
            "times must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// The semigroup P_t = exp(tQ), held as the eigendecomposition of the
/// pi-symmetrized generator. The zero mode is pinned to eigenvalue 0
/// exactly so that stationarity survives arbitrarily large times.
pub struct Semigroup {
    pi: DVector<f64>,
    sqrt_pi: DVector<f64>,
    /// Eigenvalues of -S in ascending order; eigvals[0] = 0.
    eigvals: Vec<f64>,
    /// Orthonormal eigenvectors of S, one column per eigenvalue.
    eigvecs: DMatrix<f64>,
}

impl Semigroup {
    pub fn new(chain: &ReversibleChain) -> Result<Self, ErgodicityError> {
        let pi = chain.stationary().clone();
        let sqrt_pi = pi.map(f64::sqrt);
        let (mut eigvals, eigvecs) = forms::symmetrized_eigensystem(chain)?;
        // The computed zero mode carries rounding of order n*eps*scale;
        // exp(-t*lambda_0) would then drift off stochasticity for large t.
        eigvals[0] = 0.0;
        Ok(Semigroup {
            pi,
            sqrt_pi,
            eigvals,
            eigvecs,
        })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// The transition matrix p_t(x, y) = exp(tQ)[x, y]. Rows are checked
    /// to sum to 1 within 1e-12 and tiny negative entries (>= -1e-12) are
    /// clamped to zero.
    pub fn matrix_at(&self, t: f64) -> Result<DMatrix<f64>, ErgodicityError> {
        if !(t >= 0.0) {
            return Err(ErgodicityError::NegativeTime(t));
        }
        let n = self.n();
        // exp(tQ) = D^(-1/2) U exp(-t Lambda) U^T D^(1/2), D = diag(pi).
        let mut scaled = self.eigvecs.clone();
        for (k, lambda) in self.eigvals.iter().enumerate() {
            let decay = (-t * lambda).exp();
            for i in 0..n {
                scaled[(i, k)] *= decay;
            }
        }
        let mut m = &scaled * self.eigvecs.transpose();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= self.sqrt_pi[j] / self.sqrt_pi[i];
            }
        }
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| m[(i, j)]).sum();
            if (row_sum - 1.0).abs() > 1e-12 {
                return Err(ErgodicityError::InvalidInput(format!(
                    "row {i} of exp(tQ) sums to {row_sum} at t = {t}"
                )));
            }
            for j in 0..n {
                if m[(i, j)] < -1e-12 {
                    return Err(ErgodicityError::InvalidInput(format!(
                        "entry ({i},{j}) of exp(tQ) is {} at t = {t}",
                        m[(i, j)]
                    )));
                }
                if m[(i, j)] < 0.0 {
                    m[(i, j)] = 0.0;
                }
            }
        }
        Ok(m)
    }

    /// P_t f without forming the full matrix.
    pub fn apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>, ErgodicityError> {
        if !(t >= 0.0) {
            return Err(ErgodicityError::NegativeTime(t));
        }
        let n = self.n();
        if f.len() != n {
            return Err(ErgodicityError::InvalidInput(format!(
                "function has {} entries, chain has {n} states",
                f.len()
            )));
        }
        let g = DVector::from_fn(n, |i, _| f[i] * self.sqrt_pi[i]);
        let coeffs = self.eigvecs.transpose() * g;
        let mut out: DVector<f64> = DVector::zeros(n);
        for (k, lambda) in self.eigvals.iter().enumerate() {
            let c = coeffs[k] * (-t * lambda).exp();
            for i in 0..n {
                out[i] += c * self.eigvecs[(i, k)];
            }
        }
        Ok((0..n).map(|i| out[i] / self.sqrt_pi[i]).collect())
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.pi
    }
}

/// Convenience wrapper: exp(tQ) for a chain.
pub fn semigroup_matrix(chain: &ReversibleChain, t: f64) -> Result<DMatrix<f64>, ErgodicityError> {
    Semigroup::new(chain)?.matrix_at(t)
}

/// Variance decay against the Poincare envelope: the curve Var(P_t f) and
/// whether it stays under Var(f) e^(-2 lambda_1 t) (relative slack 1e-8).
pub fn variance_decay_check(
    chain: &ReversibleChain,
    f: &[f64],
    times: &[f64],
) -> Result<(DecayCurve, bool), ErgodicityError> {
    validate_times(times)?;
    let sg = Semigroup::new(chain)?;
    let lambda1 = spectral_gap_exact(chain)?;
    let var0 = variance_and_entropy(chain, f)?.variance;
    let mut values = Vec::with_capacity(times.len());
    let mut pass = true;
    for &t in times {
        let ptf = sg.apply(t, f)?;
        let v = variance_and_entropy(chain, &ptf)?.variance;
        if v > var0 * (-2.0 * lambda1 * t).exp() * (1.0 + 1e-8) {
            pass = false;
        }
        values.push(v);
    }
    Ok((
        DecayCurve::new(times.to_vec(), values, DecayQuantity::Variance)?,
        pass,
    ))
}

/// Total-variation decay report. The norm convention is the full variation
/// sum_y |p_t(x, y) - pi_y| (twice the max-over-sets value).
#[derive(Debug)]
pub struct TvReport {
    pub per_state: Vec<DecayCurve>,
    pub sup: DecayCurve,
    /// Least-squares slope of -log sup-curve over the tail half of the
    /// grid; None when the curve sits below 1e-14 everywhere (rate not
    /// identifiable).
    pub fitted_rate: Option<f64>,
    pub convention: &'static str,
}

/// Least-squares slope of -log(values) over the tail half of the grid.
fn fit_tail_rate(times: &[f64], values: &[f64]) -> Option<f64> {
    if values.iter().all(|v| *v < 1e-14) {
        return None;
    }
    let start = times.len() / 2;
    let pts: Vec<(f64, f64)> = times[start..]
        .iter()
        .zip(&values[start..])
        .filter(|(_, v)| **v > 1e-300)
        .map(|(t, v)| (*t, -v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.0 - tbar)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Total-variation distance of every row of exp(tQ) from pi, per state and
/// as a sup over states, with the exponential rate fitted on the tail.
pub fn tv_decay(chain: &ReversibleChain, times: &[f64]) -> Result<TvReport, ErgodicityError> {
    validate_times(times)?;
    let n = chain.n();
    let pi = chain.stationary();
    let sg = Semigroup::new(chain)?;
    let mut per_state_values: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); n];
    let mut sup_values = Vec::with_capacity(times.len());
    for &t in times {
        let m = sg.matrix_at(t)?;
        let mut sup = 0.0f64;
        for x in 0..n {
            let tv: f64 = (0..n).map(|y| (m[(x, y)] - pi[y]).abs()).sum();
            per_state_values[x].push(tv);
            sup = sup.max(tv);
        }
        sup_values.push(sup);
    }
    let fitted_rate = fit_tail_rate(times, &sup_values);
    let per_state = per_state_values
        .into_iter()
        .enumerate()
        .map(|(x, values)| DecayCurve::new(times.to_vec(), values, DecayQuantity::TvAtState(x)))
        .collect::<Result<Vec<_>, _>>()?;
    let sup = DecayCurve::new(times.to_vec(), sup_values, DecayQuantity::TvSup)?;
    Ok(TvReport {
        per_state,
        sup,
        fitted_rate,
        convention: "full variation sum_y |p_t(x,y) - pi_y|",
    })
}

/// Degree-two homogeneous functionals for the algebraic decay premise
/// V(P_t f) <= V(f).
#[derive(Debug, Clone, Copy)]
pub enum VFunctional {
    /// pi-variance of f.
    Var,
    /// Squared L^r(pi) norm, r in [1, 2].
    NormRSquared { r: f64 },
    /// Squared Lipschitz constant with respect to the graph metric of the
    /// chain's jump structure (unit edge lengths, BFS distances).
    LipSquared,
}

impl VFunctional {
    pub fn label(&self) -> String {
        match self {
            VFunctional::Var => "variance".into(),
            VFunctional::NormRSquared { r } => format!("norm_{r}_squared"),
            VFunctional::LipSquared => "lipschitz_squared".into(),
        }
    }

    fn validate(&self) -> Result<(), ErgodicityError> {
        if let VFunctional::NormRSquared { r } = self {
            if !(r.is_finite() && (1.0..=2.0).contains(r)) {
                return Err(ErgodicityError::InvalidInput(format!(
                    "norm exponent r must lie in [1, 2], got {r}"
                )));
            }
        }
        Ok(())
    }
}

/// All-pairs BFS distances on the support graph of the rate matrix.
fn graph_distances(chain: &ReversibleChain) -> Vec<Vec<usize>> {
    let n = chain.n();
    let q = chain.rate_matrix();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && q[(i, j)] > 0.0).collect())
        .collect();
    let mut dist = vec![vec![usize::MAX; n]; n];
    for s in 0..n {
        let mut queue = std::collections::VecDeque::new();
        dist[s][s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[s][v] == usize::MAX {
                    dist[s][v] = dist[s][u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

fn evaluate_v(
    v: VFunctional,
    chain: &ReversibleChain,
    dist: &[Vec<usize>],
    f: &[f64],
) -> Result<f64, ErgodicityError> {
    match v {
        VFunctional::Var => Ok(variance_and_entropy(chain, f)?.variance),
        VFunctional::NormRSquared { r } => {
            let pi = chain.stationary();
            let sum: f64 = (0..chain.n()).map(|i| pi[i] * f[i].abs().powf(r)).sum();
            Ok(sum.powf(2.0 / r))
        }
        VFunctional::LipSquared => {
            let n = chain.n();
            let mut lip = 0.0f64;
            for x in 0..n {
                for y in 0..n {
                    if x != y && dist[x][y] != usize::MAX {
                        lip = lip.max((f[x] - f[y]).abs() / dist[x][y] as f64);
                    }
                }
            }
            Ok(lip * lip)
        }
    }
}

/// Result of the algebraic decay scan.
#[derive(Debug, Clone)]
pub struct AlgebraicDecayReport {
    /// Smallest C with Var(P_t f) <= C V(f)/t^(q-1) across the sampled
    /// functions and times; infinite when some f has V(f) = 0 but positive
    /// variance under the flow.
    pub c: f64,
    pub q: f64,
    pub functional: String,
    /// Whether the contraction premise V(P_t f) <= V(f) held on the whole
    /// f-set (up to 1e-10 relative).
    pub premise_ok: bool,
    /// Indices of functions that violated the premise.
    pub premise_violations: Vec<usize>,
}

/// Scan for the minimal constant in Var(P_t f) <= C V(f)/t^(q-1). Checks
/// the theorem's contraction premise on the sampled functions first and
/// reports its outcome alongside the constant.
pub fn algebraic_decay_check(
    chain: &ReversibleChain,
    v: VFunctional,
    q: f64,
    f_set: &[Vec<f64>],
    times: &[f64],
) -> Result<AlgebraicDecayReport, ErgodicityError> {
    v.validate()?;
    validate_times(times)?;
    if !(q.is_finite() && q > 1.0) {
        return Err(ErgodicityError::InvalidInput(format!(
            "algebraic decay needs q > 1, got {q}"
        )));
    }
    if f_set.is_empty() {
        return Err(ErgodicityError::InvalidInput("empty function set".into()));
    }
    let sg = Semigroup::new(chain)?;
    let dist = graph_distances(chain);
    let mut c = 0.0f64;
    let mut premise_violations = Vec::new();
    for (idx, f) in f_set.iter().enumerate() {
        let vf = evaluate_v(v, chain, &dist, f)?;
        let mut violated = false;
        for &t in times {
            let ptf = sg.apply(t, f)?;
            let vpt = evaluate_v(v, chain, &dist, &ptf)?;
            if vpt > vf * (1.0 + 1e-10) + 1e-14 {
                violated = true;
            }
            let var_t = variance_and_entropy(chain, &ptf)?.variance;
            if vf > 0.0 {
                c = c.max(t.powf(q - 1.0) * var_t / vf);
            } else if var_t > 1e-14 {
                c = f64::INFINITY;
            }
        }
        if violated {
            premise_violations.push(idx);
        }
    }
    Ok(AlgebraicDecayReport {
        c,
        q,
        functional: v.label(),
        premise_ok: premise_violations.is_empty(),
        premise_violations,
    })
}

/// Minimal arithmetic expressions in one integer variable i: integers, i,
/// + - *, ^ with nonnegative integral exponents, and parentheses.
#[derive(Debug, Clone)]
enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    fn eval(&self, i: f64) -> Result<f64, ErgodicityError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var => i,
            Expr::Add(a, b) => a.eval(i)? + b.eval(i)?,
            Expr::Sub(a, b) => a.eval(i)? - b.eval(i)?,
            Expr::Mul(a, b) => a.eval(i)? * b.eval(i)?,
            Expr::Neg(a) => -a.eval(i)?,
            Expr::Pow(a, b) => {
                let base = a.eval(i)?;
                let expo = b.eval(i)?;
                if expo < 0.0 || (expo - expo.round()).abs() > 1e-9 || expo > i32::MAX as f64 {
                    return Err(ErgodicityError::Expr(format!(
                        "exponent must be a nonnegative integer, got {expo}"
                    )));
                }
                base.powi(expo.round() as i32)
            }
        })
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            chars: text.chars().peekable(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.peek().copied()
    }

    fn expr(&mut self) -> Result<Expr, ErgodicityError> {
        let mut node = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                '+' => {
                    self.chars.next();
                    node = Expr::Add(Box::new(node), Box::new(self.term()?));
                }
                '-' => {
                    self.chars.next();
                    node = Expr::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Expr, ErgodicityError> {
        let mut node = self.power()?;
        while self.peek() == Some('*') {
            self.chars.next();
            node = Expr::Mul(Box::new(node), Box::new(self.power()?));
        }
        Ok(node)
    }

    fn power(&mut self) -> Result<Expr, ErgodicityError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.chars.next();
            let expo = self.power()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(expo)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ErgodicityError> {
        match self.peek() {
            Some('(') => {
                self.chars.next();
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(ErgodicityError::Expr("missing closing parenthesis".into()));
                }
                self.chars.next();
                Ok(inner)
            }
            Some('-') => {
                self.chars.next();
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            Some('i') => {
                self.chars.next();
                Ok(Expr::Var)
            }
            Some(c) if c.is_ascii_digit() => {
                let mut text = String::new();
                while matches!(self.chars.peek(), Some(d) if d.is_ascii_digit()) {
                    text.push(self.chars.next().unwrap());
                }
                Ok(Expr::Const(text.parse::<i64>().map_err(|e| {
                    ErgodicityError::Expr(format!("bad integer {text}: {e}"))
                })? as f64))
            }
            Some(c) => Err(ErgodicityError::Expr(format!("unexpected character '{c}'"))),
            None => Err(ErgodicityError::Expr("unexpected end of expression".into())),
        }
    }

    fn finish(mut self, node: Expr) -> Result<Expr, ErgodicityError> {
        if let Some(c) = self.peek() {
            return Err(ErgodicityError::Expr(format!(
                "trailing input starting at '{c}'"
            )));
        }
        Ok(node)
    }
}

fn parse_expr(text: &str) -> Result<Expr, ErgodicityError> {
    let mut parser = Parser::new(text);
    let node = parser.expr()?;
    parser.finish(node)
}

/// Birth-death truncation family: rate expressions in the state index i
/// plus the list of sizes to instantiate. Size n yields states {0..n-1}
/// with birth rate b(i) at i = 0..n-2 and death rate a(i) at i = 1..n-1.
pub struct TruncationFamily {
    birth: Expr,
    death: Expr,
    pub sizes: Vec<usize>,
    pub birth_text: String,
    pub death_text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyJson {
    b: String,
    a: String,
    sizes: Vec<usize>,
}

impl TruncationFamily {
    pub fn from_exprs(b: &str, a: &str, sizes: &[usize]) -> Result<Self, ErgodicityError> {
        if sizes.is_empty() {
            return Err(ErgodicityError::InvalidInput(
                "family needs at least one size".into(),
            ));
        }
        if !sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(ErgodicityError::InvalidInput(
                "family sizes must be strictly increasing".into(),
            ));
        }
        if sizes[0] < 2 {
            return Err(ErgodicityError::InvalidInput(
                "family sizes must be at least 2".into(),
            ));
        }
        Ok(TruncationFamily {
            birth: parse_expr(b)?,
            death: parse_expr(a)?,
            sizes: sizes.to_vec(),
            birth_text: b.to_string(),
            death_text: a.to_string(),
        })
    }

    /// Parse {"b": "expr", "a": "expr", "sizes": [...]} into a family.
    pub fn from_json(text: &str) -> Result<Self, ErgodicityError> {
        let parsed: FamilyJson =
            serde_json::from_str(text).map_err(|e| ErgodicityError::FamilyJson(e.to_string()))?;
        Self::from_exprs(&parsed.b, &parsed.a, &parsed.sizes)
    }

    /// Instantiate the finite section with n states.
    pub fn chain_at(&self, n: usize) -> Result<ReversibleChain, ErgodicityError> {
        if n < 2 {
            return Err(ErgodicityError::InvalidInput(format!(
                "section needs at least 2 states, got {n}"
            )));
        }
        let mut birth = Vec::with_capacity(n - 1);
        let mut death = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            birth.push(self.birth.eval(i as f64)?);
            death.push(self.death.eval((i + 1) as f64)?);
        }
        Ok(ReversibleChain::from_birth_death(&birth, &death)?)
    }
}

/// Trend of a per-size quantity across a truncation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    DecayingToZero,
    BoundedBelow,
}

/// Classifier declared in report metadata: decaying-to-zero when the last
/// value is below a quarter of the first and the sequence is nonincreasing
/// within 1e-9; bounded-below otherwise.
pub fn classify_trend(values: &[f64]) -> Trend {
    if values.len() < 2 {
        return Trend::BoundedBelow;
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    if monotone && values[values.len() - 1] < 0.25 * values[0] {
        Trend::DecayingToZero
    } else {
        Trend::BoundedBelow
    }
}

/// Per-size diagnostics of a truncation family.
#[derive(Debug, Clone)]
pub struct SizeDiagnostics {
    pub n: usize,
    pub lambda1: f64,
    pub sigma: f64,
    pub sigma_converged: bool,
    pub nash_c: f64,
    pub tv_rate: Option<f64>,
    pub k_poincare: f64,
    pub k_nash: f64,
    pub k_wang: f64,
    pub k_chen: f64,
    /// True when the Cheeger constants used the interval relaxation
    /// (sections larger than the exhaustive enumeration budget).
    pub cheeger_restricted: bool,
}

/// Trend report for a truncation family: one diagnostics row per size that
/// instantiated, plus monotone trend classifications.
#[derive(Debug)]
pub struct DiagramReport {
    pub rows: Vec<SizeDiagnostics>,
    /// Sizes whose generator failed, with the error text (partial report).
    pub failures: Vec<(usize, String)>,
    pub lambda1_trend: Trend,
    pub sigma_trend: Trend,
    pub nash_c_trend: Trend,
    pub tv_rate_trend: Trend,
    pub trend_rule: &'static str,
}

const PROBE_MAX_SIZE: usize = 64;
const PROBE_EXHAUSTIVE_MAX: usize = 20;

/// Evaluate the ergodicity diagram quantities along a truncation family:
/// spectral gap, log-Sobolev constant (light optimizer budget), empirical
/// Nash constant, sup-TV decay rate, and the four Cheeger constants at
/// alpha = 1/2, together with their size trends. Sections beyond the
/// exhaustive Cheeger budget fall back to the interval relaxation, which
/// is exact for birth-death structures.
pub fn diagram_probe(family: &TruncationFamily) -> Result<DiagramReport, ErgodicityError> {
    if let Some(&big) = family.sizes.iter().find(|&&n| n > PROBE_MAX_SIZE) {
        return Err(ErgodicityError::InvalidInput(format!(
            "size {big} exceeds the probe eigensolve budget {PROBE_MAX_SIZE}"
        )));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in &family.sizes {
        let chain = match family.chain_at(n) {
            Ok(c) => c,
            Err(e) => {
                failures.push((n, e.to_string()));
                continue;
            }
        };
        match probe_one(&chain, n) {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((n, e.to_string())),
        }
    }
    let series = |get: &dyn Fn(&SizeDiagnostics) -> Option<f64>| -> Vec<f64> {
        rows.iter().filter_map(get).collect()
    };
    Ok(DiagramReport {
        lambda1_trend: classify_trend(&series(&|r| Some(r.lambda1))),
        sigma_trend: classify_trend(&series(&|r| Some(r.sigma))),
        nash_c_trend: classify_trend(&series(&|r| Some(r.nash_c))),
        tv_rate_trend: classify_trend(&series(&|r| r.tv_rate)),
        rows,
        failures,
        trend_rule: "decaying-to-zero iff last < first/4 and nonincreasing within 1e-9",
    })
}

fn probe_one(chain: &ReversibleChain, n: usize) -> Result<SizeDiagnostics, ErgodicityError> {
    let lambda1 = spectral_gap_exact(chain)?;
    let opts = LogSobolevOptions {
        starts: 6,
        max_iterations: 400,
        gradient_tolerance: 1e-9,
        seed: 7,
    };
    let (sigma, sigma_converged) = match forms::log_sobolev_constant_with(chain, &opts) {
        Ok(est) => (est.value, est.converged),
        Err(FormsError::NonConvergence { best }) => (best, false),
        Err(e) => return Err(e.into()),
    };
    let form = forms::SymmetricForm::from_chain(chain);
    let nash_c = cheeger::empirical_nash_constant(&form, chain, 2.0, 100, 90_210 + n as u64)?;

    let times: Vec<f64> = (1..=16).map(|k| k as f64 * 0.25 / lambda1).collect();
    let tv = tv_decay(chain, &times)?;

    let w = RateWeight::default_for(&form, 0.5)?;
    let restricted = n > PROBE_EXHAUSTIVE_MAX;
    let constant = |variant: &CheegerVariant| -> Result<f64, CheegerError> {
        let rep = if restricted {
            cheeger_constant_intervals(&form, variant, &w)?
        } else {
            cheeger_constant(&form, variant, &w)?
        };
        Ok(rep.value)
    };
    Ok(SizeDiagnostics {
        n,
        lambda1,
        sigma,
        sigma_converged,
        nash_c,
        tv_rate: tv.fitted_rate,
        k_poincare: constant(&CheegerVariant::Poincare)?,
        k_nash: constant(&CheegerVariant::Nash { nu: 2.0 })?,
        k_wang: constant(&CheegerVariant::LogSobWang)?,
        k_chen: constant(&CheegerVariant::default_chen())?,
        cheeger_restricted: restricted,
    })
}
