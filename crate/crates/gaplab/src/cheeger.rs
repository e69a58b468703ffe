//! Cheeger-type constants for symmetric forms.
//!
//! Four isoperimetric constants k^(alpha) drive the inequalities of
//! interest: the Poincare form over proper subsets, a Nash family indexed
//! by nu > 1, and two log-Sobolev forms (a small-measure limit and a
//! delta-penalized limit). All use the reweighted kernel
//!
//! ```text
//!   J^(alpha)_xy = 1_{r(x,y) > 0} J_xy / r(x,y)^alpha ,
//! ```
//!
//! where r is a symmetric nonnegative pair weight normalized so that
//! J^(1)(x, E) <= pi_x. The module also evaluates the two classical
//! spectral bounds these constants refine: the Lawler-Sokal estimate
//! lambda_1 >= k^2/(2M) and the Diaconis-Saloff-Coste log-Sobolev bound
//! for unit-activity chains.
//!
//! Subsets are enumerated exhaustively by a Gray code with incremental
//! boundary updates (O(2^n n), n <= 24); larger state spaces can fall back
//! to the contiguous-interval relaxation, which is marked in the report.

use crate::forms::{
    self, random_function, spectral_gap_exact, variance_and_entropy, FormsError, LogSobolevOptions,
    ReversibleChain, SymmetricForm,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheegerError {
    #[error("cheeger: {0}")]
    InvalidInput(String),
    #[error("cheeger: {n} states exceed the exhaustive enumeration cap {max}; use the interval relaxation")]
    TooManyStates { n: usize, max: usize },
    #[error(
        "cheeger: rate weight violates the normalization J^(1)(x, E) <= pi(x) \
         at state {state} (ratio {ratio})"
    )]
    Inadmissible { state: usize, ratio: f64 },
    #[error("cheeger: normalization sum_j |q_ij| = 1 fails at rows {0:?}")]
    NotUnitActivity(Vec<usize>),
    #[error(transparent)]
    Forms(#[from] FormsError),
}

const MAX_EXHAUSTIVE: usize = 24;

/// Symmetric nonnegative pair weight r together with the exponent alpha
/// used to form J^(alpha).
#[derive(Debug, Clone)]
pub struct RateWeight {
    r: DMatrix<f64>,
    alpha: f64,
    label: String,
}

impl RateWeight {
    pub fn new(r: DMatrix<f64>, alpha: f64) -> Result<Self, CheegerError> {
        Self::with_label(r, alpha, "custom")
    }

    fn with_label(r: DMatrix<f64>, alpha: f64, label: &str) -> Result<Self, CheegerError> {
        let n = r.nrows();
        if n != r.ncols() {
            return Err(CheegerError::InvalidInput(format!(
                "rate weight must be square, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(CheegerError::InvalidInput(format!(
                "alpha must be a finite nonnegative real, got {alpha}"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = r[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(CheegerError::InvalidInput(format!(
                        "rate weight entry ({i},{j}) must be finite and nonnegative, got {v}"
                    )));
                }
                if (v - r[(j, i)]).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(CheegerError::InvalidInput(format!(
                        "rate weight is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(RateWeight {
            r,
            alpha,
            label: label.to_string(),
        })
    }

    /// The default weight r(x,y) = q(x) + q(y) built from the form's jump
    /// activities. It always satisfies the J^(1) normalization, since
    /// sum_y J_xy/(q(x)+q(y)) <= sum_y J_xy/q(x) = pi_x.
    pub fn default_for(form: &SymmetricForm, alpha: f64) -> Result<Self, CheegerError> {
        let n = form.n();
        let q: Vec<f64> = (0..n).map(|i| form.activity(i)).collect();
        let r = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { q[i] + q[j] });
        Self::with_label(r, alpha, "q(x)+q(y)")
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Checks the admissibility normalization J^(1)(x, E)/pi_x <= 1 (up to
    /// 1e-12); entries with r = 0 carry no J^(1) mass by convention.
    pub fn check_admissible(&self, form: &SymmetricForm) -> Result<(), CheegerError> {
        let n = form.n();
        if self.r.nrows() != n {
            return Err(CheegerError::InvalidInput(format!(
                "rate weight is {}x{} but the form has {n} states",
                self.r.nrows(),
                self.r.ncols()
            )));
        }
        let j = form.kernel();
        let pi = form.pi();
        for x in 0..n {
            let mut mass = 0.0;
            for y in 0..n {
                if self.r[(x, y)] > 0.0 {
                    mass += j[(x, y)] / self.r[(x, y)];
                }
            }
            let ratio = mass / pi[x];
            if ratio > 1.0 + 1e-12 {
                return Err(CheegerError::Inadmissible { state: x, ratio });
            }
        }
        Ok(())
    }
}

/// The reweighted form J^(alpha): entries J_xy / r(x,y)^alpha where
/// r(x,y) > 0 and zero where r vanishes. By convention alpha = 0 returns J
/// unchanged (r = 0 entries included).
pub fn j_alpha(form: &SymmetricForm, w: &RateWeight) -> Result<SymmetricForm, CheegerError> {
    w.check_admissible(form)?;
    if w.alpha == 0.0 {
        return Ok(form.clone());
    }
    let n = form.n();
    let j = form.kernel();
    let k = DMatrix::from_fn(n, n, |x, y| {
        if w.r[(x, y)] > 0.0 {
            j[(x, y)] / w.r[(x, y)].powf(w.alpha)
        } else {
            0.0
        }
    });
    let pi: Vec<f64> = form.pi().iter().copied().collect();
    Ok(SymmetricForm::new(pi, k)?)
}

/// Which isoperimetric functional to minimize over subsets.
#[derive(Debug, Clone)]
pub enum CheegerVariant {
    /// inf over proper A of J^(a)(A x Ac) / (pi(A) /\ pi(Ac)).
    Poincare,
    /// inf over proper A of J^(a)(A x Ac) / [pi(A) /\ pi(Ac)]^((nu-1)/nu).
    Nash { nu: f64 },
    /// Small-measure limit: inf over the minimal-pi(A) shell of
    /// J^(a)(A x Ac) / (pi(A) sqrt(log[e + 1/pi(A)])); the unrestricted
    /// infimum is reported alongside.
    LogSobWang,
    /// delta -> infinity limit of inf over pi(A) > 0 (the full space
    /// included) of (J^(a)(A x Ac) + delta pi(A)) / (pi(A) sqrt(1 - log
    /// pi(A))), evaluated on the given delta grid.
    LogSobChen { deltas: Vec<f64> },
}

impl CheegerVariant {
    /// Chen variant on the standard grid {1, 10, 100, 1000, 10000}.
    pub fn default_chen() -> Self {
        CheegerVariant::LogSobChen {
            deltas: vec![1.0, 10.0, 100.0, 1_000.0, 10_000.0],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CheegerVariant::Poincare => "poincare",
            CheegerVariant::Nash { .. } => "nash",
            CheegerVariant::LogSobWang => "logsob_wang",
            CheegerVariant::LogSobChen { .. } => "logsob_chen",
        }
    }

    fn validate(&self) -> Result<(), CheegerError> {
        match self {
            CheegerVariant::Poincare | CheegerVariant::LogSobWang => Ok(()),
            CheegerVariant::Nash { nu } => {
                if !(nu.is_finite() && *nu > 1.0) {
                    return Err(CheegerError::InvalidInput(format!(
                        "nash variant needs nu > 1, got {nu}"
                    )));
                }
                Ok(())
            }
            CheegerVariant::LogSobChen { deltas } => {
                if deltas.is_empty() {
                    return Err(CheegerError::InvalidInput(
                        "logsob_chen needs a nonempty delta grid".into(),
                    ));
                }
                let increasing = deltas.windows(2).all(|w| w[0] < w[1]);
                if !increasing || deltas[0] <= 0.0 || !deltas.iter().all(|d| d.is_finite()) {
                    return Err(CheegerError::InvalidInput(
                        "delta grid must be strictly increasing, positive, finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Result of a Cheeger-constant computation.
#[derive(Debug, Clone)]
pub struct CheegerReport {
    pub variant: String,
    pub alpha: f64,
    pub weight: String,
    pub value: f64,
    /// States of the minimizing subset (for the Chen variant, at the last
    /// delta).
    pub argmin: Vec<usize>,
    /// False for the Chen variant when the delta curve has not stabilized,
    /// which at finite n it cannot (every subset's value grows linearly in
    /// delta); true for the exactly-enumerated variants.
    pub converged: bool,
    /// True when the infimum ran over contiguous intervals only.
    pub restricted_to_intervals: bool,
    /// Variant-specific extras: the unrestricted infimum for Wang, the
    /// per-delta curve for Chen.
    pub extras: Vec<(String, f64)>,
}

/// Visits subsets with their boundary flow sum_{i in A, j not in A} K_ij
/// and measure pi(A). Exhaustive mode walks the Gray code, flipping one
/// state per step and refreshing the accumulated flow periodically to keep
/// float drift at bay.
fn for_each_subset_exhaustive<F: FnMut(&[usize], f64, f64)>(
    k: &DMatrix<f64>,
    pi: &DVector<f64>,
    mut visit: F,
) {
    let n = pi.len();
    let row: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)]).sum()).collect();
    let mut in_a = vec![false; n];
    let mut s = vec![0.0f64; n]; // s[x] = sum over i in A of K_xi
    let mut flow = 0.0f64;
    let mut mass = 0.0f64;
    let mut members: Vec<usize> = Vec::with_capacity(n);
    let total: u64 = 1u64 << n;
    for t in 1..total {
        let b = t.trailing_zeros() as usize;
        if in_a[b] {
            for x in 0..n {
                s[x] -= k[(x, b)];
            }
            flow -= row[b] - 2.0 * s[b];
            mass -= pi[b];
            in_a[b] = false;
        } else {
            flow += row[b] - 2.0 * s[b];
            for x in 0..n {
                s[x] += k[(x, b)];
            }
            mass += pi[b];
            in_a[b] = true;
        }
        if t % 65_536 == 0 {
            // Refresh the incremental sums so drift stays near roundoff.
            flow = 0.0;
            mass = 0.0;
            for x in 0..n {
                s[x] = (0..n).filter(|&i| in_a[i]).map(|i| k[(x, i)]).sum();
            }
            for x in 0..n {
                if in_a[x] {
                    mass += pi[x];
                    flow += row[x] - s[x];
                }
            }
        }
        let count = in_a.iter().filter(|&&m| m).count();
        if count == 0 || count == n {
            continue;
        }
        members.clear();
        members.extend((0..n).filter(|&x| in_a[x]));
        visit(&members, flow.max(0.0), mass);
    }
}

/// Interval relaxation: visits the contiguous subsets [i..=j] only.
fn for_each_subset_intervals<F: FnMut(&[usize], f64, f64)>(
    k: &DMatrix<f64>,
    pi: &DVector<f64>,
    mut visit: F,
) {
    let n = pi.len();
    let row: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)]).sum()).collect();
    let mut members: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let mut flow = 0.0f64;
        let mut mass = 0.0f64;
        let mut s = vec![0.0f64; n];
        for j in i..n {
            flow += row[j] - 2.0 * s[j];
            for x in 0..n {
                s[x] += k[(x, j)];
            }
            mass += pi[j];
            if i == 0 && j == n - 1 {
                continue;
            }
            members.clear();
            members.extend(i..=j);
            visit(&members, flow.max(0.0), mass);
        }
    }
}

fn count_states_guard(n: usize) -> Result<(), CheegerError> {
    if n > MAX_EXHAUSTIVE {
        return Err(CheegerError::TooManyStates {
            n,
            max: MAX_EXHAUSTIVE,
        });
    }
    Ok(())
}

/// Cheeger constant by exhaustive subset enumeration (n <= 24).
pub fn cheeger_constant(
    form: &SymmetricForm,
    variant: &CheegerVariant,
    w: &RateWeight,
) -> Result<CheegerReport, CheegerError> {
    count_states_guard(form.n())?;
    compute_constant(form, variant, w, false)
}

/// Cheeger constant with the infimum restricted to contiguous intervals
/// [i..=j] of the state line. Exact for many birth-death chains and the
/// only tractable mode past n = 24; the report flags the restriction.
pub fn cheeger_constant_intervals(
    form: &SymmetricForm,
    variant: &CheegerVariant,
    w: &RateWeight,
) -> Result<CheegerReport, CheegerError> {
    compute_constant(form, variant, w, true)
}

fn compute_constant(
    form: &SymmetricForm,
    variant: &CheegerVariant,
    w: &RateWeight,
    intervals: bool,
) -> Result<CheegerReport, CheegerError> {
    variant.validate()?;
    let weighted = j_alpha(form, w)?;
    let k = weighted.kernel();
    let pi = form.pi();
    let run = |f: &mut dyn FnMut(&[usize], f64, f64)| {
        if intervals {
            for_each_subset_intervals(k, pi, f);
        } else {
            for_each_subset_exhaustive(k, pi, f);
        }
    };

    let mut report = CheegerReport {
        variant: variant.label().to_string(),
        alpha: w.alpha,
        weight: w.label.clone(),
        value: f64::INFINITY,
        argmin: Vec::new(),
        converged: true,
        restricted_to_intervals: intervals,
        extras: Vec::new(),
    };

    match variant {
        CheegerVariant::Poincare => {
            run(&mut |members, flow, mass| {
                let v = flow / mass.min(1.0 - mass);
                if v < report.value {
                    report.value = v;
                    report.argmin = members.to_vec();
                }
            });
        }
        CheegerVariant::Nash { nu } => {
            let expo = (nu - 1.0) / nu;
            run(&mut |members, flow, mass| {
                let v = flow / mass.min(1.0 - mass).powf(expo);
                if v < report.value {
                    report.value = v;
                    report.argmin = members.to_vec();
                }
            });
        }
        CheegerVariant::LogSobWang => {
            // The r -> 0 limit stabilizes once r dips under the smallest
            // atom, so the limit is the infimum over minimal-measure
            // subsets; those are exactly the lightest singletons. Scored
            // directly from pi and the kernel rows (the enumerator's
            // incremental mass drifts more than the tie tolerance).
            let min_atom = pi.iter().copied().fold(f64::INFINITY, f64::min);
            for x in 0..form.n() {
                if pi[x] > min_atom * (1.0 + 1e-12) {
                    continue;
                }
                let flow: f64 = (0..form.n()).map(|j| k[(x, j)]).sum();
                let v = flow / (pi[x] * (std::f64::consts::E + 1.0 / pi[x]).ln().sqrt());
                if v < report.value {
                    report.value = v;
                    report.argmin = vec![x];
                }
            }
            let mut unrestricted = f64::INFINITY;
            run(&mut |_, flow, mass| {
                let v = flow / (mass * (std::f64::consts::E + 1.0 / mass).ln().sqrt());
                unrestricted = unrestricted.min(v);
            });
            report.extras.push(("unrestricted_inf".into(), unrestricted));
        }
        CheegerVariant::LogSobChen { deltas } => {
            let mut mins = vec![f64::INFINITY; deltas.len()];
            let mut argmin_last: Vec<usize> = Vec::new();
            {
                let last = deltas.len() - 1;
                run(&mut |members, flow, mass| {
                    let den = mass * (1.0 - mass.ln()).sqrt();
                    for (idx, delta) in deltas.iter().enumerate() {
                        let v = (flow + delta * mass) / den;
                        if v < mins[idx] {
                            mins[idx] = v;
                            if idx == last {
                                argmin_last = members.to_vec();
                            }
                        }
                    }
                });
            }
            // pi(A) > 0 admits the full space: flow 0, measure 1.
            for (idx, delta) in deltas.iter().enumerate() {
                if *delta < mins[idx] {
                    mins[idx] = *delta;
                    if idx == deltas.len() - 1 {
                        argmin_last = (0..form.n()).collect();
                    }
                }
            }
            report.value = *mins.last().unwrap();
            report.argmin = argmin_last;
            report.converged = if mins.len() >= 2 {
                let a = mins[mins.len() - 2];
                let b = mins[mins.len() - 1];
                (a - b).abs() < 1e-6 * b.abs().max(f64::MIN_POSITIVE)
            } else {
                false
            };
            for (delta, v) in deltas.iter().zip(&mins) {
                report.extras.push((format!("delta_{delta}"), *v));
            }
        }
    }
    Ok(report)
}

/// The Lawler-Sokal spectral gap estimate lambda_1 >= k^2 / (2M).
#[derive(Debug, Clone, Copy)]
pub struct LawlerSokalBound {
    /// Classical Cheeger constant inf J(A x Ac) / (pi(A) /\ pi(Ac)).
    pub k: f64,
    /// Maximal jump activity M = max_x q(x).
    pub m: f64,
    pub bound: f64,
}

/// Evaluate the Lawler-Sokal bound by exhaustive enumeration (n <= 24).
pub fn lawler_sokal_bound(chain: &ReversibleChain) -> Result<LawlerSokalBound, CheegerError> {
    count_states_guard(chain.n())?;
    let form = SymmetricForm::from_chain(chain);
    let mut k = f64::INFINITY;
    for_each_subset_exhaustive(form.kernel(), form.pi(), |_, flow, mass| {
        k = k.min(flow / mass.min(1.0 - mass));
    });
    let m = (0..chain.n())
        .map(|i| chain.activity(i))
        .fold(0.0f64, f64::max);
    Ok(LawlerSokalBound {
        k,
        m,
        bound: k * k / (2.0 * m),
    })
}

/// The Diaconis-Saloff-Coste lower bound for the log-Sobolev constant of a
/// unit-activity chain (sum_j |q_ij| = 1 for every row):
///
/// ```text
///   sigma >= 2 (1 - 2 pi_*) lambda_1 / log(1/pi_* - 1) ,   pi_* = min_i pi_i.
/// ```
///
/// At pi_* = 1/2 the quotient is 0/0; its continuous limit is lambda_1
/// (expand: 1 - 2p = 2eps and log(1/p - 1) = 4eps + O(eps^3) at
/// p = 1/2 - eps), and that limit is returned.
pub fn dsc_log_sobolev_bound(chain: &ReversibleChain) -> Result<f64, CheegerError> {
    let n = chain.n();
    let q = chain.rate_matrix();
    let mut bad = Vec::new();
    for i in 0..n {
        let total: f64 = (0..n).map(|j| q[(i, j)].abs()).sum();
        if (total - 1.0).abs() > 1e-9 {
            bad.push(i);
        }
    }
    if !bad.is_empty() {
        return Err(CheegerError::NotUnitActivity(bad));
    }
    let lambda1 = spectral_gap_exact(chain)?;
    let pi_star = chain.stationary().iter().copied().fold(f64::INFINITY, f64::min);
    if (pi_star - 0.5).abs() <= 1e-12 {
        return Ok(lambda1);
    }
    Ok(2.0 * (1.0 - 2.0 * pi_star) * lambda1 / (1.0 / pi_star - 1.0).ln())
}

/// Quantitative report behind the implication "k^(1/2) > 0 implies the
/// corresponding inequality": the four Cheeger constants at alpha = 1/2
/// plus the finite-space constants they control (the gap, the log-Sobolev
/// constant, and an empirical Nash constant).
#[derive(Debug, Clone)]
pub struct MainTheoremReport {
    pub k_poincare: f64,
    pub k_nash: f64,
    pub k_wang: f64,
    pub k_chen: f64,
    pub chen_converged: bool,
    pub all_positive: bool,
    pub lambda1: f64,
    pub sigma: f64,
    pub sigma_converged: bool,
    /// Smallest C with Var(f) <= C D(f)^(1/p) |f|_1^(2/q) over the sampled
    /// functions, for nu = 2 (q = nu/2 + 1 = 2 and p its conjugate).
    pub nash_constant: f64,
    pub inequalities_hold: bool,
}

const MAIN_THEOREM_NU: f64 = 2.0;
const NASH_SAMPLES: usize = 200;
const NASH_SEED: u64 = 90_210;

/// Empirical Nash constant: the smallest C with
/// Var(f) <= C D(f)^(1/p) |f|_1^(2/q) over a seeded sample of random
/// functions, where q = nu/2 + 1 and p is its conjugate. An upper bound
/// for the worst sampled function, hence a lower estimate of the true
/// constant; useful as a trend diagnostic.
pub fn empirical_nash_constant(
    form: &SymmetricForm,
    chain: &ReversibleChain,
    nu: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, CheegerError> {
    if !(nu.is_finite() && nu > 1.0) {
        return Err(CheegerError::InvalidInput(format!(
            "nash constant needs nu > 1, got {nu}"
        )));
    }
    let q_exp = nu / 2.0 + 1.0;
    let p_exp = q_exp / (q_exp - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_min = 0.0f64;
    for _ in 0..samples {
        let f = random_function(form.n(), &mut rng);
        let stats = variance_and_entropy(chain, &f)?;
        let d = form.dirichlet(&f)?;
        if d > 0.0 && stats.variance > 0.0 {
            let c = stats.variance / (d.powf(1.0 / p_exp) * stats.l1_norm.powf(2.0 / q_exp));
            c_min = c_min.max(c);
        }
    }
    Ok(c_min)
}

/// Evaluate all four k^(1/2) constants for the form under the weight's r
/// (alpha forced to 1/2) and check the inequalities they imply on the
/// finite space.
pub fn main_theorem_check(
    form: &SymmetricForm,
    w: &RateWeight,
) -> Result<MainTheoremReport, CheegerError> {
    count_states_guard(form.n())?;
    let w_half = RateWeight::with_label(w.r.clone(), 0.5, &w.label)?;
    let k_poincare = cheeger_constant(form, &CheegerVariant::Poincare, &w_half)?.value;
    let k_nash = cheeger_constant(
        form,
        &CheegerVariant::Nash {
            nu: MAIN_THEOREM_NU,
        },
        &w_half,
    )?
    .value;
    let k_wang = cheeger_constant(form, &CheegerVariant::LogSobWang, &w_half)?.value;
    let chen = cheeger_constant(form, &CheegerVariant::default_chen(), &w_half)?;

    let chain = form.to_chain()?;
    let lambda1 = spectral_gap_exact(&chain)?;
    let (sigma, sigma_converged) =
        match forms::log_sobolev_constant_with(&chain, &LogSobolevOptions::default()) {
            Ok(est) => (est.value, est.converged),
            Err(FormsError::NonConvergence { best }) => (best, false),
            Err(e) => return Err(e.into()),
        };

    let nash_constant =
        empirical_nash_constant(form, &chain, MAIN_THEOREM_NU, NASH_SAMPLES, NASH_SEED)?;

    let all_positive = k_poincare > 0.0 && k_nash > 0.0 && k_wang > 0.0 && chen.value > 0.0;
    let inequalities_hold =
        lambda1 > 0.0 && sigma > 0.0 && nash_constant.is_finite() && nash_constant > 0.0;
    Ok(MainTheoremReport {
        k_poincare,
        k_nash,
        k_wang,
        k_chen: chen.value,
        chen_converged: chen.converged,
        all_positive,
        lambda1,
        sigma,
        sigma_converged,
        nash_constant,
        inequalities_hold,
    })
}
