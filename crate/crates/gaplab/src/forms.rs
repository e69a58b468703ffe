//! Finite reversible Markov chains and their quadratic forms.
//!
//! A [`ReversibleChain`] is a validated conservative rate matrix together
//! with its stationary distribution: off-diagonal entries nonnegative, rows
//! summing to zero, irreducible, and in detailed balance (pi_i q_ij =
//! pi_j q_ji to 1e-12 relative). The symmetric measure J_ij = pi_i q_ij
//! drives the Dirichlet form
//!
//! ```text
//!   D(f) = 1/2 sum_ij J_ij (f_j - f_i)^2 ,
//! ```
//!
//! the exact spectral gap comes from the symmetrized generator
//! sqrt(pi_i/pi_j) q_ij, and the log-Sobolev constant
//!
//! ```text
//!   sigma = inf { D(f) / sum_i pi_i f_i^2 log(|f_i|/||f||) : ||f|| = 1 }
//! ```
//!
//! is estimated by multi-start projected gradient descent on the unit sphere
//! of L^2(pi). Linearizing f = 1 + eps g shows sigma <= lambda_1, so the
//! optimizer seeds a few starts near the gap eigenfunction to pin that
//! ceiling down.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormsError {
    #[error("forms: {0}")]
    InvalidInput(String),
    #[error("forms: negative off-diagonal rate q[{i}][{j}] = {value}")]
    NegativeRate { i: usize, j: usize, value: f64 },
    #[error("forms: row {i} of the rate matrix sums to {sum:e}, not zero")]
    RowSum { i: usize, sum: f64 },
    #[error("forms: rate matrix is not irreducible")]
    NotIrreducible,
    #[error(
        "forms: detailed balance fails between states {i} and {j}: \
         pi_i q_ij = {lhs:e} vs pi_j q_ji = {rhs:e}"
    )]
    NotReversible { i: usize, j: usize, lhs: f64, rhs: f64 },
    #[error("forms: stationary solve failed: {0}")]
    StationarySolve(String),
    #[error("forms: function dimension {got} does not match the chain size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("forms: the zero function has no entropy or log-Sobolev quotient")]
    ZeroFunction,
    #[error("forms: chain input JSON: {0}")]
    ChainJson(String),
    #[error(
        "forms: log-Sobolev optimizer failed to converge from any start \
         (best value seen {best:.12e})"
    )]
    NonConvergence { best: f64 },
}

const MAX_STATES: usize = 200;

/// A validated conservative, irreducible, reversible rate matrix with its
/// stationary distribution.
#[derive(Debug, Clone)]
pub struct ReversibleChain {
    q: DMatrix<f64>,
    pi: DVector<f64>,
}

impl ReversibleChain {
    /// Validate a dense rate matrix and solve for the stationary
    /// distribution. Rejects non-square input, negative off-diagonal rates,
    /// rows that do not sum to zero, reducible support, and rate matrices
    /// whose stationary distribution fails detailed balance.
    pub fn from_rate_matrix(mut q: DMatrix<f64>) -> Result<Self, FormsError> {
        let n = q.nrows();
        if n != q.ncols() {
            return Err(FormsError::InvalidInput(format!(
                "rate matrix must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if n < 2 {
            return Err(FormsError::InvalidInput(
                "chain needs at least 2 states".into(),
            ));
        }
        if n > MAX_STATES {
            return Err(FormsError::InvalidInput(format!(
                "chain has {n} states; this laboratory targets n <= {MAX_STATES}"
            )));
        }
        let mut scale: f64 = 1.0;
        for i in 0..n {
            for j in 0..n {
                let v = q[(i, j)];
                if !v.is_finite() {
                    return Err(FormsError::InvalidInput(format!(
                        "rate q[{i}][{j}] is not finite"
                    )));
                }
                if i != j {
                    if v < 0.0 {
                        return Err(FormsError::NegativeRate { i, j, value: v });
                    }
                    scale = scale.max(v);
                }
            }
        }
        for i in 0..n {
            let sum: f64 = (0..n).map(|j| q[(i, j)]).sum();
            if sum.abs() > 1e-12 * scale.max(1.0) * n as f64 {
                return Err(FormsError::RowSum { i, sum });
            }
            // Canonicalize so downstream row sums are exactly zero.
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -off;
        }
        if !strongly_connected(&q) {
            return Err(FormsError::NotIrreducible);
        }
        let pi = stationary_distribution(&q)?;
        for i in 0..n {
            for j in (i + 1)..n {
                let lhs = pi[i] * q[(i, j)];
                let rhs = pi[j] * q[(j, i)];
                if (lhs - rhs).abs() > 1e-12 * (1.0 + lhs.abs() + rhs.abs()) {
                    return Err(FormsError::NotReversible { i, j, lhs, rhs });
                }
            }
        }
        Ok(ReversibleChain { q, pi })
    }

    /// Birth-death chain on {0, .., n-1}: `birth[i]` is the rate i -> i+1
    /// (length n-1) and `death[i]` the rate i+1 -> i (length n-1, indexed by
    /// the lower state). Always reversible when the rates are positive.
    pub fn from_birth_death(birth: &[f64], death: &[f64]) -> Result<Self, FormsError> {
        if birth.len() != death.len() {
            return Err(FormsError::InvalidInput(format!(
                "birth ({}) and death ({}) rate lists must have equal length",
                birth.len(),
                death.len()
            )));
        }
        if birth.is_empty() {
            return Err(FormsError::InvalidInput(
                "chain needs at least 2 states".into(),
            ));
        }
        let n = birth.len() + 1;
        for (name, rates) in [("birth", birth), ("death", death)] {
            for (i, &r) in rates.iter().enumerate() {
                if !(r.is_finite() && r > 0.0) {
                    return Err(FormsError::InvalidInput(format!(
                        "{name} rate at index {i} must be positive and finite, got {r}"
                    )));
                }
            }
        }
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            q[(i, i + 1)] = birth[i];
            q[(i + 1, i)] = death[i];
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -off;
        }
        Self::from_rate_matrix(q)
    }

    /// Parse the chain input schema: either `{"Q": [[..], ..]}` with a full
    /// rate matrix or the shorthand `{"birth": [..], "death": [..]}`.
    pub fn from_json(text: &str) -> Result<Self, FormsError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct ChainJson {
            #[serde(rename = "Q")]
            q: Option<Vec<Vec<f64>>>,
            birth: Option<Vec<f64>>,
            death: Option<Vec<f64>>,
        }
        let parsed: ChainJson =
            serde_json::from_str(text).map_err(|e| FormsError::ChainJson(e.to_string()))?;
        match (parsed.q, parsed.birth, parsed.death) {
            (Some(rows), None, None) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(FormsError::ChainJson(
                        "\"Q\" must be a square matrix".into(),
                    ));
                }
                let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
                Self::from_rate_matrix(q)
            }
            (None, Some(b), Some(a)) => Self::from_birth_death(&b, &a),
            _ => Err(FormsError::ChainJson(
                "expected either {\"Q\": [[..]]} or {\"birth\": [..], \"death\": [..]}".into(),
            )),
        }
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn rate_matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.pi
    }

    /// Total jump rate out of state i, q(i) = -q_ii.
    pub fn activity(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    fn check_len(&self, f: &[f64]) -> Result<(), FormsError> {
        if f.len() != self.n() {
            return Err(FormsError::DimensionMismatch {
                expected: self.n(),
                got: f.len(),
            });
        }
        Ok(())
    }
}

fn strongly_connected(q: &DMatrix<f64>) -> bool {
    let n = q.nrows();
    let reach = |transpose: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let v = if transpose { q[(j, i)] } else { q[(i, j)] };
                if i != j && v > 0.0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count
    };
    reach(false) == n && reach(true) == n
}

fn stationary_distribution(q: &DMatrix<f64>) -> Result<DVector<f64>, FormsError> {
    let n = q.nrows();
    // Solve pi Q = 0 with the last balance equation replaced by sum(pi) = 1.
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .full_piv_lu()
        .solve(&b)
        .ok_or_else(|| FormsError::StationarySolve("singular balance system".into()))?;
    for i in 0..n {
        if !(pi[i].is_finite() && pi[i] > 0.0) {
            return Err(FormsError::StationarySolve(format!(
                "component {i} of the stationary distribution is {} (must be positive)",
                pi[i]
            )));
        }
    }
    let total: f64 = pi.iter().sum();
    Ok(pi / total)
}

/// A symmetric measure J on ordered state pairs together with the underlying
/// probability measure pi; the carrier of the Dirichlet form.
#[derive(Debug, Clone)]
pub struct SymmetricForm {
    pi: DVector<f64>,
    j: DMatrix<f64>,
}

impl SymmetricForm {
    /// J_ij = pi_i q_ij off the diagonal. Detailed balance makes this
    /// symmetric; the stored matrix is symmetrized exactly (averaging the
    /// two roundoff-separated copies) so downstream enumeration can rely on
    /// J_ij == J_ji bitwise.
    pub fn from_chain(chain: &ReversibleChain) -> Self {
        let n = chain.n();
        let mut j = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    j[(a, b)] = chain.pi[a] * chain.q[(a, b)];
                }
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let v = 0.5 * (j[(a, b)] + j[(b, a)]);
                j[(a, b)] = v;
                j[(b, a)] = v;
            }
        }
        SymmetricForm {
            pi: chain.pi.clone(),
            j,
        }
    }

    /// Build directly from a measure and a symmetric kernel. `j` must be
    /// square, nonnegative, zero on the diagonal, and symmetric to 1e-12
    /// relative; `pi` must be strictly positive (it is normalized here).
    pub fn new(pi: Vec<f64>, j: DMatrix<f64>) -> Result<Self, FormsError> {
        let n = pi.len();
        if j.nrows() != n || j.ncols() != n {
            return Err(FormsError::InvalidInput(format!(
                "kernel is {}x{} but the measure has {n} atoms",
                j.nrows(),
                j.ncols()
            )));
        }
        if n < 2 || n > MAX_STATES {
            return Err(FormsError::InvalidInput(format!(
                "form needs between 2 and {MAX_STATES} states, got {n}"
            )));
        }
        if pi.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
            return Err(FormsError::InvalidInput(
                "measure must be strictly positive and finite".into(),
            ));
        }
        let mut j = j;
        for a in 0..n {
            if j[(a, a)] != 0.0 {
                return Err(FormsError::InvalidInput(format!(
                    "kernel diagonal must vanish, got j[{a}][{a}] = {}",
                    j[(a, a)]
                )));
            }
            for b in (a + 1)..n {
                let (x, y) = (j[(a, b)], j[(b, a)]);
                if !(x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0) {
                    return Err(FormsError::InvalidInput(format!(
                        "kernel entries for pair ({a},{b}) must be finite and nonnegative"
                    )));
                }
                if (x - y).abs() > 1e-12 * (1.0 + x.abs() + y.abs()) {
                    return Err(FormsError::InvalidInput(format!(
                        "kernel is not symmetric at ({a},{b}): {x:e} vs {y:e}"
                    )));
                }
                let v = 0.5 * (x + y);
                j[(a, b)] = v;
                j[(b, a)] = v;
            }
        }
        let total: f64 = pi.iter().sum();
        let pi = DVector::from_iterator(n, pi.into_iter().map(|p| p / total));
        Ok(SymmetricForm { pi, j })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// Jump activity of the form at state i: J(i, E) / pi_i.
    pub fn activity(&self, i: usize) -> f64 {
        let row: f64 = (0..self.n()).map(|j| self.j[(i, j)]).sum();
        row / self.pi[i]
    }

    /// The chain with q_ij = J_ij / pi_i, which has this form as its
    /// symmetric measure.
    pub fn to_chain(&self) -> Result<ReversibleChain, FormsError> {
        let n = self.n();
        let mut q = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    q[(a, b)] = self.j[(a, b)] / self.pi[a];
                }
            }
            let off: f64 = (0..n).filter(|&b| b != a).map(|b| q[(a, b)]).sum();
            q[(a, a)] = -off;
        }
        ReversibleChain::from_rate_matrix(q)
    }

    /// D(f) = 1/2 sum_ij J_ij (f_j - f_i)^2.
    pub fn dirichlet(&self, f: &[f64]) -> Result<f64, FormsError> {
        let n = self.n();
        if f.len() != n {
            return Err(FormsError::DimensionMismatch {
                expected: n,
                got: f.len(),
            });
        }
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                let d = f[b] - f[a];
                acc += self.j[(a, b)] * d * d;
            }
        }
        Ok(0.5 * acc)
    }
}

/// Dirichlet form of a chain's symmetric measure; convenience wrapper.
pub fn dirichlet_form(chain: &ReversibleChain, f: &[f64]) -> Result<f64, FormsError> {
    SymmetricForm::from_chain(chain).dirichlet(f)
}

/// Summary statistics of a function in L^2(pi).
#[derive(Debug, Clone, Copy)]
pub struct Functionals {
    pub mean: f64,
    pub variance: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    /// ent(f) = sum_i pi_i f_i^2 log(f_i^2 / ||f||^2), nonnegative by
    /// Jensen, zero exactly when |f| is constant.
    pub entropy: f64,
}

/// Mean, variance, L^1/L^2 norms, and entropy of f under the stationary
/// distribution. Errors on the zero function (entropy is undefined there).
pub fn variance_and_entropy(chain: &ReversibleChain, f: &[f64]) -> Result<Functionals, FormsError> {
    chain.check_len(f)?;
    functionals_under(&chain.pi, f)
}

fn functionals_under(pi: &DVector<f64>, f: &[f64]) -> Result<Functionals, FormsError> {
    let mean: f64 = pi.iter().zip(f).map(|(p, x)| p * x).sum();
    let variance: f64 = pi
        .iter()
        .zip(f)
        .map(|(p, x)| p * (x - mean) * (x - mean))
        .sum();
    let l1_norm: f64 = pi.iter().zip(f).map(|(p, x)| p * x.abs()).sum();
    let sq: f64 = pi.iter().zip(f).map(|(p, x)| p * x * x).sum();
    let l2_norm = sq.sqrt();
    if l2_norm == 0.0 {
        return Err(FormsError::ZeroFunction);
    }
    // ent(f) = ||f||^2 sum_i pi_i psi(g_i^2) with g = f/||f||: each term is
    // nonnegative, unlike the textbook form whose terms cancel near |f| = 1.
    let entropy: f64 = sq
        * pi
            .iter()
            .zip(f)
            .map(|(p, x)| p * psi_sq(x.abs() / l2_norm))
            .sum::<f64>();
    Ok(Functionals {
        mean,
        variance,
        l1_norm,
        l2_norm,
        entropy,
    })
}

/// psi(x) = x ln x - x + 1 >= 0 evaluated at x = e^2 for e >= 0. The direct
/// form loses every digit near e = 1 (it is quadratic in x - 1 there), so
/// compute x - 1 as (e-1)(e+1) and switch to the Taylor series when small.
fn psi_sq(e: f64) -> f64 {
    if e == 0.0 {
        return 1.0;
    }
    let w = (e - 1.0) * (e + 1.0);
    if w.abs() <= 1e-4 {
        w * w * (0.5 - w / 6.0 + w * w / 12.0)
    } else {
        let x = e * e;
        x * x.ln() - w
    }
}

fn sorted_symmetric_spectrum(chain: &ReversibleChain) -> (Vec<f64>, DMatrix<f64>) {
    let n = chain.n();
    let sqrt_pi: Vec<f64> = chain.pi.iter().map(|p| p.sqrt()).collect();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = sqrt_pi[i] / sqrt_pi[j] * chain.q[(i, j)];
        }
    }
    // Exact symmetrization kills the last roundoff asymmetry.
    let s = 0.5 * (&s + s.transpose());
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // -S is positive semidefinite; sort the eigenvalues of -S ascending.
    order.sort_by(|&a, &b| (-eig.eigenvalues[a]).total_cmp(&(-eig.eigenvalues[b])));
    let values: Vec<f64> = order.iter().map(|&k| -eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Eigendecomposition of the pi-symmetrized generator: eigenvalues of -Q
/// ascending (the zero mode first) with orthonormal eigenvector columns in
/// the symmetrized coordinates. Errors when no eigenvalue sits at zero
/// within roundoff.
pub fn symmetrized_eigensystem(
    chain: &ReversibleChain,
) -> Result<(Vec<f64>, DMatrix<f64>), FormsError> {
    let (values, vectors) = sorted_symmetric_spectrum(chain);
    let scale = values.last().copied().unwrap_or(1.0).max(1.0);
    if values[0].abs() > 1e-9 * scale {
        return Err(FormsError::StationarySolve(format!(
            "symmetrized generator has no zero eigenvalue (closest: {:e})",
            values[0]
        )));
    }
    Ok((values, vectors))
}

/// The spectral gap lambda_1: smallest nonzero eigenvalue of -Q, computed
/// from the pi-symmetrized generator.
pub fn spectral_gap_exact(chain: &ReversibleChain) -> Result<f64, FormsError> {
    Ok(gap_eigenpair(chain)?.0)
}

/// The gap and a gap eigenfunction, normalized to ||f||_pi = 1 with the
/// first nonvanishing component positive (a deterministic sign convention).
pub fn gap_eigenpair(chain: &ReversibleChain) -> Result<(f64, Vec<f64>), FormsError> {
    let (values, vectors) = symmetrized_eigensystem(chain)?;
    let lambda1 = values[1];
    let n = chain.n();
    let mut f: Vec<f64> = (0..n)
        .map(|i| vectors[(i, 1)] / chain.pi[i].sqrt())
        .collect();
    let norm: f64 = (0..n)
        .map(|i| chain.pi[i] * f[i] * f[i])
        .sum::<f64>()
        .sqrt();
    let sign = f
        .iter()
        .find(|v| v.abs() > 1e-12)
        .map(|v| v.signum())
        .unwrap_or(1.0);
    for v in &mut f {
        *v *= sign / norm;
    }
    Ok((lambda1, f))
}

/// Full spectrum of -Q, ascending (the first entry is the zero mode).
pub fn spectrum(chain: &ReversibleChain) -> Vec<f64> {
    sorted_symmetric_spectrum(chain).0
}

/// Controls for the log-Sobolev optimizer.
#[derive(Debug, Clone, Copy)]
pub struct LogSobolevOptions {
    /// Number of random starts (a few deterministic near-eigenfunction
    /// starts are always added).
    pub starts: usize,
    pub max_iterations: usize,
    /// Projected-gradient norm at which a start counts as converged.
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for LogSobolevOptions {
    fn default() -> Self {
        LogSobolevOptions {
            starts: 32,
            max_iterations: 10_000,
            gradient_tolerance: 1e-9,
            seed: 7,
        }
    }
}

/// Result of the log-Sobolev search. `value` is the smallest quotient seen,
/// which is always an upper estimate of the true constant.
#[derive(Debug, Clone)]
pub struct LogSobolevEstimate {
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub converged: bool,
    pub converged_starts: usize,
    pub total_starts: usize,
}

struct LsiObjective<'a> {
    pi: &'a DVector<f64>,
    j: &'a DMatrix<f64>,
    /// Graph Laplacian of J: A = diag(J 1) - J, so that D(f) = f^T A f and
    /// grad D = 2 A f.
    a: DMatrix<f64>,
}

impl<'a> LsiObjective<'a> {
    fn new(pi: &'a DVector<f64>, j: &'a DMatrix<f64>) -> Self {
        let n = pi.len();
        let mut a = -j.clone();
        for i in 0..n {
            let row: f64 = (0..n).map(|b| j[(i, b)]).sum();
            a[(i, i)] = row;
        }
        LsiObjective { pi, j, a }
    }

    fn n(&self) -> usize {
        self.pi.len()
    }

    fn dirichlet(&self, f: &DVector<f64>) -> f64 {
        let n = self.n();
        let mut d = 0.0;
        for a in 0..n {
            for b in 0..n {
                let diff = f[b] - f[a];
                d += self.j[(a, b)] * diff * diff;
            }
        }
        0.5 * d
    }

    /// N(f) = sum_i pi_i f_i^2 log(|f_i| / ||f||), evaluated through the
    /// identity 2 N = sum_i pi_i psi(f_i^2) - psi(S) with S = sum pi f^2:
    /// a sum of nonnegative terms minus a quadratically small correction.
    /// The naive signed sum is pure noise near the constant ridge and lets
    /// the quotient collapse to garbage there.
    fn entropy_denominator(&self, f: &DVector<f64>) -> f64 {
        let mut nn = 0.0;
        let mut s = 0.0;
        for i in 0..self.n() {
            nn += self.pi[i] * psi_sq(f[i].abs());
            s += self.pi[i] * f[i] * f[i];
        }
        0.5 * (nn - psi_sq(s.sqrt()))
    }

    /// Quotient R(f) = D(f) / N(f) (0-homogeneous).
    fn quotient(&self, f: &DVector<f64>) -> f64 {
        let nn = self.entropy_denominator(f);
        if nn > 0.0 {
            self.dirichlet(f) / nn
        } else {
            f64::INFINITY
        }
    }

    /// Euclidean gradient of the 0-homogeneous quotient, projected onto the
    /// tangent space of the L^2(pi) sphere (Euler's relation makes it
    /// tangent analytically; the projection kills roundoff). Returns the
    /// quotient, the pi-metric gradient norm, and a noise floor: the
    /// numerator grad D - R grad N cancels catastrophically near the
    /// constant ridge (where N -> 0), so a computed norm at or below
    /// eps (|grad D| + R |grad N|) / N carries no information.
    fn gradient_info(&self, f: &DVector<f64>, out: &mut DVector<f64>) -> Option<GradInfo> {
        let n = self.n();
        let nn = self.entropy_denominator(f);
        if nn <= 0.0 {
            return None;
        }
        let d = self.dirichlet(f);
        let r = d / nn;
        let s: f64 = (0..n).map(|i| self.pi[i] * f[i] * f[i]).sum();
        let ln_s = s.ln();
        let mut gd_norm2 = 0.0;
        let mut gn_norm2 = 0.0;
        for i in 0..n {
            let mut gd = 0.0;
            for b in 0..n {
                gd += self.a[(i, b)] * f[b];
            }
            gd *= 2.0;
            let gn = if f[i] == 0.0 {
                0.0
            } else {
                self.pi[i] * f[i] * (2.0 * f[i].abs().ln() - ln_s)
            };
            gd_norm2 += gd * gd / self.pi[i];
            gn_norm2 += gn * gn / self.pi[i];
            out[i] = (gd - r * gn) / nn;
        }
        let floor = 1024.0 * f64::EPSILON * (gd_norm2.sqrt() + r.abs() * gn_norm2.sqrt()) / nn;
        let radial: f64 = out.iter().zip(f.iter()).map(|(g, x)| g * x).sum();
        let mut gnorm2 = 0.0;
        for i in 0..n {
            out[i] -= radial * self.pi[i] * f[i];
            gnorm2 += out[i] * out[i] / self.pi[i];
        }
        Some(GradInfo {
            value: r,
            gnorm: gnorm2.sqrt(),
            floor,
        })
    }

    /// Ambient Hessian of the 0-homogeneous quotient, deflated along the
    /// radial null direction so it can drive a Newton step. None when the
    /// denominator degenerates or some f_i vanishes (log |f_i| blows up).
    fn deflated_hessian(&self, f: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = self.n();
        let nn = self.entropy_denominator(f);
        if nn <= 0.0 || f.iter().any(|x| *x == 0.0) {
            return None;
        }
        let d = self.dirichlet(f);
        let r = d / nn;
        let s: f64 = (0..n).map(|i| self.pi[i] * f[i] * f[i]).sum();
        let ln_s = s.ln();
        let mut gn = DVector::zeros(n);
        let mut gr = DVector::zeros(n);
        for i in 0..n {
            let mut gd = 0.0;
            for b in 0..n {
                gd += self.a[(i, b)] * f[b];
            }
            gd *= 2.0;
            gn[i] = self.pi[i] * f[i] * (2.0 * f[i].abs().ln() - ln_s);
            gr[i] = (gd - r * gn[i]) / nn;
        }
        // Hess N = diag(pi (2 ln|f| + 2 - ln S)) - (2/S)(Pi f)(Pi f)^T.
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                let mut v = 2.0 * self.a[(i, k)];
                let hn = -(2.0 / s) * (self.pi[i] * f[i]) * (self.pi[k] * f[k])
                    + if i == k {
                        self.pi[i] * (2.0 * f[i].abs().ln() + 2.0 - ln_s)
                    } else {
                        0.0
                    };
                v -= r * hn;
                v -= gn[i] * gr[k] + gr[i] * gn[k];
                h[(i, k)] = v / nn;
            }
        }
        // Deflate the radial direction (H f = 0 at critical points).
        let scale = 1.0 + h.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
        for i in 0..n {
            for k in 0..n {
                h[(i, k)] += scale * self.pi[i] * f[i] * self.pi[k] * f[k];
            }
        }
        Some(h)
    }
}

struct GradInfo {
    value: f64,
    gnorm: f64,
    floor: f64,
}

fn normalize_pi(pi: &DVector<f64>, f: &mut DVector<f64>) {
    let norm: f64 = pi
        .iter()
        .zip(f.iter())
        .map(|(p, x)| p * x * x)
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        *f /= norm;
    }
}

/// Log-Sobolev constant with default options.
pub fn log_sobolev_constant(chain: &ReversibleChain) -> Result<LogSobolevEstimate, FormsError> {
    log_sobolev_constant_with(chain, &LogSobolevOptions::default())
}

/// Multi-start search for the log-Sobolev constant: projected gradient
/// descent to localize a basin, then Newton polish on the ambient gradient
/// (the quotient is 0-homogeneous, so sphere minimizers are ambient
/// critical points and Newton converges quadratically to them). A start
/// counts as converged when the projected gradient norm falls under the
/// tolerance or under the evaluation noise floor. Errors only when no
/// start converges; the error still carries the best quotient seen.
pub fn log_sobolev_constant_with(
    chain: &ReversibleChain,
    opts: &LogSobolevOptions,
) -> Result<LogSobolevEstimate, FormsError> {
    let n = chain.n();
    let form = SymmetricForm::from_chain(chain);
    let objective = LsiObjective::new(&chain.pi, &form.j);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(opts.starts + 4);
    for _ in 0..opts.starts {
        let v = DVector::from_fn(n, |_, _| normal_sample(&mut rng));
        starts.push(v);
    }
    // Deterministic starts near the constant ridge: 1 + eps g approaches the
    // lambda_1 ceiling as eps -> 0, which several chains attain.
    let (_, g) = gap_eigenpair(chain)?;
    for eps in [1e-7, -1e-7, 1e-4, -1e-4] {
        let v = DVector::from_fn(n, |i, _| 1.0 + eps * g[i]);
        starts.push(v);
    }

    let mut best_value = f64::INFINITY;
    let mut best_vec = DVector::zeros(n);
    let mut converged_starts = 0usize;
    let total_starts = starts.len();
    let mut grad = DVector::zeros(n);

    for mut f in starts {
        normalize_pi(&chain.pi, &mut f);
        let mut value = objective.quotient(&f);
        let mut converged = false;

        // Phase 1: projected gradient descent with Armijo backtracking.
        let mut eta = 1.0f64;
        for _ in 0..opts.max_iterations.min(1000) {
            let Some(info) = objective.gradient_info(&f, &mut grad) else {
                break;
            };
            value = info.value;
            if info.gnorm <= opts.gradient_tolerance.max(info.floor) {
                converged = true;
                break;
            }
            // Close enough for Newton to take over.
            if info.gnorm <= 1e-5 * value.abs().max(1.0) {
                break;
            }
            eta = (eta * 2.0).min(64.0);
            let gnorm2 = info.gnorm * info.gnorm;
            let mut accepted = false;
            while eta >= 1e-14 {
                let mut cand = f.clone();
                for i in 0..n {
                    cand[i] -= eta * grad[i] / chain.pi[i];
                }
                normalize_pi(&chain.pi, &mut cand);
                let cv = objective.quotient(&cand);
                if cv <= value - 1e-4 * eta * gnorm2 {
                    f = cand;
                    value = cv;
                    accepted = true;
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                break; // stalled at float resolution; Newton decides
            }
        }

        // Phase 2: Newton polish, accepted on gradient-norm reduction.
        if !converged {
            for _ in 0..60 {
                let Some(info) = objective.gradient_info(&f, &mut grad) else {
                    break;
                };
                value = info.value;
                if info.gnorm <= opts.gradient_tolerance.max(info.floor) {
                    converged = true;
                    break;
                }
                let Some(h) = objective.deflated_hessian(&f) else {
                    break;
                };
                let Some(delta) = h.full_piv_lu().solve(&grad) else {
                    break;
                };
                let mut t = 1.0f64;
                let mut accepted = false;
                for _ in 0..10 {
                    let mut cand = f.clone();
                    for i in 0..n {
                        cand[i] -= t * delta[i];
                    }
                    normalize_pi(&chain.pi, &mut cand);
                    let mut cg = DVector::zeros(n);
                    if let Some(ci) = objective.gradient_info(&cand, &mut cg) {
                        if ci.gnorm <= info.gnorm * (1.0 - 0.25 * t) {
                            f = cand;
                            value = ci.value;
                            accepted = true;
                            break;
                        }
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
        }

        if converged {
            converged_starts += 1;
        }
        if value < best_value {
            best_value = value;
            best_vec = f;
        }
    }

    if converged_starts == 0 {
        return Err(FormsError::NonConvergence { best: best_value });
    }
    Ok(LogSobolevEstimate {
        value: best_value,
        minimizer: best_vec.iter().copied().collect(),
        converged: true,
        converged_starts,
        total_starts,
    })
}


fn normal_sample<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; plenty for optimizer starts.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random reversible chain: random positive measure, random symmetric
/// weights over a connected support (a path backbone plus density-0.4 extra
/// edges). Deterministic given the generator state.
pub fn random_reversible_chain<R: Rng>(n: usize, rng: &mut R) -> ReversibleChain {
    assert!((2..=MAX_STATES).contains(&n));
    let pi: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.2)).collect();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let v = rng.random_range(0.2..1.2);
        w[(i, i + 1)] = v;
        w[(i + 1, i)] = v;
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if rng.random_range(0.0..1.0) < 0.4 {
                let v = rng.random_range(0.05..1.05);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    let total: f64 = pi.iter().sum();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q[(i, j)] = w[(i, j)] / (pi[i] / total);
            }
        }
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
        q[(i, i)] = -off;
    }
    ReversibleChain::from_rate_matrix(q).expect("constructed chain is valid by construction")
}

/// Random reversible chain with unit row activity: every state satisfies
/// sum_j |q_ij| = 1, i.e. q(i) = 1/2, the normalization the
/// Diaconis-Saloff-Coste bound requires.
pub fn random_unit_activity_chain<R: Rng>(n: usize, rng: &mut R) -> ReversibleChain {
    assert!((2..=MAX_STATES).contains(&n));
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let v = rng.random_range(0.2..1.2);
        w[(i, i + 1)] = v;
        w[(i + 1, i)] = v;
    }
    for i in 0..n {
        for j in (i + 2)..n {
            if rng.random_range(0.0..1.0) < 0.4 {
                let v = rng.random_range(0.05..1.05);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    let row: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q[(i, j)] = w[(i, j)] / (2.0 * row[i]);
            }
        }
        q[(i, i)] = -0.5;
    }
    ReversibleChain::from_rate_matrix(q).expect("constructed chain is valid by construction")
}

/// Random function with independent standard normal entries.
pub fn random_function<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| normal_sample(rng)).collect()
}
