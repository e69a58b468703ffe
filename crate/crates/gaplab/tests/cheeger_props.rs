//! Property and oracle tests for the weighted Cheeger machinery. The
//! oracle here re-enumerates subsets with plain bitmask loops and direct
//! O(n^2) boundary sums, sharing nothing with the Gray-code walk it checks.

use gaplab::cheeger::{
    cheeger_constant, cheeger_constant_intervals, dsc_log_sobolev_bound, j_alpha,
    lawler_sokal_bound, main_theorem_check, CheegerError, CheegerVariant, RateWeight,
};
use gaplab::forms::{
    random_reversible_chain, random_unit_activity_chain, spectral_gap_exact, ReversibleChain,
    SymmetricForm,
};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Minimum of `value(flow, mass)` over proper nonempty subsets (and the
/// full space too when `include_full`), by direct bitmask enumeration.
fn brute_min<F: Fn(f64, f64) -> f64>(
    k: &DMatrix<f64>,
    pi: &[f64],
    include_full: bool,
    value: F,
) -> f64 {
    let n = pi.len();
    let full: u64 = (1 << n) - 1;
    let mut best = f64::INFINITY;
    for mask in 1u64..=full {
        if mask == full && !include_full {
            continue;
        }
        let mut flow = 0.0;
        let mut mass = 0.0;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                mass += pi[i];
                for j in 0..n {
                    if mask >> j & 1 == 0 {
                        flow += k[(i, j)];
                    }
                }
            }
        }
        best = best.min(value(flow, mass));
    }
    best
}

fn default_half_weight(form: &SymmetricForm) -> RateWeight {
    RateWeight::default_for(form, 0.5).unwrap()
}

#[test]
fn four_variants_match_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let chain = random_reversible_chain(7, &mut rng);
    let form = SymmetricForm::from_chain(&chain);
    let w = default_half_weight(&form);
    let weighted = j_alpha(&form, &w).unwrap();
    let k = weighted.kernel();
    let pi: Vec<f64> = form.pi().iter().copied().collect();

    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);

    let poincare = cheeger_constant(&form, &CheegerVariant::Poincare, &w).unwrap();
    let oracle = brute_min(k, &pi, false, |flow, m| flow / m.min(1.0 - m));
    assert!(rel(poincare.value, oracle), "poincare {} vs {}", poincare.value, oracle);

    let nu = 2.5;
    let nash = cheeger_constant(&form, &CheegerVariant::Nash { nu }, &w).unwrap();
    let expo = (nu - 1.0) / nu;
    let oracle = brute_min(k, &pi, false, |flow, m| flow / m.min(1.0 - m).powf(expo));
    assert!(rel(nash.value, oracle), "nash {} vs {}", nash.value, oracle);

    let wang = cheeger_constant(&form, &CheegerVariant::LogSobWang, &w).unwrap();
    let min_atom = pi.iter().copied().fold(f64::INFINITY, f64::min);
    let wang_ratio = |flow: f64, m: f64| flow / (m * (std::f64::consts::E + 1.0 / m).ln().sqrt());
    let oracle = brute_min(k, &pi, false, |flow, m| {
        if m <= min_atom * (1.0 + 1e-12) {
            wang_ratio(flow, m)
        } else {
            f64::INFINITY
        }
    });
    assert!(rel(wang.value, oracle), "wang {} vs {}", wang.value, oracle);
    let unrestricted = wang
        .extras
        .iter()
        .find(|(name, _)| name == "unrestricted_inf")
        .map(|(_, v)| *v)
        .unwrap();
    let oracle = brute_min(k, &pi, false, wang_ratio);
    assert!(rel(unrestricted, oracle), "wang unrestricted {unrestricted} vs {oracle}");

    let chen = cheeger_constant(&form, &CheegerVariant::default_chen(), &w).unwrap();
    for (delta, reported) in [(1.0, chen.extras[0].1), (10_000.0, chen.value)] {
        let oracle = brute_min(k, &pi, true, |flow, m| {
            (flow + delta * m) / (m * (1.0 - m.ln()).sqrt())
        });
        assert!(rel(reported, oracle), "chen at delta {delta}: {reported} vs {oracle}");
    }
    assert!(!chen.converged, "the delta curve cannot stabilize on a finite space");
}

#[test]
fn lawler_sokal_matches_direct_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(502);
    for _ in 0..10 {
        let n = rng.random_range(4..=8);
        let chain = random_reversible_chain(n, &mut rng);
        let form = SymmetricForm::from_chain(&chain);
        let pi: Vec<f64> = form.pi().iter().copied().collect();
        let ls = lawler_sokal_bound(&chain).unwrap();

        let k_oracle = brute_min(form.kernel(), &pi, false, |flow, m| flow / m.min(1.0 - m));
        let q = chain.rate_matrix();
        let m_oracle = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum::<f64>())
            .fold(0.0f64, f64::max);
        assert!((ls.k - k_oracle).abs() <= 1e-12 * k_oracle.max(1.0));
        assert!((ls.m - m_oracle).abs() <= 1e-12 * m_oracle.max(1.0));
        assert!((ls.bound - k_oracle * k_oracle / (2.0 * m_oracle)).abs() <= 1e-12 * ls.bound.max(1.0));
    }
}

#[test]
fn nash_constant_monotone_in_nu() {
    let mut rng = ChaCha8Rng::seed_from_u64(503);
    for _ in 0..10 {
        let n = rng.random_range(3..=8);
        let chain = random_reversible_chain(n, &mut rng);
        let form = SymmetricForm::from_chain(&chain);
        let w = default_half_weight(&form);
        let poincare = cheeger_constant(&form, &CheegerVariant::Poincare, &w).unwrap().value;
        let mut last = 0.0f64;
        for nu in [1.2, 1.5, 2.0, 4.0, 16.0, 1e4] {
            let v = cheeger_constant(&form, &CheegerVariant::Nash { nu }, &w).unwrap().value;
            assert!(
                v >= last * (1.0 - 1e-12),
                "nash constant decreased in nu: {v} after {last}"
            );
            assert!(v <= poincare * (1.0 + 1e-12), "nash must not exceed poincare");
            last = v;
        }
        // As nu grows the exponent tends to 1 and the constant to poincare.
        assert!((last - poincare).abs() <= 5e-3 * poincare);
    }
}

#[test]
fn all_variants_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(504);
    let chain = random_reversible_chain(7, &mut rng);
    let n = chain.n();
    let perm: [usize; 7] = [3, 0, 6, 1, 5, 2, 4];
    let q = chain.rate_matrix();
    let mut q2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            q2[(perm[i], perm[j])] = q[(i, j)];
        }
    }
    let permuted = ReversibleChain::from_rate_matrix(q2).unwrap();

    let form = SymmetricForm::from_chain(&chain);
    let form2 = SymmetricForm::from_chain(&permuted);
    let w = default_half_weight(&form);
    let w2 = default_half_weight(&form2);

    let variants = [
        CheegerVariant::Poincare,
        CheegerVariant::Nash { nu: 2.0 },
        CheegerVariant::LogSobWang,
        CheegerVariant::default_chen(),
    ];
    for variant in &variants {
        let a = cheeger_constant(&form, variant, &w).unwrap();
        let b = cheeger_constant(&form2, variant, &w2).unwrap();
        assert!(
            (a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0),
            "{}: {} vs {} under permutation",
            variant.label(),
            a.value,
            b.value
        );
        // The minimizing subset must map through the permutation, up to the
        // A <-> complement tie for the variants symmetric in that swap.
        let mut mapped: Vec<usize> = a.argmin.iter().map(|&i| perm[i]).collect();
        mapped.sort_unstable();
        let mut complement: Vec<usize> = (0..n).filter(|i| !mapped.contains(i)).collect();
        complement.sort_unstable();
        let symmetric = matches!(
            variant,
            CheegerVariant::Poincare | CheegerVariant::Nash { .. }
        );
        let matches_direct = b.argmin == mapped;
        let matches_complement = symmetric && b.argmin == complement;
        assert!(
            matches_direct || matches_complement,
            "{}: argmin {:?} is neither {:?} nor its complement",
            variant.label(),
            b.argmin,
            mapped
        );
    }
}

#[test]
fn constant_weight_scales_the_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let chain = random_reversible_chain(6, &mut rng);
    let form = SymmetricForm::from_chain(&chain);
    let n = form.n();
    let max_activity = (0..n).map(|i| form.activity(i)).fold(0.0f64, f64::max);
    let c = 1.5 * max_activity;
    let alpha = 0.7;

    let flat = RateWeight::new(DMatrix::from_element(n, n, c), alpha).unwrap();
    let scaled = cheeger_constant(&form, &CheegerVariant::Poincare, &flat).unwrap();
    let base = lawler_sokal_bound(&chain).unwrap().k;
    let expected = base / c.powf(alpha);
    assert!(
        (scaled.value - expected).abs() <= 1e-12 * expected.max(1.0),
        "constant weight must scale the constant by c^-alpha: {} vs {}",
        scaled.value,
        expected
    );
}

#[test]
fn intervals_never_beat_exhaustive() {
    let mut rng = ChaCha8Rng::seed_from_u64(506);
    for _ in 0..8 {
        let n = 12;
        let birth: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.2..1.2)).collect();
        let death: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.2..1.2)).collect();
        let chain = ReversibleChain::from_birth_death(&birth, &death).unwrap();
        let form = SymmetricForm::from_chain(&chain);
        let w = default_half_weight(&form);
        for variant in [
            CheegerVariant::Poincare,
            CheegerVariant::Nash { nu: 2.0 },
            CheegerVariant::LogSobWang,
            CheegerVariant::default_chen(),
        ] {
            let exact = cheeger_constant(&form, &variant, &w).unwrap();
            let relaxed = cheeger_constant_intervals(&form, &variant, &w).unwrap();
            assert!(!exact.restricted_to_intervals);
            assert!(relaxed.restricted_to_intervals);
            assert!(
                relaxed.value >= exact.value * (1.0 - 1e-12) - 1e-15,
                "{}: interval inf {} fell below exhaustive inf {}",
                variant.label(),
                relaxed.value,
                exact.value
            );
        }
    }
}

#[test]
fn chen_prefers_proper_subsets_at_large_delta() {
    let mut rng = ChaCha8Rng::seed_from_u64(507);
    for _ in 0..5 {
        let n = rng.random_range(3..=8);
        let chain = random_reversible_chain(n, &mut rng);
        let form = SymmetricForm::from_chain(&chain);
        let w = default_half_weight(&form);
        let delta = 1e9;
        let rep = cheeger_constant(
            &form,
            &CheegerVariant::LogSobChen { deltas: vec![delta] },
            &w,
        )
        .unwrap();
        // The full space scores exactly delta; any proper subset of measure
        // m scores about delta / sqrt(1 - ln m) < delta once delta dwarfs
        // the boundary flow.
        assert!(rep.value < delta * (1.0 - 1e-6));
        assert!(rep.argmin.len() < n);
    }
}

#[test]
fn wang_argmin_is_a_lightest_singleton() {
    let mut rng = ChaCha8Rng::seed_from_u64(508);
    for _ in 0..10 {
        let n = rng.random_range(3..=9);
        let chain = random_reversible_chain(n, &mut rng);
        let form = SymmetricForm::from_chain(&chain);
        let w = default_half_weight(&form);
        let rep = cheeger_constant(&form, &CheegerVariant::LogSobWang, &w).unwrap();
        assert_eq!(rep.argmin.len(), 1, "the minimal-measure shell is a singleton");
        let pi = form.pi();
        let min_atom = pi.iter().copied().fold(f64::INFINITY, f64::min);
        let x = rep.argmin[0];
        assert!(pi[x] <= min_atom * (1.0 + 1e-12));

        let weighted = j_alpha(&form, &w).unwrap();
        let flow: f64 = (0..n).filter(|&j| j != x).map(|j| weighted.kernel()[(x, j)]).sum();
        let direct = flow / (pi[x] * (std::f64::consts::E + 1.0 / pi[x]).ln().sqrt());
        assert!((rep.value - direct).abs() <= 1e-12 * direct.max(1.0));

        let unrestricted = rep
            .extras
            .iter()
            .find(|(name, _)| name == "unrestricted_inf")
            .map(|(_, v)| *v)
            .unwrap();
        assert!(unrestricted <= rep.value * (1.0 + 1e-12));
    }
}

#[test]
fn dsc_bound_is_sound_on_unit_activity_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(509);
    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let chain = random_unit_activity_chain(n, &mut rng);
        let bound = dsc_log_sobolev_bound(&chain).unwrap();
        let gap = spectral_gap_exact(&chain).unwrap();
        assert!(bound > 0.0);
        assert!(
            bound <= gap * (1.0 + 1e-9) + 1e-12,
            "DSC bound {bound} exceeds the gap {gap}"
        );
    }
}

#[test]
fn dsc_bound_rejects_general_activity() {
    let mut rng = ChaCha8Rng::seed_from_u64(510);
    let chain = random_reversible_chain(5, &mut rng);
    let q = chain.rate_matrix();
    let unit = (0..5).all(|i| {
        let total: f64 = (0..5).map(|j| q[(i, j)].abs()).sum();
        (total - 1.0).abs() <= 1e-9
    });
    assert!(!unit, "random chain should not be unit-activity by accident");
    match dsc_log_sobolev_bound(&chain) {
        Err(CheegerError::NotUnitActivity(rows)) => assert!(!rows.is_empty()),
        other => panic!("expected NotUnitActivity, got {other:?}"),
    }
}

#[test]
fn main_theorem_nash_is_dominated_by_poincare() {
    let mut rng = ChaCha8Rng::seed_from_u64(511);
    for _ in 0..6 {
        let n = rng.random_range(2..=8);
        let chain = random_reversible_chain(n, &mut rng);
        let form = SymmetricForm::from_chain(&chain);
        let w = default_half_weight(&form);
        let report = main_theorem_check(&form, &w).unwrap();
        assert!(report.all_positive);
        assert!(report.inequalities_hold);
        assert!(report.k_nash <= report.k_poincare * (1.0 + 1e-12));
        assert!(report.lambda1 > 0.0);
        assert!(report.sigma <= report.lambda1 * (1.0 + 1e-6));
        assert!(report.nash_constant.is_finite() && report.nash_constant > 0.0);
    }
}
