//! Asymptotic and finite epsilon-secure key rates: the zeta parameter
//! estimation bound, the AEP penalty, error-correction leakage and the
//! privacy-amplification correction.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{QkdError, Result};
use crate::search::{golden_min, linspace};
use crate::states::{
    bb84_lambda4_range, disturbance_from_qber, eve_gram, qber_from_params, s1_sxe_hxy_fast,
    scenario_ccq, AttackSpec, NoiseConfig, ProtocolId, Scenario, P_MAX,
};

/// Every budget component must hold at least this fraction of eps_total.
pub const BUDGET_FLOOR_FRACTION: f64 = 1e-3;
/// Number of Q' samples on the parameter-estimation interval.
pub const Q_SCAN_POINTS: usize = 21;
/// Number of lambda4 grid points on the feasible BB84 sub-interval.
pub const LAMBDA4_GRID_POINTS: usize = 41;
/// Absolute tolerance of the golden-section lambda4 refinement.
pub const LAMBDA4_TOL: f64 = 1e-6;

/// Split of the total security parameter, Eq-(5)-style:
/// eps_total = eps_bar + eps_PE + eps_EC + eps_PA.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SecurityBudget {
    eps_total: f64,
    eps_bar: f64,
    eps_pe: f64,
    eps_ec: f64,
    eps_pa: f64,
}

impl SecurityBudget {
    pub fn new(eps_total: f64, eps_bar: f64, eps_pe: f64, eps_ec: f64, eps_pa: f64) -> Result<Self> {
        if !(0.0 < eps_total && eps_total < 1.0) {
            return Err(QkdError::Domain(format!("eps_total {eps_total} outside (0,1)")));
        }
        let floor = eps_total * BUDGET_FLOOR_FRACTION;
        for (name, v) in [
            ("eps_bar", eps_bar),
            ("eps_PE", eps_pe),
            ("eps_EC", eps_ec),
            ("eps_PA", eps_pa),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(QkdError::Domain(format!("{name} {v} outside (0,1)")));
            }
            if v < floor * (1.0 - 1e-12) {
                return Err(QkdError::Domain(format!(
                    "{name} {v:.3e} below floor {floor:.3e}"
                )));
            }
        }
        let sum = eps_bar + eps_pe + eps_ec + eps_pa;
        if (sum - eps_total).abs() > 1e-15 {
            return Err(QkdError::Domain(format!(
                "budget components sum to {sum:.17e}, expected {eps_total:.17e}"
            )));
        }
        Ok(SecurityBudget {
            eps_total,
            eps_bar,
            eps_pe,
            eps_ec,
            eps_pa,
        })
    }

    /// Budget from simplex fractions (f_bar, f_PE, f_PA); eps_EC takes the
    /// remainder, which must stay above the floor.
    pub fn from_fractions(eps_total: f64, f_bar: f64, f_pe: f64, f_pa: f64) -> Result<Self> {
        let f_ec = 1.0 - f_bar - f_pe - f_pa;
        let eps_ec = eps_total * f_ec;
        // re-derive eps_total exactly as the sum so the 1e-15 identity holds
        let (eb, epe, epa) = (eps_total * f_bar, eps_total * f_pe, eps_total * f_pa);
        let total = eb + epe + eps_ec + epa;
        Self::new(total, eb, epe, eps_ec, epa)
    }

    /// Even four-way split.
    pub fn even(eps_total: f64) -> Result<Self> {
        Self::from_fractions(eps_total, 0.25, 0.25, 0.25)
    }

    pub fn eps_total(&self) -> f64 {
        self.eps_total
    }
    pub fn eps_bar(&self) -> f64 {
        self.eps_bar
    }
    pub fn eps_pe(&self) -> f64 {
        self.eps_pe
    }
    pub fn eps_ec(&self) -> f64 {
        self.eps_ec
    }
    pub fn eps_pa(&self) -> f64 {
        self.eps_pa
    }
}

/// Finite-size parameters: N total signals, m parameter-estimation signals,
/// n = N - m key-generation signals.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FiniteSizeParams {
    n_total: f64,
    m: f64,
    /// statistics dimension in zeta (Eq-(10) style), default 2
    pub n_p: u32,
    /// error-correction efficiency, >= 1, default 1 (ideal)
    pub f_ec: f64,
    /// sifting retention factor in (0,1], default 1 (no discard)
    pub sifting: f64,
    /// evaluate the leakage H(X|Y) at the observed Q instead of inside the
    /// parameter-estimation minimization (sensitivity studies only)
    pub hxy_at_observed_q: bool,
}

impl FiniteSizeParams {
    pub fn new(n_total: f64, m: f64) -> Result<Self> {
        if !(n_total.is_finite() && n_total >= 2.0) {
            return Err(QkdError::Domain(format!("N {n_total} must be >= 2")));
        }
        if !(1.0..=n_total - 1.0).contains(&m) {
            return Err(QkdError::Domain(format!("m {m} outside [1, N-1]")));
        }
        Ok(FiniteSizeParams {
            n_total,
            m,
            n_p: 2,
            f_ec: 1.0,
            sifting: 1.0,
            hxy_at_observed_q: false,
        })
    }

    pub fn with_f_ec(mut self, f_ec: f64) -> Result<Self> {
        if f_ec < 1.0 {
            return Err(QkdError::Domain(format!("f_EC {f_ec} must be >= 1")));
        }
        self.f_ec = f_ec;
        Ok(self)
    }

    pub fn n_total(&self) -> f64 {
        self.n_total
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn n(&self) -> f64 {
        self.n_total - self.m
    }
}

/// Statistical deviation of parameter estimation:
/// zeta = sqrt[(ln(1/eps_PE) + n_p ln(m+1)) / (8m)], natural logarithms.
pub fn zeta(eps_pe: f64, n_p: u32, m: f64) -> Result<f64> {
    if !(eps_pe > 0.0 && eps_pe <= 1.0) {
        return Err(QkdError::Domain(format!("eps_PE {eps_pe} outside (0,1]")));
    }
    if m < 1.0 {
        return Err(QkdError::Domain(format!("m {m} must be >= 1")));
    }
    Ok((((1.0 / eps_pe).ln() + (n_p as f64) * (m + 1.0).ln()) / (8.0 * m)).sqrt())
}

/// AEP finite-size penalty 5 sqrt(log2(2/eps_bar)/n), in bits per signal.
pub fn aep_penalty(eps_bar: f64, n: f64) -> Result<f64> {
    if !(eps_bar > 0.0 && eps_bar <= 1.0) {
        return Err(QkdError::Domain(format!("eps_bar {eps_bar} outside (0,1]")));
    }
    if n < 1.0 {
        return Err(QkdError::Domain(format!("n {n} must be >= 1")));
    }
    Ok(5.0 * ((2.0 / eps_bar).log2() / n).sqrt())
}

/// Full decomposition of a rate evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateBreakdown {
    /// S(X|E) at the worst-case Q' and attack parameter (bits)
    pub sxe: f64,
    /// H(X|Y) used for the leakage term (bits)
    pub hxy: f64,
    pub zeta: f64,
    pub aep_penalty: f64,
    pub pa_correction: f64,
    /// effective key fraction multiplying the entropy difference (sifting * n/N)
    pub n_frac: f64,
    pub f_ec: f64,
    /// rate in bits per signal; may be negative
    pub rate: f64,
    pub worst_q: f64,
    pub argmin_lambda4: Option<f64>,
}

impl RateBreakdown {
    /// Recompute the rate from the stored parts (self-consistency check).
    pub fn recomputed_rate(&self) -> f64 {
        self.n_frac * (self.sxe - self.aep_penalty - self.f_ec * self.hxy) + self.pa_correction
    }
}

/// Result of the inner attack minimization at fixed observed statistics.
#[derive(Debug, Clone, Copy)]
pub struct GEntry {
    /// minimal S(X|E) over Eve's free parameter (bits)
    pub sxe: f64,
    /// H(X|Y) of the measured state (bits)
    pub hxy: f64,
    pub lambda4: Option<f64>,
}

/// Rate evaluator with a memoized inner minimization.
///
/// The cache maps (protocol, Q bits, p bits) to the minimized GEntry; all
/// searches are deterministic, so cached and fresh values are bit-identical.
pub struct Evaluator {
    scenario: Scenario,
    cache: Mutex<HashMap<(ProtocolId, u64, u64), GEntry>>,
}

impl Default for Evaluator {
    fn default() -> Self {
        Self::new()
    }
}

impl Evaluator {
    /// Evaluator with noise entering as scenario-1 depolarizing on Alice's
    /// qubit (the canonical choice; scenarios 2 and 4 are equivalent).
    pub fn new() -> Self {
        Self::with_scenario(Scenario::S1AliceQuantum)
    }

    /// Evaluator whose noise parameter p is interpreted under the given
    /// scenario. Scenario 0 admits only p = 0.
    pub fn with_scenario(scenario: Scenario) -> Self {
        Evaluator {
            scenario,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// S(X|E) minimized over Eve's free parameter, plus H(X|Y), at observed
    /// error rate `q` under scenario-1 noise p.
    pub fn g(&self, protocol: ProtocolId, q: f64, p: f64) -> Result<GEntry> {
        let key = (protocol, q.to_bits(), p.to_bits());
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*hit);
        }
        let entry = self.g_uncached(protocol, q, p)?;
        self.cache.lock().expect("cache lock").insert(key, entry);
        Ok(entry)
    }

    fn g_uncached(&self, protocol: ProtocolId, q: f64, p: f64) -> Result<GEntry> {
        if !(0.0..=0.5).contains(&q) {
            return Err(QkdError::Domain(format!("QBER {q} outside [0,0.5]")));
        }
        if !(0.0..=P_MAX).contains(&p) {
            return Err(QkdError::Domain(format!("noise parameter {p} outside [0,1)")));
        }
        let (d, _clamped) = disturbance_from_qber(q, p)?;
        // scenario-1 (the canonical interpretation) admits the fast
        // block-structure evaluation; other scenarios take the generic
        // channel pipeline
        let fast = self.scenario == Scenario::S1AliceQuantum || p == 0.0;
        let sxe_hxy = |spec: &AttackSpec| -> Result<(f64, f64, f64)> {
            if fast {
                s1_sxe_hxy_fast(spec, p)
            } else {
                let noise = if p == 0.0 {
                    NoiseConfig::new(Scenario::S0None, 0.0)?
                } else {
                    NoiseConfig::new(self.scenario, p)?
                };
                let ccq = scenario_ccq(spec, &noise)?;
                Ok((ccq.sxe()?, ccq.hxy()?, ccq.qber()?))
            }
        };
        match protocol {
            ProtocolId::SixState => {
                let spec = eve_gram(protocol, d, p, None)?;
                let (sxe, hxy, _) = sxe_hxy(&spec)?;
                Ok(GEntry {
                    sxe,
                    hxy,
                    lambda4: None,
                })
            }
            ProtocolId::Bb84 => {
                let (lo, hi) = bb84_lambda4_range(d, p)?.ok_or_else(|| {
                    QkdError::Infeasible(format!("no feasible lambda4 at D={d}, p={p}"))
                })?;
                let mut hxy_store = f64::NAN;
                let mut eval = |lam4: f64| -> f64 {
                    let lam4 = lam4.clamp(lo, hi);
                    match eve_gram(protocol, d, p, Some(lam4))
                        .and_then(|spec| sxe_hxy(&spec))
                    {
                        Ok((sxe, hxy, _)) => {
                            hxy_store = hxy;
                            sxe
                        }
                        Err(_) => f64::INFINITY,
                    }
                };
                let grid = linspace(lo, hi, LAMBDA4_GRID_POINTS);
                let mut best = (grid[0], eval(grid[0]));
                for &l in &grid[1..] {
                    let v = eval(l);
                    if v < best.1 {
                        best = (l, v);
                    }
                }
                if !best.1.is_finite() {
                    return Err(QkdError::Infeasible(format!(
                        "no feasible lambda4 evaluation at D={d}, p={p}"
                    )));
                }
                // refine around the best grid cell
                let step = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
                if step > LAMBDA4_TOL {
                    let (a, b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
                    let refined = golden_min(&mut eval, a, b, LAMBDA4_TOL);
                    if refined.1 < best.1 {
                        best = refined;
                    }
                }
                // re-evaluate at the arg-min so hxy_store matches it
                let sxe = eval(best.0);
                Ok(GEntry {
                    sxe,
                    hxy: hxy_store,
                    lambda4: Some(best.0),
                })
            }
        }
    }

    /// Asymptotic rate r = S(X|E) - H(X|Y) with the inner minimization over
    /// Eve's free parameter. May be negative.
    pub fn asymptotic_rate(&self, protocol: ProtocolId, d: f64, p: f64) -> Result<RateBreakdown> {
        let q = qber_from_params(d, p)?;
        let entry = self.g(protocol, q, p)?;
        Ok(RateBreakdown {
            sxe: entry.sxe,
            hxy: entry.hxy,
            zeta: 0.0,
            aep_penalty: 0.0,
            pa_correction: 0.0,
            n_frac: 1.0,
            f_ec: 1.0,
            rate: entry.sxe - entry.hxy,
            worst_q: q,
            argmin_lambda4: entry.lambda4,
        })
    }

    /// Finite epsilon-secure rate at observed error rate `q_obs`:
    /// r = (n/N) min over Q' in [Q-zeta, Q+zeta] and Eve's parameter of
    /// [S(X|E) - aep - f_EC H(X|Y)] + (2/N) log2(2 eps_PA).
    pub fn finite_rate(
        &self,
        protocol: ProtocolId,
        q_obs: f64,
        p: f64,
        fsp: &FiniteSizeParams,
        budget: &SecurityBudget,
    ) -> Result<RateBreakdown> {
        if !(0.0..=0.5).contains(&q_obs) {
            return Err(QkdError::Domain(format!("QBER {q_obs} outside [0,0.5]")));
        }
        let (n_total, m, n) = (fsp.n_total(), fsp.m(), fsp.n());
        let z = zeta(budget.eps_pe(), fsp.n_p, m)?;
        let aep = aep_penalty(budget.eps_bar(), n)?;
        let pa_corr = (2.0 / n_total) * (2.0 * budget.eps_pa()).log2();
        let (lo, hi) = ((q_obs - z).max(0.0), (q_obs + z).min(0.5));
        let hxy_fixed = if fsp.hxy_at_observed_q {
            Some(self.g(protocol, q_obs, p)?.hxy)
        } else {
            None
        };
        let mut worst: Option<(f64, GEntry, f64)> = None; // (value, entry, q')
        for qp in linspace(lo, hi, Q_SCAN_POINTS) {
            let entry = self.g(protocol, qp, p)?;
            let hxy = hxy_fixed.unwrap_or(entry.hxy);
            let val = entry.sxe - aep - fsp.f_ec * hxy;
            if worst.map_or(true, |(w, _, _)| val < w) {
                worst = Some((val, entry, qp));
            }
        }
        let (val, entry, worst_q) =
            worst.ok_or_else(|| QkdError::Infeasible("empty Q' scan".into()))?;
        let n_frac = fsp.sifting * n / n_total;
        Ok(RateBreakdown {
            sxe: entry.sxe,
            hxy: hxy_fixed.unwrap_or(entry.hxy),
            zeta: z,
            aep_penalty: aep,
            pa_correction: pa_corr,
            n_frac,
            f_ec: fsp.f_ec,
            rate: n_frac * val + pa_corr,
            worst_q,
            argmin_lambda4: entry.lambda4,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::binary_entropy;

    #[test]
    fn zeta_structure() {
        let mut prev = f64::INFINITY;
        for &m in &[1e2, 1e3, 1e4, 1e6, 1e8, 1e12] {
            let z = zeta(1e-9, 2, m).unwrap();
            assert!(z < prev, "zeta must decrease in m");
            prev = z;
        }
        assert!(prev < 1e-5);
        for &m in &[1.0, 10.0, 1e6] {
            assert_eq!(zeta(1.0, 0, m).unwrap(), 0.0);
        }
        assert!(zeta(0.0, 2, 10.0).is_err());
        assert!(zeta(1e-9, 2, 0.5).is_err());
    }

    #[test]
    fn zeta_frozen_oracle() {
        assert!((zeta(1e-9, 2, 1e6).unwrap() - 0.002458512989412).abs() < 1e-12);
    }

    #[test]
    fn aep_structure() {
        let v = aep_penalty(1e-10, 1e8).unwrap();
        assert!(v > 0.0);
        assert!((v - 0.002924862430477).abs() < 1e-12);
        let quad = aep_penalty(1e-10, 4e8).unwrap();
        assert!((quad - v / 2.0).abs() < 1e-15);
        assert!(aep_penalty(0.0, 1e8).is_err());
        assert!(aep_penalty(1e-10, 0.0).is_err());
    }

    #[test]
    fn budget_validation() {
        let b = SecurityBudget::even(1e-9).unwrap();
        assert!((b.eps_bar() - 2.5e-10).abs() < 1e-24);
        assert!(
            (b.eps_bar() + b.eps_pe() + b.eps_ec() + b.eps_pa() - b.eps_total()).abs() < 1e-15
        );
        // floor: an explicit component below eps_total/1000 is rejected
        assert!(SecurityBudget::from_fractions(1e-9, 1e-4, 0.3, 0.3).is_err());
        // eps_EC remainder below the floor is rejected
        assert!(SecurityBudget::from_fractions(1e-9, 0.4, 0.4, 0.1999).is_err());
        // mismatched sum is rejected
        assert!(SecurityBudget::new(1e-9, 3e-10, 3e-10, 3e-10, 3e-10).is_err());
    }

    #[test]
    fn finite_size_params_validation() {
        assert!(FiniteSizeParams::new(100.0, 0.0).is_err());
        assert!(FiniteSizeParams::new(100.0, 100.0).is_err());
        let f = FiniteSizeParams::new(100.0, 10.0).unwrap();
        assert_eq!(f.n(), 90.0);
        assert!(f.with_f_ec(0.9).is_err());
    }

    #[test]
    fn asymptotic_noiseless_perfect_channel() {
        let ev = Evaluator::new();
        let r = ev.asymptotic_rate(ProtocolId::Bb84, 0.0, 0.0).unwrap();
        assert!((r.rate - 1.0).abs() < 1e-9, "rate {}", r.rate);
        let r = ev.asymptotic_rate(ProtocolId::SixState, 0.0, 0.0).unwrap();
        assert!((r.rate - 1.0).abs() < 1e-9, "rate {}", r.rate);
    }

    #[test]
    fn asymptotic_bb84_closed_form_oracle() {
        let ev = Evaluator::new();
        for i in 1..=10 {
            let q = i as f64 / 100.0;
            let r = ev.asymptotic_rate(ProtocolId::Bb84, q, 0.0).unwrap();
            let oracle = 1.0 - 2.0 * binary_entropy(q).unwrap();
            assert!(
                (r.rate - oracle).abs() < 1e-6,
                "Q={q}: {} vs {}",
                r.rate,
                oracle
            );
        }
    }

    #[test]
    fn asymptotic_six_state_frozen_oracle() {
        let ev = Evaluator::new();
        let r = ev.asymptotic_rate(ProtocolId::SixState, 0.05, 0.0).unwrap();
        assert!((r.rate - 0.496816268319416).abs() < 1e-9, "rate {}", r.rate);
    }

    #[test]
    fn asymptotic_zero_crossings() {
        let ev = Evaluator::new();
        assert!(ev.asymptotic_rate(ProtocolId::Bb84, 0.109, 0.0).unwrap().rate > 0.0);
        assert!(ev.asymptotic_rate(ProtocolId::Bb84, 0.111, 0.0).unwrap().rate < 0.0);
        assert!(ev.asymptotic_rate(ProtocolId::SixState, 0.125, 0.0).unwrap().rate > 0.0);
        assert!(ev.asymptotic_rate(ProtocolId::SixState, 0.127, 0.0).unwrap().rate < 0.0);
    }

    fn small_budget() -> SecurityBudget {
        SecurityBudget::from_fractions(1e-9, 0.25, 0.25, 0.25).unwrap()
    }

    #[test]
    fn finite_converges_to_asymptotic() {
        let ev = Evaluator::new();
        for protocol in [ProtocolId::Bb84, ProtocolId::SixState] {
            let asym = ev.asymptotic_rate(protocol, 0.05, 0.0).unwrap().rate;
            let fsp = FiniteSizeParams::new(1e18, 1e15).unwrap();
            let fin = ev
                .finite_rate(protocol, 0.05, 0.0, &fsp, &small_budget())
                .unwrap()
                .rate;
            assert!(
                (fin - asym).abs() <= 1e-2,
                "{protocol:?}: finite {fin} vs asymptotic {asym}"
            );
            assert!(fin <= asym);
        }
    }

    #[test]
    fn finite_rate_monotone_in_n() {
        let ev = Evaluator::new();
        let mut prev = f64::NEG_INFINITY;
        for &nt in &[1e6, 1e7, 1e8, 1e10, 1e12, 1e14] {
            let fsp = FiniteSizeParams::new(nt, (nt * 0.01).max(10.0)).unwrap();
            let r = ev
                .finite_rate(ProtocolId::SixState, 0.05, 0.0, &fsp, &small_budget())
                .unwrap()
                .rate;
            assert!(r >= prev, "rate decreased at N={nt}: {r} < {prev}");
            prev = r;
        }
    }

    #[test]
    fn finite_below_asymptotic_at_worst_q() {
        let ev = Evaluator::new();
        let fsp = FiniteSizeParams::new(1e8, 1e6).unwrap();
        for protocol in [ProtocolId::Bb84, ProtocolId::SixState] {
            let fin = ev
                .finite_rate(protocol, 0.05, 0.0, &fsp, &small_budget())
                .unwrap();
            let asym_at_worst = ev
                .asymptotic_rate(
                    protocol,
                    disturbance_from_qber(fin.worst_q, 0.0).unwrap().0,
                    0.0,
                )
                .unwrap();
            // every finite correction is non-positive
            assert!(fin.rate <= asym_at_worst.rate + 1e-12);
        }
    }

    #[test]
    fn breakdown_self_consistency() {
        let ev = Evaluator::new();
        let fsp = FiniteSizeParams::new(1e8, 5e5).unwrap();
        for (protocol, p) in [
            (ProtocolId::Bb84, 0.0),
            (ProtocolId::SixState, 0.0),
            (ProtocolId::SixState, 0.05),
        ] {
            let r = ev.finite_rate(protocol, 0.05, p, &fsp, &small_budget()).unwrap();
            assert!((r.rate - r.recomputed_rate()).abs() < 1e-12);
            let a = ev.asymptotic_rate(protocol, 0.05, p).unwrap();
            assert!((a.rate - a.recomputed_rate()).abs() < 1e-12);
        }
    }

    #[test]
    fn worst_q_is_interval_endpoint() {
        let ev = Evaluator::new();
        let fsp = FiniteSizeParams::new(1e8, 1e6).unwrap();
        let b = small_budget();
        for &q in &[0.02, 0.05, 0.08] {
            let r = ev.finite_rate(ProtocolId::SixState, q, 0.0, &fsp, &b).unwrap();
            let hi = (q + r.zeta).min(0.5);
            let lo = (q - r.zeta).max(0.0);
            let at_end = (r.worst_q - hi).abs() < 1e-12 || (r.worst_q - lo).abs() < 1e-12;
            assert!(at_end, "worst_q {} not an endpoint of [{lo},{hi}]", r.worst_q);
        }
    }

    #[test]
    fn g_cache_is_transparent() {
        let ev = Evaluator::new();
        let a = ev.g(ProtocolId::Bb84, 0.05, 0.0).unwrap();
        let b = ev.g(ProtocolId::Bb84, 0.05, 0.0).unwrap();
        assert_eq!(a.sxe.to_bits(), b.sxe.to_bits());
        assert_eq!(a.hxy.to_bits(), b.hxy.to_bits());
    }
}
