//! Photon-mediated coupling between two atoms in the dispersive regime.
//!
//! Eliminating the squeezed photons leaves an exchange Hamiltonian
//! `G_lj (σ₊^A σ₋^B + h.c.)` with
//! `G_lj = (−1)^d 𝒢_e′² / (2Δ) · e^{−d/ξ′}`, where `ξ′` and `𝒢_e′` are the
//! bound-state localization length and effective coupling evaluated at `δ = Δ`.

use rayon::prelude::*;

use crate::boundstate::{effective_jc, localization_length, solve_delta};
use crate::error::{Error, Result};
use crate::model::SqueezedFrame;
use crate::scalar::Real;

/// Coupling of two atoms a distance `d` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveCoupling<T> {
    /// Signed coupling `G_lj`.
    pub g_lj: T,
    pub separation: i64,
    pub xi_prime: T,
    pub g_e_prime: T,
}

fn parity_sign<T: Real>(d: i64) -> T {
    if d.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

fn coupling_from<T: Real>(big_delta: T, g_e: T, xi: T, d: i64) -> T {
    let d_f = T::from_index(d.abs());
    parity_sign::<T>(d) * g_e * g_e / (T::lit(2.0) * big_delta) * (-d_f / xi).exp()
}

/// `G_lj` with `ξ′ = 1/arccosh(1 + Δ/2𝒥)` and `𝒢_e′ = √2𝒢/(1 + 4𝒥/Δ)^{1/4}`.
pub fn atom_atom_coupling<T: Real>(big_delta: T, coupling: T, hopping: T, d: i64) -> Result<DispersiveCoupling<T>> {
    if !(big_delta > T::zero()) {
        return Err(Error::NotDispersive(big_delta.to_f64().unwrap_or(f64::NAN)));
    }
    if d < 0 {
        return Err(Error::param("d", "separation must be >= 0"));
    }
    let xi_prime = localization_length(big_delta, hopping);
    let g_e_prime = effective_jc(big_delta, big_delta, coupling, hopping).g_e;
    Ok(DispersiveCoupling {
        g_lj: coupling_from(big_delta, g_e_prime, xi_prime, d),
        separation: d,
        xi_prime,
        g_e_prime,
    })
}

/// Same as [`atom_atom_coupling`], but with `ξ` and `𝒢_e` taken at the solved
/// bound-state detuning `δ` instead of `δ = Δ`. Returns the coupling and `δ`.
pub fn atom_atom_coupling_exact<T: Real>(
    big_delta: T,
    coupling: T,
    hopping: T,
    d: i64,
) -> Result<(DispersiveCoupling<T>, T)> {
    if !(big_delta > T::zero()) {
        return Err(Error::NotDispersive(big_delta.to_f64().unwrap_or(f64::NAN)));
    }
    if d < 0 {
        return Err(Error::param("d", "separation must be >= 0"));
    }
    let delta = solve_delta(big_delta, coupling, hopping)?;
    let xi = localization_length(delta, hopping);
    let g_e = effective_jc(delta, big_delta, coupling, hopping).g_e;
    let c = DispersiveCoupling {
        g_lj: coupling_from(big_delta, g_e, xi, d),
        separation: d,
        xi_prime: xi,
        g_e_prime: g_e,
    };
    Ok((c, delta))
}

/// `C = G_lj² / γ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cooperativity<T> {
    Finite(T),
    /// Decay-free atoms.
    Infinite,
}

impl<T: Real> Cooperativity<T> {
    pub fn value(&self) -> T {
        match *self {
            Self::Finite(c) => c,
            Self::Infinite => T::infinity(),
        }
    }
}

pub fn cooperativity<T: Real>(g_lj: T, gamma: T) -> Result<Cooperativity<T>> {
    if !(gamma >= T::zero()) {
        return Err(Error::param("gamma", "must be >= 0"));
    }
    if gamma == T::zero() {
        return Ok(Cooperativity::Infinite);
    }
    let ratio = g_lj / gamma;
    Ok(Cooperativity::Finite(ratio * ratio))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolTimes<T> {
    /// `π/(4|G_lj|)`: half exchange, maximally entangled state.
    pub entangle: T,
    /// `π/(2|G_lj|)`: full excitation transfer.
    pub transfer: T,
}

pub fn protocol_times<T: Real>(g_lj: T) -> Result<ProtocolTimes<T>> {
    if g_lj == T::zero() || !g_lj.is_finite() {
        return Err(Error::ZeroCoupling);
    }
    let entangle = T::FRAC_PI_4() / g_lj.abs();
    Ok(ProtocolTimes { entangle, transfer: entangle + entangle })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoupling<T> {
    pub g_lj: T,
    pub separation: i64,
    pub xi_prime: T,
    pub g_e_prime: T,
    pub cooperativity: Cooperativity<T>,
    pub times: ProtocolTimes<T>,
}

impl<T: Real> EffectiveCoupling<T> {
    pub fn new(big_delta: T, frame: &SqueezedFrame<T>, d: i64, gamma: T) -> Result<Self> {
        let c = atom_atom_coupling(big_delta, frame.coupling, frame.hopping, d)?;
        Ok(Self {
            g_lj: c.g_lj,
            separation: d,
            xi_prime: c.xi_prime,
            g_e_prime: c.g_e_prime,
            cooperativity: cooperativity(c.g_lj, gamma)?,
            times: protocol_times(c.g_lj)?,
        })
    }
}

/// Which localization length and effective coupling enter the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingVariant {
    /// `ξ′`, `𝒢_e′` at `δ = Δ`.
    #[default]
    Dispersive,
    /// `ξ`, `𝒢_e` at the solved `δ`.
    ExactDelta,
}

/// Grid of squeezing values and separations at fixed `Δ` above the band edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid<T> {
    pub squeezing: Vec<T>,
    pub separations: Vec<i64>,
    /// Detuning `Δ` above the band edge, held fixed as `r` varies.
    pub big_delta: T,
    /// Bare hopping `J`.
    pub hopping: T,
    /// Bare coupling `G`.
    pub coupling: T,
    pub gamma: T,
    pub variant: CouplingVariant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowValues<T> {
    pub g_lj: T,
    pub cooperativity: Cooperativity<T>,
    pub xi_prime: T,
    pub g_e_prime: T,
    pub delta_exact: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub r: T,
    pub d: i64,
    pub outcome: Result<RowValues<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDiagnostics<T> {
    /// Per separation: is `|G_lj|` strictly increasing along the sorted `r` values?
    pub increasing_in_r: Vec<(i64, bool)>,
    /// Per `r`: largest deviation of the consecutive-`d` log slope from `−1/ξ′`.
    pub log_slope_error: Vec<(T, T)>,
    /// Per separation: consecutive `r` values between which `C` crosses 1.
    pub cooperativity_crossings: Vec<(i64, T, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable<T> {
    /// Rows in grid order: `r` outer, `d` inner.
    pub rows: Vec<SweepRow<T>>,
    pub diagnostics: SweepDiagnostics<T>,
}

fn sweep_point<T: Real>(grid: &SweepGrid<T>, r: T, d: i64) -> Result<RowValues<T>> {
    if !r.is_finite() || r < T::zero() {
        return Err(Error::param("r", "must be finite and >= 0"));
    }
    // Δ_s drops out of everything at fixed Δ above the band edge
    let frame = SqueezedFrame::from_squeezing(r, T::one(), grid.hopping, grid.coupling);
    let (c, delta_exact) = match grid.variant {
        CouplingVariant::Dispersive => (atom_atom_coupling(grid.big_delta, frame.coupling, frame.hopping, d)?, None),
        CouplingVariant::ExactDelta => {
            let (c, delta) = atom_atom_coupling_exact(grid.big_delta, frame.coupling, frame.hopping, d)?;
            (c, Some(delta))
        }
    };
    Ok(RowValues {
        g_lj: c.g_lj,
        cooperativity: cooperativity(c.g_lj, grid.gamma)?,
        xi_prime: c.xi_prime,
        g_e_prime: c.g_e_prime,
        delta_exact,
    })
}

pub fn coupling_sweep<T: Real>(grid: &SweepGrid<T>) -> CouplingTable<T> {
    let points: Vec<(T, i64)> = grid
        .squeezing
        .iter()
        .flat_map(|&r| grid.separations.iter().map(move |&d| (r, d)))
        .collect();
    let rows: Vec<SweepRow<T>> = points
        .par_iter()
        .map(|&(r, d)| SweepRow { r, d, outcome: sweep_point(grid, r, d) })
        .collect();
    let diagnostics = diagnose(&rows, grid);
    CouplingTable { rows, diagnostics }
}

fn diagnose<T: Real>(rows: &[SweepRow<T>], grid: &SweepGrid<T>) -> SweepDiagnostics<T> {
    let ok = |r: &SweepRow<T>| r.outcome.as_ref().ok().copied();

    let mut seps = grid.separations.clone();
    seps.sort_unstable();
    seps.dedup();
    let mut increasing_in_r = Vec::new();
    let mut cooperativity_crossings = Vec::new();
    for &d in &seps {
        let mut pts: Vec<(T, RowValues<T>)> =
            rows.iter().filter(|r| r.d == d).filter_map(|r| ok(r).map(|v| (r.r, v))).collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let inc = pts.windows(2).all(|w| w[1].1.g_lj.abs() > w[0].1.g_lj.abs() || w[1].0 == w[0].0);
        increasing_in_r.push((d, inc));
        for w in pts.windows(2) {
            let (a, b) = (w[0].1.cooperativity.value(), w[1].1.cooperativity.value());
            if (a - T::one()) * (b - T::one()) <= T::zero() && a != b {
                cooperativity_crossings.push((d, w[0].0, w[1].0));
            }
        }
    }

    let mut log_slope_error = Vec::new();
    for &r in &grid.squeezing {
        let mut pts: Vec<(i64, RowValues<T>)> =
            rows.iter().filter(|row| row.r == r).filter_map(|row| ok(row).map(|v| (row.d, v))).collect();
        pts.sort_by_key(|p| p.0);
        pts.dedup_by_key(|p| p.0);
        let mut worst = T::zero();
        for w in pts.windows(2) {
            let dd = T::from_index(w[1].0 - w[0].0);
            let slope = (w[1].1.g_lj.abs().ln() - w[0].1.g_lj.abs().ln()) / dd;
            worst = worst.max((slope + T::one() / w[0].1.xi_prime).abs());
        }
        log_slope_error.push((r, worst));
    }

    SweepDiagnostics { increasing_in_r, log_slope_error, cooperativity_crossings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // direct evaluation of the closed form at the r = 0, d = 6 point, no shared helpers
    fn g_lj_closed(r: f64, d: i64) -> f64 {
        let jm = 10.0 * (2.0 * r).cosh();
        let gm = r.cosh();
        let xi = 1.0 / (1.0 + 10.0 / (2.0 * jm)).acosh();
        let ge2 = 2.0 * gm * gm / (1.0 + 4.0 * jm / 10.0).sqrt();
        (-1.0f64).powi(d as i32) * ge2 / 20.0 * (-(d as f64) / xi).exp()
    }

    fn reference_coupling(r: f64, d: i64) -> DispersiveCoupling<f64> {
        let f = SqueezedFrame::from_squeezing(r, 1000.0, 10.0, 1.0);
        atom_atom_coupling(10.0, f.coupling, f.hopping, d).unwrap()
    }

    #[test]
    fn weak_drive_point() {
        let c = reference_coupling(0.0, 6);
        assert!((c.g_lj - g_lj_closed(0.0, 6)).abs() < 1e-15);
        assert!((c.g_lj.abs() / 1.38e-4 - 1.0).abs() < 0.02, "{}", c.g_lj);
        assert!(c.g_lj > 0.0);
        let coop = cooperativity(c.g_lj, 1e-3).unwrap().value();
        assert!((coop - 0.0193).abs() < 5e-4, "{coop}");
        assert!((coop / 0.02 - 1.0).abs() < 0.15);
    }

    #[test]
    fn threshold_drive_point() {
        let c = reference_coupling(0.723, 6);
        assert!((c.g_lj.abs() / 1.0e-3 - 1.0).abs() < 0.01, "{}", c.g_lj);
        let coop = cooperativity(c.g_lj, 1e-3).unwrap().value();
        assert!((coop - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_separation() {
        let c = reference_coupling(0.0, 0);
        assert!(c.g_lj > 0.0);
        assert!((c.g_lj - c.g_e_prime.powi(2) / 20.0).abs() < 1e-15);
    }

    #[test]
    fn not_dispersive() {
        assert!(matches!(atom_atom_coupling(0.0_f64, 1.0, 10.0, 3), Err(Error::NotDispersive(_))));
        assert!(matches!(atom_atom_coupling(-1.0_f64, 1.0, 10.0, 3), Err(Error::NotDispersive(_))));
    }

    #[test]
    fn cooperativity_edges() {
        assert_eq!(cooperativity(1e-3_f64, 1e-3).unwrap(), Cooperativity::Finite(1.0));
        assert_eq!(cooperativity(1e-3_f64, 0.0).unwrap(), Cooperativity::Infinite);
        assert!(cooperativity(1e-3_f64, -1.0).is_err());
    }

    #[test]
    fn times() {
        let t = protocol_times(1.0e-3_f64).unwrap();
        assert!((t.entangle - 785.398_163_397).abs() < 1e-6);
        assert!((t.transfer - 1_570.796_326_79).abs() < 1e-6);
        let t = protocol_times(-std::f64::consts::FRAC_PI_4).unwrap();
        assert!((t.entangle - 1.0).abs() < 1e-15);
        assert_eq!(protocol_times(0.0_f64), Err(Error::ZeroCoupling));
    }

    #[test]
    fn effective_coupling_bundle() {
        let f = SqueezedFrame::from_squeezing(0.723, 1000.0, 10.0, 1.0);
        let e = EffectiveCoupling::new(10.0, &f, 6, 1e-3).unwrap();
        assert_eq!(e.times.transfer, 2.0 * e.times.entangle);
        assert!(e.g_lj > 0.0);
        let e = EffectiveCoupling::new(10.0, &f, 5, 1e-3).unwrap();
        assert!(e.g_lj < 0.0);
    }

    fn grid(rs: Vec<f64>, ds: Vec<i64>) -> SweepGrid<f64> {
        SweepGrid {
            squeezing: rs,
            separations: ds,
            big_delta: 10.0,
            hopping: 10.0,
            coupling: 1.0,
            gamma: 1e-3,
            variant: CouplingVariant::Dispersive,
        }
    }

    #[test]
    fn sweep_decay_per_site() {
        for (r, rate) in [(0.0, 0.962_4_f64), (0.723, 0.656_2)] {
            let t = coupling_sweep(&grid(vec![r], (1..=10).collect()));
            assert_eq!(t.rows.len(), 10);
            let vals: Vec<f64> = t.rows.iter().map(|row| row.outcome.as_ref().unwrap().g_lj).collect();
            for w in vals.windows(2) {
                assert!((w[1] / w[0] + (-rate).exp()).abs() < 1e-4, "r={r}");
            }
            assert!(t.diagnostics.log_slope_error[0].1 < 1e-12);
        }
    }

    #[test]
    fn sweep_single_point_matches_direct() {
        let t = coupling_sweep(&grid(vec![0.4], vec![6]));
        let v = t.rows[0].outcome.as_ref().unwrap();
        let f = SqueezedFrame::from_squeezing(0.4, 1.0, 10.0, 1.0);
        assert_eq!(v.g_lj, atom_atom_coupling(10.0, f.coupling, f.hopping, 6).unwrap().g_lj);
        assert!(v.delta_exact.is_none());
    }

    #[test]
    fn sweep_finds_crossing() {
        let rs: Vec<f64> = (0..=150).map(|k| k as f64 * 0.01).collect();
        let t = coupling_sweep(&grid(rs, vec![6]));
        assert_eq!(t.diagnostics.increasing_in_r, vec![(6, true)]);
        let &(_, lo, hi) = t.diagnostics.cooperativity_crossings.first().unwrap();
        assert!(lo <= 0.723 && 0.723 <= hi + 1e-12, "crossing in [{lo}, {hi}]");
    }

    #[test]
    fn sweep_row_errors_are_flagged() {
        let mut g = grid(vec![0.0, -1.0], vec![6]);
        g.big_delta = 10.0;
        let t = coupling_sweep(&g);
        assert!(t.rows[0].outcome.is_ok());
        assert!(t.rows[1].outcome.is_err());
        g.big_delta = -1.0;
        let t = coupling_sweep(&g);
        assert!(t.rows.iter().all(|r| r.outcome.is_err()));
    }

    #[test]
    fn exact_variant_close_to_dispersive() {
        let mut g = grid(vec![0.0, 0.723, 1.2], vec![6]);
        let disp = coupling_sweep(&g);
        g.variant = CouplingVariant::ExactDelta;
        let exact = coupling_sweep(&g);
        for (a, b) in disp.rows.iter().zip(&exact.rows) {
            let (a, b) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
            assert!(b.delta_exact.unwrap() > 10.0);
            assert!((a.g_lj / b.g_lj - 1.0).abs() < 0.1);
        }
    }

    proptest! {
        #[test]
        fn log_linear_in_separation(r in 0.0..2.0_f64, d in 0i64..40) {
            let a = reference_coupling(r, d);
            let b = reference_coupling(r, d + 1);
            let slope = b.g_lj.abs().ln() - a.g_lj.abs().ln();
            prop_assert!((slope + 1.0 / a.xi_prime).abs() < 1e-12);
            prop_assert_eq!(a.g_lj.signum(), if d % 2 == 0 { 1.0 } else { -1.0 });
        }

        #[test]
        fn increasing_in_squeezing(r in 0.0..2.0_f64, dr in 1e-3..0.5_f64, d in 0i64..20) {
            prop_assert!(reference_coupling(r + dr, d).g_lj.abs() > reference_coupling(r, d).g_lj.abs());
        }
    }
}
