//! Single-photon bound state of one atom coupled to the squeezed-frame array.
//!
//! Above the propagating band `[Δ_s − 2𝒥, Δ_s + 2𝒥]` the atom dresses itself
//! with a photon cloud `c_n = (−1)^{|n−j|} e^{−|n−j|/ξ} / √coth(1/ξ)`. Its
//! detuning `δ` above the band edge solves
//! `δ = Δ + 𝒢² / √(δ² + 4𝒥δ)` and fixes `ξ = 1/arccosh(1 + δ/2𝒥)`.
//!
//! [`lattice_bound_state`] diagonalizes the finite open chain and serves as the
//! numerical oracle for the infinite-array closed forms.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{SqueezedFrame, SystemParams};
use crate::scalar::Real;

const FIXED_POINT_CAP: usize = 100;
const BISECTION_CAP: usize = 200;

/// Profiles are evaluated out to this many localization lengths.
pub const TRUNCATION_XI: f64 = 40.0;
/// Hard cap on the number of stored offsets on each side of the atom.
pub const MAX_PROFILE_RADIUS: i64 = 100_000;

/// Real photon amplitudes indexed by site offset `n − j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub offsets: Vec<i64>,
    pub amplitudes: Vec<T>,
}

impl<T: Real> Profile<T> {
    pub fn get(&self, offset: i64) -> Option<T> {
        self.offsets.iter().position(|&o| o == offset).map(|i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, &c| acc + c * c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        self.offsets.iter().copied().zip(self.amplitudes.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Analytic bound state for an atom a detuning `Δ` above the band edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState<T> {
    /// `δ = Δ_BS − Δ_U > 0`.
    pub delta: T,
    /// Absolute eigenfrequency `Δ_BS = Δ_U + δ`.
    pub delta_bs: T,
    /// Localization length in sites.
    pub xi: T,
    /// `c_n` for `|n − j| ≤ 40ξ` (capped at [`MAX_PROFILE_RADIUS`]).
    pub amplitudes: Profile<T>,
    /// Effective Jaynes–Cummings coupling `G_e`.
    pub g_e: T,
    /// Effective atom–photon detuning `Δ_e`.
    pub delta_e: T,
    /// Hybridization angle. There is no closed form, so this is only filled
    /// from an exact-diagonalization run, see [`BoundState::with_oracle`].
    pub theta: Option<T>,
}

impl<T: Real> BoundState<T> {
    pub fn solve(big_delta: T, frame: &SqueezedFrame<T>) -> Result<Self> {
        let delta = solve_delta(big_delta, frame.coupling, frame.hopping)?;
        let xi = localization_length(delta, frame.hopping);
        let radius = profile_radius(xi);
        let amplitudes = wavefunction(delta, frame.hopping, -radius..=radius);
        let jc = effective_jc(delta, big_delta, frame.coupling, frame.hopping);
        Ok(Self {
            delta,
            delta_bs: frame.band_edge() + delta,
            xi,
            amplitudes,
            g_e: jc.g_e,
            delta_e: jc.delta_e,
            theta: None,
        })
    }

    pub fn with_oracle(mut self, oracle: &LatticeBoundState) -> Self {
        self.theta = T::from_f64(oracle.theta);
        self
    }
}

fn profile_radius<T: Real>(xi: T) -> i64 {
    let r = (T::lit(TRUNCATION_XI) * xi).ceil();
    r.to_i64().unwrap_or(MAX_PROFILE_RADIUS).clamp(1, MAX_PROFILE_RADIUS)
}

fn relation_residual<T: Real>(d: T, big_delta: T, g2: T, j: T) -> T {
    d - big_delta - g2 / (d * (d + T::lit(4.0) * j)).sqrt()
}

/// Positive root of `δ = Δ + 𝒢²/√(δ² + 4𝒥δ)`.
///
/// Fixed-point iteration from `max(Δ, 𝒢)`; falls back to bisection on
/// `(max(Δ, 0), Δ + 𝒢²/√(4𝒥 max(Δ, ε)) + 𝒢]` whenever an iterate leaves the
/// positive axis or stalls.
pub fn solve_delta<T: Real>(big_delta: T, coupling: T, hopping: T) -> Result<T> {
    if !(hopping > T::zero()) {
        return Err(Error::param("J_mod", "must be > 0"));
    }
    if !(coupling >= T::zero()) || !big_delta.is_finite() {
        return Err(Error::param("G_mod", "must be >= 0 and finite"));
    }
    let g2 = coupling * coupling;
    if g2 == T::zero() {
        return if big_delta > T::zero() {
            Ok(big_delta)
        } else {
            Err(Error::NoBoundState {
                delta: big_delta.to_f64().unwrap_or(f64::NAN),
                coupling: 0.0,
            })
        };
    }
    let tol = T::solver_tol();
    let four_j = T::lit(4.0) * hopping;
    let accept = |d: T| {
        let res = relation_residual(d, big_delta, g2, hopping).abs();
        // slope of the residual; large only when δ ≪ 𝒥 (atom deep at the band edge)
        let slope = T::one() + g2 * (d + T::lit(2.0) * hopping) / (d * (d + four_j)).powf(T::lit(1.5));
        res <= tol * d.max(T::one()) * slope.max(T::one())
    };

    let mut d = big_delta.max(coupling);
    let mut last_step = T::infinity();
    for _ in 0..FIXED_POINT_CAP {
        let next = big_delta + g2 / (d * (d + four_j)).sqrt();
        if !(next > T::zero()) || !next.is_finite() {
            break;
        }
        let step = (next - d).abs();
        d = next;
        if step <= tol * d.max(T::one()) {
            if accept(d) {
                return Ok(d);
            }
            break;
        }
        if step >= last_step {
            // not contracting
            break;
        }
        last_step = step;
    }

    let eps = T::epsilon().sqrt();
    let mut lo = big_delta.max(T::zero());
    let mut hi = (big_delta + g2 / (four_j * big_delta.max(eps)).sqrt() + coupling).max(coupling);
    let mut expand = 0;
    while relation_residual(hi, big_delta, g2, hopping) < T::zero() {
        hi = hi + hi;
        expand += 1;
        if expand > 64 {
            return Err(Error::NoConvergence {
                iterations: expand,
                residual: f64::NAN,
            });
        }
    }
    let mut mid = T::lit(0.5) * (lo + hi);
    for _ in 0..BISECTION_CAP {
        mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // f(0+) = −∞, so lo = 0 is a valid lower bracket
        if relation_residual(mid, big_delta, g2, hopping) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    if mid > T::zero() && accept(mid) {
        Ok(mid)
    } else {
        Err(Error::NoConvergence {
            iterations: FIXED_POINT_CAP + BISECTION_CAP,
            residual: relation_residual(mid, big_delta, g2, hopping).to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// `ξ = 1/arccosh(1 + δ/2𝒥)`.
pub fn localization_length<T: Real>(delta: T, hopping: T) -> T {
    T::one() / T::acosh1p(delta / (T::lit(2.0) * hopping))
}

/// `c_n` of the normalized photon cloud for each requested offset `n − j`.
pub fn wavefunction<T: Real>(delta: T, hopping: T, offsets: impl IntoIterator<Item = i64>) -> Profile<T> {
    // cosh(1/ξ) = 1 + x, sinh(1/ξ) = √(x(x+2)), e^{−1/ξ} = 1/(cosh + sinh)
    let x = delta / (T::lit(2.0) * hopping);
    let cosh = T::one() + x;
    let sinh = (x * (x + T::lit(2.0))).sqrt();
    let decay = T::one() / (cosh + sinh);
    let norm = (sinh / cosh).sqrt();
    let offsets: Vec<i64> = offsets.into_iter().collect();
    let amplitudes = offsets
        .iter()
        .map(|&n| {
            let m = n.unsigned_abs();
            let sign = if m % 2 == 0 { T::one() } else { -T::one() };
            sign * norm * decay.powi(m.min(i32::MAX as u64) as i32)
        })
        .collect();
    Profile { offsets, amplitudes }
}

/// Effective Jaynes–Cummings parameters of the atom and its photon cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams<T> {
    pub g_e: T,
    pub delta_e: T,
}

/// `G_e = √2 𝒢 / (1 + 4𝒥/δ)^{1/4}`, `Δ_e = Δ + δ/(1 + δ/2𝒥)`.
pub fn effective_jc<T: Real>(delta: T, big_delta: T, coupling: T, hopping: T) -> JcParams<T> {
    let four_j = T::lit(4.0) * hopping;
    JcParams {
        g_e: T::SQRT_2() * coupling / (T::one() + four_j / delta).powf(T::lit(0.25)),
        delta_e: big_delta + delta / (T::one() + delta / (T::lit(2.0) * hopping)),
    }
}

/// Exact bound state of one atom on the finite open-boundary array.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBoundState {
    /// Eigenvalue `Δ_BS` of the single-excitation Hamiltonian.
    pub eigenvalue: f64,
    /// Eigenvalue minus the infinite-array band edge `Δ_U`.
    pub delta: f64,
    /// Atomic weight `cos²θ` of the eigenvector.
    pub atomic_weight: f64,
    pub theta: f64,
    /// Photon part renormalized to unit norm, with `c_j > 0`, indexed by `n − j`.
    pub profile: Profile<f64>,
    /// `40ξ` reaches past the nearer array edge.
    pub edge_warning: bool,
}

/// Diagonalizes the `(2N+2)`-dimensional single-excitation sector for atom A
/// alone (atom B is ignored) and returns the eigenvector above the band with
/// the largest atomic weight.
pub fn lattice_bound_state(params: &SystemParams<f64>, frame: &SqueezedFrame<f64>) -> Result<LatticeBoundState> {
    params.validate()?;
    let n = params.half_size;
    let sites = (2 * n + 1) as usize;
    let dim = sites + 1;
    let atom = sites;
    let site_of = |pos: i64| (pos + n) as usize;
    let edge = frame.band_edge();

    // energies measured from the band edge
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..sites {
        h[(i, i)] = frame.delta_s - edge;
        if i + 1 < sites {
            h[(i, i + 1)] = -frame.hopping;
            h[(i + 1, i)] = -frame.hopping;
        }
    }
    h[(atom, atom)] = params.delta_q - edge;
    let j = site_of(params.atom_a);
    h[(atom, j)] = frame.coupling;
    h[(j, atom)] = frame.coupling;

    let eig = SymmetricEigen::new(h);
    let best = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(k, &e)| (k, e, eig.eigenvectors[(atom, k)].powi(2)))
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .ok_or(Error::BoundStateUnresolved)?;
    let (k, delta, atomic_weight) = best;
    let v = eig.eigenvectors.column(k);

    let photon_weight: f64 = (0..sites).map(|i| v[i] * v[i]).sum();
    if photon_weight == 0.0 && frame.coupling != 0.0 {
        return Err(Error::BoundStateUnresolved);
    }
    let sign = if v[j] < 0.0 { -1.0 } else { 1.0 };
    let scale = if photon_weight > 0.0 { sign / photon_weight.sqrt() } else { 0.0 };
    let offsets: Vec<i64> = (-n..=n).map(|p| p - params.atom_a).collect();
    let amplitudes = (0..sites).map(|i| v[i] * scale).collect();

    let xi = localization_length(delta.max(f64::MIN_POSITIVE), frame.hopping);
    let reach = n - params.atom_a.abs();
    Ok(LatticeBoundState {
        eigenvalue: delta + edge,
        delta,
        atomic_weight,
        theta: atomic_weight.sqrt().min(1.0).acos(),
        profile: Profile { offsets, amplitudes },
        edge_warning: TRUNCATION_XI * xi >= reach as f64,
    })
}

/// Localization length from a least-squares fit of `ln|c_n|` against `|n − j|`
/// over `1 ≤ |n − j| ≤ max_offset`.
pub fn fit_localization_length(profile: &Profile<f64>, max_offset: i64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|&(o, c)| o != 0 && o.abs() <= max_offset && c != 0.0)
        .map(|(o, c)| (o.abs() as f64, c.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -1.0 / slope)
}
