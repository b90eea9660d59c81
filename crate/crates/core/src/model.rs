//! Physical parameters and the Bogoliubov squeezed-frame mapping.
//!
//! Every rate and energy is expressed in units of the bare atom–cavity
//! coupling `G`, and times in units of `1/G`. The driven cavities are
//! described in the frame rotating at half the pump frequency, so only the
//! detunings `Δ_a = ω_a − ω_s/2` and `Δ_q = ω_q − ω_s/2` appear.
//!
//! Diagonalizing each driven cavity with `a = β cosh r − β† e^{−iφ} sinh r`
//! turns the array into a number-conserving tight-binding model for the
//! squeezed modes `β_n`, with detuning `Δ_s = Δ_a / cosh 2r`, hopping
//! `𝒥 = J cosh 2r` and atom coupling `𝒢 = G cosh r`. None of these depend on
//! the pump phase `φ`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// All physical inputs of the two-atom array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    /// Cavity detuning from half the pump frequency.
    pub delta_a: T,
    /// Atomic detuning from half the pump frequency.
    pub delta_q: T,
    /// Bare nearest-neighbour hopping `J`.
    pub hopping: T,
    /// Two-photon drive amplitude `η`.
    pub eta: T,
    /// Drive phase `φ` in radians.
    pub phi: T,
    /// Bare atom–cavity coupling. Sets the unit of energy, so 1 unless a
    /// decoupled control run is wanted.
    pub coupling: T,
    /// Atomic spontaneous emission rate `γ`.
    pub gamma: T,
    /// Half-array size `N`; sites run over `−N..=N`.
    pub half_size: i64,
    /// Position `j` of atom A.
    pub atom_a: i64,
    /// Position `l` of atom B.
    pub atom_b: i64,
    /// Damping rate of the two edge sites (stand-in for the auxiliary cavities).
    pub kappa_edge: T,
}

impl<T: Real> Default for SystemParams<T> {
    fn default() -> Self {
        Self {
            delta_a: T::lit(1000.0),
            delta_q: T::lit(1030.0),
            hopping: T::lit(10.0),
            eta: T::zero(),
            phi: T::zero(),
            coupling: T::one(),
            gamma: T::lit(1e-3),
            half_size: 100,
            atom_a: -3,
            atom_b: 3,
            kappa_edge: T::zero(),
        }
    }
}

impl<T: Real> SystemParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("delta_a", self.delta_a),
            ("delta_q", self.delta_q),
            ("J", self.hopping),
            ("eta", self.eta),
            ("phi", self.phi),
            ("G", self.coupling),
            ("gamma", self.gamma),
            ("kappa_edge", self.kappa_edge),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.delta_a <= T::zero() {
            return Err(Error::param("delta_a", "must be > 0"));
        }
        if self.eta < T::zero() {
            return Err(Error::param("eta", "must be >= 0"));
        }
        if T::lit(2.0) * self.eta >= self.delta_a {
            return Err(unstable(self.delta_a, self.eta));
        }
        if self.hopping <= T::zero() {
            return Err(Error::param("J", "must be > 0"));
        }
        if self.coupling < T::zero() {
            return Err(Error::param("G", "must be >= 0"));
        }
        if self.gamma < T::zero() {
            return Err(Error::param("gamma", "must be >= 0"));
        }
        if self.kappa_edge < T::zero() {
            return Err(Error::param("kappa_edge", "must be >= 0"));
        }
        if self.half_size < 1 {
            return Err(Error::param("N", "must be >= 1"));
        }
        let n = self.half_size;
        if !(-n <= self.atom_a && self.atom_a <= self.atom_b && self.atom_b <= n) {
            return Err(Error::param("j, l", format!("need -N <= j <= l <= N with N = {n}")));
        }
        Ok(())
    }

    /// Interatomic separation `|l − j|`.
    pub fn separation(&self) -> i64 {
        (self.atom_b - self.atom_a).abs()
    }

    /// Replace `η` by the drive amplitude producing squeezing `r` at the current `Δ_a`.
    pub fn with_squeezing(mut self, r: T) -> Self {
        self.eta = drive_for_squeezing(self.delta_a, r);
        self
    }

    /// Place the atoms a detuning `delta` above the upper band edge of the
    /// squeezed-frame array, i.e. `Δ_q = Δ_s + 2𝒥 + Δ`.
    pub fn with_band_detuning(mut self, delta: T) -> Result<Self> {
        let frame = squeezed_frame(&self)?;
        self.delta_q = frame.band_edge() + delta;
        Ok(self)
    }
}

fn unstable<T: Real>(delta_a: T, eta: T) -> Error {
    Error::UnstableDrive {
        delta_a: delta_a.to_f64().unwrap_or(f64::NAN),
        two_eta: (T::lit(2.0) * eta).to_f64().unwrap_or(f64::NAN),
    }
}

/// Squeezed-frame quantities derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedFrame<T> {
    /// Squeezing parameter `r`.
    pub r: T,
    /// Squeezed-mode detuning `Δ_s`.
    pub delta_s: T,
    /// Enhanced hopping `𝒥`.
    pub hopping: T,
    /// Enhanced atom–photon coupling `𝒢`.
    pub coupling: T,
}

impl<T: Real> SqueezedFrame<T> {
    /// Frame specified directly by its squeezing parameter, bypassing `(Δ_a, η)`.
    pub fn from_squeezing(r: T, delta_a: T, hopping: T, coupling: T) -> Self {
        let two_r = r + r;
        Self {
            r,
            delta_s: delta_a / two_r.cosh(),
            hopping: hopping * two_r.cosh(),
            coupling: coupling * r.cosh(),
        }
    }

    /// Upper band edge `Δ_U = Δ_s + 2𝒥`.
    pub fn band_edge(&self) -> T {
        self.delta_s + T::lit(2.0) * self.hopping
    }
}

/// `r = ¼ ln[(Δ_a + 2η)/(Δ_a − 2η)]`.
pub fn squeezing_parameter<T: Real>(delta_a: T, eta: T) -> Result<T> {
    if !(delta_a > T::zero()) {
        return Err(Error::param("delta_a", "must be > 0"));
    }
    if !(eta >= T::zero()) {
        return Err(Error::param("eta", "must be >= 0"));
    }
    let two_eta = T::lit(2.0) * eta;
    if two_eta >= delta_a {
        return Err(unstable(delta_a, eta));
    }
    // ln((1+x)/(1-x)) = 2 atanh(x), evaluated without cancellation for small x
    let x = two_eta / delta_a;
    Ok(T::lit(0.5) * x.atanh())
}

/// Inverse of [`squeezing_parameter`]: `η = Δ_a tanh(2r) / 2`.
pub fn drive_for_squeezing<T: Real>(delta_a: T, r: T) -> T {
    delta_a * (r + r).tanh() / T::lit(2.0)
}

pub fn squeezed_frame<T: Real>(params: &SystemParams<T>) -> Result<SqueezedFrame<T>> {
    let r = squeezing_parameter(params.delta_a, params.eta)?;
    Ok(SqueezedFrame::from_squeezing(r, params.delta_a, params.hopping, params.coupling))
}

/// Ratios controlling the neglect of pair-creation terms in the squeezed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport<T> {
    /// `2Δ_s / 𝒥`.
    pub hopping_ratio: T,
    /// `(Δ_s + Δ_q) / 𝒢`; infinite for a decoupled atom.
    pub coupling_ratio: T,
    pub ratio_min: T,
    pub hopping_ok: bool,
    pub coupling_ok: bool,
}

impl<T: Real> RegimeReport<T> {
    pub fn passed(&self) -> bool {
        self.hopping_ok && self.coupling_ok
    }
}

pub const DEFAULT_RATIO_MIN: f64 = 10.0;

pub fn validate_regime<T: Real>(frame: &SqueezedFrame<T>, delta_q: T, ratio_min: T) -> RegimeReport<T> {
    let hopping_ratio = T::lit(2.0) * frame.delta_s / frame.hopping;
    let coupling_ratio = if frame.coupling == T::zero() {
        T::infinity()
    } else {
        (frame.delta_s + delta_q) / frame.coupling
    };
    RegimeReport {
        hopping_ratio,
        coupling_ratio,
        ratio_min,
        hopping_ok: hopping_ratio > ratio_min,
        coupling_ok: coupling_ratio > ratio_min,
    }
}

/// Detuning of the atom above the upper band edge, `Δ = Δ_q − Δ_s − 2𝒥`.
pub fn band_edge_detuning<T: Real>(delta_q: T, frame: &SqueezedFrame<T>) -> T {
    delta_q - frame.band_edge()
}
