//! Brute-force check of the squeezed-frame mapping on a short array with a
//! truncated Fock space per site.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::dynamics::{TimeGrid, TimeSeries, EE, EG, GE, GG, P_EA, P_EB};
use crate::error::{Error, Result};
use crate::krylov::{KrylovOptions, Lanczos};
use crate::model::{squeezed_frame, validate_regime, SqueezedFrame, SystemParams, DEFAULT_RATIO_MIN};
use crate::ode::{substeps, Rk4};
use crate::sparse::SparseOperator;

pub const PARITY: &str = "parity";
pub const NORM: &str = "norm";

/// Largest tolerated squeezed-vacuum weight beyond the cutoff.
pub const TRUNCATION_LIMIT: f64 = 1e-6;
pub const DEFAULT_NNZ_CAP: usize = 2_000_000;
pub const MAX_SITES: usize = 7;
pub const MIN_CUTOFF: usize = 4;

/// Amplitudes `⟨m|sq(r, φ)⟩` for `m = 0..=n_max`.
pub fn squeezed_vacuum_amplitudes(r: f64, phi: f64, n_max: usize) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); n_max + 1];
    psi[0] = C64::new(1.0 / r.cosh().sqrt(), 0.0);
    let ratio = -C64::from_polar(r.tanh(), -phi);
    let mut m = 0;
    while m + 2 <= n_max {
        psi[m + 2] = psi[m] * ratio * (((m + 1) as f64) / ((m + 2) as f64)).sqrt();
        m += 2;
    }
    psi
}

/// `1 − Σ_{m ≤ n_max} |⟨m|sq(r)⟩|²`.
pub fn truncation_error(r: f64, n_max: usize) -> f64 {
    let kept: f64 = squeezed_vacuum_amplitudes(r, 0.0, n_max).iter().map(|z| z.norm_sqr()).sum();
    (1.0 - kept).max(0.0)
}

/// Smallest cutoff `≥ MIN_CUTOFF` meeting `limit` at squeezing `r`.
pub fn min_cutoff(r: f64, limit: f64) -> usize {
    (MIN_CUTOFF..).find(|&n| truncation_error(r, n) < limit).unwrap()
}

/// Weight of `β†|sq(r)⟩` above `n_max`, the state left behind by one emitted
/// quasiparticle.
pub fn quasiparticle_truncation_error(r: f64, n_max: usize) -> f64 {
    let psi = squeezed_vacuum_amplitudes(r, 0.0, n_max + 80);
    let (c, sh) = (r.cosh(), r.sinh());
    (n_max + 1..n_max + 79)
        .map(|n| (c * (n as f64).sqrt() * psi[n - 1] + sh * ((n + 1) as f64).sqrt() * psi[n + 1]).norm_sqr())
        .sum()
}

/// Smallest cutoff holding both the vacuum and the one-quasiparticle
/// truncation below `limit`.
pub fn recommended_cutoff(r: f64, limit: f64) -> usize {
    (MIN_CUTOFF..)
        .find(|&n| truncation_error(r, n) < limit && quasiparticle_truncation_error(r, n) < limit)
        .unwrap()
}

/// Two atoms times `n_sites` truncated oscillators. Basis index is
/// `atoms + 4·Σ_s n_s (n_max+1)^s` with the atomic index as in the two-qubit basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_sites: usize,
    pub n_max: usize,
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        4 * (self.n_max + 1).pow(self.n_sites as u32)
    }

    /// Atomic index and site occupations of basis state `idx`.
    pub fn decode(&self, idx: usize) -> (usize, Vec<usize>) {
        let base = self.n_max + 1;
        let mut p = idx / 4;
        let occ = (0..self.n_sites)
            .map(|_| {
                let n = p % base;
                p /= base;
                n
            })
            .collect();
        (idx % 4, occ)
    }

    pub fn encode(&self, atoms: usize, occ: &[usize]) -> usize {
        let base = self.n_max + 1;
        4 * occ.iter().rev().fold(0, |acc, &n| acc * base + n) + atoms
    }

    pub fn excitations(&self, idx: usize) -> usize {
        let (a, occ) = self.decode(idx);
        let atoms = match a {
            GG => 0,
            GE | EG => 1,
            _ => 2,
        };
        atoms + occ.iter().sum::<usize>()
    }

    /// Diagonal of `(−1)^{N_exc}`.
    pub fn parity_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| if self.excitations(i).is_multiple_of(2) { 1.0 } else { -1.0 }).collect()
    }

    /// Diagonal of the total excitation number.
    pub fn number_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.excitations(i) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FockStepper {
    #[default]
    Krylov,
    /// Fixed-step RK4 with `h ≤ 0.02/‖H‖`.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockConfig {
    pub n_sites: usize,
    pub n_max: usize,
    pub r_target: f64,
    pub t_max: f64,
    pub dt: f64,
    pub atom_a: usize,
    /// `None` leaves atom B decoupled.
    pub atom_b: Option<usize>,
    pub nnz_cap: usize,
    pub stepper: FockStepper,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            n_sites: 3,
            n_max: 10,
            r_target: 0.3,
            t_max: 3.0,
            dt: 0.01,
            atom_a: 1,
            atom_b: Some(2),
            nnz_cap: DEFAULT_NNZ_CAP,
            stepper: FockStepper::Krylov,
        }
    }
}

impl FockConfig {
    pub fn space(&self) -> FockSpace {
        FockSpace { n_sites: self.n_sites, n_max: self.n_max }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_SITES).contains(&self.n_sites) {
            return Err(Error::param("n_sites", format!("must lie in 1..={MAX_SITES}")));
        }
        if self.n_max < MIN_CUTOFF {
            return Err(Error::param("n_max", format!("must be >= {MIN_CUTOFF}")));
        }
        if !(self.r_target >= 0.0) || !self.r_target.is_finite() {
            return Err(Error::param("r_target", "must be finite and >= 0"));
        }
        let error = truncation_error(self.r_target, self.n_max);
        if error >= TRUNCATION_LIMIT {
            return Err(Error::Truncation { r: self.r_target, n_max: self.n_max, error, limit: TRUNCATION_LIMIT });
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::param("t_max", "must be finite and > 0"));
        }
        if !(self.dt > 0.0) || self.dt > self.t_max {
            return Err(Error::param("dt", "must lie in (0, t_max]"));
        }
        if self.atom_a >= self.n_sites || self.atom_b.is_some_and(|b| b >= self.n_sites) {
            return Err(Error::param("atom sites", format!("must be < n_sites = {}", self.n_sites)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.t_max, (self.t_max / self.dt).round().max(1.0) as usize)
    }
}

/// Lab-frame driven array with two atoms, rotating at the pump frequency:
/// `Σ Δ_a a†a + η(a†² e^{−iφ} + h.c.) − J Σ (a†_n a_{n+1} + h.c.) + Δ_q Σ σ⁺σ⁻ + G Σ (a† σ⁻ + h.c.)`.
pub fn build_full_hamiltonian(params: &SystemParams<f64>, config: &FockConfig) -> Result<SparseOperator> {
    config.validate()?;
    let space = config.space();
    let dim = space.dim();
    let drive = C64::from_polar(params.eta, -params.phi);
    let mut entries = Vec::new();
    let mut atoms: Vec<(usize, usize)> = vec![(EG, config.atom_a)];
    if let Some(b) = config.atom_b {
        atoms.push((GE, b));
    }
    for col in 0..dim {
        let (a, occ) = space.decode(col);
        let mut diag = params.delta_a * occ.iter().sum::<usize>() as f64;
        diag += params.delta_q * atoms.iter().filter(|(bit, _)| a & bit != 0).count() as f64;
        if diag != 0.0 {
            entries.push((col, col, C64::new(diag, 0.0)));
        }
        let mut n = occ.clone();
        for s in 0..space.n_sites {
            let k = n[s];
            if k + 2 <= space.n_max {
                n[s] = k + 2;
                let amp = drive * (((k + 1) * (k + 2)) as f64).sqrt();
                entries.push((space.encode(a, &n), col, amp));
            }
            if k >= 2 {
                n[s] = k - 2;
                entries.push((space.encode(a, &n), col, drive.conj() * ((k * (k - 1)) as f64).sqrt()));
            }
            n[s] = k;
        }
        for s in 0..space.n_sites.saturating_sub(1) {
            let (k0, k1) = (n[s], n[s + 1]);
            if k1 > 0 && k0 < space.n_max {
                n[s] = k0 + 1;
                n[s + 1] = k1 - 1;
                entries.push((space.encode(a, &n), col, C64::new(-params.hopping * ((k1 * (k0 + 1)) as f64).sqrt(), 0.0)));
                n[s] = k0;
                n[s + 1] = k1;
            }
            if k0 > 0 && k1 < space.n_max {
                n[s] = k0 - 1;
                n[s + 1] = k1 + 1;
                entries.push((space.encode(a, &n), col, C64::new(-params.hopping * ((k0 * (k1 + 1)) as f64).sqrt(), 0.0)));
                n[s] = k0;
                n[s + 1] = k1;
            }
        }
        for &(bit, s) in &atoms {
            let k = n[s];
            if a & bit != 0 && k < space.n_max {
                n[s] = k + 1;
                entries.push((space.encode(a & !bit, &n), col, C64::new(params.coupling * ((k + 1) as f64).sqrt(), 0.0)));
                n[s] = k;
            }
            if a & bit == 0 && k > 0 {
                n[s] = k - 1;
                entries.push((space.encode(a | bit, &n), col, C64::new(params.coupling * (k as f64).sqrt(), 0.0)));
                n[s] = k;
            }
        }
    }
    SparseOperator::from_triplets(dim, entries, config.nnz_cap)
}

/// State vector over a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub space: FockSpace,
    pub amplitudes: Vec<C64>,
}

impl FockState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Replaces the atomic factor of a product state in `gg` by basis state `atoms`.
    pub fn with_atoms(mut self, atoms: usize) -> Self {
        for p in 0..self.amplitudes.len() / 4 {
            let v = self.amplitudes[4 * p];
            for a in 0..4 {
                self.amplitudes[4 * p + a] = if a == atoms { v } else { C64::new(0.0, 0.0) };
            }
        }
        self
    }

    /// `⟨n_s⟩` for site `s`.
    pub fn mean_photons(&self, s: usize) -> f64 {
        self.amplitudes.iter().enumerate().map(|(i, z)| z.norm_sqr() * self.space.decode(i).1[s] as f64).sum()
    }

    pub fn atom_populations(&self) -> (f64, f64) {
        let mut pa = 0.0;
        let mut pb = 0.0;
        for (i, z) in self.amplitudes.iter().enumerate() {
            let p = z.norm_sqr();
            match i % 4 {
                EG => pa += p,
                GE => pb += p,
                EE => {
                    pa += p;
                    pb += p;
                }
                _ => {}
            }
        }
        (pa, pb)
    }

    /// `‖β_s ψ‖` with `β = a cosh r + a† e^{−iφ} sinh r` on site `s`.
    pub fn bogoliubov_residual(&self, s: usize, r: f64, phi: f64) -> f64 {
        let (c, sh) = (r.cosh(), C64::from_polar(r.sinh(), -phi));
        let mut out = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        for (i, z) in self.amplitudes.iter().enumerate() {
            let (a, mut occ) = self.space.decode(i);
            let k = occ[s];
            if k > 0 {
                occ[s] = k - 1;
                out[self.space.encode(a, &occ)] += z * c * (k as f64).sqrt();
            }
            if k < self.space.n_max {
                occ[s] = k + 1;
                out[self.space.encode(a, &occ)] += z * sh * ((k + 1) as f64).sqrt();
            }
        }
        out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Product of single-site squeezed vacua with both atoms in the ground state,
/// renormalized after truncation.
pub fn squeezed_vacuum_product(r: f64, phi: f64, config: &FockConfig) -> Result<FockState> {
    let cfg = FockConfig { r_target: r, ..config.clone() };
    cfg.validate()?;
    let space = cfg.space();
    let single = squeezed_vacuum_amplitudes(r, phi, space.n_max);
    let per_site: f64 = single.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let single: Vec<C64> = single.iter().map(|z| z / per_site).collect();
    let mut amplitudes = vec![C64::new(0.0, 0.0); space.dim()];
    for p in 0..space.dim() / 4 {
        let (_, occ) = space.decode(4 * p);
        amplitudes[4 * p] = occ.iter().map(|&n| single[n]).product();
    }
    Ok(FockState { space, amplitudes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockRun {
    /// Columns `P_eA, P_eB, parity, norm`.
    pub series: TimeSeries,
    pub final_state: FockState,
}

/// Unitary evolution of `psi0` under the sparse Hamiltonian `h`.
pub fn full_model_evolve(h: &SparseOperator, psi0: &FockState, grid: &TimeGrid, stepper: FockStepper) -> Result<FockRun> {
    if h.dim() != psi0.amplitudes.len() {
        return Err(Error::param("psi0", "dimension does not match the operator"));
    }
    if (psi0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::param("psi0", "must be normalized"));
    }
    let parity = psi0.space.parity_diagonal();
    let mut psi = psi0.clone();
    let mut series = TimeSeries::new(vec![P_EA, P_EB, PARITY, NORM], grid.len());
    let record = |series: &mut TimeSeries, t: f64, psi: &FockState| {
        let (pa, pb) = psi.atom_populations();
        let par: f64 = psi.amplitudes.iter().zip(&parity).map(|(z, p)| z.norm_sqr() * p).sum();
        series.push(t, &[pa, pb, par, psi.norm()]);
    };
    record(&mut series, grid.times()[0], &psi);
    match stepper {
        FockStepper::Krylov => {
            let mut lz = Lanczos::new(h.dim(), KrylovOptions::default());
            for (k, dt) in grid.intervals().enumerate() {
                lz.propagate(h, &mut psi.amplitudes, dt)?;
                record(&mut series, grid.times()[k + 1], &psi);
            }
        }
        FockStepper::Rk4 => {
            let bound = h.norm_bound();
            let h_max = if bound > 0.0 { 0.02 / bound } else { f64::INFINITY };
            let mut rk = Rk4::new(h.dim());
            let mi = C64::new(0.0, -1.0);
            for (k, dt) in grid.intervals().enumerate() {
                let n = substeps(dt, h_max);
                let step = dt / n as f64;
                for _ in 0..n {
                    rk.step(&mut psi.amplitudes, step, |y, out| {
                        h.matvec(y, out);
                        out.iter_mut().for_each(|z| *z *= mi);
                    });
                }
                record(&mut series, grid.times()[k + 1], &psi);
            }
        }
    }
    Ok(FockRun { series, final_state: psi })
}

/// Atom-A population under the number-conserving squeezed-frame model on the
/// same short array, starting from atom A excited in the frame vacuum.
pub fn frame_model_population(frame: &SqueezedFrame<f64>, delta_q: f64, config: &FockConfig, grid: &TimeGrid) -> Vec<f64> {
    let sites = config.n_sites;
    let mut atoms = vec![config.atom_a];
    atoms.extend(config.atom_b);
    let dim = sites + atoms.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..sites {
        h[(i, i)] = frame.delta_s;
        if i + 1 < sites {
            h[(i, i + 1)] = -frame.hopping;
            h[(i + 1, i)] = -frame.hopping;
        }
    }
    for (k, &s) in atoms.iter().enumerate() {
        h[(sites + k, sites + k)] = delta_q;
        h[(sites + k, s)] = frame.coupling;
        h[(s, sites + k)] = frame.coupling;
    }
    let eig = SymmetricEigen::new(h);
    // Overlap of each eigenvector with atom A.
    let w: Vec<f64> = (0..dim).map(|k| eig.eigenvectors[(sites, k)]).collect();
    grid.times()
        .iter()
        .map(|&t| {
            let amp: C64 = (0..dim)
                .map(|k| C64::from_polar(w[k] * eig.eigenvectors[(sites, k)], -eig.eigenvalues[k] * t))
                .sum();
            amp.norm_sqr()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub r: f64,
    /// `2Δ_s/𝒥`.
    pub ratio1: f64,
    /// `(Δ_s + Δ_q)/𝒢`.
    pub ratio2: f64,
    pub n_sites: usize,
    pub n_max: usize,
    /// `max_t |P_eA(full) − P_eA(frame)|`.
    pub max_dev: f64,
    pub regime_ok: bool,
    /// Largest parity and norm excursions of the full run.
    pub parity_drift: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonOptions {
    pub ratio_min: f64,
    /// Run even when the regime check fails.
    pub force: bool,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self { ratio_min: DEFAULT_RATIO_MIN, force: false }
    }
}

/// Compares atom-A dynamics of the full driven array against the squeezed-frame
/// model, starting from the squeezed vacuum with atom A excited.
pub fn frame_comparison(params: &SystemParams<f64>, config: &FockConfig, opts: ComparisonOptions) -> Result<DeviationReport> {
    params.validate()?;
    let frame = squeezed_frame(params)?;
    if (frame.r - config.r_target).abs() > 1e-9 {
        return Err(Error::param("r_target", format!("{} does not match the drive (r = {})", config.r_target, frame.r)));
    }
    let regime = validate_regime(&frame, params.delta_q, opts.ratio_min);
    if !regime.passed() && !opts.force {
        return Err(Error::RegimeViolated(format!(
            "2*delta_s/J' = {:.4}, (delta_s+delta_q)/G' = {:.4}, need > {}",
            regime.hopping_ratio, regime.coupling_ratio, opts.ratio_min
        )));
    }
    let grid = config.grid()?;
    let h = build_full_hamiltonian(params, config)?;
    let psi0 = squeezed_vacuum_product(frame.r, params.phi, config)?.with_atoms(EG);
    let full = full_model_evolve(&h, &psi0, &grid, config.stepper)?;
    let reference = frame_model_population(&frame, params.delta_q, config, &grid);
    let pa = full.series.column(P_EA).unwrap();
    let max_dev = pa.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let drift = |name: &str| {
        let c = full.series.column(name).unwrap();
        c.iter().map(|v| (v - c[0]).abs()).fold(0.0, f64::max)
    };
    Ok(DeviationReport {
        r: frame.r,
        ratio1: regime.hopping_ratio,
        ratio2: regime.coupling_ratio,
        n_sites: config.n_sites,
        n_max: config.n_max,
        max_dev,
        regime_ok: regime.passed(),
        parity_drift: drift(PARITY),
        norm_drift: drift(NORM),
    })
}
