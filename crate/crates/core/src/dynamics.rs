//! Time evolution of the effective two-qubit master equation and of the exact
//! single-excitation lattice.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64 as C64;

use crate::boundstate::{BoundState, TRUNCATION_XI};
use crate::cmat::{expm_with_loss, CMat};
use crate::error::{Error, Result};
use crate::model::{band_edge_detuning, SqueezedFrame, SystemParams};
use crate::ode::{substeps, Rk4};

pub const P_EA: &str = "P_eA";
pub const P_EB: &str = "P_eB";
pub const FIDELITY_S: &str = "fidelity_S";
pub const TRACE: &str = "trace";
pub const PHOTON_POP: &str = "photon_pop";
pub const VACUUM_POP: &str = "vacuum_pop";
pub const PHOTON_LEAK: &str = "photon_leak";

/// Two-qubit basis indices, labelled (A, B).
pub const GG: usize = 0;
pub const GE: usize = 1;
pub const EG: usize = 2;
pub const EE: usize = 3;
pub const BASIS_LABELS: [&str; 4] = ["gg", "ge", "eg", "ee"];

/// Relative accuracy demanded of the half-step comparison.
pub const RICHARDSON_TOL: f64 = 1e-8;

/// Substeps per output interval beyond which the step is considered underflowed.
const MAX_SUBSTEPS: usize = 1 << 32;

const ZERO: C64 = C64::new(0.0, 0.0);

fn parity_sign(d: i64) -> f64 {
    if d.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState(Vector4<C64>);

impl TwoQubitState {
    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn new(amplitudes: Vector4<C64>) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::param("state", "amplitudes must be finite and nonzero"));
        }
        Ok(Self(amplitudes / C64::new(n, 0.0)))
    }

    pub fn basis(i: usize) -> Self {
        let mut v = Vector4::zeros();
        v[i] = C64::new(1.0, 0.0);
        Self(v)
    }

    /// `(a_g|g⟩ + a_e|e⟩)_A ⊗ (b_g|g⟩ + b_e|e⟩)_B`, normalized.
    pub fn product(a: [C64; 2], b: [C64; 2]) -> Result<Self> {
        Self::new(Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]))
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.0
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }
}

/// `(|eg⟩ − i(−1)^d |ge⟩)/√2`.
pub fn bell_state(d: i64) -> TwoQubitState {
    let mut v = Vector4::zeros();
    v[EG] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[GE] = C64::new(0.0, -parity_sign(d) * FRAC_1_SQRT_2);
    TwoQubitState(v)
}

/// The entangled target reached by a coupling of the given sign.
fn bell_state_for_coupling(g: f64) -> TwoQubitState {
    bell_state(if g < 0.0 { 1 } else { 0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(Matrix4<C64>);

impl DensityMatrix4 {
    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        let rho = Self(m);
        if rho.hermiticity_error() > 1e-12 {
            return Err(Error::param("rho", "not Hermitian"));
        }
        if (rho.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::param("rho", format!("trace {} differs from 1", rho.trace())));
        }
        if rho.min_eigenvalue() < -1e-10 {
            return Err(Error::param("rho", "not positive semidefinite"));
        }
        Ok(rho)
    }

    pub fn from_pure(psi: &TwoQubitState) -> Self {
        Self(psi.0 * psi.0.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * C64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    pub fn population_a(&self) -> f64 {
        (self.0[(EG, EG)] + self.0[(EE, EE)]).re
    }

    pub fn population_b(&self) -> f64 {
        (self.0[(GE, GE)] + self.0[(EE, EE)]).re
    }
}

/// `⟨target|ρ|target⟩`.
pub fn fidelity(rho: &DensityMatrix4, target: &TwoQubitState) -> f64 {
    target.0.dotc(&(rho.0 * target.0)).re.clamp(0.0, 1.0)
}

/// Output times; the initial state is taken to sit at the first entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    step: Option<f64>,
}

impl TimeGrid {
    /// `intervals + 1` equally spaced points on `[0, t_max]`.
    pub fn uniform(t_max: f64, intervals: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::param("t_max", "must be finite and > 0"));
        }
        if intervals == 0 {
            return Err(Error::param("intervals", "must be >= 1"));
        }
        let dt = t_max / intervals as f64;
        Ok(Self { times: (0..=intervals).map(|k| k as f64 * dt).collect(), step: Some(dt) })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::param("times", "empty grid"));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::param("times", "entries must be finite and >= 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        Ok(Self { times, step: None })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing of a uniform grid.
    pub fn step(&self) -> Option<f64> {
        self.step
    }

    /// Interval lengths; a uniform grid reports its nominal step so that
    /// propagators can be reused exactly.
    pub(crate) fn intervals(&self) -> impl Iterator<Item = f64> + '_ {
        let step = self.step;
        self.times.windows(2).map(move |w| step.unwrap_or(w[1] - w[0]))
    }
}

/// Named real observables sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    names: Vec<&'static str>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub(crate) fn new(names: Vec<&'static str>, capacity: usize) -> Self {
        let columns = names.iter().map(|_| Vec::with_capacity(capacity)).collect();
        Self { times: Vec::with_capacity(capacity), names, columns }
    }

    pub(crate) fn push(&mut self, t: f64, row: &[f64]) {
        debug_assert_eq!(row.len(), self.names.len());
        self.times.push(t);
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| *n == name).map(|k| self.columns[k].as_slice())
    }

    pub fn max(&self, name: &str) -> Option<f64> {
        self.column(name).map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Row `i` as `(t, values in column order)`.
    pub fn row(&self, i: usize) -> (f64, Vec<f64>) {
        (self.times[i], self.columns.iter().map(|c| c[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRun {
    /// Columns `P_eA, P_eB, fidelity_S, trace`.
    pub series: TimeSeries,
    pub final_state: DensityMatrix4,
    pub step: f64,
    /// Estimated global error from the half-step comparison.
    pub richardson_error: f64,
}

/// Step bound `min(0.02/‖L‖, t_ent/2000)`.
pub fn effective_step(g_lj: f64, gamma: f64) -> f64 {
    let scale = g_lj.abs().max(gamma);
    let mut h = if scale > 0.0 { 0.02 / scale } else { f64::INFINITY };
    if g_lj != 0.0 {
        h = h.min(PI / (4.0 * g_lj.abs()) / 2000.0);
    }
    h
}

/// Excitation count of each two-qubit basis state.
const EXCITATIONS: [f64; 4] = [0.0, 1.0, 1.0, 2.0];

struct Lindblad {
    g: f64,
    gamma: f64,
}

impl Lindblad {
    /// Column-major `dρ/dt`, written out entry by entry.
    fn rhs(&self, y: &[C64], out: &mut [C64]) {
        let rho = |i: usize, j: usize| y[i + 4 * j];
        let mig = C64::new(0.0, -self.g);
        // H swaps ge and eg.
        let swap = |i: usize| match i {
            GE => Some(EG),
            EG => Some(GE),
            _ => None,
        };
        // σ⁻_A ρ σ⁺_A and σ⁻_B ρ σ⁺_B feed (i, j) from the states one excitation up.
        let up_a = |i: usize| match i {
            GG => Some(EG),
            GE => Some(EE),
            _ => None,
        };
        let up_b = |i: usize| match i {
            GG => Some(GE),
            EG => Some(EE),
            _ => None,
        };
        for j in 0..4 {
            for i in 0..4 {
                let mut d = ZERO;
                if let Some(k) = swap(i) {
                    d += mig * rho(k, j);
                }
                if let Some(k) = swap(j) {
                    d -= mig * rho(i, k);
                }
                if self.gamma > 0.0 {
                    let mut jump = ZERO;
                    if let (Some(a), Some(b)) = (up_a(i), up_a(j)) {
                        jump += rho(a, b);
                    }
                    if let (Some(a), Some(b)) = (up_b(i), up_b(j)) {
                        jump += rho(a, b);
                    }
                    d += (jump - rho(i, j) * (0.5 * (EXCITATIONS[i] + EXCITATIONS[j]))) * self.gamma;
                }
                out[i + 4 * j] = d;
            }
        }
    }
}

fn effective_fixed(g: f64, gamma: f64, rho0: &DensityMatrix4, grid: &TimeGrid, h_max: f64) -> Result<(TimeSeries, Matrix4<C64>)> {
    let lind = Lindblad { g, gamma };
    let target = bell_state_for_coupling(g);
    let mut y: Vec<C64> = rho0.0.as_slice().to_vec();
    let mut rk = Rk4::new(16);
    let mut series = TimeSeries::new(vec![P_EA, P_EB, FIDELITY_S, TRACE], grid.len());
    let record = |series: &mut TimeSeries, t: f64, y: &[C64]| {
        let rho = DensityMatrix4(Matrix4::from_column_slice(y));
        series.push(t, &[rho.population_a(), rho.population_b(), fidelity(&rho, &target), rho.trace()]);
    };
    record(&mut series, grid.times[0], &y);
    for (k, dt) in grid.intervals().enumerate() {
        let n = substeps(dt, h_max);
        if n > MAX_SUBSTEPS {
            return Err(Error::Integrator(format!("step-size underflow: {n} substeps in one output interval")));
        }
        let h = dt / n as f64;
        for _ in 0..n {
            rk.step(&mut y, h, |y, out| lind.rhs(y, out));
        }
        record(&mut series, grid.times[k + 1], &y);
    }
    Ok((series, Matrix4::from_column_slice(&y)))
}

/// Integrates `dρ/dt = −i[H, ρ] + γ Σ_x D[σ⁻_x]ρ` with
/// `H = G_lj (σ⁺_A σ⁻_B + σ⁻_A σ⁺_B)`.
pub fn evolve_effective(g_lj: f64, gamma: f64, rho0: &DensityMatrix4, grid: &TimeGrid) -> Result<EffectiveRun> {
    if !g_lj.is_finite() {
        return Err(Error::param("G_lj", "must be finite"));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", "must be finite and >= 0"));
    }
    let h = effective_step(g_lj, gamma);
    let (coarse, fine) = rayon::join(
        || effective_fixed(g_lj, gamma, rho0, grid, h),
        || effective_fixed(g_lj, gamma, rho0, grid, h / 2.0),
    );
    let (series, last) = coarse?;
    let (fine_series, fine_last) = fine?;
    let mut diff = (last - fine_last).iter().map(|z| z.norm()).fold(0.0, f64::max);
    for name in [P_EA, P_EB, FIDELITY_S] {
        let a = series.column(name).unwrap();
        let b = fine_series.column(name).unwrap();
        diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(diff, f64::max);
    }
    let richardson_error = diff * 16.0 / 15.0;
    if richardson_error > RICHARDSON_TOL {
        return Err(Error::Integrator(format!("half-step check failed: estimated error {richardson_error:.3e}")));
    }
    Ok(EffectiveRun { series, final_state: DensityMatrix4(last), step: h, richardson_error })
}

/// Single-excitation lattice in the squeezed frame, rotating at `Δ_q`.
///
/// Photon at site `n` has index `n + N`; atoms follow the `2N+1` photon sites.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    pub half_size: i64,
    pub atoms: Vec<i64>,
    pub hamiltonian: DMatrix<f64>,
    pub gamma: f64,
    pub kappa_edge: f64,
    /// Band edge relative to the rotating frame.
    pub band_top: f64,
    /// The bound-state cloud reaches within `40ξ` of an open end.
    pub edge_warning: bool,
}

impl LatticeModel {
    pub fn two_atom(params: &SystemParams<f64>, frame: &SqueezedFrame<f64>) -> Result<Self> {
        Self::build(params, frame, vec![params.atom_a, params.atom_b])
    }

    /// Atom A alone.
    pub fn single_atom(params: &SystemParams<f64>, frame: &SqueezedFrame<f64>) -> Result<Self> {
        Self::build(params, frame, vec![params.atom_a])
    }

    fn build(params: &SystemParams<f64>, frame: &SqueezedFrame<f64>, atoms: Vec<i64>) -> Result<Self> {
        params.validate()?;
        let n = params.half_size;
        let sites = (2 * n + 1) as usize;
        let dim = sites + atoms.len();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..sites {
            h[(i, i)] = frame.delta_s - params.delta_q;
            if i + 1 < sites {
                h[(i, i + 1)] = -frame.hopping;
                h[(i + 1, i)] = -frame.hopping;
            }
        }
        for (k, &pos) in atoms.iter().enumerate() {
            let (a, s) = (sites + k, (pos + n) as usize);
            h[(a, s)] += frame.coupling;
            h[(s, a)] += frame.coupling;
        }
        let edge_warning = if frame.coupling == 0.0 {
            false
        } else {
            let big_delta = band_edge_detuning(params.delta_q, frame);
            match BoundState::solve(big_delta, frame) {
                Ok(bs) => atoms.iter().any(|p| TRUNCATION_XI * bs.xi >= (n - p.abs()) as f64),
                Err(_) => true,
            }
        };
        Ok(Self {
            half_size: n,
            atoms,
            hamiltonian: h,
            gamma: params.gamma,
            kappa_edge: params.kappa_edge,
            band_top: frame.band_edge() - params.delta_q,
            edge_warning,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn photon_sites(&self) -> usize {
        (2 * self.half_size + 1) as usize
    }

    pub fn atom_index(&self, k: usize) -> usize {
        self.photon_sites() + k
    }

    pub fn site_index(&self, pos: i64) -> usize {
        (pos + self.half_size) as usize
    }

    /// Separation `|l − j|` of the two atoms, zero for a single atom.
    pub fn separation(&self) -> i64 {
        match self.atoms.as_slice() {
            [a, b] => (b - a).abs(),
            _ => 0,
        }
    }

    fn rates(&self, atoms: bool, edges: bool) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        if atoms {
            for k in 0..self.atoms.len() {
                g[self.atom_index(k)] += self.gamma;
            }
        }
        if edges {
            let last = self.photon_sites() - 1;
            g[0] += self.kappa_edge;
            g[last] += self.kappa_edge;
        }
        g
    }

    /// `−iK` with `K = H − iΓ/2`.
    fn generator(&self) -> CMat {
        let mut a = CMat { re: DMatrix::zeros(self.dim(), self.dim()), im: -&self.hamiltonian };
        for (i, g) in self.rates(true, true).into_iter().enumerate() {
            a.re[(i, i)] = -0.5 * g;
        }
        a
    }
}

/// Amplitudes on the single-excitation sector, a coherent vacuum amplitude and
/// the incoherent vacuum weight accumulated by decay.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
    vacuum_amplitude: C64,
    lost: f64,
}

impl PureState {
    pub fn atom_excited(model: &LatticeModel, atom: usize) -> Result<Self> {
        if atom >= model.atoms.len() {
            return Err(Error::param("atom", format!("model has {} atoms", model.atoms.len())));
        }
        let mut amplitudes = DVector::zeros(model.dim());
        amplitudes[model.atom_index(atom)] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, vacuum_amplitude: ZERO, lost: 0.0 })
    }

    /// Total weight `Σ|a|² + |v|²` must equal 1.
    pub fn new(model: &LatticeModel, amplitudes: DVector<C64>, vacuum_amplitude: C64) -> Result<Self> {
        if amplitudes.len() != model.dim() {
            return Err(Error::param("amplitudes", format!("length {} != dimension {}", amplitudes.len(), model.dim())));
        }
        let w = amplitudes.norm_squared() + vacuum_amplitude.norm_sqr();
        if (w - 1.0).abs() > 1e-12 {
            return Err(Error::param("amplitudes", format!("total weight {w} != 1")));
        }
        Ok(Self { amplitudes, vacuum_amplitude, lost: 0.0 })
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn vacuum_amplitude(&self) -> C64 {
        self.vacuum_amplitude
    }

    pub fn vacuum_population(&self) -> f64 {
        self.vacuum_amplitude.norm_sqr() + self.lost
    }

    pub fn atom_population(&self, model: &LatticeModel, atom: usize) -> f64 {
        self.amplitudes[model.atom_index(atom)].norm_sqr()
    }

    pub fn photon_population(&self, model: &LatticeModel) -> f64 {
        self.amplitudes.rows(0, model.photon_sites()).norm_squared()
    }

    /// Single-excitation weight plus vacuum weight.
    pub fn total_weight(&self) -> f64 {
        self.amplitudes.norm_squared() + self.vacuum_population()
    }

    /// `⟨target|ψ⟩` restricted to the photon-free components.
    pub fn atomic_overlap(&self, model: &LatticeModel, target: &TwoQubitState) -> C64 {
        let t = target.amplitudes();
        let mut s = t[GG].conj() * self.vacuum_amplitude;
        if !model.atoms.is_empty() {
            s += t[EG].conj() * self.amplitudes[model.atom_index(0)];
        }
        if model.atoms.len() > 1 {
            s += t[GE].conj() * self.amplitudes[model.atom_index(1)];
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LatticeStepper {
    /// Exact propagator per distinct output interval.
    #[default]
    Propagator,
    /// Fixed-step RK4 with `h ≤ 0.02/‖K‖`.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRun {
    /// Columns `P_eA, [P_eB, fidelity_S,] trace, photon_pop, vacuum_pop, photon_leak`.
    pub series: TimeSeries,
    pub final_state: PureState,
    pub edge_warning: bool,
    /// `max_t |Σ populations − 1|`.
    pub closure_error: f64,
}

struct IntervalMaps {
    dt: f64,
    u: CMat,
    loss: CMat,
    edge_loss: Option<CMat>,
}

struct Recorder<'a> {
    model: &'a LatticeModel,
    target: TwoQubitState,
    two: bool,
    series: TimeSeries,
    closure: f64,
}

impl<'a> Recorder<'a> {
    fn new(model: &'a LatticeModel, capacity: usize) -> Self {
        let two = model.atoms.len() == 2;
        let names = if two {
            vec![P_EA, P_EB, FIDELITY_S, TRACE, PHOTON_POP, VACUUM_POP, PHOTON_LEAK]
        } else {
            vec![P_EA, TRACE, PHOTON_POP, VACUUM_POP, PHOTON_LEAK]
        };
        let target = bell_state(model.separation());
        Self { model, target, two, series: TimeSeries::new(names, capacity), closure: 0.0 }
    }

    fn record(&mut self, t: f64, psi: &PureState, leak: f64) {
        let m = self.model;
        let pa = psi.atom_population(m, 0);
        let photons = psi.photon_population(m);
        let vac = psi.vacuum_population();
        let mut row = vec![pa];
        let mut total = pa + photons + vac;
        if self.two {
            let pb = psi.atom_population(m, 1);
            total += pb;
            row.push(pb);
            row.push(psi.atomic_overlap(m, &self.target).norm_sqr());
        }
        self.closure = self.closure.max((total - 1.0).abs());
        row.extend([total, photons, vac, leak]);
        self.series.push(t, &row);
    }
}

/// Evolves `psi0` under `K = H − iΓ/2`, assigning the norm deficit to the vacuum.
pub fn evolve_lattice(model: &LatticeModel, psi0: &PureState, grid: &TimeGrid, stepper: LatticeStepper) -> Result<LatticeRun> {
    if psi0.amplitudes.len() != model.dim() {
        return Err(Error::param("psi0", "dimension does not match the lattice model"));
    }
    let mut psi = psi0.clone();
    let mut leak = 0.0;
    let mut rec = Recorder::new(model, grid.len());
    rec.record(grid.times[0], &psi, leak);
    let a = model.generator();
    let all = model.rates(true, true);
    let edges = model.rates(false, true);
    let has_edges = model.kappa_edge > 0.0;

    match stepper {
        LatticeStepper::Propagator => {
            let mut cache: Vec<IntervalMaps> = Vec::new();
            for (k, dt) in grid.intervals().enumerate() {
                let idx = match cache.iter().position(|c| c.dt == dt) {
                    Some(i) => i,
                    None => {
                        let channels: Vec<&[f64]> = if has_edges { vec![&all, &edges] } else { vec![&all] };
                        let (u, mut ws) = expm_with_loss(&a, dt, &channels);
                        let edge_loss = if has_edges { ws.pop() } else { None };
                        let loss = ws.pop().unwrap();
                        cache.push(IntervalMaps { dt, u, loss, edge_loss });
                        cache.len() - 1
                    }
                };
                let maps = &cache[idx];
                psi.lost += maps.loss.quad(&psi.amplitudes);
                if let Some(w) = &maps.edge_loss {
                    leak += w.quad(&psi.amplitudes);
                }
                psi.amplitudes = maps.u.matvec(&psi.amplitudes);
                rec.record(grid.times[k + 1], &psi, leak);
            }
        }
        LatticeStepper::Rk4 => {
            let dim = model.dim();
            let bound = a.norm1();
            let h_max = if bound > 0.0 { 0.02 / bound } else { f64::INFINITY };
            let entries: Vec<(usize, usize, C64)> = (0..dim)
                .flat_map(|i| (0..dim).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, a.get(i, j)))
                .filter(|e| e.2 != ZERO)
                .collect();
            // State followed by the two cumulative loss integrals.
            let mut y: Vec<C64> = psi.amplitudes.iter().copied().chain([ZERO, ZERO]).collect();
            let mut rk = Rk4::new(dim + 2);
            let rhs = |y: &[C64], out: &mut [C64]| {
                out[..dim].iter_mut().for_each(|o| *o = ZERO);
                for &(i, j, v) in &entries {
                    out[i] += v * y[j];
                }
                let (mut l, mut le) = (0.0, 0.0);
                for i in 0..dim {
                    let p = y[i].norm_sqr();
                    l += all[i] * p;
                    le += edges[i] * p;
                }
                out[dim] = C64::new(l, 0.0);
                out[dim + 1] = C64::new(le, 0.0);
            };
            for (k, dt) in grid.intervals().enumerate() {
                let n = substeps(dt, h_max);
                if n > MAX_SUBSTEPS {
                    return Err(Error::Integrator(format!("step-size underflow: {n} substeps in one output interval")));
                }
                let h = dt / n as f64;
                for _ in 0..n {
                    rk.step(&mut y, h, rhs);
                }
                psi.amplitudes.iter_mut().zip(&y).for_each(|(p, v)| *p = *v);
                psi.lost = psi0.lost + y[dim].re;
                leak = y[dim + 1].re;
                rec.record(grid.times[k + 1], &psi, leak);
            }
        }
    }
    Ok(LatticeRun { closure_error: rec.closure, series: rec.series, final_state: psi, edge_warning: model.edge_warning })
}

/// Half the splitting between the two eigenstates with the largest atomic weight.
pub fn exchange_splitting(model: &LatticeModel) -> Result<f64> {
    if model.atoms.len() != 2 {
        return Err(Error::param("atoms", "exchange splitting needs two atoms"));
    }
    let eig = SymmetricEigen::new(model.hamiltonian.clone());
    let (ia, ib) = (model.atom_index(0), model.atom_index(1));
    let mut ranked: Vec<(f64, f64)> = (0..model.dim())
        .map(|k| {
            let v = eig.eigenvectors.column(k);
            (v[ia] * v[ia] + v[ib] * v[ib], eig.eigenvalues[k])
        })
        .collect();
    ranked.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(0.5 * (ranked[0].1 - ranked[1].1).abs())
}

/// First time at which `b` overtakes `a`, linearly interpolated.
pub fn first_crossing(times: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let n = times.len().min(a.len()).min(b.len());
    (1..n).find(|&i| b[i] - a[i] >= 0.0 && b[i - 1] - a[i - 1] < 0.0).map(|i| {
        let (d0, d1) = (b[i - 1] - a[i - 1], b[i] - a[i]);
        times[i - 1] + (times[i] - times[i - 1]) * d0 / (d0 - d1)
    })
}

/// Exchange frequency `Ω` of `P_eB ≈ sin²(Ωt)`, read off the first crossing
/// `P_eA = P_eB` at `t = π/(4Ω)`.
pub fn exchange_frequency(series: &TimeSeries) -> Option<f64> {
    first_crossing(series.times(), series.column(P_EA)?, series.column(P_EB)?).map(|t| PI / (4.0 * t))
}
