use std::f64::consts::PI;

use qarray::boundstate::{effective_jc, lattice_bound_state, solve_delta};
use qarray::dynamics::*;
use qarray::interaction::EffectiveCoupling;
use qarray::model::{squeezed_frame, SqueezedFrame, SystemParams};

fn array(r: f64, half_size: i64) -> (SystemParams<f64>, SqueezedFrame<f64>) {
    let params = SystemParams { half_size, ..SystemParams::default() }
        .with_squeezing(r)
        .with_band_detuning(10.0)
        .unwrap();
    let frame = squeezed_frame(&params).unwrap();
    (params, frame)
}

fn coupling(frame: &SqueezedFrame<f64>) -> EffectiveCoupling<f64> {
    EffectiveCoupling::new(10.0, frame, 6, 1e-3).unwrap()
}

fn excited_a() -> DensityMatrix4 {
    DensityMatrix4::from_pure(&TwoQubitState::basis(EG))
}

#[test]
fn effective_entangles_at_t_ent_without_decay() {
    for r in [0.0, 0.723, 1.2] {
        let (_, frame) = array(r, 100);
        let g = coupling(&frame);
        let grid = TimeGrid::uniform(g.times.entangle, 100).unwrap();
        let run = evolve_effective(g.g_lj, 0.0, &excited_a(), &grid).unwrap();
        let f = *run.series.column(FIDELITY_S).unwrap().last().unwrap();
        assert!((f - 1.0).abs() < 1e-6, "r = {r}: {f}");
    }
}

#[test]
fn effective_trace_and_hermiticity_over_ten_lifetimes() {
    for r in [0.0, 1.2, 1.5] {
        let (_, frame) = array(r, 100);
        let g = coupling(&frame);
        let grid = TimeGrid::uniform(10.0 / 1e-3, 500).unwrap();
        let run = evolve_effective(g.g_lj, 1e-3, &excited_a(), &grid).unwrap();
        let drift = run.series.column(TRACE).unwrap().iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-9, "r = {r}: {drift}");
        assert!(run.final_state.hermiticity_error() < 1e-10);
        assert!(run.final_state.min_eigenvalue() > -1e-10);
        for name in [P_EA, P_EB] {
            assert!(run.series.column(name).unwrap().iter().all(|p| (-1e-9..=1.0 + 1e-9).contains(p)));
        }
    }
}

#[test]
fn weak_coupling_fails_to_entangle() {
    let (_, frame) = array(0.0, 100);
    let g = coupling(&frame);
    assert!((g.g_lj.abs() - 1.38e-4).abs() / 1.38e-4 < 0.02);
    let grid = TimeGrid::uniform(3.0 * g.times.entangle, 600).unwrap();
    let run = evolve_effective(g.g_lj, 1e-3, &excited_a(), &grid).unwrap();
    assert!(run.series.max(FIDELITY_S).unwrap() < 0.65);
}

#[test]
fn lattice_follows_effective_model_over_one_period() {
    for r in [0.0, 0.723, 1.2] {
        let (params, frame) = array(r, 100);
        let g = coupling(&frame);
        let grid = TimeGrid::uniform(PI / g.g_lj.abs(), 400).unwrap();
        let eff = evolve_effective(g.g_lj, 1e-3, &excited_a(), &grid).unwrap();
        let model = LatticeModel::two_atom(&params, &frame).unwrap();
        let psi = PureState::atom_excited(&model, 0).unwrap();
        let lat = evolve_lattice(&model, &psi, &grid, LatticeStepper::Propagator).unwrap();
        let (a, b) = (eff.series.column(P_EB).unwrap(), lat.series.column(P_EB).unwrap());
        let dev = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev < 0.05, "r = {r}: {dev}");
        assert!(lat.closure_error < 1e-9, "r = {r}: closure {}", lat.closure_error);
        assert!(!lat.edge_warning);
    }
}

#[test]
fn lattice_exchange_frequency_matches_dispersive_coupling() {
    for r in [0.723, 1.2] {
        let (mut params, frame) = array(r, 100);
        params.gamma = 0.0;
        let g = coupling(&frame);
        let grid = TimeGrid::uniform(PI / (1.5 * g.g_lj.abs()), 600).unwrap();
        let model = LatticeModel::two_atom(&params, &frame).unwrap();
        let psi = PureState::atom_excited(&model, 0).unwrap();
        let run = evolve_lattice(&model, &psi, &grid, LatticeStepper::Propagator).unwrap();
        let omega = exchange_frequency(&run.series).unwrap();
        let rel = (omega - g.g_lj.abs()) / g.g_lj.abs();
        assert!(rel.abs() < 0.05, "r = {r}: {rel}");
        let split = exchange_splitting(&model).unwrap();
        assert!((split - omega).abs() / split < 0.01, "r = {r}: {split} vs {omega}");
        assert!(run.closure_error < 1e-9);
        assert!((run.series.column(TRACE).unwrap().last().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn lattice_entangles_at_t_ent_without_decay() {
    let (mut params, frame) = array(0.723, 100);
    params.gamma = 0.0;
    let g = coupling(&frame);
    let grid = TimeGrid::uniform(g.times.entangle, 200).unwrap();
    let model = LatticeModel::two_atom(&params, &frame).unwrap();
    let psi = PureState::atom_excited(&model, 0).unwrap();
    let run = evolve_lattice(&model, &psi, &grid, LatticeStepper::Propagator).unwrap();
    let f = run.series.max(FIDELITY_S).unwrap();
    assert!((f - 1.0).abs() < 0.02, "{f}");
}

#[test]
fn edge_loss_barely_touches_the_atom() {
    for r in [0.0, 0.723] {
        let (mut params, frame) = array(r, 100);
        params.kappa_edge = frame.hopping;
        let model = LatticeModel::single_atom(&params, &frame).unwrap();
        let psi = PureState::atom_excited(&model, 0).unwrap();
        let grid = TimeGrid::uniform(2000.0, 200).unwrap();
        let run = evolve_lattice(&model, &psi, &grid, LatticeStepper::Propagator).unwrap();
        let s = &run.series;
        let (leak, pa, ph) = (s.column(PHOTON_LEAK).unwrap(), s.column(P_EA).unwrap(), s.column(PHOTON_POP).unwrap());
        let (i0, i1) = (100, 200);
        let excited = (i0..=i1).map(|i| pa[i] + ph[i]).sum::<f64>() / (i1 - i0 + 1) as f64;
        let rate = (leak[i1] - leak[i0]) / (s.times()[i1] - s.times()[i0]) / excited;
        assert!(rate < 0.01 * params.gamma, "r = {r}: {rate}");
        assert!(run.closure_error < 1e-9);
    }
}

#[test]
fn resonant_dressed_state_is_split_by_g_e() {
    // Δ_e = Δ + δ/(1 + δ/2𝒥) vanishes between these bracket ends.
    let (j, g) = (10.0_f64, 1.0_f64);
    let delta_e = |big: f64| {
        let d = solve_delta(big, g, j).unwrap();
        effective_jc(d, big, g, j)
    };
    let (mut lo, mut hi) = (-1.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if delta_e(mid).delta_e > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let big = 0.5 * (lo + hi);
    let jc = delta_e(big);
    assert!(jc.delta_e.abs() < 1e-9);

    let params = SystemParams { half_size: 300, atom_a: 0, hopping: j, coupling: g, ..SystemParams::default() }
        .with_band_detuning(big)
        .unwrap();
    let frame = squeezed_frame(&params).unwrap();
    let oracle = lattice_bound_state(&params, &frame).unwrap();
    let shift = oracle.delta - big;
    assert!((shift - jc.g_e).abs() / jc.g_e < 0.01, "{shift} vs {}", jc.g_e);
    assert!((oracle.atomic_weight - 0.5).abs() < 0.02, "{}", oracle.atomic_weight);
}

#[test]
fn boundary_warning_on_small_arrays() {
    let (params, frame) = array(1.2, 40);
    assert!(LatticeModel::two_atom(&params, &frame).unwrap().edge_warning);
}
