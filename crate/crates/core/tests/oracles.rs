use cgl_steer::dynamics::{
    picard_reference, resolve, CGLParams, ControlSchedule, ControlSegment, SolverConfig, SubstepPolicy,
};
use cgl_steer::saturation::{decompose, grow, saturation_chain, FrequencySet, SubspaceBasis};
use cgl_steer::spectral::{GridSpec, SpectralField, TrigPolynomial, Wavevector};
use cgl_steer::synthesis::{null_control_schedule, SynthesisConfig};
use cgl_steer::Complex64;
use proptest::prelude::*;

fn circle_q() -> Vec<TrigPolynomial> {
    let e1 = Wavevector::new([1]);
    vec![
        TrigPolynomial::constant(1, 1.0),
        TrigPolynomial::sin_mode(&e1, 1.0),
        TrigPolynomial::cos_mode(&e1, 1.0),
    ]
}

fn params(sigma: u32) -> CGLParams {
    CGLParams {
        v: 0.5,
        nu: -0.7,
        mu: 1.2,
        sigma,
        r1: 0.8,
        r2: 0.3,
        q: circle_q(),
    }
}

fn fixed(grid: GridSpec, dt: f64) -> SolverConfig {
    let mut cfg = SolverConfig::new(grid, dt);
    cfg.substep_policy = SubstepPolicy::Fixed;
    cfg.min_substeps = 1;
    cfg
}

fn two_segments() -> ControlSchedule {
    ControlSchedule {
        segments: vec![
            ControlSegment::new(0.2, vec![0.5, -0.4, 0.1]).unwrap(),
            ControlSegment::new(0.2, vec![-0.3, 0.0, 0.6]).unwrap(),
        ],
        r1: 0.8,
        r2: 0.3,
    }
}

#[test]
fn superposition_of_modes_follows_dispersion_relation() {
    let grid = GridSpec::new(1, 32).unwrap();
    let mut cfg = SolverConfig::new(grid, 0.05);
    cfg.nonlinearity = false;
    let p = params(1);
    let amps = [(0, 0.7), (3, -0.2), (-5, 0.4), (7, 0.1)];
    let psi0 = SpectralField::from_fn(grid, |x| {
        amps.iter()
            .map(|&(k, a)| Complex64::new(0.0, k as f64 * x[0]).exp() * a)
            .sum()
    });
    let t = 0.3;
    let out = resolve(&psi0, &ControlSchedule::empty(p.r1, p.r2), t, &p, &cfg, &[])
        .unwrap()
        .final_state;
    let exact = SpectralField::from_fn(grid, |x| {
        amps.iter()
            .map(|&(k, a)| {
                let k2 = (k * k) as f64;
                let rate = Complex64::new(p.v - k2, -p.nu * k2);
                (rate * t).exp() * Complex64::new(0.0, k as f64 * x[0]).exp() * a
            })
            .sum()
    });
    assert!(out.sobolev_distance(&exact, 2).unwrap() < 1e-12);
}

#[test]
fn constant_data_quintic_closed_form() {
    let grid = GridSpec::new(2, 4).unwrap();
    let mut p = params(2);
    p.v = 0.0;
    p.q = vec![TrigPolynomial::constant(2, 1.0)];
    let rho0: f64 = 1.5;
    let psi0 = SpectralField::constant(grid, Complex64::new(rho0, 0.0));
    let t = 0.8;
    let out = resolve(
        &psi0,
        &ControlSchedule::empty(1.0, 0.0),
        t,
        &p,
        &SolverConfig::new(grid, 0.01),
        &[],
    )
    .unwrap()
    .final_state;
    let g = 1.0 + 4.0 * rho0.powi(4) * t;
    let z = out.coeff(&Wavevector::zero(2));
    assert!((z.norm() - rho0 * g.powf(-0.25)).abs() < 1e-12);
    assert!((z.arg() + p.mu / 4.0 * g.ln()).abs() < 1e-12);
}

#[test]
fn splitting_is_second_order_with_controls() {
    let grid = GridSpec::new(1, 32).unwrap();
    for sigma in [1, 2] {
        let p = params(sigma);
        let psi0 = SpectralField::from_fn(grid, |x| {
            Complex64::new(0.8 + 0.2 * x[0].cos(), 0.1 * (2.0 * x[0]).sin())
        });
        let schedule = two_segments();
        let solve = |dt| {
            resolve(&psi0, &schedule, 0.4, &p, &fixed(grid, dt), &[])
                .unwrap()
                .final_state
        };
        let (a, b, c) = (solve(0.02), solve(0.01), solve(0.005));
        let order = (a.sobolev_distance(&b, 1).unwrap() / b.sobolev_distance(&c, 1).unwrap()).log2();
        assert!((1.8..2.2).contains(&order), "σ = {sigma}: order {order}");
    }
}

#[test]
fn picard_agrees_across_a_control_switch() {
    let grid = GridSpec::new(1, 32).unwrap();
    let p = params(1);
    let psi0 = SpectralField::from_fn(grid, |x| Complex64::new(0.3 * x[0].sin(), 0.2));
    let cfg = SolverConfig::new(grid, 1e-4);
    let schedule = ControlSchedule {
        segments: vec![
            ControlSegment::new(0.02, vec![0.5, -0.4, 0.1]).unwrap(),
            ControlSegment::new(0.03, vec![-0.3, 0.0, 0.6]).unwrap(),
        ],
        r1: p.r1,
        r2: p.r2,
    };
    let a = resolve(&psi0, &schedule, 0.05, &p, &cfg, &[]).unwrap().final_state;
    let b = picard_reference(&psi0, &schedule, 0.05, &p, &cfg, 50).unwrap();
    assert!(a.sobolev_distance(&b, 1).unwrap() < 1e-8);
}

#[test]
fn chain_dimensions_on_the_circle() {
    let h0 = SubspaceBasis::span(1, &circle_q());
    let chain = saturation_chain(&h0, 3);
    assert_eq!(chain.dimensions(), vec![3, 5, 9, 17]);
    for (j, level) in chain.levels.iter().enumerate() {
        assert_eq!(level.max_degree(), 1 << j);
    }
}

#[test]
fn antidiagonal_mode_appears_at_second_level() {
    let h0 = SubspaceBasis::from_frequencies(&FrequencySet::standard(2));
    let h1 = grow(&h0);
    let h2 = grow(&h1);
    let anti = TrigPolynomial::cos_mode(&Wavevector::new([1, -1]), 1.0);
    assert!(!h1.contains(&anti, 1e-10));
    assert!(h2.contains(&anti, 1e-10));
    assert!(h1.contains(&TrigPolynomial::cos_mode(&Wavevector::new([0, 1]), 1.0), 1e-10));
}

#[test]
fn plane_targets_decompose() {
    let h0 = SubspaceBasis::from_frequencies(&FrequencySet::standard(2));
    let h1 = grow(&h0);
    for (i, b) in h1.basis().iter().enumerate() {
        let theta = b.scale(0.5).add(&h1.basis()[(i + 3) % h1.len()].scale(-0.25));
        let dec = decompose(&theta, &h0, h0.len()).unwrap();
        assert!(dec.residual < 1e-8);
        assert!(dec.reconstruct().sub(&theta).max_coeff() < 1e-8);
        for part in &dec.parts {
            assert!(h0.contains(part, 1e-10));
        }
        assert!(h0.contains(&dec.theta0, 1e-10));
    }
}

#[test]
fn null_control_of_zero_state_is_empty() {
    let grid = GridSpec::new(1, 16).unwrap();
    let psi0 = SpectralField::zeros(grid);
    let nc = null_control_schedule(
        &psi0,
        0.1,
        0.5,
        1.0,
        0.0,
        &params(1),
        &SolverConfig::new(grid, 1e-3),
        &SynthesisConfig::default(),
    )
    .unwrap();
    assert!(nc.schedule.segments.is_empty());
    assert!(nc.converged);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circle_targets_reconstruct(c in prop::collection::vec(-2.0f64..2.0, 5)) {
        let h0 = SubspaceBasis::span(1, &circle_q());
        let h1 = grow(&h0);
        let theta = h1.basis().iter().zip(&c).fold(TrigPolynomial::zero(1), |acc, (b, x)| acc.add(&b.scale(*x)));
        let dec = decompose(&theta, &h0, h0.len()).unwrap();
        prop_assert!(dec.residual < 1e-8);
        let rebuilt = dec.parts.iter().fold(dec.theta0.clone(), |acc, p| acc.add(&p.b_operator()));
        prop_assert!(rebuilt.sub(&theta).max_coeff() < 1e-8);
    }
}
