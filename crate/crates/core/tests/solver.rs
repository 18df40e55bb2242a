//! Light-cone integration against exact solutions, and the diagnostics that
//! judge a run.

use loop_toda::lie_core::{c64, ComplexMatrix};
use loop_toda::sampling::{random_matrix, rng};
use loop_toda::solver::{
    integrate, residual, sine_gordon_reduce, sine_gordon_system, summarize, Grid, InitialData,
    Preset, RealFormTag, RunStatus, SimulationInput, SolverConfig,
};
use loop_toda::toda_builder::{build_periodic_chain, ChainCoupling, FieldState};
use proptest::prelude::*;

fn run(input: &SimulationInput, grid: &Grid) -> loop_toda::solver::FieldHistory {
    let data = input.initial.goursat(&input.system, grid).unwrap();
    integrate(&input.system, &data, None, grid, &SolverConfig::default()).unwrap()
}

#[test]
fn identity_is_a_solution_of_the_periodic_chain() {
    let input = Preset::PeriodicChain.input().unwrap();
    let grid = Grid::square(0.0, 1.0, 16).unwrap();
    let history = run(&input, &grid);
    assert!(history.is_complete());
    let err = history
        .max_error(|_, _| Ok(FieldState::identity(&[1, 1, 1]).gammas))
        .unwrap();
    assert_eq!(err, 0.0);
    assert_eq!(residual(&history, &input.system).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn free_chains_reproduce_the_product_of_their_data(
        seed in any::<u64>(),
        p in 2usize..5,
        r in 1usize..3,
    ) {
        let system = build_periodic_chain(
            p,
            r,
            ChainCoupling::Scaled { plus: [0.0, 0.0], minus: [1.0, 0.5] },
        )
        .unwrap();
        let mut rg = rng(seed);
        let minus: Vec<ComplexMatrix> = (0..p).map(|_| random_matrix(&mut rg, r, r, 0.5)).collect();
        let plus: Vec<ComplexMatrix> = (0..p).map(|_| random_matrix(&mut rg, r, r, 0.5)).collect();
        let input = SimulationInput {
            system,
            initial: InitialData::ExpLinear { base: None, minus: minus.clone(), plus: plus.clone() },
            real_form: RealFormTag::None,
        };
        let grid = Grid::square(0.0, 1.0, 8).unwrap();
        let history = run(&input, &grid);
        prop_assert!(history.is_complete());
        let err = history
            .max_error(|zm, zp| {
                minus
                    .iter()
                    .zip(&plus)
                    .map(|(a, b)| Ok(&b.scale_re(zp).expm()? * &a.scale_re(zm).expm()?))
                    .collect()
            })
            .unwrap();
        prop_assert!(err < 1e-10, "free factorization off by {}", err);
        let summary = summarize(&input, &history).unwrap();
        prop_assert_eq!(summary.oracle.as_deref(), Some("free_factorization"));
    }
}

#[test]
fn residual_detects_a_perturbed_point() {
    let input = Preset::PeriodicChain.input().unwrap();
    let n = 16;
    let h = 1.0 / n as f64;
    let grid = Grid::square(0.0, 1.0, n).unwrap();
    let mut history = run(&input, &grid);
    let delta = 1e-3;
    history.rows[8][8].gammas[0][(0, 0)] += c64(delta, 0.0);
    let r = residual(&history, &input.system).unwrap();
    assert!(
        r >= delta / h,
        "residual {r} misses a perturbation of {delta}"
    );
}

#[test]
fn constant_phase_reduces_to_constant_field() {
    // Γ = exp(iF/2) with F ≡ π is a static solution, since sin π = 0.
    let input = SimulationInput {
        system: sine_gordon_system(c64(0.5, 0.0)).unwrap(),
        initial: InitialData::Constant {
            gammas: Some(vec![ComplexMatrix::scalar(c64(0.0, 1.0))]),
        },
        real_form: RealFormTag::Compact,
    };
    let history = run(&input, &Grid::square(0.0, 1.0, 8).unwrap());
    assert!(history.is_complete());
    let field = sine_gordon_reduce(&history, 1e-10).unwrap();
    for row in &field.values {
        for &f in row {
            assert!((f - std::f64::consts::PI).abs() < 1e-12, "F = {f}");
        }
    }
}

#[test]
fn kink_error_falls_by_four_when_the_step_halves() {
    let input = Preset::SineGordonKink.input().unwrap();
    let errors: Vec<f64> = [0.08, 0.04]
        .iter()
        .map(|&h| {
            let grid = Grid::new([-5.0, 5.0], [-5.0, 5.0], h, -h).unwrap();
            let summary = summarize(&input, &run(&input, &grid)).unwrap();
            assert_eq!(summary.status, RunStatus::Completed);
            summary.oracle_error.unwrap()
        })
        .collect();
    let ratio = errors[0] / errors[1];
    assert!(
        (ratio - 4.0).abs() < 0.3,
        "errors {errors:?}, ratio {ratio}"
    );
}

#[test]
fn singular_constant_data_halts_before_the_first_row() {
    let input = SimulationInput {
        system: build_periodic_chain(2, 1, ChainCoupling::Identity).unwrap(),
        initial: InitialData::Constant {
            gammas: Some(vec![
                ComplexMatrix::scalar(c64(0.0, 0.0)),
                ComplexMatrix::identity(1),
            ]),
        },
        real_form: RealFormTag::None,
    };
    let history = run(&input, &Grid::square(0.0, 1.0, 8).unwrap());
    match history.status {
        RunStatus::BlowUp {
            node, condition, ..
        } => {
            assert_eq!(node, 1);
            assert!(condition.is_none());
        }
        RunStatus::Completed => panic!("singular data integrated"),
    }
}

#[test]
fn simulation_input_json_round_trips() {
    for preset in [
        Preset::SineGordonKink,
        Preset::SinhGordon,
        Preset::PeriodicChain,
        Preset::FreeField,
    ] {
        let input = preset.input().unwrap();
        assert_eq!(SimulationInput::from_json(&input.to_json()).unwrap(), input);
    }
}
