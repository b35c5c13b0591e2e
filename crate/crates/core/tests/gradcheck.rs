mod common;

use common::{adain_deviation, check_case, grad_cases, packs, penalty_gradient_error, LinearCritic};
use matgan_core::tensor::Tensor;
use matgan_core::train::gradient_penalty;

#[test]
fn every_op_matches_finite_differences() {
    for case in grad_cases() {
        let err = check_case(&case, 5, 11);
        assert!(err <= 1e-4, "{}: relative error {err:e}", case.name);
    }
}

#[test]
fn linear_critic_penalties() {
    let unit = LinearCritic(Tensor::new(vec![0.5; 4], &[4]).unwrap());
    let p = gradient_penalty(&unit, &packs(1.0, 3), &packs(-2.0, 3), &[0.1, 0.5, 0.9]).unwrap();
    assert_eq!(p.item(), 0.0);
    let three = LinearCritic(Tensor::new(vec![1.0, 2.0, 2.0, 0.0], &[4]).unwrap());
    let p = gradient_penalty(&three, &packs(1.0, 2), &packs(0.0, 2), &[0.3, 0.7]).unwrap();
    assert_eq!(p.item(), 4.0);
}

#[test]
fn penalty_parameter_gradient_matches_finite_differences() {
    let err = penalty_gradient_error(5);
    assert!(err <= 1e-3, "penalty gradient relative error {err:e}");
}

#[test]
fn adain_standardizes_channels() {
    let (mean, std) = adain_deviation(9);
    assert!(mean <= 1e-6, "mean {mean}");
    assert!(std <= 1e-5, "std deviation from 1: {std}");
}
