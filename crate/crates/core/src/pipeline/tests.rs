use super::*;
use crate::certificate::CheckId;
use crate::exact::rat;
use crate::group::{ElemSet, GroupSpec};
use crate::strings::{AString, StringSet};

fn ap(n: i64) -> ElemSet {
    ElemSet::interval(GroupSpec::integers(), 0, n as usize).unwrap()
}

fn params(delta: (i64, i64), c: (i64, i64)) -> PipelineParams {
    PipelineParams { delta: rat(delta.0, delta.1), c: rat(c.0, c.1), ..PipelineParams::default() }
}

fn checks(state: &PipelineState, op: CheckId) -> Vec<&crate::certificate::Certificate> {
    state.ledger.certificates().filter(|c| c.op == op).collect()
}

#[test]
fn hypotheses_examples() {
    let a = ap(16);
    let full = StringSet::full(&a, 4).unwrap();
    let r = check_hypotheses(&a, &full, &params((1, 10), (3, 2))).unwrap();
    assert!(r.pass);
    assert_eq!(r.sigma_size, 61);
    assert_eq!(r.density.lhs, 65536);

    let empty = StringSet::empty(&a, 4).unwrap();
    assert!(!check_hypotheses(&a, &empty, &params((1, 10), (3, 2))).unwrap().pass);

    // Over Z_7 four copies of {0,1,2} already cover the group: 7 >= 3^1.5.
    let z7 = ElemSet::from_codes(GroupSpec::Cyclic { modulus: 7 }, [0, 1, 2]).unwrap();
    let r = check_hypotheses(&z7, &StringSet::full(&z7, 4).unwrap(), &params((1, 10), (3, 2))).unwrap();
    assert!(r.density.pass && !r.sigma.pass);
}

#[test]
fn full_product_is_a_fixed_point_of_iteration() {
    let a = ap(4);
    let full = StringSet::full(&a, 4).unwrap();
    let mut state = PipelineState::new(&a, &full, &params((1, 20), (3, 2))).unwrap();
    iteration_step(&mut state).unwrap();
    assert_eq!(state.s, full);
    assert_eq!(state.delta, rat(1, 10));
    let x = &state.intersector.as_ref().unwrap().x;
    assert_eq!(x, &AString::from_codes(&[0, 0]));
    assert!(checks(&state, CheckId::RestrictIdentity)[0].pass);
    assert!(checks(&state, CheckId::IntersectorThreshold)[0].pass);
}

#[test]
fn restriction_keeps_only_suffixes_in_the_chosen_fiber() {
    let a = ap(3);
    let dented = StringSet::complement_of(
        &a,
        4,
        [[0, 0, 1, 1], [0, 0, 2, 2], [1, 0, 0, 0], [2, 2, 1, 0]].map(|c| AString::from_codes(&c)),
    )
    .unwrap();
    let mut state = PipelineState::new(&a, &dented, &params((1, 20), (3, 2))).unwrap();
    iteration_step(&mut state).unwrap();
    let r_x = &state.intersector.as_ref().unwrap().r_x;
    for s in state.s.iter() {
        assert!(r_x.contains(&AString::new(s.coords[2..].to_vec())));
        assert!(dented.contains(&s));
    }
}

#[test]
fn descent_on_progression_is_blocked_by_the_floor() {
    // Every fiber of A^4 over {0..15} has 31 sums, below 61^(1 - 1/3000):
    // the descent condition holds but k = 2 is under the floor.
    let a = ap(16);
    let full = StringSet::full(&a, 4).unwrap();
    let mut state = PipelineState::new(&a, &full, &params((1, 20), (3, 2))).unwrap();
    iteration_step(&mut state).unwrap();
    assert_eq!(descent_check(&mut state).unwrap(), StepOutcome::Advance);
    assert_eq!(state.k, 4);
    let floor = checks(&state, CheckId::DimensionFloor);
    assert_eq!(floor.len(), 1);
    assert!(!floor[0].pass);
}

#[test]
fn engineered_descent_is_taken() {
    let a = ap(3);
    let full = StringSet::full(&a, 8).unwrap();
    let mut state = PipelineState::new(&a, &full, &params((1, 20), (3, 1))).unwrap();
    iteration_step(&mut state).unwrap();
    assert_eq!(descent_check(&mut state).unwrap(), StepOutcome::Loop);
    assert_eq!(state.k, 4);
    assert_eq!(state.delta, rat(1, 5));
    assert_eq!(state.s, StringSet::full(&a, 4).unwrap());
    assert_eq!(state.sigma_size, 9);
}

#[test]
fn h_stage_on_full_product() {
    let a = ap(16);
    let full = StringSet::full(&a, 4).unwrap();
    let mut state = PipelineState::new(&a, &full, &params((1, 20), (3, 2))).unwrap();
    iteration_step(&mut state).unwrap();
    match h_stage(&mut state).unwrap() {
        HOutcome::Final(ctx) => {
            assert_eq!(ctx.h_prime, StringSet::full(&a, 2).unwrap());
            assert!(ctx.h_pp.len() * 2 >= ctx.h_prime.len());
        }
        other => panic!("expected the final leg, got {other:?}"),
    }
}

#[test]
fn single_sum_class_drops_the_image() {
    // S = {01, 10} x A^2 over A = {0,1}: every prefix in H has sum 1, so
    // Sigma(H'') is a singleton and the H reassignment is due.
    let a = ap(2);
    let heads = [[0, 1], [1, 0]];
    let strings = heads.iter().flat_map(|h| {
        (0..4).map(move |t| AString::from_codes(&[h[0], h[1], t / 2, t % 2]))
    });
    let s = StringSet::from_strings(&a, 4, strings).unwrap();
    let mut state = PipelineState::new(&a, &s, &params((1, 20), (3, 2))).unwrap();
    iteration_step(&mut state).unwrap();
    let outcome = h_stage(&mut state).unwrap();
    let drop = checks(&state, CheckId::SigmaDrop);
    assert_eq!(drop.len(), 1);
    assert_eq!(drop[0].lhs, 1);
    assert!(drop[0].pass);
    // k = 2 would be below the floor, so the run goes on to the final leg.
    assert!(matches!(outcome, HOutcome::Final(_)));
}

#[test]
fn halts_when_hypotheses_fail() {
    let a = ap(8);
    let empty = StringSet::empty(&a, 4).unwrap();
    let r = run_pipeline(&a, &empty, &PipelineParams::default()).unwrap();
    assert_eq!(r.status, Status::DiagnosticHalt);
    assert!(r.a_prime.is_none());
    assert!(matches!(r.ledger.entries().last().unwrap().event, Event::Halt { .. }));
}

#[test]
fn tiny_ambient_halts() {
    let a = ap(1);
    let r = run_pipeline(&a, &StringSet::full(&a, 4).unwrap(), &PipelineParams::default()).unwrap();
    assert_eq!(r.status, Status::DiagnosticHalt);
}

#[test]
fn full_progression_runs_to_the_end() {
    let a = ap(8);
    let full = StringSet::full(&a, 4).unwrap();
    let p = params((1, 20), (2, 1));
    let r = run_pipeline(&a, &full, &p).unwrap();
    assert_ne!(r.status, Status::DiagnosticHalt, "{:?}", r.halt_reason);
    let a_prime = r.a_prime.as_ref().unwrap();
    assert!(a_prime.is_subset(&a) && !a_prime.is_empty());
    assert_eq!(r.growth.len(), 2);
    let containment: Vec<_> = r.ledger.certificates().filter(|c| c.op == CheckId::Containment).collect();
    assert!(containment[0].pass);
    let again = run_pipeline(&a, &full, &p).unwrap();
    assert_eq!(r.ledger.to_json_bytes(), again.ledger.to_json_bytes());
}

#[test]
fn odd_length_is_reduced_first() {
    let a = ap(4);
    let full = StringSet::full(&a, 5).unwrap();
    let r = run_pipeline(&a, &full, &params((1, 20), (2, 1))).unwrap();
    let red = r.reduction.as_ref().unwrap();
    assert_eq!((red.k, red.k_reduced, red.fiber), (5, 4, 256));
    assert_eq!(red.suffix, AString::from_codes(&[0]));
}

#[test]
fn params_validation() {
    assert!(PipelineParams::default().validate().is_ok());
    assert!(PipelineParams { epsilon: rat(1, 2), ..PipelineParams::default() }.validate().is_err());
    assert!(PipelineParams { c: rat(1, 1), ..PipelineParams::default() }.validate().is_err());
    assert!(PipelineParams { max_iterations: 0, ..PipelineParams::default() }.validate().is_err());
    let v = serde_json::to_value(PipelineParams::default()).unwrap();
    assert_eq!(v["epsilon"], "1/5");
    let back: PipelineParams = serde_json::from_value(serde_json::json!({"epsilon": 0.1, "c": "7/4"})).unwrap();
    assert_eq!((back.epsilon, back.c), (rat(1, 10), rat(7, 4)));
}
