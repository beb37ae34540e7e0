use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::ledger::{ChoiceKind, Decision, Event, Ledger, ReassignTarget, Stage};
use super::params::PipelineParams;
use crate::bsg::bsg_extract;
use crate::certificate::{CheckId, Certificate, Role};
use crate::error::{Error, Result};
use crate::exact::{int, rat, serde_rational, PowerBound, Relation};
use crate::group::{additive_energy, iterated_sumset, sumset, ElemSet};
use crate::selection::{
    dense_prefix_set, popular_suffix_extract, popular_sum_filter, select_common_suffix, select_popular_intersector,
    FamilyOfSubsets,
};
use crate::strings::{largest_power_of_two, reduce_to_power_of_two, sigma_string, AString, ReductionSummary, StringSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Finished with every asserted inequality holding at this scale.
    ProvedAtScale,
    /// Finished, but at least one asserted inequality failed.
    BestEffort,
    /// A guard stopped the run before the final leg.
    DiagnosticHalt,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::ProvedAtScale => "proved-at-scale",
            Status::BestEffort => "best-effort",
            Status::DiagnosticHalt => "diagnostic-halt",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub sigma_size: usize,
    /// `|S| >= |A|^{k - delta}`.
    pub density: Certificate,
    /// `|Sigma(S)| < |A|^c`.
    pub sigma: Certificate,
    pub pass: bool,
}

pub fn check_hypotheses(a: &ElemSet, s: &StringSet, p: &PipelineParams) -> Result<HypothesisReport> {
    let base = a.len() as u128;
    let k = int(s.k() as i64);
    let sigma_size = s.sigma()?.len();
    let density = Certificate::assertion(
        CheckId::HypothesisDensity,
        s.len() as u128,
        Relation::Ge,
        &PowerBound::power(base, k - &p.delta),
    )?;
    let sigma =
        Certificate::assertion(CheckId::HypothesisSigma, sigma_size as u128, Relation::Lt, &PowerBound::power(base, p.c.clone()))?;
    let pass = density.pass && sigma.pass;
    Ok(HypothesisReport { sigma_size, density, sigma, pass })
}

/// The prefix `x` chosen by the latest iteration step and its fiber `R_x`
/// (taken before the restriction, so every later `R_y` lies inside it).
#[derive(Clone, Debug)]
pub struct Intersector {
    pub x: AString,
    pub r_x: StringSet,
}

/// Mutable state of a run. Reassignments replace `s`, `k` and `delta` and
/// are recorded in the ledger.
#[derive(Clone, Debug)]
pub struct PipelineState {
    pub params: PipelineParams,
    pub a: ElemSet,
    pub s: StringSet,
    pub k: usize,
    pub delta: BigRational,
    /// `|Sigma(S)|` for the current `S`.
    pub sigma_size: usize,
    pub iterations: u32,
    pub intersector: Option<Intersector>,
    pub ledger: Ledger,
}

impl PipelineState {
    pub fn new(a: &ElemSet, s: &StringSet, params: &PipelineParams) -> Result<Self> {
        if s.ambient() != a {
            return Err(Error::NotSubset("the string set is not over the given ambient set".into()));
        }
        Ok(PipelineState {
            params: params.clone(),
            a: a.clone(),
            s: s.clone(),
            k: s.k(),
            delta: params.delta.clone(),
            sigma_size: s.sigma()?.len(),
            iterations: 0,
            intersector: None,
            ledger: Ledger::new(),
        })
    }

    fn record(&mut self, stage: Stage, event: Event) {
        self.ledger.push(stage, self.k, &self.delta, event);
    }

    fn check(&mut self, stage: Stage, certificate: Certificate) -> bool {
        let pass = certificate.pass;
        self.record(stage, Event::Check { certificate });
        pass
    }

    fn choose(&mut self, stage: Stage, choice: ChoiceKind, value: Vec<i64>) {
        self.record(stage, Event::Choice { choice, value });
    }

    fn branch(&mut self, stage: Stage, decision: Decision) {
        self.record(stage, Event::Branch { decision });
    }

    fn halt(&mut self, stage: Stage, reason: &str) {
        self.record(stage, Event::Halt { reason: reason.to_string() });
    }

    fn reassign(&mut self, stage: Stage, target: ReassignTarget, s: StringSet, delta: BigRational) -> Result<()> {
        let k = s.k();
        self.record(stage, Event::Reassign { target, size: s.len(), k, delta: delta.clone() });
        self.sigma_size = s.sigma()?.len();
        self.s = s;
        self.k = k;
        self.delta = delta;
        Ok(())
    }

    /// `|A|^exp`.
    fn a_pow(&self, exp: BigRational) -> PowerBound {
        PowerBound::power(self.a.len() as u128, exp)
    }

    /// `|Sigma(S)|^{1 - epsilon/400c}`.
    fn sigma_target(&self) -> PowerBound {
        PowerBound::power(self.sigma_size as u128, int(1) - self.params.saving())
    }

    /// Records whether a halving to `new_k` is allowed.
    fn floor_allows(&mut self, stage: Stage, new_k: usize) -> Result<bool> {
        if new_k >= self.params.min_k {
            return Ok(true);
        }
        let cert = Certificate::assertion(
            CheckId::DimensionFloor,
            new_k as u128,
            Relation::Ge,
            &PowerBound::count(self.params.min_k as u128),
        )?;
        self.check(stage, cert);
        self.branch(stage, Decision::FloorBlocked);
        Ok(false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// Restart from the iteration step.
    Loop,
    /// Go on to the next stage.
    Advance,
}

/// Chooses `x` by the intersection lemma and restricts `S` to the strings
/// whose right half lies in `R_x`; `delta` doubles.
pub fn iteration_step(state: &mut PipelineState) -> Result<()> {
    let st = Stage::Iteration;
    let half = state.k / 2;
    let family = FamilyOfSubsets::right_fibers(&state.s)?;
    // Fibers over A^{k/2} with n = r = |A|^{k/2}: |S| >= |A|^{k-delta} reads
    // as sum |U_i| >= r n^{1 - 2delta/k}.
    let lemma_delta = &state.delta * rat(2, state.k as i64);
    let selection = select_popular_intersector(&family, &lemma_delta)?;
    let total = Certificate::assertion(
        CheckId::IntersectorTotal,
        family.total() as u128,
        Relation::Eq,
        &PowerBound::count(state.s.len() as u128),
    )?;
    state.check(st, total);
    state.check(st, selection.precondition.clone());
    state.check(st, selection.threshold.clone());

    let x_code = selection.chosen as u64;
    let x = state.s.decode(x_code, half);
    state.choose(st, ChoiceKind::IntersectorPrefix, x.codes());
    let r_x = state.s.right_fiber_code(half, x_code)?;
    let restricted = state.s.restrict_by_right(&r_x)?;
    let identity = Certificate::assertion(
        CheckId::RestrictIdentity,
        restricted.len() as u128,
        Relation::Eq,
        &PowerBound::count(selection.measured as u128),
    )?;
    state.check(st, identity);
    let delta = &state.delta * int(2);
    state.reassign(st, ReassignTarget::Restricted, restricted, delta)?;
    state.intersector = Some(Intersector { x, r_x });
    state.iterations += 1;
    Ok(())
}

/// Looks for the least `y` with `|R_y| >= |A|^{k/2 - 2delta}` and
/// `|Sigma(R_y)| <= |Sigma(S)|^{1 - epsilon/400c}`; if one exists, `S`
/// becomes `R_y`, `k` halves and `delta` doubles.
pub fn descent_check(state: &mut PipelineState) -> Result<StepOutcome> {
    let st = Stage::Descent;
    let half = state.k / 2;
    let fiber_bound = state.a_pow(int(half as i64) - &state.delta * int(2));
    let sigma_bound = state.sigma_target();
    let fiber_min = u64::try_from(fiber_bound.ceil()?).unwrap_or(u64::MAX);
    let sigma_max = sigma_bound.floor()?;

    let space = (state.a.len() as u64).pow(half as u32);
    let mut found = None;
    for y in 0..space {
        if state.s.right_fiber_size_code(half, y)? < fiber_min {
            continue;
        }
        let fiber = state.s.right_fiber_code(half, y)?;
        let sigma = fiber.sigma()?.len();
        if num_bigint::BigUint::from(sigma) <= sigma_max {
            found = Some((y, fiber, sigma));
            break;
        }
    }
    let Some((y, fiber, sigma)) = found else {
        state.branch(st, Decision::Advance);
        return Ok(StepOutcome::Advance);
    };
    let y_str = state.s.decode(y, half);
    state.choose(st, ChoiceKind::DescentPrefix, y_str.codes());
    let size_cert = Certificate::evaluate(CheckId::DescentFiber, Role::Branch, fiber.len() as u128, Relation::Ge, &fiber_bound)?
        .with_tiebreak("canonical-least prefix");
    state.check(st, size_cert);
    let sigma_cert = Certificate::evaluate(CheckId::DescentSigma, Role::Branch, sigma as u128, Relation::Le, &sigma_bound)?;
    state.check(st, sigma_cert);
    if !state.floor_allows(st, half)? {
        return Ok(StepOutcome::Advance);
    }
    let delta = &state.delta * int(2);
    state.reassign(st, ReassignTarget::Fiber, fiber, delta)?;
    state.branch(st, Decision::Descend);
    Ok(StepOutcome::Loop)
}

/// Everything the final leg needs from the `H` stages.
#[derive(Clone, Debug)]
pub struct HContext {
    pub h_prime: StringSet,
    pub h_pp: StringSet,
    pub r_x: StringSet,
    /// `|Sigma(H')|`.
    pub sigma_h_prime: usize,
}

#[derive(Clone, Debug)]
pub enum HOutcome {
    Loop,
    Final(HContext),
    Halt,
}

pub fn h_stage(state: &mut PipelineState) -> Result<HOutcome> {
    let st = Stage::HStage;
    let half = state.k / 2;
    let r_x = state
        .intersector
        .as_ref()
        .map(|i| i.r_x.clone())
        .ok_or_else(|| Error::InvalidParameter("the H stage needs a preceding iteration step".into()))?;
    let two_delta = &state.delta * int(2);

    let theta = state.a_pow(int(half as i64) - &two_delta);
    let dense = dense_prefix_set(&state.s, &theta)?;
    state.check(st, dense.certificate.clone());
    if dense.h.is_empty() {
        state.halt(st, "no prefix has a dense fiber (H is empty)");
        return Ok(HOutcome::Halt);
    }

    let ratio_bound = PowerBound::count(dense.h.len() as u128).times_power(int(state.a.len() as i64), -two_delta.clone());
    let size_bound = state.a_pow(int(half as i64) - &state.delta * int(4));
    let common = select_common_suffix(&dense.h, &state.s, &r_x, &ratio_bound, &size_bound)?;
    state.choose(st, ChoiceKind::CommonSuffix, common.z.codes());
    for c in &common.certificates {
        state.check(st, c.clone());
    }

    let popular = popular_sum_filter(&common.h_prime)?;
    state.check(st, popular.certificate.clone());
    let popular_size = Certificate::assertion(
        CheckId::PopularSize,
        popular.h_pp.len() as u128,
        Relation::Ge,
        &state.a_pow(int(half as i64) - &state.delta * int(5)),
    )?;
    state.check(st, popular_size);
    if popular.h_pp.is_empty() {
        state.halt(st, "no sum class is popular enough (H'' is empty)");
        return Ok(HOutcome::Halt);
    }

    let sigma_hp = popular.sigma_size;
    let sigma_hpp = popular.h_pp.sigma()?.len();
    let monotone = Certificate::assertion(
        CheckId::SigmaFilterMonotone,
        sigma_hpp as u128,
        Relation::Le,
        &PowerBound::count(sigma_hp as u128),
    )?;
    state.check(st, monotone);
    let suffix_bound = Certificate::assertion(
        CheckId::SigmaSuffixBound,
        sigma_hp as u128,
        Relation::Le,
        &PowerBound::count(state.sigma_size as u128),
    )?;
    state.check(st, suffix_bound);

    let target = state.sigma_target();
    let drop = Certificate::evaluate(CheckId::SigmaDrop, Role::Branch, sigma_hpp as u128, Relation::Le, &target)?;
    if state.check(st, drop) && state.floor_allows(st, half)? {
        let delta = &state.delta * int(5);
        state.reassign(st, ReassignTarget::PopularSums, popular.h_pp, delta)?;
        state.branch(st, Decision::ReassignH);
        return Ok(HOutcome::Loop);
    }
    let plateau = Certificate::assertion(CheckId::SigmaPlateau, sigma_hpp as u128, Relation::Ge, &target)?;
    state.check(st, plateau);
    state.branch(st, Decision::FinalLeg);
    Ok(HOutcome::Final(HContext { h_prime: common.h_prime, h_pp: popular.h_pp, r_x, sigma_h_prime: sigma_hp }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub ell: u32,
    /// Even `ell` is covered by the argument; odd `ell` is measured only.
    pub in_scope: bool,
    /// `|l A'|`.
    pub size: usize,
    /// `|l Sigma|`.
    pub sigma_size: usize,
    /// `|l A'| <= |A'|^{c(1 + epsilon l)}`.
    pub bound: Certificate,
    /// `|l A'| <= |A'|^{c(1 + 2 epsilon l)}`, before rescaling `epsilon`.
    pub prerescaled: Certificate,
    /// `|l A'| <= |l Sigma|`.
    pub via_sigma: Certificate,
    /// `|l Sigma| <= |Sigma|^{1 + epsilon l / 2c}`.
    pub plunnecke: Certificate,
}

#[derive(Clone, Debug)]
pub struct FinalOutcome {
    pub sigma: ElemSet,
    pub w: AString,
    pub a_prime: ElemSet,
    pub growth: Vec<GrowthRow>,
}

/// The small-doubling extraction on `X = Sigma(H'')`, `Y = Sigma(R_x)`, then
/// `H'''`, `(w, A')`, the containment and the growth table.
pub fn final_extraction(state: &mut PipelineState, ctx: &HContext) -> Result<Option<FinalOutcome>> {
    let st = Stage::Final;
    let p = state.params.clone();
    let saving = p.saving();
    let ratio = p.half_ratio();
    let half = state.k / 2;

    let x = ctx.h_pp.sigma()?;
    let y = ctx.r_x.sigma()?;
    let energy = additive_energy(&x, &y)?;
    let energy_bound = PowerBound::power(state.sigma_size as u128, int(3) - &saving * int(3));
    state.check(st, Certificate::assertion(CheckId::EnergyLower, energy, Relation::Ge, &energy_bound)?);

    let n = x.len().min(y.len());
    state.choose(st, ChoiceKind::Truncation, vec![x.len() as i64, y.len() as i64, n as i64]);
    let bsg = bsg_extract(&x.truncated(n), &y.truncated(n), &p.bsg)?;
    let sigma = bsg.x_prime;
    state.choose(st, ChoiceKind::SigmaSubset, sigma.iter().map(|e| e.0).collect());
    state.check(st, bsg.size);
    state.check(st, bsg.doubling);
    if sigma.is_empty() {
        state.halt(st, "the extractor returned an empty set");
        return Ok(None);
    }

    let sigma_large = PowerBound::power(x.len() as u128, int(1) - &ratio);
    state.check(st, Certificate::assertion(CheckId::SigmaLarge, sigma.len() as u128, Relation::Ge, &sigma_large)?);
    let doubled = sumset(&sigma, &sigma)?;
    let small = PowerBound::power(sigma.len() as u128, int(1) + &ratio);
    state.check(st, Certificate::assertion(CheckId::SmallDoubling, doubled.len() as u128, Relation::Le, &small)?);

    let spec = state.a.spec();
    let mut kept = Vec::new();
    for c in ctx.h_pp.codes() {
        if sigma.contains(ctx.h_pp.code_sum(c, half)?) {
            kept.push(c);
        }
    }
    let h3 = StringSet::from_codes(&state.a, half, kept)?;
    let chain = PowerBound::count(sigma.len() as u128 * ctx.h_prime.len() as u128)
        .times(rat(1, 2 * ctx.sigma_h_prime as i64));
    state.check(st, Certificate::assertion(CheckId::TripleChain, h3.len() as u128, Relation::Ge, &chain)?);
    let eps = &p.epsilon;
    let triple = state.a_pow(int(half as i64) - &state.delta * int(4) - eps);
    state.check(st, Certificate::assertion(CheckId::TripleSize, h3.len() as u128, Relation::Ge, &triple)?);

    let lower = state.a_pow(int(1) - &state.delta * int(4) - eps);
    let extract = popular_suffix_extract(&h3, &lower)?;
    state.choose(st, ChoiceKind::SuffixVector, extract.w.codes());
    for c in &extract.certificates {
        state.check(st, c.clone());
    }
    let a_prime = extract.a_prime;
    let subset_lower = state.a_pow(int(1) - eps);
    state.check(st, Certificate::assertion(CheckId::SubsetLower, a_prime.len() as u128, Relation::Ge, &subset_lower)?);

    let shift = spec.scale(sigma_string(spec, &extract.w)?, 2)?;
    let shifted = sumset(&a_prime, &a_prime)?.translate(shift)?;
    let missing = shifted.iter().filter(|&e| !doubled.contains(e)).count();
    state.check(st, Certificate::assertion(CheckId::Containment, missing as u128, Relation::Eq, &PowerBound::count(0))?);

    let growth = growth_table(state, &a_prime, &sigma)?;
    Ok(Some(FinalOutcome { sigma, w: extract.w, a_prime, growth }))
}

fn growth_table(state: &mut PipelineState, a_prime: &ElemSet, sigma: &ElemSet) -> Result<Vec<GrowthRow>> {
    let st = Stage::Growth;
    let p = state.params.clone();
    let mut rows = Vec::new();
    for &ell in &p.ell_list {
        let in_scope = ell % 2 == 0;
        let role = if in_scope { Role::Assertion } else { Role::OutOfScope };
        let size = iterated_sumset(a_prime, ell)?.len();
        let sigma_size = iterated_sumset(sigma, ell)?.len();
        let el = int(ell as i64);
        let base = a_prime.len() as u128;
        let exp = &p.c * (int(1) + &p.epsilon * &el);
        let exp2 = &p.c * (int(1) + &p.epsilon * &el * int(2));
        let plunnecke_exp = int(1) + &p.epsilon * &el / (int(2) * &p.c);
        let cert = |op, lhs: usize, bound: &PowerBound| -> Result<Certificate> {
            Ok(Certificate::evaluate(op, role, lhs as u128, Relation::Le, bound)?.with_ell(ell))
        };
        let row = GrowthRow {
            ell,
            in_scope,
            size,
            sigma_size,
            bound: cert(CheckId::GrowthBound, size, &PowerBound::power(base, exp))?,
            prerescaled: cert(CheckId::GrowthPrerescaled, size, &PowerBound::power(base, exp2))?,
            via_sigma: cert(CheckId::GrowthViaSigma, size, &PowerBound::count(sigma_size as u128))?,
            plunnecke: cert(CheckId::PlunneckeSigma, sigma_size, &PowerBound::power(sigma.len() as u128, plunnecke_exp))?,
        };
        for c in [&row.bound, &row.prerescaled, &row.via_sigma, &row.plunnecke] {
            state.check(st, c.clone());
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halt_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionSummary>,
    /// `|Sigma(S)|` once the run has its power-of-two length.
    pub initial_sigma_size: usize,
    pub iterations: u32,
    pub final_k: usize,
    #[serde(with = "serde_rational")]
    pub final_delta: BigRational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_prime: Option<ElemSet>,
    /// Element codes of the suffix `w`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<AString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<ElemSet>,
    pub growth: Vec<GrowthRow>,
    pub failed_assertions: usize,
    pub ledger: Ledger,
}

/// Runs the whole pipeline on `S ⊆ A^k`.
pub fn run_pipeline(a: &ElemSet, s: &StringSet, params: &PipelineParams) -> Result<PipelineResult> {
    params.validate()?;
    let mut state = PipelineState::new(a, s, params)?;
    let mut reduction = None;
    let outcome = drive(&mut state, &mut reduction)?;
    let halt_reason = state.ledger.halt_reason().map(str::to_string);
    let failed_assertions = state.ledger.certificates().filter(|c| c.is_failed_assertion()).count();
    let status = match (&halt_reason, failed_assertions) {
        (Some(_), _) => Status::DiagnosticHalt,
        (None, 0) => Status::ProvedAtScale,
        (None, _) => Status::BestEffort,
    };
    let (a_prime, w, sigma, growth) = match outcome {
        Some(f) => (Some(f.a_prime), Some(f.w), Some(f.sigma), f.growth),
        None => (None, None, None, Vec::new()),
    };
    Ok(PipelineResult {
        status,
        halt_reason,
        reduction,
        initial_sigma_size: state.sigma_initial(),
        iterations: state.iterations,
        final_k: state.k,
        final_delta: state.delta.clone(),
        a_prime,
        w,
        sigma,
        growth,
        failed_assertions,
        ledger: state.ledger,
    })
}

impl PipelineState {
    /// `|Sigma(S)|` recorded by the hypothesis check, if it ran.
    fn sigma_initial(&self) -> usize {
        self.ledger
            .certificates()
            .find(|c| c.op == CheckId::HypothesisSigma)
            .map_or(self.sigma_size, |c| c.lhs as usize)
    }
}

fn drive(state: &mut PipelineState, reduction: &mut Option<ReductionSummary>) -> Result<Option<FinalOutcome>> {
    let ambient = Certificate::evaluate(
        CheckId::AmbientSize,
        Role::Branch,
        state.a.len() as u128,
        Relation::Ge,
        &PowerBound::count(state.params.min_ambient_size as u128),
    )?;
    if !state.check(Stage::Reduce, ambient) {
        state.halt(Stage::Reduce, "the ambient set is below the minimum size");
        return Ok(None);
    }

    if largest_power_of_two(state.k) != state.k {
        let k = state.k;
        let red = reduce_to_power_of_two(&state.s)?;
        state.choose(Stage::Reduce, ChoiceKind::ReduceSuffix, red.suffix.codes());
        for c in &red.certificates {
            state.check(Stage::Reduce, c.clone());
        }
        *reduction = Some(red.summary(k));
        let delta = state.delta.clone();
        state.reassign(Stage::Reduce, ReassignTarget::Reduced, red.reduced, delta)?;
    }

    let hyp = check_hypotheses(&state.a, &state.s, &state.params)?;
    state.check(Stage::Hypotheses, hyp.density.clone());
    state.check(Stage::Hypotheses, hyp.sigma.clone());
    if !hyp.pass {
        state.halt(Stage::Hypotheses, "the hypotheses do not hold");
        return Ok(None);
    }
    if state.k < state.params.min_k {
        let floor = Certificate::assertion(
            CheckId::DimensionFloor,
            state.k as u128,
            Relation::Ge,
            &PowerBound::count(state.params.min_k as u128),
        )?;
        state.check(Stage::Hypotheses, floor);
        state.halt(Stage::Hypotheses, "k is below the dimension floor");
        return Ok(None);
    }

    loop {
        if state.iterations >= state.params.max_iterations {
            state.halt(Stage::Iteration, "iteration budget exhausted");
            return Ok(None);
        }
        iteration_step(state)?;
        if descent_check(state)? == StepOutcome::Loop {
            continue;
        }
        match h_stage(state)? {
            HOutcome::Loop => continue,
            HOutcome::Halt => return Ok(None),
            HOutcome::Final(ctx) => return final_extraction(state, &ctx),
        }
    }
}
