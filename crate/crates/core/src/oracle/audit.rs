//! Replays a pipeline run on brute-force state and recomputes every ledger
//! entry. The only value taken from the ledger itself is the subset chosen
//! by the small-doubling extractor, whose recorded properties are then
//! checked from scratch.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::arith::OGroup;
use super::bound::OBound;
use super::brute::{codes, iterate_len, pairwise, quadruples, sigma_rows, words, Rows};
use super::limits::OracleLimits;
use crate::certificate::{CheckId, Role};
use crate::error::{Error, Result};
use crate::exact::Relation;
use crate::group::ElemSet;
use crate::pipeline::{
    ChoiceKind, Decision, Event, LedgerEntry, PipelineParams, PipelineResult, ReassignTarget, Stage, Status,
};
use crate::strings::StringSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditMismatch {
    /// Ledger position, when the mismatch belongs to one entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub entries: usize,
    pub entries_replayed: usize,
    pub checks_recomputed: usize,
    pub mismatches: Vec<AuditMismatch>,
    pub pass: bool,
}

/// Recomputes the whole run from `(A, S, params)` and compares it with
/// `result`, entry by entry.
pub fn audit_run(
    a: &ElemSet,
    s: &StringSet,
    params: &PipelineParams,
    result: &PipelineResult,
    lim: &OracleLimits,
) -> Result<AuditReport> {
    lim.validate()?;
    let ambient = codes(a);
    lim.ambient(ambient.len())?;
    let rows = super::brute::brute_rows(s, lim)?;
    let g = OGroup::of(a.spec());
    let sigma_size = sigma_rows(g, &rows)?.len();
    let mut r = Replay {
        entries: result.ledger.entries(),
        pos: 0,
        g,
        ambient,
        lim,
        p: params,
        k: s.k(),
        rows,
        delta: params.delta.clone(),
        sigma_size,
        iterations: 0,
        r_x: None,
        mismatches: Vec::new(),
        checks: 0,
        failed: 0,
        halted: false,
        reduction: None,
        initial_sigma: None,
        outcome: None,
    };
    match r.run() {
        Ok(()) => {
            if r.pos < r.entries.len() {
                r.note(Some(r.pos), format!("{} trailing entries", r.entries.len() - r.pos));
            }
            r.compare_result(result);
        }
        Err(Stop::Desync) => {}
        Err(Stop::Fail(e)) => return Err(e),
    }
    let pass = r.mismatches.is_empty();
    Ok(AuditReport {
        entries: r.entries.len(),
        entries_replayed: r.pos,
        checks_recomputed: r.checks,
        mismatches: r.mismatches,
        pass,
    })
}

enum Stop {
    Desync,
    Fail(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Fail(e)
    }
}

type R<T> = std::result::Result<T, Stop>;

enum Flow {
    Loop,
    Advance,
    Halt,
}

struct HContext {
    h_prime: Rows,
    h_pp: Rows,
    r_x: Rows,
    sigma_h_prime: usize,
}

struct Outcome {
    sigma: Vec<i64>,
    w: Vec<i64>,
    a_prime: Vec<i64>,
    /// `(ell, |l A'|, |l Sigma|, growth bound holds)`.
    growth: Vec<(u32, usize, usize, bool)>,
}

struct Replay<'a> {
    entries: &'a [LedgerEntry],
    pos: usize,
    g: OGroup,
    ambient: Vec<i64>,
    lim: &'a OracleLimits,
    p: &'a PipelineParams,
    rows: Rows,
    k: usize,
    delta: BigRational,
    sigma_size: usize,
    iterations: u32,
    r_x: Option<Rows>,
    mismatches: Vec<AuditMismatch>,
    checks: usize,
    failed: usize,
    halted: bool,
    /// `(k, k', suffix, fiber)`.
    reduction: Option<(usize, usize, Vec<i64>, usize)>,
    initial_sigma: Option<usize>,
    outcome: Option<Outcome>,
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn qr(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl<'a> Replay<'a> {
    fn note(&mut self, seq: Option<usize>, message: String) {
        self.mismatches.push(AuditMismatch { seq, message });
    }

    fn desync<T>(&mut self, seq: Option<usize>, message: String) -> R<T> {
        self.note(seq, message);
        Err(Stop::Desync)
    }

    fn base(&self) -> u128 {
        self.ambient.len() as u128
    }

    /// `|A|^exp`.
    fn a_pow(&self, exp: BigRational) -> OBound {
        OBound::pow(self.base(), exp)
    }

    fn saving(&self) -> BigRational {
        &self.p.epsilon / (q(400) * &self.p.c)
    }

    fn sigma_target(&self) -> OBound {
        OBound::pow(self.sigma_size as u128, BigRational::one() - self.saving())
    }

    fn next(&mut self, stage: Stage) -> R<&'a LedgerEntry> {
        let entries = self.entries;
        let Some(e) = entries.get(self.pos) else {
            return self.desync(None, format!("ledger ends where a {stage:?} entry is due"));
        };
        self.pos += 1;
        if e.stage != stage {
            return self.desync(Some(e.seq), format!("stage {:?}, expected {stage:?}", e.stage));
        }
        if e.seq != self.pos - 1 {
            self.note(Some(e.seq), format!("sequence number {} at position {}", e.seq, self.pos - 1));
        }
        if e.k != self.k || e.delta != self.delta {
            let msg = format!("header k={} delta={}, replay has k={} delta={}", e.k, e.delta, self.k, self.delta);
            self.note(Some(e.seq), msg);
        }
        Ok(e)
    }

    #[allow(clippy::too_many_arguments)]
    fn check_ell(
        &mut self,
        stage: Stage,
        op: CheckId,
        role: Role,
        lhs: usize,
        relation: Relation,
        bound: OBound,
        ell: Option<u32>,
    ) -> R<bool> {
        let e = self.next(stage)?;
        let Event::Check { certificate: c } = &e.event else {
            return self.desync(Some(e.seq), format!("expected a {op:?} check"));
        };
        if c.op != op {
            return self.desync(Some(e.seq), format!("check {:?}, expected {op:?}", c.op));
        }
        let (rhs, pass) = bound.judge(lhs as u128, relation)?;
        let mut diffs = Vec::new();
        if c.role != role {
            diffs.push(format!("role {:?} vs {role:?}", c.role));
        }
        if c.relation != relation {
            diffs.push(format!("relation {:?} vs {relation:?}", c.relation));
        }
        if c.ell != ell {
            diffs.push(format!("ell {:?} vs {ell:?}", c.ell));
        }
        if c.lhs != lhs as u128 {
            diffs.push(format!("lhs {} vs {lhs}", c.lhs));
        }
        if c.rhs != rhs {
            diffs.push(format!("rhs {} vs {rhs}", c.rhs));
        }
        if c.pass != pass {
            diffs.push(format!("pass {} vs {pass}", c.pass));
        }
        if !diffs.is_empty() {
            self.note(Some(e.seq), format!("{op:?}: {}", diffs.join(", ")));
        }
        self.checks += 1;
        if role == Role::Assertion && !pass {
            self.failed += 1;
        }
        Ok(pass)
    }

    fn check(&mut self, stage: Stage, op: CheckId, role: Role, lhs: usize, rel: Relation, bound: OBound) -> R<bool> {
        self.check_ell(stage, op, role, lhs, rel, bound, None)
    }

    fn assert(&mut self, stage: Stage, op: CheckId, lhs: usize, rel: Relation, bound: OBound) -> R<bool> {
        self.check(stage, op, Role::Assertion, lhs, rel, bound)
    }

    fn recorded_choice(&mut self, stage: Stage, kind: ChoiceKind) -> R<(usize, Vec<i64>)> {
        let e = self.next(stage)?;
        match &e.event {
            Event::Choice { choice, value } if *choice == kind => Ok((e.seq, value.clone())),
            _ => self.desync(Some(e.seq), format!("expected a {kind:?} choice")),
        }
    }

    fn choose(&mut self, stage: Stage, kind: ChoiceKind, expected: &[i64]) -> R<()> {
        let (seq, value) = self.recorded_choice(stage, kind)?;
        if value != expected {
            self.note(Some(seq), format!("{kind:?} chose {value:?}, the exhaustive scan gives {expected:?}"));
        }
        Ok(())
    }

    fn branch(&mut self, stage: Stage, decision: Decision) -> R<()> {
        let e = self.next(stage)?;
        match &e.event {
            Event::Branch { decision: d } if *d == decision => Ok(()),
            other => self.desync(Some(e.seq), format!("expected branch {decision:?}, found {other:?}")),
        }
    }

    fn halt(&mut self, stage: Stage) -> R<()> {
        let e = self.next(stage)?;
        if !matches!(e.event, Event::Halt { .. }) {
            return self.desync(Some(e.seq), format!("expected a halt, found {:?}", e.event));
        }
        self.halted = true;
        Ok(())
    }

    fn reassign(&mut self, stage: Stage, target: ReassignTarget, rows: Rows, k: usize, delta: BigRational) -> R<()> {
        let e = self.next(stage)?;
        let Event::Reassign { target: t, size, k: ek, delta: ed } = &e.event else {
            return self.desync(Some(e.seq), format!("expected a {target:?} reassignment"));
        };
        if *t != target {
            return self.desync(Some(e.seq), format!("reassignment {t:?}, expected {target:?}"));
        }
        if (*size, *ek, ed) != (rows.len(), k, &delta) {
            let msg = format!("reassign to size {size} k={ek} delta={ed}, replay has {} {k} {delta}", rows.len());
            self.note(Some(e.seq), msg);
        }
        self.sigma_size = sigma_rows(self.g, &rows)?.len();
        self.rows = rows;
        self.k = k;
        self.delta = delta;
        Ok(())
    }

    /// `R_y` for every prefix `y` of length `len` (absent prefixes have
    /// empty fibers).
    fn fibers(&self, len: usize) -> BTreeMap<Vec<i64>, Rows> {
        let mut out: BTreeMap<Vec<i64>, Rows> = BTreeMap::new();
        for r in &self.rows {
            out.entry(r[..len].to_vec()).or_default().insert(r[len..].to_vec());
        }
        out
    }

    fn floor_allows(&mut self, stage: Stage, new_k: usize) -> R<bool> {
        if new_k >= self.p.min_k {
            return Ok(true);
        }
        self.assert(stage, CheckId::DimensionFloor, new_k, Relation::Ge, OBound::count(self.p.min_k as u128))?;
        self.branch(stage, Decision::FloorBlocked)?;
        Ok(false)
    }

    fn run(&mut self) -> R<()> {
        let ambient_ok = self.check(
            Stage::Reduce,
            CheckId::AmbientSize,
            Role::Branch,
            self.ambient.len(),
            Relation::Ge,
            OBound::count(self.p.min_ambient_size as u128),
        )?;
        if !ambient_ok {
            return self.halt(Stage::Reduce);
        }
        if !self.k.is_power_of_two() {
            self.reduce()?;
        }

        let st = Stage::Hypotheses;
        self.lim.length(self.k)?;
        self.initial_sigma = Some(self.sigma_size);
        let density = self.assert(st, CheckId::HypothesisDensity, self.rows.len(), Relation::Ge, self.a_pow(q(self.k as i64) - &self.delta))?;
        let sigma = self.assert(st, CheckId::HypothesisSigma, self.sigma_size, Relation::Lt, self.a_pow(self.p.c.clone()))?;
        if !(density && sigma) {
            return self.halt(st);
        }
        if self.k < self.p.min_k {
            self.assert(st, CheckId::DimensionFloor, self.k, Relation::Ge, OBound::count(self.p.min_k as u128))?;
            return self.halt(st);
        }

        loop {
            if self.iterations >= self.p.max_iterations {
                return self.halt(Stage::Iteration);
            }
            self.iteration()?;
            if let Flow::Loop = self.descent()? {
                continue;
            }
            match self.h_stage()? {
                (Flow::Loop, _) => continue,
                (Flow::Halt, _) => return Ok(()),
                (Flow::Advance, ctx) => return self.final_leg(ctx.expect("the final leg carries its context")),
            }
        }
    }

    fn reduce(&mut self) -> R<()> {
        let st = Stage::Reduce;
        let k = self.k;
        let mut k2 = 1;
        while k2 * 2 <= k {
            k2 *= 2;
        }
        let m = k - k2;
        let mut counts: BTreeMap<&[i64], usize> = BTreeMap::new();
        for r in &self.rows {
            *counts.entry(&r[k2..]).or_default() += 1;
        }
        let mut best: (Vec<i64>, usize) = (Vec::new(), 0);
        for (i, w) in words(&self.ambient, m, self.lim)?.into_iter().enumerate() {
            let c = counts.get(w.as_slice()).copied().unwrap_or(0);
            if i == 0 || c > best.1 {
                best = (w, c);
            }
        }
        let suffix = best.0;
        self.choose(st, ChoiceKind::ReduceSuffix, &suffix)?;
        let kept: Vec<&Vec<i64>> = self.rows.iter().filter(|r| r[k2..] == suffix[..]).collect();
        let reduced_sigma = sigma_rows(self.g, kept.iter().copied())?.len();
        let reduced: Rows = kept.iter().map(|r| r[..k2].to_vec()).collect();
        let pigeonhole = OBound::count(self.rows.len() as u128).times_pow(q(self.base() as i64), q(-(m as i64)));
        self.assert(st, CheckId::ReducePigeonhole, reduced.len(), Relation::Ge, pigeonhole)?;
        self.assert(st, CheckId::ReduceSigma, reduced_sigma, Relation::Le, OBound::count(self.sigma_size as u128))?;
        self.reduction = Some((k, k2, suffix, reduced.len()));
        let delta = self.delta.clone();
        self.reassign(st, ReassignTarget::Reduced, reduced, k2, delta)
    }

    fn iteration(&mut self) -> R<()> {
        let st = Stage::Iteration;
        let half = self.k / 2;
        let prefixes = words(&self.ambient, half, self.lim)?;
        let n = prefixes.len() as u64;
        self.lim.enumeration("intersection scores", &[n, n, n])?;
        let fibers = self.fibers(half);
        let empty = Rows::new();
        let family: Vec<&Rows> = prefixes.iter().map(|y| fibers.get(y).unwrap_or(&empty)).collect();
        let total: usize = family.iter().map(|f| f.len()).sum();
        self.assert(st, CheckId::IntersectorTotal, total, Relation::Eq, OBound::count(self.rows.len() as u128))?;

        let lemma_delta = &self.delta * qr(2, self.k as i64);
        let nq = q(n as i64);
        let pre = OBound::count(n as u128).times_pow(nq.clone(), BigRational::one() - &lemma_delta);
        self.check(st, CheckId::IntersectorPrecondition, Role::Branch, total, Relation::Ge, pre)?;
        let mut best = (0usize, 0usize);
        for (j, fj) in family.iter().enumerate() {
            let score: usize = family.iter().map(|fi| fi.intersection(fj).count()).sum();
            if score > best.1 {
                best = (j, score);
            }
        }
        let post = OBound::count(n as u128).times_pow(nq, BigRational::one() - &lemma_delta * q(2));
        self.assert(st, CheckId::IntersectorThreshold, best.1, Relation::Ge, post)?;
        let x = &prefixes[best.0];
        self.choose(st, ChoiceKind::IntersectorPrefix, x)?;
        let r_x = family[best.0].clone();
        let restricted: Rows = self.rows.iter().filter(|r| r_x.contains(&r[half..])).cloned().collect();
        self.assert(st, CheckId::RestrictIdentity, restricted.len(), Relation::Eq, OBound::count(best.1 as u128))?;
        let delta = &self.delta * q(2);
        let k = self.k;
        self.reassign(st, ReassignTarget::Restricted, restricted, k, delta)?;
        self.r_x = Some(r_x);
        self.iterations += 1;
        Ok(())
    }

    fn descent(&mut self) -> R<Flow> {
        let st = Stage::Descent;
        let half = self.k / 2;
        let fiber_bound = self.a_pow(q(half as i64) - &self.delta * q(2));
        let sigma_bound = self.sigma_target();
        let fibers = self.fibers(half);
        let mut found = None;
        for y in words(&self.ambient, half, self.lim)? {
            let Some(f) = fibers.get(&y) else { continue };
            if !fiber_bound.judge(f.len() as u128, Relation::Ge)?.1 {
                continue;
            }
            let sigma = sigma_rows(self.g, f)?.len();
            if sigma_bound.judge(sigma as u128, Relation::Le)?.1 {
                found = Some((y, f.clone(), sigma));
                break;
            }
        }
        let Some((y, fiber, sigma)) = found else {
            self.branch(st, Decision::Advance)?;
            return Ok(Flow::Advance);
        };
        self.choose(st, ChoiceKind::DescentPrefix, &y)?;
        self.check(st, CheckId::DescentFiber, Role::Branch, fiber.len(), Relation::Ge, fiber_bound)?;
        self.check(st, CheckId::DescentSigma, Role::Branch, sigma, Relation::Le, sigma_bound)?;
        if !self.floor_allows(st, half)? {
            return Ok(Flow::Advance);
        }
        let delta = &self.delta * q(2);
        self.reassign(st, ReassignTarget::Fiber, fiber, half, delta)?;
        self.branch(st, Decision::Descend)?;
        Ok(Flow::Loop)
    }

    fn h_stage(&mut self) -> R<(Flow, Option<HContext>)> {
        let st = Stage::HStage;
        let half = self.k / 2;
        let Some(r_x) = self.r_x.clone() else {
            return self.desync(None, "H stage without an iteration step".into());
        };
        let d = self.delta.clone();
        let theta = self.a_pow(q(half as i64) - &d * q(2));
        let fibers = self.fibers(half);
        let mut h = Rows::new();
        for (prefix, f) in &fibers {
            if theta.judge(f.len() as u128, Relation::Ge)?.1 {
                h.insert(prefix.clone());
            }
        }
        self.assert(st, CheckId::DensePrefixCount, h.len(), Relation::Gt, theta)?;
        if h.is_empty() {
            self.halt(st)?;
            return Ok((Flow::Halt, None));
        }

        let mut best: (Vec<i64>, usize) = (Vec::new(), 0);
        for (i, z) in r_x.iter().enumerate() {
            let c = h.iter().filter(|p| fibers.get(*p).is_some_and(|f| f.contains(z))).count();
            if i == 0 || c > best.1 {
                best = (z.clone(), c);
            }
        }
        let z = best.0;
        self.choose(st, ChoiceKind::CommonSuffix, &z)?;
        let h_prime: Rows = h.iter().filter(|p| fibers.get(*p).is_some_and(|f| f.contains(&z))).cloned().collect();
        let ratio = OBound::count(h.len() as u128).times_pow(q(self.base() as i64), -(&d * q(2)));
        self.assert(st, CheckId::CommonSuffixRatio, h_prime.len(), Relation::Ge, ratio)?;
        self.assert(st, CheckId::CommonSuffixSize, h_prime.len(), Relation::Ge, self.a_pow(q(half as i64) - &d * q(4)))?;

        let sums: Vec<(&Vec<i64>, i64)> = h_prime.iter().map(|r| Ok((r, self.g.sum(r)?))).collect::<Result<_>>()?;
        let sigma_hp = sums.iter().map(|(_, s)| *s).collect::<BTreeSet<_>>().len();
        let n = h_prime.len();
        let mut h_pp = Rows::new();
        for (i, (r, s)) in sums.iter().enumerate() {
            let others = sums.iter().enumerate().filter(|(j, (_, t))| *j != i && t == s).count();
            if 2 * others * sigma_hp >= n {
                h_pp.insert((*r).clone());
            }
        }
        self.assert(st, CheckId::PopularHalf, h_pp.len(), Relation::Ge, OBound::ratio(n as u128, 2))?;
        self.assert(st, CheckId::PopularSize, h_pp.len(), Relation::Ge, self.a_pow(q(half as i64) - &d * q(5)))?;
        if h_pp.is_empty() {
            self.halt(st)?;
            return Ok((Flow::Halt, None));
        }

        let sigma_hpp = sigma_rows(self.g, &h_pp)?.len();
        self.assert(st, CheckId::SigmaFilterMonotone, sigma_hpp, Relation::Le, OBound::count(sigma_hp as u128))?;
        self.assert(st, CheckId::SigmaSuffixBound, sigma_hp, Relation::Le, OBound::count(self.sigma_size as u128))?;
        let target = self.sigma_target();
        let dropped = self.check(st, CheckId::SigmaDrop, Role::Branch, sigma_hpp, Relation::Le, target.clone())?;
        if dropped && self.floor_allows(st, half)? {
            self.reassign(st, ReassignTarget::PopularSums, h_pp, half, &d * q(5))?;
            self.branch(st, Decision::ReassignH)?;
            return Ok((Flow::Loop, None));
        }
        self.assert(st, CheckId::SigmaPlateau, sigma_hpp, Relation::Ge, target)?;
        self.branch(st, Decision::FinalLeg)?;
        Ok((Flow::Advance, Some(HContext { h_prime, h_pp, r_x, sigma_h_prime: sigma_hp })))
    }

    fn final_leg(&mut self, ctx: HContext) -> R<()> {
        let st = Stage::Final;
        let half = self.k / 2;
        let (eps, c) = (self.p.epsilon.clone(), self.p.c.clone());
        let saving = self.saving();
        let ratio = &eps / (q(2) * &c);
        let g = self.g;

        let x: Vec<i64> = sigma_rows(g, &ctx.h_pp)?.into_iter().collect();
        let y: Vec<i64> = sigma_rows(g, &ctx.r_x)?.into_iter().collect();
        let energy = quadruples(g, &x, &y, self.lim)?;
        let energy_bound = OBound::pow(self.sigma_size as u128, q(3) - &saving * q(3));
        self.assert(st, CheckId::EnergyLower, energy as usize, Relation::Ge, energy_bound)?;

        let n = x.len().min(y.len());
        self.choose(st, ChoiceKind::Truncation, &[x.len() as i64, y.len() as i64, n as i64])?;
        let (xn, yn) = (&x[..n], &y[..n]);
        let (seq, sigma) = self.recorded_choice(st, ChoiceKind::SigmaSubset)?;
        if !sigma.windows(2).all(|w| w[0] < w[1]) || !sigma.iter().all(|v| xn.contains(v)) {
            self.note(Some(seq), format!("extractor output {sigma:?} is not a subset of the truncated X"));
        }
        let energy_n = quadruples(g, xn, yn, self.lim)?;
        let density = BigRational::new(BigInt::from(energy_n), BigInt::from(n as i64).pow(3));
        let doubled: BTreeSet<i64> = pairwise(g, &sigma, &sigma, false)?;
        let kappa = self.p.bsg.kappa.clone();
        if density.is_zero() {
            return self.desync(Some(seq), "zero energy density on the truncated pair".into());
        }
        let size_bound = OBound::count(n as u128).times_pow(density.clone(), kappa.clone());
        let doubling_bound = OBound::count(n as u128).times_pow(density, -kappa);
        self.assert(st, CheckId::BsgSize, sigma.len(), Relation::Ge, size_bound)?;
        self.assert(st, CheckId::BsgDoubling, doubled.len(), Relation::Le, doubling_bound)?;
        if sigma.is_empty() {
            return self.halt(st);
        }

        self.assert(st, CheckId::SigmaLarge, sigma.len(), Relation::Ge, OBound::pow(x.len() as u128, q(1) - &ratio))?;
        self.assert(st, CheckId::SmallDoubling, doubled.len(), Relation::Le, OBound::pow(sigma.len() as u128, q(1) + &ratio))?;

        let sigma_set: BTreeSet<i64> = sigma.iter().copied().collect();
        let mut h3 = Rows::new();
        for r in &ctx.h_pp {
            if sigma_set.contains(&g.sum(r)?) {
                h3.insert(r.clone());
            }
        }
        let chain = OBound::ratio(sigma.len() as u128 * ctx.h_prime.len() as u128, 2 * ctx.sigma_h_prime as u128);
        self.assert(st, CheckId::TripleChain, h3.len(), Relation::Ge, chain)?;
        let d = self.delta.clone();
        self.assert(st, CheckId::TripleSize, h3.len(), Relation::Ge, self.a_pow(q(half as i64) - &d * q(4) - &eps))?;

        let m = half - 1;
        let mut by_suffix: BTreeMap<&[i64], Vec<i64>> = BTreeMap::new();
        for r in &h3 {
            by_suffix.entry(&r[1..]).or_default().push(r[0]);
        }
        let mut best: (Vec<i64>, usize) = (Vec::new(), 0);
        for (i, w) in words(&self.ambient, m, self.lim)?.into_iter().enumerate() {
            let count = by_suffix.get(w.as_slice()).map_or(0, Vec::len);
            if i == 0 || count > best.1 {
                best = (w, count);
            }
        }
        let w = best.0;
        self.choose(st, ChoiceKind::SuffixVector, &w)?;
        let a_prime: Vec<i64> = by_suffix.get(w.as_slice()).cloned().unwrap_or_default();
        let pigeonhole = OBound::count(h3.len() as u128).times_pow(q(self.base() as i64), q(-(m as i64)));
        self.assert(st, CheckId::SuffixPigeonhole, a_prime.len(), Relation::Ge, pigeonhole)?;
        self.assert(st, CheckId::SuffixLower, a_prime.len(), Relation::Ge, self.a_pow(q(1) - &d * q(4) - &eps))?;
        self.assert(st, CheckId::SubsetLower, a_prime.len(), Relation::Ge, self.a_pow(q(1) - &eps))?;

        let sw = g.sum(&w)?;
        let shift = g.add(sw, sw)?;
        let mut shifted = BTreeSet::new();
        for &a1 in &a_prime {
            for &a2 in &a_prime {
                shifted.insert(g.add(g.add(a1, a2)?, shift)?);
            }
        }
        let missing = shifted.iter().filter(|t| !doubled.contains(t)).count();
        self.assert(st, CheckId::Containment, missing, Relation::Eq, OBound::count(0))?;

        let mut growth = Vec::new();
        for &ell in &self.p.ell_list.clone() {
            let role = if ell % 2 == 0 { Role::Assertion } else { Role::OutOfScope };
            let size = iterate_len(g, &a_prime, ell, self.lim)?;
            let sigma_size = iterate_len(g, &sigma, ell, self.lim)?;
            let el = q(ell as i64);
            let base = a_prime.len() as u128;
            let gs = Stage::Growth;
            let rel = Relation::Le;
            let ok = self.check_ell(gs, CheckId::GrowthBound, role, size, rel, OBound::pow(base, &c * (q(1) + &eps * &el)), Some(ell))?;
            let pre = OBound::pow(base, &c * (q(1) + &eps * &el * q(2)));
            self.check_ell(gs, CheckId::GrowthPrerescaled, role, size, rel, pre, Some(ell))?;
            self.check_ell(gs, CheckId::GrowthViaSigma, role, size, rel, OBound::count(sigma_size as u128), Some(ell))?;
            let plun = OBound::pow(sigma.len() as u128, q(1) + &eps * &el / (q(2) * &c));
            self.check_ell(gs, CheckId::PlunneckeSigma, role, sigma_size, rel, plun, Some(ell))?;
            growth.push((ell, size, sigma_size, ok));
        }
        self.outcome = Some(Outcome { sigma, w, a_prime, growth });
        Ok(())
    }

    fn compare_result(&mut self, result: &PipelineResult) {
        let status = match (self.halted, self.failed) {
            (true, _) => Status::DiagnosticHalt,
            (false, 0) => Status::ProvedAtScale,
            (false, _) => Status::BestEffort,
        };
        let mut diffs = Vec::new();
        if result.status != status {
            diffs.push(format!("status {:?} vs {status:?}", result.status));
        }
        if result.halt_reason.is_some() != self.halted {
            diffs.push("halt reason disagrees with the ledger".to_string());
        }
        if result.failed_assertions != self.failed {
            diffs.push(format!("failed assertions {} vs {}", result.failed_assertions, self.failed));
        }
        if result.iterations != self.iterations {
            diffs.push(format!("iterations {} vs {}", result.iterations, self.iterations));
        }
        if (result.final_k, &result.final_delta) != (self.k, &self.delta) {
            diffs.push(format!("final k/delta {}/{} vs {}/{}", result.final_k, result.final_delta, self.k, self.delta));
        }
        let initial = self.initial_sigma.unwrap_or(self.sigma_size);
        if result.initial_sigma_size != initial {
            diffs.push(format!("initial |Sigma(S)| {} vs {initial}", result.initial_sigma_size));
        }
        let reduction = result.reduction.as_ref().map(|r| (r.k, r.k_reduced, r.suffix.codes(), r.fiber));
        if reduction != self.reduction {
            diffs.push(format!("reduction {reduction:?} vs {:?}", self.reduction));
        }
        let set_codes = |s: &Option<ElemSet>| s.as_ref().map(codes);
        match &self.outcome {
            None => {
                if result.a_prime.is_some() || result.sigma.is_some() || result.w.is_some() || !result.growth.is_empty() {
                    diffs.push("result carries a final outcome the replay did not reach".into());
                }
            }
            Some(o) => {
                if set_codes(&result.a_prime).as_ref() != Some(&o.a_prime) {
                    diffs.push(format!("A' {:?} vs {:?}", set_codes(&result.a_prime), o.a_prime));
                }
                if set_codes(&result.sigma).as_ref() != Some(&o.sigma) {
                    diffs.push("Sigma differs from the recorded extractor choice".into());
                }
                if result.w.as_ref().map(|w| w.codes()).as_ref() != Some(&o.w) {
                    diffs.push(format!("w {:?} vs {:?}", result.w, o.w));
                }
                let rows: Vec<_> = result.growth.iter().map(|r| (r.ell, r.size, r.sigma_size, r.bound.pass)).collect();
                if rows != o.growth {
                    diffs.push(format!("growth rows {rows:?} vs {:?}", o.growth));
                }
            }
        }
        for d in diffs {
            self.note(None, d);
        }
    }
}
