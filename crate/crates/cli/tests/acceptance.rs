//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test -p hbsg-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use hbsg::bsg::{bsg_extract, BsgConfig};
use hbsg::exact::{rat, PowerBound, Relation};
use hbsg::group::{
    additive_energy, difference_set, iterated_sumset, plunnecke_check, ruzsa_triangle_check, sumset, ElemSet,
    GroupSpec,
};
use hbsg::oracle::{
    audit_run, brute_difference_set, brute_energy, brute_fiber, brute_iterated_sumset, brute_left_fiber,
    brute_restricted_sumset, brute_rows, brute_sigma, brute_sumset, OBound, OracleLimits, Rows,
};
use hbsg::pipeline::{run_pipeline, Status};
use hbsg::selection::{dense_prefix_set, popular_sum_filter, select_common_suffix, select_popular_intersector, FamilyOfSubsets};
use hbsg::strings::{graph_restricted_sumset, AString, BipartiteGraph, StringRepr, StringSet};
use hbsg_cli::config::OracleMode;
use hbsg_cli::report::Report;
use hbsg_cli::run::{run_all, RunOptions};
use hbsg_cli::{generate_instance, ExperimentConfig};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], summary: String) -> Outcome {
    match failures.first() {
        None => Outcome { pass: true, detail: summary },
        Some(first) => Outcome { pass: false, detail: format!("{summary}; {} failure(s), first: {first}", failures.len()) },
    }
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load_config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&repo_root().join("configs").join(name)).expect("config parses")
}

fn random_group(rng: &mut impl Rng) -> (GroupSpec, Vec<i64>) {
    match rng.random_range(0..4) {
        0 => (GroupSpec::integers(), (-20..=20).collect()),
        1 => {
            let m = rng.random_range(2..=30u64);
            (GroupSpec::Cyclic { modulus: m }, (0..m as i64).collect())
        }
        2 => {
            let p = [2u64, 3][rng.random_range(0..2)];
            let d = rng.random_range(1..=3u32);
            (GroupSpec::Vector { prime: p, dim: d }, (0..p.pow(d) as i64).collect())
        }
        _ => (GroupSpec::Window { lo: -6, hi: 6 }, (-3..=3).collect()),
    }
}

fn random_subset(rng: &mut impl Rng, pool: &[i64], lo: usize, hi: usize) -> Vec<i64> {
    let hi = hi.min(pool.len());
    let n = rng.random_range(lo.min(hi)..=hi);
    sample(rng, pool.len(), n).iter().map(|i| pool[i]).collect()
}

fn rows_of(s: &StringSet) -> Rows {
    s.iter().map(|x| x.codes()).collect()
}

/// Same value, or both sides refuse (window overflow).
fn agree<T: PartialEq>(fast: hbsg::Result<T>, slow: hbsg::Result<T>) -> bool {
    match (fast, slow) {
        (Ok(a), Ok(b)) => a == b,
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

fn criterion_1() -> Outcome {
    let lim = OracleLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    let mut checks = 0u64;
    let cases = 1000;
    for case in 0..cases {
        let (spec, pool) = random_group(&mut rng);
        let x = ElemSet::from_codes(spec, random_subset(&mut rng, &pool, 0, 12)).unwrap();
        let y = ElemSet::from_codes(spec, random_subset(&mut rng, &pool, 0, 12)).unwrap();
        let mut check = |ok: bool, what: &str| {
            checks += 1;
            if !ok {
                failures.push(format!("set case {case} {spec:?}: {what}"));
            }
        };
        check(agree(sumset(&x, &y), brute_sumset(&x, &y, &lim)), "sumset");
        check(agree(difference_set(&x, &y), brute_difference_set(&x, &y, &lim)), "difference set");
        for ell in 1..=4 {
            check(agree(iterated_sumset(&x, ell), brute_iterated_sumset(&x, ell, &lim)), "iterated sumset");
        }
        check(agree(additive_energy(&x, &y), brute_energy(&x, &y, &lim)), "energy");
        if !x.is_empty() && !y.is_empty() {
            let edges: Vec<(usize, usize)> = (0..x.len())
                .flat_map(|i| (0..y.len()).map(move |j| (i, j)))
                .filter(|_| rng.random_bool(0.4))
                .collect();
            let g = BipartiteGraph::new(x.len(), y.len(), edges).unwrap();
            check(agree(graph_restricted_sumset(&x, &y, &g), brute_restricted_sumset(&x, &y, &g, &lim)), "restricted sumset");
        }
    }
    let mut string_cases = 0;
    while string_cases < cases {
        let (spec, pool) = random_group(&mut rng);
        let a = ElemSet::from_codes(spec, random_subset(&mut rng, &pool, 1, 8)).unwrap();
        let k = rng.random_range(1..=4usize);
        let universe = (a.len() as u64).pow(k as u32);
        let keep = rng.random_range(0..=universe as usize);
        let codes: Vec<u64> = sample(&mut rng, universe as usize, keep).iter().map(|c| c as u64).collect();
        let s = StringSet::from_codes(&a, k, codes).unwrap();
        if s.sigma().is_err() {
            continue;
        }
        let repr = if rng.random_bool(0.5) { StringRepr::Complement } else { StringRepr::Explicit };
        let s = s.with_repr(repr);
        string_cases += 1;
        let mut check = |ok: bool, what: &str| {
            checks += 1;
            if !ok {
                failures.push(format!("string case {string_cases} {spec:?} k={k}: {what}"));
            }
        };
        check(s.sigma().ok() == brute_sigma(&s, &lim).ok(), "sigma");
        let words: Vec<i64> = a.iter().map(|e| e.0).collect();
        for len in 1..k {
            for _ in 0..3 {
                let w: Vec<i64> = (0..len).map(|_| words[rng.random_range(0..words.len())]).collect();
                let w = AString::from_codes(&w);
                check(s.right_fiber(&w).map(|f| rows_of(&f)).ok() == brute_fiber(&s, &w, &lim).ok(), "right fiber");
                check(s.left_fiber(&w).map(|f| rows_of(&f)).ok() == brute_left_fiber(&s, &w, &lim).ok(), "left fiber");
            }
        }
    }
    outcome(&failures, format!("{cases} set instances + {cases} string instances, {checks} exact comparisons"))
}

/// Every subset of `{0..29}` of size 1..=7, split by its two least elements.
fn criterion_2() -> Outcome {
    const N: i64 = 30;
    let tasks: Vec<(i64, Option<i64>)> =
        (0..N).flat_map(|a| std::iter::once((a, None)).chain((a + 1..N).map(move |b| (a, Some(b))))).collect();
    let next = AtomicUsize::new(0);
    let checked = AtomicU64::new(0);
    let failed = std::sync::Mutex::new(Vec::new());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(a, b)) = tasks.get(t) else { break };
                let mut local = 0u64;
                let mut visit = |set: &[i64]| {
                    local += 1;
                    let x = ElemSet::from_codes(GroupSpec::integers(), set.iter().copied()).unwrap();
                    match plunnecke_check(&x, 4) {
                        Ok(r) if r.pass => {}
                        other => failed.lock().unwrap().push(format!("{set:?}: {other:?}")),
                    }
                };
                match b {
                    None => visit(&[a]),
                    Some(b) => extend(&mut vec![a, b], b + 1, N, 7, &mut visit),
                }
                checked.fetch_add(local, Ordering::Relaxed);
            });
        }
    });
    fn extend(cur: &mut Vec<i64>, from: i64, n: i64, max: usize, visit: &mut impl FnMut(&[i64])) {
        visit(cur);
        if cur.len() == max {
            return;
        }
        for v in from..n {
            cur.push(v);
            extend(cur, v + 1, n, max, visit);
            cur.pop();
        }
    }
    let subsets = checked.load(Ordering::Relaxed);
    let mut failures = failed.into_inner().unwrap();
    let expected: u64 = (1..=7).map(|k| binomial(30, k)).sum();
    if subsets != expected {
        failures.push(format!("visited {subsets} subsets, expected {expected}"));
    }

    let lim = OracleLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut triples = 0;
    while triples < 1000 {
        let (spec, pool) = random_group(&mut rng);
        let [x, y, z] = [0, 1, 2].map(|_| ElemSet::from_codes(spec, random_subset(&mut rng, &pool, 1, 12)).unwrap());
        let Ok(report) = ruzsa_triangle_check(&x, &y, &z) else { continue };
        triples += 1;
        let size = |r: hbsg::Result<ElemSet>| r.unwrap().len() as u128;
        let lhs = size(brute_difference_set(&x, &z, &lim)) * y.len() as u128;
        let rhs = size(brute_difference_set(&x, &y, &lim)) * size(brute_difference_set(&y, &z, &lim));
        if !report.certificate.pass || lhs > rhs {
            failures.push(format!("Ruzsa triple {triples} in {spec:?}: {report:?}"));
        }
    }
    outcome(&failures, format!("Plünnecke on {subsets} subsets (l <= 4), Ruzsa on {triples} triples"))
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let families = 500;
    for case in 0..families {
        let n = rng.random_range(2..=64u64);
        let r = rng.random_range(1..=32usize);
        let den = [20i64, 10, 5][case % 3];
        let delta = rat(1, den);
        // Members of size at least n^(1 - delta) guarantee the precondition.
        let min = OBound::pow(n as u128, rat(1, 1) - &delta).floor().unwrap().0.to_string().parse::<u64>().unwrap() + 1;
        let members: Vec<Vec<u64>> = (0..r)
            .map(|_| {
                let size = rng.random_range(min.min(n)..=n) as usize;
                sample(&mut rng, n as usize, size).iter().map(|v| v as u64).collect()
            })
            .collect();
        let family = FamilyOfSubsets::new(n, members.clone()).unwrap();
        let cert = select_popular_intersector(&family, &delta).unwrap();
        let direct: Vec<u64> = family
            .members()
            .iter()
            .map(|uj| family.members().iter().map(|ui| ui.iter().filter(|v| uj.binary_search(v).is_ok()).count() as u64).sum())
            .collect();
        let best = *direct.iter().max().unwrap();
        let total: u64 = family.members().iter().map(|m| m.len() as u64).sum();
        let pre = OBound::count(r as u128).times_pow(int(n), rat(1, 1) - &delta);
        let post = OBound::count(r as u128).times_pow(int(n), rat(1, 1) - &delta * rat(2, 1));
        let (_, pre_ok) = pre.judge(total as u128, Relation::Ge).unwrap();
        let (post_rhs, post_ok) = post.judge(best as u128, Relation::Ge).unwrap();
        let ok = pre_ok
            && cert.precondition.pass
            && cert.threshold.pass
            && post_ok
            && cert.measured == best
            && direct.iter().position(|&s| s == best) == Some(cert.chosen)
            && cert.threshold.rhs == post_rhs;
        if !ok {
            failures.push(format!("family {case} (n={n}, r={r}, delta=1/{den}): {cert:?}"));
        }
    }
    outcome(&failures, format!("{families} families with n <= 64, r <= 32, delta in {{1/20, 1/10, 1/5}}"))
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn deleted(a: &ElemSet, k: usize, fraction: f64, rng: &mut impl Rng) -> StringSet {
    let full = StringSet::full(a, k).unwrap();
    let total = full.len();
    let gone = sample(rng, total, (total as f64 * fraction) as usize);
    StringSet::complement_of(a, k, gone.iter().map(|c| full.decode(c as u64, k))).unwrap()
}

fn ap(n: usize) -> ElemSet {
    ElemSet::interval(GroupSpec::integers(), 0, n).unwrap()
}

fn criterion_4() -> Outcome {
    let lim = OracleLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let (mut filtered, mut premise, mut premise_held, mut flagged) = (0, 0, 0, 0);
    let instances = 100;
    for case in 0..instances {
        let k = if case % 2 == 0 { 4 } else { 8 };
        let n = if k == 4 { rng.random_range(2..=12) } else { rng.random_range(2..=4) };
        let fraction = rng.random_range(0.0..0.3);
        let s = deleted(&ap(n), k, fraction, &mut rng);
        let half = k / 2;

        let rows = brute_rows(&s, &lim).unwrap();
        let mut fibers: BTreeMap<Vec<i64>, Vec<Vec<i64>>> = BTreeMap::new();
        for r in &rows {
            fibers.entry(r[..half].to_vec()).or_default().push(r[half..].to_vec());
        }
        let family = FamilyOfSubsets::right_fibers(&s).unwrap();
        if fibers.values().map(Vec::len).sum::<usize>() != s.len() || family.total() as usize != s.len() {
            failures.push(format!("instance {case}: fiber partition"));
        }
        let cert = select_popular_intersector(&family, &(rat(1, 10) * rat(2, k as i64))).unwrap();
        let x = s.decode(cert.chosen as u64, half);
        let r_x = s.right_fiber(&x).unwrap();
        let restricted = s.restrict_by_right(&r_x).unwrap();
        let direct: usize =
            fibers.values().map(|f| f.iter().filter(|z| r_x.contains(&AString::from_codes(z))).count()).sum();
        if restricted.len() != direct || restricted.len() as u64 != cert.measured {
            failures.push(format!("instance {case}: restriction {} vs {direct}", restricted.len()));
        }

        // The popular filter on an H' built as in the pipeline.
        let theta = PowerBound::power(n as u128, rat(half as i64, 1) - rat(1, 5));
        let dense = dense_prefix_set(&s, &theta).unwrap();
        if dense.h.is_empty() || r_x.is_empty() {
            continue;
        }
        let one = PowerBound::count(1);
        let h_prime = select_common_suffix(&dense.h, &s, &r_x, &one, &one).unwrap().h_prime;
        if h_prime.is_empty() {
            continue;
        }
        filtered += 1;
        let f = popular_sum_filter(&h_prime).unwrap();
        let size = h_prime.len();
        let holds = 2 * f.h_pp.len() >= size;
        if f.certificate.pass != holds {
            failures.push(format!("instance {case}: popular filter flag {} but |H''| = {}, |H'| = {size}", f.certificate.pass, f.h_pp.len()));
        }
        if !f.certificate.pass {
            flagged += 1;
        }
        if 2 * f.sigma_size <= size {
            premise += 1;
            if holds {
                premise_held += 1;
            } else {
                failures.push(format!("instance {case}: |Sigma(H')| = {} <= |H'|/2 = {size}/2 but |H''| = {}", f.sigma_size, f.h_pp.len()));
            }
        }
    }
    outcome(
        &failures,
        format!(
            "{instances} deletion instances; popular filter on {filtered}, premise |Sigma(H')| <= |H'|/2 on {premise} ({premise_held} held), {flagged} flagged failures"
        ),
    )
}

/// The demo sweep with the oracle on, run once and shared by criteria 5 and 8.
fn sweep_reports() -> hbsg_cli::Result<Vec<Report>> {
    let mut specs = load_config("demo.json").expand()?;
    specs.extend(load_config("sweep.json").expand()?);
    let mut opts = RunOptions::from_config(&load_config("sweep.json"));
    opts.oracle = OracleMode::On;
    run_all(&specs, &opts)
}

fn criterion_5(reports: &[Report]) -> Outcome {
    let lim = OracleLimits::default();
    let mut failures = Vec::new();
    let mut finished = 0;
    let mut memberships = 0usize;
    for r in reports.iter().filter(|r| r.result.status != Status::DiagnosticHalt) {
        finished += 1;
        let res = &r.result;
        let (Some(a), Some(sigma), Some(w)) = (&res.a_prime, &res.sigma, &res.w) else {
            failures.push(format!("{}: finished without A', Sigma or w", r.instance.id));
            continue;
        };
        let g = a.spec();
        let sw = w.codes().iter().try_fold(g.zero().unwrap(), |acc, &c| g.add(acc, g.elem(c)?)).unwrap();
        let shift = g.add(sw, sw).unwrap();
        let doubled = brute_sumset(sigma, sigma, &lim).unwrap();
        for x in a.iter() {
            for y in a.iter() {
                memberships += 1;
                let t = g.add(g.add(x, y).unwrap(), shift).unwrap();
                if !doubled.contains(t) {
                    failures.push(format!("{}: {x:?} + {y:?} + 2 Sigma(w) not in Sigma + Sigma", r.instance.id));
                }
            }
        }
    }
    if finished == 0 {
        failures.push("no run reached the final leg".into());
    }
    outcome(&failures, format!("{finished} of {} sweep runs finished; {memberships} memberships checked", reports.len()))
}

fn criterion_6() -> Outcome {
    let lim = OracleLimits::default();
    let mut failures = Vec::new();
    let recheck = |x: &ElemSet, cfg: &BsgConfig, failures: &mut Vec<String>, label: &str| -> bool {
        let r = bsg_extract(x, x, cfg).unwrap();
        let n = x.len();
        let energy = brute_energy(x, x, &lim).unwrap();
        let c = BigRational::new(BigInt::from(energy), BigInt::from(n).pow(3));
        let doubled = brute_sumset(&r.x_prime, &r.x_prime, &lim).unwrap().len();
        let (size_rhs, size_ok) =
            OBound::count(n as u128).times_pow(c.clone(), cfg.kappa.clone()).judge(r.x_prime.len() as u128, Relation::Ge).unwrap();
        let (dbl_rhs, dbl_ok) =
            OBound::count(n as u128).times_pow(c.clone(), -cfg.kappa.clone()).judge(doubled as u128, Relation::Le).unwrap();
        let consistent = r.x_prime.is_subset(x)
            && r.energy == energy
            && r.density == c
            && r.doubled == doubled
            && (r.size.rhs.as_str(), r.size.pass) == (size_rhs.as_str(), size_ok)
            && (r.doubling.rhs.as_str(), r.doubling.pass) == (dbl_rhs.as_str(), dbl_ok)
            && r.pass == (size_ok && dbl_ok);
        if !consistent {
            failures.push(format!("{label}: flags disagree with recomputation"));
        }
        size_ok && dbl_ok
    };
    for n in [8, 16, 32] {
        if !recheck(&ap(n), &BsgConfig::default(), &mut failures, &format!("AP({n})")) {
            failures.push(format!("AP({n}) misses the kappa = 20 bounds"));
        }
    }
    let mut passing = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut codes: Vec<i64> = (0..16).collect();
        while codes.len() < 32 {
            let v = rng.random_range(16..1000);
            if !codes.contains(&v) {
                codes.push(v);
            }
        }
        let x = ElemSet::from_codes(GroupSpec::integers(), codes).unwrap();
        passing += recheck(&x, &BsgConfig::default(), &mut failures, &format!("AP(16) + noise, seed {seed}")) as usize;
    }
    outcome(&failures, format!("APs 8/16/32 within kappa = 20 bounds; 10 noisy instances consistent ({passing} pass their bounds)"))
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let spec = &load_config("demo.json").expand().unwrap()[0];
    let inst = generate_instance(spec).unwrap();
    let first = run_pipeline(&inst.a, &inst.s, &spec.params).unwrap();
    let second = run_pipeline(&inst.a, &inst.s, &spec.params).unwrap();
    if first.status == Status::DiagnosticHalt {
        failures.push(format!("demo halted: {:?}", first.halt_reason));
    }
    if first.ledger.to_json_bytes() != second.ledger.to_json_bytes() {
        failures.push("ledgers differ between runs".into());
    }
    let audit = audit_run(&inst.a, &inst.s, &spec.params, &first, &OracleLimits::default()).unwrap();
    if !audit.pass || audit.entries_replayed != first.ledger.len() {
        failures.push(format!(
            "audit replayed {}/{} entries with {} mismatches",
            audit.entries_replayed,
            first.ledger.len(),
            audit.mismatches.len()
        ));
    }
    outcome(
        &failures,
        format!(
            "demo {} with {} ledger entries, {} checks recomputed, ledgers byte-identical",
            first.status.as_str(),
            first.ledger.len(),
            audit.checks_recomputed
        ),
    )
}

fn criterion_8(reports: &[Report]) -> Outcome {
    let lim = OracleLimits::default();
    let mut failures = Vec::new();
    let (mut rows, mut gaps) = (0, 0);
    for r in reports {
        let Some(a) = &r.result.a_prime else { continue };
        let p = &r.instance.params;
        let oracle = r.oracle.as_ref().expect("oracle on");
        for row in &r.result.growth {
            rows += 1;
            let mut acc = a.clone();
            for _ in 1..row.ell {
                acc = brute_sumset(&acc, a, &lim).unwrap();
            }
            let exp = &p.c * (rat(1, 1) + &p.epsilon * rat(row.ell as i64, 1));
            let (rhs, pass) = OBound::pow(a.len() as u128, exp).judge(acc.len() as u128, Relation::Le).unwrap();
            if acc.len() != row.size || rhs != row.bound.rhs || pass != row.bound.pass {
                failures.push(format!("{} l={}: pipeline {} / {} / {}, oracle {} / {rhs} / {pass}", r.instance.id, row.ell, row.size, row.bound.rhs, row.bound.pass, acc.len()));
            }
            if r.sizes.ambient <= 12 {
                match oracle.best_subset.iter().find(|g| g.ell == row.ell) {
                    Some(g) if g.pipeline_size == row.size && g.gap == row.size - g.optimum => gaps += 1,
                    other => failures.push(format!("{} l={}: subset gap {other:?}", r.instance.id, row.ell)),
                }
            }
        }
    }
    if rows == 0 {
        failures.push("no growth rows in the sweep".into());
    }
    outcome(&failures, format!("{rows} growth rows recomputed, {gaps} subset gaps reported"))
}

fn main() {
    let mut all = true;
    let mut report = |id: usize, name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let took = t.elapsed();
        let pass = o.pass && took <= limit;
        all &= pass;
        let late = if took > limit { format!(", over the {}s limit", limit.as_secs()) } else { String::new() };
        println!("{} {id}. {name}: {} [{:.1}s{late}]", if pass { "PASS" } else { "FAIL" }, o.detail, took.as_secs_f64());
    };
    let min = |m: u64| Duration::from_secs(60 * m);
    report(1, "oracle equivalence", min(1), &mut criterion_1);
    report(2, "theorem verifiers", min(5), &mut criterion_2);
    report(3, "popular intersector", Duration::from_secs(30), &mut criterion_3);
    report(4, "stage identities", min(2), &mut criterion_4);
    let t = Instant::now();
    let sweep = sweep_reports().expect("sweep runs");
    let sweep_secs = t.elapsed();
    println!("     (sweep of {} runs took {:.1}s)", sweep.len(), sweep_secs.as_secs_f64());
    report(5, "final-leg containment", min(5), &mut || criterion_5(&sweep));
    report(6, "BSG sanity", min(1), &mut criterion_6);
    report(7, "replay and ledger audit", min(1), &mut criterion_7);
    report(8, "growth-table honesty", min(5).saturating_sub(sweep_secs), &mut || criterion_8(&sweep));
    if !all {
        std::process::exit(1);
    }
}
