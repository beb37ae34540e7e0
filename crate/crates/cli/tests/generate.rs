use hbsg::group::GroupElem;
use hbsg::oracle::{brute_rows, brute_sigma, OracleLimits};
use hbsg_cli::{generate_instance, CliError, InstanceSpec};
use serde_json::json;

fn spec(v: serde_json::Value) -> InstanceSpec {
    serde_json::from_value(v).unwrap()
}

#[test]
fn full_product_of_sixteen() {
    let s = spec(json!({
        "id": "ap16",
        "ambient": { "kind": "ap", "start": 0, "step": 1, "n": 16 },
        "strings": { "kind": "full-product" },
        "k": 4
    }));
    let inst = generate_instance(&s).unwrap();
    assert_eq!(inst.a.len(), 16);
    assert_eq!(inst.s.len(), 65536);
}

#[test]
fn seeded_deletion_replays() {
    let make = |seed: u64| {
        spec(json!({
            "id": "del",
            "ambient": { "kind": "ap", "start": 0, "step": 1, "n": 16 },
            "strings": { "kind": "random-deletion", "fraction": "0.1", "seed": seed },
            "k": 4
        }))
    };
    let a = generate_instance(&make(7)).unwrap();
    let b = generate_instance(&make(7)).unwrap();
    assert_eq!(a.s.to_json(), b.s.to_json());
    assert_eq!(a.s.len(), 65536 - 6553);
    let c = generate_instance(&make(8)).unwrap();
    assert_ne!(a.s.to_json(), c.s.to_json());
}

#[test]
fn deletion_beyond_the_density_floor_is_rejected() {
    // 16^(4 - 1/20) is about 56000; deleting half leaves 32768.
    let s = spec(json!({
        "id": "too-sparse",
        "ambient": { "kind": "ap", "start": 0, "step": 1, "n": 16 },
        "strings": { "kind": "random-deletion", "fraction": "0.5", "seed": 1 },
        "k": 4
    }));
    assert!(matches!(generate_instance(&s), Err(CliError::Infeasible { .. })));
}

#[test]
fn sum_constrained_sigma_lies_in_targets() {
    let lim = OracleLimits::default();
    for (group, targets) in [
        (json!({ "window": { "lo": -100, "hi": 100 } }), json!([0, 3, 7, 11])),
        (json!({ "cyclic": { "modulus": 11 } }), json!([1, 2, 9])),
        (json!({ "vector": { "prime": 3, "dim": 2 } }), json!([[0, 0], [1, 2]])),
    ] {
        let s = spec(json!({
            "id": "sum",
            "group": group,
            "ambient": { "kind": "random", "n": 5, "window": [0, 8], "seed": 3 },
            "strings": { "kind": "sum-constrained", "targets": targets },
            "k": 3
        }));
        let inst = generate_instance(&s).unwrap();
        let g = inst.a.spec();
        let t: Vec<GroupElem> = targets.as_array().unwrap().iter().map(|v| g.from_json(v).unwrap()).collect();
        let sigma = brute_sigma(&inst.s, &lim).unwrap();
        assert!(sigma.iter().all(|e| t.contains(&e)), "{group}");
        // Every string of A^k with a target sum is present.
        let rows = brute_rows(&inst.s, &lim).unwrap();
        let full = hbsg::strings::StringSet::full(&inst.a, 3).unwrap();
        let expected = full.iter().filter(|x| t.contains(&hbsg::strings::sigma_string(g, x).unwrap())).count();
        assert_eq!(rows.len(), expected);
    }
}

#[test]
fn noise_and_random_ambients_have_declared_sizes() {
    let noisy = spec(json!({
        "id": "noisy",
        "ambient": { "kind": "ap-plus-noise", "n_ap": 8, "n_noise": 5, "window": [3, 40], "seed": 2 },
        "strings": { "kind": "full-product" },
        "k": 2
    }));
    let inst = generate_instance(&noisy).unwrap();
    assert_eq!(inst.a.len(), 13);
    assert!((0..8).all(|c| inst.a.contains(GroupElem(c))));

    let cramped = spec(json!({
        "id": "cramped",
        "ambient": { "kind": "random", "n": 10, "window": [0, 5], "seed": 2 },
        "strings": { "kind": "full-product" },
        "k": 2
    }));
    assert!(matches!(generate_instance(&cramped), Err(CliError::Infeasible { .. })));

    let wraps = spec(json!({
        "id": "wraps",
        "group": { "cyclic": { "modulus": 5 } },
        "ambient": { "kind": "ap", "start": 0, "step": 1, "n": 6 },
        "strings": { "kind": "full-product" },
        "k": 2
    }));
    assert!(matches!(generate_instance(&wraps), Err(CliError::Infeasible { .. })));
}

#[test]
fn explicit_sets_round_trip() {
    let s = spec(json!({
        "id": "explicit",
        "ambient": { "kind": "explicit", "elements": [0, 2, 5] },
        "strings": { "kind": "explicit", "set": { "k": 2, "strings": [[0, 2], [5, 5], [2, 0]] } },
        "k": 2
    }));
    let inst = generate_instance(&s).unwrap();
    assert_eq!(inst.s.len(), 3);
    let back = spec(json!({
        "id": "explicit",
        "ambient": { "kind": "explicit", "elements": inst.a.to_json()["elements"] },
        "strings": { "kind": "explicit", "set": inst.s.to_json() },
        "k": 2
    }));
    assert_eq!(generate_instance(&back).unwrap().s.to_json(), inst.s.to_json());
}
