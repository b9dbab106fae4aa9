use annulus_perc::geometry::{Annulus, Norm, Vec2};
use annulus_perc::pointfield::{Box2, PointField, Topology};
use annulus_perc::renorm::*;
use annulus_perc::rng::{from_seed, stream};
use annulus_perc::Error;
use rand::seq::SliceRandom;

fn desk(area: f64) -> RenormParams {
    let a = Annulus::with_area(Norm::Round, 1.0, area).unwrap();
    RenormParams::explicit(a, 3, 6.0, Some(20), Constants::default()).unwrap()
}

fn bond_field(params: &RenormParams, seed: u64) -> PointField<f64> {
    let big = params.big_r;
    let bx = Box2::new(
        Vec2::new(-3.0 * big, -3.0 * big),
        6.0 * big,
        12.0 * big,
        Topology::Hard,
    )
    .unwrap();
    PointField::sample_poisson(bx, 1.0, params.annulus.euclidean_reach(), seed).unwrap()
}

fn lattice_field(params: &RenormParams, depth: u64, seed: u64) -> PointField<f64> {
    let big = params.big_r;
    let side = 6.0 * big * (depth as f64 + 1.0);
    let bx = Box2::new(
        Vec2::new(-3.0 * big, -3.0 * big),
        side,
        side,
        Topology::Hard,
    )
    .unwrap();
    PointField::sample_poisson(bx, 1.0, params.annulus.euclidean_reach(), seed).unwrap()
}

/// A zigzag chain from (0, 2R) to (0, 6R) in exactly T = 36 steps of length
/// about 0.91r, capped by three points at distance 0.95r beyond its end,
/// plus two isolated seeds.
fn chain_setup() -> (PointField<f64>, RenormParams, Vec<Vec2<f64>>) {
    let a = Annulus::round(1.0, 0.1).unwrap();
    let params = RenormParams::explicit(a, 3, 6.0, Some(20), Constants::default()).unwrap();
    let big = params.big_r;
    let mut pts = Vec::new();
    let start = Vec2::new(0.0, 2.0 * big);
    for k in 1..=36 {
        let x = if k % 2 == 1 { 0.62 } else { 0.0 };
        pts.push(Vec2::new(x, start.y + k as f64 * 2.0 / 3.0));
    }
    let end = *pts.last().unwrap();
    for deg in [65.0f64, 90.0, 115.0] {
        let t = deg.to_radians();
        pts.push(end + Vec2::new(0.95 * t.cos(), 0.95 * t.sin()));
    }
    let p = vec![start, Vec2::new(-10.0, 0.0), Vec2::new(10.0, 0.0)];
    pts.extend(p.iter().copied());
    let bx = Box2::new(
        Vec2::new(-3.0 * big, -3.0 * big),
        6.0 * big,
        12.0 * big,
        Topology::Hard,
    )
    .unwrap();
    (PointField::from_points(bx, pts, 1.0).unwrap(), params, p)
}

#[test]
fn empty_seed_set_gives_a_closed_empty_bond() {
    let params = desk(10.0);
    let field = bond_field(&params, 1);
    let out = bond_explore(
        &field,
        Bond::vertical((0, 0)),
        &[],
        &[],
        &params,
        &mut from_seed(0),
    )
    .unwrap();
    assert!(!out.open);
    assert!(out.p_prime.is_empty() && out.q_prime.is_empty());
    assert!(verify_bond(&out, &field, &[], &[], &params).ok());
}

#[test]
fn covering_q_makes_every_candidate_bad() {
    let params = desk(10.0);
    let field = bond_field(&params, 2);
    let p = initial_points(&field, &params).unwrap();
    let big = params.big_r;
    let mut q = Vec::new();
    let step = 0.5 * params.r();
    let mut y = -3.0 * big + 0.25 * step;
    while y <= 9.0 * big {
        let mut x = -3.0 * big + 0.25 * step;
        while x <= 3.0 * big {
            q.push(Vec2::new(x, y));
            x += step;
        }
        y += step;
    }
    let out = bond_explore(
        &field,
        Bond::vertical((0, 0)),
        &p,
        &q,
        &params,
        &mut from_seed(0),
    )
    .unwrap();
    assert!(!out.open);
    assert!(out.examined > 0);
    assert_eq!(out.bad, out.examined);
    assert!(out.q_prime.is_empty());
    assert!(verify_bond(&out, &field, &p, &q, &params).ok());
}

#[test]
fn chain_opens_the_bond_and_passes_every_condition() {
    let (field, params, p) = chain_setup();
    let out = bond_explore(
        &field,
        Bond::vertical((0, 0)),
        &p,
        &[],
        &params,
        &mut from_seed(3),
    )
    .unwrap();
    assert!(out.open, "{out:?}");
    assert_eq!(out.x_found, 1);
    assert_eq!(out.phase1_survivors, 1);
    assert_eq!(out.phase2_generations, 1);
    assert_eq!(out.p_prime.len(), 3);
    assert_eq!(out.q_prime.len(), 36);
    let rep = verify_bond(&out, &field, &p, &[], &params);
    assert!(rep.ok(), "{:?}", rep.violations);
}

#[test]
fn verifier_reports_constructed_violations() {
    let (field, params, p) = chain_setup();
    let out = bond_explore(
        &field,
        Bond::vertical((0, 0)),
        &p,
        &[],
        &params,
        &mut from_seed(3),
    )
    .unwrap();

    let mut moved = out.clone();
    moved.p_prime[0] = moved.p_prime[0] + Vec2::new(3.0 * params.big_r, 0.0);
    let rep = verify_bond(&moved, &field, &p, &[], &params);
    assert!(!rep.a);

    let mut cut = out.clone();
    cut.q_prime.truncate(10);
    let rep = verify_bond(&cut, &field, &p, &[], &params);
    assert!(!rep.e && rep.a && rep.b && rep.d);

    let q = vec![out.q_prime[5] + Vec2::new(0.0, 0.95)];
    let rep = verify_bond(&out, &field, &p, &q, &params);
    assert!(!rep.d);

    let mut dup = out.clone();
    dup.q_prime.push(dup.q_prime[0]);
    assert!(!verify_bond(&dup, &field, &p, &[], &params).c);
}

#[test]
fn rejects_bad_inputs() {
    let params = desk(10.0);
    let field = bond_field(&params, 4);
    let far = vec![Vec2::new(2.5 * params.big_r, 0.0)];
    assert!(bond_explore(
        &field,
        Bond::vertical((0, 0)),
        &far,
        &[],
        &params,
        &mut from_seed(0)
    )
    .is_err());
    let twin = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0)];
    assert!(matches!(
        bond_explore(
            &field,
            Bond::vertical((0, 0)),
            &twin,
            &[],
            &params,
            &mut from_seed(0)
        ),
        Err(Error::SeparationViolated { .. })
    ));
    let diagonal = Bond {
        from: (0, 0),
        to: (1, 1),
    };
    assert!(bond_explore(&field, diagonal, &[], &[], &params, &mut from_seed(0)).is_err());
}

#[test]
fn desk_preset_bonds_never_violate_and_replay_locally() {
    // open frequency at this preset was measured as 0 over 1000 seeds: the
    // phase-one target lies about 9 diffusive standard deviations away
    let params = desk(10.0);
    let mut opened = 0;
    for s in 0..100 {
        let field = bond_field(&params, 100 + s);
        let p = initial_points(&field, &params).unwrap();
        let rng = stream(s, "bond", 0);
        let out = bond_explore(
            &field,
            Bond::vertical((0, 0)),
            &p,
            &[],
            &params,
            &mut rng.clone(),
        )
        .unwrap();
        let rep = verify_bond(&out, &field, &p, &[], &params);
        assert!(rep.ok(), "seed {s}: {:?}", rep.violations);
        assert!(out.q_prime.len() as u64 <= params.budget);
        assert!(
            locality_replay(&field, &out, &p, &[], &params, &rng).unwrap(),
            "seed {s}"
        );
        opened += out.open as u32;
    }
    assert!(opened <= 5);
}

#[test]
fn horizontal_bonds_with_prior_q() {
    let params = desk(10.0);
    let big = params.big_r;
    for s in 0..20 {
        let bx = Box2::new(
            Vec2::new(-3.0 * big, -3.0 * big),
            12.0 * big,
            6.0 * big,
            Topology::Hard,
        )
        .unwrap();
        let field =
            PointField::sample_poisson(bx, 1.0, params.annulus.euclidean_reach(), s).unwrap();
        let p = initial_points(&field, &params).unwrap();
        let first = bond_explore(
            &field,
            Bond::vertical((0, 0)),
            &p,
            &[],
            &params,
            &mut from_seed(s),
        )
        .unwrap();
        let u = BlockLattice::new(big).union(Bond::horizontal((0, 0)));
        let q: Vec<Vec2<f64>> = first
            .q_prime
            .iter()
            .copied()
            .filter(|z| u.contains(*z))
            .collect();
        let out = bond_explore(
            &field,
            Bond::horizontal((0, 0)),
            &p,
            &q,
            &params,
            &mut from_seed(s + 1),
        )
        .unwrap();
        let rep = verify_bond(&out, &field, &p, &q, &params);
        assert!(rep.ok(), "{:?}", rep.violations);
        let rng = from_seed(s + 1);
        assert!(locality_replay(&field, &out, &p, &q, &params, &rng).unwrap());
    }
}

#[test]
fn permuting_seed_order_keeps_conditions() {
    let params = desk(10.0);
    let field = bond_field(&params, 7);
    let mut p = initial_points(&field, &params).unwrap();
    let (chain_field, chain_params, mut chain_p) = chain_setup();
    let mut rng = from_seed(8);
    for _ in 0..5 {
        p.shuffle(&mut rng);
        let out = bond_explore(
            &field,
            Bond::vertical((0, 0)),
            &p,
            &[],
            &params,
            &mut from_seed(9),
        )
        .unwrap();
        assert!(verify_bond(&out, &field, &p, &[], &params).ok());
        chain_p.shuffle(&mut rng);
        let out = bond_explore(
            &chain_field,
            Bond::vertical((0, 0)),
            &chain_p,
            &[],
            &chain_params,
            &mut from_seed(9),
        )
        .unwrap();
        assert!(out.open);
        assert!(verify_bond(&out, &chain_field, &chain_p, &[], &chain_params).ok());
    }
}

#[test]
fn open_frequency_is_monotone_in_area() {
    let mut freq = Vec::new();
    for area in [6.0, 10.0, 14.0] {
        let params = desk(area);
        let mut open = 0u32;
        for s in 0..200 {
            let field = bond_field(&params, 1000 + s);
            let p = initial_points(&field, &params).unwrap();
            let out = bond_explore(
                &field,
                Bond::vertical((0, 0)),
                &p,
                &[],
                &params,
                &mut stream(s, "mono", 0),
            )
            .unwrap();
            open += out.open as u32;
        }
        freq.push(open as f64 / 200.0);
    }
    for w in freq.windows(2) {
        let se = ((w[0] * (1.0 - w[0]) + w[1] * (1.0 - w[1])) / 200.0).sqrt();
        assert!(w[1] >= w[0] - 3.0 * se, "{freq:?}");
    }
}

#[test]
fn lattice_depth_zero_reaches_only_the_origin() {
    let params = desk(10.0);
    let field = lattice_field(&params, 0, 5);
    let trace = lattice_run(&field, &params, &LatticeConfig::exploratory(0), 1).unwrap();
    assert!(trace.records.is_empty());
    assert_eq!(trace.reached, vec![(0, 0)]);
    assert!(trace.coupling.unwrap().ok());
}

#[test]
fn lattice_on_an_empty_field_fails_to_initialise() {
    let params = desk(10.0);
    let bx = Box2::square(100.0).unwrap();
    let field = PointField::from_points(bx, Vec::new(), 2.0).unwrap();
    assert!(matches!(
        lattice_run(&field, &params, &LatticeConfig::exploratory(2), 1),
        Err(Error::InitializationFailed {
            found: 0,
            needed: 3
        })
    ));
}

#[test]
fn strict_mode_refuses_desk_parameters() {
    let params = desk(10.0);
    let field = lattice_field(&params, 1, 5);
    let mut cfg = LatticeConfig::exploratory(1);
    cfg.mode = Mode::Strict;
    assert!(matches!(
        lattice_run(&field, &params, &cfg, 1),
        Err(Error::StrictConstraints(_))
    ));
}

#[test]
fn lattice_runs_keep_budget_and_coupling() {
    let params = desk(10.0);
    for s in 0..10 {
        let field = lattice_field(&params, 3, 50 + s);
        let trace = lattice_run(&field, &params, &LatticeConfig::exploratory(3), s).unwrap();
        assert_eq!(trace.records.len(), 12);
        assert!(trace.budget_ok);
        assert_eq!(trace.violations, 0);
        assert!(trace.coupling.as_ref().unwrap().ok());
        for r in &trace.records {
            assert!(r.q_local as u64 <= 3 * params.budget);
            assert_eq!(r.rule == "a", r.trivially_open);
        }
        // the first bond always leaves the reached origin
        assert_eq!(trace.records[0].rule, "b");
    }
}

#[test]
fn lattice_trace_is_json_lines() {
    let params = desk(10.0);
    let field = lattice_field(&params, 2, 9);
    let trace = lattice_run(&field, &params, &LatticeConfig::exploratory(2), 4).unwrap();
    let mut buf = Vec::new();
    trace.write_jsonl(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), trace.records.len());
    for (line, rec) in lines.iter().zip(&trace.records) {
        let back: BondRecord = serde_json::from_str(line).unwrap();
        assert_eq!(&back, rec);
    }
}

#[test]
fn lattice_is_reproducible() {
    let params = desk(10.0);
    let field = lattice_field(&params, 2, 11);
    let a = lattice_run(&field, &params, &LatticeConfig::exploratory(2), 5).unwrap();
    let b = lattice_run(&field, &params, &LatticeConfig::exploratory(2), 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn worked_parameter_example() {
    let n = min_seed_count(0.1, 0.1);
    assert_eq!(n.round() as u64, 276_310);
    assert_eq!(min_ratio_for_growth(n.ceil(), 0.1).ceil() as u64, 257);
    let ov = Overrides {
        c0: Some(0.1),
        n: Some(n.ceil() as u64),
        ratio: Some(257.0),
        ..Default::default()
    };
    let p = RenormParams::derive(Norm::Round, 1e-30, 0.1, ov).unwrap();
    assert!(p.flags.enough_seeds && p.flags.growth_reaches_n && p.flags.horizon_consistent);
    let short = RenormParams::derive(
        Norm::Round,
        1e-30,
        0.1,
        Overrides {
            ratio: Some(256.0),
            ..ov
        },
    )
    .unwrap();
    assert!(!short.flags.growth_reaches_n);
}
