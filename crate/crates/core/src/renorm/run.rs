use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::explore::{bond_explore, BondOutcome};
use super::lattice::{BlockLattice, Site};
use super::params::{ConstraintFlags, RenormParams};
use super::verify::verify_bond;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::graph::build_graph;
use crate::pointfield::{PointField, TestedRegion};
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Refuse to run unless every sufficient condition holds.
    Strict,
    /// Run regardless and record the condition flags.
    Exploratory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub depth: u64,
    pub mode: Mode,
    /// Re-verify every processed bond.
    pub paranoid: bool,
    /// Check graph connectivity of every `P_x` back to `P_(0,0)`.
    pub coupling_check: bool,
}

impl LatticeConfig {
    pub fn exploratory(depth: u64) -> Self {
        Self {
            depth,
            mode: Mode::Exploratory,
            paranoid: true,
            coupling_check: true,
        }
    }
}

/// One line of the lattice trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondRecord {
    pub order: usize,
    pub from: Site,
    pub to: Site,
    /// "a" for bonds from unreached sites, "b" otherwise.
    pub rule: String,
    pub open: bool,
    pub trivially_open: bool,
    pub p_prime: usize,
    pub q_prime: usize,
    pub x_found: usize,
    pub phase2_generations: u64,
    /// `|Q_i ∩ S_x|`, `|Q_i ∩ S_y|` and `|Q_i ∩ (S_x ∪ S_y)|` before the bond.
    pub q_at_from: usize,
    pub q_at_to: usize,
    pub q_local: usize,
    /// `k N` limits, `k` = earlier bonds meeting the square.
    pub limit_from: u64,
    pub limit_to: u64,
    pub budget_ok: bool,
    pub violations: Option<Vec<String>>,
    pub flags: ConstraintFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub sites_checked: usize,
    pub points_checked: usize,
    pub disconnected: Vec<Vec2<f64>>,
}

impl CouplingReport {
    pub fn ok(&self) -> bool {
        self.disconnected.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeTrace {
    pub records: Vec<BondRecord>,
    /// Sites joined to the origin by open rule-(b) bonds, sorted.
    pub reached: Vec<Site>,
    pub p_sets: BTreeMap<String, Vec<Vec2<f64>>>,
    pub q_total: usize,
    pub budget_ok: bool,
    pub violations: usize,
    pub coupling: Option<CouplingReport>,
}

impl LatticeTrace {
    /// Write one JSON object per bond.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(|e| Error::Io(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn rule_b_bonds(&self) -> impl Iterator<Item = &BondRecord> {
        self.records.iter().filter(|r| r.rule == "b")
    }
}

fn site_key(x: Site) -> String {
    format!("{},{}", x.0, x.1)
}

/// `n` field points of `[-2R, 2R]^2`, pairwise at least the separation
/// apart, chosen greedily by distance from the origin.
pub fn initial_points(field: &PointField<f64>, params: &RenormParams) -> Result<Vec<Vec2<f64>>> {
    let middle = BlockLattice::new(params.big_r).middle((0, 0));
    let mut cands: Vec<Vec2<f64>> = field
        .points()
        .iter()
        .copied()
        .filter(|z| middle.contains(*z))
        .collect();
    cands.sort_by(|a, b| a.norm_sq().total_cmp(&b.norm_sq()).then(a.lex_cmp(b)));
    let mut balls = TestedRegion::new(params.annulus, params.separation());
    let mut chosen = Vec::new();
    for z in cands {
        if chosen.len() as u64 == params.n {
            break;
        }
        if balls.query(z) {
            continue;
        }
        let o = balls.new_owner();
        balls.add_ball(z, o);
        chosen.push(z);
    }
    if (chosen.len() as u64) < params.n {
        return Err(Error::InitializationFailed {
            found: chosen.len(),
            needed: params.n as usize,
        });
    }
    Ok(chosen)
}

/// Process bonds in canonical order up to `depth`, keeping the cumulative
/// tested set `Q_i` and the first-defined `P_x` of every reached site.
/// Bond `i` uses stream `(master, "bond", i)`.
pub fn lattice_run(
    field: &PointField<f64>,
    params: &RenormParams,
    cfg: &LatticeConfig,
    master_seed: u64,
) -> Result<LatticeTrace> {
    if cfg.mode == Mode::Strict {
        params.require_all()?;
    }
    let lattice = BlockLattice::new(params.big_r);
    let p00 = initial_points(field, params)?;
    let mut p_sets: HashMap<Site, Vec<Vec2<f64>>> = HashMap::new();
    p_sets.insert((0, 0), p00);
    let mut q_all: Vec<Vec2<f64>> = Vec::new();
    let mut records = Vec::new();
    let mut touched: Vec<Site> = Vec::new();
    let bonds = BlockLattice::bonds(cfg.depth);
    let mut budget_ok = true;
    let mut violations = 0usize;
    for (i, &bond) in bonds.iter().enumerate() {
        let sq_from = lattice.square(bond.from);
        let sq_to = lattice.square(bond.to);
        let union = lattice.union(bond);
        let q_at_from = q_all.iter().filter(|z| sq_from.contains(**z)).count();
        let q_at_to = q_all.iter().filter(|z| sq_to.contains(**z)).count();
        let q_local: Vec<Vec2<f64>> = q_all
            .iter()
            .copied()
            .filter(|z| union.contains(*z))
            .collect();
        let k_from = bonds[..i].iter().filter(|e| e.meets(bond.from)).count() as u64;
        let k_to = bonds[..i].iter().filter(|e| e.meets(bond.to)).count() as u64;
        let (limit_from, limit_to) = (k_from * params.budget, k_to * params.budget);
        let ok = q_at_from as u64 <= limit_from
            && q_at_to as u64 <= limit_to
            && q_local.len() as u64 <= 3 * params.budget;
        budget_ok &= ok;

        let (outcome, rule, checked) = match p_sets.get(&bond.from) {
            None => (BondOutcome::trivial(bond), "a", None),
            Some(p) => {
                let mut rng = stream(master_seed, "bond", i as u64);
                let out = bond_explore(field, bond, p, &q_local, params, &mut rng)?;
                let checked = cfg
                    .paranoid
                    .then(|| verify_bond(&out, field, p, &q_local, params).violations);
                touched.push(bond.from);
                touched.push(bond.to);
                (out, "b", checked)
            }
        };
        if let Some(v) = &checked {
            violations += v.len();
        }
        q_all.extend(outcome.q_prime.iter().copied());
        if rule == "b" && outcome.open {
            p_sets
                .entry(bond.to)
                .or_insert_with(|| outcome.p_prime.clone());
        }
        records.push(BondRecord {
            order: i,
            from: bond.from,
            to: bond.to,
            rule: rule.into(),
            open: outcome.open,
            trivially_open: outcome.trivially_open,
            p_prime: outcome.p_prime.len(),
            q_prime: outcome.q_prime.len(),
            x_found: outcome.x_found,
            phase2_generations: outcome.phase2_generations,
            q_at_from,
            q_at_to,
            q_local: q_local.len(),
            limit_from,
            limit_to,
            budget_ok: ok,
            violations: checked,
            flags: params.flags,
        });
    }

    let coupling = cfg
        .coupling_check
        .then(|| coupling_check(field, params, &p_sets, &touched));
    let mut reached: Vec<Site> = p_sets.keys().copied().collect();
    reached.sort_unstable();
    Ok(LatticeTrace {
        records,
        reached,
        p_sets: p_sets.into_iter().map(|(k, v)| (site_key(k), v)).collect(),
        q_total: q_all.len(),
        budget_ok,
        violations,
        coupling,
    })
}

/// Every point of every `P_x` must share a component of `G_A`, restricted
/// to the squares of processed bonds, with a point of `P_(0,0)`.
fn coupling_check(
    field: &PointField<f64>,
    params: &RenormParams,
    p_sets: &HashMap<Site, Vec<Vec2<f64>>>,
    touched: &[Site],
) -> CouplingReport {
    let lattice = BlockLattice::new(params.big_r);
    let mut squares: Vec<Site> = touched.to_vec();
    squares.push((0, 0));
    squares.sort_unstable();
    squares.dedup();
    let rects: Vec<_> = squares.iter().map(|&s| lattice.square(s)).collect();
    let sub = field.retain(|z| rects.iter().any(|r| r.contains(z)));
    let g = build_graph(&sub, &params.annulus);
    let origin: Vec<usize> = p_sets[&(0, 0)]
        .iter()
        .filter_map(|z| sub.find_exact(*z))
        .collect();
    let mut report = CouplingReport {
        sites_checked: 0,
        points_checked: 0,
        disconnected: Vec::new(),
    };
    let mut sites: Vec<&Site> = p_sets.keys().collect();
    sites.sort_unstable();
    for site in sites {
        report.sites_checked += 1;
        for z in &p_sets[site] {
            report.points_checked += 1;
            let joined = sub
                .find_exact(*z)
                .is_some_and(|i| origin.iter().any(|&o| g.connected(i, o)));
            if !joined {
                report.disconnected.push(*z);
            }
        }
    }
    report
}
