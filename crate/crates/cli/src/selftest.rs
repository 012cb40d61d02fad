//! Named checks run in dependency order; failures are data, not errors.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use qhemi::gf::{Fe, Field};
use qhemi::grp::{omega3_order, sl2_order};
use qhemi::hemi::{enumerate_all_hemisystems, Construction, Mask};
use qhemi::linform::{classify_type, projective_vectors, witt_index, FormType, StandardModel, Subspace};
use qhemi::orbits::{point_permutations, w_vector_partition, OrbitPartition};
use qhemi::Exec;
use serde::Serialize;

use crate::certificate::Certificate;
use crate::commands::{predicted_counts, verify_certificate, CliError, ModelArgs};

#[derive(Serialize, Debug)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize, Debug)]
pub struct SelftestReport {
    pub command: &'static str,
    pub q: usize,
    pub d: usize,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(out, "selftest Q({}, {})", 2 * self.d, self.q)?;
        for c in &self.checks {
            writeln!(out, "{} {:<22} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        writeln!(out, "{} checks, {failed} failed", self.checks.len())
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &'static str, pass: bool, detail: impl Into<String>) {
        self.0.push(Check { name, pass, detail: detail.into() });
    }
}

/// Commutativity and inverses over all pairs, associativity and
/// distributivity over all triples when `q ≤ 27` and a fixed stride otherwise.
fn field_axioms(f: &Field) -> Result<(), String> {
    let els: Vec<Fe> = f.elements().collect();
    for &a in &els {
        if f.add(a, f.neg(a)) != Fe::ZERO {
            return Err(format!("{} has no additive inverse", f.format(a)));
        }
        if !a.is_zero() && f.mul(a, f.inv(a).unwrap()) != Fe::ONE {
            return Err(format!("{} has no multiplicative inverse", f.format(a)));
        }
        for &b in &els {
            if f.add(a, b) != f.add(b, a) || f.mul(a, b) != f.mul(b, a) {
                return Err(format!("{} and {} do not commute", f.format(a), f.format(b)));
            }
        }
    }
    let step = if els.len() <= 27 { 1 } else { els.len() / 23 };
    for &a in els.iter().step_by(step) {
        for &b in els.iter().step_by(step) {
            for &c in &els {
                if f.mul(a, f.add(b, c)) != f.add(f.mul(a, b), f.mul(a, c))
                    || f.mul(f.mul(a, b), c) != f.mul(a, f.mul(b, c))
                    || f.add(f.add(a, b), c) != f.add(a, f.add(b, c))
                {
                    return Err(format!("axiom fails at ({}, {}, {})", f.format(a), f.format(b), f.format(c)));
                }
            }
        }
    }
    Ok(())
}

/// `β(u, v) = κ(u + v) - κ(u) - κ(v)` on all pairs of a sample of vectors.
fn polarization(model: &StandardModel) -> Result<usize, String> {
    let f = model.field();
    let vs: Vec<_> = projective_vectors(f, model.dim()).into_iter().step_by(7).take(60).collect();
    for u in &vs {
        for v in &vs {
            let sum: Vec<Fe> = u.iter().zip(v).map(|(&a, &b)| f.add(a, b)).collect();
            let lhs = model.beta(u, v);
            let rhs = f.sub(f.sub(model.kappa(&sum), model.kappa(u)), model.kappa(v));
            if lhs != rhs {
                return Err(format!("fails at {u:?}, {v:?}"));
            }
        }
    }
    Ok(vs.len() * vs.len())
}

fn witt(model: &StandardModel) -> Result<String, String> {
    let space = model.space();
    let d = model.rank();
    let v = Subspace::whole(model.dim());
    let expect = [
        ("V", &v, d, FormType::Parabolic),
        ("W", &model.w(), 1, FormType::Parabolic),
        ("U", &model.u(), d - 2, FormType::Elliptic),
    ];
    let mut parts = Vec::new();
    for (name, s, index, ty) in expect {
        let got = witt_index(space, s).map_err(|e| e.to_string())?;
        let got_ty = classify_type(space, s).map_err(|e| e.to_string())?;
        if got != index || got_ty != ty {
            return Err(format!("{name}: index {got} {got_ty:?}, expected {index} {ty:?}"));
        }
        parts.push(format!("{name} {got} {got_ty:?}"));
    }
    Ok(parts.join(", "))
}

/// Orbits of `B` on nonzero `W`-vectors: two on singular vectors, one per nonzero norm.
fn w_vector_orbits(c: &Construction, exec: Exec) -> Result<String, String> {
    let f = c.field();
    let q = f.q();
    let (vectors, part) = w_vector_partition(f, c.b().generators(), exec).map_err(|e| e.to_string())?;
    let mut by_norm: HashMap<Fe, BTreeSet<u32>> = HashMap::new();
    for (i, v) in vectors.iter().enumerate() {
        let mut full = v.clone();
        full.resize(c.model().dim(), Fe::ZERO);
        by_norm.entry(c.model().kappa(&full)).or_default().insert(part.orbit_of(i as u32));
    }
    let singular = by_norm.get(&Fe::ZERO).cloned().unwrap_or_default();
    let sizes: Vec<usize> = singular.iter().map(|&o| part.orbit(o).len()).collect();
    if sizes != vec![(q * q - 1) / 2; 2] {
        return Err(format!("singular orbit sizes {sizes:?}"));
    }
    if by_norm.iter().any(|(n, o)| !n.is_zero() && o.len() != 1) {
        return Err("a nonzero norm class splits".into());
    }
    Ok(format!("singular {sizes:?}, {} norm classes transitive", by_norm.len() - 1))
}

fn tau_properties(c: &Construction) -> Result<(), String> {
    let f = c.field();
    let t = c.tau();
    if t.mul(f, t) != qhemi::GroupElement::identity(t.dim()) {
        return Err("τ² ≠ 1".into());
    }
    if t.det(f) != f.neg(Fe::ONE) {
        return Err("det τ ≠ -1".into());
    }
    if !c.model().space().preserves(t.matrix()) {
        return Err("τ does not preserve the form".into());
    }
    if c.b().contains(t) {
        return Err("τ ∈ B".into());
    }
    Ok(())
}

fn round_trip(c: &Construction, cap: u64, exec: Exec) -> Result<String, String> {
    let f = c.field();
    let m = c.ab_report().m;
    let masks: Vec<Mask> = if m < 64 && 1u64 << m <= cap {
        enumerate_all_hemisystems(c, cap).map_err(|e| e.to_string())?.into_iter().map(|h| h.mask).collect()
    } else {
        vec![Mask::zeros(m), Mask::ones(m)]
    };
    for mask in &masks {
        let h = c.construct(mask, exec).map_err(|e| e.to_string())?;
        let text = Certificate::from_hemisystem(&h, c.quadric()).to_text(f);
        let (cert, g) = Certificate::parse(&text).map_err(|e| e.to_string())?;
        let outcome = verify_certificate(&cert, &g, exec).map_err(|e: CliError| e.to_string())?;
        if !outcome.accepted {
            return Err(format!("mask {mask} rejected: {:?}", outcome.reasons));
        }
        let back: Vec<u32> = cert.members.iter().map(|(id, _)| *id).collect();
        if back != h.members {
            return Err(format!("mask {mask}: member ids changed in transit"));
        }
    }
    Ok(format!("{} certificates", masks.len()))
}

fn outcome<T>(checks: &mut Checks, name: &'static str, r: Result<T, String>, ok: impl FnOnce(T) -> String) {
    match r {
        Ok(v) => checks.push(name, true, ok(v)),
        Err(e) => checks.push(name, false, e),
    }
}

/// Runs every check for one `(q, d)`. Only an unusable field or rank is an error.
pub fn selftest(args: &ModelArgs, cap: u64, exec: Exec) -> Result<SelftestReport, CliError> {
    let f = args.field()?;
    let model = StandardModel::new(&f, args.d).map_err(|e| CliError::Usage(e.to_string()))?;
    let q = f.q();
    let mut checks = Checks(Vec::new());

    outcome(&mut checks, "field-axioms", field_axioms(&f), |_| format!("GF({q})"));
    outcome(&mut checks, "polarization", polarization(&model), |n| format!("{n} pairs"));
    outcome(&mut checks, "witt-indices", witt(&model), |s| s);

    let c = match Construction::from_model(model, exec) {
        Ok(c) => c,
        Err(e) => {
            checks.push("construction", false, e.to_string());
            return Ok(SelftestReport { command: "selftest", q, d: args.d, checks: checks.0 });
        }
    };
    let quadric = c.quadric();
    let (pts, maxs) = predicted_counts(q as u64, args.d as u32);
    checks.push(
        "counts",
        quadric.points().len() as u64 == pts && quadric.maximals().len() as u64 == maxs,
        format!(
            "{} points (formula {pts}), {} maximals (formula {maxs})",
            quadric.points().len(),
            quadric.maximals().len()
        ),
    );
    let regular = (0..quadric.maximals().len() as u32)
        .all(|m| quadric.points_on(m).len() as u64 == quadric.s_plus_one())
        && (0..quadric.points().len() as u32).all(|p| quadric.maximals_on(p).len() as u64 == quadric.t_plus_one());
    checks.push("regularity", regular, format!("s+1 = {}, t+1 = {}", quadric.s_plus_one(), quadric.t_plus_one()));
    outcome(&mut checks, "w-vector-orbits", w_vector_orbits(&c, exec), |s| s);
    checks.push(
        "group-orders",
        c.b().order() == omega3_order(q) && c.a().order() == sl2_order(q),
        format!("|B| = {}, |A| = {}", c.b().order(), c.a().order()),
    );
    outcome(&mut checks, "tau", tau_properties(&c), |_| "involution, det -1, isometry outside B".into());

    let r = c.ab_report();
    let witness = |w: &[qhemi::hemi::Witness]| format!("{w:?}");
    checks.push(
        "normal-subgroup",
        r.normal_ok,
        if r.normal_ok { "B ⊴ A, index 2".into() } else { witness(&r.witnesses) },
    );
    let a_points = point_permutations(quadric, c.a().generators(), exec)
        .map(|perms| OrbitPartition::from_permutations(quadric.points().len(), &perms) == *c.point_orbits())
        .unwrap_or(false);
    checks.push(
        "point-orbits-agree",
        r.points_ok && a_points,
        format!("{} point orbits, each fixed by τ", c.point_orbits().len()),
    );
    checks.push("maximal-orbits-split", r.split_ok, format!("m = {}, n_b = {}", r.m, r.n_b));

    if r.all_ok() {
        outcome(&mut checks, "round-trip", round_trip(&c, cap, exec), |s| s);
    } else {
        checks.push("round-trip", false, "skipped: hypotheses fail");
    }
    Ok(SelftestReport { command: "selftest", q, d: args.d, checks: checks.0 })
}
