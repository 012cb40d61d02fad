use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use qhemi::gf::{Field, FieldError};
use qhemi::grp::GroupElement;
use qhemi::hemi::{
    enumerate_all_hemisystems, is_invariant, verify_hemisystem, verify_hemisystem_raw, Construction, HemiError, Mask,
};
use qhemi::linform::{rref, StandardModel};
use qhemi::quadric::{maximal_count, point_count};
use qhemi::Exec;
use serde::Serialize;
use thiserror::Error;

use crate::certificate::{Certificate, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

/// Field and rank selection shared by every command that builds a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelArgs {
    pub p: u32,
    pub k: u32,
    pub modulus: Option<Vec<u32>>,
    pub d: usize,
}

impl ModelArgs {
    pub fn field(&self) -> Result<Field, CliError> {
        Ok(Field::new(self.p, self.k, self.modulus.as_deref())?)
    }

    pub fn construction(&self, exec: Exec) -> Result<Construction, CliError> {
        let model = StandardModel::new(&self.field()?, self.d).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Construction::from_model(model, exec)?)
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ModelArgs,
    pub mask: Option<String>,
    pub out: Option<PathBuf>,
    pub all: bool,
    pub format: Format,
    pub cap: u64,
    pub exec: Exec,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("certificate parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("mask must have {expected} bits, i.e. {} hex digits", expected.div_ceil(4))]
    MaskLength { expected: usize },
    #[error("{m} orbit pairs give 2^{m} hemisystems, above the cap {cap}")]
    TooManyOrbits { m: usize, cap: u64 },
    #[error("certificate does not match the recomputed model: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Construction(HemiError),
}

impl From<HemiError> for CliError {
    fn from(e: HemiError) -> CliError {
        match e {
            HemiError::MaskLength { expected } => CliError::MaskLength { expected },
            HemiError::TooManyOrbits { m, cap } => CliError::TooManyOrbits { m, cap },
            other => CliError::Construction(other),
        }
    }
}

impl CliError {
    /// 1 for a rejected claim, 2 for unusable input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ModelMismatch(_) | CliError::Construction(_) => 1,
            _ => 2,
        }
    }
}

/// Whether the command's claim held (verification passed, all checks passed).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Rejected,
}

/// A command's result in both renderings.
pub struct Output {
    pub status: Status,
    pub text: String,
    pub structured: serde_json::Value,
}

impl Output {
    fn new<T: Serialize + fmt::Display>(status: Status, report: &T) -> Output {
        Output {
            status,
            text: report.to_string(),
            structured: serde_json::to_value(report).expect("reports serialize"),
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.clone(),
            Format::Structured => format!("{}\n", serde_json::to_string_pretty(&self.structured).unwrap()),
        }
    }
}

#[derive(Serialize)]
pub struct StatsReport {
    pub command: &'static str,
    pub q: usize,
    pub d: usize,
    pub points: usize,
    pub maximals: usize,
    pub s_plus_one: u64,
    pub t_plus_one: u64,
    pub degree: u64,
    pub order_b: usize,
    pub order_a: usize,
    pub m: usize,
    pub n_b: usize,
    pub ab_ok: bool,
}

impl fmt::Display for StatsReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(out, "Q({}, {})", 2 * self.d, self.q)?;
        writeln!(out, "points      {}", self.points)?;
        writeln!(out, "maximals    {}", self.maximals)?;
        writeln!(out, "s+1         {}", self.s_plus_one)?;
        writeln!(out, "t+1         {}", self.t_plus_one)?;
        writeln!(out, "(t+1)/2     {}", self.degree)?;
        writeln!(out, "|B|         {}", self.order_b)?;
        writeln!(out, "|A|         {}", self.order_a)?;
        writeln!(out, "m           {}", self.m)?;
        writeln!(out, "n_b         {}", self.n_b)?;
        writeln!(out, "hypotheses  {}", if self.ab_ok { "hold" } else { "FAIL" })
    }
}

pub fn cmd_stats(config: &RunConfig) -> Result<Output, CliError> {
    let c = config.model.construction(config.exec)?;
    let r = c.ab_report();
    let report = StatsReport {
        command: "stats",
        q: c.field().q(),
        d: c.model().rank(),
        points: c.quadric().points().len(),
        maximals: c.quadric().maximals().len(),
        s_plus_one: c.quadric().s_plus_one(),
        t_plus_one: c.quadric().t_plus_one(),
        degree: c.quadric().t_plus_one() / 2,
        order_b: c.b().order(),
        order_a: c.a().order(),
        m: r.m,
        n_b: r.n_b,
        ab_ok: r.all_ok(),
    };
    Ok(Output::new(if r.all_ok() { Status::Ok } else { Status::Rejected }, &report))
}

#[derive(Serialize)]
pub struct OrbitRow {
    pub id: u32,
    pub size: usize,
    pub representative: u32,
    /// Orbit holding the τ-image of this orbit.
    pub tau_image: u32,
}

#[derive(Serialize)]
pub struct OrbitsReport {
    pub command: &'static str,
    pub point_orbits: Vec<OrbitRow>,
    pub maximal_orbits: Vec<OrbitRow>,
    /// B-orbit pairs `(O, O^τ)` in mask-bit order.
    pub a_orbits: Vec<(u32, u32)>,
}

impl fmt::Display for OrbitsReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (title, rows) in [("point", &self.point_orbits), ("maximal", &self.maximal_orbits)] {
            writeln!(out, "{} B-orbits on {title}s", rows.len())?;
            writeln!(out, "{:>6} {:>8} {:>8} {:>8}", "id", "size", "rep", "tau")?;
            for r in rows {
                writeln!(out, "{:>6} {:>8} {:>8} {:>8}", r.id, r.size, r.representative, r.tau_image)?;
            }
        }
        writeln!(out, "{} A-orbits on maximals (mask bit: orbit for 0, orbit for 1)", self.a_orbits.len())?;
        for (i, (lo, hi)) in self.a_orbits.iter().enumerate() {
            writeln!(out, "{i:>6} {lo:>8} {hi:>8}")?;
        }
        Ok(())
    }
}

pub fn cmd_orbits(config: &RunConfig) -> Result<Output, CliError> {
    let c = config.model.construction(config.exec)?;
    let r = c.ab_report();
    let rows = |part: &qhemi::OrbitPartition, images: &[u32]| -> Vec<OrbitRow> {
        (0..part.len() as u32)
            .map(|id| OrbitRow {
                id,
                size: part.orbit(id).len(),
                representative: part.representative(id),
                tau_image: images[id as usize],
            })
            .collect()
    };
    let tau_points = qhemi::orbits::point_permutations(c.quadric(), std::slice::from_ref(c.tau()), config.exec)
        .map_err(|e| CliError::Construction(e.into()))?
        .remove(0);
    let point_images = c.point_orbits().orbit_images(&tau_points).map_err(|e| CliError::Construction(e.into()))?;
    let maximal_images =
        c.maximal_orbits().orbit_images(c.tau_maximals()).map_err(|e| CliError::Construction(e.into()))?;
    let report = OrbitsReport {
        command: "orbits",
        point_orbits: rows(c.point_orbits(), &point_images),
        maximal_orbits: rows(c.maximal_orbits(), &maximal_images),
        a_orbits: if r.all_ok() { c.a_orbits()? } else { Vec::new() },
    };
    Ok(Output::new(if r.all_ok() { Status::Ok } else { Status::Rejected }, &report))
}

#[derive(Serialize)]
pub struct ConstructReport {
    pub command: &'static str,
    pub m: usize,
    pub written: Vec<WrittenCertificate>,
}

#[derive(Serialize)]
pub struct WrittenCertificate {
    pub mask: String,
    pub members: usize,
    pub path: Option<PathBuf>,
}

impl fmt::Display for ConstructReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.written {
            match &w.path {
                Some(p) => writeln!(out, "mask {} verified, {} maximals -> {}", w.mask, w.members, p.display())?,
                None => writeln!(out, "mask {} verified, {} maximals", w.mask, w.members)?,
            }
        }
        Ok(())
    }
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })
}

/// Builds, verifies and writes certificates. Without `--out` the single
/// certificate goes to stdout as the text output.
pub fn cmd_construct(config: &RunConfig) -> Result<Output, CliError> {
    let c = config.model.construction(config.exec)?;
    let m = c.a_orbits()?.len();
    let f = c.field().clone();
    if config.all {
        let dir = config.out.clone().ok_or_else(|| CliError::Usage("--all needs --out <directory>".into()))?;
        let family = enumerate_all_hemisystems(&c, config.cap)?;
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        let mut written = Vec::new();
        for h in family {
            if !verify_hemisystem(c.quadric(), &h.members, config.exec)?.verified {
                return Err(CliError::Construction(HemiError::VerificationFailed));
            }
            let path = dir.join(format!("mask-{}.cert", h.mask.to_hex()));
            write_file(&path, &Certificate::from_hemisystem(&h, c.quadric()).to_text(&f))?;
            written.push(WrittenCertificate { mask: h.mask.to_hex(), members: h.members.len(), path: Some(path) });
        }
        return Ok(Output::new(Status::Ok, &ConstructReport { command: "construct", m, written }));
    }
    let mask = match &config.mask {
        Some(hex) => Mask::from_hex(hex, m)?,
        None => Mask::zeros(m),
    };
    let h = c.construct(&mask, config.exec)?;
    let text = Certificate::from_hemisystem(&h, c.quadric()).to_text(&f);
    let written = WrittenCertificate { mask: mask.to_hex(), members: h.members.len(), path: config.out.clone() };
    match &config.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(Output::new(Status::Ok, &ConstructReport { command: "construct", m, written: vec![written] }))
        }
        None => {
            let report = ConstructReport { command: "construct", m, written: vec![written] };
            let mut out = Output::new(Status::Ok, &report);
            out.text = text;
            Ok(out)
        }
    }
}

#[derive(Serialize, Debug)]
pub struct VerifyOutcome {
    pub command: &'static str,
    pub accepted: bool,
    pub reasons: Vec<String>,
    pub target: u64,
    pub histogram: BTreeMap<u64, usize>,
    pub size: usize,
    pub expected_size: usize,
    /// Whether the slower membership-based count was also run (and agreed).
    pub raw_checked: bool,
    pub invariant: bool,
    pub mask_consistent: bool,
}

impl fmt::Display for VerifyOutcome {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(out, "{}", if self.accepted { "ACCEPTED" } else { "REJECTED" })?;
        writeln!(out, "members {} (expected {})", self.size, self.expected_size)?;
        writeln!(out, "target degree {}", self.target)?;
        for (deg, n) in &self.histogram {
            writeln!(out, "  degree {deg:>6}: {n} points")?;
        }
        for r in &self.reasons {
            writeln!(out, "reason: {r}")?;
        }
        Ok(())
    }
}

/// Points × members above which the membership-based recount is skipped.
const RAW_CHECK_LIMIT: usize = 50_000_000;

/// Rebuilds the model from the header and checks every claim in `cert`.
pub fn verify_certificate(cert: &Certificate, f: &Field, exec: Exec) -> Result<VerifyOutcome, CliError> {
    let model = StandardModel::new(f, cert.d).map_err(|e| CliError::ModelMismatch(e.to_string()))?;
    if model.space().gram() != &cert.gram {
        return Err(CliError::ModelMismatch("Gram matrix differs from the standard form".into()));
    }
    let c = Construction::from_model(model, exec)?;
    let quadric = c.quadric();
    if cert.total_maximals != quadric.maximals().len() {
        return Err(CliError::ModelMismatch(format!(
            "header claims {} maximals, enumeration finds {}",
            cert.total_maximals,
            quadric.maximals().len()
        )));
    }
    if cert.degree != quadric.t_plus_one() / 2 {
        return Err(CliError::ModelMismatch(format!(
            "header claims degree {}, expected {}",
            cert.degree,
            quadric.t_plus_one() / 2
        )));
    }

    let mut reasons = Vec::new();
    let mut ids = Vec::with_capacity(cert.members.len());
    let mut seen = HashSet::new();
    for (line, (claimed, m)) in cert.members.iter().enumerate() {
        let s = rref(f, m);
        match quadric.maximal_id(&s) {
            None => reasons.push(format!("member {line} (claimed id {claimed}) is not a maximal")),
            Some(id) => {
                if id != *claimed {
                    reasons.push(format!("member {line} claims id {claimed} but spans maximal {id}"));
                }
                if seen.insert(id) {
                    ids.push(id);
                } else {
                    reasons.push(format!("maximal {id} listed twice"));
                }
            }
        }
    }
    ids.sort_unstable();

    let report = verify_hemisystem(quadric, &ids, exec)?;
    if !report.verified {
        reasons.push(format!("point degrees are not all {}", report.target));
    }
    let raw_checked = quadric.points().len() * ids.len() <= RAW_CHECK_LIMIT;
    if raw_checked && verify_hemisystem_raw(quadric, &ids, exec)? != report {
        reasons.push("index and membership counts disagree".into());
    }
    let expected_size = quadric.maximals().len() / 2;
    if ids.len() != expected_size {
        reasons.push(format!("{} members, expected {expected_size}", ids.len()));
    }

    let mut gens = Vec::new();
    for (i, g) in cert.generators.iter().enumerate() {
        let g = GroupElement::new(g.clone());
        if !c.b().contains(&g) {
            reasons.push(format!("generator {i} is not in Ω(W)"));
        } else {
            gens.push(g);
        }
    }
    if gens.is_empty() {
        reasons.push("no usable generators".into());
    }
    let invariant = is_invariant(quadric, &ids, &gens, exec);
    if !invariant {
        reasons.push("member set is not invariant under the generators".into());
    }

    let m = c.a_orbits()?.len();
    let mask_consistent = match Mask::from_hex(&cert.mask, m) {
        Ok(mask) => {
            let same = c.assemble(&mask)?.members == ids;
            if !same {
                reasons.push("mask does not select the listed members".into());
            }
            same
        }
        Err(e) => {
            reasons.push(e.to_string());
            false
        }
    };

    Ok(VerifyOutcome {
        command: "verify",
        accepted: reasons.is_empty(),
        reasons,
        target: report.target,
        histogram: report.histogram,
        size: ids.len(),
        expected_size,
        raw_checked,
        invariant,
        mask_consistent,
    })
}

pub fn cmd_verify(text: &str, exec: Exec) -> Result<Output, CliError> {
    let (cert, f) = Certificate::parse(text)?;
    let outcome = verify_certificate(&cert, &f, exec)?;
    Ok(Output::new(if outcome.accepted { Status::Ok } else { Status::Rejected }, &outcome))
}

/// `(points, maximals)` predicted by the closed formulas.
pub fn predicted_counts(q: u64, d: u32) -> (u64, u64) {
    (point_count(q, d), maximal_count(q, d))
}
