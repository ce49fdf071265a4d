//! Command-line front end. Exit codes: 0 all checks pass, 1 some check
//! fails, 2 usage or load error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::corners::{boundary_decomposition_count, fibre_product_dim, CornerError};
use crate::expr::{format_rational, Expr, Point, Poly};
use crate::manifest::{load_manifest, GlueExpectation, Manifest, ManifestError};
use crate::poisson::{
    bracket, bracket_sheaf_morphism_check, check_leibniz, check_poisson, JacobiVerdict, SCHOUTEN_JACOBI_SIGN,
};
use crate::report::{ReportDocument, Status};
use crate::sampling::{SamplingConfig, DEFAULT_SEED, DEFAULT_TOLERANCE};
use crate::sheaf::{
    check_morphism_square, germ_at, in_maximal_ideal, pullback_morphism, residue, residue_exact, Section, SheafError,
};

/// Leibniz triples checked per manifest.
pub const LEIBNIZ_TRIPLE_LIMIT: usize = 200;
/// Probe pairs per open in the bracket restriction battery.
pub const RESTRICTION_PAIR_LIMIT: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "poisson-corners", version, about = "Check sheaf and Poisson axioms on manifolds with corners")]
pub struct Cli {
    /// Seed for sampled equality checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Tolerance for sampled comparisons.
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Restriction composition, locality, gluing, equalizer and pullback squares.
    CheckSheaf { manifest: PathBuf },
    /// Antisymmetry, bilinearity, Leibniz, Jacobi, Schouten and restriction compatibility.
    CheckPoisson { manifest: PathBuf },
    /// Prints the canonical bracket of two named sections.
    Bracket { manifest: PathBuf, f: String, g: String },
    /// Dimension, transversality and boundary counts of a fibre product.
    Fibre { manifest: PathBuf, name: String },
    /// Residue and maximal-ideal membership of a germ.
    Stalk { manifest: PathBuf, section: String, point: String },
}

/// Errors that end a command before any report is produced.
#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Poisson(#[from] crate::poisson::PoissonError),
    #[error("{0}")]
    Other(String),
}

enum Output {
    Report(ReportDocument),
    Expr(Expr),
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let sampling = SamplingConfig { seed: cli.seed, tolerance: cli.tol, ..SamplingConfig::default() };
    match execute(&cli.command, &sampling) {
        Ok(Output::Report(r)) => {
            let text = match cli.format {
                Format::Text => r.to_text(),
                Format::Json => r.to_json(),
            };
            let _ = out.write_all(text.as_bytes());
            r.exit_code()
        }
        Ok(Output::Expr(e)) => {
            let _ = match cli.format {
                Format::Text => writeln!(out, "{e}"),
                Format::Json => writeln!(out, "{}", serde_json::json!({ "bracket": e.to_string() })),
            };
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn execute(command: &Command, sampling: &SamplingConfig) -> Result<Output, CommandError> {
    match command {
        Command::CheckSheaf { manifest } => Ok(Output::Report(check_sheaf(&load_manifest(manifest, sampling)?))),
        Command::CheckPoisson { manifest } => {
            Ok(Output::Report(check_poisson_battery(&load_manifest(manifest, sampling)?)?))
        }
        Command::Bracket { manifest, f, g } => {
            let m = load_manifest(manifest, sampling)?;
            let b = m.bracket.as_ref().ok_or_else(|| CommandError::Other("manifest declares no bivector".into()))?;
            let (f, g) = (m.section(f)?, m.section(g)?);
            Ok(Output::Expr(bracket(&f.expr, &g.expr, &b.pi)?))
        }
        Command::Fibre { manifest, name } => {
            let m = load_manifest(manifest, sampling)?;
            Ok(Output::Report(fibre_report(&m, name)?))
        }
        Command::Stalk { manifest, section, point } => {
            let m = load_manifest(manifest, sampling)?;
            Ok(Output::Report(stalk_report(&m, section, point)?))
        }
    }
}

fn section_name(m: &Manifest, s: &Section) -> String {
    m.sections.iter().find(|(_, t)| *t == s).map(|(n, _)| n.clone()).unwrap_or_else(|| s.expr.to_string())
}

/// The sheaf battery.
pub fn check_sheaf(m: &Manifest) -> ReportDocument {
    let mut r = ReportDocument::new("check-sheaf");
    let p = &m.presheaf;
    let lattice = m.lattice();
    if lattice.is_empty() {
        r.push("lattice", "opens", Status::Warn, "empty lattice; every axiom holds vacuously");
    } else {
        r.push(
            "lattice",
            "opens",
            Status::Pass,
            format!(
                "{} opens, {} strict inclusions, intersection-closed",
                lattice.len(),
                lattice.strict_inclusions().len()
            ),
        );
    }
    if !m.inclusions.is_empty() {
        r.push(
            "inclusion",
            "declared",
            Status::Pass,
            format!("{} declared inclusions match the boxes", m.inclusions.len()),
        );
    }

    let names: Vec<&str> = lattice.names().collect();
    for u in &names {
        let sections: Vec<Section> = m.sections.values().filter(|s| s.domain == *u).cloned().collect();
        if sections.is_empty() {
            continue;
        }
        match p.check_composition(&sections) {
            Ok(report) if report.passed() => {
                r.push("composition", u, Status::Pass, format!("{} chains x sections agree", report.chains_checked))
            }
            Ok(report) => {
                let detail: Vec<String> = report
                    .failures
                    .iter()
                    .map(|f| {
                        format!(
                            "chain {}>{}>{} on {} ({})",
                            f.u,
                            f.v,
                            f.w,
                            section_name(m, &sections[f.section]),
                            f.verdict
                        )
                    })
                    .collect();
                r.push("composition", u, Status::Fail, detail.join("; "))
            }
            Err(e) => r.push("composition", u, Status::Fail, e.to_string()),
        }
    }

    for (ci, cover) in m.covers.iter().enumerate() {
        let subject = format!("cover{ci}:{}", cover.target);
        for (name, s) in m.sections.iter().filter(|(_, s)| s.domain == cover.target) {
            match p.check_locality(&cover.members, &cover.target, s) {
                Ok(o) if o.holds() => {
                    let detail = if o.restrictions_vanish {
                        "restrictions vanish, section vanishes"
                    } else {
                        "restrictions do not all vanish (vacuous)"
                    };
                    r.push("locality", &format!("{subject}:{name}"), Status::Pass, detail)
                }
                Ok(_) => r.push(
                    "locality",
                    &format!("{subject}:{name}"),
                    Status::Fail,
                    "restrictions vanish but the section does not",
                ),
                Err(e) => r.push("locality", &format!("{subject}:{name}"), Status::Fail, e.to_string()),
            }
        }
        let probes: Vec<Section> = m.sections.values().filter(|s| s.domain == cover.target).cloned().collect();
        match p.check_equalizer(&cover.target, &cover.members, &probes) {
            Ok(e) if e.passed() => r.push(
                "equalizer",
                &subject,
                Status::Pass,
                format!(
                    "{} probes injective; {} tuples: {} glued, {} incompatible",
                    e.probes, e.tuples, e.glued, e.incompatible
                ),
            ),
            Ok(e) => {
                let mut detail: Vec<String> = e
                    .injectivity_failures
                    .iter()
                    .map(|(i, j)| format!("probes {i} and {j} restrict identically"))
                    .collect();
                detail.extend(e.glue_failures.iter().cloned());
                r.push("equalizer", &subject, Status::Fail, detail.join("; "))
            }
            Err(e) => r.push("equalizer", &subject, Status::Fail, e.to_string()),
        }
    }

    for g in &m.gluings {
        let parts: Vec<Section> = g.parts.iter().map(|n| m.sections[n].clone()).collect();
        let cover: Vec<String> = parts.iter().map(|s| s.domain.clone()).collect();
        let outcome = p.glue(&cover, &g.target, &parts);
        let (status, detail) = match (g.expect, outcome) {
            (GlueExpectation::Glue, Ok(glued)) => {
                let how = if glued.sampled { "sampled" } else { "canonical" };
                (Status::Pass, format!("glued to {} over {} ({how})", glued.section.expr, g.target))
            }
            (GlueExpectation::Mismatch, Err(e @ SheafError::OverlapMismatch { .. })) => {
                (Status::Pass, format!("rejected as expected: {e}"))
            }
            (GlueExpectation::Mismatch, Ok(glued)) => {
                (Status::Fail, format!("expected an overlap mismatch, glued to {}", glued.section.expr))
            }
            (_, Err(e)) => (Status::Fail, e.to_string()),
        };
        r.push("gluing", &g.name, status, detail);
    }

    for pb in &m.pullbacks {
        let map = &m.maps[&pb.map];
        let outcome = pullback_morphism(map, lattice, lattice, &pb.preimages, p.sampling()).and_then(|morphism| {
            let probes: Vec<Section> = m.sections.values().cloned().collect();
            check_morphism_square(&morphism, p, p, &probes)
        });
        match outcome {
            Ok(rep) if rep.passed() => {
                r.push("pullback-square", &pb.name, Status::Pass, format!("{} squares commute", rep.squares_checked))
            }
            Ok(rep) => r.push(
                "pullback-square",
                &pb.name,
                Status::Fail,
                rep.failures.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("; "),
            ),
            Err(e) => r.push("pullback-square", &pb.name, Status::Fail, e.to_string()),
        }
    }
    r
}

fn poisson_probes(m: &Manifest) -> Vec<Expr> {
    if m.sections.is_empty() {
        (1..=m.space.n).map(Expr::var).collect()
    } else {
        m.sections.values().map(|s| s.expr.clone()).collect()
    }
}

/// The Poisson battery.
/// The Poisson battery.
pub fn check_poisson_battery(m: &Manifest) -> Result<ReportDocument, CommandError> {
    let b = m.bracket.as_ref().ok_or_else(|| CommandError::Other("manifest declares no bivector".into()))?;
    let pi = &b.pi;
    let config = m.presheaf.sampling();
    let probes = poisson_probes(m);
    let mut r = ReportDocument::new("check-poisson");

    let mut bad = Vec::new();
    let mut pairs = 0;
    for f in &probes {
        for g in &probes {
            pairs += 1;
            let sum = Poly::from_expr(&bracket(f, g, pi)?).add(&Poly::from_expr(&bracket(g, f, pi)?));
            if !sum.is_zero() {
                bad.push(format!("{{{f}, {g}}} + {{{g}, {f}}} = {}", sum.to_expr()));
            }
        }
    }
    let status = Status::from_bool(bad.is_empty());
    let detail = if bad.is_empty() { format!("{pairs} ordered pairs, canonical") } else { bad.join("; ") };
    r.push("antisymmetry", "probes", status, detail);

    let mut bad = Vec::new();
    let mut triples = 0;
    let two = Expr::int(2);
    for (i, f) in probes.iter().enumerate() {
        let h = &probes[(i + 1) % probes.len()];
        for g in &probes {
            triples += 1;
            let lhs = bracket(&two.clone().mul(f.clone()).add(h.clone()), g, pi)?;
            let rhs = two.clone().mul(bracket(f, g, pi)?).add(bracket(h, g, pi)?);
            if !Poly::from_expr(&lhs).sub(&Poly::from_expr(&rhs)).is_zero() {
                bad.push(format!("{{2*({f}) + {h}, {g}}}"));
            }
        }
    }
    let status = Status::from_bool(bad.is_empty());
    let detail = if bad.is_empty() { format!("{triples} combinations, canonical") } else { bad.join("; ") };
    r.push("bilinearity", "probes", status, detail);

    let mut bad = Vec::new();
    let (mut checked, mut sampled) = (0, 0);
    'outer: for f in &probes {
        for g in &probes {
            for s in &probes {
                if checked >= LEIBNIZ_TRIPLE_LIMIT {
                    break 'outer;
                }
                checked += 1;
                let v = check_leibniz(pi, f, g, s, config)?;
                if !v.is_equal() {
                    bad.push(format!("({f}, {g}, {s}): {v}"));
                } else if v != crate::expr::EqualityVerdict::ProvenEqual {
                    sampled += 1;
                }
            }
        }
    }
    let status = Status::from_bool(bad.is_empty());
    let detail = if bad.is_empty() {
        format!("{checked} triples, {} proven-equal, {sampled} sampled-equal", checked - sampled)
    } else {
        bad.join("; ")
    };
    r.push("leibniz", "probes", status, detail);

    let report = check_poisson(pi, config);
    let detail = match &report.verdict {
        JacobiVerdict::Failed => format!(
            "failed, worst defect {:?} at {}",
            report.worst_defect,
            report.worst_at.as_ref().map(|p| p.to_string()).unwrap_or_else(|| "-".into())
        ),
        other => format!("{other}"),
    };
    r.push("jacobi", "pi", Status::from_bool(report.passed()), detail);

    let nonzero: Vec<String> = report
        .schouten
        .components
        .iter()
        .filter(|(_, e)| !Poly::from_expr(e).is_zero())
        .map(|((i, j, k), e)| format!("T^{i}{j}{k} = {e}"))
        .collect();
    let trivially = if pi.is_constant() { "constant coefficients, " } else { "" };
    if nonzero.is_empty() {
        r.push("schouten", "pi", Status::Pass, format!("{trivially}[pi, pi] = 0"));
    } else {
        r.push("schouten", "pi", Status::Fail, nonzero.join(", "));
    }
    let sign = Poly::constant(crate::expr::rat(SCHOUTEN_JACOBI_SIGN));
    let consistent = report.defects.iter().all(|(t, d)| {
        let tc = report.schouten.components.get(t).map(Poly::from_expr).unwrap_or_else(Poly::zero);
        tc.sub(&Poly::from_expr(d).mul(&sign)).is_zero()
    });
    r.push(
        "schouten-jacobi",
        "pi",
        Status::from_bool(consistent),
        format!("T^ijk = {SCHOUTEN_JACOBI_SIGN} * jacobi(x_i, x_j, x_k) for {} triples", report.defects.len()),
    );

    if m.lattice().is_empty() || m.sections.is_empty() {
        r.push("restriction", "lattice", Status::Warn, "no sections over opens; restriction battery skipped");
    } else {
        let sections: Vec<Section> = m.sections.values().cloned().collect();
        let rep = bracket_sheaf_morphism_check(b, &m.presheaf, &sections, RESTRICTION_PAIR_LIMIT)?;
        let detail = if rep.passed() {
            format!("{} restrictions, {} bilinearity checks", rep.restrictions_checked, rep.bilinearity_checked)
        } else {
            rep.restriction_failures.iter().chain(&rep.bilinearity_failures).cloned().collect::<Vec<_>>().join("; ")
        };
        r.push("restriction", "lattice", Status::from_bool(rep.passed()), detail);
    }
    Ok(r)
}

/// Dimension, transversality and boundary counts of a named fibre product.
pub fn fibre_report(m: &Manifest, name: &str) -> Result<ReportDocument, CommandError> {
    let decl = m
        .fibre_products
        .get(name)
        .ok_or_else(|| ManifestError::Unresolved { location: "fibre_products".into(), name: name.into() })?;
    let d = &decl.desc;
    let mut r = ReportDocument::new("fibre");
    match fibre_product_dim(d) {
        Ok(n) => r.push("dimension", name, Status::Pass, format!("dim {n} = {} + {} - {}", d.x.n, d.y.n, d.z.n)),
        Err(e) => {
            r.push("dimension", name, Status::Fail, e.to_string());
            return Ok(r);
        }
    }
    match boundary_decomposition_count(d, &decl.grid) {
        Ok(c) => {
            r.push(
                "transversality",
                name,
                Status::Pass,
                format!("rank condition holds at {} solution points", c.transversality_points),
            );
            let faces: Vec<String> = c.faces.iter().map(|(f, l, rr)| format!("{f}: {l}/{rr}")).collect();
            r.push(
                "boundary",
                name,
                Status::from_bool(c.matches()),
                format!("counts {} = {} + {} [{}]", c.lhs, c.rhs_x, c.rhs_y, faces.join(", ")),
            );
        }
        Err(e @ CornerError::CornerMeetsCorner(_)) => r.push("boundary", name, Status::Fail, e.to_string()),
        Err(e @ CornerError::NotTransverse { .. }) => r.push("transversality", name, Status::Fail, e.to_string()),
        Err(e) => r.push("boundary", name, Status::Fail, format!("unsupported: {e}")),
    }
    Ok(r)
}

/// Residue and maximal-ideal membership of a section's germ at `point`.
pub fn stalk_report(m: &Manifest, section: &str, point: &str) -> Result<ReportDocument, CommandError> {
    let s = m.section(section)?;
    let x = Point::parse(point).ok_or_else(|| CommandError::Other(format!("cannot parse point `{point}`")))?;
    let g = germ_at(&m.presheaf, s, &x)?;
    let value = match residue_exact(&g) {
        Ok(v) => format_rational(&v),
        Err(_) => format!("{}", residue(&g)?),
    };
    let member = in_maximal_ideal(&g)?;
    let mut r = ReportDocument::new("stalk");
    r.push("residue", section, Status::Pass, format!("residue {value} at {x}"));
    r.push("maximal-ideal", section, Status::Pass, if member { "in m" } else { "not in m (unit)" });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["poisson-corners", "frobnicate"], &mut out, &mut err), 2);
        assert_eq!(run(["poisson-corners", "check-sheaf", "/nonexistent.json"], &mut out, &mut err), 2);
        assert!(String::from_utf8(err).unwrap().contains("cannot read"));
    }
}
