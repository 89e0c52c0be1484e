use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use qdlab::boundary_defect::{boundary_label, condensation_map, defect_types, LagrangianVector};
use qdlab::group_core::{build_group, FiniteGroup, GroupSpec, Subgroup};
use qdlab::hopf_algebra::{verify_quasi_hopf, verify_with, TransversalChoice, Variant, ZAlgebra};
use qdlab::lattice_sim::{self, Lattice, LatticeSpec};
use qdlab::linalg::{CMat, C64};
use qdlab::mtc_data::{self, MtcData};
use qdlab::protocols;
use qdlab::qdouble;
use qdlab::wilson_ops::{self, ChargeTarget, GroundBasis, OperatorMatrix};

#[derive(Parser)]
#[command(name = "qdlab", version, about = "Quantum double anyons, boundaries, logical gates and lattice checks")]
struct Cli {
    /// print JSON instead of a table
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// magnitudes below this print as zero
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// worker threads for the lattice kernels
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// F/R data file (MTC JSON) used instead of the named category
    #[arg(long, global = true)]
    fr_data: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// anyon types of D(G)
    Anyons { group: String },
    /// modular S and T of D(G) or of an MTC (builtin:NAME or a JSON file)
    Modular { target: String },
    /// fusion rules of D(G) or of an MTC
    Fusion { target: String },
    /// gapped boundaries: Lagrangian label and condensation table per subgroup
    Boundary {
        group: String,
        /// one subgroup (generators, "1" or "full"); default: every class
        #[arg(long)]
        subgroup: Option<String>,
    },
    /// defect types between a K1 and a K2 boundary
    Defects {
        group: String,
        #[arg(long, default_value = "1")]
        k1: String,
        #[arg(long, default_value = "full")]
        k2: String,
        /// bare genons of G x G (K1 trivial, K2 = G x 1)
        #[arg(long)]
        genon: bool,
    },
    /// Lagrangian algebras of an MTC
    Lagrangian { mtc: String },
    /// solve the M-3j symbols of a boundary
    Msolve {
        mtc: String,
        #[arg(long)]
        boundary: String,
    },
    /// logical gate matrices on the hole ground space
    Gate {
        #[arg(value_enum)]
        kind: GateKind,
        #[arg(long, default_value = "builtin:tc")]
        mtc: String,
        /// hole boundary; repeat for several holes
        #[arg(long, required = true)]
        boundary: Vec<String>,
        #[arg(long)]
        anyon: Option<String>,
        /// hole for loop and loop projections (1-based)
        #[arg(long, default_value_t = 1)]
        hole: usize,
        /// braid word in time order, e.g. "2,2" or "1,-2"
        #[arg(long, default_value = "2,2")]
        word: String,
        /// restrict a braid to the two-qudit block
        #[arg(long)]
        logical: bool,
        /// "arc" or "loop"
        #[arg(long, default_value = "arc")]
        target: String,
    },
    /// protocol checks
    Protocol {
        #[arg(value_enum)]
        name: ProtocolName,
        #[arg(long, default_value_t = 10000)]
        trials: usize,
        #[arg(long, default_value_t = 64)]
        horizon: usize,
    },
    /// quasi-Hopf axioms of the boundary algebra
    HopfCheck {
        group: String,
        #[arg(long)]
        subgroup: String,
        /// use the formulas exactly as printed
        #[arg(long)]
        printed: bool,
    },
    /// exact lattice simulation
    Lattice {
        #[arg(value_enum)]
        action: LatticeAction,
        /// lattice spec JSON file
        #[arg(long, conflicts_with = "preset")]
        spec: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 32)]
        trials: usize,
        /// flux string start plaquette (ribbon)
        #[arg(long, default_value_t = 0)]
        x0: usize,
        #[arg(long, default_value_t = 0)]
        row: usize,
        /// flux element, by name or index
        #[arg(long, default_value = "1")]
        flux: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GateKind {
    Tunnel,
    Loop,
    Braid,
    Project,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolName {
    Order6,
    Dz3,
    TcPhaseWalk,
}

#[derive(Clone, Copy, ValueEnum)]
enum LatticeAction {
    Check,
    Gsd,
    Ribbon,
}

/// output of one command
struct Report {
    json: Value,
    table: String,
}

struct Fmt {
    tol: f64,
}

impl Fmt {
    fn r12(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return x;
        }
        if x.abs() < self.tol {
            return 0.0;
        }
        let v: f64 = format!("{:.11e}", x).parse().unwrap_or(x);
        if v == 0.0 {
            0.0
        } else {
            v
        }
    }

    fn f6(&self, x: f64) -> String {
        if x.abs() < self.tol {
            return "0".into();
        }
        let v: f64 = format!("{:.5e}", x).parse().unwrap_or(x);
        format!("{}", v)
    }

    fn c6(&self, z: C64) -> String {
        let (re, im) = (z.re.abs() >= self.tol, z.im.abs() >= self.tol);
        match (re, im) {
            (false, false) => "0".into(),
            (true, false) => self.f6(z.re),
            (false, true) => format!("{}i", self.f6(z.im)),
            (true, true) => {
                let sign = if z.im < 0.0 { "-" } else { "+" };
                format!("{}{}{}i", self.f6(z.re), sign, self.f6(z.im.abs()))
            }
        }
    }

    fn cj(&self, z: C64) -> Value {
        json!([z.re, z.im])
    }

    fn mat(&self, m: &CMat) -> Value {
        Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| self.cj(m[(i, j)])).collect())).collect())
    }

    /// round every float in a JSON tree to 12 significant digits
    fn round(&self, v: Value) -> Value {
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = self.r12(n.as_f64().unwrap_or(0.0));
                if x.fract() == 0.0 && x.abs() < 1e15 {
                    json!(x as i64)
                } else {
                    json!(x)
                }
            }
            Value::Array(a) => Value::Array(a.into_iter().map(|x| self.round(x)).collect()),
            Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, self.round(x))).collect()),
            other => other,
        }
    }

    fn mat_table(&self, labels: &[String], m: &CMat) -> String {
        let cells: Vec<Vec<String>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| self.c6(m[(i, j)])).collect()).collect();
        let mut rows = vec![std::iter::once(String::new()).chain(labels.iter().cloned()).collect::<Vec<_>>()];
        for (i, r) in cells.into_iter().enumerate() {
            rows.push(std::iter::once(labels.get(i).cloned().unwrap_or_default()).chain(r).collect());
        }
        table(&rows)
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let ncol = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut width = vec![0; ncol];
    for r in rows {
        for (j, c) in r.iter().enumerate() {
            width[j] = width[j].max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().enumerate().map(|(j, c)| format!("{:<w$}", c, w = width[j])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn row(items: &[&dyn ToString]) -> Vec<String> {
    items.iter().map(|x| x.to_string()).collect()
}

fn group(s: &str) -> Result<FiniteGroup> {
    Ok(build_group(&GroupSpec::parse(s)?)?)
}

fn subgroup_name(g: &FiniteGroup, k: &Subgroup) -> String {
    if k.order() == 1 {
        return "1".into();
    }
    if k.order() == g.order {
        return "G".into();
    }
    format!("{{{}}}", k.elements.iter().map(|&x| g.names[x].clone()).collect::<Vec<_>>().join(","))
}

fn is_mtc_target(s: &str) -> bool {
    s.starts_with("builtin:") || std::path::Path::new(s).exists()
}

impl Cli {
    fn mtc(&self, spec: &str) -> Result<MtcData> {
        if let Some(p) = &self.fr_data {
            return Ok(mtc_data::load_mtc(p)?.0);
        }
        Ok(mtc_data::resolve(spec)?)
    }

    /// labels, dims, S, T, fusion of a group double or an MTC
    #[allow(clippy::type_complexity)]
    fn modular_of(&self, target: &str) -> Result<(String, Vec<String>, Vec<f64>, CMat, Vec<C64>, Vec<Vec<Vec<usize>>>)> {
        if is_mtc_target(target) || self.fr_data.is_some() {
            let m = self.mtc(target)?;
            Ok((m.name.clone(), m.labels.clone(), m.dims.clone(), m.s.clone(), m.t.clone(), m.fusion.clone()))
        } else {
            let sys = qdouble::build(&group(target)?)?;
            Ok((format!("D({})", sys.group.name), sys.labels(), sys.dims.clone(), sys.s.clone(), sys.t.clone(), sys.fusion.clone()))
        }
    }
}

fn products(labels: &[String], n: &[usize]) -> String {
    let parts: Vec<String> = n
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(c, &k)| if k == 1 { labels[c].clone() } else { format!("{}*{}", k, labels[c]) })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn op_report(f: &Fmt, op: &OperatorMatrix, extra: Map<String, Value>) -> Report {
    let mut j = Map::new();
    j.insert("name".into(), json!(op.name));
    j.insert("labels".into(), json!(op.labels));
    j.insert("matrix".into(), f.mat(&op.entries));
    j.extend(extra);
    Report { json: Value::Object(j), table: format!("{}\n{}", op.name, f.mat_table(&op.labels, &op.entries)) }
}

fn cmd_anyons(f: &Fmt, g: &str) -> Result<Report> {
    let sys = qdouble::build(&group(g)?)?;
    let mut rows = vec![row(&[&"label", &"class", &"class_size", &"irrep_dim", &"dim", &"twist"])];
    let mut list = Vec::new();
    for (a, an) in sys.anyons.iter().enumerate() {
        let rep = sys.group.names[sys.classes[an.class].rep].clone();
        rows.push(vec![an.label.clone(), rep.clone(), sys.class_size(a).to_string(), sys.irrep_dim(a).to_string(), f.f6(sys.dims[a]), f.c6(sys.t[a])]);
        list.push(json!({"label": an.label, "class": rep, "class_size": sys.class_size(a), "irrep_dim": sys.irrep_dim(a), "dim": sys.dims[a], "twist": f.cj(sys.t[a])}));
    }
    Ok(Report {
        json: json!({"group": sys.group.name, "count": sys.len(), "anyons": list}),
        table: format!("D({}): {} anyons\n{}", sys.group.name, sys.len(), table(&rows)),
    })
}

fn cmd_modular(cli: &Cli, f: &Fmt, target: &str) -> Result<Report> {
    let (name, labels, dims, s, t, _) = cli.modular_of(target)?;
    let tm = qdlab::linalg::diag(&t);
    Ok(Report {
        json: json!({"name": name, "labels": labels, "dims": dims, "S": f.mat(&s), "T": t.iter().map(|z| f.cj(*z)).collect::<Vec<_>>()}),
        table: format!("{}\nS\n{}T\n{}", name, f.mat_table(&labels, &s), f.mat_table(&labels, &tm)),
    })
}

fn cmd_fusion(cli: &Cli, f: &Fmt, target: &str) -> Result<Report> {
    let (name, labels, _, _, _, fusion) = cli.modular_of(target)?;
    let _ = f;
    let mut rules = Vec::new();
    let mut rows = Vec::new();
    for a in 0..labels.len() {
        for b in a..labels.len() {
            let mut p = Map::new();
            for (c, &k) in fusion[a][b].iter().enumerate() {
                if k > 0 {
                    p.insert(labels[c].clone(), json!(k));
                }
            }
            rules.push(json!({"a": labels[a], "b": labels[b], "products": p}));
            rows.push(vec![format!("{} x {}", labels[a], labels[b]), "=".into(), products(&labels, &fusion[a][b])]);
        }
    }
    Ok(Report { json: json!({"name": name, "labels": labels, "rules": rules}), table: format!("{}\n{}", name, table(&rows)) })
}

fn cmd_boundary(f: &Fmt, g: &str, sub: Option<&str>) -> Result<Report> {
    let sys = qdouble::build(&group(g)?)?;
    let labels = sys.labels();
    let ks = match sub {
        Some(s) => vec![sys.group.parse_subgroup(s)?],
        None => sys.group.subgroup_classes()?,
    };
    let mut out = Vec::new();
    let mut text = String::new();
    for k in &ks {
        let lv = boundary_label(&sys, k)?;
        let (exc, map) = condensation_map(&sys, k)?;
        let exc_labels: Vec<String> = exc.iter().map(|x| x.label.clone()).collect();
        let mut cond = Map::new();
        let mut rows = vec![row(&[&"anyon", &"->", &"boundary"])];
        for (a, l) in labels.iter().enumerate() {
            let mut m = Map::new();
            for (j, x) in exc_labels.iter().enumerate() {
                if map.coefficients[a][j] > 0 {
                    m.insert(x.clone(), json!(map.coefficients[a][j]));
                }
            }
            cond.insert(l.clone(), Value::Object(m));
            rows.push(vec![l.clone(), "->".into(), products(&exc_labels, &map.coefficients[a])]);
        }
        let excs: Vec<Value> = exc.iter().map(|x| json!({"label": x.label, "dim": x.fpdim})).collect();
        let kname = subgroup_name(&sys.group, k);
        text.push_str(&format!(
            "K = {} (order {}): {}\nexcitations: {}\n{}\n",
            kname,
            k.order(),
            lv.display(&labels),
            exc.iter().map(|x| format!("{} (dim {})", x.label, f.f6(x.fpdim))).collect::<Vec<_>>().join(", "),
            table(&rows)
        ));
        out.push(json!({"subgroup": kname, "order": k.order(), "lagrangian": lv.display(&labels), "excitations": excs, "condensation": cond}));
    }
    Ok(Report { json: json!({"group": sys.group.name, "boundaries": out}), table: text })
}

fn cmd_defects(f: &Fmt, g: &str, k1: &str, k2: &str, genon: bool) -> Result<Report> {
    let (gg, a, b) = if genon {
        let base = group(g)?;
        let n = base.order;
        let gg = group(&format!("{}x{}", g, g))?;
        let k2: Vec<usize> = (0..n).map(|x| x * n).collect();
        let k2 = gg.subgroup(&k2)?;
        (gg.clone(), gg.trivial_subgroup(), k2)
    } else {
        let gg = group(g)?;
        let a = gg.parse_subgroup(k1)?;
        let b = gg.parse_subgroup(k2)?;
        (gg, a, b)
    };
    let ds = defect_types(&gg, &a, &b)?;
    let mut rows = vec![row(&[&"label", &"coset_rep", &"irrep_dim", &"dim"])];
    let mut list = Vec::new();
    for d in &ds {
        rows.push(vec![d.label.clone(), gg.names[d.coset.rep].clone(), d.irrep_dim().to_string(), f.f6(d.fpdim)]);
        list.push(json!({"label": d.label, "coset_rep": gg.names[d.coset.rep], "irrep_dim": d.irrep_dim(), "dim": d.fpdim}));
    }
    let (ka, kb) = (subgroup_name(&gg, &a), subgroup_name(&gg, &b));
    Ok(Report {
        json: json!({"group": gg.name, "k1": ka, "k2": kb, "count": ds.len(), "defects": list}),
        table: format!("{}: K1 = {}, K2 = {}: {} types\n{}", gg.name, ka, kb, ds.len(), table(&rows)),
    })
}

fn cmd_lagrangian(cli: &Cli, f: &Fmt, spec: &str) -> Result<Report> {
    let m = cli.mtc(spec)?;
    let algs = mtc_data::find_lagrangian_algebras(&m);
    let names: Vec<String> = algs.iter().map(|a| a.display(&m.labels)).collect();
    let dims: Vec<f64> = algs.iter().map(|a| a.dim(&m.dims)).collect();
    let rows: Vec<Vec<String>> = names.iter().zip(&dims).map(|(n, d)| vec![n.clone(), format!("dim {}", f.f6(*d))]).collect();
    Ok(Report {
        json: json!({"name": m.name, "algebras": names, "dims": dims}),
        table: format!("{}: {} Lagrangian algebras\n{}", m.name, names.len(), table(&rows)),
    })
}

fn lagrangian(m: &MtcData, s: &str) -> Result<LagrangianVector> {
    LagrangianVector::parse(s, &m.labels).ok_or_else(|| anyhow!("cannot parse boundary '{}' over labels {:?}", s, m.labels))
}

fn cmd_msolve(cli: &Cli, f: &Fmt, spec: &str, boundary: &str) -> Result<Report> {
    let m = cli.mtc(spec)?;
    let lv = lagrangian(&m, boundary)?;
    let set = mtc_data::solve_m3j(&m, &lv, cli.seed)?;
    let mut rows = vec![row(&[&"a", &"b", &"c", &"M"])];
    let mut vals = Vec::new();
    for (&(a, b, c), &z) in &set.values {
        rows.push(vec![m.labels[a].clone(), m.labels[b].clone(), m.labels[c].clone(), f.c6(z)]);
        vals.push(json!({"a": m.labels[a], "b": m.labels[b], "c": m.labels[c], "value": f.cj(z)}));
    }
    let res = json!({"pentagon": set.pentagon_residual, "braid": set.braid_residual, "braid_summed": set.braid_summed_residual, "normalization": set.normalization_residual});
    Ok(Report {
        json: json!({"name": m.name, "boundary": lv.display(&m.labels), "values": vals, "residuals": res}),
        table: format!(
            "{} boundary {}\n{}residuals: pentagon {} braid {} normalization {}\n",
            m.name,
            lv.display(&m.labels),
            table(&rows),
            f.f6(set.pentagon_residual),
            f.f6(set.braid_residual),
            f.f6(set.normalization_residual)
        ),
    })
}

fn parse_word(s: &str) -> Result<Vec<(usize, bool)>> {
    s.split(',')
        .map(|t| {
            let v: i64 = t.trim().parse().with_context(|| format!("bad braid generator '{}'", t))?;
            if v == 0 || v.abs() > 3 {
                bail!("braid generators are 1, 2, 3 or their negatives");
            }
            Ok((v.unsigned_abs() as usize, v < 0))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_gate(cli: &Cli, f: &Fmt, kind: GateKind, spec: &str, bds: &[String], anyon: Option<&str>, hole: usize, word: &str, logical: bool, target: &str) -> Result<Report> {
    let m = cli.mtc(spec)?;
    let lvs: Vec<LagrangianVector> = bds.iter().map(|b| lagrangian(&m, b)).collect::<Result<_>>()?;
    let holes: Vec<LagrangianVector> = match (kind, lvs.len()) {
        (GateKind::Braid, 1) => vec![lvs[0].clone(); 4],
        (GateKind::Braid, 2) => vec![lvs[0].clone(), lvs[0].clone(), lvs[1].clone(), lvs[1].clone()],
        (_, 1) => vec![lvs[0].clone(); 2],
        _ => lvs.clone(),
    };
    let basis: GroundBasis = wilson_ops::ground_state_basis(&m, &holes)?;
    let need = || anyon.ok_or_else(|| anyhow!("--anyon is required"));
    let op = match kind {
        GateKind::Tunnel => {
            let m1 = mtc_data::solve_m3j(&m, &holes[0], cli.seed)?;
            let m2 = mtc_data::solve_m3j(&m, &holes[1], cli.seed)?;
            wilson_ops::tunnel_matrix(&m, &m1, &m2, &basis, need()?)?
        }
        GateKind::Loop => wilson_ops::loop_matrix(&m, &basis, hole, need()?)?,
        GateKind::Braid => {
            let w = parse_word(word)?;
            let op = wilson_ops::braid_word_matrix(&m, &basis, &w, &format!("braid[{}]", word))?;
            if logical {
                let idx = wilson_ops::logical_subspace(&basis);
                let labels = idx.iter().map(|&i| basis.labels[i].clone()).collect();
                OperatorMatrix { name: op.name.clone(), entries: wilson_ops::restrict(&op.entries, &idx), labels }
            } else {
                op
            }
        }
        GateKind::Project => {
            let t = match target {
                "arc" => ChargeTarget::Arc,
                "loop" => ChargeTarget::Loop(hole),
                other => bail!("unknown projection target '{}' (arc or loop)", other),
            };
            wilson_ops::charge_projection(&m, &basis, t, need()?)?
        }
    };
    let mut extra = Map::new();
    extra.insert("mtc".into(), json!(m.name));
    extra.insert("holes".into(), json!(holes.iter().map(|h| h.display(&m.labels)).collect::<Vec<_>>()));
    Ok(op_report(f, &op, extra))
}

fn cmd_protocol(cli: &Cli, f: &Fmt, name: ProtocolName, trials: usize, horizon: usize) -> Result<Report> {
    match name {
        ProtocolName::Order6 => {
            let r = protocols::check_universality_order6();
            let ev = |v: &[[f64; 2]]| v.iter().map(|z| f.c6(C64::new(z[0], z[1]))).collect::<Vec<_>>().join(", ");
            Ok(Report {
                json: serde_json::to_value(&r)?,
                table: format!(
                    "order-6 qubit set\neigenvalues M: {}\neigenvalues N: {}\neigenvalue error {}\n|MN - NM| = {}\npass: {}\n",
                    ev(&r.eigenvalues_m),
                    ev(&r.eigenvalues_n),
                    f.f6(r.eigenvalue_error),
                    f.f6(r.commutator_norm),
                    r.pass
                ),
            })
        }
        ProtocolName::Dz3 => {
            let r = protocols::dz3_universal_set()?;
            let gates: Vec<Value> = r.gates.gates.iter().map(|g| json!({"name": g.name, "provenance": g.provenance, "clifford": g.clifford, "measurement": g.measurement})).collect();
            let checks: Vec<Value> = r.checks.iter().map(|c| json!({"name": c.name, "error": c.error, "pass": c.pass})).collect();
            let mut rows = vec![row(&[&"gate", &"provenance"])];
            for g in &r.gates.gates {
                rows.push(vec![g.name.clone(), serde_json::to_value(g.provenance)?.as_str().unwrap_or("").to_string()]);
            }
            let mut crow = vec![row(&[&"check", &"error", &"pass"])];
            for c in &r.checks {
                crow.push(vec![c.name.clone(), f.f6(c.error), c.pass.to_string()]);
            }
            Ok(Report {
                json: json!({"gates": gates, "checks": checks, "projection": f.mat(&r.projection.entries), "pass": r.pass()}),
                table: format!("D(Z3) gate set\n{}\n{}pass: {}\n", table(&rows), table(&crow), r.pass()),
            })
        }
        ProtocolName::TcPhaseWalk => {
            let s = protocols::phase_walk_statistics(cli.seed, trials, horizon)?;
            Ok(Report {
                json: serde_json::to_value(&s)?,
                table: format!(
                    "toric phase-gate walk: seed {} trials {} horizon {}\nsuccesses {} fraction {}\nmean rounds {}\nmax round-factor error {}\n",
                    s.seed,
                    s.trials,
                    s.horizon,
                    s.successes,
                    f.f6(s.success_fraction),
                    f.f6(s.mean_rounds),
                    f.f6(s.max_factor_error)
                ),
            })
        }
    }
}

fn cmd_hopf(f: &Fmt, g: &str, sub: &str, printed: bool) -> Result<Report> {
    let grp = group(g)?;
    let k = grp.parse_subgroup(sub)?;
    let r = if printed {
        verify_with(&ZAlgebra::new(&grp, &k, Variant::AsPrinted, TransversalChoice::TwoSided)?)?
    } else {
        verify_quasi_hopf(&grp, &k)?
    };
    let rows: Vec<Vec<String>> = r.residuals.iter().map(|(n, x)| vec![n.clone(), f.f6(*x)]).collect();
    Ok(Report {
        json: serde_json::to_value(&r)?,
        table: format!("{} K order {} ({:?})\n{}pass: {}\n", r.group, r.subgroup_order, r.variant, table(&rows), r.pass),
    })
}

fn element(g: &FiniteGroup, s: &str) -> Result<usize> {
    if let Some(x) = g.element_by_name(s) {
        return Ok(x);
    }
    let i: usize = s.parse().map_err(|_| anyhow!("unknown group element '{}'", s))?;
    if i >= g.order {
        bail!("element index {} out of range", i);
    }
    Ok(i)
}

#[allow(clippy::too_many_arguments)]
fn cmd_lattice(cli: &Cli, f: &Fmt, action: LatticeAction, spec: Option<&PathBuf>, preset: Option<&str>, trials: usize, x0: usize, y: usize, flux: &str) -> Result<Report> {
    let ls = match (spec, preset) {
        (Some(p), _) => LatticeSpec::parse(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        (None, Some(n)) => LatticeSpec::preset(n).ok_or_else(|| anyhow!("unknown preset '{}'", n))?,
        (None, None) => bail!("give --spec FILE or --preset NAME"),
    };
    let lat = Lattice::build(&ls)?;
    let head = json!({"group": lat.group.name, "width": lat.width, "height": lat.height, "edges": lat.num_edges, "dim": lat.dim, "terms": lat.terms.len()});
    let title = format!("{} {}x{}: {} edges, {} amplitudes, {} terms", lat.group.name, lat.width, lat.height, lat.num_edges, lat.dim, lat.terms.len());
    match action {
        LatticeAction::Check => {
            let r = lattice_sim::verify_commuting(&lat, trials, cli.seed);
            let pass = r.max_residual < 1e-10 && r.max_idempotency_residual < 1e-10;
            let worst = r.worst_pair.clone().map(|(a, b)| format!("{} {}", a, b)).unwrap_or_else(|| "-".into());
            Ok(Report {
                json: json!({"lattice": head, "commuting": r, "pass": pass}),
                table: format!(
                    "{}\npairs checked {} on {} states\nmax commutator {} (worst {})\nmax P^2 - P {}\npass: {}\n",
                    title,
                    r.pairs_checked,
                    r.trials,
                    f.f6(r.max_residual),
                    worst,
                    f.f6(r.max_idempotency_residual),
                    pass
                ),
            })
        }
        LatticeAction::Gsd => {
            let d = lattice_sim::ground_space_dimension(&lat, cli.seed);
            Ok(Report { json: json!({"lattice": head, "gsd": d}), table: format!("{}\nground space dimension {}\n", title, d) })
        }
        LatticeAction::Ribbon => {
            let h = element(&lat.group, flux)?;
            let r = lattice_sim::confinement_profile(&lat, x0, y, h, cli.seed)?;
            let mut rows = vec![row(&[&"length", &"violated"])];
            for (l, v) in r.lengths.iter().zip(&r.violated) {
                rows.push(vec![l.to_string(), v.to_string()]);
            }
            Ok(Report {
                json: json!({"lattice": head, "ribbon": r}),
                table: format!("{}\nflux string {} along row {}\n{}slope {}\n", title, lat.group.names[h], y, table(&rows), f.f6(r.slope)),
            })
        }
    }
}

fn run(cli: &Cli) -> Result<Report> {
    let f = Fmt { tol: cli.tol };
    match &cli.cmd {
        Cmd::Anyons { group } => cmd_anyons(&f, group),
        Cmd::Modular { target } => cmd_modular(cli, &f, target),
        Cmd::Fusion { target } => cmd_fusion(cli, &f, target),
        Cmd::Boundary { group, subgroup } => cmd_boundary(&f, group, subgroup.as_deref()),
        Cmd::Defects { group, k1, k2, genon } => cmd_defects(&f, group, k1, k2, *genon),
        Cmd::Lagrangian { mtc } => cmd_lagrangian(cli, &f, mtc),
        Cmd::Msolve { mtc, boundary } => cmd_msolve(cli, &f, mtc, boundary),
        Cmd::Gate { kind, mtc, boundary, anyon, hole, word, logical, target } => {
            cmd_gate(cli, &f, *kind, mtc, boundary, anyon.as_deref(), *hole, word, *logical, target)
        }
        Cmd::Protocol { name, trials, horizon } => cmd_protocol(cli, &f, *name, *trials, *horizon),
        Cmd::HopfCheck { group, subgroup, printed } => cmd_hopf(&f, group, subgroup, *printed),
        Cmd::Lattice { action, spec, preset, trials, x0, row, flux } => {
            cmd_lattice(cli, &f, *action, spec.as_ref(), preset.as_deref(), *trials, *x0, *row, flux)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {} worker threads", n);
            return ExitCode::from(2);
        }
    }
    let f = Fmt { tol: cli.tol };
    match run(&cli) {
        Ok(r) => {
            if cli.json {
                let v = f.round(r.json);
                println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            } else {
                print!("{}", r.table);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = format!("{:#}", e);
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&json!({"error": msg})).unwrap_or_default());
            }
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
    }
}
