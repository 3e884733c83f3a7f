use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use chaincausal::causality::{
    causality_index_search, check_identities_sampled, decide_strict_causal_with, find_sign_flip_counterexample,
    sign_flip, verify_determinant_identities, verify_model_equality, DecideOptions, Decision, IndexOptions,
    IndexValue,
};
use chaincausal::gaussian::{membership_chain, read_cov_csv, sample_params, MembershipOptions};
use chaincausal::graph::io::{parse_auto, to_dot};
use chaincausal::graph::{
    bidirected_cliques, canonical_dag, chain_components, clique_digraph, is_chain_graph, is_decomposable, validate as
    validate_raw,
};
use chaincausal::linalg::min_eigenvalue;
use chaincausal::random::trial_seed;
use chaincausal::separation::{d_connected, negation_edge_set, tops};
use chaincausal::treks::{det_via_treks, enumerate_treks, trek_monomial, trek_systems};
use chaincausal::{MixedGraph, RawGraph, Vertex, VertexSet};

use crate::report::{to_value, CliError, Report};
use crate::Common;

type Res = Result<Report, CliError>;

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("report bodies are objects"),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_raw(path: &Path) -> Result<RawGraph, CliError> {
    Ok(parse_auto(&read(path)?)?)
}

fn graph_path(c: &Common) -> Result<&Path, CliError> {
    c.graph.as_deref().ok_or_else(|| CliError::Usage("--graph is required for this command".into()))
}

fn load_graph(c: &Common) -> Result<MixedGraph, CliError> {
    Ok(MixedGraph::from_raw(&load_raw(graph_path(c)?)?)?)
}

fn vertices(g: &MixedGraph, labels: &[String]) -> Result<Vec<Vertex>, CliError> {
    Ok(labels.iter().map(|l| g.vertex(l)).collect::<chaincausal::Result<_>>()?)
}

fn set_text(labels: &[String]) -> String {
    format!("{{{}}}", labels.join(", "))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn validate(c: &Common) -> Res {
    let raw = load_raw(graph_path(c)?)?;
    let r = validate_raw(&raw);
    let mut text = format!("valid: {}\n", yes_no(r.valid));
    for (name, items) in [
        ("duplicate nodes", &r.duplicate_nodes),
        ("self-loops", &r.self_loops),
        ("duplicate edges", &r.duplicate_edges),
        ("unknown vertices", &r.unknown_vertices),
    ] {
        if !items.is_empty() {
            let _ = writeln!(text, "{name}: {}", items.join(", "));
        }
    }
    for (name, flag) in [("acyclic", r.acyclic), ("simple", r.simple), ("chain graph", r.chain_graph)] {
        if let Some(b) = flag {
            let _ = writeln!(text, "{name}: {}", yes_no(b));
        }
    }
    Ok(Report::new("validate", object(json!({ "report": to_value(&r) })), text, r.valid))
}

pub fn analyze(c: &Common) -> Res {
    let g = load_graph(c)?;
    let chain = is_chain_graph(&g);
    let dec = is_decomposable(&g);
    let components: Option<Vec<Vec<String>>> = if chain {
        Some(chain_components(&g)?.components.iter().map(|comp| g.labels_of(comp)).collect())
    } else {
        None
    };
    let cliques: Vec<Vec<String>> = bidirected_cliques(&g, 2).iter().map(|cl| g.labels_of(cl)).collect();
    let certificate = dec.certificate.as_ref().map(|cy| g.labels_of(cy));
    let peo = dec.elimination_ordering.as_ref().map(|o| g.labels_of(o));
    let body = json!({
        "vertices": g.labels(),
        "directed_edges": g.num_directed(),
        "bidirected_edges": g.num_bidirected(),
        "acyclic": g.is_acyclic(),
        "simple": g.is_simple(),
        "chain_graph": chain,
        "chain_components": components,
        "decomposable": dec.decomposable,
        "chordless_cycle": certificate,
        "elimination_ordering": peo,
        "bidirected_cliques": cliques,
        "strictly_causal": chain.then_some(dec.decomposable),
    });
    let mut text = String::new();
    let _ = writeln!(text, "vertices: {}", g.n());
    let _ = writeln!(text, "edges: {} directed, {} bidirected", g.num_directed(), g.num_bidirected());
    let _ = writeln!(text, "acyclic: {}", yes_no(g.is_acyclic()));
    let _ = writeln!(text, "simple: {}", yes_no(g.is_simple()));
    let _ = writeln!(text, "chain graph: {}", yes_no(chain));
    if let Some(comps) = &components {
        let shown: Vec<String> = comps.iter().map(|c| set_text(c)).collect();
        let _ = writeln!(text, "chain components: {}", shown.join(" "));
    }
    let _ = writeln!(text, "decomposable: {}", yes_no(dec.decomposable));
    if let Some(cy) = &certificate {
        let _ = writeln!(text, "chordless cycle: {}", cy.join(" "));
    }
    if let Some(o) = &peo {
        let _ = writeln!(text, "elimination ordering: {}", o.join(" "));
    }
    let _ = writeln!(text, "bidirected cliques: {}", cliques.len());
    if chain {
        let _ = writeln!(text, "strictly causal: {}", yes_no(dec.decomposable));
    }
    Ok(Report::new("analyze", object(body), text, true))
}

pub fn decide(c: &Common) -> Res {
    let g = load_graph(c)?;
    let opts = DecideOptions {
        seed: c.seed,
        trials: c.trials,
        tol: c.tol,
    };
    let verdict = decide_strict_causal_with(&g, &opts)?;
    let causal = verdict.decision == Decision::StrictlyCausal;
    let mut body = object(json!({
        "decision": to_value(&verdict.decision),
        "witness": to_value(&verdict.witness),
        "refutation": to_value(&verdict.refutation),
    }));
    let mut text = String::new();
    let artifact;
    if let Some(w) = &verdict.witness {
        let dot = to_dot(&w.digraph, Some(&w.hidden));
        body.insert("dot".into(), dot.clone().into());
        let _ = writeln!(text, "decision: strictly causal");
        let k = w.hidden.hidden.len();
        let _ = writeln!(text, "witness: digraph with {k} hidden {}", if k == 1 { "vertex" } else { "vertices" });
        for (h, kids) in &w.hidden.hidden {
            let _ = writeln!(text, "  {} -> {}", w.digraph.label(*h), w.digraph.labels_of(kids).join(", "));
        }
        artifact = dot;
    } else {
        let cert = verdict.refutation.as_ref().expect("negative verdicts carry a certificate");
        let _ = writeln!(text, "decision: not strictly causal");
        let _ = writeln!(text, "chordless cycle: {}", cert.cycle.join(" "));
        let _ = writeln!(text, "ancestors of the component: {}", set_text(&cert.a));
        let _ = writeln!(
            text,
            "phi: min eigenvalue {:.6}, after sign flip {:.6}",
            cert.phi_min_eigenvalue, cert.phi_flipped_min_eigenvalue
        );
        let id = &cert.identities;
        let _ = writeln!(
            text,
            "determinant identities over {} points: max error {:.3e}, flip error {:.3e}, {}",
            id.trials,
            id.max_error,
            id.flip_max_error,
            if id.passed { "hold" } else { "FAIL" }
        );
        let cert_json = object(json!({ "schema_version": crate::report::SCHEMA_VERSION, "certificate": to_value(cert) }));
        artifact = serde_json::to_string_pretty(&Value::Object(cert_json)).expect("certificate serializes") + "\n";
    }
    let mut report = Report::new("decide", body, text, causal);
    report.artifact = Some(artifact);
    Ok(report)
}

pub fn treks(c: &Common, from: &str, to: &str) -> Res {
    let g = load_graph(c)?;
    let (u, v) = (g.vertex(from)?, g.vertex(to)?);
    let all = enumerate_treks(&g, u, v)?;
    let rows: Vec<(String, String, String)> = all
        .iter()
        .map(|t| (t.display(&g), g.label(t.top).to_string(), trek_monomial(t).display(&g)))
        .collect();
    let body = json!({
        "from": from,
        "to": to,
        "count": all.len(),
        "treks": rows.iter().map(|(t, top, m)| json!({ "trek": t, "top": top, "monomial": m })).collect::<Vec<_>>(),
    });
    let mut text = format!("{} treks from {from} to {to}\n", all.len());
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (t, _, m) in &rows {
        let _ = writeln!(text, "  {t:width$}  {m}");
    }
    Ok(Report::new("treks", object(body), text, true))
}

pub fn det(c: &Common, rows: &[String], cols: &[String]) -> Res {
    let g = load_graph(c)?;
    let (xs, ys) = (vertices(&g, rows)?, vertices(&g, cols)?);
    let poly = det_via_treks(&g, &xs, &ys)?;
    let systems = trek_systems(&g, &xs, &ys, false)?;
    let nsi = systems.iter().filter(|s| s.no_sided_intersection).count();
    let shown: Vec<Value> = systems
        .iter()
        .map(|s| {
            json!({
                "treks": s.treks.iter().map(|t| t.display(&g)).collect::<Vec<_>>(),
                "sign": s.sign,
                "no_sided_intersection": s.no_sided_intersection,
            })
        })
        .collect();
    let body = json!({
        "rows": rows,
        "cols": cols,
        "determinant": poly.display(&g),
        "identically_zero": poly.is_zero(),
        "systems": shown,
        "nsi_systems": nsi,
        "has_nsi_system": nsi > 0,
    });
    let mut text = String::new();
    let _ = writeln!(text, "det Sigma[{}; {}] = {}", rows.join(","), cols.join(","), poly.display(&g));
    let _ = writeln!(
        text,
        "trek systems: {} ({} without sided intersection)",
        systems.len(),
        nsi
    );
    for s in &systems {
        let treks: Vec<String> = s.treks.iter().map(|t| t.display(&g)).collect();
        let sign = if s.sign > 0 { '+' } else { '-' };
        let mark = if s.no_sided_intersection { "" } else { "  (sided intersection)" };
        let _ = writeln!(text, "  {sign} {}{mark}", treks.join(" | "));
    }
    Ok(Report::new("det", object(body), text, true))
}

pub fn separate(c: &Common, from: &str, to: &str, given: &[String]) -> Res {
    let g = load_graph(c)?;
    let (u, v) = (g.vertex(from)?, g.vertex(to)?);
    let a: VertexSet = vertices(&g, given)?.into_iter().collect();
    let walk = d_connected(&g, u, v, &a)?;
    let walk_text = walk.as_ref().map(|w| w.display(&g).to_string());
    let (top, negation) = if g.is_digraph() {
        let t = g.labels_of(&tops(&g, u, v, &a)?);
        let n: Vec<(String, String)> = negation_edge_set(&g, &a, u, v)?
            .into_iter()
            .map(|(x, y)| (g.label(x).to_string(), g.label(y).to_string()))
            .collect();
        (Some(t), Some(n))
    } else {
        (None, None)
    };
    let body = json!({
        "from": from,
        "to": to,
        "given": given,
        "d_connected": walk.is_some(),
        "walk": walk_text,
        "tops": top,
        "negation_edges": negation,
    });
    let mut text = String::new();
    let verb = if walk.is_some() { "d-connected" } else { "d-separated" };
    let _ = writeln!(text, "{from} and {to} are {verb} given {}", set_text(given));
    if let Some(w) = &walk_text {
        let _ = writeln!(text, "walk: {w}");
    }
    if let Some(t) = &top {
        let _ = writeln!(text, "tops: {}", set_text(t));
    }
    if let Some(n) = &negation {
        let shown: Vec<String> = n.iter().map(|(x, y)| format!("{x} -> {y}")).collect();
        let _ = writeln!(text, "negation edges: {}", set_text(&shown));
    }
    Ok(Report::new("separate", object(body), text, true))
}

pub fn membership(c: &Common, cov: &Path, max_cond: Option<usize>) -> Res {
    let g = load_graph(c)?;
    let s = read_cov_csv(&read(cov)?)?;
    let r = membership_chain(&g, &s, c.tol, &MembershipOptions { max_cond_size: max_cond })?;
    let mut text = format!(
        "member: {} ({} independences checked, {} violated)\n",
        yes_no(r.member),
        r.checked,
        r.violations.len()
    );
    for v in &r.violations {
        let _ = writeln!(text, "  {} _||_ {} | {}: partial covariance {:.3e}", v.u, v.v, set_text(&v.given), v.value);
    }
    Ok(Report::new("membership", object(json!({ "report": to_value(&r) })), text, r.member))
}

pub fn verify_equality(c: &Common, digraph: Option<&Path>) -> Res {
    let g = load_graph(c)?;
    let d = match digraph {
        Some(p) => MixedGraph::from_raw(&load_raw(p)?)?,
        None => clique_digraph(&g)?.0,
    };
    let r = verify_model_equality(&g, &d, c.trials, c.tol, c.seed)?;
    let mut text = String::new();
    for (name, trials, ok) in [
        ("digraph marginals in the mixed-graph model", &r.direction_one, r.direction_one_passed),
        ("mixed-graph points reproduced by the digraph", &r.direction_two, r.direction_two_passed),
    ] {
        let passed = trials.iter().filter(|t| t.passed).count();
        let worst = trials.iter().map(|t| t.residual).fold(0.0, f64::max);
        let _ = writeln!(
            text,
            "{name}: {passed}/{} trials passed, max residual {worst:.3e} [{}]",
            trials.len(),
            if ok { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(text, "equal: {}", yes_no(r.passed));
    let _ = writeln!(text, "note: {}", r.note);
    Ok(Report::new("verify-equality", object(json!({ "report": to_value(&r) })), text, r.passed))
}

pub fn negate_demo(c: &Common, p: usize) -> Res {
    let phi = find_sign_flip_counterexample(p)?;
    let lo = min_eigenvalue(&phi);
    let lo_flip = min_eigenvalue(&sign_flip(&phi));
    let labels: Vec<String> = (1..=p).map(|i| i.to_string()).collect();
    let cycle = MixedGraph::new(labels, Vec::new(), (0..p).map(|i| (i, (i + 1) % p)).collect::<Vec<_>>())?;
    let (d, _) = canonical_dag(&cycle)?;
    let order: Vec<Vertex> = cycle.labels().iter().map(|l| d.vertex(l)).collect::<chaincausal::Result<_>>()?;
    let a = VertexSet::new();
    let first = verify_determinant_identities(&d, &a, &order, &sample_params(&d, trial_seed(c.seed, 0), 1.0), c.tol)?;
    let summary = check_identities_sampled(&d, &a, &order, c.trials, c.seed, c.tol)?;
    let passed = summary.passed && lo > 0.0 && lo_flip < 0.0;
    let rows: Vec<Vec<f64>> = phi.row_iter().map(|r| r.iter().copied().collect()).collect();
    let body = json!({
        "p": p,
        "phi": rows,
        "phi_min_eigenvalue": lo,
        "phi_flipped_min_eigenvalue": lo_flip,
        "first_point": to_value(&first),
        "summary": to_value(&summary),
        "passed": passed,
    });
    let mut text = String::new();
    let _ = writeln!(text, "{p}-cycle sign flip: min eigenvalue {lo:.6} -> {lo_flip:.6}");
    for row in &rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>9.5}")).collect();
        let _ = writeln!(text, "  {}", cells.join(" "));
    }
    let shown: Vec<String> = summary.negated_edges.iter().map(|(x, y)| format!("{x} -> {y}")).collect();
    let _ = writeln!(text, "negated edges on the canonical DAG: {}", set_text(&shown));
    let _ = writeln!(
        text,
        "{} determinant checks per point over {} points: max error {:.3e}, flip error {:.3e}",
        first.checks.len(),
        summary.trials,
        summary.max_error,
        summary.flip_max_error
    );
    let _ = writeln!(text, "identities hold: {}", yes_no(summary.passed));
    Ok(Report::new("negate-demo", object(body), text, passed))
}

pub fn index(c: &Common, h_max: usize, budget: u64, prune: bool) -> Res {
    let g = load_graph(c)?;
    let opts = IndexOptions {
        h_max,
        budget,
        trials: c.trials,
        tol: c.tol,
        seed: c.seed,
        prune,
    };
    let b = causality_index_search(&g, &opts)?;
    let exact = b.exact();
    let body = json!({
        "lower": to_value(&b.lower),
        "upper": to_value(&b.upper),
        "exact": exact.map(|v| to_value(&v)),
        "witness": to_value(&b.witness),
        "levels": to_value(&b.levels),
        "budget_exceeded": b.budget_exceeded,
    });
    let mut text = String::new();
    match exact {
        Some(v) => {
            let _ = writeln!(text, "causality index: {v}");
        }
        None => {
            let _ = writeln!(text, "causality index between {} and {}", b.lower, b.upper);
        }
    }
    for l in &b.levels {
        let _ = writeln!(
            text,
            "  h = {}: {} candidates, {} passed screening, {} verified",
            l.hidden, l.candidates, l.screened, l.verified
        );
    }
    if b.witness.is_some() && b.levels.iter().all(|l| l.verified == 0) {
        let _ = writeln!(text, "  upper bound {} attained by the clique digraph", b.upper);
    }
    if b.budget_exceeded {
        let _ = writeln!(text, "search budget of {budget} candidates exhausted");
    }
    if let Some(w) = &b.witness {
        let _ = writeln!(text, "witness:\n{}", to_dot(&w.digraph, Some(&w.hidden)).trim_end());
    }
    let mut report = Report::new("index", object(body), text, exact != Some(IndexValue::Infinite));
    if exact.is_none() {
        report.exit_override = Some(3);
    }
    Ok(report)
}
