//! One function per experiment mode.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use domino::enumerate::{census_with, enumerate_tilings_with, ScanOrder};
use domino::heights::{height_change_bounds, HeightRecord};
use domino::lattice::{LatticeDomain, Square, Vertex};
use domino::render::{render_svg, Layer, Style};
use domino::sample::initial_tiling;
use domino::varsolve::{compare_to_empirical, CompareOptions, CompareReport};
use domino::{
    build_mesh, height_from_tiling, maximize, run_chain, sample_uniform, solve_slope_system, EmpiricalField, HeightError, MarkovState,
    Mesh, SampleConfig, Slope, SolveOptions, SolveReport, Tiling,
};
use serde::Serialize;

use crate::args::*;
use crate::domains::{read_json, BoundaryFile, DomainFile};
use crate::output::{float, Artifacts, Manifest, Table, MANIFEST};
use crate::CliError;

/// Seeds used and a few human-readable result lines.
#[derive(Debug, Default)]
struct Ran {
    seeds: Vec<u64>,
    lines: Vec<String>,
}

#[derive(Debug)]
pub struct Outcome {
    pub manifest: Manifest,
    pub lines: Vec<String>,
}

/// Runs one experiment, writing its artifacts and then the manifest.
pub fn run(exp: &Experiment) -> Result<Outcome, CliError> {
    let mut art = Artifacts::create(&exp.common().out)?;
    let ran = match exp {
        Experiment::Domain(a) => domain(a, &mut art)?,
        Experiment::Enumerate(a) => enumerate(a, &mut art)?,
        Experiment::Sample(a) => sample(a, &mut art)?,
        Experiment::Tension(a) => tension(a, &mut art)?,
        Experiment::Solve(a) => solve(a, &mut art)?,
        Experiment::Compare(a) => compare(a, &mut art)?,
        Experiment::Render(a) => render(a, &mut art)?,
    };
    let manifest = Manifest::new(exp, ran.seeds, &art);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let path = art.dir().join(MANIFEST);
    std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
    Ok(Outcome { manifest, lines: ran.lines })
}

/// Reruns the experiment of a manifest, optionally into another directory.
pub fn rerun(manifest: &Path, out: Option<PathBuf>) -> Result<Outcome, CliError> {
    let recorded: Manifest = read_json(manifest)?;
    let mut exp = recorded.config;
    if let Some(out) = out {
        exp.common_mut().out = out;
    }
    run(&exp)
}

fn sorted_dominoes(domain: &LatticeDomain, tiling: &Tiling) -> Vec<[Square; 2]> {
    let mut d: Vec<[Square; 2]> = tiling.dominoes(domain).into_iter().map(|[a, b]| if a <= b { [a, b] } else { [b, a] }).collect();
    d.sort();
    d
}

fn r_header(prefix: &str, genus: usize) -> Vec<String> {
    (1..=genus).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Serialize)]
struct DomainSummary {
    spec: String,
    squares: usize,
    black: usize,
    white: usize,
    genus: usize,
    monodromy: Vec<i64>,
    reference_points: Vec<Vertex>,
    boundary_lengths: Vec<usize>,
    tileable: bool,
    height_change_bounds: Option<Vec<(i64, i64)>>,
}

fn domain(a: &DomainArgs, art: &mut Artifacts) -> Result<Ran, CliError> {
    let d = a.domain.build()?;
    art.json("domain.json", &DomainFile::of(&d))?;
    let bounds = match height_change_bounds(&d) {
        Ok(b) => Some(b),
        Err(HeightError::NotTileable) => None,
        Err(e) => return Err(e.into()),
    };
    let (black, white) = d.black_white();
    let summary = DomainSummary {
        spec: a.domain.to_string(),
        squares: d.squares().len(),
        black,
        white,
        genus: d.genus(),
        monodromy: d.monodromy().0.clone(),
        reference_points: (0..=d.genus()).map(|i| d.reference_point(i)).collect(),
        boundary_lengths: d.boundary_components().iter().map(|c| c.vertex_cycle.len()).collect(),
        tileable: bounds.is_some(),
        height_change_bounds: bounds,
    };
    art.json("summary.json", &summary)?;
    Ok(Ran {
        seeds: vec![],
        lines: vec![format!(
            "{}: {} squares, genus {}, monodromy {:?}, tileable {}",
            summary.spec, summary.squares, summary.genus, summary.monodromy, summary.tileable
        )],
    })
}

#[derive(Serialize)]
struct EnumeratedTiling {
    dominoes: Vec<[Square; 2]>,
    height: HeightRecord,
}

#[derive(Serialize)]
struct CensusSummary {
    spec: String,
    total: u64,
    by_height_change: Vec<(Vec<i64>, u64)>,
}

fn enumerate(a: &EnumerateArgs, art: &mut Artifacts) -> Result<Ran, CliError> {
    let d = a.domain.build()?;
    let census = census_with(&d, a.cap)?;
    let mut header = r_header("R", d.genus());
    header.push("count".into());
    let mut table = Table::new(&header);
    for (r, &c) in &census.by_height_change {
        let mut row: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        row.push(c.to_string());
        table.row(&row);
    }
    art.write("census.csv", &table.into_string())?;
    art.json(
        "summary.json",
        &CensusSummary {
            spec: a.domain.to_string(),
            total: census.total,
            by_height_change: census.by_height_change.iter().map(|(r, &c)| (r.clone(), c)).collect(),
        },
    )?;
    if a.tilings {
        let mut all = Vec::new();
        for t in enumerate_tilings_with(&d, ScanOrder::ColumnMajor, a.cap)? {
            let h = height_from_tiling(&d, &t)?;
            all.push(EnumeratedTiling { dominoes: sorted_dominoes(&d, &t), height: h.record(&d) });
        }
        art.json("tilings.json", &all)?;
    }
    Ok(Ran {
        seeds: vec![],
        lines: vec![format!("{}: {} tilings in {} height-change classes", a.domain, census.total, census.by_height_change.len())],
    })
}

fn field_table(domain: &LatticeDomain, field: &EmpiricalField) -> Table {
    let mut table = Table::new(&["x", "y", "mean", "variance"]);
    let (mean, var) = (field.mean().unwrap_or_default(), field.variance().unwrap_or_default());
    for (i, v) in domain.vertices().iter().enumerate() {
        table.row(&[v.0.to_string(), v.1.to_string(), float(mean[i]), float(var[i])]);
    }
    table
}

fn histogram_table(genus: usize, histogram: &BTreeMap<Vec<i64>, u64>) -> Table {
    let mut header = r_header("R", genus);
    header.push("count".into());
    let mut table = Table::new(&header);
    for (r, &c) in histogram {
        let mut row: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        row.push(c.to_string());
        table.row(&row);
    }
    table
}

#[derive(Serialize)]
struct SampleSummary {
    spec: String,
    samples: u64,
    scale: f64,
    burn_in: u64,
    thinning: u64,
    mean_height_change: Option<Vec<f64>>,
}

fn sample(a: &SampleArgs, art: &mut Artifacts) -> Result<Ran, CliError> {
    let d = a.domain.build()?;
    let scale = a.scale.unwrap_or_else(|| a.domain.scale());
    let cfg =
        SampleConfig { n_samples: a.samples, burn_in: a.burnin, thinning: a.thin, seed: a.common.seed, fixed_r: a.fix_r.clone(), scale };
    let mut field = EmpiricalField::new(d.vertices().len(), scale);
    let mut snapshots: Vec<Vec<[Square; 2]>> = Vec::new();
    let mut k = 0u64;
    run_chain(&d, &cfg, |s| {
        field.record(s.heights(), s.height_change());
        k += 1;
        if a.snapshot_every.is_some_and(|e| e > 0 && k.is_multiple_of(e)) {
            snapshots.push(sorted_dominoes(&d, &s.tiling()));
        }
    })?;
    art.write("field.csv", &field_table(&d, &field).into_string())?;
    art.write("r_histogram.csv", &histogram_table(d.genus(), &field.r_histogram).into_string())?;
    if a.snapshot_every.is_some() {
        art.json("snapshots.json", &snapshots)?;
    }
    let squares = d.squares().len() as u64;
    let summary = SampleSummary {
        spec: a.domain.to_string(),
        samples: field.n_samples,
        scale,
        burn_in: a.burnin.unwrap_or_else(|| (scale * scale).ceil() as u64 * squares),
        thinning: a.thin.unwrap_or(squares),
        mean_height_change: field.mean_height_change(),
    };
    art.json("summary.json", &summary)?;
    Ok(Ran {
        seeds: vec![a.common.seed],
        lines: vec![format!(
            "{}: {} samples, mean height change {:?}",
            a.domain,
            summary.samples,
            summary.mean_height_change.unwrap_or_default()
        )],
    })
}

fn tension(a: &TensionArgs, art: &mut Artifacts) -> Result<Ran, CliError> {
    if a.grid == 0 {
        return Err(CliError::Input("grid must have at least one point".into()));
    }
    let mut table = Table::new(&["s", "t", "p_a", "p_b", "p_c", "p_d", "sigma"]);
    let coord = |i: usize| if a.grid == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (a.grid - 1) as f64 };
    // (u, v) ∈ [−1, 1]² covers 𝒩 through s = u + v, t = u − v.
    for i in 0..a.grid {
        for j in 0..a.grid {
            let (u, v) = (coord(i), coord(j));
            let st = solve_slope_system(Slope::new(u + v, u - v)?)?;
            let mut row = vec![float(st.slope.s), float(st.slope.t)];
            row.extend(st.p.iter().map(|&p| float(p)));
            row.push(float(st.sigma));
            table.row(&row);
        }
    }
    art.write("tension.csv", &table.into_string())?;
    Ok(Ran { seeds: vec![], lines: vec![format!("tension on a {0}x{0} grid", a.grid)] })
}

#[derive(Serialize)]
struct SolveSummary {
    problem: String,
    spacing: f64,
    vertices: usize,
    triangles: usize,
    objective: f64,
    area: f64,
    r_star: Vec<f64>,
    monodromy: Vec<f64>,
    iterations: usize,
    residual: f64,
    duality_gap: f64,
    frozen_fraction: f64,
}

fn solve_problem(a: &SolveArgs) -> Result<(String, Mesh, SolveReport), CliError> {
    let (name, cont, data) = match (&a.problem, &a.domain, &a.boundary) {
        (Some(p), _, _) => {
            let p = p.build();
            (p.name, p.domain, p.data)
        }
        (None, Some(dom), Some(bnd)) => {
            let cont: domino::ContinuumDomain = read_json(dom)?;
            let data = read_json::<BoundaryFile>(bnd)?.build(&cont)?;
            (dom.display().to_string(), cont, data)
        }
        _ => return Err(CliError::Input("solve needs --problem or both --domain and --boundary".into())),
    };
    let mesh = build_mesh(&cont, a.mesh)?;
    let opts = SolveOptions { fixed_r: a.fix_r.clone(), max_iterations: a.max_iterations, ..SolveOptions::default() };
    let report = maximize(&mesh, &data, &opts)?;
    Ok((name, mesh, report))
}

fn solve(a: &SolveArgs, art: &mut Artifacts) -> Result<Ran, CliError> {
    let (name, mesh, report) = solve_problem(a)?;
    let mut h = Table::new(&["x", "y", "value"]);
    for (p, &v) in mesh.vertices.iter().zip(&report.h_star.values) {
        h.row(&[float(p[0]), float(p[1]), float(v)]);
    }
    art.write("h_star.csv", &h.into_string())?;
    let mut frozen = Table::new(&["triangle", "x", "y", "frozen"]);
    for (t, &f) in report.frozen_mask.iter().enumerate() {
        let c = mesh.centroid(t);
        frozen.row(&[t.to_string(), float(c[0]), float(c[1]), u8::from(f).to_string()]);
    }
    art.write("frozen.csv", &frozen.into_string())?;
    let summary = SolveSummary {
        problem: name,
        spacing: mesh.spacing,
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        objective: report.objective,
        area: report.area,
        r_star: report.r_star.clone(),
        monodromy: report.h_star.monodromy.clone(),
        iterations: report.iterations,
        residual: report.residual,
        duality_gap: report.duality_gap,
        frozen_fraction: report.frozen_fraction(),
    };
    art.json("report.json", &summary)?;
    Ok(Ran {
        seeds: vec![],
        lines: vec![format!(
            "{}: objective {:.10}, r* {:?}, {} iterations, frozen fraction {:.4}",
            summary.problem, summary.objective, summary.r_star, summary.iterations, summary.frozen_fraction
        )],
    })
}

#[derive(Serialize)]
struct CompareRow {
    n: u32,
    seed: u64,
    samples: u64,
    #[serde(flatten)]
    report: CompareReport,
}

#[derive(Serialize)]
struct CompareSummary {
    family: String,
    objective: f64,
    r_star: Vec<f64>,
    rows: Vec<CompareRow>,
}

/// Burn-in of the compare pipeline in units of `N²` sweeps; the chain
/// relaxes diffusively from the maximal tiling.
pub const COMPARE_BURN_IN_SWEEPS: u64 = 64;
/// Thinning of the compare pipeline is `N² / COMPARE_THIN_DIVISOR` sweeps.
pub const COMPARE_THIN_DIVISOR: u64 = 4;

fn compare(a: &CompareArgs, art: &mut Artifacts) -> Result<Ran, CliError> {
    let problem = a.family.problem();
    let solve_args = SolveArgs {
        problem: Some(problem.clone()),
        domain: None,
        boundary: None,
        fix_r: None,
        mesh: a.mesh,
        max_iterations: SolveOptions::default().max_iterations,
        common: a.common.clone(),
    };
    let (_, mesh, report) = solve_problem(&solve_args)?;
    let genus = mesh.genus();
    let mut header: Vec<String> = ["n", "samples", "sup", "l2", "points", "excluded"].map(String::from).to_vec();
    header.extend(r_header("r_distance_", genus));
    let mut table = Table::new(&header);
    let mut rows = Vec::new();
    let mut ran = Ran::default();
    for (k, &n) in a.sizes.iter().enumerate() {
        let spec = a.family.domain(n);
        let d = spec.build()?;
        let seed = a.common.seed.wrapping_add(k as u64);
        let sweep = d.squares().len() as u64;
        let n2 = u64::from(n) * u64::from(n);
        let cfg = SampleConfig {
            n_samples: a.samples,
            burn_in: Some(a.burnin.unwrap_or(COMPARE_BURN_IN_SWEEPS * n2 * sweep)),
            thinning: Some(a.thin.unwrap_or((n2 / COMPARE_THIN_DIVISOR).max(1) * sweep)),
            seed,
            fixed_r: None,
            scale: n as f64,
        };
        let field = sample_uniform(&d, &cfg)?;
        let cmp = compare_to_empirical(&mesh, &report, &field, &d, CompareOptions { position_scale: 1.0 / n as f64, band: a.band })?;
        let mut row = vec![
            n.to_string(),
            field.n_samples.to_string(),
            float(cmp.sup),
            float(cmp.l2),
            cmp.points.to_string(),
            cmp.excluded.to_string(),
        ];
        row.extend(cmp.r_distance.iter().map(|&x| float(x)));
        table.row(&row);
        ran.lines.push(format!("N = {n}: sup {:.4}, l2 {:.4}, r distance {:?}", cmp.sup, cmp.l2, cmp.r_distance));
        ran.seeds.push(seed);
        rows.push(CompareRow { n, seed, samples: field.n_samples, report: cmp });
    }
    art.write("compare.csv", &table.into_string())?;
    art.json("summary.json", &CompareSummary { family: problem.to_string(), objective: report.objective, r_star: report.r_star, rows })?;
    Ok(ran)
}

fn render(a: &RenderArgs, art: &mut Artifacts) -> Result<Ran, CliError> {
    let d = a.domain.build()?;
    let style = Style { scale: a.pixels, ..Style::default() };
    let scale = a.domain.scale();
    let seed = a.common.seed;
    let mut ran = Ran { seeds: vec![seed], lines: vec![] };

    let start = initial_tiling(&d, None)?;
    let mut state = MarkovState::new(&d, &start, seed, true)?;
    let steps = a.steps.unwrap_or_else(|| (scale * scale).ceil() as u64 * d.squares().len() as u64);
    state.run(steps)?;
    let tiling = state.tiling();
    art.write("tiling.svg", &render_svg(&[Layer::Tiling { domain: &d, tiling: &tiling }], &style))?;
    ran.lines.push(format!("{}: tiling after {steps} proposals", a.domain));

    if a.mean_samples > 0 {
        let mut cfg = SampleConfig::new(a.mean_samples, seed.wrapping_add(1));
        cfg.scale = scale;
        let field = sample_uniform(&d, &cfg)?;
        let mean = field.mean().unwrap_or_default();
        art.write("mean.svg", &render_svg(&[Layer::LatticeField { domain: &d, values: &mean }], &style))?;
        ran.seeds.push(cfg.seed);
        ran.lines.push(format!("mean height over {} samples", field.n_samples));
    }
    if let Some(p) = &a.problem {
        let solve_args = SolveArgs {
            problem: Some(p.clone()),
            domain: None,
            boundary: None,
            fix_r: None,
            mesh: a.mesh,
            max_iterations: SolveOptions::default().max_iterations,
            common: a.common.clone(),
        };
        let (_, mesh, report) = solve_problem(&solve_args)?;
        let layer = Layer::MeshField { mesh: &mesh, values: &report.h_star.values, continuum_scale: scale };
        art.write("h_star.svg", &render_svg(&[layer], &style))?;
        ran.lines.push(format!("limit shape of {p}, objective {:.10}", report.objective));
    }
    Ok(ran)
}
