//! Domain and problem specifications and their file formats.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use domino::lattice::{LatticeDomain, Square, Vertex};
use domino::shapes;
use domino::varsolve::problems::{self, CutSide, Problem};
use domino::varsolve::{BoundaryData, ContinuumDomain};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A lattice domain, by generator or file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DomainSpec {
    Aztec(i32),
    ModifiedAztec { n: i32, defect: Option<i32> },
    Annulus { outer: i32, inner: i32 },
    Rectangle { width: i32, height: i32 },
    File(PathBuf),
}

fn ints(parts: &[&str]) -> Result<Vec<i32>, String> {
    parts.iter().map(|p| p.parse::<i32>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

impl FromStr for DomainSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let args = || ints(&parts[1..]);
        let spec = match parts[0] {
            "aztec" => match args()?[..] {
                [n] => DomainSpec::Aztec(n),
                _ => return Err("expected aztec:N".into()),
            },
            "modified-aztec" | "modified_aztec" => match args()?[..] {
                [n] => DomainSpec::ModifiedAztec { n, defect: None },
                [n, d] => DomainSpec::ModifiedAztec { n, defect: Some(d) },
                _ => return Err("expected modified-aztec:N[:DEFECT]".into()),
            },
            "annulus" => match args()?[..] {
                [outer, inner] => DomainSpec::Annulus { outer, inner },
                _ => return Err("expected annulus:OUTER:INNER".into()),
            },
            "rect" => match args()?[..] {
                [width, height] => DomainSpec::Rectangle { width, height },
                _ => return Err("expected rect:W:H".into()),
            },
            _ if parts.len() == 1 || Path::new(s).exists() => DomainSpec::File(PathBuf::from(s)),
            kind => return Err(format!("unknown domain kind {kind:?}")),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for DomainSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Aztec(n) => write!(f, "aztec:{n}"),
            DomainSpec::ModifiedAztec { n, defect: None } => write!(f, "modified-aztec:{n}"),
            DomainSpec::ModifiedAztec { n, defect: Some(d) } => write!(f, "modified-aztec:{n}:{d}"),
            DomainSpec::Annulus { outer, inner } => write!(f, "annulus:{outer}:{inner}"),
            DomainSpec::Rectangle { width, height } => write!(f, "rect:{width}:{height}"),
            DomainSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl From<DomainSpec> for String {
    fn from(d: DomainSpec) -> String {
        d.to_string()
    }
}

impl DomainSpec {
    pub fn build(&self) -> Result<LatticeDomain, CliError> {
        Ok(match *self {
            DomainSpec::Aztec(n) => shapes::aztec(n)?,
            DomainSpec::ModifiedAztec { n, defect } => shapes::modified_aztec(n, defect)?,
            DomainSpec::Annulus { outer, inner } => shapes::annulus(outer, inner)?,
            DomainSpec::Rectangle { width, height } => shapes::rectangle(width, height)?,
            DomainSpec::File(ref p) => read_json::<DomainFile>(p)?.build()?,
        })
    }

    /// Length that maps the domain to unit size in the continuum.
    pub fn scale(&self) -> f64 {
        match *self {
            DomainSpec::Aztec(n) | DomainSpec::ModifiedAztec { n, .. } => n as f64,
            DomainSpec::Annulus { outer, .. } => outer as f64 / 2.0,
            DomainSpec::Rectangle { width, height } => width.max(height) as f64,
            DomainSpec::File(_) => 1.0,
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Serialized lattice domain: sorted squares and optionally the cut system
/// as edge lists in vertex form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainFile {
    pub squares: Vec<Square>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Vec<Vec<[Vertex; 2]>>>,
}

impl DomainFile {
    pub fn of(domain: &LatticeDomain) -> Self {
        let mut squares = domain.squares().to_vec();
        squares.sort();
        DomainFile { squares, cuts: Some(domain.cuts().edge_lists(domain)) }
    }

    pub fn build(&self) -> Result<LatticeDomain, CliError> {
        let domain = LatticeDomain::new(self.squares.iter().copied())?;
        Ok(match &self.cuts {
            Some(c) => domain.with_cuts(c)?,
            None => domain,
        })
    }
}

/// A built-in continuum problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProblemSpec {
    UnitSquare,
    Aztec,
    Annulus { monodromy: f64, north: bool },
    ModifiedAztec,
}

impl FromStr for ProblemSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        Ok(match parts[..] {
            ["unit-square"] => ProblemSpec::UnitSquare,
            ["aztec"] => ProblemSpec::Aztec,
            ["modified-aztec"] | ["modified_aztec"] => ProblemSpec::ModifiedAztec,
            ["annulus", ref rest @ ..] if rest.len() <= 2 => {
                let monodromy = match rest.first() {
                    Some(m) => m.parse().map_err(|e| format!("{m:?}: {e}"))?,
                    None => 0.0,
                };
                let north = match rest.get(1) {
                    None | Some(&"west") => false,
                    Some(&"north") => true,
                    Some(other) => return Err(format!("unknown cut side {other:?}")),
                };
                ProblemSpec::Annulus { monodromy, north }
            }
            _ => return Err(format!("unknown problem {s:?}")),
        })
    }
}

impl TryFrom<String> for ProblemSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::UnitSquare => write!(f, "unit-square"),
            ProblemSpec::Aztec => write!(f, "aztec"),
            ProblemSpec::ModifiedAztec => write!(f, "modified-aztec"),
            ProblemSpec::Annulus { monodromy, north } => {
                write!(f, "annulus:{monodromy}:{}", if *north { "north" } else { "west" })
            }
        }
    }
}

impl From<ProblemSpec> for String {
    fn from(p: ProblemSpec) -> String {
        p.to_string()
    }
}

impl ProblemSpec {
    pub fn build(&self) -> Problem {
        match *self {
            ProblemSpec::UnitSquare => problems::unit_square(),
            ProblemSpec::Aztec => problems::aztec_diamond(),
            ProblemSpec::ModifiedAztec => problems::modified_aztec(),
            ProblemSpec::Annulus { monodromy, north } => {
                problems::square_annulus(monodromy, if north { CutSide::North } else { CutSide::West })
            }
        }
    }
}

/// Boundary data file: the value of `ψ_i` at each polygon vertex of
/// component `i` (outer first), linear along the sides, plus the monodromy
/// and one winding centre per hole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFile {
    pub components: Vec<Vec<f64>>,
    #[serde(default)]
    pub monodromy: Vec<f64>,
    #[serde(default)]
    pub centers: Vec<[f64; 2]>,
}

/// Linear interpolation of vertex values along the nearest polygon side.
fn polygon_profile(poly: Vec<[f64; 2]>, values: Vec<f64>) -> impl Fn([f64; 2]) -> f64 + Send + Sync {
    move |p: [f64; 2]| {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let s = if len2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let q = [a[0] + s * d[0], a[1] + s * d[1]];
            let dist = (p[0] - q[0]).hypot(p[1] - q[1]);
            if dist < best.0 {
                best = (dist, values[i] + s * (values[(i + 1) % poly.len()] - values[i]));
            }
        }
        best.1
    }
}

impl BoundaryFile {
    pub fn build(self, domain: &ContinuumDomain) -> Result<BoundaryData, CliError> {
        let polys: Vec<&Vec<[f64; 2]>> = std::iter::once(&domain.outer).chain(&domain.holes).collect();
        if self.components.len() != polys.len() {
            return Err(CliError::Input(format!("{} boundary components for a domain with {}", self.components.len(), polys.len())));
        }
        let mut shapes = Vec::with_capacity(polys.len());
        for (i, (poly, values)) in polys.into_iter().zip(self.components).enumerate() {
            if values.len() != poly.len() {
                return Err(CliError::Input(format!("component {i}: {} values for {} polygon vertices", values.len(), poly.len())));
            }
            shapes.push(Arc::new(polygon_profile(poly.clone(), values)) as domino::varsolve::Shape);
        }
        Ok(BoundaryData { shapes, monodromy: self.monodromy, centers: self.centers })
    }
}

/// Lattice families with a matching continuum problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Aztec,
    ModifiedAztec,
}

impl Family {
    pub fn domain(self, n: u32) -> DomainSpec {
        match self {
            Family::Aztec => DomainSpec::Aztec(n as i32),
            Family::ModifiedAztec => DomainSpec::ModifiedAztec { n: n as i32, defect: None },
        }
    }

    pub fn problem(self) -> ProblemSpec {
        match self {
            Family::Aztec => ProblemSpec::Aztec,
            Family::ModifiedAztec => ProblemSpec::ModifiedAztec,
        }
    }
}
