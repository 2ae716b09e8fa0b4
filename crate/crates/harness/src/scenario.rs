//! JSON scenario format.
//!
//! ```json
//! {
//!   "domain": {"lx": 1.0, "ly": 1.0},
//!   "grid": {"n": 19},
//!   "fracture": [{"x1": 0.15, "y1": 0.63, "x2": 0.45, "y2": 0.09,
//!                 "aperture": 1e-4, "k_tau": 1e4, "k_n": 1e4}],
//!   "matrix": {"kx": 1.0, "ky": 1.0, "phi": 0.2},
//!   "fluid": {"mu": 1.0},
//!   "bc": {"bottom": {"type": "pressure", "value": 1.0},
//!          "top":    {"type": "pressure", "value": 0.0},
//!          "left":   {"type": "flux", "value": 0.0},
//!          "right":  {"type": "flux", "value": 0.0}},
//!   "method": "ledfm",
//!   "fine": {"h_fine": 0.03125},
//!   "transport": {"enabled": false, "c_d": 1.0, "t_end": 1.0, "steps": 10}
//! }
//! ```
//!
//! `fine`, `transport`, `sources` (point injections `{x, y, rate}`) and
//! `reference` (`{kind: "dfm" | "equidim", n}`) are optional. Flux values are
//! outward flux densities. The grid has `n` cells along x and square cells.

use std::path::Path;

use fracflow_core::model::{DomainBoundary, Method, PedfmVariant, SideCondition};
use fracflow_core::{CoarseGrid, FractureSegment, Point};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub domain: DomainSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub fracture: Vec<FractureSpec>,
    pub matrix: MatrixSpec,
    pub fluid: FluidSpec,
    pub bc: BcSpec,
    pub method: MethodName,
    #[serde(default)]
    pub fine: FineSpec,
    #[serde(default)]
    pub transport: TransportSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<PointSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractureSpec {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub aperture: f64,
    pub k_tau: f64,
    pub k_n: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub kx: f64,
    pub ky: f64,
    pub phi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSpec {
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideKind {
    Pressure,
    Flux,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideSpec {
    #[serde(rename = "type")]
    pub kind: SideKind,
    pub value: f64,
}

impl SideSpec {
    pub fn pressure(value: f64) -> Self {
        Self {
            kind: SideKind::Pressure,
            value,
        }
    }

    pub fn no_flow() -> Self {
        Self {
            kind: SideKind::Flux,
            value: 0.0,
        }
    }

    fn condition(self) -> SideCondition {
        match self.kind {
            SideKind::Pressure => SideCondition::Pressure(self.value),
            SideKind::Flux => SideCondition::Flux(self.value),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSpec {
    pub bottom: SideSpec,
    pub top: SideSpec,
    pub left: SideSpec,
    pub right: SideSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Edfm,
    PedfmLegacy,
    PedfmUpdated,
    Ledfm,
    LedfmMsfv,
    DfmConforming,
    ReferenceEquidim,
}

impl MethodName {
    pub const ALL: [MethodName; 7] = [
        MethodName::Edfm,
        MethodName::PedfmLegacy,
        MethodName::PedfmUpdated,
        MethodName::Ledfm,
        MethodName::LedfmMsfv,
        MethodName::DfmConforming,
        MethodName::ReferenceEquidim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Edfm => "edfm",
            MethodName::PedfmLegacy => "pedfm-legacy",
            MethodName::PedfmUpdated => "pedfm-updated",
            MethodName::Ledfm => "ledfm",
            MethodName::LedfmMsfv => "ledfm-msfv",
            MethodName::DfmConforming => "dfm-conforming",
            MethodName::ReferenceEquidim => "reference-equidim",
        }
    }

    /// The coarse embedded method, if this is one.
    pub fn embedded(self) -> Option<Method> {
        match self {
            MethodName::Edfm => Some(Method::Edfm),
            MethodName::PedfmLegacy => Some(Method::Pedfm(PedfmVariant::Legacy)),
            MethodName::PedfmUpdated => Some(Method::Pedfm(PedfmVariant::Updated)),
            MethodName::Ledfm => Some(Method::Ledfm),
            MethodName::LedfmMsfv => Some(Method::LedfmMsfv),
            MethodName::DfmConforming | MethodName::ReferenceEquidim => None,
        }
    }
}

impl std::str::FromStr for MethodName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        MethodName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::Validation(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for MethodName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FineSpec {
    pub h_fine: f64,
}

impl Default for FineSpec {
    fn default() -> Self {
        Self {
            h_fine: 1.0 / 32.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSpec {
    pub enabled: bool,
    pub c_d: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl Default for TransportSpec {
    fn default() -> Self {
        Self {
            enabled: false,
            c_d: 1.0,
            t_end: 1.0,
            steps: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSource {
    pub x: f64,
    pub y: f64,
    pub rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    /// Fine conforming triangulation with lower-dimensional fractures.
    Dfm,
    /// Graded tensor grid with the fracture as an explicit layer.
    Equidim,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub kind: ReferenceKind,
    /// Reference cells per unit length along x.
    pub n: usize,
}

impl Scenario {
    /// Parses and validates a scenario; errors carry the line/column or field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
            HarnessError::Validation(format!("line {}, column {}: {msg}", e.line(), e.column()))
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Validation(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Validation(m) => {
                HarnessError::Validation(format!("{}: {m}", path.display()))
            }
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name}: must be positive, got {v}"));
            }
        };
        positive("domain.lx", self.domain.lx);
        positive("domain.ly", self.domain.ly);
        positive("matrix.kx", self.matrix.kx);
        positive("matrix.ky", self.matrix.ky);
        positive("matrix.phi", self.matrix.phi);
        positive("fluid.mu", self.fluid.mu);
        positive("fine.h_fine", self.fine.h_fine);
        for (i, f) in self.fracture.iter().enumerate() {
            positive(&format!("fracture[{i}].aperture"), f.aperture);
            positive(&format!("fracture[{i}].k_tau"), f.k_tau);
            positive(&format!("fracture[{i}].k_n"), f.k_n);
        }
        if self.transport.enabled {
            positive("transport.c_d", self.transport.c_d);
            positive("transport.t_end", self.transport.t_end);
        }
        if self.grid.n == 0 {
            errs.push("grid.n: must be at least 1".into());
        }
        if self.fine.h_fine >= 1.0 {
            errs.push(format!(
                "fine.h_fine: must be below 1, got {}",
                self.fine.h_fine
            ));
        }
        if self.transport.enabled && self.transport.steps == 0 {
            errs.push("transport.steps: must be at least 1".into());
        }
        let inside = |x: f64, y: f64| {
            (0.0..=self.domain.lx).contains(&x) && (0.0..=self.domain.ly).contains(&y)
        };
        for (i, f) in self.fracture.iter().enumerate() {
            if !inside(f.x1, f.y1) || !inside(f.x2, f.y2) {
                errs.push(format!("fracture[{i}]: endpoints must lie in the domain"));
            }
            if f.x1 == f.x2 && f.y1 == f.y2 {
                errs.push(format!("fracture[{i}]: endpoints coincide"));
            }
        }
        for (i, s) in self.sources.iter().enumerate() {
            if !inside(s.x, s.y) {
                errs.push(format!("sources[{i}]: point must lie in the domain"));
            }
        }
        for (name, side) in [
            ("bc.bottom", self.bc.bottom),
            ("bc.top", self.bc.top),
            ("bc.left", self.bc.left),
            ("bc.right", self.bc.right),
        ] {
            if !side.value.is_finite() {
                errs.push(format!("{name}.value: must be finite"));
            }
        }
        if let Some(r) = self.reference {
            if r.n < 2 {
                errs.push("reference.n: must be at least 2".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Validation(errs.join("; ")))
        }
    }

    /// Cells along y so that cells stay square.
    pub fn ny_for(&self, n: usize) -> usize {
        ((n as f64 * self.domain.ly / self.domain.lx).round() as usize).max(1)
    }

    pub fn coarse_grid(&self, n: usize) -> Result<CoarseGrid> {
        Ok(CoarseGrid::uniform(
            n,
            self.ny_for(n),
            self.domain.lx,
            self.domain.ly,
            self.matrix.kx,
            self.matrix.ky,
            self.matrix.phi,
        )?)
    }

    pub fn fractures(&self) -> Result<Vec<FractureSegment>> {
        self.fracture
            .iter()
            .map(|f| {
                Ok(FractureSegment::new(
                    Point::new(f.x1, f.y1),
                    Point::new(f.x2, f.y2),
                    f.aperture,
                    f.k_tau,
                    f.k_n,
                )?)
            })
            .collect()
    }

    pub fn boundary(&self) -> DomainBoundary {
        DomainBoundary {
            left: self.bc.left.condition(),
            right: self.bc.right.condition(),
            bottom: self.bc.bottom.condition(),
            top: self.bc.top.condition(),
        }
    }

    /// Spread of the prescribed boundary pressures (1 if fewer than two are given).
    pub fn pressure_drop(&self) -> f64 {
        let p: Vec<f64> = [self.bc.bottom, self.bc.top, self.bc.left, self.bc.right]
            .iter()
            .filter(|s| s.kind == SideKind::Pressure)
            .map(|s| s.value)
            .collect();
        let spread = p.iter().cloned().fold(f64::MIN, f64::max)
            - p.iter().cloned().fold(f64::MAX, f64::min);
        if p.len() >= 2 && spread > 0.0 {
            spread
        } else {
            1.0
        }
    }

    pub fn with_method(&self, method: MethodName) -> Self {
        Self {
            method,
            ..self.clone()
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self {
            grid: GridSpec { n },
            ..self.clone()
        }
    }
}

/// Benchmark setups, on the unit square with bottom-to-top drive unless noted.
pub mod presets {
    use super::*;

    fn unit_square(fracture: FractureSpec, method: MethodName, n: usize) -> Scenario {
        Scenario {
            domain: DomainSpec { lx: 1.0, ly: 1.0 },
            grid: GridSpec { n },
            fracture: vec![fracture],
            matrix: MatrixSpec {
                kx: 1.0,
                ky: 1.0,
                phi: 0.2,
            },
            fluid: FluidSpec { mu: 1.0 },
            bc: BcSpec {
                bottom: SideSpec::pressure(1.0),
                top: SideSpec::pressure(0.0),
                left: SideSpec::no_flow(),
                right: SideSpec::no_flow(),
            },
            method,
            fine: FineSpec::default(),
            transport: TransportSpec::default(),
            sources: Vec::new(),
            reference: None,
        }
    }

    fn oblique(r_k: f64) -> FractureSpec {
        FractureSpec {
            x1: 0.15,
            y1: 0.63,
            x2: 0.45,
            y2: 0.09,
            aperture: 1e-4,
            k_tau: r_k,
            k_n: r_k,
        }
    }

    /// Permeable oblique fracture.
    pub fn test1(r_k: f64, method: MethodName, n: usize) -> Scenario {
        unit_square(oblique(r_k), method, n)
    }

    /// Impermeable horizontal fracture.
    pub fn test2(r_k: f64, method: MethodName, n: usize) -> Scenario {
        unit_square(
            FractureSpec {
                x1: 0.25,
                y1: 0.5,
                x2: 0.75,
                y2: 0.5,
                aperture: 1e-4,
                k_tau: r_k,
                k_n: r_k,
            },
            method,
            n,
        )
    }

    /// Impermeable oblique fracture.
    pub fn test3(r_k: f64, method: MethodName, n: usize) -> Scenario {
        unit_square(oblique(r_k), method, n)
    }

    /// Tracer setup: 100 m square, diagonal conductive fracture, 51×51 grid.
    pub fn tracer(method: MethodName) -> Scenario {
        Scenario {
            domain: DomainSpec { lx: 100.0, ly: 100.0 },
            grid: GridSpec { n: 51 },
            fracture: vec![FractureSpec {
                x1: 25.0,
                y1: 24.0,
                x2: 75.0,
                y2: 74.0,
                aperture: 1e-2,
                k_tau: 1e-9,
                k_n: 1e-9,
            }],
            matrix: MatrixSpec {
                kx: 1e-13,
                ky: 1e-13,
                phi: 0.15,
            },
            fluid: FluidSpec { mu: 2.8e-4 },
            bc: BcSpec {
                bottom: SideSpec::pressure(1.1e6),
                top: SideSpec::pressure(1e6),
                left: SideSpec::no_flow(),
                right: SideSpec::no_flow(),
            },
            method,
            fine: FineSpec::default(),
            transport: TransportSpec {
                enabled: true,
                c_d: 5.8e-5,
                t_end: 5e7,
                steps: 100,
            },
            sources: Vec::new(),
            reference: None,
        }
    }
}
