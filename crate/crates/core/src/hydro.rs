//! Fluid environment, tail geometry and the hydrodynamic surrogate.
//!
//! Propulsive thrust is not resolved from the fluid–structure interaction of the
//! tail. Instead a [`ThrustMap`] stores the *mean* thrust at calibrated
//! (tail, frequency, duty) points, obtained by balancing the longitudinal drag at
//! the measured steady swimming speed. Between knots the map interpolates
//! bilinearly over tail length and frequency; thrust scales linearly with duty.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::dynamics::{RobotState, Wrench};
use crate::error::{domain, Error, Result};

/// Film used for the tails: 25 µm fluoropolymer.
pub const TAIL_FILM_THICKNESS_M: f64 = 25e-6;
/// Bulk density of the tail film (FEP class fluoropolymer).
pub const TAIL_FILM_DENSITY_KG_M3: f64 = 2150.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidEnvironment {
    /// kg·m⁻³
    pub density: f64,
    /// Pa·s
    pub dynamic_viscosity: f64,
    /// °C, informational only.
    pub temperature_c: f64,
}

impl FluidEnvironment {
    pub fn new(density: f64, dynamic_viscosity: f64, temperature_c: f64) -> Result<Self> {
        let env = Self {
            density,
            dynamic_viscosity,
            temperature_c,
        };
        env.validate()?;
        Ok(env)
    }

    /// Fresh water at 20 °C.
    pub fn water_20c() -> Self {
        Self {
            density: 998.2,
            dynamic_viscosity: 1.002e-3,
            temperature_c: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(domain(format!("fluid density must be > 0, got {}", self.density)));
        }
        if !(self.dynamic_viscosity > 0.0 && self.dynamic_viscosity.is_finite()) {
            return Err(domain(format!(
                "dynamic viscosity must be > 0, got {}",
                self.dynamic_viscosity
            )));
        }
        Ok(())
    }
}

impl Default for FluidEnvironment {
    fn default() -> Self {
        Self::water_20c()
    }
}

/// Reynolds number `l·v·ρ/μ` of a swimmer of overall length `length` (tail
/// included) moving at `speed`.
pub fn reynolds_number(length: f64, speed: f64, env: &FluidEnvironment) -> Result<f64> {
    if !(length > 0.0) {
        return Err(domain(format!("swimmer length must be > 0, got {length}")));
    }
    if !(speed >= 0.0) {
        return Err(domain(format!("speed must be >= 0, got {speed}")));
    }
    Ok(length * speed * env.density / env.dynamic_viscosity)
}

/// Height of a parabolic tail with the given length and aspect ratio `h²/A`.
///
/// The outline is a parabolic segment of chord `h` and depth `l`, so
/// `A = (2/3)·l·h` and the aspect ratio reduces to `3h/(2l)`.
pub fn parabolic_height(length: f64, aspect_ratio: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(domain(format!("tail length must be > 0, got {length}")));
    }
    if !(aspect_ratio > 0.0) {
        return Err(domain(format!("aspect ratio must be > 0, got {aspect_ratio}")));
    }
    Ok(2.0 / 3.0 * aspect_ratio * length)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailFamily {
    Parabolic,
    Rectangular,
}

impl TailFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            TailFamily::Parabolic => "parabolic",
            TailFamily::Rectangular => "rectangular",
        }
    }
}

impl std::str::FromStr for TailFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parabolic" => Ok(TailFamily::Parabolic),
            "rectangular" => Ok(TailFamily::Rectangular),
            other => Err(Error::Config(format!("unknown tail family '{other}'"))),
        }
    }
}

/// Planform of a propulsor tail. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum TailGeometry {
    Parabolic { length: f64, aspect_ratio: f64 },
    Rectangular { length: f64, height: f64 },
}

impl TailGeometry {
    pub fn parabolic(length: f64, aspect_ratio: f64) -> Result<Self> {
        let tail = TailGeometry::Parabolic {
            length,
            aspect_ratio,
        };
        tail.validate()?;
        Ok(tail)
    }

    pub fn rectangular(length: f64, height: f64) -> Result<Self> {
        let tail = TailGeometry::Rectangular { length, height };
        tail.validate()?;
        Ok(tail)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TailGeometry::Parabolic {
                length,
                aspect_ratio,
            } => parabolic_height(length, aspect_ratio).map(|_| ()),
            TailGeometry::Rectangular { length, height } => {
                if !(length > 0.0 && height > 0.0) {
                    return Err(domain(format!(
                        "rectangular tail needs positive length and height, got {length} x {height}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn family(&self) -> TailFamily {
        match self {
            TailGeometry::Parabolic { .. } => TailFamily::Parabolic,
            TailGeometry::Rectangular { .. } => TailFamily::Rectangular,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            TailGeometry::Parabolic { length, .. } | TailGeometry::Rectangular { length, .. } => {
                length
            }
        }
    }

    pub fn height(&self) -> f64 {
        match *self {
            TailGeometry::Parabolic {
                length,
                aspect_ratio,
            } => 2.0 / 3.0 * aspect_ratio * length,
            TailGeometry::Rectangular { height, .. } => height,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            TailGeometry::Parabolic { length, .. } => 2.0 / 3.0 * length * self.height(),
            TailGeometry::Rectangular { length, height } => length * height,
        }
    }

    pub fn aspect_ratio(&self) -> f64 {
        let h = self.height();
        h * h / self.area()
    }

    /// Film mass for an areal density in kg·m⁻².
    pub fn mass(&self, areal_density: f64) -> f64 {
        self.area() * areal_density
    }

    /// Mass with the default 25 µm film.
    pub fn film_mass(&self) -> f64 {
        self.mass(TAIL_FILM_THICKNESS_M * TAIL_FILM_DENSITY_KG_M3)
    }

    fn family_key(&self) -> FamilyKey {
        match *self {
            TailGeometry::Parabolic { aspect_ratio, .. } => FamilyKey {
                family: TailFamily::Parabolic,
                shape: aspect_ratio,
            },
            TailGeometry::Rectangular { height, .. } => FamilyKey {
                family: TailFamily::Rectangular,
                shape: height,
            },
        }
    }

    fn with_length(&self, length: f64) -> TailGeometry {
        match *self {
            TailGeometry::Parabolic { aspect_ratio, .. } => TailGeometry::Parabolic {
                length,
                aspect_ratio,
            },
            TailGeometry::Rectangular { height, .. } => TailGeometry::Rectangular { length, height },
        }
    }
}

impl std::fmt::Display for TailGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            TailGeometry::Parabolic {
                length,
                aspect_ratio,
            } => write!(f, "parabolic {:.1} mm (AR {aspect_ratio})", length * 1e3),
            TailGeometry::Rectangular { length, height } => write!(
                f,
                "rectangular {:.1} mm x {:.1} mm",
                length * 1e3,
                height * 1e3
            ),
        }
    }
}

/// Quadratic drag in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragModel {
    /// Along b₁, N·s²·m⁻².
    pub longitudinal: f64,
    /// Along b₂, N·s²·m⁻².
    pub lateral: f64,
    /// About b₃, N·m·s²·rad⁻².
    pub rotational: f64,
}

impl DragModel {
    pub fn new(longitudinal: f64, lateral: f64, rotational: f64) -> Result<Self> {
        let d = Self {
            longitudinal,
            lateral,
            rotational,
        };
        d.validate()?;
        Ok(d)
    }

    /// Build from a drag reference `C_d·A` (m²): `c = ρ·C_d·A/2`.
    pub fn from_drag_area(
        fluid: &FluidEnvironment,
        drag_area: f64,
        lateral_ratio: f64,
        rotational: f64,
    ) -> Result<Self> {
        let longitudinal = 0.5 * fluid.density * drag_area;
        Self::new(longitudinal, lateral_ratio * longitudinal, rotational)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |c: f64| c > 0.0 && c.is_finite();
        if !(ok(self.longitudinal) && ok(self.lateral) && ok(self.rotational)) {
            return Err(domain(format!("drag coefficients must be > 0, got {self:?}")));
        }
        if self.lateral < self.longitudinal {
            return Err(domain(format!(
                "lateral drag ({}) must not be below longitudinal drag ({})",
                self.lateral, self.longitudinal
            )));
        }
        Ok(())
    }
}

/// Drag force (body frame) and yaw torque opposing the current twist.
pub fn drag_wrench(state: &RobotState, model: &DragModel) -> Wrench {
    let [u, v] = state.velocity;
    let w = state.yaw_rate;
    Wrench {
        force: [-model.longitudinal * u * u.abs(), -model.lateral * v * v.abs()],
        torque: -model.rotational * w * w.abs(),
    }
}

/// One row of the tail-characterisation speed table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedRow {
    pub tail: TailGeometry,
    pub frequency: f64,
    pub duty: f64,
    /// m·s⁻¹
    pub mean_speed: f64,
}

#[derive(Debug, Deserialize)]
struct SpeedRecord {
    family: String,
    length_mm: f64,
    height_mm: Option<f64>,
    aspect_ratio: Option<f64>,
    freq_hz: f64,
    duty: f64,
    mean_speed_mm_s: f64,
}

/// Parse a speed table with header
/// `family,length_mm,height_mm,aspect_ratio,freq_hz,duty,mean_speed_mm_s`.
///
/// Parabolic rows need `aspect_ratio`; rectangular rows need `height_mm`.
pub fn read_speed_table<R: Read>(reader: R) -> Result<Vec<SpeedRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let expected = [
        "family",
        "length_mm",
        "height_mm",
        "aspect_ratio",
        "freq_hz",
        "duty",
        "mean_speed_mm_s",
    ];
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Config(format!(
            "speed table header must be '{}', got '{}'",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<SpeedRecord>().enumerate() {
        let rec = rec?;
        let family: TailFamily = rec.family.parse()?;
        let length = rec.length_mm / 1000.0;
        let tail = match family {
            TailFamily::Parabolic => {
                let ar = rec.aspect_ratio.ok_or_else(|| {
                    Error::Config(format!("row {}: parabolic tail needs aspect_ratio", i + 1))
                })?;
                TailGeometry::parabolic(length, ar)?
            }
            TailFamily::Rectangular => {
                let h = rec.height_mm.ok_or_else(|| {
                    Error::Config(format!("row {}: rectangular tail needs height_mm", i + 1))
                })?;
                TailGeometry::rectangular(length, h / 1000.0)?
            }
        };
        rows.push(SpeedRow {
            tail,
            frequency: rec.freq_hz,
            duty: rec.duty,
            mean_speed: rec.mean_speed_mm_s / 1000.0,
        });
    }
    Ok(rows)
}

/// A calibrated mean-thrust value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThrustEntry {
    pub tail: TailGeometry,
    pub frequency: f64,
    pub duty: f64,
    /// N
    pub thrust: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Bilinear in (length, frequency), linear in duty.
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FamilyKey {
    family: TailFamily,
    /// Aspect ratio (parabolic) or height in m (rectangular).
    shape: f64,
}

impl FamilyKey {
    fn matches(&self, other: &FamilyKey) -> bool {
        self.family == other.family
            && (self.shape - other.shape).abs() <= 1e-9 * self.shape.abs().max(other.shape.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    thrust: f64,
    duty: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct FamilyGrid {
    key: FamilyKey,
    lengths: Vec<f64>,
    frequencies: Vec<f64>,
    /// Row-major over (length, frequency).
    cells: Vec<Option<Cell>>,
}

impl FamilyGrid {
    fn cell(&self, li: usize, fi: usize) -> Option<Cell> {
        self.cells[li * self.frequencies.len() + fi]
    }
}

/// Calibrated lookup from (tail, frequency, duty) to mean thrust.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ThrustMapDoc", try_from = "ThrustMapDoc")]
pub struct ThrustMap {
    interpolation: Interpolation,
    entries: Vec<ThrustEntry>,
    grids: Vec<FamilyGrid>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThrustMapDoc {
    interpolation: Interpolation,
    entries: Vec<ThrustEntry>,
}

impl From<ThrustMap> for ThrustMapDoc {
    fn from(map: ThrustMap) -> Self {
        ThrustMapDoc {
            interpolation: map.interpolation,
            entries: map.entries,
        }
    }
}

impl TryFrom<ThrustMapDoc> for ThrustMap {
    type Error = Error;

    fn try_from(doc: ThrustMapDoc) -> Result<Self> {
        ThrustMap::from_entries(doc.entries)
    }
}

/// Bracket `x` in sorted `knots`; returns `[(index, weight); 2]`.
fn bracket(knots: &[f64], x: f64, what: &str) -> Result<[(usize, f64); 2]> {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if !(x >= first && x <= last) {
        return Err(Error::Extrapolation(format!(
            "{what} {x} outside calibrated range [{first}, {last}]"
        )));
    }
    if let Some(k) = knots.iter().position(|&k| (k - x).abs() <= 1e-12 * k.abs().max(x.abs())) {
        return Ok([(k, 1.0), (k, 0.0)]);
    }
    let i = match knots.iter().rposition(|&k| k <= x) {
        Some(i) => i.min(knots.len() - 2),
        None => 0,
    };
    let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
    Ok([(i, 1.0 - t), (i + 1, t)])
}

/// Thrust as a function of duty for a fixed tail and frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ThrustCurve {
    /// (weight, calibrated thrust, calibration duty)
    corners: Vec<(f64, f64, f64)>,
}

impl ThrustCurve {
    pub fn thrust(&self, duty: f64) -> f64 {
        let f: f64 = self
            .corners
            .iter()
            .map(|&(w, thrust, cal)| w * thrust * (duty / cal))
            .sum();
        f.max(0.0)
    }
}

impl ThrustMap {
    pub fn from_entries(entries: Vec<ThrustEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut grouped: Vec<(FamilyKey, Vec<&ThrustEntry>)> = Vec::new();
        for e in &entries {
            e.tail.validate()?;
            if !(e.frequency > 0.0) {
                return Err(domain(format!("calibration frequency must be > 0, got {}", e.frequency)));
            }
            if !(e.duty > 0.0 && e.duty <= 1.0) {
                return Err(domain(format!("calibration duty must be in (0, 1], got {}", e.duty)));
            }
            if !(e.thrust >= 0.0 && e.thrust.is_finite()) {
                return Err(domain(format!("thrust must be >= 0, got {}", e.thrust)));
            }
            let key = e.tail.family_key();
            match grouped.iter_mut().find(|(k, _)| k.matches(&key)) {
                Some((_, v)) => v.push(e),
                None => grouped.push((key, vec![e])),
            }
        }
        let mut grids = Vec::with_capacity(grouped.len());
        for (key, group) in grouped {
            let lengths = sorted_unique(group.iter().map(|e| e.tail.length()));
            let frequencies = sorted_unique(group.iter().map(|e| e.frequency));
            let mut cells = vec![None; lengths.len() * frequencies.len()];
            for e in group {
                let li = position(&lengths, e.tail.length());
                let fi = position(&frequencies, e.frequency);
                let slot = &mut cells[li * frequencies.len() + fi];
                if slot.is_some() {
                    return Err(Error::Config(format!(
                        "duplicate calibration point: {} at {} Hz",
                        e.tail, e.frequency
                    )));
                }
                *slot = Some(Cell {
                    thrust: e.thrust,
                    duty: e.duty,
                });
            }
            grids.push(FamilyGrid {
                key,
                lengths,
                frequencies,
                cells,
            });
        }
        Ok(Self {
            interpolation: Interpolation::Bilinear,
            entries,
            grids,
        })
    }

    pub fn entries(&self) -> &[ThrustEntry] {
        &self.entries
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Calibrated tails and frequencies of the family that `tail` belongs to.
    pub fn grid_axes(&self, tail: &TailGeometry) -> Option<(Vec<TailGeometry>, Vec<f64>)> {
        let key = tail.family_key();
        self.grids.iter().find(|g| g.key.matches(&key)).map(|g| {
            (
                g.lengths.iter().map(|&l| tail.with_length(l)).collect(),
                g.frequencies.clone(),
            )
        })
    }

    /// Resolve the interpolation corners for `tail` at `frequency`.
    pub fn curve(&self, tail: &TailGeometry, frequency: f64) -> Result<ThrustCurve> {
        let key = tail.family_key();
        let grid = self
            .grids
            .iter()
            .find(|g| g.key.matches(&key))
            .ok_or_else(|| Error::Extrapolation(format!("no calibrated family for {tail}")))?;
        let lb = bracket(&grid.lengths, tail.length(), "tail length")?;
        let fb = bracket(&grid.frequencies, frequency, "frequency")?;
        let mut corners = Vec::with_capacity(4);
        for &(li, wl) in &lb {
            for &(fi, wf) in &fb {
                let w = wl * wf;
                if w == 0.0 {
                    continue;
                }
                let cell = grid.cell(li, fi).ok_or_else(|| {
                    Error::Uncalibrated(format!(
                        "{} at {} Hz",
                        tail.with_length(grid.lengths[li]),
                        grid.frequencies[fi]
                    ))
                })?;
                corners.push((w, cell.thrust, cell.duty));
            }
        }
        Ok(ThrustCurve { corners })
    }
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));
    v
}

fn position(knots: &[f64], x: f64) -> usize {
    knots
        .iter()
        .position(|&k| (k - x).abs() <= 1e-12 * k.abs().max(x.abs()))
        .expect("knot present by construction")
}

/// Mean thrust for `tail` excited at `frequency` with the given duty.
pub fn mean_thrust(map: &ThrustMap, tail: &TailGeometry, frequency: f64, duty: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(domain(format!("duty must be in [0, 1], got {duty}")));
    }
    Ok(map.curve(tail, frequency)?.thrust(duty))
}

/// Invert the speed table: each row's thrust balances longitudinal drag at the
/// measured steady speed, `F = c_long·v²`.
pub fn calibrate_thrust_map(rows: &[SpeedRow], drag: &DragModel) -> Result<ThrustMap> {
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    drag.validate()?;
    let entries = rows
        .iter()
        .map(|r| {
            if !(r.mean_speed >= 0.0 && r.mean_speed.is_finite()) {
                return Err(domain(format!("speed must be >= 0, got {}", r.mean_speed)));
            }
            Ok(ThrustEntry {
                tail: r.tail,
                frequency: r.frequency,
                duty: r.duty,
                thrust: drag.longitudinal * r.mean_speed * r.mean_speed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ThrustMap::from_entries(entries)
}

/// Tails whose film mass exceeds `fraction` of the robot mass tend to pull
/// the robot under the surface.
pub fn heavy_tail(tail: &TailGeometry, robot_mass: f64, fraction: f64) -> bool {
    tail.film_mass() > fraction * robot_mass
}
