//! Physical quantities in SI base units.
//!
//! Values are always stored in SI. Customary units (mg, µNm, mV, ...) only
//! appear when parsing config strings or formatting reports. Only the
//! dimensions this toolkit needs are modeled, and only the products that the
//! design formulas actually use are allowed.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::UnitError;

/// Absolute comparison floor (SI) used by [`approx_eq`] near zero.
pub const ABS_FLOOR: f64 = 1e-18;

/// Standard gravity, used to express forces as milligram-force.
pub const STANDARD_GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Dimensionless,
    Mass,
    Length,
    Area,
    Volume,
    Time,
    Frequency,
    Angle,
    Force,
    Torque,
    /// N·m/rad
    TorsionalStiffness,
    /// kg·m²
    Inertia,
    Power,
    Energy,
    Voltage,
    Current,
    Resistance,
    Pressure,
    Density,
    Resistivity,
    SpecificPower,
    /// N·m/A
    TorqueConstant,
}

impl Dimension {
    fn product(self, rhs: Dimension) -> Option<Dimension> {
        use Dimension::*;
        let d = match (self, rhs) {
            (Dimensionless, d) | (d, Dimensionless) => d,
            (Length, Length) => Area,
            (Area, Length) | (Length, Area) => Volume,
            (Mass, Area) | (Area, Mass) => Inertia,
            (Force, Length) | (Length, Force) => Torque,
            (TorsionalStiffness, Angle) | (Angle, TorsionalStiffness) => Torque,
            (Voltage, Current) | (Current, Voltage) => Power,
            (Current, Resistance) | (Resistance, Current) => Voltage,
            (Power, Time) | (Time, Power) => Energy,
            (Volume, Density) | (Density, Volume) => Mass,
            (SpecificPower, Mass) | (Mass, SpecificPower) => Power,
            (TorqueConstant, Current) | (Current, TorqueConstant) => Torque,
            _ => return None,
        };
        Some(d)
    }

    fn quotient(self, rhs: Dimension) -> Option<Dimension> {
        use Dimension::*;
        if self == rhs {
            return Some(Dimensionless);
        }
        let d = match (self, rhs) {
            (d, Dimensionless) => d,
            (Dimensionless, Time) => Frequency,
            (Dimensionless, Frequency) => Time,
            (Area, Length) => Length,
            (Volume, Area) => Length,
            (Volume, Length) => Area,
            (Inertia, Area) => Mass,
            (Inertia, Mass) => Area,
            (Torque, Angle) => TorsionalStiffness,
            (Torque, TorsionalStiffness) => Angle,
            (Torque, Length) => Force,
            (Torque, Force) => Length,
            (Voltage, Resistance) => Current,
            (Voltage, Current) => Resistance,
            (Power, Voltage) => Current,
            (Power, Current) => Voltage,
            (Energy, Time) => Power,
            (Power, Mass) => SpecificPower,
            (Power, SpecificPower) => Mass,
            (Mass, Volume) => Density,
            (Mass, Density) => Volume,
            (Torque, Current) => TorqueConstant,
            (Torque, TorqueConstant) => Current,
            _ => return None,
        };
        Some(d)
    }
}

/// A scalar with a dimension tag. The value is in SI base units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

impl Quantity {
    pub const fn new(value: f64, dimension: Dimension) -> Self {
        Self { value, dimension }
    }

    pub fn from_display(value: f64, unit: DisplayUnit) -> Self {
        Self::new(value * unit.scale(), unit.dimension())
    }

    pub fn mass(kg: f64) -> Self {
        Self::new(kg, Dimension::Mass)
    }
    pub fn length(m: f64) -> Self {
        Self::new(m, Dimension::Length)
    }
    pub fn frequency(hz: f64) -> Self {
        Self::new(hz, Dimension::Frequency)
    }
    pub fn torque(nm: f64) -> Self {
        Self::new(nm, Dimension::Torque)
    }
    pub fn torsional_stiffness(nm_per_rad: f64) -> Self {
        Self::new(nm_per_rad, Dimension::TorsionalStiffness)
    }
    pub fn inertia(kg_m2: f64) -> Self {
        Self::new(kg_m2, Dimension::Inertia)
    }
    pub fn power(w: f64) -> Self {
        Self::new(w, Dimension::Power)
    }
    pub fn voltage(v: f64) -> Self {
        Self::new(v, Dimension::Voltage)
    }
    pub fn resistance(ohm: f64) -> Self {
        Self::new(ohm, Dimension::Resistance)
    }
    pub fn angle(rad: f64) -> Self {
        Self::new(rad, Dimension::Angle)
    }
    pub fn force(n: f64) -> Self {
        Self::new(n, Dimension::Force)
    }

    pub fn try_add(self, rhs: Quantity) -> Result<Quantity, UnitError> {
        self.same_dim(rhs)?;
        Ok(Quantity::new(self.value + rhs.value, self.dimension))
    }

    pub fn try_sub(self, rhs: Quantity) -> Result<Quantity, UnitError> {
        self.same_dim(rhs)?;
        Ok(Quantity::new(self.value - rhs.value, self.dimension))
    }

    pub fn try_mul(self, rhs: Quantity) -> Result<Quantity, UnitError> {
        let dim = self
            .dimension
            .product(rhs.dimension)
            .ok_or(UnitError::Unsupported {
                left: self.dimension,
                op: '*',
                right: rhs.dimension,
            })?;
        Ok(Quantity::new(self.value * rhs.value, dim))
    }

    pub fn try_div(self, rhs: Quantity) -> Result<Quantity, UnitError> {
        let dim = self
            .dimension
            .quotient(rhs.dimension)
            .ok_or(UnitError::Unsupported {
                left: self.dimension,
                op: '/',
                right: rhs.dimension,
            })?;
        Ok(Quantity::new(self.value / rhs.value, dim))
    }

    pub fn scale(self, k: f64) -> Quantity {
        Quantity::new(self.value * k, self.dimension)
    }

    /// Value expressed in `unit`.
    pub fn to(self, unit: DisplayUnit) -> Result<f64, UnitError> {
        convert(self, unit)
    }

    fn same_dim(self, rhs: Quantity) -> Result<(), UnitError> {
        if self.dimension == rhs.dimension {
            Ok(())
        } else {
            Err(UnitError::Mismatch {
                left: self.dimension,
                right: rhs.dimension,
            })
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = DisplayUnit::preferred(self.dimension);
        write!(f, "{} {}", self.value / unit.scale(), unit.symbol())
    }
}

/// `|a−b| ≤ rel_tol·max(|a|,|b|)`, or `|a−b| ≤ 1e-18` near zero.
pub fn approx_eq(a: Quantity, b: Quantity, rel_tol: f64) -> Result<bool, UnitError> {
    if !(rel_tol > 0.0) {
        return Err(UnitError::BadTolerance(rel_tol));
    }
    a.same_dim(b)?;
    let diff = (a.value - b.value).abs();
    let scale = a.value.abs().max(b.value.abs());
    Ok(diff <= rel_tol * scale || diff <= ABS_FLOOR)
}

/// Express `q` in a customary display unit.
pub fn convert(q: Quantity, unit: DisplayUnit) -> Result<f64, UnitError> {
    if unit.dimension() != q.dimension {
        return Err(UnitError::WrongUnit {
            unit: unit.symbol().to_string(),
            expected: q.dimension,
        });
    }
    Ok(q.value / unit.scale())
}

macro_rules! display_units {
    ($( $variant:ident => ($sym:literal, $dim:ident, $exp:expr) ),* $(,)?) => {
        /// Units accepted in config strings and used in reports.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum DisplayUnit { $( $variant ),* }

        impl DisplayUnit {
            pub const ALL: &'static [DisplayUnit] = &[ $( DisplayUnit::$variant ),* ];

            pub fn symbol(self) -> &'static str {
                match self { $( DisplayUnit::$variant => $sym ),* }
            }

            pub fn dimension(self) -> Dimension {
                match self { $( DisplayUnit::$variant => Dimension::$dim ),* }
            }

            fn exponent(self) -> i32 {
                match self { $( DisplayUnit::$variant => $exp ),* }
            }
        }
    };
}

display_units! {
    One => ("", Dimensionless, 0),
    Percent => ("%", Dimensionless, -2),
    Kilogram => ("kg", Mass, 0),
    Gram => ("g", Mass, -3),
    Milligram => ("mg", Mass, -6),
    Microgram => ("ug", Mass, -9),
    Meter => ("m", Length, 0),
    Millimeter => ("mm", Length, -3),
    Micrometer => ("um", Length, -6),
    SquareMeter => ("m2", Area, 0),
    SquareMillimeter => ("mm2", Area, -6),
    CubicMeter => ("m3", Volume, 0),
    Second => ("s", Time, 0),
    Millisecond => ("ms", Time, -3),
    Microsecond => ("us", Time, -6),
    Hertz => ("Hz", Frequency, 0),
    Kilohertz => ("kHz", Frequency, 3),
    Radian => ("rad", Angle, 0),
    Milliradian => ("mrad", Angle, -3),
    Degree => ("deg", Angle, 0),
    Newton => ("N", Force, 0),
    Millinewton => ("mN", Force, -3),
    Micronewton => ("uN", Force, -6),
    NewtonMeter => ("Nm", Torque, 0),
    MicroNewtonMeter => ("uNm", Torque, -6),
    NanoNewtonMeter => ("nNm", Torque, -9),
    NewtonMeterPerRad => ("Nm/rad", TorsionalStiffness, 0),
    MicroNewtonMeterPerRad => ("uNm/rad", TorsionalStiffness, -6),
    NanoNewtonMeterPerRad => ("nNm/rad", TorsionalStiffness, -9),
    KilogramSquareMeter => ("kg*m2", Inertia, 0),
    MilligramSquareMillimeter => ("mg*mm2", Inertia, -12),
    Watt => ("W", Power, 0),
    Milliwatt => ("mW", Power, -3),
    Microwatt => ("uW", Power, -6),
    Joule => ("J", Energy, 0),
    Microjoule => ("uJ", Energy, -6),
    Nanojoule => ("nJ", Energy, -9),
    Volt => ("V", Voltage, 0),
    Millivolt => ("mV", Voltage, -3),
    Ampere => ("A", Current, 0),
    Milliampere => ("mA", Current, -3),
    Ohm => ("ohm", Resistance, 0),
    Milliohm => ("mohm", Resistance, -3),
    Pascal => ("Pa", Pressure, 0),
    Megapascal => ("MPa", Pressure, 6),
    Gigapascal => ("GPa", Pressure, 9),
    KilogramPerCubicMeter => ("kg/m3", Density, 0),
    OhmMeter => ("ohm*m", Resistivity, 0),
    WattPerKilogram => ("W/kg", SpecificPower, 0),
    NewtonMeterPerAmpere => ("Nm/A", TorqueConstant, 0),
    MicroNewtonMeterPerAmpere => ("uNm/A", TorqueConstant, -6),
}

impl DisplayUnit {
    /// Multiplier from this unit to SI.
    pub fn scale(self) -> f64 {
        match self {
            DisplayUnit::Degree => PI / 180.0,
            u => 10f64.powi(u.exponent()),
        }
    }

    /// The unit reports use for a dimension.
    pub fn preferred(dim: Dimension) -> DisplayUnit {
        use DisplayUnit as U;
        match dim {
            Dimension::Dimensionless => U::One,
            Dimension::Mass => U::Milligram,
            Dimension::Length => U::Millimeter,
            Dimension::Area => U::SquareMillimeter,
            Dimension::Volume => U::CubicMeter,
            Dimension::Time => U::Millisecond,
            Dimension::Frequency => U::Hertz,
            Dimension::Angle => U::Degree,
            Dimension::Force => U::Millinewton,
            Dimension::Torque => U::MicroNewtonMeter,
            Dimension::TorsionalStiffness => U::MicroNewtonMeterPerRad,
            Dimension::Inertia => U::KilogramSquareMeter,
            Dimension::Power => U::Microwatt,
            Dimension::Energy => U::Microjoule,
            Dimension::Voltage => U::Millivolt,
            Dimension::Current => U::Milliampere,
            Dimension::Resistance => U::Ohm,
            Dimension::Pressure => U::Gigapascal,
            Dimension::Density => U::KilogramPerCubicMeter,
            Dimension::Resistivity => U::OhmMeter,
            Dimension::SpecificPower => U::WattPerKilogram,
            Dimension::TorqueConstant => U::MicroNewtonMeterPerAmpere,
        }
    }

    fn lookup(suffix: &str, expected: Dimension) -> Option<DisplayUnit> {
        let norm = normalize_suffix(suffix);
        let matches = |u: &DisplayUnit| normalize_suffix(u.symbol()) == norm;
        if let Some(u) = Self::ALL
            .iter()
            .copied()
            .find(|u| u.dimension() == expected && matches(u))
        {
            return Some(u);
        }
        // The customary notation writes torsional stiffness as "µNm".
        if expected == Dimension::TorsionalStiffness {
            return match norm.as_str() {
                "Nm" | "N*m" => Some(DisplayUnit::NewtonMeterPerRad),
                "uNm" | "uN*m" => Some(DisplayUnit::MicroNewtonMeterPerRad),
                "nNm" | "nN*m" => Some(DisplayUnit::NanoNewtonMeterPerRad),
                _ => None,
            };
        }
        None
    }
}

fn normalize_suffix(s: &str) -> String {
    let s = s
        .trim()
        .replace(['µ', 'μ'], "u")
        .replace('Ω', "ohm")
        .replace('·', "*")
        .replace('²', "2")
        .replace('³', "3")
        .replace(['^', ' '], "");
    // prefixes are case sensitive (mN vs MN); only a few spellings are folded
    match s.as_str() {
        "hz" | "HZ" => "Hz".into(),
        "Ohm" | "OHM" => "ohm".into(),
        "degree" | "degrees" | "°" => "deg".into(),
        _ => s,
    }
}

/// Parse a config string such as `"0.3mm"`, `"70 mV"` or `"0.8uNm"` into a
/// quantity of the expected dimension. Bare numbers are only accepted for
/// dimensionless values.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<Quantity, UnitError> {
    let trimmed = text.trim();
    let split = number_prefix_len(trimmed);
    if split == 0 {
        return Err(UnitError::Malformed(text.to_string()));
    }
    let (num, suffix) = trimmed.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| UnitError::Malformed(text.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::Malformed(text.to_string()));
    }
    let suffix = suffix.trim();
    if suffix.is_empty() {
        if expected == Dimension::Dimensionless {
            return Ok(Quantity::new(value, expected));
        }
        return Err(UnitError::WrongUnit {
            unit: String::new(),
            expected,
        });
    }
    let unit = DisplayUnit::lookup(suffix, expected).ok_or_else(|| UnitError::WrongUnit {
        unit: suffix.to_string(),
        expected,
    })?;
    Ok(Quantity::new(value * unit.scale(), expected))
}

fn number_prefix_len(s: &str) -> usize {
    let bytes = s.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let mut digits = 0;
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
        digits += 1;
    }
    if digits == 0 {
        return 0;
    }
    // exponent only if followed by a digit, so "2e-3" parses but "1e" is left
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    i
}

/// Format an SI value in the preferred display unit for its dimension.
pub fn format_si(value: f64, dim: Dimension) -> String {
    Quantity::new(value, dim).to_string()
}
