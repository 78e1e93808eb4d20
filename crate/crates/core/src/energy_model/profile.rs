use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{BlockSize, Component, ModeClass, RowKey, SizeTable};
use crate::{Error, Result};

const DEFAULT_PROFILE_JSON: &str = include_str!("../../profiles/default_synthetic.json");

/// Specific energies of one decoder, in joules per event.
///
/// All stored values are non-negative; the transform-skip term is subtracted
/// by the estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecificEnergyProfile {
    pub name: String,
    pub e0: f64,
    pub e_slice: f64,
    pub e_mode_size: SizeTable<ModeClass, f64>,
    pub e_comp_size: SizeTable<Component, f64>,
    pub e_coeff: f64,
    pub e_g1: f64,
    pub e_val: f64,
    pub e_csbf: f64,
    pub e_nompm: f64,
    pub e_tsf: f64,
}

/// Number of scalar parameters in a profile.
pub const PARAM_COUNT: usize = 32;

/// Identifies one scalar parameter of a [`SpecificEnergyProfile`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamId {
    E0,
    Slice,
    ModeSize(ModeClass, BlockSize),
    CompSize(Component, BlockSize),
    Coeff,
    G1,
    Val,
    Csbf,
    NoMpm,
    Tsf,
}

impl ParamId {
    /// All parameters in vector order.
    pub fn all() -> [ParamId; PARAM_COUNT] {
        let mut out = [ParamId::E0; PARAM_COUNT];
        let mut i = 0;
        let mut push = |p| {
            out[i] = p;
            i += 1;
        };
        push(ParamId::E0);
        push(ParamId::Slice);
        for m in ModeClass::ALL {
            for s in BlockSize::ALL {
                push(ParamId::ModeSize(m, s));
            }
        }
        for c in Component::ALL {
            for s in BlockSize::ALL {
                push(ParamId::CompSize(c, s));
            }
        }
        for p in [ParamId::Coeff, ParamId::G1, ParamId::Val, ParamId::Csbf, ParamId::NoMpm, ParamId::Tsf] {
            push(p);
        }
        out
    }

    pub fn index(self) -> usize {
        match self {
            ParamId::E0 => 0,
            ParamId::Slice => 1,
            ParamId::ModeSize(m, s) => 2 + m.index() * 4 + s.index(),
            ParamId::CompSize(c, s) => 14 + c.index() * 4 + s.index(),
            ParamId::Coeff => 26,
            ParamId::G1 => 27,
            ParamId::Val => 28,
            ParamId::Csbf => 29,
            ParamId::NoMpm => 30,
            ParamId::Tsf => 31,
        }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamId::E0 => f.write_str("e0"),
            ParamId::Slice => f.write_str("e_slice"),
            ParamId::ModeSize(m, s) => write!(f, "e_mode_size.{}.{}", m.label(), s.len()),
            ParamId::CompSize(c, s) => write!(f, "e_comp_size.{}.{}", c.label(), s.len()),
            ParamId::Coeff => f.write_str("e_coeff"),
            ParamId::G1 => f.write_str("e_g1"),
            ParamId::Val => f.write_str("e_val"),
            ParamId::Csbf => f.write_str("e_csbf"),
            ParamId::NoMpm => f.write_str("e_nompm"),
            ParamId::Tsf => f.write_str("e_tsf"),
        }
    }
}

impl SpecificEnergyProfile {
    /// The bundled synthetic profile. Its values are order-of-magnitude
    /// placeholders, not measurements of any real decoder.
    pub fn default_synthetic() -> Self {
        Self::from_json_str(DEFAULT_PROFILE_JSON).expect("bundled profile is valid")
    }

    /// All-zero profile with the given label.
    pub fn zeroed(name: impl Into<String>) -> Self {
        SpecificEnergyProfile {
            name: name.into(),
            e0: 0.0,
            e_slice: 0.0,
            e_mode_size: SizeTable::filled(0.0),
            e_comp_size: SizeTable::filled(0.0),
            e_coeff: 0.0,
            e_g1: 0.0,
            e_val: 0.0,
            e_csbf: 0.0,
            e_nompm: 0.0,
            e_tsf: 0.0,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: SpecificEnergyProfile = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s).map_err(|e| match e {
            Error::Json(j) => Error::InvalidProfile(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        for p in ParamId::all() {
            let v = self.get(p);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidProfile(format!("{p} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn get(&self, p: ParamId) -> f64 {
        match p {
            ParamId::E0 => self.e0,
            ParamId::Slice => self.e_slice,
            ParamId::ModeSize(m, s) => self.e_mode_size[(m, s)],
            ParamId::CompSize(c, s) => self.e_comp_size[(c, s)],
            ParamId::Coeff => self.e_coeff,
            ParamId::G1 => self.e_g1,
            ParamId::Val => self.e_val,
            ParamId::Csbf => self.e_csbf,
            ParamId::NoMpm => self.e_nompm,
            ParamId::Tsf => self.e_tsf,
        }
    }

    pub fn set(&mut self, p: ParamId, v: f64) {
        let slot = match p {
            ParamId::E0 => &mut self.e0,
            ParamId::Slice => &mut self.e_slice,
            ParamId::ModeSize(m, s) => &mut self.e_mode_size[(m, s)],
            ParamId::CompSize(c, s) => &mut self.e_comp_size[(c, s)],
            ParamId::Coeff => &mut self.e_coeff,
            ParamId::G1 => &mut self.e_g1,
            ParamId::Val => &mut self.e_val,
            ParamId::Csbf => &mut self.e_csbf,
            ParamId::NoMpm => &mut self.e_nompm,
            ParamId::Tsf => &mut self.e_tsf,
        };
        *slot = v;
    }

    pub fn to_vector(&self) -> [f64; PARAM_COUNT] {
        ParamId::all().map(|p| self.get(p))
    }

    pub fn from_vector(name: impl Into<String>, v: &[f64; PARAM_COUNT]) -> Self {
        let mut p = Self::zeroed(name);
        for id in ParamId::all() {
            p.set(id, v[id.index()]);
        }
        p
    }

    /// Multiplies every specific energy (including the offset) by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut v = self.to_vector();
        v.iter_mut().for_each(|x| *x *= k);
        Self::from_vector(format!("{} x{k}", self.name), &v)
    }
}
