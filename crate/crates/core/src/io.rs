//! JSON file formats.
//!
//! ```json
//! {"dim": 2, "value_norm": "max",
//!  "blocks": [{"start": 0.0, "end": 1.0, "value": [1.0, -2.0]}]}
//! ```
//!
//! `dim` may be omitted and `value` may be a bare number for scalar
//! functions. Partitions are block lists `[{"start": .., "end": ..}]`;
//! measure spaces are `{"alpha": number | null, "exhaustion": [..]}` with
//! `null` for an infinite measure. Semimodulars:
//!
//! ```json
//! {"kind": "orlicz", "phi": {"kind": "power", "p": 2.0}, "convexity": "convex"}
//! {"kind": "lp", "p": 0.5}
//! {"kind": "musielak", "zones": [{"t_end": 1.0, "phi": ..}, {"t_end": null, "phi": ..}],
//!  "convexity": "s-convex", "s": 0.5}
//! {"kind": "max", "members": [..]}
//! ```

use std::path::Path;

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::{Block, MeasureSpace, Partition, StepFunction, ValueNorm};
use crate::modular::{max_combine, Convexity, ModularKind, PhiFunction, Semimodular, Zone};

#[derive(Serialize, Deserialize)]
struct BlockDoc {
    start: f64,
    end: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValueDoc {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct PieceDoc {
    start: f64,
    end: f64,
    value: ValueDoc,
}

#[derive(Serialize, Deserialize)]
struct StepDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default = "default_norm")]
    value_norm: ValueNorm,
    blocks: Vec<PieceDoc>,
}

fn default_norm() -> ValueNorm {
    ValueNorm::Euclidean
}

impl Serialize for StepFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepDoc {
            dim: Some(self.dim()),
            value_norm: self.value_norm(),
            blocks: self
                .pieces()
                .map(|(b, v)| PieceDoc { start: b.start(), end: b.end(), value: ValueDoc::Vector(v.to_vec()) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = StepDoc::deserialize(d)?;
        let pieces = doc
            .blocks
            .into_iter()
            .map(|p| {
                let value = match p.value {
                    ValueDoc::Scalar(v) => vec![v],
                    ValueDoc::Vector(v) => v,
                };
                Ok((Block::new(p.start, p.end)?, value))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let dim = doc.dim.or_else(|| pieces.first().map(|(_, v)| v.len())).unwrap_or(1);
        StepFunction::from_pieces(dim, doc.value_norm, pieces).map_err(D::Error::custom)
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks: Vec<BlockDoc> =
            self.blocks().iter().map(|b| BlockDoc { start: b.start(), end: b.end() }).collect();
        blocks.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let docs = Vec::<BlockDoc>::deserialize(d)?;
        let blocks = docs
            .into_iter()
            .map(|b| Block::new(b.start, b.end))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Partition::new(blocks).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    alpha: Option<f64>,
    exhaustion: Vec<f64>,
}

impl Serialize for MeasureSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let alpha = self.alpha().is_finite().then(|| self.alpha());
        SpaceDoc { alpha, exhaustion: self.exhaustion().to_vec() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasureSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = SpaceDoc::deserialize(d)?;
        MeasureSpace::new(doc.alpha.unwrap_or(f64::INFINITY), doc.exhaustion).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Debug)]
#[serde(rename_all = "kebab-case")]
enum ConvexityTag {
    Plain,
    SConvex,
    Convex,
}

#[derive(Serialize, Deserialize)]
struct ZoneDoc {
    t_end: Option<f64>,
    phi: PhiFunction,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ModularDoc {
    Orlicz {
        phi: PhiFunction,
        #[serde(default = "plain")]
        convexity: ConvexityTag,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
    },
    Lp {
        p: f64,
    },
    Musielak {
        zones: Vec<ZoneDoc>,
        #[serde(default = "plain")]
        convexity: ConvexityTag,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
    },
    Max {
        members: Vec<ModularDoc>,
    },
}

fn plain() -> ConvexityTag {
    ConvexityTag::Plain
}

fn to_convexity(tag: ConvexityTag, s: Option<f64>) -> Result<Convexity> {
    match (tag, s) {
        (ConvexityTag::Plain, _) => Ok(Convexity::Plain),
        (ConvexityTag::Convex, _) => Ok(Convexity::Convex),
        (ConvexityTag::SConvex, Some(s)) => Ok(Convexity::SConvex(s)),
        (ConvexityTag::SConvex, None) => Err(Error::MalformedInput("s-convex modular needs \"s\"".into())),
    }
}

fn from_convexity(c: Convexity) -> (ConvexityTag, Option<f64>) {
    match c {
        Convexity::Plain => (ConvexityTag::Plain, None),
        Convexity::Convex => (ConvexityTag::Convex, None),
        Convexity::SConvex(s) => (ConvexityTag::SConvex, Some(s)),
    }
}

impl ModularDoc {
    fn build(self) -> Result<Semimodular> {
        match self {
            ModularDoc::Orlicz { phi, convexity, s } => Semimodular::orlicz(phi, to_convexity(convexity, s)?),
            ModularDoc::Lp { p } => Semimodular::lp(p),
            ModularDoc::Musielak { zones, convexity, s } => Semimodular::musielak(
                zones.into_iter().map(|z| Zone { t_end: z.t_end, phi: z.phi }).collect(),
                to_convexity(convexity, s)?,
            ),
            ModularDoc::Max { members } => {
                max_combine(&members.into_iter().map(ModularDoc::build).collect::<Result<Vec<_>>>()?)
            }
        }
    }

    fn of(rho: &Semimodular) -> ModularDoc {
        let (convexity, s) = from_convexity(rho.convexity());
        match rho.kind() {
            ModularKind::Orlicz(phi) => ModularDoc::Orlicz { phi: phi.clone(), convexity, s },
            ModularKind::Musielak(zones) => ModularDoc::Musielak {
                zones: zones.iter().map(|z| ZoneDoc { t_end: z.t_end, phi: z.phi.clone() }).collect(),
                convexity,
                s,
            },
            ModularKind::Max(members) => ModularDoc::Max { members: members.iter().map(ModularDoc::of).collect() },
        }
    }
}

impl Serialize for Semimodular {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModularDoc::of(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Semimodular {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ModularDoc::deserialize(d)?.build().map_err(D::Error::custom)
    }
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::MalformedInput(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    from_json_str(&text).map_err(|e| match e {
        Error::MalformedInput(m) => Error::MalformedInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("in-memory values serialize")
}

/// Fixed 17-significant-digit rendering used in every CSV output.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_accepts_scalar_shorthand() {
        let f: StepFunction =
            from_json_str(r#"{"blocks":[{"start":0,"end":1,"value":2.5},{"start":1,"end":2,"value":-1}]}"#).unwrap();
        assert_eq!(f, StepFunction::scalar(&[(0.0, 1.0, 2.5), (1.0, 2.0, -1.0)]).unwrap());
    }

    #[test]
    fn step_function_round_trip() {
        let f = StepFunction::indicator(0.25, 0.75, vec![1.0, -3.0], ValueNorm::Sum).unwrap();
        let back: StepFunction = from_json_str(&to_json(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(from_json_str::<StepFunction>(r#"{"blocks":[{"start":1,"end":0,"value":1}]}"#).is_err());
        assert!(from_json_str::<StepFunction>(
            r#"{"blocks":[{"start":0,"end":2,"value":1},{"start":1,"end":3,"value":1}]}"#
        )
        .is_err());
        assert!(from_json_str::<Semimodular>(r#"{"kind":"orlicz","phi":{"kind":"power","p":2},"convexity":"s-convex"}"#)
            .is_err());
    }

    #[test]
    fn modular_round_trip() {
        let json = r#"{"kind":"max","members":[{"kind":"lp","p":2.0},
            {"kind":"musielak","zones":[{"t_end":1.0,"phi":{"kind":"power","p":1.0}},
            {"t_end":null,"phi":{"kind":"exp_shift"}}],"convexity":"convex"}]}"#;
        let rho: Semimodular = from_json_str(json).unwrap();
        assert_eq!(rho.convexity(), Convexity::Convex);
        let back: Semimodular = from_json_str(&to_json(&rho)).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn space_with_infinite_measure() {
        let s: MeasureSpace = from_json_str(r#"{"alpha":null,"exhaustion":[1,2,4]}"#).unwrap();
        assert!(s.alpha().is_infinite());
        assert_eq!(to_json(&s), r#"{"alpha":null,"exhaustion":[1.0,2.0,4.0]}"#);
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(2.0), "2.0000000000000000e0");
    }
}
