//! JSON model files.
//!
//! ```json
//! {
//!   "name": "partitions",
//!   "inner": { "kind": "geometric-pole" },
//!   "weights": { "kind": "constant", "params": { "value": 1.0 } },
//!   "frequencies": { "kind": "constant", "params": { "value": 1.0 } },
//!   "profile": {
//!     "poles": [ { "rho": 1.0, "residue": 1.6449340668482264 } ],
//!     "A0": -0.5,
//!     "h0": -0.9189385332046727,
//!     "D_neg": [ 0.041666666666666664, 0.0 ]
//!   }
//! }
//! ```
//!
//! Inner kinds: `geometric-pole`, `distinct-binomial`,
//! `ratio-kernel` (`params: {p}`), `explicit` (`coeffs`, `tail`, optional
//! `singularities`). Tails are `{"rule": "zero"}` or
//! `{"rule": "periodic", "period": P}`. Sequence kinds: `constant {value}`,
//! `power-law {c, beta}`, `von-mangoldt`, `example3 {epsilon}`,
//! `indicator-modulus {m}`, `table {values, tail}`. Unknown fields are
//! rejected everywhere.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    InnerKind, InnerSeriesSpec, SequenceSpec, SingularityDescriptor, SingularityKind, TailRule,
    WeightedModel,
};
use crate::dirichlet::{AsymptoticProfile, Pole};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    inner: InnerDoc,
    weights: SequenceDoc,
    frequencies: SequenceDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    profile: Option<ProfileDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InnerDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<RatioParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<TailDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    singularities: Option<Vec<SingularityDoc>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatioParams {
    p: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
enum TailDoc {
    Zero,
    Periodic { period: usize },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SingularityDoc {
    re: f64,
    im: f64,
    order: u32,
    kind: SingularityKindDoc,
    regular_part_modulus: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SingularityKindDoc {
    Pole,
    Zero,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "kebab-case",
    deny_unknown_fields
)]
enum SequenceDoc {
    Constant {
        value: f64,
    },
    PowerLaw {
        c: f64,
        beta: f64,
    },
    VonMangoldt,
    Example3 {
        epsilon: f64,
    },
    IndicatorModulus {
        m: u64,
    },
    Table {
        values: Vec<f64>,
        #[serde(default)]
        tail: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    poles: Vec<PoleDoc>,
    #[serde(rename = "A0")]
    a0: f64,
    #[serde(default)]
    h0: f64,
    #[serde(rename = "D_neg", default)]
    d_neg: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoleDoc {
    rho: f64,
    residue: f64,
}

impl InnerDoc {
    fn into_spec(self) -> Result<InnerSeriesSpec> {
        let reject = |field: &str, kind: &str| {
            Err(Error::Parse(format!(
                "field `{field}` not allowed for inner kind `{kind}`"
            )))
        };
        let kind = self.kind.as_str();
        if kind != "explicit" {
            if self.coeffs.is_some() {
                return reject("coeffs", kind);
            }
            if self.tail.is_some() {
                return reject("tail", kind);
            }
            if self.singularities.is_some() {
                return reject("singularities", kind);
            }
        }
        if kind != "ratio-kernel" && self.params.is_some() {
            return reject("params", kind);
        }
        match kind {
            "geometric-pole" => Ok(InnerSeriesSpec::geometric_pole()),
            "distinct-binomial" => Ok(InnerSeriesSpec::distinct_binomial()),
            "ratio-kernel" => {
                let p = self
                    .params
                    .ok_or_else(|| Error::Parse("ratio-kernel needs params.p".into()))?
                    .p;
                InnerSeriesSpec::ratio_kernel(p)
            }
            "explicit" => {
                let coeffs = self
                    .coeffs
                    .ok_or_else(|| Error::Parse("explicit inner series needs `coeffs`".into()))?;
                let tail = match self.tail.ok_or_else(|| {
                    Error::Parse("explicit inner series needs a `tail` rule".into())
                })? {
                    TailDoc::Zero => TailRule::Zero,
                    TailDoc::Periodic { period } => TailRule::Periodic { period },
                };
                let sings = self
                    .singularities
                    .unwrap_or_default()
                    .into_iter()
                    .map(|s| SingularityDescriptor {
                        location: Complex64::new(s.re, s.im),
                        order: s.order,
                        kind: match s.kind {
                            SingularityKindDoc::Pole => SingularityKind::Pole,
                            SingularityKindDoc::Zero => SingularityKind::Zero,
                        },
                        regular_part_modulus: s.regular_part_modulus,
                    })
                    .collect();
                InnerSeriesSpec::explicit(coeffs, tail, sings)
            }
            other => Err(Error::Parse(format!("unknown inner kind `{other}`"))),
        }
    }

    fn from_spec(spec: &InnerSeriesSpec) -> Self {
        let mut doc = InnerDoc {
            kind: String::new(),
            params: None,
            coeffs: None,
            tail: None,
            singularities: None,
        };
        match spec.kind() {
            InnerKind::GeometricPole => doc.kind = "geometric-pole".into(),
            InnerKind::DistinctBinomial => doc.kind = "distinct-binomial".into(),
            InnerKind::RatioKernel { p } => {
                doc.kind = "ratio-kernel".into();
                doc.params = Some(RatioParams { p: *p });
            }
            InnerKind::Explicit { coeffs, tail } => {
                doc.kind = "explicit".into();
                doc.coeffs = Some(coeffs.clone());
                doc.tail = Some(match tail {
                    TailRule::Zero => TailDoc::Zero,
                    TailRule::Periodic { period } => TailDoc::Periodic { period: *period },
                });
                if !spec.singularities().is_empty() {
                    doc.singularities = Some(
                        spec.singularities()
                            .iter()
                            .map(|s| SingularityDoc {
                                re: s.location.re,
                                im: s.location.im,
                                order: s.order,
                                kind: match s.kind {
                                    SingularityKind::Pole => SingularityKindDoc::Pole,
                                    SingularityKind::Zero => SingularityKindDoc::Zero,
                                },
                                regular_part_modulus: s.regular_part_modulus,
                            })
                            .collect(),
                    );
                }
            }
        }
        doc
    }
}

impl From<SequenceDoc> for SequenceSpec {
    fn from(doc: SequenceDoc) -> Self {
        match doc {
            SequenceDoc::Constant { value } => SequenceSpec::Constant(value),
            SequenceDoc::PowerLaw { c, beta } => SequenceSpec::PowerLaw { c, beta },
            SequenceDoc::VonMangoldt => SequenceSpec::VonMangoldt,
            SequenceDoc::Example3 { epsilon } => SequenceSpec::Example3 { epsilon },
            SequenceDoc::IndicatorModulus { m } => SequenceSpec::IndicatorModulus(m),
            SequenceDoc::Table { values, tail } => SequenceSpec::Table { values, tail },
        }
    }
}

impl From<&SequenceSpec> for SequenceDoc {
    fn from(spec: &SequenceSpec) -> Self {
        match spec {
            SequenceSpec::Constant(value) => SequenceDoc::Constant { value: *value },
            SequenceSpec::PowerLaw { c, beta } => SequenceDoc::PowerLaw { c: *c, beta: *beta },
            SequenceSpec::VonMangoldt => SequenceDoc::VonMangoldt,
            SequenceSpec::Example3 { epsilon } => SequenceDoc::Example3 { epsilon: *epsilon },
            SequenceSpec::IndicatorModulus(m) => SequenceDoc::IndicatorModulus { m: *m },
            SequenceSpec::Table { values, tail } => SequenceDoc::Table {
                values: values.clone(),
                tail: *tail,
            },
        }
    }
}

impl From<ProfileDoc> for AsymptoticProfile {
    fn from(doc: ProfileDoc) -> Self {
        AsymptoticProfile {
            poles: doc
                .poles
                .into_iter()
                .map(|p| Pole {
                    rho: p.rho,
                    residue: p.residue,
                })
                .collect(),
            a0: doc.a0,
            h0: doc.h0,
            delta_coeffs: doc.d_neg,
        }
    }
}

impl From<&AsymptoticProfile> for ProfileDoc {
    fn from(p: &AsymptoticProfile) -> Self {
        ProfileDoc {
            poles: p
                .poles
                .iter()
                .map(|p| PoleDoc {
                    rho: p.rho,
                    residue: p.residue,
                })
                .collect(),
            a0: p.a0,
            h0: p.h0,
            d_neg: p.delta_coeffs.clone(),
        }
    }
}

/// Parse and validate a model from JSON text.
pub fn model_from_json(text: &str) -> Result<WeightedModel> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    let inner = doc.inner.into_spec()?;
    WeightedModel::new(
        doc.name,
        inner,
        doc.weights.into(),
        doc.frequencies.into(),
        doc.profile.map(Into::into),
    )
}

pub fn model_to_json(model: &WeightedModel) -> Result<String> {
    let doc = ModelDoc {
        name: model.name.clone(),
        inner: InnerDoc::from_spec(&model.inner),
        weights: (&model.weights).into(),
        frequencies: (&model.frequencies).into(),
        profile: model.profile.as_ref().map(Into::into),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<WeightedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    model_from_json(&text)
}

pub fn save_model(model: &WeightedModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(model)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin;

    #[test]
    fn catalogue_round_trips() {
        for name in [
            "partitions",
            "distinct",
            "prime-powers",
            "example3(0.5)",
            "ratio-kernel(3)",
            "q4-indicator",
            "gcd2",
            "empty-weights",
        ] {
            let m = builtin(name).unwrap();
            let text = model_to_json(&m).unwrap();
            let back = model_from_json(&text).unwrap();
            assert_eq!(back, m, "{name}");
        }
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = r#"{"name":"x","inner":{"kind":"geometric-pole"},
            "weights":{"kind":"constant","params":{"value":1.0}},
            "frequencies":{"kind":"constant","params":{"value":1.0}},
            "colour":"red"}"#;
        assert!(matches!(model_from_json(text), Err(Error::Parse(_))));
        let text = r#"{"name":"x","inner":{"kind":"geometric-pole"},
            "weights":{"kind":"constant","params":{"value":1.0, "scale": 2}},
            "frequencies":{"kind":"constant","params":{"value":1.0}}}"#;
        assert!(matches!(model_from_json(text), Err(Error::Parse(_))));
        let text = r#"{"name":"x","inner":{"kind":"geometric-pole","coeffs":[1,1]},
            "weights":{"kind":"constant","params":{"value":1.0}},
            "frequencies":{"kind":"constant","params":{"value":1.0}}}"#;
        assert!(matches!(model_from_json(text), Err(Error::Parse(_))));
    }

    #[test]
    fn explicit_gcd2_file() {
        let text = r#"{"name":"gcd2","inner":{"kind":"explicit","coeffs":[1,0,1],"tail":{"rule":"zero"}},
            "weights":{"kind":"constant","params":{"value":1.0}},
            "frequencies":{"kind":"constant","params":{"value":1.0}}}"#;
        let m = model_from_json(text).unwrap();
        assert_eq!(m.inner.coeffs(4), vec![1.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn frequency_above_one_is_rejected() {
        let text = r#"{"name":"x","inner":{"kind":"geometric-pole"},
            "weights":{"kind":"constant","params":{"value":1.0}},
            "frequencies":{"kind":"table","params":{"values":[1.0,1.0,1.5],"tail":1.0}}}"#;
        assert!(matches!(model_from_json(text), Err(Error::Validation(_))));
    }

    #[test]
    fn non_increasing_poles_rejected() {
        let text = r#"{"name":"x","inner":{"kind":"geometric-pole"},
            "weights":{"kind":"constant","params":{"value":1.0}},
            "frequencies":{"kind":"constant","params":{"value":1.0}},
            "profile":{"poles":[{"rho":1.0,"residue":1.0},{"rho":0.5,"residue":1.0}],"A0":0.0}}"#;
        assert!(matches!(model_from_json(text), Err(Error::Validation(_))));
    }

    #[test]
    fn nonunit_constant_term_rejected() {
        let text = r#"{"name":"x","inner":{"kind":"explicit","coeffs":[2,1],"tail":{"rule":"zero"}},
            "weights":{"kind":"constant","params":{"value":1.0}},
            "frequencies":{"kind":"constant","params":{"value":1.0}}}"#;
        assert!(matches!(model_from_json(text), Err(Error::Validation(_))));
    }
}
