//! Measure strings: `NAME[(key=value,...)]@CUTOFF`.
//!
//! | Name     | Options                                                          |
//! | -------- | ---------------------------------------------------------------- |
//! | `PEER`   | `w=0:0,1:1`, `df=sample\|collection`, `rerank=literal\|midranks`, `absent=renorm\|one` |
//! | `AWRF`   | `target=rel\|eng:0.5,fas:0.5`, `attention=log2\|rbp:0.8`, `dist=tv\|jsd`, `nonrel=remove\|keep` |
//! | `aDCG`   | `alpha=0.5`                                                      |
//! | `nDCG`   | `gain=exp\|linear`                                               |
//! | `Recall` | none                                                             |
//!
//! A comma-separated segment without `=` continues the previous option's
//! value, which is how list-valued options such as `w` are written.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::baselines::{Attention, AwrfOptions, Distance, Gain, Target, TargetDistribution};
use crate::error::{Error, Result};
use crate::model::{Grade, Language};
use crate::peer::{AbsentRule, DfMode, LevelWeights, PeerOptions};
use crate::stats::Rerank;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureKind {
    Peer {
        weights: LevelWeights,
        rerank: Rerank,
        df: DfMode,
        absent: AbsentRule,
    },
    Awrf(AwrfOptions),
    AlphaNdcg { alpha: f64 },
    Ndcg { gain: Gain },
    Recall,
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Peer { .. } => "PEER",
            MeasureKind::Awrf(_) => "AWRF",
            MeasureKind::AlphaNdcg { .. } => "aDCG",
            MeasureKind::Ndcg { .. } => "nDCG",
            MeasureKind::Recall => "Recall",
        }
    }
}

/// A parsed measure with its cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub cutoff: usize,
    options: Vec<(String, String)>,
}

impl MeasureSpec {
    /// PEER options for this measure, or `None` for other measures.
    pub fn peer_options(&self) -> Option<PeerOptions> {
        match &self.kind {
            MeasureKind::Peer {
                weights,
                rerank,
                df,
                absent,
            } => Some(PeerOptions {
                cutoff: self.cutoff,
                weights: weights.clone(),
                rerank: *rerank,
                df: *df,
                absent: *absent,
            }),
            _ => None,
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if !self.options.is_empty() {
            let opts: Vec<String> = self.options.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", opts.join(","))?;
        }
        write!(f, "@{}", self.cutoff)
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_measure_spec(s)
    }
}

pub fn parse_measure_spec(s: &str) -> Result<MeasureSpec> {
    let bad = |message: String| Error::Measure {
        spec: s.to_string(),
        message,
    };
    let s_trim = s.trim();
    let (head, cutoff) = s_trim
        .rsplit_once('@')
        .ok_or_else(|| bad("missing @CUTOFF".into()))?;
    let cutoff: usize = cutoff
        .parse()
        .ok()
        .filter(|c| *c >= 1)
        .ok_or_else(|| bad(format!("cutoff {cutoff:?} is not a positive integer")))?;

    let (name, options) = match head.split_once('(') {
        None => (head, Vec::new()),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| bad("unclosed option list".into()))?;
            (name, split_options(inner).map_err(bad)?)
        }
    };

    let kind = match name.to_ascii_lowercase().as_str() {
        "peer" => {
            let mut weights = LevelWeights::Uniform;
            let mut rerank = Rerank::Literal;
            let mut df = DfMode::Sample;
            let mut absent = AbsentRule::Renormalize;
            for (k, v) in &options {
                match k.as_str() {
                    "w" => weights = LevelWeights::Explicit(parse_weights(v).map_err(bad)?),
                    "rerank" => {
                        rerank = match v.as_str() {
                            "literal" => Rerank::Literal,
                            "midranks" => Rerank::Midranks,
                            _ => return Err(bad(format!("rerank must be literal or midranks, got {v:?}"))),
                        }
                    }
                    "df" => {
                        df = match v.as_str() {
                            "sample" => DfMode::Sample,
                            "collection" => DfMode::Collection,
                            _ => return Err(bad(format!("df must be sample or collection, got {v:?}"))),
                        }
                    }
                    "absent" => {
                        absent = match v.as_str() {
                            "renorm" => AbsentRule::Renormalize,
                            "one" => AbsentRule::One,
                            _ => return Err(bad(format!("absent must be renorm or one, got {v:?}"))),
                        }
                    }
                    _ => return Err(bad(format!("unknown PEER option {k:?}"))),
                }
            }
            MeasureKind::Peer {
                weights,
                rerank,
                df,
                absent,
            }
        }
        "awrf" => {
            let mut opts = AwrfOptions::default();
            for (k, v) in &options {
                match k.as_str() {
                    "target" => {
                        opts.target = if v == "rel" {
                            Target::RelevantProportion
                        } else {
                            Target::Explicit(parse_target(v).map_err(bad)?)
                        }
                    }
                    "attention" => {
                        opts.attention = match v.as_str() {
                            "log2" => Attention::Log2,
                            _ => {
                                let p = v
                                    .strip_prefix("rbp:")
                                    .and_then(|p| p.parse::<f64>().ok())
                                    .filter(|p| *p > 0.0 && *p < 1.0)
                                    .ok_or_else(|| bad(format!("attention must be log2 or rbp:P with 0<P<1, got {v:?}")))?;
                                Attention::Rbp(p)
                            }
                        }
                    }
                    "dist" => {
                        opts.distance = match v.as_str() {
                            "tv" => Distance::Tv,
                            "jsd" => Distance::Jsd,
                            _ => return Err(bad(format!("dist must be tv or jsd, got {v:?}"))),
                        }
                    }
                    "nonrel" => {
                        opts.keep_nonrelevant = match v.as_str() {
                            "remove" => false,
                            "keep" => true,
                            _ => return Err(bad(format!("nonrel must be remove or keep, got {v:?}"))),
                        }
                    }
                    _ => return Err(bad(format!("unknown AWRF option {k:?}"))),
                }
            }
            MeasureKind::Awrf(opts)
        }
        "adcg" | "alpha-ndcg" => {
            let mut alpha = 0.5;
            for (k, v) in &options {
                match k.as_str() {
                    "alpha" => {
                        alpha = v
                            .parse::<f64>()
                            .ok()
                            .filter(|a| (0.0..=1.0).contains(a))
                            .ok_or_else(|| bad(format!("alpha must be a number in [0, 1], got {v:?}")))?
                    }
                    _ => return Err(bad(format!("unknown aDCG option {k:?}"))),
                }
            }
            MeasureKind::AlphaNdcg { alpha }
        }
        "ndcg" => {
            let mut gain = Gain::Exponential;
            for (k, v) in &options {
                match (k.as_str(), v.as_str()) {
                    ("gain", "exp") => gain = Gain::Exponential,
                    ("gain", "linear") => gain = Gain::Linear,
                    ("gain", _) => return Err(bad(format!("gain must be exp or linear, got {v:?}"))),
                    _ => return Err(bad(format!("unknown nDCG option {k:?}"))),
                }
            }
            MeasureKind::Ndcg { gain }
        }
        "recall" => {
            if let Some((k, _)) = options.first() {
                return Err(bad(format!("Recall takes no options, got {k:?}")));
            }
            MeasureKind::Recall
        }
        _ => return Err(bad(format!("unknown measure {name:?}"))),
    };
    Ok(MeasureSpec { kind, cutoff, options })
}

fn split_options(inner: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for segment in inner.split(',') {
        let segment = segment.trim();
        match segment.split_once('=') {
            Some((k, v)) => {
                let k = k.trim();
                if k.is_empty() {
                    return Err(format!("empty option name in {segment:?}"));
                }
                if out.iter().any(|(existing, _)| existing == k) {
                    return Err(format!("option {k:?} given twice"));
                }
                out.push((k.to_string(), v.trim().to_string()));
            }
            None => match out.last_mut() {
                Some((_, v)) if !segment.is_empty() => {
                    v.push(',');
                    v.push_str(segment);
                }
                _ => return Err(format!("malformed option list {inner:?}")),
            },
        }
    }
    if out.iter().any(|(_, v)| v.is_empty()) {
        return Err("option with empty value".into());
    }
    Ok(out)
}

fn parse_pairs(v: &str) -> Result<Vec<(&str, f64)>, String> {
    v.split(',')
        .map(|pair| {
            let (k, w) = pair
                .split_once(':')
                .ok_or_else(|| format!("expected KEY:VALUE, got {pair:?}"))?;
            let w: f64 = w.parse().map_err(|_| format!("{w:?} is not a number"))?;
            Ok((k, w))
        })
        .collect()
}

fn parse_weights(v: &str) -> Result<BTreeMap<Grade, f64>, String> {
    let mut out = BTreeMap::new();
    for (k, w) in parse_pairs(v)? {
        let grade: Grade = k.parse().map_err(|_| format!("grade {k:?} is not a non-negative integer"))?;
        if !(0.0..=1.0).contains(&w) {
            return Err(format!("weight {w} for grade {grade} is outside [0, 1]"));
        }
        if out.insert(grade, w).is_some() {
            return Err(format!("grade {grade} weighted twice"));
        }
    }
    if out.values().all(|w| *w == 0.0) {
        return Err("all grade weights are zero".into());
    }
    Ok(out)
}

fn parse_target(v: &str) -> Result<TargetDistribution, String> {
    let mut out = BTreeMap::new();
    for (k, p) in parse_pairs(v)? {
        let lang = Language::new(k).map_err(|e| e.to_string())?;
        if out.insert(lang, p).is_some() {
            return Err(format!("language {k:?} listed twice"));
        }
    }
    TargetDistribution::new(out).map_err(|e| e.to_string())
}
