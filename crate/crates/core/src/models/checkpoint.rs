//! Checkpoint serialization.
//!
//! Recurrent models use a line-oriented text format with an explicit magic
//! string and version:
//!
//! ```text
//! pcrnn-checkpoint v1
//! family = pcrnn
//! input_size = 4
//! hidden_size = 16
//! lags = 5
//! feature_mean = <4 values>
//! feature_std = <4 values>
//! lambda = <3 values>          (pcrnn only)
//! params = <count>
//! <one parameter per line>
//! ```
//!
//! Floats are written in shortest round-trip form, so save/load is exact and
//! byte-deterministic. Linear models serialize as CSV
//! (`name,lag,feature,value` rows holding the intercept, the coefficient
//! matrix, and its shape).

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::data::{StandardizationStats, FEATURE_COUNT};
use crate::nn::ParamLayout;
use crate::num::Real;

use super::linear::LINEAR_FEATURES;
use super::recurrent::LAMBDA_COUNT;
use super::{LinearModel, ModelFamily, PcRnnModel, RnnModel, TrainedModel};

const MAGIC: &str = "pcrnn-checkpoint v1";
const LINEAR_HEADER: &str = "name,lag,feature,value";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint: expected `{MAGIC}` or a `{LINEAR_HEADER}` CSV")]
    BadMagic,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// Serializes any trained model to a string.
pub fn checkpoint_to_string<S: Real>(model: &TrainedModel<S>) -> String {
    match model {
        TrainedModel::Linear(m) => linear_to_csv(m),
        TrainedModel::Rnn(m) => recurrent_to_text(ModelFamily::Rnn, m, None),
        TrainedModel::PcRnn(m) => recurrent_to_text(ModelFamily::PcRnn, &m.rnn, Some(&m.lambda)),
    }
}

pub fn save_checkpoint<S: Real>(
    model: &TrainedModel<S>,
    path: &Path,
) -> Result<(), CheckpointError> {
    Ok(std::fs::write(path, checkpoint_to_string(model))?)
}

pub fn load_checkpoint<S: Real>(path: &Path) -> Result<TrainedModel<S>, CheckpointError> {
    let text = std::fs::read_to_string(path)?;
    checkpoint_from_str(&text)
}

/// Parses a checkpoint, sniffing the family from the first line.
pub fn checkpoint_from_str<S: Real>(text: &str) -> Result<TrainedModel<S>, CheckpointError> {
    let first = text.lines().next().unwrap_or("").trim_end_matches('\r');
    if first == MAGIC {
        recurrent_from_text(text)
    } else if first == LINEAR_HEADER {
        linear_from_csv(text)
    } else {
        Err(CheckpointError::BadMagic)
    }
}

fn recurrent_to_text<S: Real>(
    family: ModelFamily,
    model: &RnnModel<S>,
    lambda: Option<&[S; LAMBDA_COUNT]>,
) -> String {
    let layout = model.layout();
    let flat = layout
        .flatten(&model.lstm, &model.head, &[])
        .expect("model shapes are internally consistent");
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "family = {family}");
    let _ = writeln!(out, "input_size = {}", model.lstm.input_size);
    let _ = writeln!(out, "hidden_size = {}", model.lstm.hidden_size);
    let _ = writeln!(out, "lags = {}", model.lags);
    let _ = writeln!(out, "feature_mean = {}", join_values(&model.stats.mean));
    let _ = writeln!(out, "feature_std = {}", join_values(&model.stats.std));
    if let Some(lambda) = lambda {
        let _ = writeln!(out, "lambda = {}", join_values(lambda));
    }
    let _ = writeln!(out, "params = {}", flat.len());
    for v in &flat {
        let _ = writeln!(out, "{v}");
    }
    out
}

fn join_values<S: Real>(values: &[S]) -> String {
    values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}

fn recurrent_from_text<S: Real>(text: &str) -> Result<TrainedModel<S>, CheckpointError> {
    let corrupt = |msg: &str| CheckpointError::Corrupt(msg.to_string());
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    lines.next(); // magic, already checked

    let mut family = None;
    let mut input_size = None;
    let mut hidden_size = None;
    let mut lags = None;
    let mut mean = None;
    let mut std = None;
    let mut lambda: Option<Vec<S>> = None;
    let mut param_count = None;

    for line in lines.by_ref() {
        let Some((key, value)) = line.split_once(" = ") else {
            return Err(corrupt(&format!("expected `key = value`, got `{line}`")));
        };
        match key {
            "family" => family = Some(value.parse::<ModelFamily>().map_err(|e| corrupt(&e))?),
            "input_size" => input_size = Some(parse_usize(value)?),
            "hidden_size" => hidden_size = Some(parse_usize(value)?),
            "lags" => lags = Some(parse_usize(value)?),
            "feature_mean" => mean = Some(parse_values::<S>(value)?),
            "feature_std" => std = Some(parse_values::<S>(value)?),
            "lambda" => lambda = Some(parse_values::<S>(value)?),
            "params" => {
                param_count = Some(parse_usize(value)?);
                break;
            }
            other => return Err(corrupt(&format!("unknown key `{other}`"))),
        }
    }

    let family = family.ok_or_else(|| corrupt("missing family"))?;
    let input_size = input_size.ok_or_else(|| corrupt("missing input_size"))?;
    let hidden_size = hidden_size.ok_or_else(|| corrupt("missing hidden_size"))?;
    let lags = lags.ok_or_else(|| corrupt("missing lags"))?;
    let mean = mean.ok_or_else(|| corrupt("missing feature_mean"))?;
    let std = std.ok_or_else(|| corrupt("missing feature_std"))?;
    let param_count = param_count.ok_or_else(|| corrupt("missing params"))?;
    if mean.len() != FEATURE_COUNT || std.len() != FEATURE_COUNT {
        return Err(corrupt("feature statistics must hold 4 values"));
    }

    let mut flat = Vec::with_capacity(param_count);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        flat.push(parse_value::<S>(line)?);
    }
    if flat.len() != param_count {
        return Err(corrupt(&format!("expected {param_count} parameters, got {}", flat.len())));
    }

    let layout = ParamLayout::new(input_size, hidden_size, 0);
    let (lstm, head, _) = layout
        .unflatten(&flat)
        .map_err(|e| corrupt(&format!("parameter vector does not match layout: {e}")))?;
    let stats = StandardizationStats {
        mean: to_array(&mean)?,
        std: to_array(&std)?,
    };
    let rnn = RnnModel { lstm, head, stats, lags };
    match family {
        ModelFamily::Rnn => Ok(TrainedModel::Rnn(rnn)),
        ModelFamily::PcRnn => {
            let lambda = lambda.ok_or_else(|| corrupt("pcrnn checkpoint missing lambda"))?;
            if lambda.len() != LAMBDA_COUNT {
                return Err(corrupt("lambda must hold 3 values"));
            }
            Ok(TrainedModel::PcRnn(PcRnnModel { rnn, lambda: [lambda[0], lambda[1], lambda[2]] }))
        }
        ModelFamily::Linear => Err(corrupt("linear models use the CSV checkpoint format")),
    }
}

fn to_array<S: Real>(values: &[S]) -> Result<[S; FEATURE_COUNT], CheckpointError> {
    values
        .try_into()
        .map_err(|_| CheckpointError::Corrupt("bad feature statistics length".into()))
}

fn parse_usize(s: &str) -> Result<usize, CheckpointError> {
    s.parse().map_err(|_| CheckpointError::Corrupt(format!("bad integer `{s}`")))
}

fn parse_value<S: Real>(s: &str) -> Result<S, CheckpointError> {
    let v: f64 = s.parse().map_err(|_| CheckpointError::Corrupt(format!("bad number `{s}`")))?;
    S::from_f64(v).ok_or_else(|| CheckpointError::Corrupt(format!("unrepresentable number `{s}`")))
}

fn parse_values<S: Real>(s: &str) -> Result<Vec<S>, CheckpointError> {
    s.split_whitespace().map(parse_value).collect()
}

fn linear_to_csv<S: Real>(model: &LinearModel<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{LINEAR_HEADER}\r");
    let _ = writeln!(out, "lags,,,{}\r", model.lags);
    let _ = writeln!(out, "features,,,{LINEAR_FEATURES}\r");
    let _ = writeln!(out, "intercept,,,{}\r", model.intercept);
    for lag in 0..=model.lags {
        for f in 0..LINEAR_FEATURES {
            let _ = writeln!(out, "coef,{lag},{f},{}\r", model.coefficient(lag, f));
        }
    }
    out
}

fn linear_from_csv<S: Real>(text: &str) -> Result<TrainedModel<S>, CheckpointError> {
    let corrupt = |msg: String| CheckpointError::Corrupt(msg);
    let mut lags = None;
    let mut intercept = None;
    let mut coefs: Vec<(usize, usize, S)> = Vec::new();
    for line in text.lines().skip(1) {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(corrupt(format!("expected 4 fields in `{line}`")));
        }
        match fields[0] {
            "lags" => lags = Some(parse_usize(fields[3])?),
            "features" => {
                if parse_usize(fields[3])? != LINEAR_FEATURES {
                    return Err(corrupt("unsupported feature count".into()));
                }
            }
            "intercept" => intercept = Some(parse_value::<S>(fields[3])?),
            "coef" => coefs.push((
                parse_usize(fields[1])?,
                parse_usize(fields[2])?,
                parse_value::<S>(fields[3])?,
            )),
            other => return Err(corrupt(format!("unknown row `{other}`"))),
        }
    }
    let lags = lags.ok_or_else(|| corrupt("missing lags row".into()))?;
    let intercept = intercept.ok_or_else(|| corrupt("missing intercept row".into()))?;
    let mut coefficients = vec![S::zero(); (lags + 1) * LINEAR_FEATURES];
    if coefs.len() != coefficients.len() {
        return Err(corrupt(format!(
            "expected {} coefficient rows, got {}",
            coefficients.len(),
            coefs.len()
        )));
    }
    for (lag, f, v) in coefs {
        let idx = lag * LINEAR_FEATURES + f;
        if idx >= coefficients.len() {
            return Err(corrupt(format!("coefficient index ({lag}, {f}) out of range")));
        }
        coefficients[idx] = v;
    }
    Ok(TrainedModel::Linear(LinearModel { intercept, coefficients, lags }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init_params;
    use crate::rng::chacha;
    use rand::Rng;

    fn sample_rnn(seed: u64) -> RnnModel<f64> {
        let (lstm, head) = init_params(seed, 4, 16);
        RnnModel {
            lstm,
            head,
            stats: StandardizationStats {
                mean: [9.1, 1.8, 310.0, 31.5],
                std: [4.2, 0.7, 280.0, 5.5],
            },
            lags: 5,
        }
    }

    #[test]
    fn rnn_checkpoint_roundtrips_exactly() {
        let model = TrainedModel::Rnn(sample_rnn(1));
        let text = checkpoint_to_string(&model);
        assert!(text.starts_with(MAGIC));
        let back = checkpoint_from_str::<f64>(&text).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn pcrnn_checkpoint_roundtrips_exactly() {
        let mut rng = chacha(9);
        let model = TrainedModel::PcRnn(PcRnnModel {
            rnn: sample_rnn(2),
            lambda: [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)],
        });
        let text = checkpoint_to_string(&model);
        let back = checkpoint_from_str::<f64>(&text).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn linear_checkpoint_roundtrips_exactly() {
        let mut rng = chacha(3);
        let model = TrainedModel::Linear(LinearModel {
            intercept: rng.gen_range(-10.0..10.0),
            coefficients: (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            lags: 5,
        });
        let text = checkpoint_to_string(&model);
        assert!(text.starts_with(LINEAR_HEADER));
        let back = checkpoint_from_str::<f64>(&text).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(matches!(checkpoint_from_str::<f64>("hello\n"), Err(CheckpointError::BadMagic)));
        let truncated = format!("{MAGIC}\nfamily = rnn\n");
        assert!(matches!(
            checkpoint_from_str::<f64>(&truncated),
            Err(CheckpointError::Corrupt(_))
        ));
    }

    #[test]
    fn serialization_is_deterministic() {
        let model = TrainedModel::Rnn(sample_rnn(4));
        assert_eq!(checkpoint_to_string(&model), checkpoint_to_string(&model));
    }
}
