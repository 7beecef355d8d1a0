//! Text key-value format for mixture models.
//!
//! ```text
//! # sentlen walk model
//! order = 1
//! component.0.k = 3
//! component.0.alpha = 1.0000000000000000e0
//! component.0.p[-1] = 5.0000000000000000e-1
//! component.0.p[0] = 2.5000000000000000e-1
//! component.0.p[1] = 2.5000000000000000e-1
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly. Blank lines and `#` comments are ignored; keys may come in
//! any order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sentlen_core::walk::{MixtureModel, StepLaw, WalkComponent, WalkError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("invalid model: {0}")]
    Invalid(#[from] WalkError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// 17 significant digits.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_string(m: &MixtureModel) -> String {
    let mut out = String::from("# sentlen walk model\n");
    let _ = writeln!(out, "id = {}", m.id());
    let _ = writeln!(out, "order = {}", m.order());
    for (j, (c, &alpha)) in m.components().iter().zip(m.weights()).enumerate() {
        let _ = writeln!(out, "component.{j}.k = {}", c.k);
        let _ = writeln!(out, "component.{j}.alpha = {}", real(alpha));
        for (t, &p) in c.steps.probs().iter().enumerate() {
            let _ = writeln!(out, "component.{j}.p[{}] = {}", t as i32 - 1, real(p));
        }
    }
    out
}

pub fn parse(text: &str) -> Result<MixtureModel, ModelFileError> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |reason: &str| ModelFileError::Syntax {
            line: i + 1,
            reason: reason.to_string(),
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| syntax("expected `key = value`"))?;
        let key = k.trim().to_string();
        if kv
            .insert(key.clone(), (i + 1, v.trim().to_string()))
            .is_some()
        {
            return Err(syntax(&format!("duplicate key `{key}`")));
        }
    }

    fn get<'a>(
        kv: &'a BTreeMap<String, (usize, String)>,
        key: &str,
    ) -> Result<&'a (usize, String), ModelFileError> {
        kv.get(key)
            .ok_or_else(|| ModelFileError::Missing(key.to_string()))
    }
    fn num<T: std::str::FromStr>(
        kv: &BTreeMap<String, (usize, String)>,
        key: &str,
    ) -> Result<T, ModelFileError> {
        let (line, v) = get(kv, key)?;
        v.parse().map_err(|_| ModelFileError::Syntax {
            line: *line,
            reason: format!("`{key}` has an unreadable value `{v}`"),
        })
    }

    let order: u8 = num(&kv, "order")?;
    let mut weights = Vec::new();
    let mut components = Vec::new();
    let mut j = 0;
    while kv.contains_key(&format!("component.{j}.k")) {
        let k: u32 = num(&kv, &format!("component.{j}.k"))?;
        weights.push(num::<f64>(&kv, &format!("component.{j}.alpha"))?);
        let probs = (-1..=order as i32)
            .map(|s| num::<f64>(&kv, &format!("component.{j}.p[{s}]")))
            .collect::<Result<Vec<_>, _>>()?;
        components.push(WalkComponent::new(k, StepLaw::new(probs)?)?);
        j += 1;
    }
    if components.is_empty() {
        return Err(ModelFileError::Missing("component.0.k".into()));
    }
    let known = |key: &str| {
        key == "order"
            || key == "id"
            || key
                .strip_prefix("component.")
                .and_then(|rest| rest.split_once('.'))
                .and_then(|(idx, _)| idx.parse::<usize>().ok())
                .is_some_and(|idx| idx < j)
    };
    if let Some((key, (line, _))) = kv.iter().find(|(key, _)| !known(key)) {
        return Err(ModelFileError::Syntax {
            line: *line,
            reason: format!("unknown key `{key}`"),
        });
    }
    Ok(MixtureModel::new(weights, components)?)
}

pub fn read(path: &Path) -> Result<MixtureModel, ModelFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

pub fn write(path: &Path, m: &MixtureModel) -> Result<(), ModelFileError> {
    std::fs::write(path, to_string(m)).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = MixtureModel::new(
            vec![0.25, 0.75],
            vec![
                WalkComponent::new(1, StepLaw::new(vec![0.1, 0.2, 0.7]).unwrap()).unwrap(),
                WalkComponent::new(4, StepLaw::new(vec![0.6, 0.3, 0.1]).unwrap()).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(parse(&to_string(&m)).unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "order = 1\n\ncomponent.0.k = x\n";
        match parse(text) {
            Err(ModelFileError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("order = 1\nbogus\n"),
            Err(ModelFileError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_laws() {
        let good = to_string(&sentlen_core::validation::true_model());
        assert!(parse(&format!("{good}colour = red\n")).is_err());
        let bad = good.replace("p[1] = 2.5", "p[1] = 3.5");
        assert!(matches!(parse(&bad), Err(ModelFileError::Invalid(_))));
    }
}
