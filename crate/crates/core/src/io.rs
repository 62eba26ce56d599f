//! JSON serialization of instances.
//!
//! ```json
//! {"params": {"v": 2, "m": 1, "s": 2, "L": 1, "nc": 2, "seed": 0},
//!  "rules": [[[[0, 1]], [[1, 1]]]]}
//! ```
//!
//! `rules[l][α]` lists the `m` tuples of symbol `α` at level `l + 1`. Loading
//! re-validates every structural invariant.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RhmError};
use crate::instance::RhmInstance;
use crate::params::ModelParams;
use crate::rule::CompositionRule;
use crate::tuple;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    params: ModelParams,
    rules: Vec<Vec<Vec<Vec<usize>>>>,
}

pub fn instance_to_json(instance: &RhmInstance) -> String {
    let p = instance.params();
    let rules = instance
        .rules()
        .iter()
        .map(|r| {
            r.forward()
                .iter()
                .map(|list| list.iter().map(|&c| tuple::decode(c, p.v, p.s)).collect())
                .collect()
        })
        .collect();
    let file = InstanceFile { params: *p, rules };
    serde_json::to_string(&file).expect("instance serialization cannot fail")
}

pub fn instance_from_json(text: &str) -> Result<RhmInstance> {
    let file: InstanceFile = serde_json::from_str(text)?;
    let p = file.params;
    p.validate()?;
    if file.rules.len() != p.depth {
        return Err(invalid(format!("expected {} rule levels, found {}", p.depth, file.rules.len())));
    }
    let rules = file
        .rules
        .into_iter()
        .enumerate()
        .map(|(i, lists)| {
            let level = i + 1;
            if lists.len() != p.domain_size(level) {
                return Err(invalid(format!(
                    "level {level}: expected {} symbols, found {}",
                    p.domain_size(level),
                    lists.len()
                )));
            }
            let forward = lists
                .into_iter()
                .map(|tuples| {
                    if tuples.len() != p.m {
                        return Err(invalid(format!("level {level}: expected {} tuples per symbol", p.m)));
                    }
                    tuples
                        .into_iter()
                        .map(|t| {
                            if t.len() != p.s || t.iter().any(|&x| x >= p.v) {
                                Err(invalid(format!("level {level}: malformed tuple {t:?}")))
                            } else {
                                Ok(tuple::encode(&t, p.v))
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            CompositionRule::from_forward(level, p.v, p.s, forward)
        })
        .collect::<Result<Vec<_>>>()?;
    RhmInstance::from_rules(p, rules)
}

pub fn save_instance(instance: &RhmInstance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_json(instance))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<RhmInstance> {
    instance_from_json(&std::fs::read_to_string(path)?)
}

fn invalid(detail: String) -> RhmError {
    RhmError::Parse { what: "instance", detail }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let inst = RhmInstance::build(ModelParams::new(4, 3, 2, 3, 2, 17)).unwrap();
        let back = instance_from_json(&instance_to_json(&inst)).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn documented_example_loads() {
        let text = r#"{"params": {"v": 2, "m": 1, "s": 2, "L": 1, "nc": 2, "seed": 0},
                       "rules": [[[[0, 1]], [[1, 1]]]]}"#;
        let inst = instance_from_json(text).unwrap();
        assert_eq!(inst.rule(1).symbol_of(3), Some(1));
    }

    #[test]
    fn rejects_inconsistent_files() {
        for bad in [
            r#"{"params": {"v": 2, "m": 1, "s": 2, "L": 1, "nc": 2}, "rules": [[[[0, 1]], [[0, 1]]]]}"#,
            r#"{"params": {"v": 2, "m": 1, "s": 2, "L": 1, "nc": 2}, "rules": [[[[0, 2]], [[1, 1]]]]}"#,
            r#"{"params": {"v": 2, "m": 1, "s": 2, "L": 1, "nc": 2}, "rules": [[[[0, 1, 1]], [[1, 1]]]]}"#,
            r#"{"params": {"v": 2, "m": 1, "s": 2, "L": 2, "nc": 2}, "rules": [[[[0, 1]], [[1, 1]]]]}"#,
            r#"{"params": {"v": 2, "m": 3, "s": 2, "L": 1, "nc": 2}, "rules": []}"#,
            r#"{"params": 3}"#,
            "",
        ] {
            assert!(instance_from_json(bad).is_err(), "{bad}");
        }
    }
}
