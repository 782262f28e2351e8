//! `--game` specifications.

use std::path::Path;

use anyhow::{bail, Context};
use qgame_core::games::{minority_table, prisoners_dilemma_table, PayoffTable};

/// Default dilemma payoffs in `T,R,P,S` order.
pub const PD_DEFAULTS: [f64; 4] = [5.0, 3.0, 1.0, 0.0];

/// `builtin:minority:N`, `builtin:pd[:T,R,P,S]`, or a path to a table file.
pub fn parse_game(spec: &str) -> anyhow::Result<PayoffTable> {
    let Some(rest) = spec.strip_prefix("builtin:") else {
        return PayoffTable::load_file(Path::new(spec))
            .with_context(|| format!("loading game `{spec}`"));
    };
    let (name, args) = rest.split_once(':').unwrap_or((rest, ""));
    match name {
        "minority" => {
            let n: usize = args
                .parse()
                .with_context(|| format!("`{args}` is not a player count in `{spec}`"))?;
            Ok(minority_table(n)?)
        }
        "pd" => {
            let [t, r, p, s] = if args.is_empty() {
                PD_DEFAULTS
            } else {
                let values = args
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .with_context(|| format!("`{v}` is not a number in `{spec}`"))
                    })
                    .collect::<anyhow::Result<Vec<f64>>>()?;
                match values.as_slice() {
                    &[t, r, p, s] => [t, r, p, s],
                    _ => bail!("`{spec}`: expected four payoffs T,R,P,S"),
                }
            };
            Ok(prisoners_dilemma_table(r, s, t, p)?)
        }
        _ => bail!("unknown builtin game `{name}`; use builtin:minority:N or builtin:pd:T,R,P,S"),
    }
}
