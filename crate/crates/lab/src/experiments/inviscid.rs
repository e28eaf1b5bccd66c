//! Small-coupling comparison of stationary laws at a fixed cutoff.

use fdnls_core::measure::{inviscid_compare, l2_norms};
use fdnls_core::stochastic::series;

use super::kb::{cell_measure, Cell};
use super::{Context, Outcome};
use crate::config::{ExperimentConfig, Kind};
use crate::error::Result;
use crate::io::{num, Check, Table};

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let cutoff = cfg.physics.cutoff;
    let cells: Vec<Cell> = cfg
        .physics
        .alpha_list
        .iter()
        .enumerate()
        .map(|(i, &alpha)| Cell {
            index: i as u64,
            alpha,
            cutoff,
        })
        .collect();
    let measures = ctx.par_map(cells.clone(), |c| cell_measure(cfg, ctx, c, None))?;
    let hs = series::sobolev(cfg.physics.s_prime);
    let mut out = Outcome::new(Kind::Inviscid);
    let mut table = Table::new("inviscid", &["check", "observable", "alpha_from", "alpha_to", "ks"]);
    for observable in ["l2_norm", series::ENERGY, hs.as_str()] {
        let mut samples = Vec::new();
        for (c, mu) in cells.iter().zip(&measures) {
            let v = if observable == "l2_norm" {
                l2_norms(mu)?
            } else {
                mu.values(observable)?.to_vec()
            };
            samples.push((c.alpha, v));
        }
        let t = inviscid_compare(&samples)?;
        for (i, d) in t.distances.iter().enumerate() {
            table.push(vec![
                "inviscid_cauchy".into(),
                observable.into(),
                num(t.alphas[i]),
                num(t.alphas[i + 1]),
                num(*d),
            ]);
        }
        let last = t.distances.last().copied().unwrap_or(0.0);
        out.summary.checks.push(
            Check::soft("inviscid_cauchy", t.cauchy)
                .estimate(last)
                .note(format!("{observable}: KS distances shrink as alpha decreases")),
        );
    }
    out.tables.push(table);
    Ok(out)
}
