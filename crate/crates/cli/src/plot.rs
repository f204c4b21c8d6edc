//! Turn result CSVs into chart series.

use std::collections::BTreeMap;
use std::path::Path;

use crate::svg::{Chart, Series};
use crate::Failure;

/// Columns that identify a curve in the result schemas.
const KEYS: [&str; 7] = ["topology", "algorithm", "b", "N", "N_t", "K", "p_max_dbm"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// Mean tau per outer iteration, from an iterations CSV.
    #[value(aliases = ["fig3", "fig5", "fig7"])]
    Convergence,
    /// Mean tau against the number of transmit antennas, from an aggregate CSV.
    #[value(name = "n-tx", aliases = ["fig4", "fig6"])]
    NTx,
    /// Mean tau against the transmit power, from an aggregate CSV.
    #[value(name = "p-max", aliases = ["fig9"])]
    PMax,
    /// Mean tau against the number of surface elements, from an aggregate CSV.
    #[value(aliases = ["fig8"])]
    Elements,
}

impl PlotKind {
    pub fn file_name(&self) -> &'static str {
        match self {
            PlotKind::Convergence => "convergence.svg",
            PlotKind::NTx => "tau_vs_n_tx.svg",
            PlotKind::PMax => "tau_vs_p_max.svg",
            PlotKind::Elements => "tau_vs_n.svg",
        }
    }

    fn x_column(&self) -> &'static str {
        match self {
            PlotKind::Convergence => "iteration",
            PlotKind::NTx => "N_t",
            PlotKind::PMax => "p_max_dbm",
            PlotKind::Elements => "N",
        }
    }

    fn x_label(&self) -> &'static str {
        match self {
            PlotKind::Convergence => "outer iteration",
            PlotKind::NTx => "transmit antennas N_t",
            PlotKind::PMax => "P_max (dBm)",
            PlotKind::Elements => "elements per surface N",
        }
    }
}

pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table, Failure> {
        let mut r = csv::Reader::from_path(path)
            .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))?;
        let headers = r.headers().map_err(|e| Failure::schema(e.to_string()))?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| Failure::schema(e.to_string()))?;
        Ok(Table { headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize, Failure> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::schema(format!("missing column '{name}'")))
    }

    fn number(&self, row: usize, col: usize) -> Result<f64, Failure> {
        let cell = &self.rows[row][col];
        cell.parse()
            .map_err(|_| Failure::schema(format!("row {}: column '{}' is not a number: '{cell}'", row + 1, self.headers[col])))
    }
}

/// Curve keys with the x column removed; labels list the keys that vary.
fn curve_keys(table: &Table, x: &str) -> Result<Vec<(usize, &'static str)>, Failure> {
    KEYS.iter().filter(|&&k| k != x).map(|&k| table.column(k).map(|c| (c, k))).collect()
}

fn labels(keys: &[(usize, &str)], groups: &BTreeMap<Vec<String>, Vec<(f64, f64)>>) -> Vec<String> {
    let varying: Vec<usize> = (0..keys.len())
        .filter(|&i| {
            let mut vals = groups.keys().map(|k| &k[i]);
            let first = vals.next();
            vals.any(|v| Some(v) != first)
        })
        .collect();
    groups
        .keys()
        .map(|k| {
            let parts: Vec<String> = varying.iter().map(|&i| format!("{}={}", keys[i].1, k[i])).collect();
            if parts.is_empty() { k[1].clone() } else { parts.join(" ") }
        })
        .collect()
}

fn into_chart(kind: PlotKind, keys: &[(usize, &str)], groups: BTreeMap<Vec<String>, Vec<(f64, f64)>>) -> Chart {
    let names = labels(keys, &groups);
    let series = groups
        .into_values()
        .zip(names)
        .map(|(mut points, label)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, points }
        })
        .collect();
    Chart {
        title: format!("max-min SINR vs {}", kind.x_label()),
        x_label: kind.x_label().into(),
        y_label: "mean tau (linear SINR)".into(),
        series,
    }
}

/// Mean extracted tau per iteration and curve. Runs that stopped early keep
/// their last value for the remaining iterations.
fn convergence(table: &Table) -> Result<Chart, Failure> {
    let (it, tau, seed) = (table.column("iteration")?, table.column("tau_extracted")?, table.column("scenario_seed")?);
    let keys = curve_keys(table, "")?;
    let mut runs: BTreeMap<Vec<String>, BTreeMap<String, Vec<(usize, f64)>>> = BTreeMap::new();
    for r in 0..table.rows.len() {
        let key: Vec<String> = keys.iter().map(|&(c, _)| table.rows[r][c].clone()).collect();
        let i = table.number(r, it)? as usize;
        let t = table.number(r, tau)?;
        runs.entry(key).or_default().entry(table.rows[r][seed].clone()).or_default().push((i, t));
    }
    let mut groups = BTreeMap::new();
    for (key, seeds) in runs {
        let last = seeds.values().flat_map(|v| v.iter().map(|p| p.0)).max().unwrap_or(0);
        let mut sums = vec![0.0; last + 1];
        for mut trace in seeds.values().cloned() {
            trace.sort_by_key(|p| p.0);
            let mut cur = f64::NAN;
            let mut idx = 0;
            for (i, slot) in sums.iter_mut().enumerate().skip(1) {
                while idx < trace.len() && trace[idx].0 <= i {
                    cur = trace[idx].1;
                    idx += 1;
                }
                *slot += cur;
            }
        }
        let n = seeds.len() as f64;
        let points = (1..=last).map(|i| (i as f64, sums[i] / n)).collect();
        groups.insert(key, points);
    }
    Ok(into_chart(PlotKind::Convergence, &keys, groups))
}

fn trend(table: &Table, kind: PlotKind) -> Result<Chart, Failure> {
    let x = table.column(kind.x_column())?;
    let y = table.column("mean")?;
    let keys = curve_keys(table, kind.x_column())?;
    let mut groups: BTreeMap<Vec<String>, Vec<(f64, f64)>> = BTreeMap::new();
    for r in 0..table.rows.len() {
        let key: Vec<String> = keys.iter().map(|&(c, _)| table.rows[r][c].clone()).collect();
        groups.entry(key).or_default().push((table.number(r, x)?, table.number(r, y)?));
    }
    Ok(into_chart(kind, &keys, groups))
}

pub fn chart(table: &Table, kind: PlotKind) -> Result<Chart, Failure> {
    match kind {
        PlotKind::Convergence => convergence(table),
        _ => trend(table, kind),
    }
}

/// Plot kind suggested by the sweep axes, if one of them is a trend axis.
pub fn kind_for_axes(axes: &[String]) -> Option<PlotKind> {
    axes.iter().find_map(|a| match a.as_str() {
        "n_tx_antennas" => Some(PlotKind::NTx),
        "p_max" | "p_max_dbm" => Some(PlotKind::PMax),
        "n_ris_elements" | "n_ris_elements_y" => Some(PlotKind::Elements),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        let mut lines = text.lines();
        let headers = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Table { headers, rows }
    }

    const ITER: &str = "topology,algorithm,b,N,N_t,K,p_max_dbm,scenario_seed,iteration,tau_extracted,tau_lifted";

    #[test]
    fn convergence_carries_final_values_forward() {
        let t = table(&format!(
            "{ITER}\ndual,gs,1,16,6,4,30,1,1,0.2,0.2\ndual,gs,1,16,6,4,30,1,2,0.4,0.4\ndual,gs,1,16,6,4,30,2,1,0.6,0.6\n\
             dual,gs,2,16,6,4,30,1,1,0.5,0.5"
        ));
        let c = chart(&t, PlotKind::Convergence).unwrap();
        assert_eq!(c.series.len(), 2);
        assert_eq!(c.series[0].label, "b=1");
        assert_eq!(c.series[0].points, vec![(1.0, 0.4), (2.0, 0.5)]);
        assert_eq!(c.series[1].points, vec![(1.0, 0.5)]);
    }

    #[test]
    fn trend_groups_by_the_other_keys() {
        let t = table(
            "topology,algorithm,b,N,N_t,K,p_max_dbm,runs,mean,median,p10,p90\n\
             dual,gs,1,16,8,4,30,2,0.5,0,0,0\ndual,gs,1,16,6,4,30,2,0.3,0,0,0\ndual,continuous,1,16,6,4,30,2,0.4,0,0,0",
        );
        let c = chart(&t, PlotKind::NTx).unwrap();
        assert_eq!(c.series.len(), 2);
        assert_eq!(c.series[1].label, "algorithm=gs");
        assert_eq!(c.series[1].points, vec![(6.0, 0.3), (8.0, 0.5)]);
    }

    #[test]
    fn missing_columns_are_named() {
        let t = table("topology,algorithm,b,N,K,p_max_dbm,mean\ndual,gs,1,16,4,30,0.5");
        let err = chart(&t, PlotKind::PMax).err().unwrap();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("'N_t'"), "{}", err.message);
    }

    #[test]
    fn axes_select_a_kind() {
        assert_eq!(kind_for_axes(&["algorithm".into(), "p_max_dbm".into()]), Some(PlotKind::PMax));
        assert_eq!(kind_for_axes(&["bits".into()]), None);
    }
}
