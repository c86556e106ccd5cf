use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::accounting::MessageAccounting;
use super::forgery::ForgeryEstimate;
use super::oracle::{OracleReport, PropertyReport};
use super::StatsSummary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Parse(format!(
                "unknown format {other:?}, expected json or csv"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// Flat rows for CSV output.
pub trait Tabular {
    fn header() -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

fn f(x: f64) -> String {
    format!("{x:.6e}")
}

impl Tabular for StatsSummary {
    fn header() -> Vec<&'static str> {
        vec![
            "scenario",
            "n",
            "m",
            "trials",
            "errors",
            "consistency",
            "validity",
            "order_followed",
            "forgery_trials",
            "forgery_passes",
            "unexplained_validity_failures",
            "consistency_lower",
            "consistency_upper",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let c = &self.counts;
        let est = self.estimates.iter().find(|e| e.name == "consistency");
        vec![vec![
            self.scenario.clone(),
            self.n.to_string(),
            self.m.to_string(),
            c.trials.to_string(),
            c.errors.to_string(),
            c.consistency.to_string(),
            c.validity.to_string(),
            c.order_followed.to_string(),
            c.forgery_trials.to_string(),
            c.forgery_passes.to_string(),
            c.unexplained_validity_failures.to_string(),
            est.map_or_else(String::new, |e| f(e.lower)),
            est.map_or_else(String::new, |e| f(e.upper)),
        ]]
    }
}

impl Tabular for ForgeryEstimate {
    fn header() -> Vec<&'static str> {
        vec![
            "m",
            "exact",
            "exact_value",
            "trials",
            "controlled_passes",
            "controlled_rate",
            "controlled_lower",
            "controlled_upper",
            "unconditioned_passes",
            "unconditioned_rate",
            "unconditioned_lower",
            "unconditioned_upper",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let (c, u) = (&self.controlled, &self.unconditioned);
        vec![vec![
            self.m.to_string(),
            self.exact.clone(),
            c.exact.map_or_else(String::new, f),
            c.trials.to_string(),
            c.successes.to_string(),
            f(c.point),
            f(c.lower),
            f(c.upper),
            u.successes.to_string(),
            f(u.point),
            f(u.lower),
            f(u.upper),
        ]]
    }
}

impl Tabular for MessageAccounting {
    fn header() -> Vec<&'static str> {
        vec![
            "n",
            "m",
            "round",
            "messages",
            "symbols",
            "wire_bits",
            "epr_pairs",
            "plus_qubits",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rounds
            .iter()
            .map(|r| {
                vec![
                    self.n.to_string(),
                    self.m.to_string(),
                    r.round.to_string(),
                    r.messages.to_string(),
                    r.symbols.to_string(),
                    r.wire_bits.to_string(),
                    self.qubits.epr_pairs.to_string(),
                    self.qubits.plus_qubits.to_string(),
                ]
            })
            .collect()
    }
}

impl Tabular for OracleReport {
    fn header() -> Vec<&'static str> {
        vec![
            "n",
            "m",
            "draws",
            "categories",
            "statistic",
            "dof",
            "p_value",
            "alpha",
            "rejected",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.n.to_string(),
            self.m.to_string(),
            self.draws.to_string(),
            self.occupied_categories.to_string(),
            f(self.chi_square.statistic),
            self.chi_square.dof.to_string(),
            f(self.chi_square.p_value),
            self.alpha.to_string(),
            self.rejected.to_string(),
        ]]
    }
}

impl Tabular for PropertyReport {
    fn header() -> Vec<&'static str> {
        vec![
            "n",
            "m",
            "samples",
            "positions",
            "anti_correlation_violations",
            "tuple_differentiation_violations",
            "vectors",
            "vectors_within",
            "sigmas",
        ]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![
            self.n.to_string(),
            self.m.to_string(),
            self.samples.to_string(),
            self.positions_checked.to_string(),
            self.anti_correlation_violations.to_string(),
            self.tuple_differentiation_violations.to_string(),
            self.vectors.to_string(),
            self.vectors_within.to_string(),
            self.sigmas.to_string(),
        ]]
    }
}

/// Writes `items` as one pretty JSON array or as CSV with a header row.
pub fn write_report<T: Serialize + Tabular, W: Write>(
    items: &[T],
    format: Format,
    out: W,
) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, items)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(T::header()).map_err(csv_err)?;
            for item in items {
                for row in item.rows() {
                    w.write_record(&row).map_err(csv_err)?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{message_accounting, simulate, Scenario};
    use crate::registers::ProtocolConfig;

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn accounting_csv() {
        let o = simulate(
            &ProtocolConfig::new(3, 4, 0).unwrap(),
            &Scenario::all_loyal(3, true),
            0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_report(&[message_accounting(&o)], Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "n,m,round,messages,symbols,wire_bits,epr_pairs,plus_qubits\n3,4,1,2,16,32,8,8\n3,4,2,2,16,32,8,8\n3,4,3,0,0,0,8,8\n");
        let mut buf = Vec::new();
        write_report(&[message_accounting(&o)], Format::Json, &mut buf).unwrap();
        let back: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back[0]["rounds"][1]["messages"], 2);
    }
}
