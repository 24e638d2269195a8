use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;

/// One priced (and possibly validated) contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutputRecord {
    pub model: String,
    pub payoff: String,
    #[serde(rename = "K")]
    pub strike: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub price: f64,
    pub error_estimate: f64,
    pub abscissa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_std_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agree: Option<bool>,
}

impl OutputRecord {
    pub fn z_score(&self) -> Option<f64> {
        match (self.mc_mean, self.mc_std_error) {
            (Some(m), Some(se)) if se > 0.0 => Some((self.price - m).abs() / se),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CumulantRecord {
    pub u_re: f64,
    pub u_im: f64,
    pub kappa_re: f64,
    pub kappa_im: f64,
    pub blow_up: bool,
}

#[derive(Serialize)]
struct CsvPriceRow<'a> {
    model: &'a str,
    payoff: &'a str,
    #[serde(rename = "K")]
    strike: f64,
    #[serde(rename = "T")]
    maturity: f64,
    price: f64,
    err: f64,
    abscissa: f64,
    #[serde(rename = "mcMean", skip_serializing_if = "Option::is_none")]
    mc_mean: Option<f64>,
    #[serde(rename = "mcStdError", skip_serializing_if = "Option::is_none")]
    mc_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agree: Option<bool>,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
}

fn jsonl_string<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

pub fn render_prices(records: &[OutputRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => csv_string(records.iter().map(|r| CsvPriceRow {
            model: &r.model,
            payoff: &r.payoff,
            strike: r.strike,
            maturity: r.maturity,
            price: r.price,
            err: r.error_estimate,
            abscissa: r.abscissa,
            mc_mean: r.mc_mean,
            mc_std_error: r.mc_std_error,
            agree: r.agree,
        })),
        OutputFormat::Jsonl => jsonl_string(records),
        OutputFormat::Table => {
            let validated = records.iter().any(|r| r.mc_mean.is_some());
            let mut out = String::new();
            if validated {
                let _ = writeln!(
                    out,
                    "{:<11} {:<18} {:>10} {:>7} {:>14} {:>10} {:>14} {:>11} {:>7} {:>5}",
                    "model", "payoff", "K", "T", "price", "err", "mc", "mc s.e.", "|z|", "ok"
                );
            } else {
                let _ = writeln!(
                    out,
                    "{:<11} {:<18} {:>10} {:>7} {:>14} {:>10} {:>9}",
                    "model", "payoff", "K", "T", "price", "err", "abscissa"
                );
            }
            for r in records {
                if validated {
                    let _ = writeln!(
                        out,
                        "{:<11} {:<18} {:>10.4} {:>7.4} {:>14.8} {:>10.2e} {:>14.8} {:>11.2e} {:>7.2} {:>5}",
                        r.model,
                        r.payoff,
                        r.strike,
                        r.maturity,
                        r.price,
                        r.error_estimate,
                        r.mc_mean.unwrap_or(f64::NAN),
                        r.mc_std_error.unwrap_or(f64::NAN),
                        r.z_score().unwrap_or(f64::NAN),
                        if r.agree == Some(true) { "pass" } else { "FAIL" }
                    );
                } else {
                    let _ = writeln!(
                        out,
                        "{:<11} {:<18} {:>10.4} {:>7.4} {:>14.8} {:>10.2e} {:>9.4}",
                        r.model, r.payoff, r.strike, r.maturity, r.price, r.error_estimate, r.abscissa
                    );
                }
            }
            out
        }
    }
}

pub fn render_cumulants(records: &[CumulantRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => csv_string(records),
        OutputFormat::Jsonl => jsonl_string(records),
        OutputFormat::Table => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{:>12} {:>12} {:>22} {:>22} {:>7}",
                "Re u", "Im u", "Re kappa", "Im kappa", "blowUp"
            );
            for r in records {
                let _ = writeln!(
                    out,
                    "{:>12.6} {:>12.6} {:>22.14e} {:>22.14e} {:>7}",
                    r.u_re, r.u_im, r.kappa_re, r.kappa_im, r.blow_up
                );
            }
            out
        }
    }
}
