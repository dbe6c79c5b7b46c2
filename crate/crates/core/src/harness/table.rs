//! Result tables, the fixed CSV schema, the JSON metadata sidecar, and the
//! formula registry used to recompute every stored theory value at load time.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_SCHEMA: &str = "v1";

#[derive(Clone, Debug)]
pub struct ResultRow {
    /// Sweep-variable description, e.g. `state=0.10/rmse-local`.
    pub sweep: String,
    pub empirical: f64,
    pub theory: f64,
    pub stderr: f64,
    pub pass: bool,
    /// Recomputable formula id, `-` when the theory value has no closed form.
    pub formula: String,
}

impl ResultRow {
    pub fn new(
        sweep: impl Into<String>,
        empirical: f64,
        theory: f64,
        stderr: f64,
        pass: bool,
        formula: impl Into<String>,
    ) -> Self {
        ResultRow {
            sweep: sweep.into(),
            empirical,
            theory,
            stderr,
            pass,
            formula: formula.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResultTable {
    pub experiment: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(experiment: impl Into<String>) -> Self {
        ResultTable {
            experiment: experiment.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn n_failed(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    /// Deterministic CSV: fixed header (schema version in the header row),
    /// fixed float formatting, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("schema,sweep,empirical,theory,stderr,pass,formula\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                CSV_SCHEMA,
                r.sweep,
                fmt_f64(r.empirical),
                fmt_f64(r.theory),
                fmt_f64(r.stderr),
                r.pass,
                r.formula
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<ResultTable> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line != "schema,sweep,empirical,theory,stderr,pass,formula" {
                    return Err(Error::Parse {
                        what: "result csv".into(),
                        reason: format!("unexpected header `{line}`"),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 7 {
                return Err(Error::Parse {
                    what: "result csv".into(),
                    reason: format!("row {} has {} fields", i + 1, parts.len()),
                });
            }
            if parts[0] != CSV_SCHEMA {
                return Err(Error::Parse {
                    what: "result csv".into(),
                    reason: format!("unknown schema `{}`", parts[0]),
                });
            }
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Parse {
                    what: format!("result csv row {}", i + 1),
                    reason: format!("bad {what} `{s}`"),
                })
            };
            rows.push(ResultRow {
                sweep: parts[1].to_string(),
                empirical: num(parts[2], "empirical")?,
                theory: num(parts[3], "theory")?,
                stderr: num(parts[4], "stderr")?,
                pass: parts[5] == "true",
                formula: parts[6].to_string(),
            });
        }
        Ok(ResultTable {
            experiment: String::new(),
            rows,
        })
    }

    /// Recomputes every row's theory value from its formula id and checks it
    /// matches the stored value. Guards against drift between the formula
    /// code and the table emission.
    pub fn verify_formulas(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.formula == "-" {
                continue;
            }
            let want = eval_formula(&r.formula)?;
            let tol = 1e-12 * r.theory.abs().max(1.0);
            if (want - r.theory).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "row {} ({}): stored theory {} disagrees with formula {} = {}",
                    i + 1,
                    r.sweep,
                    r.theory,
                    r.formula,
                    want
                )));
            }
        }
        Ok(())
    }
}

fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.12e}")
    }
}

/// Evaluates a formula id of the form `name(a=1,b=2)`.
///
/// Known formulas (all scalars of their named arguments):
/// - `const(v)` — pinned constant
/// - `zero()` — 0
/// - `frac(num,den)` — num/den
/// - `vff(f,d)` — 4(d+1)/(d+2)·f(1−f), single-shot local-estimator MSE
/// - `vstd(f,d)` — 2(d+1)(1+2f)/(d+2) − (1+f)², standard-estimator MSE
/// - `rmse_vff(f,d,n)`, `rmse_vstd(f,d,n)` — √(V/n)
/// - `ghz_inf(n,t,s)` — 1 − fidelity between symmetric GHZ-mixture states
/// - `qfi_fid(f)` — 1/(f(1−f))
/// - `mixed_pauli_cfi(f)` — 2/(1+2f(1−f))
/// - `haar_cfi_bound(d,f)` — 2d/√(1−f)
/// - `pure_ratio_bound(d)` — (d+2)/(4(d+1))
/// - `lowrank_unitary_bound(d,mu,c)` — (d+2)/(d+1)·μc/(2μ+2)
/// - `lowrank_general_bound(d,mu,c)` — (d+2)/(d+1)·μc²/(2μc+5)
/// - `fullrank_wmse_upper(d,r,kappa,m)` — 2(d+1)(1+rκ)m/(d+2)
/// - `fullrank_ratio_bound(d,r,kappa)` — (d+2)/(2(d+1)(1+rκ))
/// - `gm_bound(d)` — d−1
/// - `lowrank_c(q)` — ((1−2q)²−q)/(1−2q)²
/// - `stab_qfim(d)` — 4d/(d+1)
/// - `w_bound(d)` — (d²−1)/4
/// - `noisy_stab_cfim_bound(d,q)` — (d+2)/(d+1)·(1−q)²(1−4q)/(2(2−q))·4d/(d+1)
/// - `ks_threshold(n)` — 2.5/√n
pub fn eval_formula(id: &str) -> Result<f64> {
    let (name, args) = parse_formula(id)?;
    let get = |k: &str| -> Result<f64> {
        args.get(k).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("formula `{id}` missing argument `{k}`"))
        })
    };
    match name.as_str() {
        "const" => get("v"),
        "zero" => Ok(0.0),
        "frac" => Ok(get("num")? / get("den")?),
        "vff" => {
            let (f, d) = (get("f")?, get("d")?);
            Ok(4.0 * (d + 1.0) / (d + 2.0) * f * (1.0 - f))
        }
        "vstd" => {
            let (f, d) = (get("f")?, get("d")?);
            Ok(2.0 * (d + 1.0) * (1.0 + 2.0 * f) / (d + 2.0) - (1.0 + f) * (1.0 + f))
        }
        "rmse_vff" => {
            let (f, d, n) = (get("f")?, get("d")?, get("n")?);
            Ok((4.0 * (d + 1.0) / (d + 2.0) * f * (1.0 - f) / n).sqrt())
        }
        "rmse_vstd" => {
            let (f, d, n) = (get("f")?, get("d")?, get("n")?);
            let v = 2.0 * (d + 1.0) * (1.0 + 2.0 * f) / (d + 2.0) - (1.0 + f) * (1.0 + f);
            Ok((v / n).sqrt())
        }
        "ghz_inf" => {
            let (n, t, s) = (get("n")? as usize, get("t")?, get("s")?);
            let f = crate::states::ghz_fidelity(n, &vec![t; n], &vec![s; n])?;
            Ok(1.0 - f)
        }
        "qfi_fid" => {
            let f = get("f")?;
            Ok(1.0 / (f * (1.0 - f)))
        }
        "mixed_pauli_cfi" => {
            let f = get("f")?;
            Ok(2.0 / (1.0 + 2.0 * f * (1.0 - f)))
        }
        "haar_cfi_bound" => {
            let (d, f) = (get("d")?, get("f")?);
            Ok(2.0 * d / (1.0 - f).sqrt())
        }
        "pure_ratio_bound" => {
            let d = get("d")?;
            Ok((d + 2.0) / (4.0 * (d + 1.0)))
        }
        "lowrank_unitary_bound" => {
            let (d, mu, c) = (get("d")?, get("mu")?, get("c")?);
            Ok((d + 2.0) / (d + 1.0) * mu * c / (2.0 * mu + 2.0))
        }
        "lowrank_general_bound" => {
            let (d, mu, c) = (get("d")?, get("mu")?, get("c")?);
            Ok((d + 2.0) / (d + 1.0) * mu * c * c / (2.0 * mu * c + 5.0))
        }
        "fullrank_wmse_upper" => {
            let (d, r, kappa, m) = (get("d")?, get("r")?, get("kappa")?, get("m")?);
            Ok(2.0 * (d + 1.0) * (1.0 + r * kappa) * m / (d + 2.0))
        }
        "fullrank_ratio_bound" => {
            let (d, r, kappa) = (get("d")?, get("r")?, get("kappa")?);
            Ok((d + 2.0) / (2.0 * (d + 1.0) * (1.0 + r * kappa)))
        }
        "gm_bound" => Ok(get("d")? - 1.0),
        "lowrank_c" => {
            let q = get("q")?;
            let s = (1.0 - 2.0 * q) * (1.0 - 2.0 * q);
            Ok((s - q) / s)
        }
        "stab_qfim" => {
            let d = get("d")?;
            Ok(4.0 * d / (d + 1.0))
        }
        "w_bound" => {
            let d = get("d")?;
            Ok((d * d - 1.0) / 4.0)
        }
        "noisy_stab_cfim_bound" => {
            let (d, q) = (get("d")?, get("q")?);
            Ok((d + 2.0) / (d + 1.0) * (1.0 - q) * (1.0 - q) * (1.0 - 4.0 * q)
                / (2.0 * (2.0 - q))
                * 4.0
                * d
                / (d + 1.0))
        }
        "ks_threshold" => Ok(2.5 / get("n")?.sqrt()),
        other => Err(Error::InvalidArgument(format!("unknown formula `{other}`"))),
    }
}

fn parse_formula(id: &str) -> Result<(String, BTreeMap<String, f64>)> {
    let open = id.find('(').ok_or_else(|| Error::Parse {
        what: "formula".into(),
        reason: format!("`{id}` has no argument list"),
    })?;
    if !id.ends_with(')') {
        return Err(Error::Parse {
            what: "formula".into(),
            reason: format!("`{id}` missing `)`"),
        });
    }
    let name = id[..open].to_string();
    let inner = &id[open + 1..id.len() - 1];
    let mut args = BTreeMap::new();
    if !inner.is_empty() {
        for part in inner.split(';') {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse {
                what: "formula".into(),
                reason: format!("bad argument `{part}` in `{id}`"),
            })?;
            let val: f64 = v.parse().map_err(|_| Error::Parse {
                what: "formula".into(),
                reason: format!("bad number `{v}` in `{id}`"),
            })?;
            args.insert(k.to_string(), val);
        }
    }
    Ok((name, args))
}

/// Builds a formula id string; arguments are `;`-separated so ids survive
/// the comma-separated CSV.
pub fn formula(name: &str, args: &[(&str, f64)]) -> String {
    if args.is_empty() {
        return format!("{name}()");
    }
    let parts: Vec<String> = args.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{name}({})", parts.join(";"))
}

/// Metadata sidecar written next to each result CSV.
#[derive(Serialize, Debug)]
pub struct MetaSidecar {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config_source: String,
    pub config_hash: String,
    pub config_echo: String,
    pub workers: usize,
    pub quick: bool,
    pub subsample: Option<String>,
    pub runtime_seconds: f64,
    pub rows: usize,
    pub failed: usize,
    pub all_pass: bool,
}

impl MetaSidecar {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Parse {
            what: "meta json".into(),
            reason: e.to_string(),
        })?;
        std::fs::write(path, json)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_round_trip() {
        let id = formula("rmse_vff", &[("f", 0.9927207), ("d", 8.0), ("n", 5000.0)]);
        let v = eval_formula(&id).unwrap();
        let want = (4.0 * 9.0 / 10.0 * 0.9927207 * (1.0 - 0.9927207) / 5000.0f64).sqrt();
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn vstd_spec_value() {
        // V_std at f = 1, d = 8 equals 1.4
        let v = eval_formula(&formula("vstd", &[("f", 1.0), ("d", 8.0)])).unwrap();
        assert!((v - 1.4).abs() < 1e-12);
    }

    #[test]
    fn standard_variance_dominates_local_variance() {
        // V_std ≥ V_ff everywhere, equal only at (f = 1/2, d = 2); and
        // V_std(f→1) approaches 2(d−1)/(d+2) while V_ff vanishes
        for d in [2usize, 4, 8, 16] {
            for k in 1..100 {
                let f = k as f64 / 100.0;
                let vff = eval_formula(&formula("vff", &[("f", f), ("d", d as f64)])).unwrap();
                let vstd = eval_formula(&formula("vstd", &[("f", f), ("d", d as f64)])).unwrap();
                assert!(vstd >= vff - 1e-12, "d={d} f={f}: {vstd} < {vff}");
                if d == 2 && (f - 0.5).abs() < 1e-12 {
                    assert!((vstd - vff).abs() < 1e-12, "equality point");
                } else {
                    assert!(vstd > vff, "strict elsewhere (d={d}, f={f})");
                }
            }
            let vstd1 = eval_formula(&formula("vstd", &[("f", 1.0), ("d", d as f64)])).unwrap();
            let limit = 2.0 * (d as f64 - 1.0) / (d as f64 + 2.0);
            assert!((vstd1 - limit).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_and_verification() {
        let mut table = ResultTable::new("test");
        table.push(ResultRow::new(
            "case-a",
            0.667,
            2.0 / 3.0,
            0.0,
            true,
            formula("frac", &[("num", 2.0), ("den", 3.0)]),
        ));
        table.push(ResultRow::new("case-b", 0.1, 0.0, 0.05, true, "zero()"));
        let csv = table.to_csv();
        let back = ResultTable::from_csv(&csv).unwrap();
        assert_eq!(back.rows.len(), 2);
        back.verify_formulas().unwrap();
        // tampering with the theory column is caught
        let mut bad = back.clone();
        bad.rows[0].theory = 0.5;
        assert!(bad.verify_formulas().is_err());
    }

    #[test]
    fn csv_is_deterministic() {
        let mut t = ResultTable::new("x");
        t.push(ResultRow::new("r", 1.0 / 3.0, 0.25, 1e-3, false, "-"));
        assert_eq!(t.to_csv(), t.to_csv());
        assert!(t.to_csv().contains("3.333333333333e-1"));
    }
}
