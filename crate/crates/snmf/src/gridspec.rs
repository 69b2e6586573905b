//! Parser for the CLI grid spec string.
//!
//! Two forms are accepted:
//!   * a bare value list `{0,0.001,0.01,0.1}`, applied to alpha, beta and
//!     gamma simultaneously with the rank fixed by the caller;
//!   * semicolon-separated clauses `alpha=1e-2..1e2:log10;beta={0,0.1};
//!     gamma=0.01;rank=50..150:10`, where `a..b:log10` steps by factors of
//!     ten and `a..b:N` steps arithmetically by N.

use crate::error::{Result, SnmfError};
use crate::evaluation::CvGrid;

pub fn parse_grid(spec: &str, default_rank: usize, folds: usize) -> Result<CvGrid> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(SnmfError::GridParse("empty grid spec".into()));
    }
    if spec.starts_with('{') {
        let values = parse_list(spec)?;
        return Ok(CvGrid {
            alphas: values.clone(),
            betas: values.clone(),
            gammas: values,
            ranks: vec![default_rank],
            folds,
        });
    }
    let mut alphas = None;
    let mut betas = None;
    let mut gammas = None;
    let mut ranks = None;
    for clause in spec.split(';') {
        let clause = clause.trim();
        if clause.is_empty() {
            continue;
        }
        let (name, value) = clause.split_once('=').ok_or_else(|| {
            SnmfError::GridParse(format!("clause {clause:?} is missing `=`"))
        })?;
        match name.trim() {
            "alpha" => alphas = Some(parse_values(value)?),
            "beta" => betas = Some(parse_values(value)?),
            "gamma" => gammas = Some(parse_values(value)?),
            "rank" => {
                let vals = parse_values(value)?;
                let mut rs = Vec::with_capacity(vals.len());
                for v in vals {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(SnmfError::GridParse(format!(
                            "rank values must be positive integers, got {v}"
                        )));
                    }
                    rs.push(v as usize);
                }
                ranks = Some(rs);
            }
            other => {
                return Err(SnmfError::GridParse(format!("unknown grid name {other:?}")));
            }
        }
    }
    Ok(CvGrid {
        alphas: alphas.unwrap_or_else(|| vec![0.0]),
        betas: betas.unwrap_or_else(|| vec![0.0]),
        gammas: gammas.unwrap_or_else(|| vec![0.0]),
        ranks: ranks.unwrap_or_else(|| vec![default_rank]),
        folds,
    })
}

fn parse_values(value: &str) -> Result<Vec<f64>> {
    let value = value.trim();
    if value.starts_with('{') {
        return parse_list(value);
    }
    if let Some((range, step)) = value.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(|| {
            SnmfError::GridParse(format!("range {range:?} is missing `..`"))
        })?;
        let lo = parse_number(lo)?;
        let hi = parse_number(hi)?;
        if hi < lo {
            return Err(SnmfError::GridParse(format!(
                "range upper bound {hi} below lower bound {lo}"
            )));
        }
        let step = step.trim();
        let mut out = Vec::new();
        if step == "log10" {
            if lo <= 0.0 {
                return Err(SnmfError::GridParse(
                    "log10 ranges need a positive lower bound".into(),
                ));
            }
            let mut v = lo;
            while v <= hi * (1.0 + 1e-12) {
                out.push(v);
                v *= 10.0;
            }
        } else {
            let inc = parse_number(step)?;
            if inc <= 0.0 {
                return Err(SnmfError::GridParse(format!("step must be > 0, got {inc}")));
            }
            let mut v = lo;
            while v <= hi + 1e-12 * inc {
                out.push(v);
                v += inc;
            }
        }
        return Ok(out);
    }
    Ok(vec![parse_number(value)?])
}

fn parse_list(value: &str) -> Result<Vec<f64>> {
    let inner = value
        .trim()
        .strip_prefix('{')
        .and_then(|v| v.strip_suffix('}'))
        .ok_or_else(|| SnmfError::GridParse(format!("malformed list {value:?}")))?;
    let mut out = Vec::new();
    for field in inner.split(',') {
        out.push(parse_number(field)?);
    }
    if out.is_empty() {
        return Err(SnmfError::GridParse("empty value list".into()));
    }
    Ok(out)
}

fn parse_number(text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| SnmfError::GridParse(format!("not a number: {:?}", text.trim())))?;
    if !v.is_finite() {
        return Err(SnmfError::GridParse(format!("non-finite value {v}")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_list_applies_to_all_three() {
        let g = parse_grid("{0,0.001,0.01,0.1}", 2, 5).unwrap();
        assert_eq!(g.alphas, vec![0.0, 0.001, 0.01, 0.1]);
        assert_eq!(g.betas, g.alphas);
        assert_eq!(g.gammas, g.alphas);
        assert_eq!(g.ranks, vec![2]);
        assert_eq!(g.cells().len(), 64);
    }

    #[test]
    fn log_range_and_rank_range() {
        let g = parse_grid(
            "alpha=1e-2..1e2:log10;beta=1e-2..1e2:log10;gamma=1e-2..1e2:log10;rank=50..150:10",
            2,
            5,
        )
        .unwrap();
        assert_eq!(g.alphas.len(), 5);
        assert!((g.alphas[0] - 0.01).abs() < 1e-15);
        assert!((g.alphas[4] - 100.0).abs() < 1e-10);
        assert_eq!(g.ranks, vec![50, 60, 70, 80, 90, 100, 110, 120, 130, 140, 150]);
    }

    #[test]
    fn single_values_and_defaults() {
        let g = parse_grid("alpha=0.5", 3, 4).unwrap();
        assert_eq!(g.alphas, vec![0.5]);
        assert_eq!(g.betas, vec![0.0]);
        assert_eq!(g.ranks, vec![3]);
        assert_eq!(g.folds, 4);
    }

    #[test]
    fn malformed_specs_rejected() {
        for bad in ["", "alpha", "alpha=1..x:2", "alpha=2..1:1", "rank=1.5", "zeta=1"] {
            assert!(
                matches!(parse_grid(bad, 2, 5), Err(SnmfError::GridParse(_))),
                "{bad:?} should fail"
            );
        }
    }
}
