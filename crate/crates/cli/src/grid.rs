//! Parsing of grid and lag arguments: `start:stop:step` (inclusive) or a comma list.

use anyhow::{bail, Context, Result};
use otsclust::LagSet;

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().with_context(|| format!("{s:?} is not a number"))
}

/// Real grid. Range points are rounded to 10 decimals so that `1.1:4:0.1`
/// yields 1.1, 1.2, ... rather than accumulated binary error.
pub fn parse_real_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (parse_f64(start)?, parse_f64(stop)?, parse_f64(step)?);
            if !(h > 0.0 && h.is_finite()) || b < a {
                bail!("grid {spec:?} needs start <= stop and a positive step");
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            (0..count).map(|k| ((a + k as f64 * h) * 1e10).round() / 1e10).collect()
        }
        [list] => list.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?,
        _ => bail!("grid {spec:?} must be start:stop:step or a comma list"),
    };
    if grid.is_empty() {
        bail!("grid {spec:?} is empty");
    }
    Ok(grid)
}

pub fn parse_int_grid(spec: &str) -> Result<Vec<usize>> {
    let parse = |s: &str| s.trim().parse::<usize>().with_context(|| format!("{s:?} is not a nonnegative integer"));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (parse(start)?, parse(stop)?, parse(step)?);
            if h == 0 || b < a {
                bail!("grid {spec:?} needs start <= stop and a positive step");
            }
            (a..=b).step_by(h).collect()
        }
        [start, stop] => (parse(start)?..=parse(stop)?).collect(),
        [list] => list.split(',').map(parse).collect::<Result<Vec<_>>>()?,
        _ => bail!("grid {spec:?} must be start:stop[:step] or a comma list"),
    };
    if grid.is_empty() {
        bail!("grid {spec:?} is empty");
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LagMode {
    Auto,
    Fixed(LagSet),
}

pub fn parse_lags(spec: &str) -> Result<LagMode> {
    if spec.trim().eq_ignore_ascii_case("auto") {
        return Ok(LagMode::Auto);
    }
    Ok(LagMode::Fixed(LagSet::new(parse_int_grid(spec)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_ranges_are_inclusive_and_clean() {
        let g = parse_real_grid("1.1:4:0.1").unwrap();
        assert_eq!(g.len(), 30);
        assert_eq!(g[0], 1.1);
        assert_eq!(g[9], 2.0);
        assert_eq!(*g.last().unwrap(), 4.0);
        assert_eq!(parse_real_grid("1.05:4:0.05").unwrap().len(), 60);
        assert_eq!(parse_real_grid("1.2, 1.5,2").unwrap(), vec![1.2, 1.5, 2.0]);
    }

    #[test]
    fn bad_grids() {
        assert!(parse_real_grid("2:1:0.1").is_err());
        assert!(parse_real_grid("1:2:0").is_err());
        assert!(parse_real_grid("1:x:0.1").is_err());
        assert!(parse_int_grid("5:2").is_err());
        assert!(parse_int_grid("a").is_err());
    }

    #[test]
    fn lag_modes() {
        assert_eq!(parse_lags("auto").unwrap(), LagMode::Auto);
        assert_eq!(parse_lags("1,2").unwrap(), LagMode::Fixed(LagSet::new(vec![1, 2]).unwrap()));
        assert_eq!(parse_lags("1:3").unwrap(), LagMode::Fixed(LagSet::up_to(3).unwrap()));
        assert_eq!(parse_int_grid("2:8:3").unwrap(), vec![2, 5, 8]);
        assert!(parse_lags("0,1").is_err());
    }
}
