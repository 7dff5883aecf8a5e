//! Value parsers for command-line arguments.

use num_rational::Ratio;
use reanalysis_core::extrapolation::RegionCounts;

/// A number given as a decimal or an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prob(pub f64);

pub fn parse_number(s: &str) -> Result<Prob, String> {
    let s = s.trim();
    let value = if s.contains('/') {
        let r: Ratio<i64> = s.parse().map_err(|_| format!("'{s}' is not a fraction a/b"))?;
        if *r.denom() == 0 {
            return Err(format!("'{s}' has a zero denominator"));
        }
        *r.numer() as f64 / *r.denom() as f64
    } else {
        s.parse::<f64>().map_err(|_| format!("'{s}' is not a number"))?
    };
    if !value.is_finite() || value < 0.0 {
        return Err(format!("'{s}' must be finite and nonnegative"));
    }
    Ok(Prob(value))
}

pub fn parse_prob(s: &str) -> Result<Prob, String> {
    let p = parse_number(s)?;
    if p.0 > 1.0 {
        return Err(format!("'{s}' is not a probability"));
    }
    Ok(p)
}

/// Comma-separated numbers, kept as one argument value.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

pub fn parse_list(s: &str) -> Result<FloatList, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number")))
        .collect::<Result<_, _>>()
        .map(FloatList)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinArg {
    pub n: u64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn parse_bin(s: &str) -> Result<BinArg, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, mean, lo, hi] = parts.as_slice() else {
        return Err(format!("expected n,mean,ci_low,ci_high, got '{s}'"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
    Ok(BinArg {
        n: n.parse().map_err(|_| format!("'{n}' is not a count"))?,
        mean: num(mean)?,
        ci_low: num(lo)?,
        ci_high: num(hi)?,
    })
}

/// `deaths,confirmed[,true_infections]` inline, otherwise a JSON file path.
pub fn parse_region(s: &str, name: &str) -> Result<RegionCounts, String> {
    let fields: Vec<&str> = s.split(',').map(str::trim).collect();
    let counts: Option<Vec<u64>> = fields.iter().map(|f| f.parse().ok()).collect();
    match counts.as_deref() {
        Some([d, c]) => Ok(RegionCounts::new(name, *d, *c, None)),
        Some([d, c, t]) => Ok(RegionCounts::new(name, *d, *c, Some(*t))),
        _ => {
            let text = std::fs::read_to_string(s).map_err(|e| format!("{s}: {e}"))?;
            RegionCounts::from_json(&text).map_err(|e| format!("{s}: {e}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals() {
        assert_eq!(parse_prob("7928/174975").unwrap().0, 7928.0 / 174_975.0);
        assert_eq!(parse_prob("0.045309").unwrap().0, 0.045309);
        assert!(parse_prob("3/2").is_err());
        assert!(parse_prob("1/0").is_err());
        assert!(parse_number("-1").is_err());
        assert_eq!(parse_number("16").unwrap().0, 16.0);
    }

    #[test]
    fn bins_and_lists() {
        let b = parse_bin("127, 4.74, 4.42, 5.05").unwrap();
        assert_eq!((b.n, b.mean), (127, 4.74));
        assert!(parse_bin("1,2,3").is_err());
        assert_eq!(parse_list("0.01,0.02").unwrap().0, vec![0.01, 0.02]);
        assert!(parse_list("0.01,x").is_err());
    }

    #[test]
    fn inline_regions() {
        let r = parse_region("8,388,1956", "local").unwrap();
        assert_eq!(r.true_infections, Some(1956));
        assert_eq!(parse_region("7928,174975", "national").unwrap().true_infections, None);
        assert!(parse_region("/no/such/file.json", "x").is_err());
    }
}
