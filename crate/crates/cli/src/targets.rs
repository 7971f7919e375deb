use crate::error::{CliError, CliResult};

/// Parses `6-10`, `6,8,10` or mixtures such as `6-8,10`. Ranges are inclusive.
pub fn parse_targets(text: &str) -> CliResult<Vec<usize>> {
    let bad = |part: &str| CliError::Usage(format!("invalid target list element {part:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(bad(part));
        }
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad(part))?;
                let b: usize = b.trim().parse().map_err(|_| bad(part))?;
                if a > b {
                    return Err(bad(part));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad(part))?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_targets("6-10").unwrap(), vec![6, 7, 8, 9, 10]);
        assert_eq!(parse_targets("6, 8,10").unwrap(), vec![6, 8, 10]);
        assert_eq!(parse_targets("4-5,7").unwrap(), vec![4, 5, 7]);
        assert_eq!(parse_targets("3").unwrap(), vec![3]);
        for bad in ["", "a", "5-3", "1,,2", "-2"] {
            assert!(parse_targets(bad).is_err(), "{bad}");
        }
    }
}
